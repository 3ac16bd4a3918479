import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exotic_curv import quat
from exotic_curv.quat import (I, J, K, ONE, axis_align, conj_by, gamma_pair,
                              hvec, qconj, qh_inner, qmul, qnorm, qnormalize)

unit_quats = st.builds(
    lambda a, b, c, d: qnormalize(np.array([a, b, c, d])),
    *[st.floats(-1, 1).filter(lambda x: abs(x) > 1e-3)] * 4)


def test_hamilton_relations():
    assert np.allclose(qmul(I, J), K)
    assert np.allclose(qmul(J, K), I)
    assert np.allclose(qmul(K, I), J)
    assert np.allclose(qmul(I, I), -ONE)


def test_identity():
    q = qnormalize(np.array([0.3, -0.4, 0.1, 0.7]))
    assert np.allclose(qmul(q, ONE), q)
    assert np.allclose(qmul(ONE, q), q)


@settings(max_examples=100, deadline=None)
@given(unit_quats, unit_quats)
def test_norm_multiplicative(p, q):
    assert abs(qnorm(qmul(p, q)) - qnorm(p) * qnorm(q)) < 1e-13


def test_spherical_combination_unit():
    al = qnormalize(np.array([0.0, 1.0, 2.0, -0.5]))
    g1, _ = gamma_pair(al)
    for lam in np.linspace(0, 2 * np.pi, 11):
        v = np.cos(lam) * al + np.sin(lam) * g1
        assert abs(qnorm(v) - 1.0) < 1e-14


@settings(max_examples=100, deadline=None)
@given(unit_quats)
def test_conj_by_preserves_real_part(q):
    beta = np.array([0.3, 0.7, -0.2, 0.4])
    out = conj_by(q, beta)
    assert abs(out[0] - beta[0]) < 1e-12
    assert abs(qnorm(out) - qnorm(beta)) < 1e-12


def test_conj_by_isometry_of_imaginaries():
    g = np.random.default_rng(3)
    for _ in range(50):
        q = qnormalize(g.standard_normal(4))
        b1 = np.concatenate([[0], g.standard_normal(3)])
        b2 = np.concatenate([[0], g.standard_normal(3)])
        d0 = qnorm(b1 - b2)
        d1 = qnorm(conj_by(q, b1) - conj_by(q, b2))
        assert abs(d0 - d1) < 1e-13 * max(1.0, d0)


def test_conj_by_trivial():
    al = qnormalize(np.array([0.0, 0.2, 0.5, -0.1]))
    assert np.allclose(conj_by(ONE, al), al)


def test_axis_alignment_half_sqrt3():
    al = qnormalize(np.array([0.0, 0.1, -0.9, 0.41]))
    g1, _ = gamma_pair(al)
    beta = 0.5 * al + np.sqrt(3) / 2 * g1
    p = axis_align(beta, al)
    assert qnorm(conj_by(p, beta) - al) < 1e-12


def test_axis_alignment_antipodal():
    b = qnormalize(np.array([0.0, 1.0, 0.0, 0.0]))
    p = axis_align(b, -b)
    assert qnorm(conj_by(p, b) + b) < 1e-12


def test_qh_inner_basics():
    u = hvec(ONE, np.zeros(4))
    assert np.allclose(qh_inner(u, u), ONE)
    g = np.random.default_rng(5)
    for _ in range(20):
        a = g.standard_normal(8)
        b = g.standard_normal(8)
        assert abs(qh_inner(a, b)[0] - np.dot(a, b)) < 1e-13 * (
            1 + abs(np.dot(a, b)))


def test_qh_inner_self_real():
    g = np.random.default_rng(6)
    for _ in range(20):
        a = g.standard_normal(8)
        val = qh_inner(a, a)
        assert np.max(np.abs(val[1:])) < 1e-13 * np.dot(a, a)
        assert abs(val[0] - np.dot(a, a)) < 1e-13 * np.dot(a, a)


def test_gamma_pair_relations():
    g = np.random.default_rng(7)
    for _ in range(20):
        al = qnormalize(np.concatenate([[0], g.standard_normal(3)]))
        g1, g2 = gamma_pair(al)
        assert abs(g1[0]) < 1e-15 and abs(g2[0]) < 1e-15
        assert qnorm(qmul(g1, g2) - al) < 1e-13
        assert abs(np.dot(g1, al)) < 1e-13
        assert abs(np.dot(g1, g2)) < 1e-13
