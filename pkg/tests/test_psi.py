import numpy as np
import pytest

from exotic_curv import metric_pipeline as mp
from exotic_curv import psi_analytic as pa
from exotic_curv import sp2, zero_locus as zl
from exotic_curv.quat import I as QI
from exotic_curv.quat import ONE, qnormalize

AL = qnormalize(np.array([0.0, 0.3, -0.5, 0.81]))


def test_params_validation():
    with pytest.raises(ValueError):
        pa.PsiParams(-0.1, 1.0)
    p = pa.PsiParams(0.5, 1.0)
    assert abs(1.0 / p.nu_l_sq - (1 / 0.25 + 0.5)) < 1e-15
    assert p.nu_l < p.nu


def test_eta_norm_special_values():
    p = pa.PsiParams(0.5, 1.0)
    th = 0.37
    assert abs(pa.eta_norm_sq(0.0, th, p)
               - (1 + np.sin(2 * th) ** 2 / 2)) < 1e-14
    assert abs(pa.eta_norm_sq(np.pi / 4, th, p) - 1.0 / p.nu_l_sq) < 1e-13
    p1 = pa.PsiParams(1.0, 1e12)
    for t in (0.1, 0.5):
        assert abs(pa.eta_norm_sq(t, th, p1) - 1.0) < 1e-10


def test_eta_norm_groupings_agree():
    # cos^2 + sin^2/nu^2 + (1 - cos^2 cos^2)/2l^2 versus
    # |x|^2 cos^2 + sin^2/nu_l^2
    p = pa.PsiParams(0.31, 0.77)
    for t in np.linspace(0, np.pi / 4, 9):
        for th in np.linspace(0, np.pi, 9):
            a = pa.eta_norm_sq(t, th, p)
            b = (pa.x20_norm_sq(th, p) * np.cos(2 * t) ** 2
                 + np.sin(2 * t) ** 2 / p.nu_l_sq)
            assert abs(a - b) < 1e-14


def test_psi_special_values():
    p = pa.PsiParams(0.5, 1.0)
    for th in (0.0, 0.4, 1.1):
        assert abs(pa.psi(np.pi / 4, th, p).psi - p.nu_l / 2) < 1e-14
        assert abs(pa.psi(0.0, th, p).psi) < 1e-15
        assert abs(pa.psi(0.0, th, p).psi_t
                   - 1.0 / np.sqrt(pa.x20_norm_sq(th, p))) < 1e-14
    # round-form limit
    p1 = pa.PsiParams(1.0, 1e12)
    for t in (0.1, 0.4, 0.7):
        assert abs(pa.psi(t, 0.3, p1).psi - 0.5 * np.sin(2 * t)) < 1e-10
        assert abs(pa.psi(t, 0.3, p1).psi_t - np.cos(2 * t)) < 1e-9


def test_psi_positive_monotone():
    p = pa.PsiParams(0.2, 0.6)
    for t in np.linspace(0.01, np.pi / 4 - 0.01, 20):
        pv = pa.psi(t, 0.2, p)
        assert 0 < pv.psi <= p.nu_l / 2 + 1e-15
        assert pv.psi_t > 0


def test_partials_match_differences():
    # small grid here; the full 40x40x3 sweep runs in the check suite.
    # errors are measured against each partial's grid supremum (the
    # mixed partials cross zero inside the grid)
    from exotic_curv.verify import _fd_partials
    for (nu, l) in ((0.5, 1.0), (0.2, 0.585)):
        p = pa.PsiParams(nu, l)

        def fun(t, th):
            return pa.psi(t, th, p).psi

        sups = np.zeros(5)
        errs = np.zeros(5)
        for t in np.linspace(0.05, np.pi / 4 - 0.05, 5):
            for th in np.linspace(0.05, np.pi / 2 - 0.05, 5):
                pv = pa.psi(t, th, p)
                fd = _fd_partials(fun, t, th)
                cf = np.array([pv.psi_t, pv.psi_theta, pv.psi_tt,
                               pv.psi_ttheta, pv.psi_thetatheta])
                sups = np.maximum(sups, np.abs(cf))
                errs = np.maximum(errs, np.abs(cf - np.array(fd)))
        assert np.max(errs / sups) <= 1e-6


def test_psi_sq_from_s4_matches():
    p = pa.PsiParams(0.4, 0.9)
    for t in (0.05, 0.3, 0.7):
        for th in (0.0, 0.5, 1.4):
            y = sp2.s4_from_coords(t, th, AL)
            assert abs(pa.psi_sq_from_s4(y, p)
                       - pa.psi(t, th, p).psi ** 2) < 1e-14


def test_locus_gauge():
    assert pa.L(0.0, 0.0) == 0.0
    assert pa.L(0.0, np.pi / 2) == 0.0
    for th in (0.2, 0.7, 1.2):
        assert abs(pa.L(0.0, th) - 2.0) < 1e-13
    # on cos 2theta = 0, L = 2 cos 2t: L <= 1 iff t >= pi/6
    th = np.pi / 4
    assert abs(pa.L(0.1, th) - 2 * np.cos(0.2)) < 1e-13
    assert pa.L(np.pi / 6 + 1e-3, th) < 1.0 < pa.L(np.pi / 6 - 1e-3, th)
    assert abs(pa.l_boundary_t(np.pi / 4) - np.pi / 6) < 1e-12
    # sin 2theta = 0, t > 0
    assert abs(pa.L(0.3, 0.0)) < 1e-15
    assert abs(pa.L(0.3, np.pi / 2)) < 1e-13


def test_locus_gauge_symmetry():
    for t in np.linspace(0.02, np.pi / 4 - 0.02, 7):
        for th in np.linspace(0.02, np.pi / 2 - 0.02, 7):
            a = pa.L(t, th)
            b = pa.L(t, np.pi - th)
            assert abs(abs(a) - abs(b)) < 1e-12


def test_coordinate_rates(point):
    fr = sp2.frame_at(point)
    # x20 is the unit meridian direction: dt = 1, dtheta = 0
    dt, dth = pa.coordinate_rates(point, fr.x20)
    q0 = sp2.representative_point(0.3, 0.0, AL, ONE)
    fr0 = sp2.frame_at(q0)
    dt0, dth0 = pa.coordinate_rates(q0, fr0.x20)
    assert abs(dt0 - 1.0) < 1e-12 and abs(dth0) < 1e-12
    # y20 moves theta at rate -1/cos 2t and fixes t
    dty, dthy = pa.coordinate_rates(q0, fr0.y20)
    assert abs(dty) < 1e-12
    assert abs(dthy + 1.0 / np.cos(0.6)) < 1e-12


def test_directional_psi_meridian():
    p = pa.PsiParams(0.5, 1.0)
    q = sp2.representative_point(0.3, 0.0, AL, ONE)
    z = sp2.zeta_at(q)
    d1, d2 = pa.directional_psi(q, z, p)
    pv = pa.psi(0.3, 0.0, p)
    assert abs(d1 - pv.psi_t) < 1e-12
    assert abs(d2 - pv.psi_tt) < 1e-6 * abs(pv.psi_tt)
    assert d1 > 0


def test_directional_psi_flow_oracle():
    # independent oracle: Runge-Kutta flow of the field plus central
    # differences of psi along it
    p = pa.PsiParams(0.5, 1.0)
    q = sp2.representative_point(0.28, 0.31, AL, qnormalize(
        np.array([0.2, 0.1, -0.7, 0.4])))
    z = sp2.zeta_at(q)
    d1, d2 = pa.directional_psi(q, z, p)

    def psi_of(pt):
        t, th, _, _ = sp2.coords_from_point(pt)
        return pa.psi(t, th, p).psi

    def fds(h):
        plus = zl.flow_step(q, h)
        minus = zl.flow_step(q, -h)
        return ((psi_of(plus) - psi_of(minus)) / (2 * h),
                (psi_of(plus) - 2 * psi_of(q) + psi_of(minus)) / h ** 2)

    a1, a2 = fds(1e-3)
    b1, b2 = fds(5e-4)
    fd1 = (4 * b1 - a1) / 3
    fd2 = (4 * b2 - a2) / 3
    assert abs(d1 - fd1) <= 1e-6 * max(abs(d1), 1e-6)
    assert abs(d2 - fd2) <= 1e-4 * max(abs(d2), 1e-4)


def test_w_h_properties(cfg_nul):
    params = pa.PsiParams(cfg_nul.nu, cfg_nul.l)
    vals = []
    for t in (0.1, 0.3, 0.6):
        zp = zl.zero_plane_at((t, 0.0, QI), cfg_nul)
        wh = pa.w_h_at(zp, cfg_nul)
        assert wh > 0
        vals.append(wh)
        # |H_w| = w_h psi
        hw = mp.gm_horizontal_part(cfg_nul, zp.point, zp.w_vec)
        nhw = np.sqrt(mp.metric_eval(cfg_nul, zp.point, hw, hw))
        psi = pa.psi(t, 0.0, params).psi
        assert abs(nhw - wh * psi) < 1e-10 * max(1.0, nhw)
    # constant along the meridian flow
    assert max(vals) - min(vals) < 1e-9 * max(vals)


def test_w_h_degenerate():
    cfg = mp.StageConfig(stage="nul", nu=0.5, l=1.0, s=0.0,
                         redistribute=False)
    zp = zl.zero_plane_at((0.3, 0.0, QI), cfg)
    # strip the gamma component: coefficient undefined
    fr = zp.frame
    bad = zl.ZeroPlaneSpec(zp.point, zp.zeta, sp2.delta_alpha_vector(fr),
                           zp.w_raw, 0.0, 0.0, 0.0, zp.beta, zp.delta,
                           frame=fr)
    with pytest.raises(ValueError):
        pa.w_h_at(bad, cfg)
