import numpy as np
import pytest

from exotic_curv import metric_pipeline as mp
from exotic_curv import psi_analytic as pa
from exotic_curv import sp2
from exotic_curv.quat import I as QI
from exotic_curv.quat import ONE, qnormalize

AL = qnormalize(np.array([0.0, 0.3, -0.5, 0.81]))
PQ = qnormalize(np.array([0.2, 0.1, -0.7, 0.4]))


def tangent_samples(point, n=6, seed=0):
    g = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        v = sp2.tangent_project(point, g.standard_normal(16))
        out.append(v / np.sqrt(sp2.b_inner(v, v)))
    return out


def test_config_validation():
    with pytest.raises(ValueError):
        mp.StageConfig(stage="nope")
    with pytest.raises(ValueError):
        mp.StageConfig(nu=0.9)          # above the realizable range
    with pytest.raises(ValueError):
        mp.StageConfig(s=1.0)
    cfg = mp.StageConfig(nu=1.0, l=np.inf, s=0.0, redistribute=False)
    assert not cfg.nu_on and not cfg.l_on


def test_neutral_parameters_collapse_to_biinvariant(point):
    cfg = mp.StageConfig(stage="final", nu=1.0, l=np.inf, s=0.0,
                         redistribute=False, conf_c=0.0, kappa_iota=0.0,
                         l_diag=np.inf, l_h1=np.inf)
    V = np.array(tangent_samples(point, 6))
    G = mp.metric_gram(cfg, point, V)
    B = sp2.b_gram(V)
    assert np.max(np.abs(G - B)) < 1e-12


def test_stage1_scales_vertical(point, cfg_nu):
    fr = sp2.frame_at(point)
    nu = cfg_nu.nu
    for k in range(4, 10):
        v = fr.vectors[k]
        assert abs(mp.metric_eval(cfg_nu, point, v, v)
                   - 2 * nu ** 2) < 1e-13
    for k in range(4):
        v = fr.vectors[k]
        assert abs(mp.metric_eval(cfg_nu, point, v, v) - 1.0) < 1e-13


def test_stage1_matches_generic_quotient(point, cfg_nu):
    # the generic quotient evaluator at the calibrated scale reproduces
    # the vertical scaling
    lam = np.sqrt(cfg_nu.nu ** 2 / (1 - 2 * cfg_nu.nu ** 2))

    def base(pt, rows, rows2=None):
        return sp2.b_gram(rows, rows2)

    for X in tangent_samples(point, 4, seed=1):
        for Y in tangent_samples(point, 2, seed=2):
            val = mp.cheeger_eval(base, [("h1", lam), ("h2", lam)],
                                  point, X, Y)
            assert abs(val - mp.metric_eval(cfg_nu, point, X, Y)) < 1e-10


def test_cheeger_large_scale_is_identity(point):
    def base(pt, rows, rows2=None):
        return sp2.b_gram(rows, rows2)

    for X in tangent_samples(point, 3, seed=3):
        val = mp.cheeger_eval(base, [("u", 1e9), ("d", 1e9)], point, X, X)
        assert abs(val - sp2.b_inner(X, X)) < 1e-12


def test_row_action_norms(point, cfg_nul):
    # the convention norm of (cos 2t) eta^{2,0} from the generic
    # evaluator equals the closed form
    params = cfg_nul.psi_params
    t, th = 0.3, 0.2
    fr = sp2.frame_at(point)
    eta20 = fr.eta1 + np.tan(2 * t) / cfg_nul.nu ** 2 * (
        fr.vectors[8] / sp2.SQRT2)
    v = mp.conv_norm_sq(cfg_nul, point, np.cos(2 * t) * eta20)
    assert abs(v - pa.eta_norm_sq(t, th, params)) < 1e-10
    v2 = mp.conv_norm_sq(cfg_nul, point, fr.x20)
    assert abs(v2 - pa.x20_norm_sq(th, params)) < 1e-10


def test_conv_norm_equals_reparam_norm(point, cfg_nul):
    for X in tangent_samples(point, 4, seed=4):
        xt = mp.ud_reparam(cfg_nul, point, X)
        a = mp.metric_eval(cfg_nul, point, xt, xt)
        b = mp.conv_norm_sq(cfg_nul, point, X)
        assert abs(a - b) < 1e-12


def test_monotone_quotient(point, cfg_nu, cfg_nul):
    for X in tangent_samples(point, 6, seed=5):
        assert mp.metric_eval(cfg_nul, point, X, X) <= \
            mp.metric_eval(cfg_nu, point, X, X) + 1e-12


def test_positive_definite_all_stages(point):
    base = mp.regime_config(stage="final")
    for stage in ("bi", "nu", "re", "nul", "s", "new", "final"):
        cfg = base.at_stage(stage)
        fr = sp2.frame_at(point)
        G = mp.metric_gram(cfg, point, fr.vectors)
        w = np.linalg.eigvalsh(G)
        assert w.min() > 0, stage


def test_fiber_scaling(point, cfg_nul, cfg_s):
    fr = sp2.frame_at(point)
    v10 = fr.vectors[4]            # (v, 0): in the kernel of the base map
    a = mp.metric_eval(cfg_s, point, v10, v10)
    b = mp.metric_eval(cfg_nul, point, v10, v10)
    assert abs(a - (1 - cfg_s.s ** 2) * b) < 1e-12
    # horizontal vectors unchanged
    h = mp.gm_horizontal_part(cfg_nul, point, fr.x20)
    assert abs(mp.metric_eval(cfg_s, point, h, h)
               - mp.metric_eval(cfg_nul, point, h, h)) < 1e-12
    # s = 0 is the identity
    cfg0 = mp.StageConfig(stage="s", nu=0.5, l=1.0, s=0.0,
                          redistribute=False)
    for X in tangent_samples(point, 3, seed=6):
        assert abs(mp.metric_eval(cfg0, point, X, X)
                   - mp.metric_eval(cfg_nul, point, X, X)) < 1e-14


def test_fiber_scale_generic_matches_stage(point, cfg_nul, cfg_s):
    def base(pt, rows, rows2=None):
        return mp.metric_gram(cfg_nul, pt, rows, rows2)

    for X in tangent_samples(point, 3, seed=7):
        for Y in tangent_samples(point, 2, seed=8):
            a = mp.fiber_scale_eval(base, cfg_s.s, point, X, Y)
            b = mp.metric_eval(cfg_s, point, X, Y)
            assert abs(a - b) < 1e-11


def test_redistribution_profile_boxes():
    for nu in (0.5, 0.2, 0.05 ** (6.0 / 7.0)):
        prof = mp.make_profile(nu)
        report = mp.profile_validate(prof)
        assert report["ok"], report


def test_redistribution_leaves_complement(point):
    cfg = mp.StageConfig(stage="re", nu=0.2, s=0.0, l=1.0,
                         redistribute=True)
    cfg_nu = cfg.at_stage("nu")
    prof = cfg.profile
    t_in = 0.5 * prof.down_end
    q = sp2.representative_point(t_in, 0.2, AL, PQ)
    zp = mp.zperp_basis(cfg, q)
    Z = mp.z_closed_form(q)
    fr = sp2.frame_at(q)
    # on vectors orthogonal to Z-perp the two metrics agree
    for v in list(Z) + list(fr.vectors[:4]):
        for w in list(Z) + list(fr.vectors[:4]):
            a = mp.metric_eval(cfg, q, v, w)
            b = mp.metric_eval(cfg_nu, q, v, w)
            assert abs(a - b) < 1e-12
    # and on Z-perp they differ by phi^2
    phi = prof.value(t_in)
    for v in zp:
        a = mp.metric_eval(cfg, q, v, v)
        b = mp.metric_eval(cfg_nu, q, v, v)
        assert abs(a - phi ** 2 * b) < 1e-12


def test_bump_profile():
    bump = mp.ConformalBump(2.0, 0.3)
    assert abs(bump.first(0.0)) < 1e-15
    assert abs(bump.first(0.3)) < 1e-12
    assert abs(bump.value(0.3)) < 1e-12
    rs = np.linspace(0, 0.3, 200)
    integral = np.trapezoid(bump.second(rs), rs)
    assert abs(integral) < 1e-3
    assert np.max(np.abs(bump.second(rs))) <= 2.0 + 1e-12
    assert bump.first(0.35) == 0.0 and bump.second(0.35) == 0.0
    # derivative consistency
    h = 1e-6
    for r in (0.05, 0.17, 0.28):
        fd = (bump.value(r + h) - bump.value(r - h)) / (2 * h)
        assert abs(fd - bump.first(r)) < 1e-8


def test_conformal_f_values():
    cfg = mp.regime_config(stage="new", kappa_iota=0.0)
    rho = mp.form_for(cfg).conf_rho()
    q = sp2.representative_point(np.pi / 4 - 1e-9, 0.3, AL, PQ)
    fval, grad = mp.conformal_f(cfg, q)
    params = cfg.psi_params
    expect = cfg.conf_c - rho * cfg.s ** 2 / cfg.nu ** 2 * params.nu_l_sq / 4
    assert abs(fval - expect) < 1e-10
    # f is constant along fiber directions
    fr = sp2.frame_at(q)
    for k in (4, 5, 6, 7, 8, 9):
        h = 1e-5
        qp = sp2.project_to_sp2(q.amb + h * fr.vectors[k])
        fp, _ = mp.conformal_f(cfg, qp)
        assert abs(fp - fval) < 1e-8


def test_conformal_domain_floor():
    cfg = mp.regime_config(stage="new")
    q = sp2.representative_point(5e-4, 0.3, AL, PQ)
    with pytest.raises(mp.DomainError):
        mp.metric_eval(cfg, q, np.zeros(16), np.zeros(16))


def test_invariance_smoke():
    cfg = mp.regime_config(stage="new")
    worst = mp.stage_invariance_check(cfg, n_samples=6, seed=5)
    assert worst < 1e-9


def test_stage1_invariance_under_all_four(point, cfg_nu):
    g = np.random.default_rng(12)
    X, Y = tangent_samples(point, 2, seed=13)
    base = mp.metric_eval(cfg_nu, point, X, Y)
    for name in ("u", "d", "h1", "h2"):
        w = qnormalize(g.standard_normal(4))
        val = mp.metric_eval(cfg_nu, sp2.act(name, w, point),
                             sp2.act_vec(name, w, X),
                             sp2.act_vec(name, w, Y))
        assert abs(val - base) < 1e-10
