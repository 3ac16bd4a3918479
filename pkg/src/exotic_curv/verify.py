"""Identity-check suites: every closed-form lemma of the deformation
pipeline is tested against the numeric curvature engine.

Each check returns a CheckReport; run_suites collects them and emits a
coverage matrix mapping checks to the identities they exercise.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, simpson

from . import curvature as cv
from . import metric_pipeline as mp
from . import psi_analytic as pa
from . import rng, sp2
from . import zero_locus as zl
from .quat import I as QI


@dataclass
class CheckReport:
    check_id: str
    params: dict
    grid: str
    max_abs_residual: float
    max_rel_residual: float
    worst_location: str
    passed: bool
    wall_time: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        d = dict(self.__dict__)
        d["details"] = _jsonable(self.details)
        d["params"] = _jsonable(self.params)
        return d


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    return repr(x)


def _report(check_id, cfg, grid, rows, passed, t0, details=None):
    rows = rows or [(0.0, 0.0, "-")]
    worst = max(rows, key=lambda r: r[1])
    return CheckReport(
        check_id=check_id,
        params={"nu": cfg.nu, "l": cfg.l, "s": cfg.s, "stage": cfg.stage},
        grid=grid,
        max_abs_residual=float(max(r[0] for r in rows)),
        max_rel_residual=float(max(r[1] for r in rows)),
        worst_location=str(worst[2]),
        passed=bool(passed),
        wall_time=time.time() - t0,
        details=details or {},
    )


# ---------------------------------------------------------------------------
# biinvariant oracle
# ---------------------------------------------------------------------------

def check_biinvariant_oracle(cfg=None, n_points=6, n_planes=10, seed=11):
    """Numeric sectional curvature against (1/4)|[X,Y]|^2 at the
    biinvariant stage."""
    t0 = time.time()
    cfg = mp.StageConfig(stage="bi", nu=0.5, l=1.0, s=0.0,
                         redistribute=False) if cfg is None else cfg
    rows = []
    for i in range(n_points):
        t = 0.06 + 0.7 * (np.pi / 4 - 0.1) * rng.uniform(seed, i, 0)[0]
        th = 0.15 + (np.pi - 0.3) * rng.uniform(seed, i, 1)[0]
        q = sp2.representative_point(t, th, rng.unit_imaginary_quat(seed, i, 2),
                                     rng.unit_quat(seed, i, 5))
        rd = cv.riemann_point(cfg, q)
        for j in range(n_planes):
            X = sp2.tangent_project(q, rng.normal(seed, 100 * i + j, 0, 16))
            Y = sp2.tangent_project(q, rng.normal(seed, 100 * i + j, 20, 16))
            X /= np.linalg.norm(X)
            Y /= np.linalg.norm(Y)
            fd = rd.curv(X, Y)
            oracle = sp2.biinvariant_curv(q, X, Y)
            rel = abs(fd - oracle) / max(abs(oracle), 1e-12)
            rows.append((abs(fd - oracle), rel, f"pt{i} plane{j}"))
    passed = max(r[1] for r in rows) <= 1e-5
    return _report("biinvariant_oracle", cfg, f"{n_points}x{n_planes}", rows,
                   passed, t0)


# ---------------------------------------------------------------------------
# psi suite
# ---------------------------------------------------------------------------

def _fd_partials(fun, t, th, h=1e-4, h2=2e-3):
    """Richardson-extrapolated central differences of a scalar field.

    Second derivatives use a larger base step: with h = 1e-4 they would
    be roundoff-limited near 1e-8 absolute, above the 1e-6 relative
    target on small partials.
    """
    def d(par, step):
        if par == "t":
            return (fun(t + step, th) - fun(t - step, th)) / (2 * step)
        return (fun(t, th + step) - fun(t, th - step)) / (2 * step)

    def rich(par):
        return (4 * d(par, h / 2) - d(par, h)) / 3

    def d2(par, step):
        if par == "tt":
            return (fun(t + step, th) - 2 * fun(t, th)
                    + fun(t - step, th)) / step ** 2
        if par == "hh":
            return (fun(t, th + step) - 2 * fun(t, th)
                    + fun(t, th - step)) / step ** 2
        return (fun(t + step, th + step) - fun(t + step, th - step)
                - fun(t - step, th + step)
                + fun(t - step, th - step)) / (4 * step ** 2)

    def rich2(par):
        r1 = (4 * d2(par, h2 / 2) - d2(par, h2)) / 3
        r1b = (4 * d2(par, h2 / 4) - d2(par, h2 / 2)) / 3
        return (16 * r1b - r1) / 15

    return rich("t"), rich("th"), rich2("tt"), rich2("th2"), rich2("hh")


def check_psi_suite(cfg=None, n_grid=40,
                    param_sets=((0.5, 1.0), (0.2, 0.585), (0.05, 0.368)),
                    o_kappa=100.0):
    """(a) closed-form partials against extrapolated differences,
    (b) the redistribution shift of psi^2, (c) the derivative-ratio
    bound <= nu_l^2 / 4.

    Partial-derivative errors are normalized by each partial's grid
    supremum: the mixed partials cross zero on the grid, where a
    pointwise relative measure would only report the double-precision
    noise floor of the difference oracle.
    """
    t0 = time.time()
    base_cfg = mp.StageConfig(stage="nul", nu=0.5, l=1.0, s=0.0,
                              redistribute=False) if cfg is None else cfg
    rows = []
    names5 = ("t", "th", "tt", "tth", "thth")
    for (nu, l) in param_sets:
        params = pa.PsiParams(nu, l)

        def fun(t, th):
            return pa.psi(t, th, params).psi

        sups = np.zeros(5)
        errs = np.zeros(5)
        locs = [""] * 5
        for t in np.linspace(0.02, np.pi / 4 - 0.02, n_grid):
            for th in np.linspace(0.02, np.pi / 2 - 0.02, n_grid):
                pv = pa.psi(t, th, params)
                fd = _fd_partials(fun, t, th)
                cf = np.array([pv.psi_t, pv.psi_theta, pv.psi_tt,
                               pv.psi_ttheta, pv.psi_thetatheta])
                sups = np.maximum(sups, np.abs(cf))
                d = np.abs(cf - np.array(fd))
                for k in range(5):
                    if d[k] > errs[k]:
                        errs[k] = d[k]
                        locs[k] = f"nu={nu} ({t:.3f},{th:.3f}) {names5[k]}"
        for k in range(5):
            rows.append((errs[k], errs[k] / sups[k], locs[k]))
    part_a = max(r[1] for r in rows) <= 1e-6

    # (b) psi after redistribution
    nu_b = 0.05
    cfg_b = mp.StageConfig(stage="nul", nu=nu_b, l=0.368, s=0.0,
                           redistribute=True)
    cfg_plain = mp.StageConfig(stage="nul", nu=nu_b, l=0.368, s=0.0,
                               redistribute=False)
    params_b = pa.PsiParams(nu_b, 0.368)
    worst_b = 0.0
    for t in np.linspace(0.01, 0.2, 9):
        q = sp2.representative_point(t, 0.0, QI.copy(),
                                     np.array([1.0, 0, 0, 0]))
        p_re = mp.psi_numeric(cfg_b, q)
        p_old = pa.psi(t, 0.0, params_b).psi
        dev = abs(p_re ** 2 - p_old ** 2)
        bound = o_kappa * nu_b ** 3 * p_old ** 2
        worst_b = max(worst_b, dev / max(bound, 1e-300))
        rows.append((dev, dev / max(p_old ** 2, 1e-30), f"re t={t:.3f}"))
    part_b = worst_b <= 1.0

    # (c) derivative-ratio bound on the meridian
    part_c = True
    argmax_c = {}
    for (nu, l) in (param_sets[0], param_sets[2]):
        params = pa.PsiParams(nu, l)
        ts = np.linspace(1e-3, np.pi / 4, 2001)
        vals = []
        for t in ts:
            pv = pa.psi(t, 0.0, params)
            vals.append(abs(pv.psi / pv.psi_tt
                            * (pv.psi_t ** 2 + pv.psi * pv.psi_tt)))
        vals = np.array(vals)
        ok = vals.max() <= params.nu_l_sq / 4 * (1 + 1e-9)
        part_c = part_c and ok
        argmax_c[f"nu={nu}"] = (float(ts[vals.argmax()]), float(vals.max()),
                                params.nu_l_sq / 4)
    return _report("psi_suite", base_cfg, f"{n_grid}x{n_grid}", rows,
                   part_a and part_b and part_c, t0,
                   details={"partials_ok": part_a,
                            "redistribution_shift_ok": part_b,
                            "ratio_bound_ok": part_c,
                            "ratio_argmax": argmax_c})


def check_cheeger_norms(cfg=None, n_grid=8):
    """Generic quotient evaluator against the displayed convention norms
    of x20 and (cos 2t) eta^{2,0}."""
    t0 = time.time()
    cfg = mp.StageConfig(stage="nul", nu=0.5, l=1.0, s=0.0,
                         redistribute=False) if cfg is None else cfg
    params = cfg.psi_params
    rows = []
    for t in np.linspace(0.05, np.pi / 4 - 0.05, n_grid):
        for th in np.linspace(0.05, np.pi / 2 - 0.05, n_grid):
            q = sp2.representative_point(t, th, QI.copy(),
                                         np.array([1.0, 0, 0, 0]))
            fr = sp2.frame_at(q)
            v1 = mp.conv_norm_sq(cfg, q, fr.x20)
            f1 = pa.x20_norm_sq(th, params)
            eta20 = fr.eta1 + np.tan(2 * t) / cfg.nu ** 2 * (
                fr.vectors[8] / sp2.SQRT2)
            v2 = mp.conv_norm_sq(cfg, q, np.cos(2 * t) * eta20)
            f2 = pa.eta_norm_sq(t, th, params)
            rows.append((abs(v1 - f1), abs(v1 - f1) / f1, f"x20 ({t:.2f},{th:.2f})"))
            rows.append((abs(v2 - f2), abs(v2 - f2) / f2, f"eta ({t:.2f},{th:.2f})"))
    passed = max(r[0] for r in rows) <= 1e-10
    return _report("cheeger_norms", cfg, f"{n_grid}x{n_grid}", rows, passed, t0)


# ---------------------------------------------------------------------------
# canonical variation (fiber-scaling curvature formulas)
# ---------------------------------------------------------------------------

def check_canonical_variation(cfg=None, t_samples=(0.25, 0.45), seed=23):
    """Fiber-scaling curvature formulas: the scaled (1,3) tensors match
    the decomposition into unscaled curvature, base curvature, and
    integrability terms."""
    t0 = time.time()
    cfg = mp.formula_check_config(stage="s") if cfg is None else cfg
    s = cfg.s
    cfg3 = cfg.at_stage("nul")
    rows = []
    details = {}
    for tt in t_samples:
        zp = zl.zero_plane_at((tt, 0.0, QI), cfg3)
        q, zeta, W = zp.point, zp.zeta, zp.w_vec
        rd4 = cv.riemann_point(cfg, q)
        rd3 = cv.riemann_point(cfg3, q)
        # R^{g_s}(W,X)X  vs
        # (1-s^2) R(W,X)X + s^2 (R(W,X)X)^V + s^2 R^B(W^H,X)X + s^2 A_X A_X W^V
        lhs = rd4.op(W, zeta, zeta)
        r0 = rd3.op(W, zeta, zeta)
        r0v = mp.gm_vertical_part(cfg3, q, r0)
        Wv = mp.gm_vertical_part(cfg3, q, W)
        Wh = W - Wv
        y = sp2.gm_projection(q)
        rdb = cv.s4_riemann(cfg3, y)
        xb = sp2.gm_differential(q, zeta)
        whb = sp2.gm_differential(q, Wh)
        rb_vec_base = rdb.op(whb, xb, xb)
        rb_vec = _lift_to_horizontal(cfg3, q, rb_vec_base)
        axwv = cv.oneill_A_mixed(cfg3, q, zeta, Wv)
        axaxwv = gm_A_of_horizontal(cfg3, q, zeta, axwv)
        rhs = (1 - s ** 2) * r0 + s ** 2 * r0v + s ** 2 * rb_vec \
            + s ** 2 * axaxwv
        scale = np.sqrt(mp.metric_eval(cfg, q, lhs, lhs)) + 1e-12
        diff = lhs - rhs
        err = np.sqrt(mp.metric_eval(cfg, q, diff, diff)) / scale
        rows.append((err * scale, err, f"WXX t={tt}"))
        # the unscaled curvature term vanishes on the flat-torus data
        details[f"first_term_norm_t={tt}"] = float(
            np.sqrt(abs(mp.metric_eval(cfg3, q, r0, r0))))
    # random horizontal X, vertical U, V: horizontal part of R^{g_s}(X,V)U
    q = zl.zero_plane_at((0.3, 0.0, QI), cfg3).point
    rd4 = cv.riemann_point(cfg, q)
    rd3 = cv.riemann_point(cfg3, q)
    vb = mp.gm_vertical_basis(cfg3, q)
    hx = mp.gm_horizontal_part(cfg3, q, sp2.frame_at(q).x20)
    for j in range(2):
        cu = rng.normal(91 + seed, j, 0, 6)
        cvv = rng.normal(91 + seed, j, 8, 6)
        U = cu @ vb
        V = cvv @ vb
        lhs = rd4.op(hx, V, U)
        lhs_h = mp.gm_horizontal_part(cfg3, q, lhs)
        r0h = mp.gm_horizontal_part(cfg3, q, rd3.op(hx, V, U))
        axu = cv.oneill_A_mixed(cfg3, q, hx, U)
        a2 = cv.oneill_A_mixed(cfg3, q, axu, V)
        rhs_h = (1 - s ** 2) * r0h + (1 - s ** 2) * s ** 2 * a2
        scale = np.sqrt(mp.metric_eval(cfg, q, lhs_h, lhs_h)) + 1e-9
        diff = lhs_h - rhs_h
        err = np.sqrt(abs(mp.metric_eval(cfg, q, diff, diff))) / scale
        rows.append((err * scale, err, f"XVU sample {j}"))
    passed = max(r[1] for r in rows) <= 1e-3
    return _report("canonical_variation", cfg, f"{len(t_samples)} pts", rows,
                   passed, t0, details)


def _lift_to_horizontal(cfg, point, base_vec):
    hb = np.array([mp.gm_horizontal_part(cfg, point, v)
                   for v in sp2.frame_at(point).vectors[:4]])
    M = sp2.gm_jacobian(point, hb)
    c = np.linalg.solve(M @ M.T, M @ base_vec)
    return c @ hb


def gm_A_of_horizontal(cfg, point, X, H):
    """A_X H (vertical part of nabla_X of a horizontal extension)."""
    def field(pt):
        return mp.gm_horizontal_part(cfg, pt, sp2.tangent_project(pt, H))

    nab = cv.covariant_derivative(cfg, point, X, field)
    return mp.gm_vertical_part(cfg, point, nab)


def check_base_curvature_lemmas(cfg=None, t_samples=(0.2, 0.35, 0.55)):
    """Base curvature through the Killing-length function: the base
    tensor and the mixed integrability tensor against the derivative
    formulas of |H_w| = w_h psi."""
    t0 = time.time()
    cfg = mp.formula_check_config(stage="nul") if cfg is None else cfg
    params = cfg.psi_params
    rows = []
    for tt in t_samples:
        zp = zl.zero_plane_at((tt, 0.0, QI), cfg)
        q = zp.point
        wh = pa.w_h_at(zp, cfg)
        pv = pa.psi(tt, 0.0, params)
        y = sp2.gm_projection(q)
        rdb = cv.s4_riemann(cfg, y)
        xb = sp2.gm_differential(q, zp.zeta)
        Hw = mp.gm_horizontal_part(cfg, q, zp.w_vec)
        hwb = sp2.gm_differential(q, Hw)
        # curv_B(X, H_w) = -|H_w| D_X D_X |H_w| = -w_h^2 psi psi_tt
        lhs = rdb.contract(xb, hwb, hwb, xb)
        rhs = -wh ** 2 * pv.psi * pv.psi_tt
        rows.append((abs(lhs - rhs), abs(lhs - rhs) / abs(rhs), f"eq2 t={tt}"))
        # R^B(H_w, X) X = -(psi_tt/psi) H_w
        vec = rdb.op(hwb, xb, xb)
        ref = -(pv.psi_tt / pv.psi) * hwb
        err = np.linalg.norm(vec - ref) / np.linalg.norm(ref)
        rows.append((np.linalg.norm(vec - ref), err, f"R_B(H,X)X t={tt}"))
        # A_X V = -(psi_t/psi) H_w with V the vertical part of W
        Wv = mp.gm_vertical_part(cfg, q, zp.w_vec)
        axv = cv.oneill_A_mixed(cfg, q, zp.zeta, Wv)
        ref2 = -(pv.psi_t / pv.psi) * Hw
        na = np.sqrt(mp.metric_eval(cfg, q, ref2, ref2))
        diff = axv - ref2
        err2 = np.sqrt(abs(mp.metric_eval(cfg, q, diff, diff))) / na
        rows.append((err2 * na, err2, f"A_XV t={tt}"))
    # derivative endpoint: A_X V ~ 0 at the psi maximum
    zp = zl.zero_plane_at((np.pi / 4 - 1e-4, 0.0, QI), cfg)
    Wv = mp.gm_vertical_part(cfg, zp.point, zp.w_vec)
    axv = cv.oneill_A_mixed(cfg, zp.point, zp.zeta, Wv)
    end_norm = np.sqrt(abs(mp.metric_eval(cfg, zp.point, axv, axv)))
    wnorm = np.sqrt(mp.metric_eval(cfg, zp.point, zp.w_vec, zp.w_vec))
    # round-form scalar check: |H_w| ~ sin 2t gives constant base curvature 4
    tgrid = np.linspace(0.1, np.pi / 4 - 0.1, 7)
    sec_round = [-np.sin(2 * t) * (-4 * np.sin(2 * t)) / np.sin(2 * t) ** 2
                 for t in tgrid]
    round_ok = max(abs(v - 4.0) for v in sec_round) < 1e-12
    passed = max(r[1] for r in rows) <= 1e-3 and end_norm / wnorm < 1e-4 \
        and round_ok
    return _report("base_curvature", cfg, f"{len(t_samples)} pts", rows,
                   passed, t0,
                   details={"endpoint_A_norm_rel": end_norm / wnorm,
                            "round_form_sec4_ok": round_ok})


# ---------------------------------------------------------------------------
# scaled-fiber curvature along the meridian, and its integral
# ---------------------------------------------------------------------------

def check_curv_formula_and_integral(cfg=None, n_flow=33, rel_tol=1e-4,
                                    t_lo=0.015):
    """Pointwise curv_{g_s}(zeta, W) identity and the integral identity
    with the s -> 2s scaling ratio."""
    t0 = time.time()
    cfg = mp.formula_check_config(stage="s") if cfg is None else cfg
    s = cfg.s
    cfg3 = cfg.at_stage("nul")
    params = cfg.psi_params
    zp0 = zl.zero_plane_at((0.3, 0.0, QI), cfg3)
    wh = pa.w_h_at(zp0, cfg3)
    rows = []
    ts = np.linspace(t_lo, np.pi / 4 - 1e-6, n_flow)
    curvs = np.empty(len(ts))
    for i, t in enumerate(ts):
        zp = zl.zero_plane_at((float(t), 0.0, QI), cfg3)
        pv = pa.psi(float(t), 0.0, params)
        formula = (-s ** 2 * wh ** 2 * (pv.psi_t ** 2 + pv.psi * pv.psi_tt)
                   + s ** 4 * wh ** 2 * pv.psi_t ** 2)
        curvs[i] = cv.curv_pair(cfg, zp.point, zp.zeta, zp.w_vec)
        rel = abs(curvs[i] - formula) / max(abs(formula), 1e-10)
        rows.append((abs(curvs[i] - formula), rel, f"t={t:.3f}"))
    pointwise_ok = max(r[1] for r in rows) <= rel_tol

    def integrand(t):
        pv = pa.psi(t, 0.0, params)
        return (-s ** 2 * wh ** 2 * (pv.psi_t ** 2 + pv.psi * pv.psi_tt)
                + s ** 4 * wh ** 2 * pv.psi_t ** 2)

    lhs = simpson(curvs, x=ts) + quad(integrand, 0.0, t_lo)[0]
    rhs = s ** 4 * wh ** 2 * quad(
        lambda t: pa.psi(t, 0.0, params).psi_t ** 2, 0, np.pi / 4)[0]
    integral_rel = abs(lhs - rhs) / rhs
    both_positive = lhs > 0 and rhs > 0
    # total-derivative term integrates to zero
    tot = quad(lambda t: (pa.psi(t, 0.0, params).psi_t ** 2
                          + pa.psi(t, 0.0, params).psi
                          * pa.psi(t, 0.0, params).psi_tt), 0, np.pi / 4)
    tot_abs = quad(lambda t: abs(pa.psi(t, 0.0, params).psi_t ** 2
                                 + pa.psi(t, 0.0, params).psi
                                 * pa.psi(t, 0.0, params).psi_tt),
                   0, np.pi / 4)
    zero_integral_ok = abs(tot[0]) <= 1e-3 * tot_abs[0]
    # doubling s scales the integral by 16
    s2 = 2 * s

    def integrand2(t):
        pv = pa.psi(t, 0.0, params)
        return (-s2 ** 2 * wh ** 2 * (pv.psi_t ** 2 + pv.psi * pv.psi_tt)
                + s2 ** 4 * wh ** 2 * pv.psi_t ** 2)

    cfg2 = mp.StageConfig(stage="s", nu=cfg.nu, l=cfg.l, s=s2,
                          redistribute=cfg.redistribute,
                          richardson=cfg.richardson)
    curvs2 = np.empty(len(ts))
    for i, t in enumerate(ts):
        zp = zl.zero_plane_at((float(t), 0.0, QI), cfg3)
        curvs2[i] = cv.curv_pair(cfg2, zp.point, zp.zeta, zp.w_vec)
    lhs2 = simpson(curvs2, x=ts) + quad(integrand2, 0.0, t_lo)[0]
    ratio = lhs2 / lhs
    ratio_ok = abs(ratio - 16.0) <= 0.32
    passed = (pointwise_ok and integral_rel <= 0.01 and both_positive
              and zero_integral_ok and ratio_ok)
    return _report("curv_formula_integral", cfg, f"{n_flow} flow pts", rows,
                   passed, t0,
                   details={"integral_lhs": lhs, "integral_rhs": rhs,
                            "integral_rel": integral_rel,
                            "zero_integral_ok": zero_integral_ok,
                            "s_doubling_ratio": ratio,
                            "pointwise_ok": pointwise_ok})


def check_derivative_bound(cfg=None, param_sets=None, n_grid=2001):
    """sup over the meridian of |psi / (D^2 psi) * D(psi D psi)| against
    nu_l^2 / 4."""
    t0 = time.time()
    cfg = mp.formula_check_config() if cfg is None else cfg
    if param_sets is None:
        nu_r = 0.05 ** (6.0 / 7.0)
        param_sets = ((0.5, 1.0), (nu_r, nu_r ** (1.0 / 3.0)))
    rows = []
    ok = True
    for (nu, l) in param_sets:
        params = pa.PsiParams(nu, l)
        ts = np.linspace(1e-3, np.pi / 4, n_grid)
        sup, arg = 0.0, 0.0
        for t in ts:
            pv = pa.psi(t, 0.0, params)
            v = abs(pv.psi / pv.psi_tt * (pv.psi_t ** 2 + pv.psi * pv.psi_tt))
            if v > sup:
                sup, arg = v, t
        bound = params.nu_l_sq / 4
        ok = ok and sup <= bound * (1 + 1e-9)
        rows.append((sup, sup / bound, f"nu={nu} argmax t={arg:.4f}"))
    return _report("derivative_bound", cfg, f"{n_grid} pts", rows, ok, t0)


# ---------------------------------------------------------------------------
# redistribution
# ---------------------------------------------------------------------------

def check_redistribution(cfg=None, nu=0.2, l=1.0):
    """Warp identities.

    (a) curvature shift on the complementary distribution against
        (phi^4 - 1) curv + (-phi phi'' |P|^2), within an order budget
        kappa (|1 - phi^2| + |phi'|) |P|^2 for the integrability terms
        the closed-form displays drop;
    (b) exact preservation of the vanishing planes;
    (c) transverse-plane invariance, exact on the flat region; inside
        the windows the warped complement rotates at rate ~ 1/sin 2t
        around the meridians and shifts these curvatures by a genuine
        O((1 - phi^2)/sin^2 2t) term, reported against that budget.
    """
    t0 = time.time()
    if cfg is None:
        cfg = mp.StageConfig(stage="re", nu=nu, l=l, s=0.0,
                             redistribute=True, richardson=True)
    prof = cfg.profile
    kappa = cfg.o_budget_kappa
    cfg_nu = mp.StageConfig(stage="nu", nu=cfg.nu, l=cfg.l, s=0.0,
                            redistribute=False, richardson=True)
    rows = []
    deltas = []
    # sample inside the concave window, the gap, the convex window, the flat
    ts = [0.5 * prof.down_end,
          0.5 * (prof.down_end + prof.up_start),
          0.5 * (prof.up_start + prof.up_end),
          min(prof.up_end + 0.05, np.pi / 4 - 0.05)]
    for tt in ts:
        q = sp2.representative_point(tt, 0.0, QI.copy(),
                                     np.array([1.0, 0, 0, 0]))
        zeta = sp2.zeta_at(q)
        phi, d1, d2 = prof.eval(tt)
        zperp = mp.zperp_basis(cfg, q)
        for k, P in enumerate(zperp):
            nP2 = mp.metric_eval(cfg_nu, q, P, P)
            c_new = cv.curv_pair(cfg, q, zeta, P)
            c_old = cv.curv_pair(cfg_nu, q, zeta, P)
            delta = c_new - c_old
            model = (phi ** 4 - 1.0) * c_old - phi * d2 * nP2
            budget = kappa * (abs(1 - phi ** 2) + abs(d1)) * nP2 + 1e-6
            rows.append((abs(delta - model), abs(delta - model) / budget,
                         f"t={tt:.3f} P{k}"))
            deltas.append((tt, float(delta), float(phi * d2 * nP2),
                           float(-phi * d2 * nP2)))
    model_ok = max(r[1] for r in rows) <= 1.0

    # vanishing-plane preservation (full (1,3) vectors) at the row-action
    # stage, and transverse invariance
    zero_rows = []
    cfg3 = cfg.at_stage("nul")
    cfg3_plain = mp.StageConfig(stage="nul", nu=cfg.nu, l=cfg.l, s=0.0,
                                redistribute=False, richardson=True)
    for tt in (ts[0], ts[2]):
        zp = zl.zero_plane_at((tt, 0.0, QI), cfg3)
        q = zp.point
        nw = np.sqrt(mp.metric_eval(cfg3, q, zp.w_vec, zp.w_vec))
        Wn = zp.w_vec / nw
        rd = cv.riemann_point(cfg3, q)
        v1 = rd.op(zp.zeta, Wn, Wn)
        v2 = rd.op(Wn, zp.zeta, zp.zeta)
        n1 = np.sqrt(abs(mp.metric_eval(cfg3, q, v1, v1)))
        n2 = np.sqrt(abs(mp.metric_eval(cfg3, q, v2, v2)))
        zero_rows.append((n1, n1 / 1e-7, f"R(z,W)W t={tt:.3f}"))
        zero_rows.append((n2, n2 / 1e-7, f"R(W,z)z t={tt:.3f}"))
    zeros_ok = all(rw[0] <= 1e-7 for rw in zero_rows)
    # transverse invariance: exact on the flat region
    t_flat = ts[3]
    zp = zl.zero_plane_at((t_flat, 0.0, QI), cfg3)
    q = zp.point
    nw = np.sqrt(mp.metric_eval(cfg3, q, zp.w_vec, zp.w_vec))
    Wn = zp.w_vec / nw
    xi = mp.ud_reparam(cfg3, q, sp2.xi_at(q))
    a = cv.curv_pair(cfg3, q, xi, Wn)
    b = cv.curv_pair(cfg3_plain, q, xi, Wn)
    fubar_flat = abs(a - b) / max(abs(b), 1e-8)
    rows.append((abs(a - b), fubar_flat, f"transverse flat t={t_flat:.3f}"))
    # inside the windows: report the rotation-sized shift
    window_shift = {}
    for tt in (ts[0], ts[2]):
        zp = zl.zero_plane_at((tt, 0.0, QI), cfg3)
        q = zp.point
        nw = np.sqrt(mp.metric_eval(cfg3, q, zp.w_vec, zp.w_vec))
        Wn = zp.w_vec / nw
        xi = mp.ud_reparam(cfg3, q, sp2.xi_at(q))
        a = cv.curv_pair(cfg3, q, xi, Wn)
        b = cv.curv_pair(cfg3_plain, q, xi, Wn)
        phi = prof.value(tt)
        rot_budget = (kappa * abs(1 - phi ** 2) / np.sin(2 * tt) ** 2
                      / (2 * cfg.nu ** 2))
        window_shift[f"t={tt:.3f}"] = {
            "shift": float(a - b), "rotation_budget": float(rot_budget),
            "within": bool(abs(a - b) <= rot_budget)}
    rows.extend(zero_rows)
    # sign pattern of the measured delta against the two conventions
    concave = [d for d in deltas if d[0] < prof.down_end]
    convex = [d for d in deltas if prof.up_start < d[0] < prof.up_end]
    stated_sign_ok = (all(d[1] < 0 for d in concave)
                      and all(d[1] > 0 for d in convex))
    measured_sign_ok = (all(d[1] > 0 for d in concave)
                        and all(d[1] < 0 for d in convex))
    passed = model_ok and zeros_ok and fubar_flat <= 1e-4 \
        and all(v["within"] for v in window_shift.values())
    return _report("redistribution", cfg, f"{len(ts)} window pts", rows,
                   passed, t0,
                   details={"model_ok": model_ok, "zeros_ok": zeros_ok,
                            "transverse_flat_rel": fubar_flat,
                            "transverse_window_shift": window_shift,
                            "delta_sign_matches_stated_pattern": stated_sign_ok,
                            "delta_sign_opposite_pattern": measured_sign_ok,
                            "deltas (t, measured, +phi phi'' |P|^2, -phi phi'' |P|^2)":
                                deltas})


# ---------------------------------------------------------------------------
# concentration near t = 0 (regime parameters)
# ---------------------------------------------------------------------------

def check_concentration(cfg=None):
    """Scalar concentration facts: the total-derivative term is positive
    past nu/2, the negative region sits inside [0, nu], the sign flip is
    bracketed, and the tail value is dominated by the flow integral."""
    t0 = time.time()
    cfg = mp.regime_config(stage="s") if cfg is None else cfg
    params = cfg.psi_params
    nu = cfg.nu
    s = cfg.s

    def D(t):
        pv = pa.psi(t, 0.0, params)
        return pv.psi_t ** 2 + pv.psi * pv.psi_tt

    def curv_s(t):
        pv = pa.psi(t, 0.0, params)
        return -s ** 2 * (pv.psi_t ** 2 + pv.psi * pv.psi_tt) \
            + s ** 4 * pv.psi_t ** 2

    rows = []
    ts = np.linspace(nu / 2 * 1.01, np.pi / 4 - 1e-9, 400)
    worst = max(D(t) for t in ts)
    rows.append((max(worst, 0.0), max(worst, 0.0), "D past nu/2"))
    part_a = worst < 0
    # the total-derivative term changes sign once, below nu/sqrt(8);
    # past that point the scaled-fiber curvature is positive
    from scipy.optimize import brentq
    hi = nu / np.sqrt(8.0)
    flip_ok = D(1e-5) > 0 > D(hi)
    t_flip = brentq(D, 1e-5, hi) if flip_ok else None
    # analytic small-t location of the flip: sin 2t = nu_l / sqrt(3)
    t_flip_pred = 0.5 * np.arcsin(params.nu_l / np.sqrt(3.0))
    pos_after = all(curv_s(t) > 0
                    for t in np.linspace(hi, np.pi / 4 - 1e-6, 300))
    # minimum location of curv_s below nu
    tg = np.linspace(1e-4, np.pi / 4, 3000)
    cvals = np.array([curv_s(t) for t in tg])
    t_min_loc = float(tg[cvals.argmin()])
    min_in_window = t_min_loc < nu
    neg_region_ok = all(curv_s(t) > 0
                        for t in np.linspace(nu, np.pi / 4 - 1e-6, 300))
    # tail bound: |curv| on [t_c, pi/4] <= integral over the flow
    total = quad(curv_s, 0, np.pi / 4, limit=200)[0]
    t_c = None
    for t in tg:
        if t > nu and all(abs(curv_s(x)) <= total
                          for x in np.linspace(t, np.pi / 4, 60)):
            t_c = float(t)
            break
    passed = (part_a and flip_ok and pos_after and min_in_window
              and neg_region_ok and t_c is not None)
    return _report("concentration", cfg, "meridian closed forms", rows,
                   passed, t0,
                   details={"total_derivative_negative_past_half_nu": part_a,
                            "flip_exists_below_nu_sqrt8": flip_ok,
                            "t_flip": t_flip,
                            "t_flip_predicted": t_flip_pred,
                            "positive_past_nu_sqrt8": pos_after,
                            "curv_min_location": t_min_loc,
                            "min_inside_nu_window": min_in_window,
                            "negativity_inside_nu_window": neg_region_ok,
                            "tail_threshold_t_c": t_c,
                            "flow_integral": total})


# ---------------------------------------------------------------------------
# conformal stage
# ---------------------------------------------------------------------------

def check_conformal(cfg=None, t_samples=(0.012, 0.02, 0.035, 0.05, 0.08,
                                         0.12, 0.2, 0.4, 0.7),
                    hess_t=0.06):
    """Conformal-stage identities: the exponent Hessian along the flow,
    the curvature closed form within the order budget, and the full
    conformal tensor identity away from the untouched line."""
    t0 = time.time()
    cfg = mp.regime_config(stage="new") if cfg is None else cfg
    cfg_nul = cfg.at_stage("nul")
    cfg_s = cfg.at_stage("s")
    params = cfg.psi_params
    s, nu = cfg.s, cfg.nu
    rho = mp.form_for(cfg).conf_rho()
    zp0 = zl.zero_plane_at((0.1, 0.0, QI), cfg_nul)
    wh = pa.w_h_at(zp0, cfg_nul)
    budget = cfg.o_budget_kappa * s ** 4 * wh ** 2 * nu
    rows = []
    positivity = []
    for t in t_samples:
        zp = zl.zero_plane_at((float(t), 0.0, QI), cfg)
        q = zp.point
        fval, _ = mp.conformal_f(cfg, q)
        curv = cv.curv_pair(cfg, q, zp.zeta, zp.w_vec)
        lhs = np.exp(-2 * fval) * curv
        pv = pa.psi(float(t), 0.0, params)
        dv = sp2.delta_alpha_vector(zp.frame)
        nd = mp.metric_eval(cfg_s, q, dv, dv)
        co = mp.metric_eval(cfg_s, q, zp.w_vec, dv) / nd
        wg = zp.w_vec - co * dv
        wg2 = mp.metric_eval(cfg_s, q, wg, wg)
        iota = -wg2 * cfg.bump.second(float(t))
        rhs = (s ** 4 * wh ** 2 * pv.psi_t ** 2
               + s ** 4 * wh ** 2 / nu ** 2 * pv.psi ** 2 * pv.psi_t ** 2
               + iota)
        rows.append((abs(lhs - rhs), abs(lhs - rhs) / budget, f"t={t}"))
        positivity.append(rhs > 0)
    formula_ok = max(r[0] for r in rows) <= budget
    positive_ok = all(positivity)

    # Hessian of the exponent along the flow
    zp = zl.zero_plane_at((hess_t, 0.0, QI), cfg)
    q = zp.point
    h = 1e-3

    def fof(pt):
        return mp.conformal_f(cfg, pt)[0]

    f0 = fof(q)
    fp = fof(zl.flow_step(q, h))
    fm = fof(zl.flow_step(q, -h))
    hess_fd = (fp - 2 * f0 + fm) / h ** 2
    pv = pa.psi(hess_t, 0.0, params)
    hess_cf = (-2.0 * rho * s ** 2 / nu ** 2
               * (pv.psi_t ** 2 + pv.psi * pv.psi_tt)
               + cfg.bump.second(hess_t))
    hess_rel = abs(hess_fd - hess_cf) / abs(hess_cf)
    rows.append((abs(hess_fd - hess_cf), hess_rel, "hessian"))
    # gradient along the flow
    fval, grad = mp.conformal_f(cfg, q)
    dzf = mp.metric_eval(cfg_s, q, grad, zp.zeta)
    dzf_cf = (-2.0 * rho * s ** 2 / nu ** 2 * pv.psi * pv.psi_t
              + cfg.bump.first(hess_t))
    grad_rel = abs(dzf - dzf_cf) / abs(dzf_cf)
    rows.append((abs(dzf - dzf_cf), grad_rel, "gradient"))

    # constant-exponent consistency: with s = 0 the vanishing planes stay flat
    cfg0 = mp.StageConfig(stage="new", nu=cfg.nu, l=cfg.l, s=0.0,
                          redistribute=False, conf_c=cfg.conf_c,
                          kappa_iota=0.0, richardson=True)
    zpc = zl.zero_plane_at((0.3, 0.0, QI), cfg0.at_stage("nul"))
    nw = np.sqrt(mp.metric_eval(cfg0.at_stage("nul"), zpc.point,
                                zpc.w_vec, zpc.w_vec))
    c_const = cv.curv_pair(cfg0, zpc.point, zpc.zeta, zpc.w_vec / nw)
    const_ok = abs(c_const) * np.exp(-2 * cfg.conf_c) < 1e-6
    passed = (formula_ok and positive_ok and hess_rel <= 1e-3
              and grad_rel <= 1e-6 and const_ok)
    return _report("conformal", cfg, f"{len(t_samples)} flow pts", rows,
                   passed, t0,
                   details={"budget": budget, "formula_ok": formula_ok,
                            "closed_form_positive": positive_ok,
                            "hessian_rel": hess_rel,
                            "gradient_rel": grad_rel,
                            "constant_factor_flat_ok": const_ok,
                            "rho": rho})


# ---------------------------------------------------------------------------
# quadratic neighborhood (main positivity lemma) and higher order
# ---------------------------------------------------------------------------

def check_main_lemma(cfg=None, t_samples=(0.05, 0.12, 0.3), n_random=2,
                     seed=37):
    """Mixed quadratic P_Q over the perturbation case list.

    Asserted: the constant term curv_diff(zeta, W) is positive along the
    meridian, the closed-form quadratic minimum matches a grid search,
    the vertical-derivative ratio bound <= 1.1, and the mixed quadratic
    coefficients stay inside the order budget kappa nu.

    The sign of the P_Q minima is the deformation's central positivity
    claim at a fixed parameter scale; it is reported as a finding, not
    asserted: at desk-scale s the quadratic part of the redistributed
    stage is itself indefinite on some transverse planes (the warped
    complement rotates quickly around the meridians), while without the
    warp the single-variable polynomial in the vertical direction dips
    negative, which is precisely the phenomenon the warp exists to cure.
    Both numbers are recorded.
    """
    t0 = time.time()
    cfg = mp.regime_config(stage="new") if cfg is None else cfg
    cfg3 = cfg.at_stage("nul")
    kappa = cfg.o_budget_kappa
    rows = []
    minima = {}
    ratio_worst = 0.0
    mixed_worst = 0.0
    const_terms = []
    agree_worst = 0.0
    for tt in t_samples:
        zp = zl.zero_plane_at((float(tt), 0.0, QI), cfg)
        q = zp.point
        zeta, W = zp.zeta, zp.w_vec
        rd_new = cv.riemann_point(cfg, q)
        rd_old = cv.riemann_point(cfg3, q)
        fr = zp.frame
        form3 = mp.form_for(cfg3)
        fval, _ = mp.conformal_f(cfg, q)
        e2f = np.exp(2 * fval)
        eta_basis = []
        for idx in (2, 3):
            e = mp.ud_reparam(cfg3, q, mp.gm_horizontal_part(
                cfg3, q, fr.vectors[idx]))
            e /= np.sqrt(form3.eval(q, e, e))
            eta_basis.append(e)
        wcoef = [form3.eval(q, W, e) for e in eta_basis]
        wn = np.hypot(*wcoef)
        eta_w = (wcoef[0] * eta_basis[0] + wcoef[1] * eta_basis[1]) / wn
        eta_wp = (-wcoef[1] * eta_basis[0] + wcoef[0] * eta_basis[1]) / wn
        xi = mp.ud_reparam(cfg3, q, sp2.xi_at(q))
        vb = fr.vectors[4:]
        cases = {"z=xi": (xi, None), "V=eta_w": (None, eta_w),
                 "z=eta_wp": (eta_wp, None)}
        for j in range(n_random):
            coef = rng.normal(seed, j, 0, 6)
            V = coef @ vb
            V = V - W * form3.eval(q, V, W) / form3.eval(q, W, W)
            cases[f"V_vert_{j}"] = (None, V)
            zc = rng.normal(seed, j, 8, 4)
            z = zc @ np.array([mp.ud_reparam(cfg3, q, mp.gm_horizontal_part(
                cfg3, q, v)) for v in fr.vectors[:4]])
            cases[f"z_rand_{j}"] = (z, None)
        for name, (z, V) in cases.items():
            if z is None:
                z = xi
            if V is None:
                V = eta_w
            cd, zq, Vq = cv.curvature_polynomial(cfg, q, zeta, W, z, V,
                                                 rd=rd_new)
            co, _, _ = cv.curvature_polynomial(cfg3, q, zeta, W, zq, Vq,
                                               rd=rd_old)
            # the previous-stage quadratic enters with the conformal
            # weight, matching the curvature scale of the new stage
            diff = cv.PolyCoeffs(*(a - e2f * b for a, b in
                                   zip(cd.__dict__.values(),
                                       co.__dict__.values())))
            mn, arg = cv.quad_min(diff.c00, diff.c10, diff.c01,
                                  e2f * co.c20, e2f * co.c11, e2f * co.c02)
            pq = cv.quadratic_subpoly(diff, cv.PolyCoeffs(
                0, 0, 0, e2f * co.c20, e2f * co.c11, e2f * co.c02,
                0, 0, 0))
            key = f"t={tt:.2f} {name}"
            if np.isfinite(mn) and arg is not None:
                # grid search in a window centered on the closed-form
                # minimizer certifies the formula
                span = 2.0 * max(1.0, np.max(np.abs(arg)))
                best = np.inf
                for sgr in np.linspace(arg[0] - span, arg[0] + span, 41):
                    for tgr in np.linspace(arg[1] - span, arg[1] + span, 41):
                        best = min(best, pq(sgr, tgr))
                agree_worst = max(agree_worst,
                                  abs(mn - best) / (abs(mn) + 1.0))
                grid_mn = best
            else:
                grid_mn, _ = cv.quad_min_grid(pq, lim=30.0, n=61)
            minima[key] = (float(mn), float(grid_mn))
            const_terms.append((tt, diff.c00))
            rows.append((max(-grid_mn, 0.0), 0.0, key))
        # mixed quadratic coefficients against the order budget
        m1 = rd_old.contract(zeta, W, eta_w, eta_wp)
        m2 = rd_old.contract(zeta, eta_w, W, eta_wp)
        diag = np.sqrt(abs(rd_old.curv(zeta, eta_w))
                       * abs(rd_old.curv(eta_wp, W))) + 1e-12
        mixed_worst = max(mixed_worst, abs(m1) / diag, abs(m2) / diag)
        # ratio bound for vertical Killing-type directions
        for j in range(2):
            coef = rng.normal(seed + 1, 10 * j, 0, 6)
            U = coef @ vb
            U = U - W * form3.eval(q, U, W) / form3.eval(q, W, W)
            U = U - eta_w * form3.eval(q, U, eta_w) / form3.eval(q, eta_w,
                                                                 eta_w)
            bcoef = [sp2.b_inner(U, v) / 0.5 for v in vb]

            def u_field(pt, bc=bcoef):
                frp = sp2.frame_at(pt)
                return sum(c * v for c, v in zip(bc, frp.vectors[4:]))

            nab = cv.covariant_derivative(cfg3, q, zeta, u_field)
            num = form3.eval(q, eta_basis[0], nab) ** 2 \
                + form3.eval(q, eta_basis[1], nab) ** 2
            den = rd_old.curv(zeta, U)
            if den > 1e-10:
                ratio_worst = max(ratio_worst, num / den)
    # the warp's motivating phenomenon: without it the single-variable
    # vertical polynomial dips negative
    cfg_plain = mp.StageConfig(stage="new", nu=cfg.nu, l=cfg.l, s=cfg.s,
                               redistribute=False, conf_c=cfg.conf_c,
                               kappa_iota=cfg.kappa_iota, richardson=True)
    zp = zl.zero_plane_at((0.12, 0.0, QI), cfg_plain)
    qp = zp.point
    rdn = cv.riemann_point(cfg_plain, qp)
    rdo = cv.riemann_point(cfg_plain.at_stage("nul"), qp)
    form3p = mp.form_for(cfg_plain.at_stage("nul"))
    fvalp, _ = mp.conformal_f(cfg_plain, qp)
    e2fp = np.exp(2 * fvalp)
    coefp = rng.normal(seed, 0, 0, 6)
    Vp = coefp @ zp.frame.vectors[4:]
    Vp = Vp - zp.w_vec * form3p.eval(qp, Vp, zp.w_vec) / form3p.eval(
        qp, zp.w_vec, zp.w_vec)
    cdp, _, Vq = cv.curvature_polynomial(cfg_plain, qp, zp.zeta, zp.w_vec,
                                         sp2.xi_at(qp), Vp, rd=rdn)
    cop, _, _ = cv.curvature_polynomial(cfg_plain.at_stage("nul"), qp,
                                        zp.zeta, zp.w_vec, sp2.xi_at(qp),
                                        Vq, rd=rdo)
    p_tau_min, _ = cv.quad_min(cdp.c00 - e2fp * cop.c00, 0.0,
                               cdp.c01 - e2fp * cop.c01, 1.0, 0.0,
                               e2fp * cop.c02)
    # assert positivity of the constant term only where the closed form
    # predicts it above the order budget (the far tail is swamped by the
    # budget-sized terms)
    zp0 = zl.zero_plane_at((0.1, 0.0, QI), cfg3)
    wh0 = pa.w_h_at(zp0, cfg3)
    budget0 = kappa * cfg.s ** 4 * wh0 ** 2 * cfg.nu
    const_ok = True
    for (tt, c) in const_terms:
        pv0 = pa.psi(float(tt), 0.0, cfg.psi_params)
        predicted = cfg.s ** 4 * wh0 ** 2 * pv0.psi_t ** 2
        if predicted > budget0 and c <= 0:
            const_ok = False
    ratio_ok = ratio_worst <= 1.1 * (1 + 1e-6)
    mixed_ok = mixed_worst <= kappa * cfg.nu
    agree_ok = agree_worst <= 0.05
    passed = const_ok and ratio_ok and mixed_ok and agree_ok
    n_pos = sum(1 for v in minima.values() if min(v) > 0)
    return _report("main_lemma", cfg, f"{len(t_samples)} pts", rows, passed,
                   t0, details={"minima": minima,
                                "positive_minima": f"{n_pos}/{len(minima)}",
                                "constant_terms_positive": const_ok,
                                "ratio_worst": ratio_worst,
                                "ratio_ok": ratio_ok,
                                "mixed_rel_worst": mixed_worst,
                                "mixed_within_budget": mixed_ok,
                                "quad_min_grid_agreement": agree_worst,
                                "no_warp_P_tau_min": float(p_tau_min)})


def check_higher_order(cfg=None, t_samples=(0.08, 0.25), n_cs=500, seed=51):
    """Sampled bounds on the conformal-weighted difference tensor
    Delta = e^{-2f} R_new - R_old.

    Asserted: the three vanishing cases whose cancellation survives at
    desk scale (the zeta rows and the horizontal gamma-row pairings with
    the meridian-transverse direction) stay inside kappa s of the
    previous-stage coefficient, and a sampled quadratic-mean bound with
    the same order slack.  The remaining §-style coefficients couple to
    the untouched fiber line through bracket terms of size
    (e^{2f} - 1) O(1) at this parameter scale and are reported as
    findings with their previous-stage comparators.
    """
    t0 = time.time()
    cfg = mp.regime_config(stage="new") if cfg is None else cfg
    cfg3 = cfg.at_stage("nul")
    params = cfg.psi_params
    s, nu = cfg.s, cfg.nu
    kappa = cfg.o_budget_kappa
    rows = []
    cs_margin = -np.inf
    details = {}
    for tt in t_samples:
        zp = zl.zero_plane_at((float(tt), 0.0, QI), cfg)
        q = zp.point
        fr = zp.frame
        form3 = mp.form_for(cfg3)
        rd_new = cv.riemann_point(cfg, q)
        rd_old = cv.riemann_point(cfg3, q)
        fval, _ = mp.conformal_f(cfg, q)
        wh = pa.w_h_at(zp, cfg3)
        pv = pa.psi(float(tt), 0.0, params)
        zeta, W = zp.zeta, zp.w_vec

        def unit3(v):
            return v / np.sqrt(form3.eval(q, v, v))

        y20 = unit3(mp.ud_reparam(cfg3, q, mp.gm_horizontal_part(
            cfg3, q, fr.y20)))
        eta_basis = [unit3(mp.ud_reparam(cfg3, q, mp.gm_horizontal_part(
            cfg3, q, fr.vectors[i]))) for i in (2, 3)]
        wcoef = [form3.eval(q, W, e) for e in eta_basis]
        wn = np.hypot(*wcoef)
        eta_w = unit3(wcoef[0] * eta_basis[0] + wcoef[1] * eta_basis[1])

        def cdiff(a, b):
            return (np.exp(-2 * fval) * rd_new.curv(a, b)
                    - rd_old.curv(a, b))

        for name, a, b in (("zeta_y20", zeta, y20),
                           ("zeta_eta", zeta, eta_basis[0]),
                           ("eta_y20", eta_basis[0], y20)):
            v = abs(cdiff(a, b))
            scale = kappa * cfg.s * max(abs(rd_old.curv(a, b)), 1e-2)
            rows.append((v, v / scale, f"t={tt:.2f} {name}"))
        # reported findings: the gamma-pair plane picks up the fiber-line
        # bracket terms, and the base identification of Dcurv(W, y20)
        details[f"eta1_eta2 t={tt}"] = {
            "Dcurv": cdiff(eta_basis[0], eta_basis[1]),
            "old": rd_old.curv(eta_basis[0], eta_basis[1])}
        y = sp2.gm_projection(q)
        rdb = cv.s4_riemann(cfg3, y)
        yb = sp2.gm_differential(q, y20)
        eb = sp2.gm_differential(q, eta_w)
        sec_b = rdb.contract(yb, eb, eb, yb)
        details[f"W_y20 t={tt}"] = {
            "Dcurv": cdiff(W, y20),
            "base_term s^2 w^2 psi^2 curv_B": float(
                s ** 2 * wh ** 2 * pv.psi ** 2 * sec_b / wh ** 2) * wh ** 2,
            "old": rd_old.curv(W, y20)}
        # sampled quadratic-mean bound on Delta(z, V, W, z)
        vb = fr.vectors[4:]
        hb = [unit3(mp.ud_reparam(cfg3, q, mp.gm_horizontal_part(
            cfg3, q, v))) for v in fr.vectors[:4]]
        for k in range(n_cs // len(t_samples)):
            zc = rng.normal(seed, k, 0, 4)
            z = sum(c * v for c, v in zip(zc, hb))
            vcf = rng.normal(seed, k, 8, 6)
            V = vcf @ vb
            V /= np.sqrt(form3.eval(q, V, V))
            z /= np.sqrt(form3.eval(q, z, z))
            lhsd = abs(np.exp(-2 * fval) * rd_new.contract(z, V, W, z)
                       - rd_old.contract(z, V, W, z))
            da, db = cdiff(z, V), cdiff(z, W)
            base = np.sqrt(max(da, 0.0) * max(db, 0.0))
            comparator = np.sqrt(
                (abs(rd_old.curv(z, V)) + abs(da))
                * (abs(rd_old.curv(z, W)) + abs(db))) + 1e-9
            cs_margin = max(cs_margin, (lhsd - base) / comparator)
    cases_ok = max(r[1] for r in rows) <= 1.0
    cs_budget = kappa * np.sqrt(max(s, nu))
    cs_ok = cs_margin <= cs_budget
    passed = cases_ok and cs_ok
    return _report("higher_order", cfg, f"{len(t_samples)} pts", rows,
                   passed, t0,
                   details={**details,
                            "quadratic_mean_margin": float(cs_margin),
                            "quadratic_mean_budget": float(cs_budget),
                            "cases_within_budget": cases_ok})


# ---------------------------------------------------------------------------
# zero locus and invariance
# ---------------------------------------------------------------------------

def check_zero_locus(cfg=None, n_inside=8, n_outside=8, planes_per_pt=4,
                     seed=61):
    """Vanishing curvature on constructed planes inside the locus and a
    strictly positive margin over sampled horizontal planes outside."""
    t0 = time.time()
    cfg = mp.StageConfig(stage="nul", nu=0.5, l=1.0, s=0.0,
                         redistribute=False) if cfg is None else cfg
    rows = []
    inside_worst = 0.0
    for i in range(n_inside):
        th = rng.uniform(seed, i, 0)[0] * 0.2
        tmax = np.pi / 4 - 0.03
        tmin = pa.l_boundary_t(th) + 0.01 if pa.L(tmax, th) < 1 else tmax
        t = tmin + (tmax - tmin) * rng.uniform(seed, i, 1)[0]
        if pa.L(t, th) > 1.0:
            continue
        al = rng.unit_imaginary_quat(seed, i, 2)
        chi = 2 * np.pi * rng.uniform(seed, i, 6)[0]
        zp = zl.zero_plane_at((t, th, al), cfg, chi=chi)
        q = zp.point
        nw = np.sqrt(mp.metric_eval(cfg, q, zp.w_vec, zp.w_vec))
        sec = cv.sigma7_sectional(cfg, q, zp.zeta, zp.w_vec / nw,
                                  enforce_horizontal=True)
        inside_worst = max(inside_worst, abs(sec))
        rows.append((abs(sec), abs(sec), f"in ({t:.3f},{th:.3f})"))
    outside_min = np.inf
    for i in range(n_outside):
        t = 0.03 + 0.25 * rng.uniform(seed + 1, i, 0)[0]
        th = 0.3 + 0.4 * rng.uniform(seed + 1, i, 1)[0]
        if pa.L(t, th) <= 1.0 or abs(np.cos(2 * th)) < 0.05:
            continue
        al = rng.unit_imaginary_quat(seed + 1, i, 2)
        p = rng.unit_quat(seed + 1, i, 6)
        q = sp2.representative_point(t, th, al, p)
        hb = _h21_basis(cfg, q)
        for j in range(planes_per_pt):
            c1 = rng.normal(seed + 1, 100 * i + j, 0, 4)
            c2 = rng.normal(seed + 1, 100 * i + j, 10, 4)
            X = c1 @ hb
            Y = c2 @ hb
            sec = cv.sigma7_sectional(cfg, q, X, Y)
            outside_min = min(outside_min, sec)
            rows.append((0.0, 0.0, f"out ({t:.3f},{th:.3f}) {j}"))
    passed = inside_worst <= 1e-7 and outside_min > 1e-5
    return _report("zero_locus", cfg, f"{n_inside}+{n_outside} pts", rows,
                   passed, t0,
                   details={"inside_worst_abs_sec": inside_worst,
                            "outside_min_sec": float(outside_min)})


def _h21_basis(cfg, point):
    """Basis of the 4-dim submersion-horizontal space at the point."""
    fr = sp2.frame_at(point)
    return np.array([mp.gm_horizontal_part(cfg, point, v)
                     for v in fr.vectors[:4]])


def check_lambda_closed_form(n_grid=101):
    """Ellipse-circle intersection closed form against a root finder."""
    t0 = time.time()
    cfg = mp.StageConfig(stage="nul", nu=0.5, l=1.0, s=0.0,
                         redistribute=False)
    rows = []
    for Lval in np.linspace(0.0, 1.0, n_grid):
        c1, s1 = zl.lambda_from_L(Lval)
        c2, s2 = zl.lambda_rootfind(Lval)
        rows.append((max(abs(c1 - c2), abs(s1 - s2)),
                     max(abs(c1 - c2), abs(s1 - s2)), f"L={Lval:.3f}"))
        assert abs(c1 ** 2 + s1 ** 2 - 1) < 1e-14
    e0 = zl.lambda_from_L(0.0)
    e1 = zl.lambda_from_L(1.0)
    endpoints_ok = (abs(e0[0] - 0.5) < 1e-15
                    and abs(e0[1] - np.sqrt(3) / 2) < 1e-15
                    and abs(e1[0]) < 1e-15 and abs(e1[1] - 1) < 1e-15)
    passed = max(r[0] for r in rows) <= 1e-12 and endpoints_ok
    return _report("lambda_closed_form", cfg, f"{n_grid} pts", rows, passed,
                   t0, details={"endpoints_ok": endpoints_ok})


def check_invariance(cfg=None, n_samples=20, seed=77):
    """Metric invariance of every stage under the quotient action and
    the residual-column rotation."""
    t0 = time.time()
    base = mp.regime_config(stage="new") if cfg is None else cfg
    rows = []
    for stage in ("bi", "nu", "re", "nul", "s", "new", "final"):
        c = base.at_stage(stage)
        worst = mp.stage_invariance_check(c, n_samples=n_samples, seed=seed)
        rows.append((worst, worst, stage))
    passed = max(r[0] for r in rows) <= 1e-9
    return _report("invariance", base, f"{n_samples} samples x 7 stages",
                   rows, passed, t0)


# ---------------------------------------------------------------------------
# suite runner and coverage
# ---------------------------------------------------------------------------

SUITES = {
    "biinv": check_biinvariant_oracle,
    "psi": check_psi_suite,
    "cheeger-norms": check_cheeger_norms,
    "lambda": check_lambda_closed_form,
    "zero-locus": check_zero_locus,
    "canonical": check_canonical_variation,
    "base": check_base_curvature_lemmas,
    "curv-integral": check_curv_formula_and_integral,
    "derivative-bound": check_derivative_bound,
    "redistribution": check_redistribution,
    "concentration": check_concentration,
    "conformal": check_conformal,
    "main-lemma": check_main_lemma,
    "higher-order": check_higher_order,
    "invariance": check_invariance,
}

COVERAGE = {
    "biinv": ["bracket-curvature identity"],
    "psi": ["warping-function partials", "redistribution shift of psi",
            "derivative-ratio bound"],
    "cheeger-norms": ["convention norms of the adapted frame"],
    "lambda": ["circle-ellipse intersection"],
    "zero-locus": ["vanishing-plane construction", "locus complement margin"],
    "canonical": ["fiber-scaling (1,3) curvature formulas",
                  "mixed vertical-horizontal scaling line"],
    "base": ["base curvature via Killing length",
             "mixed integrability tensor", "round base limit"],
    "curv-integral": ["scaled-fiber curvature along meridians",
                      "integral positivity", "quartic scaling in s"],
    "derivative-bound": ["derivative-ratio bound"],
    "redistribution": ["warp curvature shift", "vanishing-plane preservation",
                       "transverse curvature invariance"],
    "concentration": ["curvature concentration near t=0",
                      "negativity window", "sign-flip bracket"],
    "conformal": ["partial conformal curvature closed form",
                  "exponent Hessian", "exponent gradient",
                  "constant-factor flatness"],
    "main-lemma": ["mixed quadratic positivity", "vertical derivative ratio",
                   "mixed coefficient smallness"],
    "higher-order": ["difference-tensor vanishing cases",
                     "base identification of curv_diff(W, y20)",
                     "sampled quadratic-mean bound"],
    "invariance": ["stage metric invariance"],
}


def run_suites(names=None, cfg=None):
    names = list(SUITES) if not names else names
    reports = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}")
        fn = SUITES[name]
        try:
            rep = fn(cfg) if cfg is not None else fn()
        except Exception as exc:  # runtime failure is a reported failure
            rep = CheckReport(name, {}, "-", np.inf, np.inf,
                              f"exception: {exc}", False, 0.0,
                              {"error": repr(exc)})
        reports.append(rep)
    return names, reports


def coverage_matrix(names=None):
    names = list(SUITES) if not names else names
    return {n: COVERAGE.get(n, []) for n in names}


def reports_to_json(names, reports, config_hash=None):
    return json.dumps({
        "config_hash": config_hash,
        "all_passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
        "coverage": coverage_matrix(names),
    }, indent=2, sort_keys=True)
