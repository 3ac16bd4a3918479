"""The six-stage metric deformation pipeline, evaluated as bilinear forms.

Stage order (each builds on the previous):

  bi    (1/2) b, induced by Sp(2) in S^7(1/sqrt2) x S^7(1/sqrt2)
  nu    vertical scaling of V1 + V2 by 2 nu^2 relative to (1/2) b, the
        column-action Cheeger deformation (g_nu restricted to V equals
        nu^2 b, so |(0, vartheta)| = nu)
  re    redistribution: the restriction to the 3-dim Z-perp inside
        V1 + V2 is multiplied by phi(t)^2
  nul   row-action (U + D) Cheeger deformation at scale l
  s     fiber scaling of the S^4 submersion by sqrt(1 - s^2)
  new   partial conformal change by e^{2f} away from the common-fiber
        line Delta(alpha)
  final Cheeger deformations by diag(U, D) and a further h1 action

Vectors written in the adapted frame are related to the metric after the
row-action deformation by the convention map X -> X + sigma_{m_X / l^2}
(``ud_reparam``); norms of convention vectors satisfy
|X~|^2 = g(X, X) + |m_X|^2 / l^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import psi_analytic, sp2
from .quat import h_rmul, qmul

STAGE_DEPTH = {"bi": 0, "nu": 1, "re": 2, "nul": 3, "s": 4, "new": 5, "final": 6}
S4_POLE = np.array([0.0, 0.0, 0.0, 0.0, -0.5])


class DomainError(ValueError):
    pass


# --- redistribution profile --------------------------------------------------

@dataclass(frozen=True)
class RedistributionProfile:
    """C^2 warp profile phi: [0, pi/4] -> R+, phi == 1 past t_flat.

    phi'' is a continuous piecewise-linear bump pair: a concave-down
    window of depth ~a_down near t = 0 and a concave-up window of height
    a_up whose area cancels it, so phi'(0) = phi'(t_flat) = 0 and phi is
    constant afterwards.  For small nu the windows realize the boxes
    phi''/nu^2 in (-101, -100) on an O(nu) interval and
    phi'' in (10000 nu^3, 10001 nu^3) on the middle interval; for large
    nu the windows are clamped to fit inside [0, pi/4].
    """

    nu: float
    a_down: float
    a_up: float
    down_end: float
    up_start: float
    up_end: float
    ramp: float
    ramp_up: float = None

    def __post_init__(self):
        if self.ramp_up is None:
            object.__setattr__(self, "ramp_up", self.ramp)

    @property
    def t_flat(self):
        return self.up_end

    def second(self, t):
        """phi'' at t (scalar or array)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        r = self.ramp
        r2 = self.ramp_up
        d, u0, u1 = self.down_end, self.up_start, self.up_end
        out = np.where(t < r, -self.a_down * t / r, out)
        out = np.where((t >= r) & (t < d - r), -self.a_down, out)
        out = np.where((t >= d - r) & (t < d), -self.a_down * (d - t) / r, out)
        out = np.where((t >= u0) & (t < u0 + r2),
                       self.a_up * (t - u0) / r2, out)
        out = np.where((t >= u0 + r2) & (t < u1 - r2), self.a_up, out)
        out = np.where((t >= u1 - r2) & (t < u1),
                       self.a_up * (u1 - t) / r2, out)
        return out if out.shape else float(out)

    def _first_raw(self, t):
        # integral of second() from 0 to t, exact per piece
        r = self.ramp
        r2 = self.ramp_up
        d, u0, u1 = self.down_end, self.up_start, self.up_end
        ad, au = self.a_down, self.a_up

        def one(x):
            v = 0.0
            # concave window
            if x <= 0:
                return 0.0
            v -= ad * min(x, r) ** 2 / (2 * r)
            if x > r:
                v -= ad * (min(x, d - r) - r)
            if x > d - r:
                y = min(x, d) - (d - r)
                v -= ad * (y - y ** 2 / (2 * r))
            # convex window
            if x > u0:
                y = min(x, u0 + r2) - u0
                v += au * y ** 2 / (2 * r2)
            if x > u0 + r2:
                v += au * (min(x, u1 - r2) - (u0 + r2))
            if x > u1 - r2:
                y = min(x, u1) - (u1 - r2)
                v += au * (y - y ** 2 / (2 * r2))
            return v

        t = np.asarray(t, dtype=float)
        if t.shape:
            return np.array([one(float(x)) for x in t])
        return one(float(t))

    def first(self, t):
        """phi' at t."""
        return self._first_raw(t)

    def value(self, t):
        """phi at t; phi == 1 on [t_flat, pi/4]."""
        # integrate phi' from t to t_flat with Gauss-Legendre per piece
        t_arr = np.asarray(t, dtype=float)
        scalar = not t_arr.shape
        ts = np.atleast_1d(t_arr)
        out = np.empty_like(ts)
        for i, x in enumerate(ts):
            if x >= self.up_end:
                out[i] = 1.0
                continue
            nodes, weights = np.polynomial.legendre.leggauss(24)
            a, b = float(x), self.up_end
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            vals = self._first_raw(mid + half * nodes)
            out[i] = 1.0 - half * float(np.dot(weights, vals))
        return float(out[0]) if scalar else out

    def eval(self, t):
        return self.value(t), self.first(t), self.second(t)


def make_profile(nu, k1=0.6, k2=2.0, a_down=None, a_up=None, ramp_frac=0.1):
    """Profile with paper-box constants, windows clamped into [0, pi/4]."""
    a_down = 100.5 * nu ** 2 if a_down is None else a_down
    a_up = 10000.5 * nu ** 3 if a_up is None else a_up
    down_end = min(k1 * nu, 0.08)
    ramp = ramp_frac * down_end
    up_start = min(k2 * nu, 0.16)
    up_start = max(up_start, down_end + ramp)
    area = a_down * (down_end - ramp)
    # the convex window must fit before the flat region and keep a
    # genuine plateau (at least four ramps long)
    max_end = 0.72 * np.pi / 4
    space = max_end - up_start
    a_lo = area / (0.9 * space)
    a_hi = area / (5 * ramp)
    a_up = float(np.clip(a_up, a_lo, max(a_hi, a_lo)))
    ramp_up = min(ramp, 0.2 * area / a_up)
    length = ramp_up + area / a_up
    return RedistributionProfile(nu, a_down, a_up, down_end, up_start,
                                 up_start + length, ramp, ramp_up)


def profile_validate(profile, n=2000):
    """Certify the profile box constraints on a grid; returns a report."""
    nu = profile.nu
    ts = np.linspace(0.0, np.pi / 4, n)
    phi = profile.value(ts)
    d1 = profile.first(ts)
    d2 = profile.second(ts)
    r = profile.ramp
    r2 = profile.ramp_up
    win1 = (ts > r) & (ts < profile.down_end - r)
    win2 = (ts > profile.up_start + r2) & (ts < profile.up_end - r2)
    report = {
        "first_deriv_at_zero": abs(profile.first(0.0)),
        "down_window": (float(profile.down_end),),
        "down_box_ok": bool(np.all((-101 * nu ** 2 < d2[win1])
                                   & (d2[win1] < -100 * nu ** 2))
                            if win1.any() else False),
        "up_box_value": (float(d2[win2].min()), float(d2[win2].max()))
        if win2.any() else None,
        "up_box_positive": bool(np.all(d2[win2] > 0)) if win2.any() else False,
        "flat_after": bool(np.all(np.abs(phi[ts >= profile.t_flat] - 1.0)
                                  < 1e-12)),
        "phisq_minus_one_max": float(np.max(np.abs(phi ** 2 - 1.0))),
        "phisq_bound_ok": bool(np.max(np.abs(phi ** 2 - 1.0)) <= 101 * nu ** 3),
        "first_deriv_max": float(np.max(np.abs(d1))),
        "first_deriv_bound_ok": bool(np.max(np.abs(d1)) <= 101 * nu ** 3),
    }
    report["ok"] = (report["first_deriv_at_zero"] < 1e-14
                    and report["down_box_ok"] and report["up_box_positive"]
                    and report["flat_after"] and report["phisq_bound_ok"]
                    and report["first_deriv_bound_ok"])
    return report


# --- conformal bump ----------------------------------------------------------

@dataclass(frozen=True)
class ConformalBump:
    """Second derivative A cos(2 pi r / r0) on [0, r0], zero outside.

    I'(0) = I'(r0) = 0 and the integral of I'' over the support vanishes;
    I itself is anchored to 0 on the far side of the support.
    """

    amplitude: float
    r0: float

    def second(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r <= self.r0,
                       self.amplitude * np.cos(2 * np.pi * r / self.r0), 0.0)
        return out if out.shape else float(out)

    def first(self, r):
        r = np.asarray(r, dtype=float)
        c = self.r0 / (2 * np.pi)
        out = np.where(r <= self.r0,
                       self.amplitude * c * np.sin(2 * np.pi * r / self.r0), 0.0)
        return out if out.shape else float(out)

    def value(self, r):
        # anchored so that I == 0 on [r0, pi/4]: the antiderivative of
        # first() with I(r0) = 0 is A c^2 (1 - cos(2 pi r / r0))
        r = np.asarray(r, dtype=float)
        c = self.r0 / (2 * np.pi)
        out = np.where(r <= self.r0,
                       self.amplitude * c * c
                       * (1.0 - np.cos(2 * np.pi * r / self.r0)), 0.0)
        return out if out.shape else float(out)


# --- configuration -----------------------------------------------------------

def _default_nu(s):
    return s ** (6.0 / 7.0)


@dataclass
class StageConfig:
    """Full parameter set of the deformation pipeline.

    nu = 1.0 is a sentinel disabling the column-action Cheeger stage;
    otherwise nu must lie in (0, 1/sqrt 2) for the vertical scale
    2 nu^2 < 1 to be realizable as a quotient.  l = inf disables the
    row-action stage, s = 0 the fiber scaling, redistribute = False the
    warp.  Read-only after construction.
    """

    stage: str = "new"
    nu: float = _default_nu(0.05)
    l: float = _default_nu(0.05) ** (1.0 / 3.0)
    s: float = 0.05
    conf_c: float = 1.05
    kappa_iota: float = 5e-6
    bump_r0: float | None = None
    redistribute: bool = True
    profile: RedistributionProfile | None = None
    l_diag: float = 1.0
    l_h1: float = 1.0
    t_min: float = 1e-3
    fd_step: float = 2e-3
    richardson: bool = False
    nullspace_cutoff: float = 1e-8
    gap_factor: float = 10.0
    o_budget_kappa: float = 10.0

    def __post_init__(self):
        if self.stage not in STAGE_DEPTH:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.nu != 1.0 and not (0.0 < self.nu < 1.0 / np.sqrt(2.0)):
            raise ValueError("nu must be in (0, 1/sqrt(2)) or the sentinel 1.0")
        if self.s < 0 or self.s >= 1:
            raise ValueError("s must lie in [0, 1)")
        if self.redistribute and self.profile is None and self.nu != 1.0:
            self.profile = make_profile(self.nu)

    @property
    def depth(self):
        return STAGE_DEPTH[self.stage]

    @property
    def nu_on(self):
        return self.nu != 1.0

    @property
    def l_on(self):
        return np.isfinite(self.l)

    @property
    def psi_params(self):
        return psi_analytic.PsiParams(self.nu, self.l)

    @property
    def bump(self):
        r0 = self.bump_r0
        if r0 is None:
            r0 = 3.0 * self.psi_params.nu_l if self.nu_on else 0.1
        amp = self.kappa_iota * self.s ** 4 / self.nu ** 2
        return ConformalBump(amp, r0)

    def at_stage(self, stage):
        return replace(self, stage=stage, profile=self.profile)

    def key(self):
        prof = self.profile
        prof_key = None if (prof is None or not self.redistribute) else (
            prof.nu, prof.a_down, prof.a_up, prof.down_end, prof.up_start,
            prof.up_end, prof.ramp)
        return (self.stage, self.nu, self.l, self.s, self.conf_c,
                self.kappa_iota, self.bump_r0, self.redistribute, prof_key,
                self.l_diag, self.l_h1, self.t_min)


def formula_check_config(stage="nul", redistribute=False, **kw):
    """Parameter set where finite differences are most accurate."""
    return StageConfig(stage=stage, nu=0.5, l=1.0, s=0.2,
                       redistribute=redistribute, **kw)


def regime_config(stage="new", s=0.05, c=1.0, cprime=1.0, **kw):
    """Positivity regime nu = c s^(6/7), l = c' nu^(1/3).

    Step extrapolation is on by default: the strongly collapsed vertical
    directions carry curvatures of order 1/nu^2 whose fourth metric
    derivatives defeat plain O(h^4) stencils.
    """
    nu = c * s ** (6.0 / 7.0)
    kw.setdefault("richardson", True)
    return StageConfig(stage=stage, nu=nu, l=cprime * nu ** (1.0 / 3.0),
                       s=s, **kw)


# --- per-point context -------------------------------------------------------

class _Context:
    __slots__ = ("point", "t", "theta", "alpha", "p", "g", "vbasis", "zperp",
                 "phi2m1", "ud_orbits", "ud_factor", "vert", "vert_factor",
                 "f_val", "delta_unit", "fin_orbits", "fin_factor", "y")


def _vertical_onb(point):
    """(1/2)b-orthonormal basis of V1 + V2 as 6 rows."""
    c1, c2 = point.col1, point.col2
    rows = np.empty((6, 16))
    z8 = np.zeros(8)
    for k, mu in enumerate((np.array([0., 1, 0, 0]), np.array([0., 0, 1, 0]),
                            np.array([0., 0, 0, 1]))):
        rows[k] = sp2.SQRT2 * np.concatenate([h_rmul(c1, mu), z8])
        rows[3 + k] = sp2.SQRT2 * np.concatenate([z8, h_rmul(c2, mu)])
    return rows


def _zperp_raw(ctx):
    """Closed-form basis of Z-perp at the context point.

    In the (beta, delta) labels of the vertically parallel fields the
    null distribution Z of U -> curv_{g_nu}(zeta, U) on V1 + V2 is
    span{(al, al), (g1, g1 c + g2 s), (g2, g2 c - g1 s)} with
    c = cos(pi - 2 phi), s = sin(pi - 2 phi); its complement flips the
    sign of the second slot.  The span is independent of the gamma
    phase.  Verified against the numeric nullspace in the test suite.
    """
    t, theta, alpha, p, g = ctx.t, ctx.theta, ctx.alpha, ctx.p, ctx.g
    from .quat import gamma_pair
    g1, g2 = gamma_pair(alpha)
    phi = sp2.zeta_branch_angle(t, theta)
    c = np.cos(np.pi - 2 * phi)
    s = np.sin(np.pi - 2 * phi)
    n1, n2, _, _ = sp2._n_pair(t, theta, alpha)
    pairs = [
        (alpha, -alpha),
        (g1, -(c * g1 + s * g2)),
        (g2, -(c * g2 - s * g1)),
    ]
    rows = np.empty((3, 16))
    for k, (beta, delta) in enumerate(pairs):
        rows[k] = np.concatenate([h_rmul(n1, qmul(beta, p)), h_rmul(n2, delta)])
        if g is not None:
            rows[k] = sp2.act_vec("gm_2m1", g, rows[k])
    return rows


def zperp_basis(cfg, point):
    """Orthonormal basis of the warped complement Z-perp at the point,
    with respect to the vertical-scaled metric."""
    form = form_for(cfg)
    ctx = _Context()
    t, th, al, p, g = sp2.decompose(point)
    ctx.t, ctx.theta, ctx.alpha, ctx.p, ctx.g = t, th, al, p, g
    ctx.vbasis = _vertical_onb(point) if cfg.nu_on else None
    raw = _zperp_raw(ctx)
    return form._orthonormalize(point, raw, depth=1)


def z_closed_form(point):
    """Closed-form basis of the null distribution Z itself (3 rows)."""
    t, theta, alpha, p, g = sp2.decompose(point)
    from .quat import gamma_pair
    g1, g2 = gamma_pair(alpha)
    phi = sp2.zeta_branch_angle(t, theta)
    c = np.cos(np.pi - 2 * phi)
    s = np.sin(np.pi - 2 * phi)
    n1, n2, _, _ = sp2._n_pair(t, theta, alpha)
    pairs = [(alpha, alpha), (g1, c * g1 + s * g2), (g2, c * g2 - s * g1)]
    rows = np.empty((3, 16))
    for k, (beta, delta) in enumerate(pairs):
        rows[k] = np.concatenate([h_rmul(n1, qmul(beta, p)), h_rmul(n2, delta)])
        if g is not None:
            rows[k] = sp2.act_vec("gm_2m1", g, rows[k])
    return rows


class MetricForm:
    """Evaluates one stage metric; immutable after construction."""

    def __init__(self, cfg):
        self.cfg = cfg
        self._cache = {}
        self._rho = None

    def conf_rho(self):
        """Calibration constant of the conformal exponent.

        The exponent is f = C - rho (s^2/nu^2) psi^2 + E.  The Hessian
        term |W_gamma|^2 Hess_f(zeta, zeta) must cancel the s^2 part of
        the scaled-fiber curvature of the vanishing planes, which pins
        rho = nu^2 w_h^2 / (2 |W_gamma|^2).  The leading value is 1; the
        row-action deformation shifts it by a few percent, uniformly
        along the meridians, so one reference plane calibrates it.
        """
        if self._rho is not None:
            return self._rho
        cfg = self.cfg
        if cfg.s == 0 or not cfg.nu_on:
            self._rho = 1.0
            return self._rho
        from .quat import I as QI
        from .zero_locus import zero_plane_at
        from . import psi_analytic as pa

        try:
            scfg = cfg.at_stage("s")
            ncfg = cfg.at_stage("nul")
            sform = form_for(scfg)
            params = cfg.psi_params
            t_ref = np.geomspace(max(5e-3, cfg.t_min), 0.3, 8)
            rhos = np.empty(len(t_ref))
            weights = np.empty(len(t_ref))
            for i, t in enumerate(t_ref):
                zp = zero_plane_at((float(t), 0.0, QI), ncfg)
                wh = pa.w_h_at(zp, ncfg)
                q = zp.point
                dv = self._delta_for_point(q)
                nd = sform.eval(q, dv, dv)
                co = sform.eval(q, zp.w_vec, dv) / nd
                wg = zp.w_vec - co * dv
                wg2 = sform.eval(q, wg, wg)
                rhos[i] = cfg.nu ** 2 * wh ** 2 / (2.0 * wg2)
                pv = pa.psi(float(t), 0.0, params)
                weights[i] = abs(pv.psi_t ** 2 + pv.psi * pv.psi_tt)
            # pick the constant minimizing the weighted worst-case
            # cancellation defect along the meridian
            grid = np.linspace(rhos.min(), rhos.max(), 201)
            defect = [np.max(weights * np.abs(rhos - r)) for r in grid]
            self._rho = float(grid[int(np.argmin(defect))])
        except Exception:
            self._rho = 1.0
        return self._rho

    @staticmethod
    def _delta_for_point(point):
        t, th, al, p, g = sp2.decompose(point)
        n1, n2, _, _ = sp2._n_pair(t, th, al)
        v = np.concatenate([h_rmul(n1, qmul(al, p)), h_rmul(n2, al)])
        if g is not None:
            v = sp2.act_vec("gm_2m1", g, v)
        return v

    # -- context ------------------------------------------------------------

    def context(self, point):
        key = point.key()
        ctx = self._cache.get(key)
        if ctx is None:
            ctx = self._build(point)
            if len(self._cache) > 4096:
                self._cache.clear()
            self._cache[key] = ctx
        return ctx

    def _build(self, point):
        cfg = self.cfg
        d = cfg.depth
        ctx = _Context()
        ctx.point = point
        if d >= 1 and cfg.nu_on:
            ctx.vbasis = _vertical_onb(point)
        else:
            ctx.vbasis = None
        ctx.zperp = None
        ctx.phi2m1 = 0.0
        if d >= 2 or d >= 4 or d >= 5:
            # coordinates are needed by redistribution, fiber scaling
            # diagnostics and the conformal factor
            try:
                t, th, al, p, g = sp2.decompose(point)
                ctx.t, ctx.theta, ctx.alpha, ctx.p, ctx.g = t, th, al, p, g
            except sp2.PoleError:
                if d >= 2 and cfg.redistribute and cfg.nu_on:
                    raise
                ctx.t = ctx.theta = ctx.alpha = ctx.p = ctx.g = None
        if d >= 2 and cfg.redistribute and cfg.nu_on and cfg.profile is not None:
            phi = cfg.profile.value(ctx.t)
            if abs(phi * phi - 1.0) > 1e-300:
                ctx.phi2m1 = phi * phi - 1.0
                raw = _zperp_raw(ctx)
                ctx.zperp = self._orthonormalize(point, raw, depth=1)
        if d >= 3 and cfg.l_on:
            gens = np.vstack([sp2.orbit_basis("u", point),
                              sp2.orbit_basis("d", point)])
            ctx.ud_orbits = gens
            P = self._gram(ctx, gens, gens, 2)
            M = cfg.l ** 2 * np.eye(6) + P
            ctx.ud_factor = cho_factor(M)
        else:
            ctx.ud_orbits = None
        if d >= 4 and cfg.s > 0:
            ctx.vert = self._gm_vertical_basis(point)
            Gv = self._gram(ctx, ctx.vert, ctx.vert, 3)
            ctx.vert_factor = cho_factor(Gv)
        else:
            ctx.vert = None
        if d >= 5:
            if ctx.t is None or ctx.t < cfg.t_min:
                raise DomainError(
                    f"conformal stage needs t >= t_min (t={ctx.t})")
            ctx.y = sp2.gm_projection(point)
            ctx.f_val = self._f_value(ctx)
            delta = self._delta_vector(ctx)
            n2 = self._gram(ctx, delta[None, :], delta[None, :], 4)[0, 0]
            ctx.delta_unit = delta / np.sqrt(n2)
        if d >= 6 and (np.isfinite(cfg.l_diag) or np.isfinite(cfg.l_h1)):
            blocks = []
            scales = []
            if np.isfinite(cfg.l_diag):
                blocks.append(sp2.orbit_basis("diag_ud", point))
                scales += [cfg.l_diag ** 2] * 3
            if np.isfinite(cfg.l_h1):
                blocks.append(sp2.orbit_basis("h1", point))
                scales += [cfg.l_h1 ** 2] * 3
            gens = np.vstack(blocks)
            ctx.fin_orbits = gens
            P = self._gram(ctx, gens, gens, 5)
            M = np.diag(scales) + P
            ctx.fin_factor = cho_factor(M)
        else:
            ctx.fin_orbits = None
        return ctx

    def _orthonormalize(self, point, rows, depth):
        ctx_min = _Context()
        ctx_min.vbasis = _vertical_onb(point) if self.cfg.nu_on else None
        out = rows.copy()
        for i in range(len(out)):
            for j in range(i):
                out[i] -= out[j] * self._gram(ctx_min, out[j][None],
                                              out[i][None], depth)[0, 0]
            n = self._gram(ctx_min, out[i][None], out[i][None], depth)[0, 0]
            out[i] /= np.sqrt(n)
        return out

    def _gm_vertical_basis(self, point):
        J = sp2.tangent_basis_matrix(point)
        _, sv, vt = np.linalg.svd(J)
        tb = vt[6:]                      # (10, 16) tangent basis
        M = sp2.gm_jacobian(point, tb)   # (10, 5)
        _, sv2, vt2 = np.linalg.svd(M.T)
        coeff = vt2[4:]                  # (6, 10)
        return coeff @ tb

    def _f_value(self, ctx):
        cfg = self.cfg
        psq = psi_analytic.psi_sq_from_s4(ctx.y, cfg.psi_params)
        u = np.clip(4.0 * float(np.dot(ctx.y, S4_POLE)), -1.0, 1.0)
        r = 0.5 * np.arccos(u)
        return (cfg.conf_c - self.conf_rho() * cfg.s ** 2 / cfg.nu ** 2 * psq
                + cfg.bump.value(r))

    def _delta_vector(self, ctx):
        n1, n2, _, _ = sp2._n_pair(ctx.t, ctx.theta, ctx.alpha)
        v = np.concatenate([h_rmul(n1, qmul(ctx.alpha, ctx.p)),
                            h_rmul(n2, ctx.alpha)])
        if ctx.g is not None:
            v = sp2.act_vec("gm_2m1", ctx.g, v)
        return v

    # -- gram ----------------------------------------------------------------

    def _gram(self, ctx, A, B, depth):
        cfg = self.cfg
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        G = 0.5 * (A @ B.T)
        if depth >= 1 and ctx.vbasis is not None:
            CA = 0.5 * (ctx.vbasis @ A.T)
            CB = 0.5 * (ctx.vbasis @ B.T)
            G = G + (2.0 * cfg.nu ** 2 - 1.0) * (CA.T @ CB)
        if depth >= 2 and ctx.zperp is not None:
            scale = 2.0 * cfg.nu ** 2 if ctx.vbasis is not None else 1.0
            DA = scale * 0.5 * (ctx.zperp @ A.T)
            DB = scale * 0.5 * (ctx.zperp @ B.T)
            G = G + ctx.phi2m1 * (DA.T @ DB)
        if depth >= 3 and ctx.ud_orbits is not None:
            mA = self._gram(ctx, ctx.ud_orbits, A, 2)
            mB = mA if B is A else self._gram(ctx, ctx.ud_orbits, B, 2)
            G = G - mA.T @ cho_solve(ctx.ud_factor, mB)
        if depth >= 4 and ctx.vert is not None:
            wA = self._gram(ctx, ctx.vert, A, 3)
            wB = wA if B is A else self._gram(ctx, ctx.vert, B, 3)
            G = G - cfg.s ** 2 * (wA.T @ cho_solve(ctx.vert_factor, wB))
        if depth >= 5:
            uA = self._gram(ctx, ctx.delta_unit[None, :], A, 4)[0]
            uB = uA if B is A else self._gram(ctx, ctx.delta_unit[None, :],
                                              B, 4)[0]
            e2f = np.exp(2.0 * ctx.f_val)
            G = e2f * (G - np.outer(uA, uB)) + np.outer(uA, uB)
        if depth >= 6 and ctx.fin_orbits is not None:
            mA = self._gram(ctx, ctx.fin_orbits, A, 5)
            mB = mA if B is A else self._gram(ctx, ctx.fin_orbits, B, 5)
            G = G - mA.T @ cho_solve(ctx.fin_factor, mB)
        return G

    def gram(self, point, V, W=None):
        ctx = self.context(point)
        if W is None:
            V = np.atleast_2d(np.asarray(V, dtype=float))
            return self._gram(ctx, V, V, self.cfg.depth)
        return self._gram(ctx, V, W, self.cfg.depth)

    def eval(self, point, X, Y):
        return float(self.gram(point, X[None, :], Y[None, :])[0, 0])


_FORMS = {}


def form_for(cfg):
    key = cfg.key()
    f = _FORMS.get(key)
    if f is None:
        f = MetricForm(cfg)
        if len(_FORMS) > 64:
            _FORMS.clear()
        _FORMS[key] = f
    return f


def metric_eval(cfg, point, X, Y):
    """The active stage metric as a bilinear form."""
    return form_for(cfg).eval(point, X, Y)


def metric_gram(cfg, point, V, W=None):
    return form_for(cfg).gram(point, V, W)


# --- convention map for the row-action deformation --------------------------

def ud_moments(cfg, point, X):
    """m_X: pairings of X with the six row-action generators under the
    pre-row-action metric."""
    f = form_for(cfg)
    ctx = f.context(point)
    if ctx.ud_orbits is None:
        return None
    return f._gram(ctx, ctx.ud_orbits, X[None, :], 2)[:, 0]


def ud_reparam(cfg, point, X):
    """Convention map X -> X + sigma_{m_X / l^2}; identity below the
    row-action stage."""
    if cfg.depth < 3 or not cfg.l_on:
        return X
    f = form_for(cfg)
    ctx = f.context(point)
    m = f._gram(ctx, ctx.ud_orbits, X[None, :], 2)[:, 0]
    return X + (m / cfg.l ** 2) @ ctx.ud_orbits


def conv_norm_sq(cfg, point, X):
    """|X~|^2 = g_pre(X, X) + |m_X|^2 / l^2 for the convention vector."""
    f = form_for(cfg)
    ctx = f.context(point)
    g0 = f._gram(ctx, X[None, :], X[None, :], 2)[0, 0]
    if ctx.ud_orbits is None:
        return g0
    m = f._gram(ctx, ctx.ud_orbits, X[None, :], 2)[:, 0]
    return g0 + float(np.dot(m, m)) / cfg.l ** 2


# --- submersion helpers ------------------------------------------------------

def gm_vertical_basis(cfg, point):
    """Basis of ker d(gm_projection) in the tangent space (6 rows)."""
    return form_for(cfg)._gm_vertical_basis(point)


def gm_vertical_part(cfg, point, X):
    f = form_for(cfg)
    B = f._gm_vertical_basis(point)
    G = f.gram(point, B)
    w = f.gram(point, B, X[None, :])[:, 0]
    return np.linalg.solve(G, w) @ B


def gm_horizontal_part(cfg, point, X):
    return X - gm_vertical_part(cfg, point, X)


def sigma_vertical_part(cfg, point, X):
    """Projection onto the quotient-action orbit tangents (3-dim)."""
    f = form_for(cfg)
    B = sp2.orbit_basis("gm_2m1", point)
    G = f.gram(point, B)
    w = f.gram(point, B, X[None, :])[:, 0]
    return np.linalg.solve(G, w) @ B


def sigma_horizontal_part(cfg, point, X):
    return X - sigma_vertical_part(cfg, point, X)


def psi_numeric(cfg, point, gamma=None):
    """|(0, vartheta/2)^horiz| under the active metric."""
    fr = sp2.frame_at(point)
    if gamma is None:
        gamma = fr.gamma1
    n = sp2.decompose(point)
    t, th, al, p, g = n
    _, n2, _, _ = sp2._n_pair(t, th, al)
    k = 0.5 * np.concatenate([np.zeros(8), h_rmul(n2, gamma)])
    if g is not None:
        k = sp2.act_vec("gm_2m1", g, k)
    kh = gm_horizontal_part(cfg, point, k)
    return float(np.sqrt(metric_eval(cfg, point, kh, kh)))


# --- generic constructions (used as oracles and by stage tests) -------------

def cheeger_eval(base_gram, actions, point, X, Y):
    """Quotient metric of a product Cheeger construction.

    base_gram(point, rows) evaluates the metric being deformed; actions
    is a list of (action_name, scale).  With orbit operator P and
    moments m the result is g(X,Y) - m_X^T (l^2 I + P)^{-1} m_Y.
    """
    gens = np.vstack([sp2.orbit_basis(name, point) for name, _ in actions])
    scales = np.concatenate([[l ** 2] * 3 for _, l in actions])
    P = base_gram(point, gens)
    M = np.diag(scales) + P
    cond = np.linalg.cond(M)
    if cond > 1e12:
        raise DomainError(f"orbit system ill-conditioned: cond={cond:.3g}")
    rows = np.vstack([X, Y])
    m = base_gram(point, gens, rows)
    g = base_gram(point, rows)
    corr = m.T @ np.linalg.solve(M, m)
    return float(g[0, 1] - corr[0, 1])


def fiber_scale_eval(base_gram, s, point, X, Y):
    """g_s(X,Y) = g(X,Y) - s^2 g(X^V, Y^V) with V = ker d(gm_projection)."""
    J = sp2.tangent_basis_matrix(point)
    _, _, vt = np.linalg.svd(J)
    tb = vt[6:]
    M = sp2.gm_jacobian(point, tb)
    _, _, vt2 = np.linalg.svd(M.T)
    B = vt2[4:] @ tb
    G = base_gram(point, B)
    rows = np.vstack([X, Y])
    w = base_gram(point, B, rows)
    g = base_gram(point, rows)
    corr = w.T @ np.linalg.solve(G, w)
    return float(g[0, 1] - s ** 2 * corr[0, 1])


def conformal_f(cfg, point):
    """(f, grad f) for the partial conformal factor at the point.

    grad f is taken with respect to the fiber-scaled metric, assembled
    from the exact chain rule through the S^4 projection.
    """
    f = form_for(cfg.at_stage("new") if cfg.depth < 5 else cfg)
    ctx = f.context(point)
    fval = ctx.f_val
    params = cfg.psi_params
    y = ctx.y
    # d(psi^2) and d(dist) as linear functionals of dy
    grad_psq = _psi_sq_s4_grad(y, params)
    u = np.clip(4.0 * float(np.dot(y, S4_POLE)), -1.0, 1.0)
    r = 0.5 * np.arccos(u)
    if abs(u) >= 1.0 - 1e-14:
        grad_r = np.zeros(5)
    else:
        grad_r = -0.5 / np.sqrt(1.0 - u * u) * 4.0 * S4_POLE
    iprime = cfg.bump.first(r)
    rho = f.conf_rho()
    fr = sp2.frame_at(point)
    df = np.empty(10)
    for i, v in enumerate(fr.vectors):
        dy = sp2.gm_differential(point, v)
        df[i] = (-rho * cfg.s ** 2 / cfg.nu ** 2 * float(np.dot(grad_psq, dy))
                 + iprime * float(np.dot(grad_r, dy)))
    scfg = cfg.at_stage("s")
    G = metric_gram(scfg, point, fr.vectors)
    coeff = np.linalg.solve(G, df)
    return fval, coeff @ fr.vectors


def _psi_sq_s4_grad(y, params):
    y0, yr = y[0], y[4]
    im = y[1:4]
    imsq = float(np.dot(im, im))
    num = imsq
    den = (4.0 * (y0 ** 2 + yr ** 2) + 2.0 * y0 ** 2 / params.l ** 2
           + 4.0 * imsq / params.nu_l_sq)
    dnum = np.array([0.0, 2 * im[0], 2 * im[1], 2 * im[2], 0.0])
    dden = np.array([8.0 * y0 + 4.0 * y0 / params.l ** 2,
                     8.0 * im[0] / params.nu_l_sq,
                     8.0 * im[1] / params.nu_l_sq,
                     8.0 * im[2] / params.nu_l_sq,
                     8.0 * yr])
    return (dnum * den - num * dden) / den ** 2


def stage_invariance_check(cfg, n_samples=30, seed=7,
                           actions=("gm_2m1", "h2")):
    """Max metric-invariance residual over random samples and actions."""
    from . import rng

    worst = 0.0
    for i in range(n_samples):
        t = 0.05 + 0.8 * (np.pi / 4 - 0.1) * rng.uniform(seed, i, 0)[0]
        th = 0.1 + (np.pi - 0.2) * rng.uniform(seed, i, 1)[0]
        al = rng.unit_imaginary_quat(seed, i, 2)
        p = rng.unit_quat(seed, i, 8)
        q = sp2.representative_point(t, th, al, p)
        X = sp2.tangent_project(q, rng.normal(seed, i, 20, 16))
        Y = sp2.tangent_project(q, rng.normal(seed, i, 40, 16))
        X /= np.sqrt(sp2.b_inner(X, X))
        Y /= np.sqrt(sp2.b_inner(Y, Y))
        base = metric_eval(cfg, q, X, Y)
        for k, name in enumerate(actions):
            g = rng.unit_quat(seed, 1000 + i, 60 + 4 * k)
            q2 = sp2.act(name, g, q)
            X2 = sp2.act_vec(name, g, X)
            Y2 = sp2.act_vec(name, g, Y)
            val = metric_eval(cfg, q2, X2, Y2)
            worst = max(worst, abs(val - base) / max(1.0, abs(base)))
    return worst
