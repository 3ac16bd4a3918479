"""Closed-form scalar functions of (t, theta) and the Cheeger scales.

psi is the length of the horizontal part of the Killing field
(0, vartheta/2); its square is the intrinsic radius-squared of the
principal 2-sphere orbits in the base S^4.  All first and second
partials are implemented in closed form; finite differences only ever
appear as test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sp2
from .quat import hsplit, qim, qnorm


@dataclass(frozen=True)
class PsiParams:
    nu: float     # vertical Cheeger scale of the h1 + h2 deformation
    l: float      # scale of the row-action Cheeger deformation

    def __post_init__(self):
        if not (self.nu > 0):
            raise ValueError("nu must be positive")
        if not (self.l > 0):
            raise ValueError("l must be positive")

    @property
    def nu_l_sq(self):
        # 1/nu_l^2 = 1/nu^2 + 1/(2 l^2)
        return 1.0 / (1.0 / self.nu ** 2 + 1.0 / (2.0 * self.l ** 2))

    @property
    def nu_l(self):
        return float(np.sqrt(self.nu_l_sq))


@dataclass
class PsiValue:
    psi: float
    psi_t: float
    psi_theta: float
    psi_tt: float
    psi_ttheta: float
    psi_thetatheta: float


def x20_norm_sq(theta, params):
    """Convention norm of x20 after the row-action deformation."""
    return 1.0 + np.sin(2 * theta) ** 2 / (2.0 * params.l ** 2)


def eta_norm_sq(t, theta, params):
    """Convention norm-squared of (cos 2t) eta^{2,0}.

    Two algebraically equal groupings exist; the second,
    |x20|^2 cos^2 2t + sin^2 2t / nu_l^2, is what the psi partials use.
    """
    c2t = np.cos(2 * t)
    s2t = np.sin(2 * t)
    return (c2t ** 2 + s2t ** 2 / params.nu ** 2
            + (1.0 - c2t ** 2 * np.cos(2 * theta) ** 2) / (2.0 * params.l ** 2))


def psi(t, theta, params):
    """psi = (1/2) sin 2t / |cos 2t eta^{2,0}| and all of its partials."""
    c2t, s2t = np.cos(2 * t), np.sin(2 * t)
    s4th, c4th = np.sin(4 * theta), np.cos(4 * theta)
    xsq = x20_norm_sq(theta, params)
    inl2 = 1.0 / params.nu_l_sq
    nsq = xsq * c2t ** 2 + inl2 * s2t ** 2
    n1 = np.sqrt(nsq)
    n3 = nsq * n1
    n5 = nsq * nsq * n1
    l2 = params.l ** 2
    val = 0.5 * s2t / n1
    p_t = xsq * c2t / n3
    p_th = -(0.25 / l2) * s2t * c2t ** 2 * s4th / n3
    p_tt = -xsq * (s2t / n5) * (-4.0 * xsq * c2t ** 2 + 2.0 * inl2
                                + 4.0 * inl2 * c2t ** 2)
    p_tth = (c2t * s4th / (l2 * n5)) * (-0.5 * xsq * c2t ** 2 + inl2 * s2t ** 2)
    p_thth = (-(s2t * c2t ** 2 / l2) * c4th * (xsq * c2t ** 2 + inl2 * s2t ** 2) / n5
              + 1.5 * (s2t * c2t ** 4 / (4.0 * l2 ** 2)) * s4th ** 2 / n5)
    return PsiValue(val, p_t, p_th, p_tt, p_tth, p_thth)


def psi_sq_from_s4(y, params):
    """psi^2 as a smooth function of the S^4 point (no coordinate poles).

    With y = (y_q, y_r), |Im y_q| = sin(2t)/2, 2*sqrt(y_q0^2+y_r^2) = cos 2t
    and 2 y_q0 = sin 2theta cos 2t, all terms of |cos 2t eta|^2 are
    polynomial in y.
    """
    y0 = y[0]
    im = qim(y[:4])
    imsq = float(np.dot(im, im))
    yr = y[4]
    denom = (4.0 * (y0 ** 2 + yr ** 2) + 2.0 * y0 ** 2 / params.l ** 2
             + 4.0 * imsq / params.nu_l_sq)
    if denom <= 0:
        return 0.0
    return imsq / denom


def L(t, theta):
    """Zero-locus gauge; the sublevel set L <= 1 carries the zero planes.

    L = 2 cos2t sin2th / sqrt(sin^2 2th + sin^2 2t cos^2 2th), set to 0
    at the two coordinate poles.
    """
    s2th = np.sin(2 * theta)
    c2th = np.cos(2 * theta)
    s2t = np.sin(2 * t)
    d2 = s2th ** 2 + s2t ** 2 * c2th ** 2
    if d2 <= 1e-30:
        return 0.0
    return 2.0 * np.cos(2 * t) * s2th / np.sqrt(d2)


def l_boundary_t(theta):
    """t with L(t, theta) = 1; closed form cos 2t = 1/sqrt(1 + 3 sin^2 2th)."""
    s2 = np.sin(2 * theta) ** 2
    return 0.5 * np.arccos(1.0 / np.sqrt(1.0 + 3.0 * s2))


# --- directional derivatives along a tangent field --------------------------

def coordinate_rates(point, X):
    """(dt(X), dtheta(X)) for an ambient tangent vector X, via the S^4 map."""
    y = sp2.gm_projection(point)
    dy = sp2.gm_differential(point, X)
    y0, yr = y[0], y[4]
    im = qim(y[:4])
    m = qnorm(im)
    rho = np.hypot(y0, yr)
    dy0, dyr = dy[0], dy[4]
    dim = qim(dy[:4])
    if m <= 1e-12:
        raise sp2.PoleError("coordinate rates undefined: sin(2t) ~ 0")
    dm = float(np.dot(im, dim)) / m
    drho = (y0 * dy0 + yr * dyr) / rho if rho > 1e-15 else 0.0
    # t = (1/2) atan2(m, rho), m^2 + rho^2 = 1/4
    dt = 2.0 * (rho * dm - m * drho)
    dtheta = 0.5 * (-yr * dy0 + y0 * dyr) / (rho * rho) if rho > 1e-12 else 0.0
    return dt, dtheta


def directional_psi(point, zeta, params, h=1e-4):
    """(D_zeta psi, D_zeta D_zeta psi) along the flow of the given field.

    First derivative by the exact chain rule through the coordinate
    rates; the second adds the flow acceleration of the rates, obtained
    from one short Runge-Kutta step of the field (the only numerical
    ingredient, with step extrapolation).
    """
    from .zero_locus import flow_step  # local: avoids a cycle

    def first(pt):
        fr = sp2.frame_at(pt)
        z = sp2.zeta_at(pt, frame=fr)
        dt, dth = coordinate_rates(pt, z)
        pv = psi(fr.t, fr.theta, params)
        return pv.psi_t * dt + pv.psi_theta * dth

    fr = sp2.frame_at(point)
    dt, dth = coordinate_rates(point, zeta)
    pv = psi(fr.t, fr.theta, params)
    d1 = pv.psi_t * dt + pv.psi_theta * dth

    def d2_at(step):
        plus = flow_step(point, step)
        minus = flow_step(point, -step)
        return (first(plus) - first(minus)) / (2.0 * step)

    a, b = d2_at(h), d2_at(h / 2.0)
    d2 = (4.0 * b - a) / 3.0
    return d1, d2


def w_h_at(plane, cfg):
    """Coefficient w_h with H_w = w_h (0, vartheta/2)^horiz.

    plane carries the point and the W vector; the Killing direction is
    read off W's second-factor gamma component.  Undefined when psi is
    numerically zero (t -> 0).
    """
    from .metric_pipeline import gm_horizontal_part, metric_eval

    point, W = plane.point, plane.w_vec
    fr = plane.frame if plane.frame is not None else sp2.frame_at(point)
    e1 = fr.vectors[8] / sp2.SQRT2   # (0, N2 gamma1)
    e2 = fr.vectors[9] / sp2.SQRT2   # (0, N2 gamma2)
    c1 = sp2.b_inner(W, e1) / 0.5
    c2 = sp2.b_inner(W, e2) / 0.5
    gnorm = np.hypot(c1, c2)
    if gnorm < 1e-12:
        raise ValueError("W has no gamma component; w_h undefined")
    k = 0.5 * (c1 * e1 + c2 * e2) / gnorm       # (0, vartheta/2)
    kh = gm_horizontal_part(cfg, point, k)
    psi_sq = metric_eval(cfg, point, kh, kh)
    if psi_sq < 1e-20:
        raise ValueError("psi numerically zero; w_h undefined")
    return metric_eval(cfg, point, W, kh) / psi_sq
