"""Zero-curvature planes, the vanishing-locus machinery, and meridian flows.

A plane span{zeta, W} has zero sectional curvature for the metric before
fiber scaling exactly when W solves the circle-ellipse intersection: with
L the locus gauge, (cos lam, sin lam) sits on the unit circle and on the
ellipse sigma -> (cos sigma / 2, sin sigma / L).  The horizontality of W
for the quotient submersion pins the fiber coordinate p through the
conjugacy condition conj(p) beta p = 2 cos(lam) alpha + v.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import metric_pipeline as mp
from . import psi_analytic as pa
from . import sp2
from .quat import axis_align, gamma_pair, h_rmul, qmul, qnorm


class NoZeroPlaneError(ValueError):
    pass


def lambda_from_L(Lval):
    """First-quadrant intersection of the unit circle with the ellipse.

    Closed form cos^2 lam = (1 - L^2)/(4 - L^2), sin^2 lam = 3/(4 - L^2);
    no intersection for L > 1.
    """
    if Lval < 0 or Lval > 1:
        raise NoZeroPlaneError(f"circle and ellipse do not intersect: L={Lval}")
    coslam = np.sqrt((1.0 - Lval ** 2) / (4.0 - Lval ** 2))
    sinlam = np.sqrt(3.0 / (4.0 - Lval ** 2))
    return coslam, sinlam


def lambda_rootfind(Lval):
    """Independent 1-d root-finder oracle for the intersection angle."""
    from scipy.optimize import brentq

    if Lval < 1e-15:
        return 0.5, np.sqrt(3.0) / 2.0
    if Lval > 1:
        raise NoZeroPlaneError("no intersection")

    def fun(sig):
        return (np.cos(sig) / 2.0) ** 2 + (np.sin(sig) / Lval) ** 2 - 1.0

    # cos lam = cos sig / 2 >= 0 and sin lam = sin sig / L >= 0
    sig = brentq(fun, 0.0, np.pi / 2.0, xtol=1e-15, rtol=8.9e-16)
    return np.cos(sig) / 2.0, np.sin(sig) / Lval


@dataclass
class ZeroPlaneSpec:
    """One constructed vanishing plane and its diagnostics."""

    point: sp2.Sp2Point
    zeta: np.ndarray            # convention-mapped for the active stage
    w_vec: np.ndarray           # convention-mapped W
    w_raw: np.ndarray           # frame-form W before the convention map
    branch_phi: float
    lam: float                  # the ellipse angle
    psi_angle: float            # pi - 2 phi
    beta: np.ndarray
    delta: np.ndarray
    frame: object = None
    horizontality_residual: float = 0.0
    curvature_residual: float | None = None


def zero_plane_at(point_or_coords, cfg, chi=0.0, branch_phi=None,
                  compute_residual=False, sign=1.0):
    """Construct the vanishing plane over the given locus point.

    Accepts an Sp2Point (whose fiber coordinate is realigned to satisfy
    the conjugacy condition) or a coordinate tuple (t, theta, alpha).
    chi is the free phase of the gamma pair; branch_phi overrides the
    canonical direction at the poles.  Raises NoZeroPlaneError outside
    the locus (L > 1, equivalently 2 cos2t |sin phi| > 1).
    """
    if isinstance(point_or_coords, sp2.Sp2Point):
        t, th, alpha, _ = sp2.coords_from_point(point_or_coords)
    else:
        t, th, alpha = point_or_coords
    g1, g2 = gamma_pair(alpha)
    gd1 = np.cos(chi) * g1 + np.sin(chi) * g2
    gd2 = qmul(alpha, gd1)
    if branch_phi is None:
        phi = sp2.zeta_branch_angle(t, th)
    else:
        phi = branch_phi
    psit = np.pi - 2.0 * phi
    l_eff = 2.0 * np.cos(2.0 * t) * abs(np.sin(phi))
    coslam, sinlam = lambda_from_L(l_eff)
    gdd = np.cos(psit) * gd1 + np.sin(psit) * gd2
    beta = coslam * alpha + sinlam * gd1
    delta = coslam * alpha + sinlam * gdd
    target = 2.0 * coslam * alpha + np.cos(2.0 * t) * sinlam * (gd1 + gdd)
    nt = qnorm(target)
    if abs(nt - 1.0) > 1e-9:
        raise NoZeroPlaneError(f"conjugacy target not unit: |target|={nt}")
    p = axis_align(beta, target)
    q = sp2.representative_point(t, th, alpha, p)
    n1, n2, _, _ = sp2._n_pair(t, th, alpha)
    w_raw = sign * np.concatenate([h_rmul(n1, qmul(beta, p)),
                                   h_rmul(n2, delta)]) / cfg.nu ** 2
    fr = sp2.frame_at(q)
    zeta_raw = sp2.zeta_at(q, branch_phi=branch_phi, frame=fr)
    w_vec = mp.ud_reparam(cfg, q, w_raw)
    zeta = mp.ud_reparam(cfg, q, zeta_raw)
    sig_basis = sp2.orbit_basis("gm_2m1", q)
    res_h = max(abs(mp.metric_eval(cfg, q, w_vec, s)) for s in sig_basis)
    res_h /= mp.metric_eval(cfg, q, w_vec, w_vec)
    zp = ZeroPlaneSpec(q, zeta, w_vec, w_raw, phi, float(np.arccos(coslam)),
                       psit, beta, delta, frame=fr,
                       horizontality_residual=res_h)
    if compute_residual:
        from . import curvature as cv
        nw = np.sqrt(mp.metric_eval(cfg, q, w_vec, w_vec))
        nz = np.sqrt(mp.metric_eval(cfg, q, zeta, zeta))
        zp.curvature_residual = cv.curv_pair(cfg, q, zeta / nz, w_vec / nw)
    return zp


def w_family_at(point, cfg, n=8, include_alpha=False, seed_chi=0.0):
    """Sampler over the multivalued vanishing family at the point.

    Over locus points the family contains the horizontal construction
    for every gamma phase; elsewhere the returned vectors have beta and
    delta in the gamma plane (the null directions that are never
    horizontal).  Every member kills curv(zeta, .) for the pre-scaling
    metric.
    """
    t, th, alpha, p = sp2.coords_from_point(point)
    phi = sp2.zeta_branch_angle(t, th)
    psit = np.pi - 2.0 * phi
    l_eff = 2.0 * np.cos(2.0 * t) * abs(np.sin(phi))
    g1, g2 = gamma_pair(alpha)
    out = []
    n1, n2, _, _ = sp2._n_pair(t, th, alpha)
    _, _, _, _, gtw = sp2.decompose(point)
    for k in range(n):
        chi = seed_chi + 2.0 * np.pi * k / n
        gd1 = np.cos(chi) * g1 + np.sin(chi) * g2
        gd2 = qmul(alpha, gd1)
        gdd = np.cos(psit) * gd1 + np.sin(psit) * gd2
        if l_eff <= 1.0:
            coslam, sinlam = lambda_from_L(l_eff)
        else:
            coslam, sinlam = (0.0, 1.0) if not include_alpha else (0.0, 1.0)
        beta = coslam * alpha + sinlam * gd1
        delta = coslam * alpha + sinlam * gdd
        w = np.concatenate([h_rmul(n1, qmul(beta, p)),
                            h_rmul(n2, delta)]) / cfg.nu ** 2
        if gtw is not None:
            w = sp2.act_vec("gm_2m1", gtw, w)
        out.append((sp2.zeta_at(point), mp.ud_reparam(cfg, point, w)))
    return out


# --- meridian flow -----------------------------------------------------------

def flow_step(point, h, branch_phi=None):
    """One Runge-Kutta step of the zeta field with re-projection."""
    def f(pt):
        return sp2.zeta_at(pt, branch_phi=branch_phi)

    k1 = f(point)
    p2 = sp2.project_to_sp2(point.amb + 0.5 * h * k1)
    k2 = f(p2)
    p3 = sp2.project_to_sp2(point.amb + 0.5 * h * k2)
    k3 = f(p3)
    p4 = sp2.project_to_sp2(point.amb + h * k3)
    k4 = f(p4)
    step = (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    out = sp2.project_to_sp2(point.amb + step)
    drift = np.linalg.norm(out.amb - (point.amb + step))
    if drift > 1e-6 * max(1.0, abs(h)):
        raise RuntimeError(f"projection moved flow point by {drift:.2e}")
    return out


@dataclass
class MeridianPath:
    points: list
    arclength: np.ndarray
    t_values: np.ndarray
    theta_values: np.ndarray
    psi_values: np.ndarray
    w_h_values: np.ndarray


def meridian_flow(start, cfg, n_steps=64, t_stop=None, record_w_h=False,
                  chi=0.0):
    """Integrate the zeta field from the start point.

    Terminates when t reaches pi/4 (the maximum of psi on the theta = 0
    branch) or after n_steps; samples coordinates, psi and, on request,
    the Killing coefficient of the constructed vanishing plane.
    """
    t_stop = np.pi / 4 - 1e-6 if t_stop is None else t_stop
    t0, th0, _, _ = sp2.coords_from_point(start)
    h = (t_stop - t0) / n_steps
    params = cfg.psi_params
    pts = [start]
    svals = [0.0]
    q = start
    for _ in range(n_steps):
        tq, _, _, _ = sp2.coords_from_point(q)
        step = min(h, t_stop - tq)
        if step <= 1e-12:
            break
        q = flow_step(q, step)
        pts.append(q)
        svals.append(svals[-1] + step)
    tv, thv, psiv, whv = [], [], [], []
    for ptn in pts:
        t, th, _, _ = sp2.coords_from_point(ptn)
        tv.append(t)
        thv.append(th)
        psiv.append(pa.psi(t, th, params).psi)
        if record_w_h:
            zp = zero_plane_at(ptn, cfg, chi=chi)
            whv.append(pa.w_h_at(zp, cfg))
    return MeridianPath(pts, np.array(svals), np.array(tv), np.array(thv),
                        np.array(psiv),
                        np.array(whv) if record_w_h else np.empty(0))
