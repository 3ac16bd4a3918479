"""Sectional-curvature scans over points and horizontal 2-planes.

Work is partitioned by (t, theta) grid cell; each cell is keyed into the
counter RNG so record streams are byte-identical regardless of worker
count.  Per point the full curvature tensor and the integrability
tensor on a basis are computed once; every sampled plane is then a cheap
contraction.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import curvature as cv
from . import metric_pipeline as mp
from . import psi_analytic as pa
from . import rng, sp2
from . import zero_locus as zl
from .quat import I as QI

CSV_HEADER = ("stage,t,theta,alpha_x,alpha_y,alpha_z,p_w,p_x,p_y,p_z,"
              "pp0,pp1,pp2,pp3,pp4,pp5,pp6,pp7,sec,area,residual")


@dataclass
class ScanSpec:
    cfg: mp.StageConfig
    grid_t: int = 8
    grid_theta: int = 8
    orbit_samples: int = 1       # (alpha, p) draws per cell
    planes_per_point: int = 4
    refine_iters: int = 12
    neighborhood_radius: float = 0.05
    seed: int = 20260809
    t_range: tuple = (0.05, np.pi / 4 - 0.05)
    theta_range: tuple = (0.05, np.pi / 2 - 0.05)

    def __post_init__(self):
        if self.grid_t < 1 or self.grid_theta < 1 or self.planes_per_point < 1:
            raise ValueError("grid and plane counts must be >= 1")
        if self.neighborhood_radius < 0:
            raise ValueError("neighborhood radius must be >= 0")


@dataclass
class CurvatureRecord:
    stage: str
    t: float
    theta: float
    alpha: np.ndarray
    p: np.ndarray
    plane: np.ndarray            # 8 coefficients in the horizontal basis
    sec: float
    area: float
    residual: float

    def csv_row(self):
        vals = [self.t, self.theta, *self.alpha[1:], *self.p, *self.plane,
                self.sec, self.area, self.residual]
        return self.stage + "," + ",".join("%.17g" % v for v in vals)


def sample_planes(point, cfg, n, seed, cell=0, basis=None):
    """n metric-orthonormal planes in the submersion-horizontal space,
    deterministic given (seed, cell).

    Two standard-normal coefficient vectors orthonormalized against the
    metric give a Haar-uniform plane in the 4-dim horizontal space.
    Returns (X, Y, coeffs) triples where coeffs reproduces X, Y in the
    horizontal basis.
    """
    if basis is None:
        basis = _horizontal_onb(point, cfg)
    G = mp.metric_gram(cfg, point, basis)
    out = []
    for j in range(n):
        c1 = rng.normal(seed, cell, 64 + 16 * j, 4)
        c2 = rng.normal(seed, cell, 64 + 16 * j + 8, 4)
        cx = c1 / math.sqrt(c1 @ G @ c1)
        c2p = c2 - cx * (cx @ G @ c2)
        cy = c2p / math.sqrt(c2p @ G @ c2p)
        out.append((cx @ basis, cy @ basis, np.concatenate([cx, cy])))
    return out


def _horizontal_onb(point, cfg):
    fr = sp2.frame_at(point)
    rows = [mp.gm_horizontal_part(cfg, point, v) for v in fr.vectors[:4]]
    out = []
    for v in rows:
        w = v.copy()
        for o in out:
            w = w - o * mp.metric_eval(cfg, point, o, w)
        out.append(w / math.sqrt(mp.metric_eval(cfg, point, w, w)))
    return np.array(out)


def _cell_points(spec, it, ith):
    t0, t1 = spec.t_range
    th0, th1 = spec.theta_range
    t = t0 + (t1 - t0) * (it + 0.5) / spec.grid_t
    th = th0 + (th1 - th0) * (ith + 0.5) / spec.grid_theta
    cell = it * spec.grid_theta + ith
    pts = []
    for k in range(spec.orbit_samples):
        al = rng.unit_imaginary_quat(spec.seed, cell, 3 * k)
        p = rng.unit_quat(spec.seed, cell, 3 * k + 40)
        pts.append((cell, t, th, al, p))
    return pts


def _scan_cell(args):
    spec, it, ith = args
    cfg = spec.cfg
    records = []
    for (cell, t, th, al, p) in _cell_points(spec, it, ith):
        try:
            q = sp2.representative_point(t, th, al, p)
            basis = _horizontal_onb(q, cfg)
            rd = cv.riemann_point(cfg, q)
            # integrability tensor on basis pairs: every plane reuses it
            Aij = {}
            for a in range(4):
                for b in range(a + 1, 4):
                    Aij[(a, b)] = cv.oneill_A(cfg, q, basis[a], basis[b])
            planes = sample_planes(q, cfg, spec.planes_per_point,
                                   spec.seed, cell)

            def sec_of(cx, cy):
                X = cx @ basis
                Y = cy @ basis
                g = mp.metric_gram(cfg, q, np.vstack([X, Y]))
                area2 = g[0, 0] * g[1, 1] - g[0, 1] ** 2
                if area2 < 1e-14:
                    return None, 0.0
                up = rd.curv(X, Y)
                Avec = np.zeros(16)
                for a in range(4):
                    for b in range(a + 1, 4):
                        Avec = Avec + (cx[a] * cy[b] - cx[b] * cy[a]) \
                            * Aij[(a, b)]
                corr = 3.0 * mp.metric_eval(cfg, q, Avec, Avec)
                return (up + corr) / area2, area2

            best = None
            for (X, Y, coeffs) in planes:
                cx, cy = coeffs[:4], coeffs[4:]
                sec, area2 = sec_of(cx, cy)
                if sec is None:
                    continue
                rec = CurvatureRecord(cfg.stage, t, th, al, p, coeffs,
                                      sec, math.sqrt(area2), rd.sym_residual)
                records.append(rec)
                if best is None or sec < best[0]:
                    best = (sec, cx.copy(), cy.copy())
            # derivative-free coordinate descent on the plane chart
            if best is not None and spec.refine_iters > 0:
                sec, cx, cy = best
                step = 0.25
                for _ in range(spec.refine_iters):
                    improved = False
                    for vec in (cx, cy):
                        for k in range(4):
                            for sgn in (1.0, -1.0):
                                vec[k] += sgn * step
                                new_sec, _ = sec_of(cx, cy)
                                if new_sec is not None and new_sec < sec:
                                    sec = new_sec
                                    improved = True
                                else:
                                    vec[k] -= sgn * step
                    if not improved:
                        step *= 0.5
                    if step < 1e-8:
                        break
                nrm = np.concatenate([cx, cy])
                _, area2 = sec_of(cx, cy)
                records.append(CurvatureRecord(
                    cfg.stage, t, th, al, p, nrm, sec,
                    math.sqrt(max(area2, 0.0)), rd.sym_residual))
        except (sp2.PoleError, mp.DomainError, ValueError) as exc:
            records.append(CurvatureRecord(cfg.stage, t, th, al, p,
                                           np.full(8, np.nan), np.nan, np.nan,
                                           np.nan))
    return (it, ith), records


def min_scan(spec, jobs=1):
    """Scan the grid; returns (summary dict, records in cell order)."""
    cells = [(spec, it, ith) for it in range(spec.grid_t)
             for ith in range(spec.grid_theta)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            raw = list(ex.map(_scan_cell, cells, chunksize=1))
    else:
        raw = [_scan_cell(c) for c in cells]
    raw.sort(key=lambda kv: kv[0])
    records = [r for _, recs in raw for r in recs]
    finite = [r for r in records if np.isfinite(r.sec)]
    if finite:
        best = min(finite, key=lambda r: r.sec)
        summary = {
            "min_sec": best.sec,
            "argmin": {"t": best.t, "theta": best.theta,
                       "stage": best.stage},
            "n_records": len(records),
            "n_failed": len(records) - len(finite),
        }
    else:
        summary = {"min_sec": None, "argmin": None,
                   "n_records": len(records), "n_failed": len(records)}
    return summary, records


def neighborhood_scan(spec, sigma_taus=None, jobs=1):
    """Quadratic-neighborhood scan around constructed vanishing planes.

    For grid cells inside the locus, evaluates the curvature polynomial
    of span{zeta + sigma z, W + tau V} on a log-spaced (sigma, tau) grid
    for the standard perturbation family, and reports the minimum.
    """
    cfg = spec.cfg
    if sigma_taus is None:
        vals = np.concatenate([-np.geomspace(1e-3, 3.0, 7)[::-1], [0.0],
                               np.geomspace(1e-3, 3.0, 7)])
        sigma_taus = vals
    out = []
    for it in range(spec.grid_t):
        t0, t1 = spec.t_range
        t = t0 + (t1 - t0) * (it + 0.5) / spec.grid_t
        if pa.L(t, 0.0) > 1.0:
            continue
        try:
            zp = zl.zero_plane_at((t, 0.0, QI), cfg.at_stage("nul")
                                  if cfg.depth >= 3 else cfg)
            q = zp.point
            rd = cv.riemann_point(cfg, q)
            fr = zp.frame
            xi = mp.ud_reparam(cfg, q, sp2.xi_at(q))
            vb = fr.vectors[4:]
            coef = rng.normal(spec.seed, it, 0, 6)
            V = coef @ vb
            coeffs, z2, V2 = cv.curvature_polynomial(cfg, q, zp.zeta,
                                                     zp.w_vec, xi, V, rd=rd)
            vals = [coeffs.eval(s_, t_) for s_ in sigma_taus
                    for t_ in sigma_taus]
            out.append({"t": t, "min_P": float(min(vals)),
                        "P00": coeffs.c00})
        except (zl.NoZeroPlaneError, sp2.PoleError, mp.DomainError):
            continue
    return out


def records_to_csv(records):
    lines = [CSV_HEADER]
    lines.extend(r.csv_row() for r in records)
    return "\n".join(lines) + "\n"
