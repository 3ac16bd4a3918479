"""Numeric Riemann curvature of the stage metrics.

Charts are built from the adapted frame with an exact (forward-mode)
differential of the manifold retraction, so the only finite differences
are the outer derivatives of the chart metric components; those use
O(h^4) stencils with optional step extrapolation.

Sign convention: R(X,Y)Z = nab_X nab_Y Z - nab_Y nab_X Z - nab_{[X,Y]} Z
and curv(X,W) = R(X,W,W,X) = <R(X,W)W, X>, positive on round spheres.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metric_pipeline as mp
from . import sp2


# --- generic chart machinery -------------------------------------------------

@dataclass
class Chart:
    """Coordinate chart u -> retract(base + u . frame) with pushed frame."""

    base_amb: np.ndarray
    frame: np.ndarray                  # (n, A)
    retract_jvp: object                # (amb, dirs) -> (point, dcs)
    gram: object                       # (point, rows[, rows2]) -> Gram

    def metric_block(self, u, rows_idx=None, cols_idx=None):
        amb = self.base_amb + u @ self.frame
        point, dcs = self.retract_jvp(amb, self.frame)
        if rows_idx is None:
            return self.gram(point, dcs)
        A = dcs[rows_idx]
        B = dcs if cols_idx is None else dcs[cols_idx]
        return self.gram(point, A, B)

    def push(self, u):
        amb = self.base_amb + u @ self.frame
        return self.retract_jvp(amb, self.frame)


def sp2_chart(cfg, point, frame=None):
    fr = frame if frame is not None else sp2.frame_at(point).vectors
    form = mp.form_for(cfg)

    def gram(pt, rows, rows2=None):
        return form.gram(pt, rows, rows2)

    return Chart(point.amb, np.asarray(fr), sp2.project_with_jvps, gram)


def sphere_chart(base, radius=1.0):
    """Round sphere of the given radius in R^n; induced metric."""
    base = np.asarray(base, dtype=float)
    n = base.size
    # orthonormal tangent frame at base
    Q, _ = np.linalg.qr(np.column_stack([base] + list(np.eye(n))))
    frame = Q[:, 1:n].T

    def retract_jvp(amb, dirs):
        r = np.linalg.norm(amb)
        pt = radius * amb / r
        dcs = np.empty_like(dirs)
        for k, v in enumerate(dirs):
            dcs[k] = radius * (v / r - amb * (np.dot(amb, v) / r ** 3))
        return pt, dcs

    def gram(pt, rows, rows2=None):
        rows = np.atleast_2d(rows)
        other = rows if rows2 is None else np.atleast_2d(rows2)
        return rows @ other.T

    return Chart(base, frame, retract_jvp, gram)


# --- full curvature tensor ---------------------------------------------------

def _derivative_tables(gfun, n, h):
    """All first and second derivatives of the chart Gram at u = 0."""
    g0 = gfun(np.zeros(n))
    line = {}
    for i in range(n):
        for s in (-2, -1, 1, 2):
            u = np.zeros(n)
            u[i] = s * h
            line[(i, s)] = gfun(u)
    dg = np.empty((n,) + g0.shape)
    d2g = np.empty((n, n) + g0.shape)
    for i in range(n):
        dg[i] = (line[(i, -2)] - 8 * line[(i, -1)]
                 + 8 * line[(i, 1)] - line[(i, 2)]) / (12 * h)
        d2g[i, i] = (-line[(i, 2)] + 16 * line[(i, 1)] - 30 * g0
                     + 16 * line[(i, -1)] - line[(i, -2)]) / (12 * h * h)
    for i in range(n):
        for j in range(i + 1, n):
            def cross(step):
                tot = 0.0
                for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    u = np.zeros(n)
                    u[i] = si * step
                    u[j] = sj * step
                    tot = tot + si * sj * gfun(u)
                return tot / (4 * step * step)
            c = (4.0 * cross(h) - cross(2 * h)) / 3.0
            d2g[i, j] = c
            d2g[j, i] = c
    return g0, dg, d2g


def _assemble_riemann(g0, dg, d2g):
    n = g0.shape[0]
    ginv = np.linalg.inv(g0)
    # Christoffel symbols of the first kind:
    # gamma[i, j, k] = (1/2)(d_i g_{jk} + d_j g_{ik} - d_k g_{ij})
    gamma = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            gamma[i, j] = 0.5 * (dg[i][j] + dg[j][i] - dg[:, i, j])
    # second-derivative block of R_{ijkl}
    sec = 0.5 * (np.einsum('ikjl->ijkl', d2g) + np.einsum('jlik->ijkl', d2g)
                 - np.einsum('iljk->ijkl', d2g) - np.einsum('jkil->ijkl', d2g))
    quad = (np.einsum('jlm,mn,ikn->ijkl', gamma, ginv, gamma)
            - np.einsum('ilm,mn,jkn->ijkl', gamma, ginv, gamma))
    return sec + quad, ginv


def _symmetrize(R):
    """Average in the algebraic curvature symmetries; return residual."""
    scale = np.max(np.abs(R)) + 1e-300
    R1 = 0.25 * (R - np.transpose(R, (1, 0, 2, 3))
                 - np.transpose(R, (0, 1, 3, 2))
                 + np.transpose(R, (1, 0, 3, 2)))
    R2 = 0.5 * (R1 + np.transpose(R1, (2, 3, 0, 1)))
    resid = np.max(np.abs(R2 - R)) / scale
    # remove the totally antisymmetric (first-Bianchi-violating) part
    bianchi = (R2 + np.transpose(R2, (0, 2, 3, 1))
               + np.transpose(R2, (0, 3, 1, 2))) / 3.0
    return R2 - bianchi, resid


def riemann_tensor_from_chart(chart, h, richardson=False):
    n = chart.frame.shape[0]

    def gfun(u):
        return chart.metric_block(u)

    def run(step):
        g0, dg, d2g = _derivative_tables(gfun, n, step)
        R, ginv = _assemble_riemann(g0, dg, d2g)
        return R, ginv, g0

    R, ginv, g0 = run(h)
    if richardson:
        R2, _, _ = run(h / 2)
        R = (16.0 * R2 - R) / 15.0
    R, resid = _symmetrize(R)
    return R, ginv, g0, resid


@dataclass
class RiemannData:
    """Full curvature tensor of one stage metric at one point."""

    point: object
    frame: np.ndarray
    R: np.ndarray          # (n, n, n, n), frame components, all symmetries
    gram: np.ndarray       # metric Gram on the frame
    sym_residual: float    # pre-averaging symmetry defect, relative

    def coords(self, X):
        sol, *_ = np.linalg.lstsq(self.frame.T, X, rcond=None)
        return sol

    def contract(self, X, Y, Z, U):
        cx, cy, cz, cu = (self.coords(v) for v in (X, Y, Z, U))
        return float(np.einsum('ijkl,i,j,k,l->', self.R, cx, cy, cz, cu))

    def op(self, X, Y, Z):
        """The (1,3) curvature R(X, Y) Z as an ambient vector."""
        cx, cy, cz = (self.coords(v) for v in (X, Y, Z))
        lowered = np.einsum('ijkl,i,j,k->l', self.R, cx, cy, cz)
        return np.linalg.solve(self.gram, lowered) @ self.frame

    def curv(self, X, Y):
        """Unnormalized sectional R(X, Y, Y, X)."""
        cx, cy = self.coords(X), self.coords(Y)
        return float(np.einsum('ijkl,i,j,k,l->', self.R, cx, cy, cy, cx))

    def metric(self, X, Y):
        return float(self.coords(X) @ self.gram @ self.coords(Y))


_RD_CACHE = {}


def riemann_point(cfg, point, h=None, richardson=None):
    """Cached full curvature tensor at the point for the stage metric."""
    h = cfg.fd_step if h is None else h
    richardson = cfg.richardson if richardson is None else richardson
    key = (cfg.key(), point.key(), h, richardson)
    rd = _RD_CACHE.get(key)
    if rd is not None:
        return rd
    chart = sp2_chart(cfg, point)
    R, ginv, g0, resid = riemann_tensor_from_chart(chart, h, richardson)
    rd = RiemannData(point, chart.frame, R, g0, resid)
    if len(_RD_CACHE) > 256:
        _RD_CACHE.clear()
    _RD_CACHE[key] = rd
    return rd


def riemann(cfg, point, X, Y, Z, U):
    """R(X, Y, Z, U) = <R(X, Y) Z, U> for the active stage metric."""
    rd = riemann_point(cfg, point)
    if rd.sym_residual > 1e-4:
        raise ArithmeticError(
            f"finite-difference symmetry residual too large: "
            f"{rd.sym_residual:.2e}; reduce fd_step or enable richardson")
    return rd.contract(X, Y, Z, U)


# --- planes ------------------------------------------------------------------

@dataclass
class Plane:
    point: object
    X: np.ndarray
    Y: np.ndarray
    gram: np.ndarray

    @property
    def area_sq(self):
        g = self.gram
        return g[0, 0] * g[1, 1] - g[0, 1] ** 2


def make_plane(cfg, point, X, Y):
    g = mp.metric_gram(cfg, point, np.vstack([X, Y]))
    pl = Plane(point, X, Y, g)
    if pl.area_sq <= 1e-14:
        raise ValueError("degenerate plane")
    return pl


def sectional(cfg, point, plane, fast=True):
    """Sectional curvature R(X,Y,Y,X)/area^2 of the plane."""
    if fast:
        val = curv_pair(cfg, point, plane.X, plane.Y)
    else:
        rd = riemann_point(cfg, point)
        val = rd.curv(plane.X, plane.Y)
    return val / plane.area_sq


def _adapted_frame(point, X, Y):
    """Frame whose first two rows are along X, Y, completed from the
    adapted one.  Rows are Euclidean-normalized so chart steps stay
    comparable regardless of the vectors' scale."""
    base = sp2.frame_at(point).vectors
    rows = [X / np.linalg.norm(X), Y / np.linalg.norm(Y)]
    # greedy completion, Euclidean orthogonalization only for selection
    ortho = []
    for v in rows:
        w = v.copy()
        for o in ortho:
            w = w - o * np.dot(o, w)
        ortho.append(w / np.linalg.norm(w))
    cand = list(base)
    while len(rows) < 10:
        best, best_res, best_w = None, -1.0, None
        for k, v in enumerate(cand):
            w = v.copy()
            for o in ortho:
                w = w - o * np.dot(o, w)
            r = np.linalg.norm(w)
            if r > best_res:
                best, best_res, best_w = k, r, w
        rows.append(cand.pop(best))
        ortho.append(best_w / best_res)
    return np.array(rows)


def curv_pair(cfg, point, X, Y, h=None, richardson=None):
    """Unnormalized sectional R(X,Y,Y,X) via a plane-adapted chart.

    Only the metric entries feeding R_{0101} are evaluated, which makes
    scans and flow integrals an order of magnitude cheaper than the full
    tensor.
    """
    h = cfg.fd_step if h is None else h
    richardson = cfg.richardson if richardson is None else richardson
    frame = _adapted_frame(point, X, Y)
    chart = sp2_chart(cfg, point, frame)
    n = 10

    def run(step):
        z = np.zeros(n)
        g0 = chart.metric_block(z)
        # line stencils along directions 0, 1: rows {0,1} x all
        blocks = {}
        for i in (0, 1):
            for s in (-2, -1, 1, 2):
                u = np.zeros(n)
                u[i] = s * step
                blocks[(i, s)] = chart.metric_block(u, rows_idx=[0, 1])
        # line stencils along directions 2..9: the 2x2 block only
        small = {}
        for i in range(2, n):
            for s in (-2, -1, 1, 2):
                u = np.zeros(n)
                u[i] = s * step
                small[(i, s)] = chart.metric_block(u, rows_idx=[0, 1],
                                                   cols_idx=[0, 1])

        def d1(table, i):
            return (table[(i, -2)] - 8 * table[(i, -1)]
                    + 8 * table[(i, 1)] - table[(i, 2)]) / (12 * step)

        def d2(table, i, center):
            return (-table[(i, 2)] + 16 * table[(i, 1)] - 30 * center
                    + 16 * table[(i, -1)] - table[(i, -2)]) / (12 * step ** 2)

        dgA = {i: d1(blocks, i) for i in (0, 1)}       # (2, 10) each
        dg_s = {i: d1(small, i) for i in range(2, n)}  # (2, 2) each

        center_big = g0[[0, 1], :]
        d2_00 = d2(blocks, 0, center_big)[1, 1]        # d0 d0 g_{11}
        d2_11 = d2(blocks, 1, center_big)[0, 0]        # d1 d1 g_{00}

        def cross(step2):
            tot = 0.0
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                u = np.zeros(n)
                u[0] = si * step2
                u[1] = sj * step2
                blk = chart.metric_block(u, rows_idx=[0, 1], cols_idx=[0, 1])
                tot = tot + si * sj * blk[0, 1]
            return tot / (4 * step2 ** 2)

        d2_01 = (4.0 * cross(step) - cross(2 * step)) / 3.0

        # first derivatives d_n g_{ab} for all n, a,b in {0,1}
        dn = np.empty((n, 2, 2))
        for i in (0, 1):
            dn[i] = dgA[i][:, [0, 1]]
        for i in range(2, n):
            dn[i] = dg_s[i]
        # Gamma_{ab, m} for a, b in {0, 1}
        g00 = np.array([dgA[0][0, m] for m in range(n)])  # d0 g_{0m}
        g01 = np.array([dgA[0][1, m] for m in range(n)])  # d0 g_{1m}
        g10 = np.array([dgA[1][0, m] for m in range(n)])  # d1 g_{0m}
        g11 = np.array([dgA[1][1, m] for m in range(n)])  # d1 g_{1m}
        gam00 = g00 - 0.5 * dn[:, 0, 0]
        gam11 = g11 - 0.5 * dn[:, 1, 1]
        gam01 = 0.5 * (g01 + g10 - dn[:, 0, 1])
        ginv = np.linalg.inv(g0)
        quad = gam11 @ ginv @ gam00 - gam01 @ ginv @ gam01
        r_0101 = 0.5 * (d2_00 + d2_11 - 2.0 * d2_01) + quad
        # curv(X, Y) = R(X,Y,Y,X) = R_{0110} = -R_{0101}
        return -r_0101

    val = run(h)
    if richardson:
        val2 = run(h / 2)
        val = (16.0 * val2 - val) / 15.0
    # the chart used normalized directions; restore the bilinear scale
    return val * float(np.dot(X, X)) * float(np.dot(Y, Y))


# --- submersion curvature ----------------------------------------------------

def _horizontal_field(cfg, X):
    def field(pt):
        Xt = sp2.tangent_project(pt, X)
        return mp.sigma_horizontal_part(cfg, pt, Xt)
    return field


def oneill_A(cfg, point, X, Y, eps=1e-4):
    """Integrability tensor A_X Y = (1/2) vert[Xh, Yh] of the quotient
    submersion, from horizontally projected extensions of X and Y."""
    fx = _horizontal_field(cfg, X)
    fy = _horizontal_field(cfg, Y)
    Xh = fx(point)
    Yh = fy(point)

    def dirderiv(field, along):
        plus = sp2.project_to_sp2(point.amb + eps * along)
        minus = sp2.project_to_sp2(point.amb - eps * along)
        return (field(plus) - field(minus)) / (2 * eps)

    bracket = dirderiv(fy, Xh) - dirderiv(fx, Yh)
    return 0.5 * mp.sigma_vertical_part(cfg, point, bracket)


def sigma7_sectional(cfg, point, X, Y, fast=True, enforce_horizontal=True):
    """Quotient-sphere sectional curvature of a horizontal plane.

    sec_Sigma = sec_up + 3 |A_X Y|^2 / area^2.
    """
    if enforce_horizontal:
        X = mp.sigma_horizontal_part(cfg, point, X)
        Y = mp.sigma_horizontal_part(cfg, point, Y)
    pl = make_plane(cfg, point, X, Y)
    up = curv_pair(cfg, point, X, Y) if fast else riemann_point(
        cfg, point).curv(X, Y)
    A = oneill_A(cfg, point, X, Y)
    corr = 3.0 * mp.metric_eval(cfg, point, A, A)
    return (up + corr) / pl.area_sq


# --- the base S^4 as a manifold ----------------------------------------------

def s4_base_chart(cfg, y0, fiber_p=None):
    """Chart on the base 4-sphere with the submersion quotient metric.

    The metric of a tangent vector at y is the active-stage norm of its
    horizontal lift at any point over y; the section used here fixes the
    fiber coordinate, which is legitimate because the lift norm is
    fiber-independent.
    """
    from .quat import ONE

    y0 = np.asarray(y0, dtype=float)
    fiber_p = ONE.copy() if fiber_p is None else fiber_p
    Q, _ = np.linalg.qr(np.column_stack([y0] + list(np.eye(5))))
    frame = Q[:, 1:5].T

    def retract_jvp(amb, dirs):
        r = np.linalg.norm(amb)
        pt = 0.5 * amb / r
        dcs = np.empty_like(dirs)
        for k, v in enumerate(dirs):
            dcs[k] = 0.5 * (v / r - amb * (np.dot(amb, v) / r ** 3))
        return pt, dcs

    form = mp.form_for(cfg)

    def gram(y, rows, rows2=None):
        rows = np.atleast_2d(rows)
        other = rows if rows2 is None else np.atleast_2d(rows2)
        yq = y[:4]
        t = 0.5 * np.arctan2(2.0 * np.linalg.norm(yq[1:]),
                             2.0 * np.hypot(yq[0], y[4]))
        two_theta = np.arctan2(yq[0], -y[4])
        if two_theta < 0:
            two_theta += 2 * np.pi
        theta = 0.5 * two_theta
        al = -yq.copy()
        al[0] = 0.0
        al /= np.linalg.norm(al)
        q = sp2.representative_point(t, theta, al, fiber_p)
        hb = np.array([mp.gm_horizontal_part(cfg, q, v)
                       for v in sp2.frame_at(q).vectors[:4]])
        M = sp2.gm_jacobian(q, hb)          # (4, 5)
        MMt = M @ M.T
        lifts = []
        allrows = np.vstack([rows, other]) if rows2 is not None else rows
        for rvec in allrows:
            c = np.linalg.solve(MMt, M @ rvec)
            lifts.append(c @ hb)
        lifts = np.array(lifts)
        G = form.gram(q, lifts)
        if rows2 is None:
            return G
        na = len(rows)
        return G[:na, na:]

    return Chart(y0, frame, retract_jvp, gram)


def s4_riemann(cfg, y0, h=2e-3, richardson=False):
    """Full curvature tensor of the quotient base metric at y0."""
    chart = s4_base_chart(cfg, y0)
    R, ginv, g0, resid = riemann_tensor_from_chart(chart, h, richardson)
    return RiemannData(y0, chart.frame, R, g0, resid)


def oneill_A_mixed(cfg, point, X, U, eps=1e-4):
    """A_X U = (nabla_X U~)^H for X horizontal and U vertical, with the
    vertical extension of U, for the base-sphere submersion."""
    def field(pt):
        return mp.gm_vertical_part(cfg, pt, sp2.tangent_project(pt, U))

    nab = covariant_derivative(cfg, point, X, field)
    return mp.gm_horizontal_part(cfg, point, nab)


def gm_oneill_A(cfg, point, X, Y, eps=1e-4):
    """Integrability tensor of the base-sphere submersion on two
    horizontal vectors: (1/2) vert[Xh, Yh] with ker d(gm) vertical."""
    def mk(V):
        def field(pt):
            return mp.gm_horizontal_part(cfg, pt, sp2.tangent_project(pt, V))
        return field

    fx, fy = mk(X), mk(Y)
    Xh, Yh = fx(point), fy(point)

    def dirderiv(field, along):
        plus = sp2.project_to_sp2(point.amb + eps * along)
        minus = sp2.project_to_sp2(point.amb - eps * along)
        return (field(plus) - field(minus)) / (2 * eps)

    bracket = dirderiv(fy, Xh) - dirderiv(fx, Yh)
    return 0.5 * mp.gm_vertical_part(cfg, point, bracket)


# --- curvature polynomial ----------------------------------------------------

@dataclass
class PolyCoeffs:
    c00: float
    c10: float
    c01: float
    c20: float
    c11: float
    c02: float
    c21: float
    c12: float
    c22: float

    def eval(self, sigma, tau):
        return (self.c00 + self.c10 * sigma + self.c01 * tau
                + self.c20 * sigma ** 2 + self.c11 * sigma * tau
                + self.c02 * tau ** 2 + self.c21 * sigma ** 2 * tau
                + self.c12 * sigma * tau ** 2
                + self.c22 * sigma ** 2 * tau ** 2)


def curvature_polynomial(cfg, point, zeta, W, z, V, rd=None):
    """Coefficients of P(sigma, tau) = curv(zeta + sigma z, W + tau V).

    z is projected orthogonal to zeta and V orthogonal to W under the
    active metric before contraction.
    """
    g = mp.form_for(cfg)
    z = z - zeta * (g.eval(point, z, zeta) / g.eval(point, zeta, zeta))
    V = V - W * (g.eval(point, V, W) / g.eval(point, W, W))
    if rd is None:
        rd = riemann_point(cfg, point)
    R = rd.contract
    return PolyCoeffs(
        c00=R(zeta, W, W, zeta),
        c10=2.0 * R(zeta, W, W, z),
        c01=2.0 * R(W, zeta, zeta, V),
        c20=R(z, W, W, z),
        c11=2.0 * (R(zeta, W, V, z) + R(zeta, V, W, z)),
        c02=R(zeta, V, V, zeta),
        c21=2.0 * R(z, W, V, z),
        c12=2.0 * R(zeta, V, V, z),
        c22=R(z, V, V, z),
    ), z, V


def quadratic_subpoly(coeffs_diff, coeffs_old):
    """The mixed quadratic with difference-tensor constant and linear
    terms and previous-stage quadratic terms."""
    def pq(sigma, tau):
        return (coeffs_diff.c00 + coeffs_diff.c10 * sigma
                + coeffs_diff.c01 * tau + coeffs_old.c20 * sigma ** 2
                + coeffs_old.c11 * sigma * tau + coeffs_old.c02 * tau ** 2)
    return pq


def quad_min(c0, b1, b2, a, h, c):
    """Closed-form minimum of c0 + b1 s + b2 t + a s^2 + h s t + c t^2.

    Returns (min_value, argmin) when the quadratic part is positive
    definite, else (-inf, None).
    """
    H = np.array([[2 * a, h], [h, 2 * c]])
    det = 4 * a * c - h * h
    if det <= 0 or a <= 0:
        return -np.inf, None
    sol = np.linalg.solve(H, -np.array([b1, b2]))
    val = c0 + 0.5 * (b1 * sol[0] + b2 * sol[1])
    return float(val), sol


def quad_min_grid(fun, lim=50.0, n=201):
    ss = np.linspace(-lim, lim, n)
    tt = np.linspace(-lim, lim, n)
    best = np.inf
    arg = None
    for s in ss:
        for t in tt:
            v = fun(s, t)
            if v < best:
                best, arg = v, (s, t)
    return best, arg


# --- covariant derivative ----------------------------------------------------

def covariant_derivative(cfg, point, X, field_fn, h=None):
    """nabla_X U for a vector field given as field_fn(point) -> ambient.

    Chart-based: the first frame direction is aligned with X, Gamma^k_{0j}
    is assembled from first derivatives of the chart metric.
    """
    h = cfg.fd_step if h is None else h
    U0 = field_fn(point)
    frame = _adapted_frame(point, X, U0)
    chart = sp2_chart(cfg, point, frame)
    n = 10
    g0 = chart.metric_block(np.zeros(n))
    ginv = np.linalg.inv(g0)

    def field_coords(u):
        pt, dcs = chart.push(u)
        sol, *_ = np.linalg.lstsq(dcs.T, field_fn(pt), rcond=None)
        return sol

    dg = np.empty((n, n, n))
    for i in range(n):
        vals = {}
        for s in (-2, -1, 1, 2):
            u = np.zeros(n)
            u[i] = s * h
            vals[s] = chart.metric_block(u)
        dg[i] = (vals[-2] - 8 * vals[-1] + 8 * vals[1] - vals[2]) / (12 * h)
    ucoords = {}
    for s in (-2, -1, 1, 2):
        u = np.zeros(n)
        u[0] = s * h
        ucoords[s] = field_coords(u)
    du = (ucoords[-2] - 8 * ucoords[-1] + 8 * ucoords[1]
          - ucoords[2]) / (12 * h)
    u0 = field_coords(np.zeros(n))
    gamma0 = np.empty((n, n))   # Gamma_{0j,k}
    for j in range(n):
        for k in range(n):
            gamma0[j, k] = 0.5 * (dg[0][j, k] + dg[j][0, k] - dg[k][0, j])
    corr = ginv @ (gamma0.T @ u0)
    coords = du + corr
    # the chart's first direction is X Euclidean-normalized
    return float(np.linalg.norm(X)) * (coords @ frame)
