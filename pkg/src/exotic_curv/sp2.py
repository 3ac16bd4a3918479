"""The manifold Sp(2) as a pullback inside S^7 x S^7.

A point is stored as an ambient 16-vector: two quaternionic columns
(col1, col2) of the matrix [a b; c d], each a unit vector in H^2, with
qh_inner(col1, col2) = 0.  That gives 6 real constraints and a
10-dimensional manifold.

Every point decomposes exactly as q = A_{2,-1}(g) . (N1(t,th,al) p, N2(t,th,al))
away from the coordinate poles, which lets frames and distinguished
distributions be evaluated smoothly at arbitrary points by pushing the
representative-point formulas forward with the quotient action.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quat import (
    ONE,
    axis_align,
    conj_by,
    gamma_pair,
    h_lmul,
    h_rmul,
    hsplit,
    hvec,
    qconj,
    qdot,
    qh_inner,
    qim,
    qmul,
    qnorm,
    qnormalize,
    rot2,
)

HALF_B = 0.5  # the biinvariant metric used everywhere is (1/2) * (R^16 dot)


class PoleError(ValueError):
    """Raised where the (t, theta, alpha, p) coordinates degenerate."""

    def __init__(self, msg, t=None, theta=None):
        super().__init__(msg)
        self.t = t
        self.theta = theta


class DegenerateError(ValueError):
    pass


# --- points ----------------------------------------------------------------

@dataclass
class Sp2Point:
    amb: np.ndarray                      # shape (16,)
    coords: tuple | None = None          # (t, theta, alpha(4,), p(4,))
    gm_twist: np.ndarray = field(default_factory=lambda: ONE.copy())

    @property
    def col1(self):
        return self.amb[:8]

    @property
    def col2(self):
        return self.amb[8:]

    def key(self):
        return self.amb.tobytes()

    def constraint_residual(self):
        c1 = abs(np.dot(self.col1, self.col1) - 1.0)
        c2 = abs(np.dot(self.col2, self.col2) - 1.0)
        c3 = qnorm(qh_inner(self.col1, self.col2))
        return max(c1, c2, c3)


def b_inner(x, y):
    """The biinvariant metric (1/2) b on ambient 16-vectors."""
    return HALF_B * float(np.dot(x, y))


def b_gram(V, W=None):
    W = V if W is None else W
    return HALF_B * (np.asarray(V) @ np.asarray(W).T)


def _n_pair(t, theta, alpha):
    """Columns N1, N2 of the representative point, and their t-derivatives."""
    ct, st = np.cos(t), np.sin(t)
    n1 = rot2(theta, hvec(ct * ONE, st * alpha))
    n2 = rot2(theta, hvec(st * alpha, ct * ONE))
    n1h = rot2(theta, hvec(-st * ONE, ct * alpha))
    n2h = rot2(theta, hvec(ct * alpha, -st * ONE))
    return n1, n2, n1h, n2h


def representative_point(t, theta, alpha, p):
    """Point (N1 p, N2) for t in [0, pi/4], theta in [0, pi]."""
    if not (-1e-12 <= t <= np.pi / 4 + 1e-12):
        raise ValueError(f"t out of range: {t}")
    if not (-1e-12 <= theta <= np.pi + 1e-12):
        raise ValueError(f"theta out of range: {theta}")
    alpha = np.asarray(alpha, dtype=float)
    p = np.asarray(p, dtype=float)
    if abs(alpha[0]) > 1e-10:
        raise ValueError("alpha must be purely imaginary")
    if abs(qnorm(alpha) - 1.0) > 1e-10 or abs(qnorm(p) - 1.0) > 1e-10:
        raise ValueError("alpha and p must be unit quaternions")
    n1, n2, _, _ = _n_pair(t, theta, alpha)
    amb = np.concatenate([h_rmul(n1, p), n2])
    return Sp2Point(amb, coords=(float(t), float(theta), alpha.copy(), p.copy()))


def project_to_sp2(amb):
    """Quaternionic Gram-Schmidt on the two columns; idempotent on Sp(2)."""
    col1 = amb[:8]
    n1 = np.linalg.norm(col1)
    if n1 < 1e-6:
        raise DegenerateError("first column nearly zero")
    u = col1 / n1
    col2 = amb[8:] - h_rmul(u, qh_inner(u, amb[8:]))
    n2 = np.linalg.norm(col2)
    if n2 < 1e-6:
        raise DegenerateError("second column degenerate after orthogonalization")
    return Sp2Point(np.concatenate([u, col2 / n2]))


def project_to_sp2_jvp(amb, vel):
    """Forward-mode derivative of project_to_sp2 along vel.

    Returns (point, tangent) where tangent = d/ds project(amb + s vel).
    Used by curvature charts; exact up to roundoff, no inner finite
    differences.
    """
    col1, col2 = amb[:8], amb[8:]
    v1, v2 = vel[:8], vel[8:]
    n1sq = np.dot(col1, col1)
    n1 = np.sqrt(n1sq)
    u = col1 / n1
    du = v1 / n1 - col1 * (np.dot(col1, v1) / (n1 * n1sq))
    w = qh_inner(u, col2)
    dw = qh_inner(du, col2) + qh_inner(u, v2)
    r = col2 - h_rmul(u, w)
    dr = v2 - h_rmul(du, w) - h_rmul(u, dw)
    n2sq = np.dot(r, r)
    n2 = np.sqrt(n2sq)
    e = r / n2
    de = dr / n2 - r * (np.dot(r, dr) / (n2 * n2sq))
    return (Sp2Point(np.concatenate([u, e])),
            np.concatenate([du, de]))


def project_with_jvps(amb, dirs):
    """project_to_sp2 with its differential applied to each row of dirs.

    Shares the forward Gram-Schmidt pass across directions; returns
    (point, dcs) with dcs of the same shape as dirs.
    """
    col1, col2 = amb[:8], amb[8:]
    n1sq = np.dot(col1, col1)
    n1 = np.sqrt(n1sq)
    u = col1 / n1
    w = qh_inner(u, col2)
    r = col2 - h_rmul(u, w)
    n2sq = np.dot(r, r)
    n2 = np.sqrt(n2sq)
    e = r / n2
    point = Sp2Point(np.concatenate([u, e]))
    dcs = np.empty_like(dirs)
    for k, vel in enumerate(dirs):
        v1, v2 = vel[:8], vel[8:]
        du = v1 / n1 - col1 * (np.dot(col1, v1) / (n1 * n1sq))
        dw = qh_inner(du, col2) + qh_inner(u, v2)
        dr = v2 - h_rmul(du, w) - h_rmul(u, dw)
        de = dr / n2 - r * (np.dot(r, dr) / (n2 * n2sq))
        dcs[k] = np.concatenate([du, de])
    return point, dcs


def tangent_basis_matrix(point):
    """Rows of the 6x16 constraint Jacobian at the point."""
    c1, c2 = point.col1, point.col2
    rows = np.zeros((6, 16))
    rows[0, :8] = 2.0 * c1
    rows[1, 8:] = 2.0 * c2
    # qh_inner(col1, col2) components: differential is
    # qh(X1, col2) + qh(col1, X2), linear in X.
    for comp in range(4):
        e = np.zeros(16)
        for i in range(16):
            x = np.zeros(16)
            x[i] = 1.0
            e[i] = (qh_inner(x[:8], c2) + qh_inner(c1, x[8:]))[comp]
        rows[2 + comp] = e
    return rows


def tangent_project(point, X):
    """Euclidean projection of an ambient vector onto the tangent space."""
    J = tangent_basis_matrix(point)
    JJt = J @ J.T
    lam = np.linalg.solve(JJt, J @ X)
    return X - J.T @ lam


def tangency_residual(point, X):
    J = tangent_basis_matrix(point)
    return float(np.max(np.abs(J @ X)))


# --- the S^4 projection ----------------------------------------------------

def gm_projection(point):
    """Image in S^4(1/2) subset H + R of the exotic-sphere base map.

    Returns a 5-vector [y_q (4 floats, quaternion), y_r].
    """
    b, d = hsplit(point.col2)
    yq = qmul(qconj(b), d)
    yr = 0.5 * (np.dot(b, b) - np.dot(d, d))
    return np.concatenate([yq, [yr]])


def gm_differential(point, X):
    """Derivative of gm_projection along the ambient vector X."""
    b, d = hsplit(point.col2)
    xb, xd = hsplit(X[8:])
    dyq = qmul(qconj(xb), d) + qmul(qconj(b), xd)
    dyr = np.dot(b, xb) - np.dot(d, xd)
    return np.concatenate([dyq, [dyr]])


def gm_jacobian(point, V):
    """Apply gm_differential to the rows of V; returns (len(V), 5)."""
    return np.array([gm_differential(point, v) for v in V])


def s4_from_coords(t, theta, alpha):
    yq = 0.5 * np.sin(2 * theta) * np.cos(2 * t) * ONE - 0.5 * np.sin(2 * t) * alpha
    yr = -0.5 * np.cos(2 * theta) * np.cos(2 * t)
    return np.concatenate([yq, [yr]])


def decompose(point, allow_pole=False, alpha_hint=None):
    """Exact (t, theta, alpha, p, g) with point = A_{2,-1}(g) (N1 p, N2).

    Away from the poles (sin 2t = 0 kills alpha) this inverts the
    representative parameterization exactly: g is read off the second
    column (an h-tilde fiber coordinate) and p from the first.  At the
    poles p and g are still recoverable when alpha_hint supplies the
    missing direction.
    """
    y = gm_projection(point)
    y0, yim, yr = y[0], qim(y[:4]), y[4]
    c2t = 2.0 * np.hypot(y0, yr)
    s2t = 2.0 * qnorm(yim)
    t = 0.5 * np.arctan2(s2t, c2t)
    two_theta = np.arctan2(y0, -yr)
    if two_theta < -1e-12:
        two_theta += 2 * np.pi
    theta = 0.5 * max(two_theta, 0.0)
    if s2t <= 1e-9:
        if alpha_hint is None:
            if allow_pole:
                return t, theta, None, None, None
            raise PoleError("alpha undefined: sin(2t) ~ 0", t=t, theta=theta)
        alpha = np.asarray(alpha_hint, dtype=float)
    else:
        alpha = -yim / qnorm(yim)
    n1, n2, _, _ = _n_pair(t, theta, alpha)
    # col2 = g . N2 exactly; sum_i col2_i conj(N2_i) recovers g.
    n2a, n2b = hsplit(n2)
    c2a, c2b = hsplit(point.col2)
    g = qmul(c2a, qconj(n2a)) + qmul(c2b, qconj(n2b))
    g = qnormalize(g)
    col1_rep = h_lmul(qconj(g), h_rmul(point.col1, g))
    p_raw = qh_inner(n1, col1_rep)
    p = qnormalize(p_raw)
    return t, theta, alpha, p, g


def coords_from_point(point, allow_pole=False):
    """(t, theta, alpha, p); see decompose for the exact convention."""
    t, theta, alpha, p, _ = decompose(point, allow_pole=allow_pole)
    return t, theta, alpha, p


# --- group actions ---------------------------------------------------------

ACTIONS = ("u", "d", "h1", "h2", "gm_2m1", "diag_ud")


def act(action, g, point):
    """Apply one of the S^3 actions; g is a unit quaternion.

    For ``diag_ud`` a pair (g, g) is implied (single quaternion argument).
    """
    amb = act_vec(action, g, point.amb, point)
    return Sp2Point(amb)


def act_vec(action, g, X, point=None):
    """The same action applied to an ambient vector (all actions are
    R^16-linear, so this is also the differential)."""
    a = X[:4]
    c = X[4:8]
    b = X[8:12]
    d = X[12:16]
    if action == "u":
        return np.concatenate([qmul(g, a), c, qmul(g, b), d])
    if action == "d":
        return np.concatenate([a, qmul(g, c), b, qmul(g, d)])
    if action == "h1":
        gc = qconj(g)
        return np.concatenate([qmul(a, gc), qmul(c, gc), b, d])
    if action == "h2":
        gc = qconj(g)
        return np.concatenate([a, c, qmul(b, gc), qmul(d, gc)])
    if action == "gm_2m1":
        gc = qconj(g)
        return np.concatenate([
            qmul(g, qmul(a, gc)), qmul(g, qmul(c, gc)),
            qmul(g, b), qmul(g, d)])
    if action == "diag_ud":
        return np.concatenate([qmul(g, a), qmul(g, c), qmul(g, b), qmul(g, d)])
    raise ValueError(f"unknown action {action!r}")


def orbit_field(action, mu, point):
    """Tangent of the action orbit for Lie-algebra direction mu (imaginary)."""
    a = point.amb[:4]
    c = point.amb[4:8]
    b = point.amb[8:12]
    d = point.amb[12:16]
    z = np.zeros(4)
    if action == "u":
        return np.concatenate([qmul(mu, a), z, qmul(mu, b), z])
    if action == "d":
        return np.concatenate([z, qmul(mu, c), z, qmul(mu, d)])
    if action == "h1":
        return np.concatenate([-qmul(a, mu), -qmul(c, mu), z, z])
    if action == "h2":
        return np.concatenate([z, z, -qmul(b, mu), -qmul(d, mu)])
    if action == "gm_2m1":
        return np.concatenate([
            qmul(mu, a) - qmul(a, mu), qmul(mu, c) - qmul(c, mu),
            qmul(mu, b), qmul(mu, d)])
    if action == "diag_ud":
        return np.concatenate([qmul(mu, a), qmul(mu, c), qmul(mu, b), qmul(mu, d)])
    raise ValueError(f"unknown action {action!r}")


_IMAG_BASIS = (np.array([0.0, 1.0, 0.0, 0.0]),
               np.array([0.0, 0.0, 1.0, 0.0]),
               np.array([0.0, 0.0, 0.0, 1.0]))


def orbit_basis(action, point):
    """The three generator fields for i, j, k as rows of a (3, 16) array."""
    return np.array([orbit_field(action, mu, point) for mu in _IMAG_BASIS])


# --- adapted frame ---------------------------------------------------------

@dataclass
class FrameAtPoint:
    """Ten tangent vectors, orthonormal for (1/2) b when t > 0.

    Order: x20, y20, (eta1,eta1), (eta2,eta2), (v,0), (th1,0), (th2,0),
    (0,v), (0,th1), (0,th2).  The vertical six carry a sqrt(2) factor
    relative to the bare (N alpha p, 0)-style vectors so that the whole
    frame is orthonormal.
    """

    point: Sp2Point
    t: float
    theta: float
    alpha: np.ndarray
    p: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    vectors: np.ndarray  # shape (10, 16)

    @property
    def x20(self):
        return self.vectors[0]

    @property
    def y20(self):
        return self.vectors[1]

    @property
    def eta1(self):
        return self.vectors[2]

    @property
    def eta2(self):
        return self.vectors[3]

    def vertical1(self):
        return self.vectors[4:7]

    def vertical2(self):
        return self.vectors[7:10]


SQRT2 = np.sqrt(2.0)


def frame_at(point, alpha=None, gamma_seed=None):
    """Adapted orthonormal frame at any point away from the poles.

    The frame is built at the representative point of the quotient-action
    decomposition and pushed forward by the action, which is isometric
    for every metric in the pipeline.  At the poles pass ``alpha``
    explicitly (points built by representative_point carry it).
    """
    if point.coords is not None:
        t, theta, al, p = point.coords
        if alpha is not None:
            al = alpha
        g = None
    else:
        t, theta, al, p, g = decompose(point, alpha_hint=alpha)
    g1, g2 = gamma_pair(al, seed_axis=gamma_seed)
    n1, n2, n1h, n2h = _n_pair(t, theta, al)
    ap = qmul(al, p)
    vecs = np.empty((10, 16))
    z8 = np.zeros(8)
    vecs[0] = np.concatenate([h_rmul(n1h, p), n2h])
    vecs[1] = np.concatenate([h_rmul(n1h, qmul(qconj(al), p)), h_rmul(n2h, al)])
    vecs[2] = np.concatenate([h_rmul(n1h, qmul(g1, p)), h_rmul(n2h, g1)])
    vecs[3] = np.concatenate([h_rmul(n1h, qmul(g2, p)), h_rmul(n2h, g2)])
    vecs[4] = SQRT2 * np.concatenate([h_rmul(n1, ap), z8])
    vecs[5] = SQRT2 * np.concatenate([h_rmul(n1, qmul(g1, p)), z8])
    vecs[6] = SQRT2 * np.concatenate([h_rmul(n1, qmul(g2, p)), z8])
    vecs[7] = SQRT2 * np.concatenate([z8, h_rmul(n2, al)])
    vecs[8] = SQRT2 * np.concatenate([z8, h_rmul(n2, g1)])
    vecs[9] = SQRT2 * np.concatenate([z8, h_rmul(n2, g2)])
    if g is not None and qnorm(g - ONE) > 1e-15:
        for i in range(10):
            vecs[i] = act_vec("gm_2m1", g, vecs[i])
    return FrameAtPoint(point, t, theta, al, p, g1, g2, vecs)


def zeta_at(point, branch_phi=None, frame=None):
    """The distinguished unit field normal to all four S^3 orbit families.

    zeta = (sin2t cos2th x20 - sin2th y20) / sqrt(sin^2 2t cos^2 2th + sin^2 2th)

    At the two poles the direction is multivalued and a branch angle phi
    must be supplied; an explicit branch_phi selects
    zeta_phi = x20 cos(phi) + y20 sin(phi) anywhere (the transverse
    vanishing families pair their W with non-canonical branches).
    """
    fr = frame if frame is not None else frame_at(point)
    t, theta = fr.t, fr.theta
    if branch_phi is not None:
        return np.cos(branch_phi) * fr.x20 + np.sin(branch_phi) * fr.y20
    a = np.sin(2 * t) * np.cos(2 * theta)
    b = -np.sin(2 * theta)
    d2 = a * a + b * b
    if d2 <= 1e-16:
        raise PoleError("zeta multivalued here; supply a branch angle",
                        t=t, theta=theta)
    d = np.sqrt(d2)
    return (a / d) * fr.x20 + (b / d) * fr.y20


def zeta_branch_angle(t, theta):
    """phi with zeta = x20 cos(phi) + y20 sin(phi) away from the poles."""
    a = np.sin(2 * t) * np.cos(2 * theta)
    b = -np.sin(2 * theta)
    if a * a + b * b <= 1e-16:
        raise PoleError("branch angle undefined at pole", t=t, theta=theta)
    return float(np.arctan2(b, a))


def xi_at(point, branch_phi=None, frame=None):
    """Unit complement of zeta inside span{x20, y20} (90-degree rotation)."""
    fr = frame if frame is not None else frame_at(point)
    if branch_phi is None:
        phi = zeta_branch_angle(fr.t, fr.theta)
    else:
        phi = branch_phi
    return -np.sin(phi) * fr.x20 + np.cos(phi) * fr.y20


# --- Lie bracket -----------------------------------------------------------

def _mat(amb):
    """Ambient 16-vector as a quaternionic 2x2 matrix [[a, b], [c, d]]."""
    return np.array([[amb[:4], amb[8:12]], [amb[4:8], amb[12:16]]])


def _amb(mat):
    return np.concatenate([mat[0, 0], mat[1, 0], mat[0, 1], mat[1, 1]])


def _qmat_mul(A, B):
    out = np.zeros((2, 2, 4))
    for i in range(2):
        for j in range(2):
            out[i, j] = qmul(A[i, 0], B[0, j]) + qmul(A[i, 1], B[1, j])
    return out


def _qmat_conjT(A):
    out = np.zeros((2, 2, 4))
    for i in range(2):
        for j in range(2):
            out[i, j] = qconj(A[j, i])
    return out


def lie_bracket_at(point, X, Y):
    """Bracket of the left-invariant extensions of X and Y at the point.

    Translates to the Lie algebra with Q* X, brackets the matrices, and
    translates back.  Used by the biinvariant curvature oracle
    curv = (1/4) |[X, Y]|^2.
    """
    Q = _mat(point.amb)
    Qc = _qmat_conjT(Q)
    xi = _qmat_mul(Qc, _mat(X))
    eta = _qmat_mul(Qc, _mat(Y))
    br = _qmat_mul(xi, eta) - _qmat_mul(eta, xi)
    return _amb(_qmat_mul(Q, br))


def biinvariant_curv(point, X, Y):
    """(1/4)|[X, Y]|^2 in the (1/2) b metric; unnormalized sectional."""
    br = lie_bracket_at(point, X, Y)
    return 0.25 * b_inner(br, br)


# --- Hopf-fiber bookkeeping on one S^7 factor ------------------------------

def vh_basis(u):
    """Basis of the vertical space of the right-multiplication fibration."""
    return np.array([h_rmul(u, mu) for mu in _IMAG_BASIS])


def vht_basis(u):
    """Basis of the vertical space of the left-multiplication fibration."""
    return np.array([h_lmul(mu, u) for mu in _IMAG_BASIS])


def p_vh_vht_inverse(u, w):
    """Solve p_{V_h, V_ht}(x) = w for x in V_h at the S^7 point u.

    p_{V_h, V_ht} is Euclidean orthogonal projection onto the left-fiber
    vertical space; it degenerates when cos 2t -> 0.
    """
    Bh = vh_basis(u)
    Bt = vht_basis(u)
    # projection of each V_h basis vector onto V_ht (V_ht basis is orthonormal)
    coeff = Bt @ Bh.T            # (3, 3): components of proj(Bh_j) on Bt_i
    target = Bt @ w
    try:
        c = np.linalg.solve(coeff.T, target)
    except np.linalg.LinAlgError as exc:
        raise DegenerateError("vertical-space projection singular") from exc
    if np.linalg.norm(c) > 1e8 * max(np.linalg.norm(target), 1e-30):
        raise DegenerateError("vertical-space projection nearly singular")
    return c @ Bh


def delta_alpha_vector(frame):
    """The common-fiber direction (N alpha p, N alpha), unnormalized."""
    return frame.vectors[4] / SQRT2 + frame.vectors[7] / SQRT2


# --- distinguished distributions --------------------------------------------

@dataclass
class DistributionSet:
    """Stage-metric-orthonormal bases of the distinguished distributions.

    Fine-splitting fields are None below the t = 0 degeneration floor,
    where the two vertical fiber families coincide.
    """

    point: Sp2Point
    v1: np.ndarray
    v2: np.ndarray
    h: np.ndarray
    delta: np.ndarray
    v21: np.ndarray | None
    h21: np.ndarray | None
    z: np.ndarray | None
    zperp: np.ndarray | None
    zv: np.ndarray | None
    z_gap: float = np.inf
    zv_gap: float = np.inf

    def dims(self):
        def d(x):
            return 0 if x is None else len(x)
        return (d(self.v1), d(self.v2), d(self.h), d(self.delta),
                d(self.v21), d(self.h21), d(self.z), d(self.zperp),
                d(self.zv))


def _nullspace(form_matrix, basis, cutoff, gap_factor):
    w, vecs = np.linalg.eigh(form_matrix)
    scale = max(abs(w[-1]), 1e-300)
    small = np.where(np.abs(w) < cutoff * scale)[0]
    k = len(small)
    if k == 0:
        return np.empty((0, basis.shape[1])), np.inf
    gap = abs(w[k]) / max(abs(w[k - 1]), 1e-300) if k < len(w) else np.inf
    if gap < gap_factor:
        raise ArithmeticError(
            f"nullspace not certified: spectral gap {gap:.2f} below "
            f"{gap_factor}")
    return vecs[:, :k].T @ basis, gap


def distributions_at(point, cfg):
    """All distinguished distributions at the point, orthonormalized for
    the active stage metric.

    The 3-dim null distribution of U -> curv(zeta, U) on the vertical
    sum and the bracket-null distribution are extracted as certified
    numeric nullspaces (eigenvalue cutoff and spectral-gap test).
    """
    from . import curvature as cv
    from . import metric_pipeline as mp

    fr = frame_at(point)
    t = fr.t
    if t > np.pi / 4 - 1e-3:
        raise DegenerateError(
            "vertical-space projection degenerates as t -> pi/4")
    form = mp.form_for(cfg)

    def onb(rows):
        rows = np.array(rows, dtype=float)
        out = []
        for v in rows:
            w = v.copy()
            for o in out:
                w = w - o * form.eval(point, o, w)
            n = form.eval(point, w, w)
            out.append(w / np.sqrt(n))
        return np.array(out)

    v1 = onb(fr.vertical1())
    v2 = onb(fr.vertical2())
    h = onb(fr.vectors[:4])
    delta = onb([delta_alpha_vector(fr)])
    if t < 1e-3:
        return DistributionSet(point, v1, v2, h, delta, None, None, None,
                               None, None)
    # vertical lift of the quotient-sphere fiber directions
    t_, th_, al_, p_, g_ = decompose(point)
    n1, n2, _, _ = _n_pair(t_, th_, al_)
    from .quat import gamma_pair
    g1, g2 = gamma_pair(al_)
    v21_rows = []
    for mu in (al_, g1, g2):
        first = -h_rmul(n1, qmul(mu, p_))
        target = h_lmul(conj_by(p_, mu), n2)
        second = h_rmul(n2, mu) - p_vh_vht_inverse(n2, target)
        vec = np.concatenate([first, second])
        if g_ is not None:
            vec = act_vec("gm_2m1", g_, vec)
        v21_rows.append(vec)
    v21 = onb(v21_rows)
    h21 = onb([mp.gm_horizontal_part(cfg, point, v) for v in fr.vectors[:4]])
    # numeric nullspace of the curvature form on the vertical sum;
    # step extrapolation keeps the eigenvalue noise under the cutoff
    nu_cfg = cfg.at_stage("nu") if cfg.depth >= 1 else cfg
    rd = cv.riemann_point(nu_cfg, point, richardson=True)
    zeta = zeta_at(point, frame=fr)
    vert = np.vstack([fr.vertical1(), fr.vertical2()])
    Q = np.empty((6, 6))
    for i in range(6):
        for j in range(i, 6):
            Q[i, j] = Q[j, i] = rd.contract(zeta, vert[i], vert[j], zeta)
    z_rows, z_gap = _nullspace(Q, vert, cfg.nullspace_cutoff,
                               cfg.gap_factor)
    z = onb(z_rows) if len(z_rows) else None
    # complement of Z inside the vertical sum
    if z is not None:
        comp = []
        for v in vert:
            w = v.copy()
            for o in z:
                w = w - o * form.eval(point, o, w)
            comp.append(w)
        u, sv, vt = np.linalg.svd(np.array(comp), full_matrices=False)
        zperp = onb(vt[:3] if len(sv) >= 3 else vt[sv > 1e-8])
    else:
        zperp = None
    # bracket-null directions on the full tangent space
    B = np.empty((10, 10))
    brs = [lie_bracket_at(point, zeta, v) for v in fr.vectors]
    for i in range(10):
        for j in range(i, 10):
            B[i, j] = B[j, i] = 0.25 * b_inner(brs[i], brs[j])
    zv_rows, zv_gap = _nullspace(B, fr.vectors, cfg.nullspace_cutoff,
                                 cfg.gap_factor)
    zv = onb(zv_rows) if len(zv_rows) else None
    return DistributionSet(point, v1, v2, h, delta, v21, h21, z, zperp, zv,
                           z_gap, zv_gap)
