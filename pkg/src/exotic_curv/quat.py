"""Quaternion and quaternionic 2-vector arithmetic.

Quaternions are numpy arrays of shape (4,) in (w, x, y, z) layout over the
basis (1, i, j, k).  Vectors in H^2 are arrays of shape (8,): two stacked
quaternions.  Everything is 64-bit float; tolerances elsewhere in the
package are sized for that.
"""

from __future__ import annotations

import numpy as np

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])


def quat(w=0.0, x=0.0, y=0.0, z=0.0):
    return np.array([w, x, y, z], dtype=float)


def qmul(p, q):
    """Hamilton product p*q."""
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy + py * qw + pz * qx - px * qz,
        pw * qz + pz * qw + px * qy - py * qx,
    ])


def qconj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def qnorm(q):
    return float(np.sqrt(np.dot(q, q)))


def qnormalize(q, tol=1e-300):
    n = qnorm(q)
    if n < tol:
        raise ZeroDivisionError("cannot normalize zero quaternion")
    return q / n


def qinv(q):
    n2 = np.dot(q, q)
    return qconj(q) / n2


def qdot(p, q):
    """Euclidean R^4 inner product; equals Re(conj(p) q)."""
    return float(np.dot(p, q))


def qim(q):
    """Imaginary part as a quaternion."""
    out = q.copy()
    out[0] = 0.0
    return out


def is_imaginary(q, tol=1e-10):
    return abs(q[0]) <= tol


def conj_by(q, beta):
    """Return conj(q) * beta * q.

    For unit q this is the rotation of Im H that preserves Re(beta) and
    the norm of beta.
    """
    return qmul(qconj(q), qmul(beta, q))


def rotate_by(q, beta):
    """Return q * beta * conj(q), the inverse rotation of conj_by."""
    return qmul(q, qmul(beta, qconj(q)))


def axis_align(beta, target):
    """Unit p with conj(p) * beta * p = target.

    beta and target must be imaginary quaternions of equal norm.  The
    rotation axis is chosen orthogonal to both; when beta = -target the
    axis is any unit imaginary orthogonal to beta.
    """
    b = qim(beta)
    t = qim(target)
    nb, nt = qnorm(b), qnorm(t)
    if abs(nb - nt) > 1e-9 * max(nb, nt, 1.0):
        raise ValueError("axis_align requires equal-norm imaginary quaternions")
    bv, tv = b[1:] / nb, t[1:] / nt
    c = float(np.dot(bv, tv))
    axis = np.cross(bv, tv)
    na = float(np.linalg.norm(axis))
    if na < 1e-12:
        if c > 0.0:
            return ONE.copy()
        # antipodal: rotate by pi about any axis orthogonal to bv
        trial = np.array([1.0, 0.0, 0.0])
        if abs(np.dot(trial, bv)) > 0.9:
            trial = np.array([0.0, 1.0, 0.0])
        axis = np.cross(bv, trial)
        axis /= np.linalg.norm(axis)
        half = np.pi / 2
        p = np.concatenate(([np.cos(half)], np.sin(half) * axis))
        return p
    axis /= na
    ang = np.arctan2(na, c)
    # conj(p) b p rotates b by -2*half about axis when p = cos + sin*axis;
    # pick the sign that lands on the target.
    half = -ang / 2.0
    p = np.concatenate(([np.cos(half)], np.sin(half) * axis))
    if np.linalg.norm(conj_by(p, b)[1:] - t[1:]) > 1e-9 * nb:
        p = np.concatenate(([np.cos(-half)], np.sin(-half) * axis))
    return p


def gamma_pair(alpha, seed_axis=None):
    """Orthonormal imaginary (gamma1, gamma2) with gamma1*gamma2 = alpha.

    seed_axis fixes the free phase; defaults to i (or j when alpha is
    nearly parallel to i).  gamma2 = alpha*gamma1 satisfies the relation.
    """
    a = qnormalize(qim(alpha))
    if seed_axis is None:
        seed_axis = I if abs(qdot(a, I)) < 0.9 else J
    g1 = qim(seed_axis) - qdot(qim(seed_axis), a) * a
    g1 = qnormalize(g1)
    g2 = qmul(a, g1)
    return g1, g2


# --- H^2 vectors -----------------------------------------------------------

def hvec(q1, q2):
    return np.concatenate([q1, q2])


def hsplit(v):
    return v[:4], v[4:]


def qh_inner(u, v):
    """Quaternionic Hermitian product conj(u1) v1 + conj(u2) v2.

    The real part equals the Euclidean R^8 inner product.
    """
    u1, u2 = hsplit(u)
    v1, v2 = hsplit(v)
    return qmul(qconj(u1), v1) + qmul(qconj(u2), v2)


def h_rmul(v, q):
    """Right-multiply both quaternion entries of v by q."""
    v1, v2 = hsplit(v)
    return hvec(qmul(v1, q), qmul(v2, q))


def h_lmul(q, v):
    """Left-multiply both quaternion entries of v by q."""
    v1, v2 = hsplit(v)
    return hvec(qmul(q, v1), qmul(q, v2))


def rot2(theta, v):
    """Apply the SO(2) matrix [[c, s], [-s, c]] to the H^2 vector v."""
    c, s = np.cos(theta), np.sin(theta)
    v1, v2 = hsplit(v)
    return hvec(c * v1 + s * v2, -s * v1 + c * v2)
