"""Counter-based deterministic random numbers.

A splitmix64-style mixer keyed by (seed, cell, draw) so that parallel
scans produce identical streams regardless of worker count or call
order.  No shared state.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _mix(z):
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix64(*keys):
    """Mix integer keys into one 64-bit word."""
    h = 0x243F6A8885A308D3
    for k in keys:
        h = _mix((h ^ (int(k) & _MASK)) & _MASK)
    return h


def uniform(seed, cell, draw, n=1):
    """n uniforms in [0, 1) keyed by (seed, cell, draw..draw+n-1)."""
    out = np.empty(n)
    for i in range(n):
        out[i] = mix64(seed, cell, draw + i) / 2.0 ** 64
    return out


def normal(seed, cell, draw, n=1):
    """n standard normals via Box-Muller on counter uniforms."""
    m = (n + 1) // 2
    u1 = np.maximum(uniform(seed, cell, draw, m), 1e-18)
    u2 = uniform(seed, cell, draw + m, m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:n]


def unit_imaginary_quat(seed, cell, draw):
    """Deterministic unit imaginary quaternion."""
    v = normal(seed, cell, draw, 3)
    v = v / np.linalg.norm(v)
    return np.array([0.0, v[0], v[1], v[2]])


def unit_quat(seed, cell, draw):
    """Deterministic unit quaternion."""
    v = normal(seed, cell, draw, 4)
    v = v / np.linalg.norm(v)
    return v.copy()
