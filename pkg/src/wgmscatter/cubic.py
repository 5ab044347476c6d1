"""Closed-form roots of monic cubics with complex coefficients."""

from __future__ import annotations

import cmath
import math

import numpy as np

_OMEGA = complex(-0.5, math.sqrt(3.0) / 2.0)


def _is_real(z: complex, scale: float) -> bool:
    return abs(z.imag) <= 1e-14 * scale


def cardano(c2: complex, c1: complex, c0: complex) -> np.ndarray:
    """Roots of ``z**3 + c2*z**2 + c1*z + c0``.

    Uses the trigonometric form when the coefficients are real and all three
    roots are real; otherwise Cardano's formula with the cube-root branch
    chosen to avoid cancellation.
    """
    c2, c1, c0 = complex(c2), complex(c1), complex(c0)
    shift = c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0
    scale = max(abs(c2), abs(c1) ** 0.5, abs(c0) ** (1.0 / 3.0), 1e-300)

    if _is_real(p, scale**2) and _is_real(q, scale**3):
        pr, qr = p.real, q.real
        disc = qr * qr / 4.0 + pr**3 / 27.0
        if disc < 0.0:
            m = 2.0 * math.sqrt(-pr / 3.0)
            arg = 3.0 * qr / (pr * m)
            theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
            ys = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
            return np.array([y - shift for y in ys], dtype=complex)

    s = cmath.sqrt(q * q / 4.0 + p**3 / 27.0)
    u3 = -q / 2.0 + s
    alt = -q / 2.0 - s
    if abs(alt) > abs(u3):
        u3 = alt
    if u3 == 0:
        return np.full(3, -shift, dtype=complex)
    u = cmath.exp(cmath.log(u3) / 3.0)
    roots = []
    for k in range(3):
        uk = u * _OMEGA**k
        roots.append(uk - p / (3.0 * uk) - shift)
    return np.array(roots, dtype=complex)


def horner(coeffs, z):
    """Evaluate a monic cubic ``(c2, c1, c0)`` and its derivative at ``z``."""
    c2, c1, c0 = coeffs
    f = ((z + c2) * z + c1) * z + c0
    df = (3.0 * z + 2.0 * c2) * z + c1
    return f, df


def newton_polish(coeffs, roots: np.ndarray, steps: int = 1) -> np.ndarray:
    """Newton steps on each root; a step is kept only if it lowers ``|f|``."""
    out = np.array(roots, dtype=complex)
    for i, z in enumerate(out):
        for _ in range(steps):
            f, df = horner(coeffs, z)
            if df == 0:
                break
            z_new = z - f / df
            if abs(horner(coeffs, z_new)[0]) <= abs(f):
                z = z_new
        out[i] = z
    return out

