"""Poles, transmission dips, critical coupling and mirror symmetry."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .amplitudes import amplitudes_full, denominator, evaluate
from .cubic import cardano, newton_polish
from .errors import GridTooCoarse, TrackingAmbiguity, WGMError
from .params import SystemParams, ValidatedParams, validate

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _valid(params) -> ValidatedParams:
    return params if isinstance(params, ValidatedParams) else validate(params)


def _scale(p: ValidatedParams) -> float:
    s = max(p.gamma_ext, p.kappa_c, p.kappa_q, abs(p.g_a), abs(p.g_b), abs(p.h), abs(p.delta))
    return s if s > 0 else 1.0


# -------------------------------------------------------------------- poles


def cubic_coefficients(params: SystemParams):
    """``(c2, c1, c0)`` of the denominator written as a monic cubic in ``omega - omega_c``."""
    p = _valid(params)
    d = p.derived
    a0 = 1j * (p.kappa_c + p.gamma_ext)
    b0 = -d.delta_detune + 1j * p.kappa_q
    h2 = abs(p.h) ** 2
    X = 2.0 * (np.conj(p.g_a) * p.g_b * p.h).real
    c2 = 2.0 * a0 + b0
    c1 = a0 * a0 + 2.0 * a0 * b0 - d.g_plus_sq - h2
    c0 = a0 * a0 * b0 - d.g_plus_sq * a0 - h2 * b0 - X
    return complex(c2), complex(c1), complex(c0)


@dataclass
class PoleSet:
    """Roots of the transmission denominator.

    ``detunings`` are measured from ``omega_c``; ``poles`` are absolute.
    """

    detunings: np.ndarray
    omega_c: float
    residual: float

    @property
    def poles(self) -> np.ndarray:
        return self.detunings + self.omega_c


def _sorted(z: np.ndarray) -> np.ndarray:
    return z[np.lexsort((z.imag, z.real))]


def poles(params: SystemParams) -> PoleSet:
    """Three complex poles of the transmission amplitude.

    With the atom decoupled the denominator factorizes exactly and the roots
    are written down directly. Otherwise the cubic is solved in the rotated
    variable ``s = i*(omega - omega_c)``, whose coefficients are real for a
    tuned, phase-matched system, then each root gets one Newton step.
    """
    p = _valid(params)
    coeffs = cubic_coefficients(p)
    if p.derived.g_plus_sq == 0.0:
        gam = p.kappa_c + p.gamma_ext
        hm = abs(p.h)
        z = np.array([p.derived.delta_detune - 1j * p.kappa_q, hm - 1j * gam, -hm - 1j * gam])
    else:
        c2, c1, c0 = coeffs
        s = cardano(1j * c2, -c1, -1j * c0)
        z = newton_polish(coeffs, -1j * s, steps=1)
    z = _sorted(z)
    residual = float(np.max(np.abs(denominator(p, z, detuning=True))))
    return PoleSet(z, p.omega_c, residual)


def coefficient_scale(params: SystemParams) -> float:
    c2, c1, c0 = cubic_coefficients(params)
    return max(abs(c2) ** 3, abs(c1) ** 1.5, abs(c0), 1e-300)


# ------------------------------------------------------------------- sweeps


@dataclass
class PoleSweep:
    parameter: str
    values: np.ndarray
    detunings: np.ndarray  # (n, 3), columns follow continuous trajectories
    residuals: np.ndarray
    ambiguous_steps: List[int] = field(default_factory=list)

    def __len__(self):
        return len(self.values)

    def pole_sets(self, omega_c: float = 0.0) -> List[PoleSet]:
        return [PoleSet(self.detunings[i].copy(), omega_c, float(self.residuals[i])) for i in range(len(self))]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("sweep_value,re_pole_1,re_pole_2,re_pole_3,im_pole_1,im_pole_2,im_pole_3\n")
            for v, z in zip(self.values, self.detunings):
                row = [v, *z.real, *z.imag]
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def _with_value(p: ValidatedParams, parameter: str, value: float) -> ValidatedParams:
    if parameter == "h":
        phase = p.h / abs(p.h) if p.h != 0 else 1.0
        return p.replace(h=value * phase)
    if parameter == "g":
        pa = p.g_a / abs(p.g_a) if p.g_a != 0 else 1.0
        pb = p.g_b / abs(p.g_b) if p.g_b != 0 else 1.0
        return p.replace(g_a=value * pa, g_b=value * pb)
    raise ValueError(f"sweep parameter must be 'h' or 'g', got {parameter!r}")


def anticrossing_sweep(params: SystemParams, h_range: Optional[Sequence[float]] = None,
                       g_range: Optional[Sequence[float]] = None, steps: int = 200,
                       gap_tol: Optional[float] = None) -> PoleSweep:
    """Track the three poles while ``|h|`` (or ``|g_a| = |g_b|``) is swept.

    Consecutive pole sets are matched by minimal total displacement. Steps
    where some pole moves farther than ``gap_tol`` (default: half the
    smallest pole spacing of the preceding set) are recorded and reported with
    a :class:`TrackingAmbiguity` warning.
    """
    if (h_range is None) == (g_range is None):
        raise ValueError("give exactly one of h_range or g_range")
    parameter, rng = ("h", h_range) if h_range is not None else ("g", g_range)
    lo, hi = float(rng[0]), float(rng[1])
    if lo < 0 or hi < lo:
        raise ValueError("sweep range must satisfy 0 <= lo <= hi")
    p = _valid(params)
    values = np.array([lo]) if hi == lo else np.linspace(lo, hi, int(steps) + 1)

    tracks = np.empty((len(values), 3), dtype=complex)
    residuals = np.empty(len(values))
    ambiguous = []
    prev = None
    for i, v in enumerate(values):
        ps = poles(_with_value(p, parameter, v))
        cur = ps.detunings
        if prev is not None:
            cost = np.abs(prev[:, None] - cur[None, :])
            _, col = linear_sum_assignment(cost)
            cur = cur[col]
            moved = np.abs(cur - prev)
            spacing = np.abs(prev[:, None] - prev[None, :])[np.triu_indices(3, 1)]
            tol = gap_tol if gap_tol is not None else 0.5 * spacing.min()
            if moved.max() > tol:
                ambiguous.append(i)
        tracks[i] = cur
        residuals[i] = ps.residual
        prev = cur
    if ambiguous:
        warnings.warn(f"pole tracking ambiguous at {len(ambiguous)} sweep step(s)", TrackingAmbiguity,
                      stacklevel=2)
    return PoleSweep(parameter, values, tracks, residuals, ambiguous)


# --------------------------------------------------------- critical coupling


@dataclass
class CriticalCouplingReport:
    satisfied: bool
    lhs: float
    rhs: float
    phase_residual: float
    detuning: float
    t_resonance: complex


def critical_coupling_check(params: SystemParams, rtol: float = 1e-10) -> CriticalCouplingReport:
    """Test the generalized critical-coupling conditions at ``omega = omega_c``.

    The magnitude condition is evaluated multiplied through by the atomic
    loss rate, ``kq*G**2 + Gm2*G = kq*kc**2 + kc*Gp2 + kq*|h|**2``, so that
    zero loss rates need no special casing. When the atom is decoupled the
    common factor ``kq`` is removed, leaving ``G**2 = kc**2 + |h|**2``.
    """
    p = _valid(params)
    d = p.derived
    G, kc, kq = p.gamma_ext, p.kappa_c, p.kappa_q
    h2 = abs(p.h) ** 2
    if d.g_plus_sq == 0.0:
        lhs, rhs = G * G, kc * kc + h2
    else:
        lhs = kq * G * G + d.g_minus_sq * G
        rhs = kq * kc * kc + kc * d.g_plus_sq + kq * h2
    phase = float((np.conj(p.g_a) * p.g_b * p.h).real)
    scale = _scale(p)
    mag_ok = abs(lhs - rhs) <= rtol * max(abs(lhs), abs(rhs), scale**3 if d.g_plus_sq else scale**2)
    phase_ok = abs(phase) <= rtol * max(abs(p.g_a) * abs(p.g_b) * abs(p.h), 1e-300)
    tuned = abs(d.delta_detune) <= rtol * scale
    t0 = complex(amplitudes_full(p, 0.0, detuning=True).t)
    ok = bool(mag_ok and phase_ok and tuned)
    if ok and abs(t0) >= 1e-8:
        raise WGMError(f"critical coupling satisfied but |t(omega_c)| = {abs(t0):.3e}")
    return CriticalCouplingReport(ok, float(lhs), float(rhs), phase, float(d.delta_detune), t0)


# ---------------------------------------------------------------- symmetry


def mirror_partner(params: SystemParams) -> ValidatedParams:
    """Parameter set whose transmission is the mirror image about ``omega_c``.

    Detuning is negated and the phase mismatch reversed. The atom couplings
    are rotated to be real, after which ``h -> |h| exp(i*(pi/2 - dtheta))``.
    """
    p = _valid(params)
    dtheta = p.derived.delta_theta
    if dtheta is None:
        h = -np.conj(p.h)
    else:
        h = abs(p.h) * np.exp(1j * (math.pi / 2 - dtheta))
    return p.replace(omega_atom=p.omega_c - p.delta, g_a=abs(p.g_a), g_b=abs(p.g_b), h=complex(h))


def symmetry_check(params: SystemParams, grid, detuning: bool = False) -> float:
    """``max |conj(t_partner(-dw)) - t(dw)|`` over ``grid``."""
    p = _valid(params)
    grid = np.asarray(grid, dtype=float)
    dw = grid if detuning else grid - p.omega_c
    partner = mirror_partner(p)
    t = amplitudes_full(p, dw, detuning=True).t
    tm = amplitudes_full(partner, -dw, detuning=True).t
    return float(np.max(np.abs(np.conj(tm) - t)))


def mirror_deviation(p1: SystemParams, p2: SystemParams, grid, detuning: bool = False) -> float:
    """``max |T1(omega_c + dw) - T2(omega_c - dw)|`` for two given parameter sets."""
    a, b = _valid(p1), _valid(p2)
    grid = np.asarray(grid, dtype=float)
    dw = grid if detuning else grid - a.omega_c
    T1 = np.abs(amplitudes_full(a, dw, detuning=True).t) ** 2
    T2 = np.abs(amplitudes_full(b, -dw, detuning=True).t) ** 2
    return float(np.max(np.abs(T1 - T2)))


# ------------------------------------------------------------- resonances


@dataclass
class ResonanceReport:
    """Transmission dips located on a grid and refined.

    ``nature_weights`` is the atomic fraction ``nq / (nq + na + nb)`` of the
    normalized excitations at each dip; ``pole_nature_weights`` is the same
    quantity at the real part of each pole.
    """

    dip_locations: np.ndarray
    dip_transmissions: np.ndarray
    fwhm: np.ndarray
    nature_weights: np.ndarray
    pole_detunings: np.ndarray
    pole_nature_weights: np.ndarray

    def __len__(self):
        return len(self.dip_locations)


def golden_minimize(f, lo: float, hi: float, tol: float):
    """Golden-section search for a minimum of ``f`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        if c >= d:
            break
    return (c, fc) if fc <= fd else (d, fd)


def atomic_weight(params: SystemParams, omega, model: str = "full", detuning: bool = False):
    amp = evaluate(params, omega, model, detuning)
    na, nb, nq = (np.abs(x) ** 2 for x in (amp.e_a, amp.e_b, amp.e_q))
    total = na + nb + nq
    return np.where(total > 0, nq / np.where(total > 0, total, 1.0), 0.0)


def _half_crossing(Tfun, x0: float, x1: float, level: float) -> float:
    return brentq(lambda x: Tfun(x) - level, x0, x1, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def resonance_report(params: SystemParams, grid, model: str = "full", detuning: bool = False,
                     tol: Optional[float] = None) -> ResonanceReport:
    """Find the local minima of ``T`` on ``grid`` and refine them.

    Returned locations are absolute unless ``detuning`` is set, in which case
    they are detunings like the grid. FWHM is the full width at the level
    halfway between the dip minimum and the lower of the two neighbouring
    maxima; it is NaN when a half-level crossing is missing on either side.
    """
    p = _valid(params)
    grid = np.asarray(grid, dtype=float)
    dw = grid if detuning else grid - p.omega_c
    if len(dw) < 3:
        raise ValueError("need at least three grid points")
    tol = 1e-12 * p.gamma_ext if tol is None else tol
    tol = tol if tol > 0 else 1e-12

    def Tfun(x):
        return float(np.abs(evaluate(p, x, model, detuning=True).t) ** 2)

    T = np.abs(evaluate(p, dw, model, detuning=True).t) ** 2
    # minima with no contrast against the spectrum maximum are rounding noise
    idx = [i for i in range(1, len(dw) - 1)
           if T[i] < T[i - 1] and T[i] <= T[i + 1] and T.max() - T[i] > 1e-12]
    locs, vals = [], []
    for i in idx:
        lo, hi = dw[i - 1], dw[i + 1]
        x, fx = golden_minimize(Tfun, lo, hi, tol)
        if fx > T[i]:
            x, fx = dw[i], T[i]
        if min(x - lo, hi - x) <= 2 * tol:
            raise GridTooCoarse(f"dip near {dw[i]!r} not bracketed by neighbouring grid points")
        locs.append(x)
        vals.append(fx)
    locs_a = np.array(locs)
    vals_a = np.array(vals)

    # Reference level on each side: the transmission maximum between this dip
    # and its neighbour, or the unit far-off-resonance background at a grid end.
    widths = np.full(len(locs), np.nan)
    for k, x in enumerate(locs):
        sides = []
        for mask, bounded in (((dw < x) & (dw > (locs[k - 1] if k > 0 else -np.inf)), k > 0),
                              ((dw > x) & (dw < (locs[k + 1] if k + 1 < len(locs) else np.inf)), k + 1 < len(locs))):
            if not mask.any():
                sides.append(None)
                continue
            j = np.flatnonzero(mask)[np.argmax(T[mask])]
            sides.append((j, T[j] if bounded else 1.0))
        if None in sides:
            continue
        level = 0.5 * (vals[k] + min(s_[1] for s_ in sides))
        (li, _), (ri, _) = sides
        try:
            xl = _half_crossing(Tfun, dw[li] if k > 0 else dw[0], x, level)
            xr = _half_crossing(Tfun, x, dw[ri] if k + 1 < len(locs) else dw[-1], level)
        except ValueError:
            continue
        widths[k] = xr - xl

    weights = atomic_weight(p, locs_a, model, detuning=True) if len(locs) else np.array([])
    pz = poles(p).detunings
    pw = atomic_weight(p, pz.real, model, detuning=True)
    offset = 0.0 if detuning else p.omega_c
    return ResonanceReport(locs_a + offset, vals_a, widths, np.asarray(weights), pz, np.asarray(pw))
