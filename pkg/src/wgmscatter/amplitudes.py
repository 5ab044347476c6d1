"""Exact steady-state single-photon scattering amplitudes and derived spectra.

Three evaluators share one calling convention, ``f(params, omega)``:

* ``amplitudes_full`` -- the complete waveguide/resonator/atom solution,
* ``amplitudes_wr`` -- atom removed (waveguide + resonator only),
* ``amplitudes_h0`` -- the no-backscattering case written as a coupled
  standing-wave channel plus a decoupled one. It is derived separately and
  serves as an independent check of ``amplitudes_full``.

``omega`` may be a scalar or an array; pass ``detuning=True`` to give
``omega - omega_c`` directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DegenerateDenominator, PreconditionViolated, UndefinedPhase
from .params import SystemParams, ValidatedParams, validate

MODELS = ("full", "wr", "h0")
ZERO_T = 1e-14
_TINY = 1e-300


@dataclass
class AmplitudeSet:
    omega: np.ndarray
    t: np.ndarray
    r: np.ndarray
    e_a: np.ndarray
    e_b: np.ndarray
    e_q: np.ndarray

    @property
    def T(self) -> np.ndarray:
        return np.abs(self.t) ** 2

    @property
    def R(self) -> np.ndarray:
        return np.abs(self.r) ** 2

    def as_tuple(self):
        return (self.t, self.r, self.e_a, self.e_b, self.e_q)


def _prepare(params: SystemParams, omega, detuning: bool):
    p = params if isinstance(params, ValidatedParams) else validate(params)
    omega = np.asarray(omega)
    omega = omega.astype(complex if np.iscomplexobj(omega) else float)
    dw = omega if detuning else omega - p.omega_c
    absolute = dw + p.omega_c if detuning else omega
    return p, dw, absolute


def _factors(p: ValidatedParams, dw):
    a = dw + 1j * p.kappa_c
    A = a + 1j * p.gamma_ext
    B = dw - p.derived.delta_detune + 1j * p.kappa_q
    return a, A, B


def _cross(p: ValidatedParams) -> float:
    # g_a* g_b h + c.c.
    return 2.0 * (np.conj(p.g_a) * p.g_b * p.h).real


def _check_denominator(den, where: str) -> None:
    if np.any(np.abs(den) < _TINY):
        raise DegenerateDenominator(f"{where}: denominator vanishes on the requested grid")


def denominator(params: SystemParams, omega, detuning: bool = False):
    """Common denominator D(omega) of all six amplitudes (a cubic in omega)."""
    p, dw, _ = _prepare(params, omega, detuning)
    _, A, B = _factors(p, dw)
    d = p.derived
    return A * (B * A - d.g_plus_sq) - _cross(p) - abs(p.h) ** 2 * B


def amplitudes_full(params: SystemParams, omega, detuning: bool = False) -> AmplitudeSet:
    """Complete solution with the waveguide coupling taken real and positive."""
    p, dw, absolute = _prepare(params, omega, detuning)
    a, A, B = _factors(p, dw)
    d = p.derived
    G2 = p.gamma_ext
    V = d.v_waveguide_mag
    h, g_a, g_b = p.h, p.g_a, p.g_b
    X = _cross(p)
    h2 = abs(h) ** 2

    den = A * (B * A - d.g_plus_sq) - X - h2 * B
    num_t = a * (B * a - d.g_plus_sq) + B * G2**2 - X - h2 * B + 1j * d.g_minus_sq * G2
    num_b = g_a * np.conj(g_b) + h * B

    if d.g_plus_sq == 0.0 and np.any(np.abs(den) < _TINY):
        # Atom decoupled and lossless: the atomic factor B is common to every
        # numerator and the denominator, so divide it out.
        return replace(amplitudes_wr(p, dw, detuning=True), omega=absolute)
    _check_denominator(den, "amplitudes_full")

    inv = 1.0 / den
    t = num_t * inv
    r = -2j * G2 * num_b * inv
    e_a = V * (B * A - abs(g_b) ** 2) * inv
    e_b = V * num_b * inv
    e_q = V * (g_a * A + h * g_b) * inv
    return AmplitudeSet(absolute, t, r, e_a, e_b, e_q)


def amplitudes_wr(params: SystemParams, omega, detuning: bool = False) -> AmplitudeSet:
    """Waveguide + resonator with the atom removed; ``g_a`` and ``g_b`` are ignored."""
    p, dw, absolute = _prepare(params, omega, detuning)
    a, A, _ = _factors(p, dw)
    G2 = p.gamma_ext
    V = p.derived.v_waveguide_mag
    h2 = abs(p.h) ** 2

    den = A * A - h2
    _check_denominator(den, "amplitudes_wr")
    inv = 1.0 / den
    t = (a * a - h2 + G2**2) * inv
    e_a = V * A * inv
    e_b = V * p.h * inv
    r = -2j * G2 * p.h * inv
    e_q = np.zeros_like(t)
    return AmplitudeSet(absolute, t, r, e_a, e_b, e_q)


def amplitudes_h0(params: SystemParams, omega, detuning: bool = False) -> AmplitudeSet:
    """No-backscattering solution as coupled standing mode + decoupled mode.

    Requires ``h == 0`` and ``|g_a| == |g_b|``. The reflected amplitude and the
    clockwise-mode amplitude carry the phase of ``g_a * conj(g_b)``.
    """
    p, dw, absolute = _prepare(params, omega, detuning)
    if p.h != 0:
        raise PreconditionViolated("amplitudes_h0 requires h == 0")
    ga, gb = abs(p.g_a), abs(p.g_b)
    if not math.isclose(ga, gb, rel_tol=1e-12, abs_tol=0.0):
        raise PreconditionViolated("amplitudes_h0 requires |g_a| == |g_b|")
    a, A, B = _factors(p, dw)
    G2 = p.gamma_ext
    V = p.derived.v_waveguide_mag
    g2 = ga * gb

    # decoupled standing mode: a single-mode resonator with linewidth G2/2 per port
    inv_free = 1.0 / A
    if g2 == 0.0:
        _check_denominator(A, "amplitudes_h0")
        t = (a - 1j * G2) * inv_free
        zero = np.zeros_like(t)
        return AmplitudeSet(absolute, t, zero, V * inv_free, zero.copy(), zero.copy())

    phase = p.g_a * np.conj(p.g_b) / g2
    den_c = B * A - 2.0 * g2
    _check_denominator(den_c, "amplitudes_h0")
    _check_denominator(A, "amplitudes_h0")
    inv_c = 1.0 / den_c
    t = (B * a - 2.0 * g2) * inv_c - 1j * G2 * inv_free
    r = phase * (-1j * B * G2 * inv_c + 1j * G2 * inv_free)
    e_a = 0.5 * V * (B * inv_c + inv_free)
    e_b = phase * 0.5 * V * (B * inv_c - inv_free)
    e_q = p.g_a * V * inv_c
    return AmplitudeSet(absolute, t, r, e_a, e_b, e_q)


_EVALUATORS = {"full": amplitudes_full, "wr": amplitudes_wr, "h0": amplitudes_h0}


def evaluate(params: SystemParams, omega, model: str = "full", detuning: bool = False) -> AmplitudeSet:
    try:
        fn = _EVALUATORS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}") from None
    return fn(params, omega, detuning=detuning)


def transmission(params: SystemParams, omega, model: str = "full", detuning: bool = False):
    """Complex transmission amplitude only."""
    return evaluate(params, omega, model, detuning).t


# ---------------------------------------------------------------- group delay

_STENCIL = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
_WEIGHTS = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def default_delay_step(params: SystemParams) -> float:
    p = params if isinstance(params, ValidatedParams) else validate(params)
    scale = max(p.gamma_ext, p.gamma_ext + p.kappa_c, p.kappa_q)
    if scale == 0.0:
        scale = max(abs(p.h), abs(p.g_a), abs(p.g_b), 1.0)
    return 1e-4 * scale


def _delay_with_mask(params, omega, model, step, detuning):
    p = params if isinstance(params, ValidatedParams) else validate(params)
    step = default_delay_step(p) if step is None else float(step)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    pts = omega[:, None] + step * _STENCIL[None, :]
    t = evaluate(p, pts, model, detuning).t
    bad = np.any(np.abs(t) < ZERO_T, axis=1)
    phase = np.unwrap(np.angle(t), axis=1)
    delay = phase @ _WEIGHTS / step
    return delay, bad


def group_delay(params: SystemParams, omega, model: str = "full", step: Optional[float] = None,
                detuning: bool = False):
    """Derivative of the transmission phase with respect to frequency.

    Five-point central difference with the phase unwrapped across the
    stencil. Raises :class:`UndefinedPhase` if ``|t|`` drops below 1e-14 at
    any stencil point.
    """
    scalar = np.ndim(omega) == 0
    delay, bad = _delay_with_mask(params, omega, model, step, detuning)
    if np.any(bad):
        where = np.atleast_1d(np.asarray(omega, dtype=float))[bad]
        raise UndefinedPhase(f"transmission vanishes near omega={where[0]!r}; group delay undefined")
    return float(delay[0]) if scalar else delay


# ------------------------------------------------------------------ spectra

COLUMNS = ("omega", "T", "R", "na", "nb", "nq", "group_delay")


@dataclass
class SpectrumTable:
    """Per-frequency observables on a strictly increasing grid.

    ``na``, ``nb``, ``nq`` are the excitations normalized as
    ``gamma_ext / 2 * |e|**2``. ``group_delay`` is NaN where the
    transmission phase is undefined.
    """

    grid: np.ndarray
    T: np.ndarray
    R: np.ndarray
    na: np.ndarray
    nb: np.ndarray
    nq: np.ndarray
    group_delay: np.ndarray

    def __post_init__(self):
        for name in COLUMNS[1:]:
            if len(getattr(self, name)) != len(self.grid):
                raise ValueError(f"column {name} length differs from grid")

    def __len__(self):
        return len(self.grid)

    def column(self, name: str) -> np.ndarray:
        return self.grid if name == "omega" else getattr(self, name)

    def equals(self, other: "SpectrumTable") -> bool:
        return all(np.array_equal(self.column(c), other.column(c), equal_nan=True) for c in COLUMNS)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            data = np.column_stack([self.column(c) for c in COLUMNS])
            for row in data:
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SpectrumTable":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected spectrum header {header}")
            data = np.array([[float(x) for x in line.split(",")] for line in fh if line.strip()])
        data = data.reshape(-1, len(COLUMNS))
        return cls(*(data[:, i].copy() for i in range(len(COLUMNS))))

    def to_dict(self) -> dict:
        out = {}
        for c in COLUMNS:
            out[c] = [None if not math.isfinite(x) else float(x) for x in self.column(c)]
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumTable":
        cols = [np.array([math.nan if x is None else x for x in d[c]], dtype=float) for c in COLUMNS]
        return cls(*cols)

    @classmethod
    def from_json(cls, path) -> "SpectrumTable":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def spectrum(params: SystemParams, grid, model: str = "full", detuning: bool = False,
             delay_step: Optional[float] = None) -> SpectrumTable:
    """Evaluate ``model`` on every grid point and tabulate the observables."""
    p = params if isinstance(params, ValidatedParams) else validate(params)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    amp = evaluate(p, grid, model, detuning)
    half = 0.5 * p.gamma_ext
    delay, bad = _delay_with_mask(p, grid, model, delay_step, detuning)
    delay = np.where(bad, np.nan, delay)
    return SpectrumTable(
        grid=grid.copy(),
        T=np.abs(amp.t) ** 2,
        R=np.abs(amp.r) ** 2,
        na=half * np.abs(amp.e_a) ** 2,
        nb=half * np.abs(amp.e_b) ** 2,
        nq=half * np.abs(amp.e_q) ** 2,
        group_delay=delay,
    )
