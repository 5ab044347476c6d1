"""Time-domain integration of the single-excitation equations of motion.

The waveguide is eliminated exactly: the field at the coupling point is the
mean of the incoming and outgoing fields, which turns the waveguide into a
drive term plus a damping ``gamma_ext`` on each mode, with outputs
``phi_out = phi_in - i V e_a`` and ``phi_refl = -i V e_b``. Integration is
classic fixed-step RK4 in a frame rotating at a reference frequency.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .errors import NotSettled, StepTooLarge
from .params import SystemParams, ValidatedParams, validate

SHAPES = ("gaussian", "exponential", "sampled")


def _valid(params) -> ValidatedParams:
    return params if isinstance(params, ValidatedParams) else validate(params)


def hamiltonian(params: SystemParams) -> np.ndarray:
    """Non-Hermitian 3x3 generator acting on ``(e_a, e_b, e_q)``, waveguide damping included."""
    p = _valid(params)
    wr = p.omega_c - 1j * (p.kappa_c + p.gamma_ext)
    return np.array([
        [wr, np.conj(p.h), np.conj(p.g_a)],
        [p.h, wr, np.conj(p.g_b)],
        [p.g_a, p.g_b, p.omega_atom - 1j * p.kappa_q],
    ], dtype=complex)


def reduced_rhs(params: SystemParams, state, phi_in: complex) -> np.ndarray:
    """Time derivative of ``(e_a, e_b, e_q)`` for a right-moving input ``phi_in``."""
    p = _valid(params)
    state = np.asarray(state, dtype=complex)
    drive = np.zeros(3, dtype=complex)
    drive[0] = -1j * p.derived.v_waveguide_mag * phi_in
    return -1j * hamiltonian(p) @ state + drive


@dataclass
class PulseSpec:
    """Single-photon input wavepacket, normalized to unit energy.

    ``gaussian``: amplitude ``exp(-(t - delay)**2 / (2 width**2))``.
    ``exponential``: amplitude ``exp(-(t - delay) / (2 width))`` for ``t >= delay``.
    ``sampled``: complex envelope samples ``values`` at ``times``, linearly
    interpolated and zero outside. The carrier ``exp(-i carrier t)`` multiplies
    every shape.
    """

    shape: str = "gaussian"
    carrier: float = 0.0
    width: float = 1.0
    delay: float = 0.0
    times: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    _norm: float = field(default=1.0, init=False, repr=False)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.shape == "sampled":
            if self.times is None or self.values is None:
                raise ValueError("sampled pulse needs times and values")
            self.times = np.asarray(self.times, dtype=float)
            self.values = np.asarray(self.values, dtype=complex)
            if self.times.shape != self.values.shape or np.any(np.diff(self.times) <= 0):
                raise ValueError("sampled pulse needs matching, strictly increasing times")
            energy = trapezoid(np.abs(self.values) ** 2, self.times)
            if not (math.isfinite(energy) and energy > 0):
                raise ValueError("sampled pulse must have finite, nonzero energy")
            self._norm = 1.0 / math.sqrt(energy)
        elif not self.width > 0:
            raise ValueError("pulse width must be positive")
        elif self.shape == "gaussian":
            self._norm = (math.pi * self.width**2) ** -0.25
        else:
            self._norm = self.width**-0.5

    def envelope(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.shape == "gaussian":
            env = np.exp(-((t - self.delay) ** 2) / (2.0 * self.width**2))
        elif self.shape == "exponential":
            x = t - self.delay
            env = np.where(x >= 0, np.exp(-np.maximum(x, 0.0) / (2.0 * self.width)), 0.0)
        else:
            env = (np.interp(t, self.times, self.values.real, left=0.0, right=0.0)
                   + 1j * np.interp(t, self.times, self.values.imag, left=0.0, right=0.0))
        return self._norm * env

    def field(self, t, frame: float = 0.0) -> np.ndarray:
        """Input amplitude at ``t``, expressed in a frame rotating at ``frame``."""
        t = np.asarray(t, dtype=float)
        return self.envelope(t) * np.exp(-1j * (self.carrier - frame) * t)


@dataclass
class EnergyLedger:
    E_in: float
    E_T: float
    E_R: float
    E_dissipated: float
    E_stored: float

    @property
    def residual(self) -> float:
        return self.E_in - self.E_T - self.E_R - self.E_dissipated - self.E_stored

    def as_dict(self) -> dict:
        return {"E_in": self.E_in, "E_T": self.E_T, "E_R": self.E_R, "E_dissipated": self.E_dissipated,
                "E_stored": self.E_stored, "residual": self.residual}


@dataclass
class ScatteringRecord:
    times: np.ndarray
    phi_in: np.ndarray
    phi_out: np.ndarray
    phi_refl: np.ndarray
    states: np.ndarray  # (n, 3): e_a, e_b, e_q
    energy: EnergyLedger
    dt: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,re_in,im_in,re_out,im_out,re_refl,im_refl\n")
            for row in zip(self.times, self.phi_in, self.phi_out, self.phi_refl):
                t, a, b, c = row
                vals = (t, a.real, a.imag, b.real, b.imag, c.real, c.imag)
                fh.write(",".join(f"{x:.17g}" for x in vals) + "\n")

    def summary(self) -> dict:
        return {"dt": self.dt, "t_end": float(self.times[-1]), "steps": len(self.times) - 1,
                "energy": self.energy.as_dict()}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def _rk4(M: np.ndarray, c: np.ndarray, y0: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """Integrate ``y' = M y + c u(t)``; ``u`` holds the drive at every half step."""
    n = (len(u) - 1) // 2
    ys = np.empty((n + 1, len(y0)), dtype=complex)
    y = y0.astype(complex)
    ys[0] = y
    half = 0.5 * dt
    for k in range(n):
        u0, u1, u2 = u[2 * k], u[2 * k + 1], u[2 * k + 2]
        k1 = M @ y + c * u0
        k2 = M @ (y + half * k1) + c * u1
        k3 = M @ (y + half * k2) + c * u1
        k4 = M @ (y + dt * k3) + c * u2
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[k + 1] = y
    return ys


def _check_stable(M: np.ndarray, dt: float) -> None:
    lam = np.max(np.abs(np.linalg.eigvals(M)))
    if dt * lam > 2.5:
        raise ValueError(f"dt={dt!r} too large for stable RK4 (dt*|lambda|max = {dt * lam:.3g})")


def _run(p: ValidatedParams, pulse: PulseSpec, t_end: float, dt: float) -> ScatteringRecord:
    n = int(round(t_end / dt))
    if n < 1:
        raise ValueError("t_end must exceed dt")
    frame = p.omega_c
    M = -1j * (hamiltonian(p) - frame * np.eye(3))
    _check_stable(M, dt)
    V = p.derived.v_waveguide_mag
    c = np.array([-1j * V, 0.0, 0.0])
    half_times = np.arange(2 * n + 1) * (0.5 * dt)
    u = pulse.field(half_times, frame)
    ys = _rk4(M, c, np.zeros(3, dtype=complex), u, dt)

    times = half_times[::2]
    rot = np.exp(-1j * frame * times)
    phi_in = u[::2] * rot
    e = ys * rot[:, None]
    phi_out = phi_in - 1j * V * e[:, 0]
    phi_refl = -1j * V * e[:, 1]
    loss = 2.0 * p.kappa_c * (np.abs(e[:, 0]) ** 2 + np.abs(e[:, 1]) ** 2) + 2.0 * p.kappa_q * np.abs(e[:, 2]) ** 2
    ledger = EnergyLedger(
        E_in=float(trapezoid(np.abs(phi_in) ** 2, times)),
        E_T=float(trapezoid(np.abs(phi_out) ** 2, times)),
        E_R=float(trapezoid(np.abs(phi_refl) ** 2, times)),
        E_dissipated=float(trapezoid(loss, times)),
        E_stored=float(np.sum(np.abs(e[-1]) ** 2)),
    )
    return ScatteringRecord(times, phi_in, phi_out, phi_refl, e, ledger, dt)


def scatter_pulse(params: SystemParams, pulse: PulseSpec, t_end: float, dt: float,
                  halving_tol: Optional[float] = 1e-6) -> ScatteringRecord:
    """Send ``pulse`` in from the left and integrate over ``[0, t_end]``.

    When ``halving_tol`` is set the run is repeated with ``dt/2`` and
    :class:`StepTooLarge` is raised if the transmitted energy changes by more
    than that amount.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    p = _valid(params)
    rec = _run(p, pulse, t_end, dt)
    if halving_tol is not None:
        fine = _run(p, pulse, t_end, dt / 2.0)
        change = abs(fine.energy.E_T - rec.energy.E_T)
        if change > halving_tol:
            raise StepTooLarge(f"halving dt changed E_T by {change:.3e} > {halving_tol:.3e}")
    return rec


@dataclass
class SteadyState:
    omega: np.ndarray
    t_num: np.ndarray
    r_num: np.ndarray
    drift: np.ndarray


def steady_state_transfer(params: SystemParams, omega, settle_time: float, dt: Optional[float] = None,
                          tol: float = 1e-8) -> SteadyState:
    """Drive with ``exp(-i omega t)`` from rest and read off ``t`` and ``r`` after settling.

    ``omega`` may be an array; all frequencies are integrated together. The
    amplitudes are compared over the last tenth of the run and
    :class:`NotSettled` is raised if they drift by more than ``tol``.
    """
    p = _valid(params)
    scalar = np.ndim(omega) == 0
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    H = hamiltonian(p)
    # one batch entry per frequency, each in its own rotating frame
    M = -1j * (H[None, :, :] - omega[:, None, None] * np.eye(3)[None, :, :])
    lam = np.max(np.abs(np.linalg.eigvals(M)))
    if dt is None:
        dt = 1.0 / lam if lam > 0 else 1.0
    elif dt * lam > 2.5:
        raise ValueError(f"dt={dt!r} too large for stable RK4")
    n = max(int(math.ceil(settle_time / dt)), 10)
    V = p.derived.v_waveguide_mag
    c = np.zeros((len(omega), 3), dtype=complex)
    c[:, 0] = -1j * V

    def f(y):
        return np.einsum("bij,bj->bi", M, y) + c

    y = np.zeros((len(omega), 3), dtype=complex)
    mark = n - max(n // 10, 1)
    y_mark = y
    half = 0.5 * dt
    for k in range(n):
        k1 = f(y)
        k2 = f(y + half * k1)
        k3 = f(y + half * k2)
        k4 = f(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k + 1 == mark:
            y_mark = y.copy()

    t_num = 1.0 - 1j * V * y[:, 0]
    r_num = -1j * V * y[:, 1]
    t_old = 1.0 - 1j * V * y_mark[:, 0]
    r_old = -1j * V * y_mark[:, 1]
    drift = np.maximum(np.abs(t_num - t_old), np.abs(r_num - r_old))
    if np.any(drift > tol):
        worst = float(drift.max())
        raise NotSettled(f"steady state drifted by {worst:.3e} (> {tol:.1e}); increase settle_time")
    if scalar:
        return SteadyState(omega, complex(t_num[0]), complex(r_num[0]), drift)
    return SteadyState(omega, t_num, r_num, drift)


def slowest_decay(params: SystemParams) -> float:
    """Smallest decay rate ``-Im(lambda)`` among the modes; sets the settling time."""
    lam = np.linalg.eigvals(hamiltonian(params))
    return float(np.min(-lam.imag))
