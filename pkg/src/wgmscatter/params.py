"""Physical parameter model for the waveguide / WGM resonator / two-level atom system.

All frequencies and rates share one unit. Internally the waveguide group
velocity is 1 and the atomic ground-state energy is 0, so the photon
frequency is the only spectral variable and the waveguide coupling is
``V = sqrt(2 * gamma_ext)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import NegativeRate, NonFiniteParameter

RATE_FIELDS = ("gamma_ext", "kappa_c", "kappa_q")
REAL_FIELDS = ("omega_c", "omega_atom") + RATE_FIELDS
COMPLEX_FIELDS = ("g_a", "g_b", "h")


def reduce_angle(x: float) -> float:
    """Map an angle onto (-pi, pi]."""
    r = math.fmod(x + math.pi, 2.0 * math.pi)
    if r <= 0.0:
        r += 2.0 * math.pi
    return r - math.pi


@dataclass(frozen=True)
class DerivedCouplings:
    v_waveguide_mag: float
    g_plus_sq: float
    g_minus_sq: float
    delta_detune: float
    delta_theta: Optional[float]


@dataclass(frozen=True)
class SystemParams:
    """Parameters of the effective Hamiltonian.

    ``gamma_ext`` is the external (waveguide) linewidth, ``kappa_c`` and
    ``kappa_q`` the intrinsic loss rates of resonator and atom, ``g_a``/``g_b``
    the atom couplings to the counter-clockwise/clockwise modes and ``h`` the
    backscattering between the two modes.
    """

    omega_c: float = 0.0
    omega_atom: float = 0.0
    gamma_ext: float = 1.0
    kappa_c: float = 0.0
    kappa_q: float = 0.0
    g_a: complex = 0.0
    g_b: complex = 0.0
    h: complex = 0.0

    def replace(self, **changes) -> "SystemParams":
        values = {f.name: getattr(self, f.name) for f in fields(SystemParams)}
        values.update(changes)
        return SystemParams(**values)

    @property
    def delta(self) -> float:
        """Atom-resonator detuning ``omega_atom - omega_c``."""
        return self.omega_atom - self.omega_c

    def scaled(self, factor: float) -> "SystemParams":
        """Jointly rescale every rate, coupling and detuning about ``omega_c``."""
        return self.replace(
            omega_atom=self.omega_c + factor * self.delta,
            gamma_ext=factor * self.gamma_ext,
            kappa_c=factor * self.kappa_c,
            kappa_q=factor * self.kappa_q,
            g_a=factor * self.g_a,
            g_b=factor * self.g_b,
            h=factor * self.h,
        )


@dataclass(frozen=True)
class ValidatedParams(SystemParams):
    derived: DerivedCouplings = field(default=None, compare=False, repr=False)  # type: ignore[assignment]

    def replace(self, **changes) -> "ValidatedParams":
        return validate(SystemParams.replace(self, **changes))


def delta_theta_of(params: SystemParams) -> Optional[float]:
    """Phase mismatch ``arg(h) + arg(g_b) - arg(g_a) - pi/2`` on (-pi, pi].

    Returns ``None`` when any of ``g_a``, ``g_b``, ``h`` is exactly zero.
    """
    g_a, g_b, h = complex(params.g_a), complex(params.g_b), complex(params.h)
    if g_a == 0 or g_b == 0 or h == 0:
        return None
    return reduce_angle(cmath.phase(g_b) + cmath.phase(h) - cmath.phase(g_a) - math.pi / 2)


def validate(params: SystemParams) -> ValidatedParams:
    """Check finiteness and signs, then attach the derived couplings."""
    values = {}
    for name in REAL_FIELDS:
        v = getattr(params, name)
        if isinstance(v, complex):
            if v.imag != 0.0:
                raise NonFiniteParameter(f"{name} must be real, got {v!r}")
            v = v.real
        v = float(v)
        if not math.isfinite(v):
            raise NonFiniteParameter(f"{name} is not finite: {v!r}")
        values[name] = v
    for name in RATE_FIELDS:
        if values[name] < 0.0:
            raise NegativeRate(f"{name} must be >= 0, got {values[name]!r}")
    for name in COMPLEX_FIELDS:
        v = complex(getattr(params, name))
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise NonFiniteParameter(f"{name} is not finite: {v!r}")
        values[name] = v

    ga2 = abs(values["g_a"]) ** 2
    gb2 = abs(values["g_b"]) ** 2
    base = SystemParams(**values)
    derived = DerivedCouplings(
        v_waveguide_mag=math.sqrt(2.0 * values["gamma_ext"]),
        g_plus_sq=ga2 + gb2,
        g_minus_sq=gb2 - ga2,
        delta_detune=values["omega_atom"] - values["omega_c"],
        delta_theta=delta_theta_of(base),
    )
    return ValidatedParams(**values, derived=derived)
