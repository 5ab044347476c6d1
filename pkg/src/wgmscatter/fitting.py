"""Least-squares fitting of transmission spectra.

Two models are supported. ``wr`` is the bare waveguide-resonator doublet with
free ``(omega_c, |h|, kappa_c, gamma_ext)``. ``full`` adds the atom through
``g`` (``|g_a| = |g_b|``), ``omega_atom`` and ``kappa_q``. Any subset of the
full parameters can be held fixed. Positive quantities are optimized in log
space and frequencies in units of an estimated linewidth, so the simplex
tolerance is effectively relative.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from .amplitudes import evaluate
from .errors import NoConvergence, ParseError, PreconditionViolated, Underdetermined, UnitMissing
from .params import SystemParams, validate

UNITS = ("2pi-MHz", "dimensionless-gamma")
# column-name suffix -> (canonical unit, factor to canonical)
_SUFFIX_UNITS = {
    "hz": ("2pi-MHz", 1e-6),
    "khz": ("2pi-MHz", 1e-3),
    "mhz": ("2pi-MHz", 1.0),
    "ghz": ("2pi-MHz", 1e3),
    "2pi-mhz": ("2pi-MHz", 1.0),
    "gamma": ("dimensionless-gamma", 1.0),
    "dimensionless-gamma": ("dimensionless-gamma", 1.0),
}
_CANON_SUFFIX = {"2pi-MHz": "MHz", "dimensionless-gamma": "gamma"}

WR_PARAMS = ("omega_c", "h", "kappa_c", "gamma_ext")
FULL_PARAMS = WR_PARAMS + ("g", "omega_atom", "kappa_q")
_LINEAR = ("omega_c", "omega_atom")
_BACKGROUND = ("scale", "offset")

MIN_ROWS_WR = 8
SAMPLES_PER_PARAM = 3


# ---------------------------------------------------------------- spectra


@dataclass
class MeasuredSpectrum:
    """Transmission samples on a strictly increasing detuning grid."""

    detuning: np.ndarray
    transmission: np.ndarray
    unit: str = "dimensionless-gamma"
    background: Optional[float] = None

    def __post_init__(self):
        self.detuning = np.asarray(self.detuning, dtype=float)
        self.transmission = np.asarray(self.transmission, dtype=float)
        if self.detuning.shape != self.transmission.shape or self.detuning.ndim != 1:
            raise ValueError("detuning and transmission must be 1-D arrays of equal length")
        if self.unit not in UNITS:
            raise UnitMissing(f"unknown unit {self.unit!r}; expected one of {UNITS}")
        if not (np.all(np.isfinite(self.detuning)) and np.all(np.isfinite(self.transmission))):
            raise ValueError("spectrum contains non-finite values")
        if np.any(np.diff(self.detuning) <= 0):
            raise ValueError("detunings must be strictly increasing; use normalize()")

    def __len__(self):
        return len(self.detuning)

    @classmethod
    def normalize(cls, detuning, trans, unit: str, background: Optional[float] = None) -> "MeasuredSpectrum":
        """Stable-sort by detuning and average the transmission of repeated detunings."""
        x = np.asarray(detuning, dtype=float)
        y = np.asarray(trans, dtype=float)
        order = np.argsort(x, kind="stable")
        x, y = x[order], y[order]
        ux, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
        uy = np.bincount(inverse, weights=y) / counts
        return cls(ux, uy, unit, background)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            if self.background is not None:
                fh.write(f"# background: {self.background:.17g}\n")
            fh.write(f"detuning_{_CANON_SUFFIX[self.unit]},transmission\n")
            for x, y in zip(self.detuning, self.transmission):
                fh.write(f"{x:.17g},{y:.17g}\n")


def _unit_from_token(token: str) -> Optional[Tuple[str, float]]:
    return _SUFFIX_UNITS.get(token.strip().lower())


def _unit_from_header(name: str) -> Optional[Tuple[str, float]]:
    m = re.search(r"[_\s\[(]([A-Za-z0-9-]+)[\])]?\s*$", name.strip())
    return _unit_from_token(m.group(1)) if m else None


def load_spectrum(source, unit: Optional[str] = None) -> MeasuredSpectrum:
    """Read a two-column CSV of (detuning, transmission).

    ``source`` is a path or an open text stream. The unit comes from the first
    header field suffix (``detuning_MHz``), a ``# unit: ...`` comment, or the
    ``unit`` argument, in that order of precedence. A ``# background: x``
    comment is kept as metadata.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(os.fspath(source), newline="") as fh:
            text = fh.read()

    found_unit = None
    background = None
    xs, ys = [], []
    header_seen = False
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        first = row[0].strip()
        if first.startswith("#"):
            key, _, value = ",".join(row).lstrip("#").partition(":")
            key = key.strip().lower()
            if key == "unit":
                found_unit = _unit_from_token(value) or _unit_from_token(value.replace("2π", "2pi"))
                if found_unit is None:
                    raise UnitMissing(f"line {lineno}: unrecognized unit {value.strip()!r}")
            elif key == "background":
                try:
                    background = float(value)
                except ValueError:
                    raise ParseError(f"line {lineno}: background {value.strip()!r} is not a number") from None
            continue
        if len(row) != 2:
            raise ParseError(f"line {lineno}: expected 2 columns, got {len(row)}")
        try:
            x, y = float(row[0]), None
        except ValueError:
            x = None
        if x is None:
            if header_seen or xs:
                raise ParseError(f"line {lineno}, column 1: {row[0]!r} is not a number")
            header_seen = True
            header_unit = _unit_from_header(row[0])
            if header_unit is not None:
                found_unit = header_unit
            continue
        try:
            y = float(row[1])
        except ValueError:
            raise ParseError(f"line {lineno}, column 2: {row[1]!r} is not a number") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError(f"line {lineno}: non-finite value")
        xs.append(x)
        ys.append(y)

    if found_unit is None and unit is not None:
        found_unit = _unit_from_token(unit)
        if found_unit is None:
            raise UnitMissing(f"unrecognized unit {unit!r}")
    if found_unit is None:
        raise UnitMissing("no unit in header, '# unit:' comment or argument")
    if not xs:
        raise ParseError("no data rows")
    canon, factor = found_unit
    return MeasuredSpectrum.normalize(np.array(xs) * factor, ys, canon, background)


def synthesize_spectrum(params: SystemParams, detuning, model: str = "full", noise: float = 0.0,
                        seed: Optional[int] = None, unit: str = "dimensionless-gamma") -> MeasuredSpectrum:
    """Model transmission on ``detuning`` (relative to ``omega = 0``), with optional
    multiplicative Gaussian noise of relative size ``noise``."""
    x = np.asarray(detuning, dtype=float)
    T = evaluate(params, x, model=model).T
    if noise:
        rng = np.random.default_rng(seed)
        T = T * (1.0 + noise * rng.standard_normal(T.shape))
    return MeasuredSpectrum(x, T, unit)


# ---------------------------------------------------------------- results


@dataclass
class StartRecord:
    index: int
    initial: Dict[str, float]
    final: Dict[str, float]
    residual: float
    iterations: int
    converged: bool


@dataclass
class FitResult:
    model: str
    fitted: Dict[str, float]
    params: SystemParams
    residual: float
    iterations: int
    converged: bool
    multistart_rank: int
    degenerate: bool = False
    spread: Dict[str, float] = field(default_factory=dict)
    starts: List[StartRecord] = field(default_factory=list)
    unit: str = "dimensionless-gamma"
    seed: Optional[int] = None

    @property
    def splitting(self) -> float:
        """Doublet splitting ``2 sqrt(|h|^2 - gamma_ext^2)`` (zero below threshold)."""
        h = self.fitted["h"]
        G = self.fitted["gamma_ext"]
        return 2.0 * math.sqrt(max(h * h - G * G, 0.0))

    def to_dict(self) -> dict:
        p = self.params
        return {
            "model": self.model,
            "unit": self.unit,
            "seed": self.seed,
            "fitted": self.fitted,
            "params": {
                "omega_c": p.omega_c, "omega_atom": p.omega_atom, "gamma_ext": p.gamma_ext,
                "kappa_c": p.kappa_c, "kappa_q": p.kappa_q,
                "g_a": [complex(p.g_a).real, complex(p.g_a).imag],
                "g_b": [complex(p.g_b).real, complex(p.g_b).imag],
                "h": [complex(p.h).real, complex(p.h).imag],
            },
            "splitting": self.splitting,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "multistart_rank": self.multistart_rank,
            "degenerate": self.degenerate,
            "spread": self.spread,
            "starts": [asdict(s) for s in self.starts],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


# ---------------------------------------------------------------- helpers


def _t_wr(dw, h2, kc, G):
    a = dw + 1j * kc
    A = a + 1j * G
    t = (a * a - h2 + G * G) / (A * A - h2)
    return t.real ** 2 + t.imag ** 2


def _dip_width(x, y, i, level):
    """Full width of the dip at index ``i`` where ``y`` crosses ``level``."""
    n = len(x)

    def cross(step):
        j = i
        while 0 <= j + step < n and y[j + step] < level:
            j += step
        k = j + step
        if not 0 <= k < n:
            return None
        # linear interpolation between j (below) and k (above)
        f = (level - y[j]) / (y[k] - y[j]) if y[k] != y[j] else 0.5
        return x[j] + f * (x[k] - x[j])

    left, right = cross(-1), cross(+1)
    if left is None and right is None:
        return None
    if left is None:
        return 2.0 * (right - x[i])
    if right is None:
        return 2.0 * (x[i] - left)
    return right - left


def heuristic_wr(spec: MeasuredSpectrum) -> Dict[str, float]:
    """Initial ``(omega_c, h, kappa_c, gamma_ext)`` from the dip structure.

    Assumes the under-coupled branch (``kappa_c > gamma_ext`` for a single dip);
    the fitters add the mirrored branch as a separate start.
    """
    x, y = spec.detuning, spec.transmission
    base = float(np.quantile(y, 0.9))
    if base <= 0:
        base = 1.0
    y = y / base
    dx = float(np.min(np.diff(x))) if len(x) > 1 else 1.0
    i1 = int(np.argmin(y))
    depth1 = 1.0 - y[i1]
    level = 1.0 - 0.5 * max(depth1, 1e-12)
    w = _dip_width(x, y, i1, level) or dx
    w = max(w, dx)

    # second dip: lowest point well away from the first
    far = np.abs(x - x[i1]) > 1.5 * w
    doublet = False
    if np.any(far):
        idx = np.flatnonzero(far)
        i2 = int(idx[np.argmin(y[idx])])
        depth2 = 1.0 - y[i2]
        doublet = depth2 > 0.3 * depth1 and depth2 > 0.02
    L = 0.5 * w
    tmin = math.sqrt(max(float(y[i1]), 0.0))
    if doublet:
        center = 0.5 * (x[i1] + x[i2])
        split = 0.5 * abs(x[i2] - x[i1])
        kc = L * min(tmin, 0.999)
        G = L - kc
        h = math.hypot(split, G)
    else:
        center = float(x[i1])
        kc = 0.5 * L * (1.0 + tmin)
        G = 0.5 * L * (1.0 - tmin)
        h = 0.1 * L
    tiny = 1e-6 * L
    return {"omega_c": float(center), "h": max(h, tiny), "kappa_c": max(kc, tiny), "gamma_ext": max(G, tiny)}


class _Problem:
    """Maps a free-parameter vector to model transmission."""

    def __init__(self, spec: MeasuredSpectrum, model: str, free: Sequence[str], template: Dict[str, float],
                 phases: Dict[str, complex], lin_scale: float):
        self.x = spec.detuning
        self.y = spec.transmission
        self.model = model
        self.free = list(free)
        self.template = dict(template)
        self.phases = phases
        self.lin_scale = lin_scale
        self.fixed_background = spec.background
        self.nfev = 0

    def encode(self, values: Mapping[str, float]) -> np.ndarray:
        out = []
        for name in self.free:
            v = values[name]
            if name in _LINEAR or name == "offset":
                out.append(v / self.lin_scale if name in _LINEAR else v)
            else:
                out.append(math.log(max(v, 1e-300)))
        return np.array(out, dtype=float)

    def decode(self, z) -> Dict[str, float]:
        values = dict(self.template)
        for name, v in zip(self.free, z):
            if name in _LINEAR:
                values[name] = float(v) * self.lin_scale
            elif name == "offset":
                values[name] = float(v)
            else:
                values[name] = math.exp(float(v))
        return values

    def params(self, values: Mapping[str, float]) -> SystemParams:
        g = values.get("g", 0.0)
        return SystemParams(
            omega_c=values["omega_c"],
            omega_atom=values.get("omega_atom", values["omega_c"]),
            gamma_ext=values["gamma_ext"],
            kappa_c=values["kappa_c"],
            kappa_q=values.get("kappa_q", 0.0),
            g_a=g * self.phases["g_a"],
            g_b=g * self.phases["g_b"],
            h=values["h"] * self.phases["h"],
        )

    def model_T(self, values: Mapping[str, float]) -> np.ndarray:
        if self.model == "wr":
            T = _t_wr(self.x - values["omega_c"], values["h"] ** 2, values["kappa_c"], values["gamma_ext"])
        else:
            T = evaluate(validate(self.params(values)), self.x).T
        if "scale" in values:
            T = values["scale"] * T + values.get("offset", 0.0)
        elif self.fixed_background is not None:
            T = self.fixed_background * T
        return T

    def sse(self, z) -> float:
        self.nfev += 1
        values = self.decode(z)
        with np.errstate(all="ignore"):
            r = self.model_T(values) - self.y
            s = float(np.dot(r, r))
        return s if math.isfinite(s) else 1e300

    def rms(self, values) -> float:
        r = self.model_T(values) - self.y
        return float(math.sqrt(np.dot(r, r) / len(r)))


def _simplex(z0: np.ndarray, step: float = 0.1) -> np.ndarray:
    sim = np.tile(z0, (len(z0) + 1, 1))
    for i in range(len(z0)):
        sim[i + 1, i] += step
    return sim


def _descend(problem: _Problem, z0: np.ndarray, xatol: float, maxiter: int, max_restarts: int = 6):
    """Nelder-Mead, restarted from its own optimum until it stops improving."""
    z, f = np.array(z0, dtype=float), problem.sse(z0)
    iters = 0
    converged = False
    step = 0.3
    for _ in range(max_restarts + 1):
        # termination is governed by the simplex diameter; fatol only has to be reachable
        res = minimize(problem.sse, z, method="Nelder-Mead",
                       options={"initial_simplex": _simplex(z, step), "xatol": xatol,
                                "fatol": 1e-14 * max(f, 1e-300), "maxiter": maxiter, "maxfev": 4 * maxiter})
        iters += int(res.nit)
        converged = bool(res.success)
        improved = res.fun < f * (1.0 - 1e-9) - 1e-300
        if res.fun <= f:
            z, f = res.x, float(res.fun)
        if not improved:
            break
        step = 0.05
    return z, f, iters, converged


def _run_starts(problem: _Problem, starts: List[Dict[str, float]], xatol: float, maxiter: int):
    records = []
    best = None
    for k, init in enumerate(starts):
        z0 = problem.encode(init)
        z, f, iters, conv = _descend(problem, z0, xatol, maxiter)
        final = problem.decode(z)
        rec = StartRecord(k, {n: init[n] for n in problem.free}, {n: final[n] for n in problem.free},
                          problem.rms(final), iters, conv)
        records.append(rec)
        # lowest residual wins; ties keep the earlier start
        if best is None or rec.residual < best.residual:
            best = rec
    return best, records


def _spread(problem: _Problem, records: List[StartRecord], best: StartRecord) -> Dict[str, float]:
    """Range of each free parameter over starts that reach (nearly) the best residual."""
    tol = max(2.0 * best.residual, best.residual + 1e-9)
    good = [r for r in records if r.residual <= tol]
    out = {}
    for name in problem.free:
        vals = np.array([r.final[name] for r in good])
        if name in _LINEAR or name == "offset":
            out[name] = float((vals.max() - vals.min()) / problem.lin_scale)
        else:
            out[name] = float(np.log(max(vals.max(), 1e-300) / max(vals.min(), 1e-300)))
    return out


def _random_starts(rng: np.random.Generator, base: Dict[str, float], free: Sequence[str], n: int,
                   lin_scale: float, lin_widths: Mapping[str, float]) -> List[Dict[str, float]]:
    out = []
    for _ in range(n):
        s = dict(base)
        for name in free:
            if name in _LINEAR:
                s[name] = base[name] + lin_widths.get(name, lin_scale) * rng.standard_normal()
            elif name == "offset":
                s[name] = base[name] + 0.01 * rng.standard_normal()
            else:
                s[name] = base[name] * math.exp(0.7 * rng.standard_normal())
        out.append(s)
    return out


def _finish(problem, model, best, records, unit, seed, strict) -> FitResult:
    fitted = {**problem.template, **best.final}
    spread = _spread(problem, records, best)
    scale = max(float(np.max(np.abs(problem.y))), 1e-300)
    degenerate = best.residual < 1e-6 * scale and any(v > 0.1 for v in spread.values())
    result = FitResult(
        model=model,
        fitted={k: float(v) for k, v in fitted.items()},
        params=problem.params(fitted),
        residual=best.residual,
        iterations=sum(r.iterations for r in records),
        converged=best.converged,
        multistart_rank=best.index,
        degenerate=degenerate,
        spread=spread,
        starts=records,
        unit=unit,
        seed=seed,
    )
    if strict and not result.converged:
        err = NoConvergence(f"best start {best.index} hit the iteration cap (residual {best.residual:.3e})")
        err.result = result
        raise err
    return result


# ---------------------------------------------------------------- fitters


def fit_wr(spectrum: MeasuredSpectrum, init: Optional[Mapping[str, float]] = None, multistart_n: int = 6,
           seed: Optional[int] = 0, fit_background: bool = False, xatol: float = 1e-10,
           maxiter: int = 4000, strict: bool = False) -> FitResult:
    """Fit the bare resonator doublet: free ``omega_c, h, kappa_c, gamma_ext``.

    Starts are the heuristic (or ``init``) guess, its over-coupled mirror
    (``kappa_c`` and ``gamma_ext`` exchanged), then ``multistart_n`` seeded
    random perturbations. ``h`` is reported as a magnitude since the model
    only depends on ``|h|``.
    """
    if len(spectrum) < MIN_ROWS_WR:
        raise Underdetermined(f"wr fit needs at least {MIN_ROWS_WR} rows, got {len(spectrum)}")
    base = dict(heuristic_wr(spectrum))
    if init is not None:
        base.update({k: float(abs(v)) if k != "omega_c" else float(v) for k, v in init.items() if k in WR_PARAMS})
    free = list(WR_PARAMS)
    if fit_background:
        base.update(scale=1.0, offset=0.0)
        free += list(_BACKGROUND)
    else:
        base.pop("scale", None)
    lin_scale = max(base["kappa_c"] + base["gamma_ext"], 1e-12)
    phases = {"g_a": 1.0, "g_b": 1.0, "h": 1.0}
    problem = _Problem(spectrum, "wr", free, base, phases, lin_scale)

    mirror = dict(base, kappa_c=base["gamma_ext"], gamma_ext=base["kappa_c"])
    rng = np.random.default_rng(seed)
    starts = [base, mirror] + _random_starts(rng, base, free, multistart_n, lin_scale, {})
    best, records = _run_starts(problem, starts, xatol, maxiter)
    return _finish(problem, "wr", best, records, spectrum.unit, seed, strict)


def _template_values(p: SystemParams) -> Tuple[Dict[str, float], Dict[str, complex]]:
    g_a, g_b, h = complex(p.g_a), complex(p.g_b), complex(p.h)
    if abs(abs(g_a) - abs(g_b)) > 1e-12 * max(abs(g_a), abs(g_b), 1.0):
        raise PreconditionViolated("fit_full uses a single g = |g_a| = |g_b|")

    def unit(z):
        return z / abs(z) if z != 0 else 1.0

    values = {"omega_c": p.omega_c, "h": abs(h), "kappa_c": p.kappa_c, "gamma_ext": p.gamma_ext,
              "g": abs(g_a), "omega_atom": p.omega_atom, "kappa_q": p.kappa_q}
    return values, {"g_a": unit(g_a), "g_b": unit(g_b), "h": unit(h)}


def fit_full(spectrum: MeasuredSpectrum, fixed: Union[Iterable[str], Mapping[str, float]] = (),
             init: Optional[SystemParams] = None, multistart_n: int = 6, seed: Optional[int] = 0,
             fit_background: bool = False, xatol: float = 1e-10, maxiter: int = 4000,
             strict: bool = False) -> FitResult:
    """Fit the atom-coupled model with any subset of parameters held fixed.

    ``init`` supplies starting values, the values of fixed parameters and the
    phases of ``g_a``, ``g_b`` and ``h``; only magnitudes are fitted. ``fixed``
    is a set of names from :data:`FULL_PARAMS`, or a mapping that also
    overrides their values.
    """
    values, phases = _template_values(init if init is not None else SystemParams())
    if isinstance(fixed, Mapping):
        for k, v in fixed.items():
            values[k] = float(abs(v)) if k not in _LINEAR else float(v)
        fixed_names = set(fixed)
    else:
        fixed_names = set(fixed)
    unknown = fixed_names - set(FULL_PARAMS)
    if unknown:
        raise ValueError(f"unknown parameter names: {sorted(unknown)}")
    free = [n for n in FULL_PARAMS if n not in fixed_names]
    if fit_background:
        values.update(scale=1.0, offset=0.0)
        free += list(_BACKGROUND)
    if not free:
        raise ValueError("nothing to fit: every parameter is fixed")
    if len(spectrum) < SAMPLES_PER_PARAM * len(free):
        raise Underdetermined(f"{len(free)} free parameters need at least "
                              f"{SAMPLES_PER_PARAM * len(free)} samples, got {len(spectrum)}")
    if len(fixed_names) < 3:
        raise PreconditionViolated("fix at least 3 parameters to keep the full model identifiable")

    # starting values for free positive quantities must be nonzero
    span = float(spectrum.detuning[-1] - spectrum.detuning[0])
    if not fixed_names.isdisjoint(WR_PARAMS) or init is not None:
        lin_scale = max(values["kappa_c"] + values["gamma_ext"], values["kappa_q"], 1e-3 * span, 1e-12)
    else:
        lin_scale = max(1e-3 * span, 1e-12)
    for name in free:
        if name not in _LINEAR and name not in _BACKGROUND and values[name] <= 0:
            values[name] = lin_scale
    widths = {"omega_atom": 0.1 * span, "omega_c": lin_scale}
    problem = _Problem(spectrum, "full", free, values, phases, lin_scale)
    rng = np.random.default_rng(seed)
    starts = [values] + _random_starts(rng, values, free, multistart_n, lin_scale, widths)
    if "kappa_c" in free and "gamma_ext" in free:
        starts.insert(1, dict(values, kappa_c=values["gamma_ext"], gamma_ext=values["kappa_c"]))
    best, records = _run_starts(problem, starts, xatol, maxiter)
    return _finish(problem, "full", best, records, spectrum.unit, seed, strict)
