"""Command-line front end: ``wgmscatter {spectrum,poles,fit,wavepacket,check}``.

Frequencies are in the unit declared by the params file (units of the
external linewidth for ``dimensionless-gamma``). Grids are detunings from
``omega_c`` unless ``--absolute`` is given. Errors go to stderr as
``<CODE>: message``; data goes to ``--out`` or stdout.

Exit codes: 0 success, 1 check not satisfied, 2 usage/config/data error,
3 fit did not converge.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import config as cfg
from .amplitudes import MODELS, spectrum
from .analysis import anticrossing_sweep, critical_coupling_check, poles, symmetry_check
from .errors import ConfigError, TrackingAmbiguity, WGMError
from .fitting import FULL_PARAMS, fit_full, fit_wr, load_spectrum
from .timedomain import PulseSpec, hamiltonian, scatter_pulse, slowest_decay

SUBCOMMANDS = ("spectrum", "poles", "fit", "wavepacket", "check")
FORMATS = ("csv", "json")
EXIT_OK, EXIT_UNSATISFIED, EXIT_ERROR, EXIT_NO_CONVERGENCE = 0, 1, 2, 3

# default (g, h) lists for matrix mode, in units of gamma_ext
MATRIX_G = (0.0, 0.3, 1.0 / math.sqrt(2.0), 2.5, 8.0)
MATRIX_H = (0.0, 0.3, 1.0, 2.5, 10.0)


@dataclass
class RunConfig:
    subcommand: str
    params_path: Optional[str]
    grid: Optional[Tuple[float, float, int]] = None
    absolute: bool = False
    model: str = "full"
    out: Optional[str] = None
    fmt: str = "csv"
    seed: int = 0
    tolerances: Dict[str, float] = field(default_factory=dict)
    data: Optional[str] = None
    matrix: bool = False
    sweep: Optional[str] = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.fmt not in FORMATS:
            raise ConfigError(f"--format must be one of {FORMATS}")
        if self.grid is not None:
            lo, hi, n = self.grid
            if n < 2:
                raise ConfigError(f"grid count must be >= 2, got {n}")
            if not lo < hi:
                raise ConfigError(f"grid needs min < max, got {lo}:{hi}")


def parse_grid(text: str) -> Tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects min:max:count, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        n = int(parts[2])
    except ValueError:
        raise ConfigError(f"--grid expects numbers in min:max:count, got {text!r}") from None
    return lo, hi, n


def parse_tolerances(items: Sequence[str]) -> Dict[str, float]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects key=value, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--tol {key}: {value!r} is not a number") from None
    return out


# ---------------------------------------------------------------- output


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _csv_rows(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{x:.17g}" if isinstance(x, float) else str(x) for x in row))
    return "\n".join(lines) + "\n"


def _table_text(table, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(table.to_dict()) + "\n"
    cols = [table.column(c) for c in ("omega", "T", "R", "na", "nb", "nq", "group_delay")]
    rows = [[float(c[i]) for c in cols] for i in range(len(table))]
    return _csv_rows(("omega", "T", "R", "na", "nb", "nq", "group_delay"), rows)


# ---------------------------------------------------------------- helpers


def _load_params(rc: RunConfig, required: bool = True) -> Optional[cfg.ParamsFile]:
    if rc.params_path is None:
        if required:
            raise ConfigError("--params is required for this subcommand")
        return None
    return cfg.load(rc.params_path)


def _grid(rc: RunConfig, pf: cfg.ParamsFile, default: Tuple[float, float, int]) -> np.ndarray:
    spec = rc.grid
    if spec is None and "grid" in pf.sections:
        g = pf.section("grid")
        try:
            spec = (float(g["min"]), float(g["max"]), int(g["count"]))
        except (KeyError, TypeError, ValueError):
            raise ConfigError("[grid] needs numeric min, max and count") from None
        RunConfig(rc.subcommand, rc.params_path, grid=spec)  # validates
    if spec is None:
        G = pf.params.gamma_ext or 1.0
        spec = (default[0] * G, default[1] * G, default[2])
    return np.linspace(spec[0], spec[1], spec[2])


# ---------------------------------------------------------------- commands


def cmd_spectrum(rc: RunConfig) -> int:
    pf = _load_params(rc)
    grid = _grid(rc, pf, (-20.0, 20.0, 401))
    detuning = not rc.absolute
    if not rc.matrix:
        table = spectrum(pf.params, grid, model=rc.model, detuning=detuning)
        _emit(_table_text(table, rc.fmt), rc.out)
        return EXIT_OK

    m = pf.section("matrix")
    G = pf.params.gamma_ext or 1.0
    gs = [float(v) for v in m.get("g", [x * G for x in MATRIX_G])]
    hs = [float(v) for v in m.get("h", [x * G for x in MATRIX_H])]
    outdir = rc.out or "."
    os.makedirs(outdir, exist_ok=True)
    base = pf.params
    h_phase = base.h / abs(base.h) if base.h != 0 else 1.0
    cells = []
    for i, g in enumerate(gs):
        for j, h in enumerate(hs):
            p = base.replace(g_a=g, g_b=g, h=h * h_phase)
            name = f"spectrum_g{i}_h{j}.{rc.fmt}"
            _emit(_table_text(spectrum(p, grid, model=rc.model, detuning=detuning), rc.fmt),
                  os.path.join(outdir, name))
            cells.append({"file": name, "g": g, "h": h})
    with open(os.path.join(outdir, "matrix.json"), "w") as fh:
        fh.write(_json({"unit": pf.unit, "model": rc.model, "cells": cells}))
    return EXIT_OK


def _sweep_spec(rc: RunConfig, pf: cfg.ParamsFile):
    if rc.sweep is not None:
        parts = rc.sweep.split(":")
        if len(parts) != 4 or parts[0] not in ("h", "g"):
            raise ConfigError(f"--sweep expects h|g:start:stop:steps, got {rc.sweep!r}")
        try:
            return parts[0], float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise ConfigError(f"--sweep expects numbers, got {rc.sweep!r}") from None
    if "sweep" in pf.sections:
        s = pf.section("sweep")
        try:
            return str(s["parameter"]), float(s["start"]), float(s["stop"]), int(s.get("steps", 200))
        except (KeyError, TypeError, ValueError):
            raise ConfigError("[sweep] needs parameter, start, stop (and optional steps)") from None
    return None


def cmd_poles(rc: RunConfig) -> int:
    pf = _load_params(rc)
    spec = _sweep_spec(rc, pf)
    if spec is None:
        ps = poles(pf.params)
        if rc.fmt == "json":
            text = _json({"omega_c": ps.omega_c, "residual": ps.residual,
                          "detunings": [[z.real, z.imag] for z in ps.detunings]})
        else:
            text = _csv_rows(("pole", "re_detuning", "im_detuning"),
                             [(k + 1, float(z.real), float(z.imag)) for k, z in enumerate(ps.detunings)])
        _emit(text, rc.out)
        return EXIT_OK

    parameter, lo, hi, steps = spec
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TrackingAmbiguity)
        kw = {"h_range": (lo, hi)} if parameter == "h" else {"g_range": (lo, hi)}
        sw = anticrossing_sweep(pf.params, steps=steps, **kw)
    for w in caught:
        sys.stderr.write(f"W_TRACKING_AMBIGUITY: {w.message}\n")
    if rc.fmt == "json":
        text = _json({"parameter": sw.parameter, "values": sw.values.tolist(),
                      "re": sw.detunings.real.tolist(), "im": sw.detunings.imag.tolist(),
                      "residuals": sw.residuals.tolist(), "ambiguous_steps": sw.ambiguous_steps})
    else:
        rows = [(float(v), *map(float, z.real), *map(float, z.imag)) for v, z in zip(sw.values, sw.detunings)]
        text = _csv_rows(("sweep_value", "re_pole_1", "re_pole_2", "re_pole_3",
                          "im_pole_1", "im_pole_2", "im_pole_3"), rows)
    _emit(text, rc.out)
    return EXIT_OK


def cmd_fit(rc: RunConfig) -> int:
    if rc.data is None:
        raise ConfigError("fit needs --data <spectrum.csv>")
    pf = _load_params(rc, required=rc.model == "full")
    unit = pf.unit if pf is not None else None
    spec = load_spectrum(rc.data, unit=unit)
    if pf is not None and spec.unit != pf.unit:
        raise ConfigError(f"spectrum unit {spec.unit} differs from params file unit {pf.unit}")
    opts = pf.section("fit") if pf is not None else {}
    multistart = int(opts.get("multistart", 6))
    background = bool(opts.get("background", False))
    extra = {k: rc.tolerances[k] for k in ("xatol",) if k in rc.tolerances}
    if "maxiter" in opts:
        extra["maxiter"] = int(opts["maxiter"])
    if rc.model == "wr":
        init = None
        if pf is not None and opts.get("use_init", False):
            # start from the params file instead of the dip heuristic
            p = pf.params
            init = {"omega_c": p.omega_c, "h": abs(p.h), "kappa_c": p.kappa_c, "gamma_ext": p.gamma_ext}
            init = {k: v for k, v in init.items() if k == "omega_c" or v > 0}
        result = fit_wr(spec, init=init, multistart_n=multistart, seed=rc.seed, fit_background=background, **extra)
    elif rc.model == "full":
        fixed = opts.get("fixed", [n for n in FULL_PARAMS if n not in ("g",)])
        result = fit_full(spec, fixed=list(fixed), init=pf.params, multistart_n=multistart, seed=rc.seed,
                          fit_background=background, **extra)
    else:
        raise ConfigError("fit supports --model wr or full")

    sys.stdout.write(f"# fitted parameters ({spec.unit})\n")
    for name, value in result.fitted.items():
        sys.stdout.write(f"{name:>12s} = {value:.10g}\n")
    sys.stdout.write(f"{'residual':>12s} = {result.residual:.6g}\n")
    sys.stdout.write(f"{'converged':>12s} = {str(result.converged).lower()}\n")
    if result.degenerate:
        sys.stderr.write("W_DEGENERATE: parameters not identifiable from this spectrum\n")
    if rc.out is not None:
        if rc.fmt == "json":
            result.to_json(rc.out)
        else:
            _emit(_csv_rows(("name", "value"), [(k, float(v)) for k, v in result.fitted.items()]), rc.out)
    if not result.converged:
        sys.stderr.write("E_NO_CONVERGENCE: best start hit the iteration cap\n")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_wavepacket(rc: RunConfig) -> int:
    pf = _load_params(rc)
    p = pf.params
    s = pf.section("pulse")
    G = p.gamma_ext or 1.0
    width = float(s.get("width", 200.0 / G))
    delay = float(s.get("delay", 6.0 * width))
    shape = str(s.get("shape", "gaussian"))
    carrier = float(s.get("carrier", p.omega_c))
    pulse = PulseSpec(shape=shape, carrier=carrier, width=width, delay=delay)
    decay = slowest_decay(p)
    settle = 40.0 / decay if decay > 0 else 0.0
    t_end = float(s.get("t_end", delay + 6.0 * width + settle))
    # fastest rate in the frame rotating at omega_c, including the carrier offset
    lam = float(np.max(np.abs(np.linalg.eigvals(hamiltonian(p) - p.omega_c * np.eye(3)))))
    lam = max(lam, abs(carrier - p.omega_c))
    dt = float(s.get("dt", min(0.2 / G, 0.5 / max(lam, 1e-300))))
    tol = rc.tolerances.get("halving_tol", s.get("halving_tol", 1e-6))
    rec = scatter_pulse(p, pulse, t_end, dt, halving_tol=tol)
    summary = rec.summary()
    if rc.fmt == "json":
        _emit(_json(summary), rc.out)
        return EXIT_OK
    if rc.out is None:
        sys.stdout.write(_json(summary))
        return EXIT_OK
    rec.to_csv(rc.out)
    root, _ = os.path.splitext(rc.out)
    rec.to_json(root + ".json")
    return EXIT_OK


def cmd_check(rc: RunConfig) -> int:
    pf = _load_params(rc)
    rtol = rc.tolerances.get("rtol", 1e-10)
    rep = critical_coupling_check(pf.params, rtol=rtol)
    grid = _grid(rc, pf, (-20.0, 20.0, 401))
    dev = symmetry_check(pf.params, grid, detuning=not rc.absolute)
    sym_tol = rc.tolerances.get("symmetry_tol", 1e-12)
    ok = rep.satisfied and dev < sym_tol
    report = {
        "satisfied": bool(ok),
        "critical_coupling": {
            "satisfied": rep.satisfied, "lhs": rep.lhs, "rhs": rep.rhs,
            "phase_residual": rep.phase_residual, "detuning": rep.detuning,
            "abs_t_resonance": abs(rep.t_resonance),
        },
        "symmetry": {"max_deviation": dev, "tolerance": sym_tol},
    }
    if rc.fmt == "json":
        _emit(_json(report), rc.out)
    else:
        rows = [("satisfied", int(ok)), ("critical_satisfied", int(rep.satisfied)), ("lhs", rep.lhs),
                ("rhs", rep.rhs), ("phase_residual", rep.phase_residual), ("detuning", rep.detuning),
                ("abs_t_resonance", abs(rep.t_resonance)), ("symmetry_deviation", dev)]
        _emit(_csv_rows(("quantity", "value"), [(k, float(v)) for k, v in rows]), rc.out)
    return EXIT_OK if ok else EXIT_UNSATISFIED


COMMANDS = {"spectrum": cmd_spectrum, "poles": cmd_poles, "fit": cmd_fit,
            "wavepacket": cmd_wavepacket, "check": cmd_check}


# ---------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"E_USAGE: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wgmscatter", description="Single-photon transport through a waveguide-resonator-atom system.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, model_default="full"):
        sp.add_argument("--params", help="TOML parameter file")
        sp.add_argument("--grid", help="min:max:count (detuning from omega_c unless --absolute)")
        sp.add_argument("--absolute", action="store_true", help="grid holds absolute frequencies")
        sp.add_argument("--model", default=model_default, choices=MODELS)
        sp.add_argument("--out", help="output path (directory for --matrix); stdout if omitted")
        sp.add_argument("--format", dest="fmt", default="csv", choices=FORMATS)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                        help="tolerance override (rtol, symmetry_tol, halving_tol, xatol)")
        return sp

    sp = common(sub.add_parser("spectrum", help="transmission/reflection/excitation spectra"))
    sp.add_argument("--matrix", action="store_true", help="one file per (g, h) cell")
    sp = common(sub.add_parser("poles", help="poles, optionally tracked along a sweep"))
    sp.add_argument("--sweep", help="h|g:start:stop:steps")
    sp = common(sub.add_parser("fit", help="least-squares fit of a measured spectrum"), model_default="wr")
    sp.add_argument("--data", help="two-column spectrum CSV")
    common(sub.add_parser("wavepacket", help="time-domain scattering of a single-photon pulse"))
    common(sub.add_parser("check", help="critical-coupling and mirror-symmetry certificate"))
    return parser


def _run_config(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        subcommand=ns.subcommand,
        params_path=ns.params,
        grid=parse_grid(ns.grid) if ns.grid else None,
        absolute=ns.absolute,
        model=ns.model,
        out=ns.out,
        fmt=ns.fmt,
        seed=ns.seed,
        tolerances=parse_tolerances(ns.tol),
        data=getattr(ns, "data", None),
        matrix=getattr(ns, "matrix", False),
        sweep=getattr(ns, "sweep", None),
    )


def _glue_values(argv: List[str]) -> List[str]:
    """Rewrite ``--grid -5:5:11`` as ``--grid=-5:5:11`` so argparse accepts negative ranges."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in ("--grid", "--sweep") and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = build_parser().parse_args(_glue_values(argv))
    try:
        rc = _run_config(ns)
        return COMMANDS[rc.subcommand](rc)
    except WGMError as exc:
        sys.stderr.write(f"{exc.code}: {exc}\n")
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"E_INPUT: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
