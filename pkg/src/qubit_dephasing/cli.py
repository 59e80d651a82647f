"""Command-line front end: trajectories, recoherence reports, sweeps and threshold maps.

Every command writes plain data (CSV or JSON).  Floats carry 12 significant
digits, missing values are empty CSV fields or JSON null, and row order never
depends on ``--jobs``.

Exit status: 0 success, 1 invalid input, 2 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bath import BathParams, QubitParams
from .dynamics import coherence_trajectory, refined_grid
from .errors import ConvergenceError, DegenerateSchemeError, DomainError
from .measurement import (
    EulerAngles,
    MeasurementScheme,
    angle_errors,
    default_scheme,
    gram_operator,
    initial_observables,
    is_gram_diagonal,
    nnd_coefficients,
)
from .recoherence import ThresholdGrid, analyze, lambda_min, lambda_min_grid

__all__ = [
    "SweepSpec",
    "SweepRow",
    "PRESETS",
    "run_trajectory",
    "run_recoherence",
    "run_sweep",
    "run_lambda_min_map",
    "run_scheme_check",
    "main",
]

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE = 0, 1, 2
PRESET_POINTS = 200


class ValidationError(Exception):
    pass


# --- formatting ---------------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if v == 0.0:
            return "0"  # no "-0"
        return f"{v:.12g}"
    return str(value)


def write_csv(stream, header, rows):
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def _json_clean(obj):
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return 0.0 if v == 0.0 else float(f"{v:.12g}")
    return obj


def write_json(stream, obj):
    stream.write(json.dumps(_json_clean(obj), indent=2) + "\n")


def write_table(stream, header, rows, fmt_name):
    if fmt_name == "json":
        write_json(stream, [dict(zip(header, row)) for row in rows])
    else:
        write_csv(stream, header, rows)


# --- sweep types ----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    vary: str  # "ohmicity" or "temperature"
    grid: tuple[float, float, int]
    fixed_lambda: float
    series: tuple[float, ...]
    qubit: QubitParams = field(default_factory=QubitParams)
    omega_c: float = 1.0

    def __post_init__(self):
        if self.vary not in ("ohmicity", "temperature"):
            raise DomainError(f"vary must be 'ohmicity' or 'temperature', got {self.vary!r}")
        lo, hi, count = self.grid
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise DomainError(f"grid needs min < max, got ({lo!r}, {hi!r})")
        if int(count) != count or count < 2:
            raise DomainError(f"grid count must be an integer >= 2, got {count!r}")
        if lo <= 0:
            raise DomainError(f"{self.vary} grid must stay > 0, got min={lo!r}")
        if not self.series:
            raise DomainError("series must not be empty")
        if any(not (math.isfinite(v) and v > 0) for v in self.series):
            raise DomainError(f"series values must be > 0, got {self.series!r}")
        if not (math.isfinite(self.fixed_lambda) and self.fixed_lambda >= 0):
            raise DomainError(f"lambda must be >= 0, got {self.fixed_lambda!r}")

    def x_values(self) -> np.ndarray:
        lo, hi, count = self.grid
        return np.linspace(lo, hi, int(count))

    def points(self):
        """(lambda, s, T) in output order: series outer, grid inner."""
        for v in self.series:
            for x in self.x_values():
                s, temp = (x, v) if self.vary == "ohmicity" else (v, x)
                yield self.fixed_lambda, float(s), float(temp)


@dataclass(frozen=True)
class SweepRow:
    x: float
    series_value: float
    lam: float
    ohmicity: float
    temperature: float
    t_star: float | None
    t_extr: float | None
    gamma_extr: float | None
    first_gamma_extr: float | None
    t_star_tot: float | None
    rde_count: int | None
    lambda_min: float | None
    truncated: bool | None
    status: str

    HEADER = ("lambda", "ohmicity", "temperature", "t_star", "t_extr", "gamma_extr",
              "first_gamma_extr", "t_star_tot", "rde_count", "lambda_min", "truncated", "status")

    def values(self):
        return (self.lam, self.ohmicity, self.temperature, self.t_star, self.t_extr,
                self.gamma_extr, self.first_gamma_extr, self.t_star_tot, self.rde_count,
                self.lambda_min, self.truncated, self.status)


def _sweep_point(task):
    lam, s, temp, omega0, omega_c, t_star_def = task
    qubit = QubitParams(omega0)
    lm = None
    try:
        lm = lambda_min(s, temp, qubit, omega_c)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = analyze(BathParams(lam, s, temp, omega_c), qubit, t_star_def=t_star_def)
    except (DomainError, DegenerateSchemeError) as exc:
        return lm, None, f"invalid: {exc}"
    except (ConvergenceError, ArithmeticError, ValueError) as exc:
        return lm, None, f"convergence: {exc}"
    return lm, rep, "ok"


def _map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def run_sweep(spec: SweepSpec, jobs: int = 1, t_star_def: str = "crossing") -> list[SweepRow]:
    points = list(spec.points())
    tasks = [(lam, s, temp, spec.qubit.omega0, spec.omega_c, t_star_def) for lam, s, temp in points]
    rows = []
    for (lam, s, temp), (lm, rep, status) in zip(points, _map(_sweep_point, tasks, jobs)):
        x, sv = (s, temp) if spec.vary == "ohmicity" else (temp, s)
        if rep is None:
            rows.append(SweepRow(x, sv, lam, s, temp, None, None, None, None, None, None, lm,
                                 None, status))
            continue
        rows.append(SweepRow(
            x=x, series_value=sv, lam=lam, ohmicity=s, temperature=temp,
            t_star=rep.t_star, t_extr=rep.t_extr, gamma_extr=rep.gamma_extr,
            first_gamma_extr=rep.first_gamma_extr, t_star_tot=rep.t_star_tot,
            rde_count=rep.rde_count, lambda_min=lm, truncated=rep.truncated, status=status,
        ))
    return rows


# --- presets ----------------------------------------------------------------------------

LAMBDAS = (0.1, 1.0, 10.0)
TEMPERATURES = (0.1, 0.25, 0.5, 1.0, 2.0, 4.0)
OHMICITIES = (0.5, 1.0, 1.5, 2.0, 3.0)

PRESETS = {
    "fig1": {"command": "lambda-min-map", "s_grid": (0.1, 5.0, PRESET_POINTS),
             "t_grid": (0.1, 4.0, PRESET_POINTS)},
    "fig2": {"command": "trajectory", "t_max": 4.0,
             "sets": [(1.0, 1.0, 0.1), (1.0, 1.0, 1.0), (1.0, 1.0, 10.0)]},
    "fig3": {"command": "trajectory", "sets": [(1.0, 0.05, 0.1, 1.0), (1.0, 7.0, 4.0, 0.15)]},
    "fig4": {"command": "sweep", "vary": "ohmicity", "grid": (0.05, 7.0, PRESET_POINTS),
             "series": TEMPERATURES, "lambdas": LAMBDAS},
    "fig5": {"command": "sweep", "vary": "temperature", "grid": (0.1, 4.0, PRESET_POINTS),
             "series": OHMICITIES, "lambdas": LAMBDAS},
}


# --- commands -------------------------------------------------------------------------------

ANGLE_FLAGS = ("theta_a", "phi_a", "theta_1", "phi_1", "theta_2", "phi_2")


def _scheme_from_args(args) -> MeasurementScheme:
    given = [getattr(args, k) for k in ANGLE_FLAGS]
    if all(v is None for v in given):
        return default_scheme()
    ref = default_scheme().as_dict()
    vals = {k: (ref[k] if v is None else v) for k, v in zip(ANGLE_FLAGS, given)}
    problems = []
    for label, th, ph in (("a", "theta_a", "phi_a"), ("b1", "theta_1", "phi_1"),
                          ("b2", "theta_2", "phi_2")):
        problems += angle_errors(vals[th], vals[ph], label)
    if problems:
        raise ValidationError("; ".join(problems))
    return MeasurementScheme(
        a=EulerAngles(vals["theta_a"], vals["phi_a"]),
        b1=EulerAngles(vals["theta_1"], vals["phi_1"]),
        b2=EulerAngles(vals["theta_2"], vals["phi_2"]),
    )


def _bath(args, lam=None, s=None, temp=None) -> BathParams:
    lam = args.lam if lam is None else lam
    s = args.ohmicity if s is None else s
    temp = args.temp if temp is None else temp
    for name, v in (("--lambda", lam), ("--ohmicity", s), ("--temp", temp)):
        if v is None:
            raise ValidationError(f"{name} is required")
    if temp <= 0:
        raise ValidationError(f"--temp must be > 0, got {temp!r}")
    return BathParams(lam, s, temp, args.omega_c)


def run_trajectory(args, out) -> int:
    qubit = QubitParams(args.omega0)
    scheme = _scheme_from_args(args)
    if args.preset:
        preset = PRESETS[args.preset]
        header = ("lambda", "ohmicity", "temperature") + _TRAJ_COLUMNS
        rows = []
        for item in preset["sets"]:
            lam, s, temp = item[:3]
            t_max = item[3] if len(item) > 3 else preset["t_max"]
            bath = BathParams(lam, s, temp, args.omega_c)
            traj = coherence_trajectory(refined_grid(t_max, args.samples, bath), scheme, bath,
                                        qubit, unwrap=args.unwrap_chi)
            rows += [(lam, s, temp) + r for r in traj.rows()]
    else:
        bath = _bath(args)
        traj = coherence_trajectory(refined_grid(args.t_max, args.samples, bath), scheme, bath,
                                    qubit, unwrap=args.unwrap_chi)
        header, rows = _TRAJ_COLUMNS, traj.rows()
    write_table(out, header, rows, args.format)
    return EXIT_OK


_TRAJ_COLUMNS = ("t", "gamma", "gamma_cor", "gamma_tot", "chi", "abs_sigma")


def run_recoherence(args, out) -> int:
    qubit = QubitParams(args.omega0)
    bath = _bath(args)
    scheme = _scheme_from_args(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = analyze(bath, qubit, scheme=scheme, t_star_def=args.t_star_def)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    payload = {"lambda": bath.lam, "ohmicity": bath.s, "temperature": bath.temperature,
               "omega0": qubit.omega0, "omega_c": bath.omega_c,
               "lambda_min": lambda_min(bath.s, bath.temperature, qubit, bath.omega_c)}
    payload.update(rep.to_json())
    if args.format == "json":
        write_json(out, payload)
    else:
        keys = [k for k in payload if k != "intervals"]
        write_csv(out, keys, [[payload[k] for k in keys]])
    return EXIT_OK


def _sweep_specs(args) -> list[SweepSpec]:
    qubit = QubitParams(args.omega0)
    if args.preset:
        p = PRESETS[args.preset]
        return [SweepSpec(p["vary"], p["grid"], lam, p["series"], qubit, args.omega_c)
                for lam in p["lambdas"]]
    if args.vary is None or args.grid is None or args.series is None or args.lam is None:
        raise ValidationError("sweep needs --vary, --grid, --series and --lambda (or --preset)")
    lo, hi, count = args.grid
    return [SweepSpec(args.vary, (lo, hi, count), args.lam, tuple(args.series), qubit,
                      args.omega_c)]


def run_sweeps(args, out) -> int:
    rows = []
    for spec in _sweep_specs(args):
        rows += run_sweep(spec, jobs=args.jobs, t_star_def=args.t_star_def)
    failed = sum(r.status != "ok" for r in rows)
    if failed:
        print(f"warning: {failed} of {len(rows)} points failed (see status column)",
              file=sys.stderr)
    write_table(out, SweepRow.HEADER, [r.values() for r in rows], args.format)
    return EXIT_OK


def run_lambda_min_map(s_grid, t_grid, qubit: QubitParams, omega_c: float = 1.0) -> ThresholdGrid:
    return lambda_min_grid(s_grid, t_grid, qubit, omega_c)


def _cmd_lambda_min_map(args, out) -> int:
    if args.preset:
        p = PRESETS[args.preset]
        s_spec, t_spec = p["s_grid"], p["t_grid"]
    else:
        if args.s_grid is None or args.t_grid is None:
            raise ValidationError("lambda-min-map needs --s-grid and --t-grid (or --preset fig1)")
        s_spec, t_spec = args.s_grid, args.t_grid
    grids = []
    for name, (lo, hi, count) in (("--s-grid", s_spec), ("--t-grid", t_spec)):
        if not (lo > 0 and hi >= lo and count >= 1) or (count >= 2 and hi == lo):
            raise ValidationError(f"{name} needs 0 < min < max and count >= 1")
        grids.append(np.linspace(lo, hi, int(count)) if count > 1 else np.array([lo]))
    res = run_lambda_min_map(grids[0], grids[1], QubitParams(args.omega0), args.omega_c)
    write_table(out, ("s", "T", "lambda_min"), list(res.rows()), args.format)
    return EXIT_OK


def run_scheme_check(args, out) -> int:
    qubit = QubitParams(args.omega0)
    temp = 1.0 if args.temp is None else args.temp
    if temp <= 0:
        raise ValidationError(f"--temp must be > 0, got {temp!r}")
    scheme = _scheme_from_args(args)
    g = gram_operator(scheme)
    obs = initial_observables(scheme, qubit, temp)
    report = {
        "angles": scheme.as_dict(),
        "temperature": temp,
        "omega0": qubit.omega0,
        "gram_re": g.real.tolist(),
        "gram_im": g.imag.tolist(),
        "gram_diagonal": is_gram_diagonal(scheme),
        "degenerate": False,
        "n1": None, "n2": None, "d": None, "a_ratio": None, "a_ratio_imag": None,
        "sigma_plus_0_re": obs.sigma_plus_0.real,
        "sigma_plus_0_im": obs.sigma_plus_0.imag,
        "abs_sigma_plus_0": abs(obs.sigma_plus_0),
        "sigma3_0": obs.sigma3_0,
        "probabilities": list(obs.probabilities),
    }
    try:
        c = nnd_coefficients(scheme, qubit, temp)
        report.update(n1=c.n1, n2=c.n2, d=c.d, a_ratio=c.a_ratio.real, a_ratio_imag=c.a_ratio.imag)
    except DegenerateSchemeError as exc:
        report.update(degenerate=True, error=str(exc))
    write_json(out, report)
    return EXIT_OK


# --- gnuplot --------------------------------------------------------------------------------

def gnuplot_script(command: str, data_file: str, preset: str | None = None,
                   vary: str | None = None) -> str:
    head = ['set datafile separator ","', "set key autotitle columnhead", "set grid"]
    if command == "trajectory":
        if preset:
            body = ["set xlabel 't'", "set ylabel 'gamma_tot'",
                    f"plot '{data_file}' using 4:7 with lines"]
        else:
            body = ["set xlabel 't'",
                    f"plot '{data_file}' using 1:2 with lines, '' using 1:3 with lines, "
                    "'' using 1:4 with lines"]
    elif command == "sweep":
        col, label = (3, "T") if vary == "temperature" else (2, "s")
        body = [f"set xlabel '{label}'", "set ylabel 't_star'",
                f"plot '{data_file}' using {col}:4 with points"]
    elif command == "lambda-min-map":
        body = ["set xlabel 's'", "set ylabel 'T'", "set view map", "set contour base",
                f"splot '{data_file}' using 1:2:3 with pm3d"]
    else:
        body = [f"# no plot for {command}"]
    return "\n".join(head + body) + "\n"


# --- argument handling ------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _triple(text: str):
    parts = [p for p in text.replace(":", ",").split(",") if p.strip()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected min,max,count, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from None


def _float_list(text: str):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad list {text!r}: {exc}") from None


def _common(sub):
    sub.add_argument("--lambda", dest="lam", type=float)
    sub.add_argument("--ohmicity", type=float)
    sub.add_argument("--temp", type=float)
    sub.add_argument("--omega0", type=float, default=0.1)
    sub.add_argument("--omega-c", dest="omega_c", type=float, default=1.0)
    sub.add_argument("--t-max", dest="t_max", type=float, default=20.0)
    sub.add_argument("--samples", type=int, default=2001)
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--t-star-def", dest="t_star_def", choices=("crossing", "extremum"),
                     default="crossing")
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--config", default=None)
    sub.add_argument("--preset", choices=sorted(PRESETS), default=None)
    sub.add_argument("--gnuplot-script", dest="gnuplot_script", default=None)
    for name in ANGLE_FLAGS:
        sub.add_argument("--" + name.replace("_", "-"), dest=name, type=float, default=None)


COMMANDS = {
    "trajectory": run_trajectory,
    "recoherence": run_recoherence,
    "sweep": run_sweeps,
    "lambda-min-map": _cmd_lambda_min_map,
    "scheme-check": run_scheme_check,
}


def build_parser():
    parser = _Parser(prog="qubit-dephasing", description=__doc__.split("\n")[0])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    table = {}
    for name in COMMANDS:
        sub = subs.add_parser(name)
        _common(sub)
        if name == "trajectory":
            sub.add_argument("--unwrap-chi", dest="unwrap_chi", action="store_true")
        if name == "sweep":
            sub.add_argument("--vary", choices=("ohmicity", "temperature"))
            sub.add_argument("--grid", type=_triple)
            sub.add_argument("--series", type=_float_list)
        if name == "lambda-min-map":
            sub.add_argument("--s-grid", dest="s_grid", type=_triple)
            sub.add_argument("--t-grid", dest="t_grid", type=_triple)
        table[name] = sub
    return parser, table


_CONFIG_TYPES = {"grid": _triple, "s_grid": _triple, "t_grid": _triple, "series": _float_list,
                 "samples": int, "jobs": int, "unwrap_chi": lambda v: v.lower() in ("1", "true", "yes")}
_STRING_KEYS = {"out", "format", "t_star_def", "preset", "gnuplot_script", "vary"}


def read_config(path: str, sub: argparse.ArgumentParser) -> dict:
    known = {a.dest for a in sub._actions}
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from None
    for n, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected key=value")
        key, val = (p.strip() for p in line.split("=", 1))
        dest = {"lambda": "lam"}.get(key, key.lstrip("-").replace("-", "_"))
        if dest not in known or dest in ("config", "help"):
            raise ValidationError(f"{path}:{n}: unknown key {key!r}")
        try:
            if dest in _CONFIG_TYPES:
                values[dest] = _CONFIG_TYPES[dest](val)
            elif dest in _STRING_KEYS:
                values[dest] = val
            else:
                values[dest] = float(val)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ValidationError(f"{path}:{n}: bad value for {key!r}: {exc}") from None
    return values


def parse_args(argv):
    parser, table = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = table[args.command]
        sub.set_defaults(**read_config(args.config, sub))
        args = parser.parse_args(argv)
    return args


def _validate(args):
    if args.preset:
        want = PRESETS[args.preset]["command"]
        if want != args.command:
            raise ValidationError(f"preset {args.preset} belongs to the '{want}' command")
    if args.jobs < 1:
        raise ValidationError("--jobs must be >= 1")
    if args.samples < 2:
        raise ValidationError("--samples must be >= 2")
    if not (args.t_max > 0 and math.isfinite(args.t_max)):
        raise ValidationError("--t-max must be > 0")
    if args.lam is not None and args.lam < 0:
        raise ValidationError("--lambda must be >= 0")
    if args.ohmicity is not None and args.ohmicity <= 0:
        raise ValidationError("--ohmicity must be > 0")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        _validate(args)
        buf = io.StringIO()
        code = COMMANDS[args.command](args, buf)
        text = buf.getvalue()
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if args.gnuplot_script:
            data = args.out or "data.csv"
            with open(args.gnuplot_script, "w", encoding="utf-8", newline="\n") as fh:
                vary = getattr(args, "vary", None)
                if args.preset and args.command == "sweep":
                    vary = PRESETS[args.preset]["vary"]
                fh.write(gnuplot_script(args.command, os.path.basename(data), args.preset, vary))
        return code
    except (ValidationError, DomainError, DegenerateSchemeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
