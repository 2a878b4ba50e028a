"""Command-line front end: point and grid evaluation, verification suites, parameter sweeps.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError, EvaluationError
from .laplace import QuadSpec
from .solvers import SOLVER_QUAD, EvalPoint, FieldGrid, solve, solve_grid
from .transforms import PROBLEMS, Forcing, StratumParams
from . import verify as vf

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

# config/flag key -> StratumParams field
PARAM_KEYS = {"a": "a", "lambda": "lam", "alpha": "alpha", "gamma": "gamma", "amp": "amp_A",
              "nu": "nu", "beta": "beta"}
OTHER_KEYS = ("problem", "forcing", "point", "grid", "out", "pairs", "tol", "sweep", "suites")
SWEEPABLE = ("beta", "lambda", "gamma", "alpha", "nu")
SUITES = ("pairs", "efros", "oracle", "residual", "conditions")


def fmt(value) -> str:
    """Shortest round-trip text for a float; empty for missing."""
    return "" if value is None else repr(float(value))


@dataclass
class RunConfig:
    mode: str
    problem: str = "T1"
    params: StratumParams = field(default_factory=StratumParams)
    forcing: Forcing = field(default_factory=Forcing)
    point: EvalPoint | None = None
    grid: FieldGrid | None = None
    out: str | None = None
    pairs: list | None = None
    tol: float | None = None
    sweep: tuple | None = None
    suites: tuple = SUITES

    @property
    def qspec(self) -> QuadSpec:
        if self.tol is None or self.mode == "verify":
            return SOLVER_QUAD
        return QuadSpec(self.tol, SOLVER_QUAD.abs_tol, SOLVER_QUAD.max_subdivisions)


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment.  Values stay strings."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    values = {}
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep:
            raise ConfigError(f"{path}:{num}: expected 'key = value', got {raw.strip()!r}")
        if key not in PARAM_KEYS and key not in OTHER_KEYS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        values[key] = (value.strip(), f"{path}:{num}")
    return values


def _floats(text: str, n: int | None, what: str) -> list[float]:
    try:
        out = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(out) != n:
        raise ConfigError(f"{what}: expected {n} values, got {len(out)}")
    return out


def _parse_grid(text: str, where: str) -> FieldGrid:
    """``hmin:hmax:n,zmin:zmax:n,tmin:tmax:n``."""
    axes = text.split(",")
    if len(axes) != 3:
        raise ConfigError(f"{where}: grid needs three axes 'min:max:count' separated by commas")
    triples = []
    for axis in axes:
        parts = axis.split(":")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except (ValueError, IndexError):
            raise ConfigError(f"{where}: bad grid axis {axis!r} (want min:max:count)") from None
        triples.append((lo, hi, n))
    try:
        return FieldGrid(*triples)
    except DomainError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_sweep(text: str, where: str):
    name, sep, values = text.partition("=")
    name = name.strip()
    if not sep or name not in SWEEPABLE:
        raise ConfigError(f"{where}: sweep must be NAME=v1,v2,... with NAME in {', '.join(SWEEPABLE)}")
    if not values.strip():
        raise ConfigError(f"{where}: empty sweep list")
    return name, sorted(_floats(values, None, where))


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with flags; flags win.  Validates everything."""
    merged = read_config(args.config) if getattr(args, "config", None) else {}
    for key in (*PARAM_KEYS, *OTHER_KEYS):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            merged[key] = (str(value), f"--{key}")

    def get(key):
        return merged.get(key, (None, f"--{key}"))

    cfg = RunConfig(mode=args.command)
    problem, where = get("problem")
    if problem is not None:
        if problem.upper() not in PROBLEMS:
            raise ConfigError(f"{where}: problem must be one of {', '.join(PROBLEMS)}, got {problem!r}")
        cfg.problem = problem.upper()

    values = {}
    for key, attr in PARAM_KEYS.items():
        text, where = get(key)
        if text is None:
            continue
        try:
            values[attr] = float(text)
            StratumParams(**{attr: values[attr]})
        except ValueError as exc:
            if isinstance(exc, DomainError):
                raise ConfigError(f"{where}: {_rename(str(exc))}") from None
            raise ConfigError(f"{where}: {key} must be a number, got {text!r}") from None
    cfg.params = StratumParams(**values)

    text, where = get("forcing")
    if text is not None:
        try:
            cfg.forcing = Forcing.parse(text)
        except (DomainError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    text, where = get("point")
    if text is not None:
        try:
            cfg.point = EvalPoint(*_floats(text, 3, where))
        except DomainError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    text, where = get("grid")
    if text is not None:
        cfg.grid = _parse_grid(text, where)
    cfg.out = get("out")[0]
    text, where = get("pairs")
    if text is not None:
        cfg.pairs = [p.strip() for p in text.split(",") if p.strip()]
        unknown = [p for p in cfg.pairs if p not in vf.PAIR_IDS]
        if unknown or not cfg.pairs:
            raise ConfigError(f"{where}: unknown pair ids {unknown}; known: {', '.join(vf.PAIR_IDS)}")
    text, where = get("tol")
    if text is not None:
        cfg.tol = _floats(text, 1, where)[0]
        if cfg.tol < 0 or (cfg.mode != "verify" and cfg.tol == 0):
            raise ConfigError(f"{where}: tol must be positive")
    text, where = get("sweep")
    if text is not None:
        cfg.sweep = _parse_sweep(text, where)
    text, where = get("suites")
    if text is not None:
        cfg.suites = tuple(s.strip() for s in text.split(",") if s.strip())
        bad = [s for s in cfg.suites if s not in SUITES]
        if bad or not cfg.suites:
            raise ConfigError(f"{where}: unknown suites {bad}; known: {', '.join(SUITES)}")
    elif cfg.pairs is not None:
        cfg.suites = ("pairs",)

    if cfg.mode in ("eval", "sweep") and cfg.point is None:
        raise ConfigError(f"{cfg.mode} needs --point x,z,t")
    if cfg.mode == "grid" and cfg.grid is None:
        raise ConfigError("grid needs --grid hmin:hmax:n,zmin:zmax:n,tmin:tmax:n")
    if cfg.mode == "sweep" and cfg.sweep is None:
        raise ConfigError("sweep needs --sweep NAME=v1,v2,...")
    if cfg.mode in ("eval", "grid"):
        try:
            cfg.params.check_tau_envelope()
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def _rename(message: str) -> str:
    for key, attr in PARAM_KEYS.items():
        if key != attr:
            message = message.replace(f"{attr}=", f"{key}=")
    return message


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"--out: cannot write {out!r} ({exc.strerror})") from exc


def cmd_eval(cfg: RunConfig) -> int:
    pt = cfg.point
    u, err = solve(cfg.problem, pt, cfg.params, cfg.forcing, cfg.qspec)
    row = [cfg.problem, fmt(cfg.params.beta), fmt(pt.h_coord), fmt(pt.z), fmt(pt.t), fmt(u), fmt(err)]
    _emit("problem,beta,x_or_r,z,t,u,err_est\n" + ",".join(row) + "\n", cfg.out)
    return EXIT_OK


def cmd_grid(cfg: RunConfig) -> int:
    cells = solve_grid(cfg.grid, cfg.problem, cfg.params, cfg.forcing, cfg.qspec)
    buf = io.StringIO()
    buf.write("x_or_r,z,t,u,flag\n")
    for c in cells:
        buf.write(",".join([fmt(c.h_coord), fmt(c.z), fmt(c.t), fmt(c.u), c.flag]) + "\n")
    _emit(buf.getvalue(), cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    name, values = cfg.sweep
    attr = PARAM_KEYS[name]
    buf = io.StringIO()
    buf.write("swept_param,value,u,err_est\n")
    for value in values:
        try:
            params = cfg.params.replace(**{attr: value})
            params.check_tau_envelope()
            u, err = solve(cfg.problem, cfg.point, params, cfg.forcing, cfg.qspec)
            buf.write(f"{name},{fmt(value)},{fmt(u)},{fmt(err)}\n")
        except (DomainError, EvaluationError):
            buf.write(f"{name},{fmt(value)},,fail\n")
    _emit(buf.getvalue(), cfg.out)
    return EXIT_OK


def run_suites(cfg: RunConfig) -> list:
    params, tol = cfg.params, cfg.tol
    reports = []
    if "pairs" in cfg.suites:
        reports += vf.run_pair_suite(cfg.pairs, params, tol)
    t = 1e-3 if tol is None else tol
    if "efros" in cfg.suites:
        reports += vf.efros_degenerate(t)
        reports += vf.efros_lemma_b(params, tolerance=t)
        reports += vf.efros_theorem1(params, tolerance=t)
    if "oracle" in cfg.suites:
        for beta in (0.25, 0.4):
            for problem in PROBLEMS:
                reports.append(vf.oracle_check(problem, params.replace(beta=beta), tolerance=t))
        for problem in ("T1", "T3"):
            reports.append(vf.classical_check(problem, params, tolerance=t))
    if "residual" in cfg.suites:
        for problem in PROBLEMS:
            reports.append(vf.residual_report("pde", problem, params, tolerance=5e-2 if tol is None else tol))
        for problem in PROBLEMS:
            reports.append(vf.residual_report("bnd", problem, params, tolerance=1e-1 if tol is None else tol))
    if "conditions" in cfg.suites:
        reports += vf.condition_suite(params, cfg.forcing)
    return reports


def cmd_verify(cfg: RunConfig) -> int:
    reports = run_suites(cfg)
    for r in reports:
        print(r.summary(), file=sys.stderr)
    passed = all(r.passed for r in reports)
    print(f"{sum(r.passed for r in reports)}/{len(reports)} checks passed", file=sys.stderr)
    _emit("".join(r.to_json() + "\n" for r in reports), cfg.out)
    return EXIT_OK if passed else EXIT_VERIFY


COMMANDS = {"eval": cmd_eval, "grid": cmd_grid, "verify": cmd_verify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--problem", help="T1 (incomplete lumped), T2 (lumped, Robin) or T3 (radial)")
    for key in PARAM_KEYS:
        common.add_argument(f"--{key}", help=f"model constant {key}")
    common.add_argument("--forcing", help="one | exp:RATE | power:N | table:T0=V0;T1=V1;...")
    common.add_argument("--point", help="x_or_r,z,t")
    common.add_argument("--grid", help="hmin:hmax:n,zmin:zmax:n,tmin:tmax:n")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--pairs", help="comma-separated transform pair ids (verify)")
    common.add_argument("--tol", help="verify: tolerance override; otherwise quadrature rel_tol")
    common.add_argument("--sweep", help="NAME=v1,v2,... with NAME in " + ", ".join(SWEEPABLE))
    common.add_argument("--suites", help="verify suites: " + ",".join(SUITES))

    parser = argparse.ArgumentParser(prog="fracstrata", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("eval", parents=[common], help="evaluate u at one point")
    sub.add_parser("grid", parents=[common], help="evaluate u over a grid to CSV")
    sub.add_parser("verify", parents=[common], help="run verification suites")
    sub.add_parser("sweep", parents=[common], help="sweep one parameter at a fixed point")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[cfg.mode](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EvaluationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
