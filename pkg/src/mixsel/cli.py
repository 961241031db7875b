"""Command-line entry point: ``mixsel {simulate,select,slope,experiment,check}``.

Exit status is 0 on success, 1 on invalid input or configuration and 2 on
any other failure (including a failed ``check``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .basis import enumerate_models
from .blocks import BlockedSample
from .harness import ConfigError, ExperimentConfig, SlopeConfig, run_experiment
from .penalty import c_tilde_w
from .processes import PROCESS_KINDS, ProcessSpec, TrueDensity, simulate
from .selection import PenaltyConfig, _json_default, collection_table, run_ppe
from .slope import DIMENSION, slope_select

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _add_process_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--process", choices=PROCESS_KINDS)
    p.add_argument("--target", help="uniform, linear, or a JSON density descriptor")
    p.add_argument("--a", type=float, help="AR coefficient of gaussian-ar1")
    p.add_argument("--burn-in", type=int)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--collection", help="histogram, fourier or haar")
    p.add_argument("--max-level", type=int, help="cap on the finest Haar level")
    p.add_argument("--cap", type=int, help="cap on histogram bins / Fourier harmonics")
    p.add_argument("--C-mult", dest="multiplier", type=float, help="C as a multiple of C_tilde_W")
    p.add_argument("--law", choices=["multinomial", "iid"])
    p.add_argument("--weight-dist", dest="distribution")
    p.add_argument("--method", choices=["closed", "monte-carlo"])
    p.add_argument("--B", type=int)
    p.add_argument("--grid", help="K grid as start:stop:step")
    p.add_argument("--measure", choices=["pen_w_unit", "dimension"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixsel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated sample as CSV")
    _add_process_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default: stdout)")

    for name, helptext in (("select", "one penalized selection"), ("slope", "slope algorithm path")):
        p = sub.add_parser(name, help=helptext)
        _add_process_args(p)
        _add_model_args(p)
        p.add_argument("--config", help="JSON config; flags override it")
        p.add_argument("--input", help="CSV sample (one value per line) instead of simulating")
        p.add_argument("--n", type=int)
        p.add_argument("--q", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("experiment", help="replicated oracle-ratio study")
    _add_process_args(p)
    _add_model_args(p)
    p.add_argument("--config", help="JSON config; flags override it")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--q", type=int, nargs="+")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", default=".", help="output directory")

    sub.add_parser("check", help="run the built-in invariant fixtures")
    return parser


def _target(value: str) -> TrueDensity:
    if value.lstrip().startswith("{"):
        return TrueDensity.from_dict(json.loads(value))
    return TrueDensity.from_dict(value)


def _config_from_args(args, skip=()) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
    args.config_q = data.get("q")
    cfg = ExperimentConfig.from_dict(data)

    proc = cfg.process.to_dict()
    for flag, key in (("process", "kind"), ("a", "a"), ("burn_in", "burn_in")):
        if getattr(args, flag, None) is not None:
            proc[key] = getattr(args, flag)
    if getattr(args, "target", None) is not None:
        proc["target"] = _target(args.target).to_dict()
    try:
        cfg.process = ProcessSpec.from_dict(proc)
    except ValueError as err:
        raise ConfigError("process", str(err)) from None

    pen = cfg.penalty.to_dict()
    for key in ("multiplier", "law", "distribution", "method", "B"):
        if getattr(args, key, None) is not None:
            pen[key] = getattr(args, key)
    try:
        cfg.penalty = PenaltyConfig(**pen)
    except ValueError as err:
        raise ConfigError("penalty", str(err)) from None

    slope = cfg.slope.to_dict()
    for key in ("grid", "measure"):
        if getattr(args, key, None) is not None:
            slope[key] = getattr(args, key)
    try:
        cfg.slope = SlopeConfig(**slope)
    except ValueError as err:
        raise ConfigError("slope", str(err)) from None

    overrides = cfg.to_dict()
    overrides.pop("process"), overrides.pop("penalty"), overrides.pop("slope")
    for key in ("collection", "max_level", "cap", "n", "q", "reps", "seed"):
        if key not in skip and getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    return ExperimentConfig(process=cfg.process, penalty=cfg.penalty, slope=cfg.slope, **overrides)


def _load_sample(args, cfg: ExperimentConfig):
    """Blocked sample and the true density (only known for simulated data).

    Without ``--q`` (or ``q`` in the config file) the block length follows
    the default rule of :func:`mixsel.blocks.make_blocks`.
    """
    q = args.q if args.q is not None else (cfg.q[0] if args.config_q is not None else None)
    if args.input:
        x = np.loadtxt(args.input, delimiter=",", ndmin=1)
        return BlockedSample.from_array(x, q), None
    x = simulate(cfg.process, cfg.n[0], seed=cfg.seed)
    return BlockedSample.from_array(x, q), cfg.process.target


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args, skip=("n", "seed"))
    x = simulate(cfg.process, args.n, seed=args.seed)
    text = "\n".join(repr(float(v)) for v in x) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_select(args) -> int:
    cfg = _config_from_args(args)
    sample, truth = _load_sample(args, cfg)
    collection = enumerate_models(cfg.collection, sample.scheme.n, cap=cfg.cap, max_level=cfg.max_level)
    report = run_ppe(sample, collection, cfg.penalty, truth)
    report.write(args.out)
    print(json.dumps(report.summary(), default=_json_default))
    return EXIT_OK


def cmd_slope(args) -> int:
    cfg = _config_from_args(args)
    sample, truth = _load_sample(args, cfg)
    n = sample.scheme.n
    collection = enumerate_models(cfg.collection, n, cap=cfg.cap, max_level=cfg.max_level)
    table = collection_table(sample, collection, truth)
    if cfg.slope.measure == DIMENSION:
        delta = table.dims / n
    else:
        delta = 2.0 * table.p_w / c_tilde_w(cfg.penalty.weight_law(table.p))
    report = slope_select(list(zip(table.models, table.contrast, delta)), cfg.slope.K, cfg.slope.measure, risks=table.risk)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.path.write_csv(out / "slope_path.csv")
    report.write(out)
    print(json.dumps(report.summary(), default=_json_default))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config_from_args(args)
    cfg.output = args.out
    report = run_experiment(cfg, workers=args.workers)
    brief = [
        {k: cell[k] for k in ("n", "q", "reps", "ratio", "slope_ratio", "jump_rate")} for cell in report.cells
    ]
    print(json.dumps(brief))
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks()
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME


COMMANDS = {
    "simulate": cmd_simulate,
    "select": cmd_select,
    "slope": cmd_slope,
    "experiment": cmd_experiment,
    "check": cmd_check,
}


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, json.JSONDecodeError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as err:  # noqa: BLE001
        print(f"runtime failure: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
