"""Command-line entry point: ``pareto-ts {simulate,klinf,lowerbound,analyze}``.

Exit codes: 0 success, 2 invalid config or model, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .bounds import ModelError, analysis_constants, kl_inf, kl_inf_oracle, lower_bound_curve
from .config import ConfigError, ExperimentConfig, bundled_configs
from .rng import RNG_ID
from .simulator import CHUNK_SIZE, SimulationError, geometric_checkpoints, run_experiment

OUTPUT_DIR_ENV = "PARETO_TS_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _print_table(header, rows, out) -> None:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for r in cells:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n")


def output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def _load(args) -> ExperimentConfig:
    return ExperimentConfig.load(args.config)


def _checked_model(cfg: ExperimentConfig):
    model = cfg.model
    model.require_unique_optimum()
    return model


def cmd_simulate(args, out) -> int:
    cfg = _load(args).with_overrides(
        seed=args.seed,
        k=args.k,
        truncate=args.truncate,
        horizon=args.horizon,
        replications=args.replications,
        output=args.output,
    )
    stem = cfg.output or Path(str(args.config)).stem
    base = Path(stem) if Path(stem).is_absolute() else output_dir() / stem
    base.parent.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    try:
        agg = run_experiment(
            cfg.environment,
            cfg.policy,
            cfg.horizon,
            cfg.replications,
            cfg.seed,
            cfg.resolved_checkpoints(),
            parallelism=args.jobs,
        )
    except (SimulationError, ArithmeticError) as exc:
        sys.stderr.write(f"simulation failed: {exc}\n")
        return EXIT_RUNTIME
    wall = time.perf_counter() - start

    csv_path = base.with_name(base.name + ".csv")
    meta_path = base.with_name(base.name + ".json")
    csv_path.write_text(agg.to_csv())
    meta = {
        "config_fingerprint": agg.fingerprint,
        "config": cfg.to_dict(),
        "run": cfg.run_description(),
        "policy": cfg.policy.name,
        "rng": RNG_ID,
        "chunk_size": CHUNK_SIZE,
        "jobs": args.jobs,
        "csv_columns": list(agg.CSV_COLUMNS),
        "regret": "pseudo-regret, sum of gaps of played arms",
        "std": "population standard deviation across replications",
        "quantiles": "linear interpolation of order statistics (type 7)",
        "wall_time_s": round(wall, 3),
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    out.write(f"{cfg.policy.name}: {cfg.replications} runs x {cfg.horizon} rounds in {wall:.1f}s\n")
    out.write(f"wrote {csv_path}\nwrote {meta_path}\n")
    return EXIT_OK


def cmd_klinf(args, out) -> int:
    cfg = _load(args)
    model = _checked_model(cfg)
    mu1 = model.mu_star
    rows = []
    total = 0.0
    for a in model.suboptimal_arms:
        p = model.arms[a]
        closed = kl_inf(p, mu1)
        oracle = kl_inf_oracle(p, mu1, args.resolution)
        total += model.gaps[a] / closed
        rows.append((a, _fmt(model.gaps[a]), _fmt(closed), _fmt(model.gaps[a] / closed), _fmt(oracle),
                     f"{abs(oracle - closed):.3e}"))
    out.write(f"# model_fingerprint={cfg.model_fingerprint}\n")
    out.write(f"# optimal arm {model.optimal_arm}, mean {_fmt(mu1)}\n")
    _print_table(("arm", "gap", "kl_inf", "gap/kl_inf", "oracle", "abs_diff"), rows, out)
    out.write(f"# sum gap/kl_inf = {_fmt(total)}\n")
    return EXIT_OK


def cmd_lowerbound(args, out) -> int:
    cfg = _load(args)
    _checked_model(cfg)
    if args.horizon < 1:
        raise ConfigError("horizon", "must be >= 1")
    t, value = lower_bound_curve(cfg.model, geometric_checkpoints(args.horizon))
    lines = [f"# model_fingerprint={cfg.model_fingerprint}", "round,bound"]
    lines += [f"{int(ti)},{_fmt(v)}" for ti, v in zip(t, value)]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        out.write(f"wrote {args.output}\n")
    else:
        out.write(text)
    return EXIT_OK


def cmd_analyze(args, out) -> int:
    cfg = _load(args)
    model = _checked_model(cfg)
    rows = []
    for a in model.suboptimal_arms:
        c = analysis_constants(model, a, args.k, args.eps)
        rows.append((a, _fmt(c.eps_a), _fmt(c.eps_l), _fmt(c.eps_u), _fmt(c.eta), _fmt(c.D),
                     f"{c.D - c.kl_inf:.6e}"))
    out.write(f"# model_fingerprint={cfg.model_fingerprint}\n")
    out.write(f"# k={args.k}, eps={args.eps!r}, admissible eps < {_fmt(c.eps_bound)}\n")
    _print_table(("arm", "eps_a", "eps_l", "eps_u", "eta", "D", "D-kl_inf"), rows, out)
    return EXIT_OK


def _bool_flag(p, name, help_):
    g = p.add_mutually_exclusive_group()
    g.add_argument(f"--{name}", dest=name, action="store_const", const=True, help=help_)
    g.add_argument(f"--no-{name}", dest=name, action="store_const", const=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pareto-ts",
        description="Thompson sampling for Pareto bandits.",
        epilog=f"bundled configs: {', '.join(bundled_configs())}; "
               f"output directory from ${OUTPUT_DIR_ENV} (default: current directory)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte-Carlo regret experiment")
    p.add_argument("--config", required=True, help="config file or bundled config name")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--k", type=int, help="override the prior exponent")
    _bool_flag(p, "truncate", "override: use STS-T")
    p.add_argument("--horizon", type=int, help="override the horizon")
    p.add_argument("--replications", type=int, help="override the replication count")
    p.add_argument("--output", help="override the output file stem")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("klinf", help="per-arm KL_inf with a brute-force cross-check")
    p.add_argument("--config", required=True)
    p.add_argument("--resolution", type=int, default=10_000, help="oracle grid resolution")
    p.set_defaults(func=cmd_klinf)

    p = sub.add_parser("lowerbound", help="asymptotic regret lower bound as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--output", help="CSV path (default: standard output)")
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("analyze", help="finite-eps constants of the regret upper bound")
    p.add_argument("--config", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        sys.stderr.write("error: --jobs must be >= 1\n")
        return EXIT_CONFIG
    try:
        return args.func(args, out)
    except (ConfigError, ModelError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        sys.stderr.write(f"runtime error: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
