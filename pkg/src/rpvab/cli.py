"""Command-line interface: ``rpvab {run-study,evaluate,ppc}``.

Every command is seeded; without ``--seed`` the fixed default 42 is used.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from ._validation import DEFAULT_SEED
from .config import (
    ConfigError,
    dump_study,
    load_state,
    load_study,
    load_transactions,
    study_from_preset,
)
from .decision import evaluate_states
from .diagnostics import STATISTICS, posterior_predictive_check
from .posterior import marginal_mean
from .report import aggregate_csv, aggregate_text, money, records_csv
from .simulation import PRESETS, run_study

DEFAULT_OUTPUT = "rpvab-output"


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _global_options(parser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(None),
                        help=f"base seed, unsigned 64-bit (default {DEFAULT_SEED})")
    parser.add_argument("--jobs", type=int, default=default(1), help="worker processes (default 1)")
    parser.add_argument("--output", default=default(None), help=f"output directory (default {DEFAULT_OUTPUT})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpvab", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    rs = sub.add_parser("run-study", help="simulate scenarios with both methods and aggregate")
    _global_options(rs, suppress=True)
    src = rs.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="study config file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    rs.add_argument("--n-runs", type=int)
    rs.add_argument("--samples", type=int, help="Monte Carlo samples per variant (S)")
    rs.add_argument("--epsilon", type=float)
    rs.add_argument("--max-days", type=int)
    rs.add_argument("--alpha", type=float)
    rs.add_argument("--min-days", type=int)

    ev = sub.add_parser("evaluate", help="decide on cumulative data from a state file")
    _global_options(ev, suppress=True)
    ev.add_argument("state", help="state file with [engine] and [variant <name>] blocks")

    pp = sub.add_parser("ppc", help="posterior predictive check for one variant")
    _global_options(pp, suppress=True)
    pp.add_argument("state", help="state file")
    pp.add_argument("transactions", help="transaction values, one per line")
    pp.add_argument("--statistic", default="mean", help=f"one of: {', '.join(STATISTICS)}")
    pp.add_argument("--replicates", type=int, default=1000)
    pp.add_argument("--variant", help="variant name (default: first in the state file)")
    return parser


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_run_study(args) -> int:
    overrides = {
        "seed": args.seed, "n_runs": args.n_runs, "samples": args.samples, "epsilon": args.epsilon,
        "max_days": args.max_days, "alpha": args.alpha, "min_days": args.min_days,
    }
    study = load_study(args.config, overrides) if args.config else study_from_preset(args.preset, overrides)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    out = Path(args.output or DEFAULT_OUTPUT)
    started = time.perf_counter()
    for sc in study.scenarios:
        report = run_study(sc, study.engine_for(sc), study.n_runs, jobs=args.jobs)
        _write(out / sc.name / "records.csv", records_csv(report))
        _write(out / sc.name / "aggregate.csv", aggregate_csv(report))
        text = aggregate_text(report)
        _write(out / sc.name / "aggregate.txt", text)
        print(text)
    echo = dump_study(study)
    _write(out / "config_echo.ini", echo)
    meta = {
        "base_seed": study.engine.seed,
        "tool_version": _tool_version(),
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
        "jobs": args.jobs,
        "config_echo": echo,
    }
    _write(out / "metadata.json", json.dumps(meta, indent=2) + "\n")
    return 0


def cmd_evaluate(args) -> int:
    st = load_state(args.state)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    decision, m = evaluate_states(st.states, st.epsilon, st.samples, np.random.default_rng(seed), st.control)
    lines = [f"epsilon = {st.epsilon}, samples = {st.samples}, control = {st.names[st.control]}, seed = {seed}"]
    header = ("variant", "visitors", "conv", "conv_mean", "t_dof", "t_loc", "t_scale", "rpv_mean", "pbb", "exp_loss")
    rows = [header]
    for i, s in enumerate(st.states):
        t = marginal_mean(s.value_posterior())
        rows.append((
            st.names[i], str(s.visitors), str(s.conversions), f"{s.conversion_posterior().mean:.6f}",
            f"{t.dof:.1f}", money(t.loc), money(t.scale), money(float(m.samples[:, i].mean())),
            f"{decision.pbb[i]:.4f}", money(decision.expected_losses[i]),
        ))
    widths = [max(len(r[j]) for r in rows) for j in range(len(header))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    verdict = str(decision)
    if decision.winner is not None:
        verdict = f"StopWinner({st.names[decision.winner]})"
    lines.append(f"verdict: {verdict}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.output:
        _write(Path(args.output) / "evaluation.txt", text)
    return 0


def cmd_ppc(args) -> int:
    if args.statistic not in STATISTICS:
        raise ConfigError(f"unknown statistic {args.statistic!r}; valid names: {', '.join(STATISTICS)}")
    if args.replicates < 1:
        raise ConfigError("--replicates must be >= 1")
    st = load_state(args.state)
    name = args.variant or st.names[0]
    if name not in st.names:
        raise ConfigError(f"variant {name!r} not in state file (have {st.names})")
    values = load_transactions(args.transactions)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    try:
        res = posterior_predictive_check(st.states[st.names.index(name)], values, args.statistic,
                                         args.replicates, np.random.default_rng(seed))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    reps = res.replicated_values
    text = (
        f"variant: {name}\n"
        f"statistic: {res.statistic_name}\n"
        f"observed: {res.observed_value:.6g}\n"
        f"replicates: {reps.size} (min {reps.min():.6g}, median {np.median(reps):.6g}, max {reps.max():.6g})\n"
        f"ppc_p_value: {res.ppc_p_value:.4f}\n"
    )
    print(text, end="")
    if args.output:
        _write(Path(args.output) / f"ppc_{name}_{res.statistic_name}.txt", text)
    return 0


COMMANDS = {"run-study": cmd_run_study, "evaluate": cmd_evaluate, "ppc": cmd_ppc}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"rpvab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rpvab: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
