"""Command line front end: single runs and figure-style sweeps.

Exit codes: 0 on success, 2 for configuration problems (bad file, bad
key, bad value, unknown preset), 3 for runtime failures.  The env var
BWBROKER_SEED overrides the configured base seed; an explicit --seed
flag beats both.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .allocation import PolicyKind
from .engine import FIGURE_SWEEPS, run_experiment, run_policies
from .metrics import RunSummary, StepRecord, aggregate
from .model import PRESETS, ConfigError, ScenarioConfig

STEP_CSV_HEADER = [
    "replication",
    "t_min",
    "B_I",
    "B_IPTV_demand",
    "B_A",
    "B_R",
    "B_B",
    "N_IPTV",
    "per_channel_bw",
    "SL",
    "utilization",
    "blocks",
    "drops",
]

SUMMARY_CSV_HEADER = [
    "policy",
    "mean_SL",
    "se_SL",
    "mean_util",
    "se_util",
    "block_rate",
    "drop_rate",
    "mean_N_IPTV",
]

SWEEP_CSV_HEADER = ["sweep_value"] + SUMMARY_CSV_HEADER

_INT_FIELDS = {"num_channels_catalog", "replications", "base_seed"}
_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)}


def load_config(source: str) -> ScenarioConfig:
    """Build a scenario from a preset name or a flat YAML file.

    File keys must be ScenarioConfig field names; anything else is a hard
    error so a typo cannot silently fall back to a default.  Omitted keys
    take the table1 preset defaults.
    """
    if source in PRESETS:
        return PRESETS[source]()
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"config file not found: {source}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: config must be a flat key/value mapping")
    unknown = sorted(set(data) - _CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"{source}: unknown config keys: {', '.join(unknown)}")
    coerced = {}
    for key, raw in data.items():
        try:
            coerced[key] = int(raw) if key in _INT_FIELDS else float(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: bad value for {key}: {raw!r}") from exc
    config = replace(PRESETS["table1"](), **coerced)
    config.validate()
    return config


def _resolve_seed(config: ScenarioConfig, flag_seed: int | None) -> ScenarioConfig:
    seed = flag_seed
    if seed is None:
        env = os.environ.get("BWBROKER_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError as exc:
                raise ConfigError(f"BWBROKER_SEED must be an integer, got {env!r}") from exc
    if seed is None:
        return config
    return replace(config, base_seed=seed)


def _write_text_atomic(path: Path, text: str) -> None:
    # write-then-rename so a crash can never leave a half-written file
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _step_rows(records_by_rep: list[list[StepRecord]]) -> list[list]:
    rows = []
    for rep, records in enumerate(records_by_rep):
        for r in records:
            rows.append(
                [
                    rep,
                    r.t_min,
                    r.non_iptv_demand_mbps,
                    r.iptv_demand_mbps,
                    r.available_mbps,
                    r.reserved_mbps,
                    r.borrowed_mbps,
                    r.active_channels,
                    r.per_channel_bw_mbps,
                    r.satisfaction,
                    r.utilization,
                    r.blocks,
                    r.drops,
                ]
            )
    return rows


def _summary_row(policy: PolicyKind, s: RunSummary) -> list:
    return [
        policy.value,
        s.mean_satisfaction,
        s.se_satisfaction,
        s.mean_utilization,
        s.se_utilization,
        s.block_rate,
        s.drop_rate,
        s.mean_active_channels,
    ]


def _print_summary(policy: PolicyKind, s: RunSummary) -> None:
    print(
        f"policy={policy.value} reps={s.replications}"
        f" mean_SL={s.mean_satisfaction:.4f} se_SL={s.se_satisfaction:.4f}"
        f" mean_util={s.mean_utilization:.4f} se_util={s.se_utilization:.4f}"
        f" block_rate={s.block_rate:.4f} drop_rate={s.drop_rate:.4f}"
        f" mean_N_IPTV={s.mean_active_channels:.2f}"
    )


def cmd_run(args: argparse.Namespace) -> int:
    config = _resolve_seed(load_config(args.config), args.seed)
    if args.policy == "both":
        policies: tuple[PolicyKind, ...] = tuple(PolicyKind)
    else:
        policies = (PolicyKind(args.policy),)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    by_policy = run_policies(config, policies=policies, jobs=args.jobs)
    summary_rows = []
    for policy in policies:
        records_by_rep = by_policy[policy]
        steps_path = out_dir / f"steps_{policy.value}.csv"
        _write_text_atomic(steps_path, _csv_text(STEP_CSV_HEADER, _step_rows(records_by_rep)))
        summary = aggregate(records_by_rep, config.warmup_min)
        summary_rows.append(_summary_row(policy, summary))
        _print_summary(policy, summary)
    _write_text_atomic(out_dir / "summary.csv", _csv_text(SUMMARY_CSV_HEADER, summary_rows))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _resolve_seed(load_config(args.config), args.seed)
    base, spec = FIGURE_SWEEPS[args.figure](config)
    points = run_experiment(base, spec, jobs=args.jobs)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [[p.sweep_value] + _summary_row(p.policy, p.summary) for p in points]
    _write_text_atomic(out_dir / f"sweep_{args.figure}.csv", _csv_text(SWEEP_CSV_HEADER, rows))

    for p in points:
        print(
            f"{spec.axis}={p.sweep_value:.4g} policy={p.policy.value}"
            f" mean_SL={p.summary.mean_satisfaction:.4f}"
            f" mean_util={p.summary.mean_utilization:.4f}"
            f" mean_N_IPTV={p.summary.mean_active_channels:.2f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bwbroker",
        description="Simulate SLA-backed bandwidth reservation for IPTV in a shared cell.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario config file, or a preset name (table1)")
    common.add_argument("--seed", type=int, default=None, help="override the base seed")
    common.add_argument("--out", default=".", help="output directory (default: cwd)")
    common.add_argument(
        "--jobs",
        type=int,
        default=os.cpu_count() or 1,
        help="parallel replication workers (default: available cores)",
    )

    p_run = sub.add_parser("run", parents=[common], help="run one scenario")
    p_run.add_argument(
        "--policy", choices=["sla", "nonsla", "both"], default="both",
        help="which allocation policy to run (default: both)",
    )
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a figure-style sweep")
    p_sweep.add_argument(
        "--figure", choices=sorted(FIGURE_SWEEPS), required=True,
        help="which preset sweep to run",
    )
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
