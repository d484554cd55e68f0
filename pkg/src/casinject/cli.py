"""Command-line entry point: ``casinject {clean,optimize,heatmap,report}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import batch, report
from . import trajectory as tj
from .config import ConfigError, load_config

log = logging.getLogger("casinject")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_clean(args, cfg) -> int:
    inputs = args.inputs or list(cfg.inputs)
    out = Path(args.out)
    trajs, manifest = batch.clean_files(inputs, cfg)
    tdir = out / "trajectories"
    tdir.mkdir(parents=True, exist_ok=True)
    for t in trajs:
        tj.write_trajectory_csv(t, tdir / f"{t.traj_id}.csv")
    tj.write_manifest(manifest, out / "manifest.jsonl")
    log.info("clean: %d trajectories kept, %d manifest entries", len(trajs), len(manifest))
    return 0


def _results_text(records: list[dict]) -> tuple[dict[str, str], str, str]:
    files = {f"{r['id']}.json": _dump(r) for r in records}
    ok, failed = batch.split_failures(records)
    rep = report.aggregate(ok, failed)
    return files, _dump(rep.to_dict()), report.table_csv(rep)


def cmd_optimize(args, cfg) -> int:
    trajs = batch.load_trajectories(args.inputs or cfg.inputs, cfg)
    out = Path(args.out)
    records = batch.optimize_all(trajs, cfg)
    files, agg, table = _results_text(records)
    rdir = out / "results"
    rdir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (rdir / name).write_text(text)
    _write(out / "aggregate.json", agg)
    _write(out / "table.csv", table)
    _, failed = batch.split_failures(records)
    log.info("optimize: %d trajectories, %d failed", len(records), failed)
    return 0


def cmd_heatmap(args, cfg) -> int:
    trajs = batch.load_trajectories(args.inputs or cfg.inputs, cfg)
    cells = batch.heatmap(trajs, cfg)
    _write(Path(args.out) / "heatmap.csv", batch.heatmap_csv(cells))
    return 0


def load_results(inputs) -> list[dict]:
    paths = []
    for p in map(Path, inputs):
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        elif p.exists():
            paths.append(p)
        else:
            raise FileNotFoundError(f"no such result file or directory: {p}")
    return sorted((json.loads(p.read_text()) for p in paths), key=lambda r: r["id"])


def cmd_report(args, cfg) -> int:
    records = load_results(args.inputs)
    ok, failed = batch.split_failures(records)
    rep = report.aggregate(ok, failed)
    out = Path(args.out)
    _write(out / "report.json", _dump(rep.to_dict()))
    _write(out / "table.csv", report.table_csv(rep))
    _write(out / "ra_length.csv", report.ra_length_csv(rep))
    _write(out / "deviation.csv", report.deviation_csv(ok))
    return 0


COMMANDS = {"clean": cmd_clean, "optimize": cmd_optimize, "heatmap": cmd_heatmap, "report": cmd_report}
HELP = {
    "clean": "clean raw state-vector CSVs into 1 Hz trajectories plus a manifest",
    "optimize": "search the best attack on every trajectory and aggregate the results",
    "heatmap": "mean best attack cost with the attacker at each point of a grid",
    "report": "rebuild aggregate tables and distributions from result files",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="casinject", description="Ground-based CAS injection attack simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("inputs", nargs="*", help="input files or directories")
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, help="override the config worker count")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.workers is not None:
            cfg = replace(cfg, workers=args.workers)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    try:
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("%s failed: %s", args.command, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
