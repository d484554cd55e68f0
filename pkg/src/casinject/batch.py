"""Batch drivers behind the command-line tools.

Work items are processed in a fixed order (sorted by id) and every random
seed is derived from the experiment seed and the item key, so the results
do not depend on the worker count.
"""
from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import engine
from . import trajectory as tj
from .attacker import AttackerSite
from .config import ExperimentConfig
from .optimizer import optimize
from .trajectory import Rejection, Trajectory

log = logging.getLogger(__name__)


def parallel_map(fn, items: list, workers: int = 1) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# -------------------------------------------------------------------- clean


def read_error_entry(source: str, reason: str) -> dict:
    return {"id": None, "icao24": None, "source": source, "length": 0, "rejected": True,
            "stage": "read", "reason": reason, "duplicates": 0, "trend": None, "containment": None}


def clean_files(paths, cfg: ExperimentConfig) -> tuple[list[Trajectory], list[dict]]:
    """Read raw state-vector CSVs and run the cleaning pipeline.

    Files that cannot be read are reported in the manifest and skipped.
    Records for one address may span files.
    """
    frames, errors = [], []
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    for path in sorted(set(files)):
        try:
            frames.append(tj.read_state_vectors(path, cfg.alt_unit))
        except (OSError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            log.warning("skipping %s: %s", path, exc)
            errors.append(read_error_entry(path.name, str(exc)))
    raws = tj.split_flights(pd.concat(frames, ignore_index=True), cfg.center, cfg.pipeline) if frames else []
    kept, entries = [], []
    for raw in raws:
        item = tj.clean(raw, cfg.pipeline)
        if isinstance(item, Rejection):
            log.info("%s rejected at %s: %s", item.traj_id, item.stage, item.reason)
        else:
            kept.append(item)
        entries.append(tj.manifest_entry(item, duplicates=raw.duplicates))
    entries.sort(key=lambda e: e["id"])
    return kept, errors + entries


def trajectory_paths(inputs) -> list[Path]:
    out = []
    for p in map(Path, inputs):
        if p.is_dir():
            out.extend(sorted(p.glob("*.csv")))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"no such trajectory file or directory: {p}")
    return sorted(set(out), key=lambda q: (q.stem, str(q)))


def load_trajectories(inputs, cfg: ExperimentConfig) -> list[Trajectory]:
    return [tj.read_trajectory_csv(p, p.stem, cfg.pipeline) for p in trajectory_paths(inputs)]


# ----------------------------------------------------------------- optimize


def optimize_one(traj: Trajectory, cfg: ExperimentConfig) -> dict:
    try:
        ocfg = replace(cfg.optimizer, rng_seed=cfg.seed_for(traj.traj_id))
        res = optimize(traj, ocfg, cfg.response, cfg.cas)
        m, attacked = engine.run(traj, res.best, cfg.response, cfg.cas)
    except Exception as exc:  # one bad trajectory must not sink the batch
        log.error("optimisation failed for %s: %s", traj.traj_id, exc)
        return {"id": traj.traj_id, "error": f"{type(exc).__name__}: {exc}"}
    rec = engine.run_to_dict(traj.traj_id, res.best, m, attacked)
    rec.update(
        airport=cfg.airport,
        trend=traj.trend.value,
        containment=traj.containment.value,
        length=len(traj),
        mean_vrate=traj.mean_vrate,
        evaluations=res.evaluations,
        restarts_used=res.restarts_used,
        trace=[[s.crossing_point, s.vrate, s.site.value, c] for s, c in res.trace],
    )
    return rec


def optimize_all(trajs: list[Trajectory], cfg: ExperimentConfig) -> list[dict]:
    trajs = sorted(trajs, key=lambda t: t.traj_id)
    return parallel_map(functools.partial(optimize_one, cfg=cfg), trajs, cfg.workers)


def split_failures(records: list[dict]) -> tuple[list[dict], int]:
    ok = [r for r in records if "error" not in r]
    return ok, len(records) - len(ok)


# ------------------------------------------------------------------ heatmap


@dataclass(frozen=True)
class HeatmapCell:
    row: int
    col: int
    x: float
    y: float
    mean_cost: float | None
    n: int


def _eligible(traj: Trajectory, rule: str) -> bool:
    if rule == "fully":
        return traj.containment is tj.Containment.FULLY
    if rule == "partly":
        return traj.containment.partly_contained
    return True


def data_bbox(trajs: list[Trajectory]) -> tuple[float, float, float, float]:
    if not trajs:
        return (0.0, 0.0, 0.0, 0.0)
    xs = np.concatenate([t.x for t in trajs])
    ys = np.concatenate([t.y for t in trajs])
    return (float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))


def _cell_cost(task, trajs: dict, cfg: ExperimentConfig) -> float | None:
    tid, row, col, x, y = task
    traj = trajs[tid]
    site = AttackerSite(x, y)
    try:
        if not engine.reachable(traj, site, cfg.response, cfg.cas):
            return 0.0
        ocfg = replace(cfg.optimizer, rng_seed=cfg.seed_for(f"{tid}@{row},{col}"))
        return float(optimize(traj, ocfg, cfg.response, cfg.cas, site).best_cost)
    except Exception as exc:
        log.error("heatmap run failed for %s at cell (%d, %d): %s", tid, row, col, exc)
        return None


def heatmap(trajs: list[Trajectory], cfg: ExperimentConfig) -> list[HeatmapCell]:
    """Mean best attack cost with the attacker placed at each grid point."""
    spec = cfg.heatmap
    pool = sorted((t for t in trajs if _eligible(t, spec.containment)), key=lambda t: t.traj_id)
    bbox = spec.bbox if spec.bbox is not None else data_bbox(pool)
    if spec.bbox is not None and pool:
        have = data_bbox(pool)
        if have[0] < bbox[0] or have[1] < bbox[1] or have[2] > bbox[2] or have[3] > bbox[3]:
            log.warning("heatmap bbox %s does not cover the data bbox %s", bbox, have)
    points = spec.points(bbox)
    tasks = [(t.traj_id, row, col, x, y) for row, col, x, y in points for t in pool]
    fn = functools.partial(_cell_cost, trajs={t.traj_id: t for t in pool}, cfg=cfg)
    costs = parallel_map(fn, tasks, cfg.workers)
    per_cell: dict[tuple[int, int], list[float]] = {(r, c): [] for r, c, _, _ in points}
    for (_, row, col, _, _), c in zip(tasks, costs):
        if c is not None:
            per_cell[row, col].append(c)
    cells = []
    for row, col, x, y in points:
        vals = sorted(per_cell[row, col])
        mean = math.fsum(vals) / len(vals) if vals else None
        cells.append(HeatmapCell(row, col, x, y, mean, len(vals)))
    return cells


def heatmap_csv(cells: list[HeatmapCell]) -> str:
    lines = ["row,col,x,y,mean_cost,n"]
    for c in cells:
        mean = "" if c.mean_cost is None else f"{c.mean_cost:.6f}"
        lines.append(f"{c.row},{c.col},{c.x:.3f},{c.y:.3f},{mean},{c.n}")
    return "\n".join(lines) + "\n"
