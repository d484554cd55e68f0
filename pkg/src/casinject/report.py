"""Aggregate statistics over per-trajectory optimisation results.

Everything here is a pure fold over result records (plain dicts as written
by the ``optimize`` command), so a report can always be rebuilt from the
stored result files.
"""
from __future__ import annotations

import csv
import io
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

TRENDS = ("climbing", "level", "descending")
CONTAINMENTS = ("fully", "partly", "outside")
TABLE_COLUMNS = (
    "group", "key", "n",
    "has_ta", "has_ta_pct",
    "has_ra", "has_ra_pct",
    "vert_rate", "vert_rate_pct",
    "partly_contained", "partly_contained_pct",
)


def spearman(x, y) -> float | None:
    """Spearman rank correlation with average ranks for ties.

    None when fewer than two pairs or when either side is constant.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("spearman needs paired samples")
    if x.size < 2:
        return None
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        return None
    return float(rx @ ry) / denom


def _pct(k: int, n: int) -> float:
    return 100.0 * k / n if n else 0.0


def _flags(rec: dict) -> tuple[bool, bool, bool, bool]:
    m = rec["metrics"]
    return (
        m["t_TA"] > 0,
        m["t_RA"] > 0,
        m["t_VR"] > 0,
        rec["containment"] in ("fully", "partly"),
    )


def table_row(group: str, key: str, recs: list[dict]) -> dict:
    n = len(recs)
    counts = [sum(col) for col in zip(*(_flags(r) for r in recs))] if recs else [0, 0, 0, 0]
    row = {"group": group, "key": key, "n": n}
    for name, k in zip(("has_ta", "has_ra", "vert_rate", "partly_contained"), counts):
        row[name] = k
        row[name + "_pct"] = _pct(k, n)
    return row


def _dist(values: list[float]) -> dict:
    if not values:
        return {"n": 0, "median": None, "std": None, "values": []}
    return {
        "n": len(values),
        "median": float(statistics.median(values)),
        "std": float(statistics.pstdev(values)),
        "values": values,
    }


@dataclass
class AggregateReport:
    table: list[dict] = field(default_factory=list)
    containment: list[dict] = field(default_factory=list)
    ra_length: dict[int, int] = field(default_factory=dict)
    deviation: dict[str, dict] = field(default_factory=dict)
    strategy: dict = field(default_factory=dict)
    spearman_vrate: dict = field(default_factory=dict)
    runs: int = 0
    failed: int = 0

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "failed": self.failed,
            "table": self.table,
            "containment": self.containment,
            "ra_length": {str(k): v for k, v in sorted(self.ra_length.items())},
            "deviation": self.deviation,
            "strategy": self.strategy,
            "spearman_vrate": self.spearman_vrate,
        }


def aggregate(records: list[dict], failed: int = 0) -> AggregateReport:
    recs = sorted(records, key=lambda r: r["id"])
    rep = AggregateReport(runs=len(recs), failed=failed)

    rep.table.append(table_row("all", "all", recs))
    for airport in sorted({r["airport"] for r in recs}):
        rep.table.append(table_row("airport", airport, [r for r in recs if r["airport"] == airport]))
    for trend in TRENDS:
        rep.table.append(table_row("trend", trend, [r for r in recs if r["trend"] == trend]))

    classes = {c: [r for r in recs if r["containment"] == c] for c in CONTAINMENTS}
    classes["partly_contained"] = classes["fully"] + classes["partly"]
    for name, group in classes.items():
        with_ra = sum(1 for r in group if r["metrics"]["t_RA"] > 0)
        rep.containment.append({"class": name, "n": len(group), "has_ra": with_ra, "has_ra_pct": _pct(with_ra, len(group))})

    rep.ra_length = dict(sorted(Counter(r["metrics"]["l_RA"] for r in recs if r["metrics"]["l_RA"] > 0).items()))

    for trend in ("all",) + TRENDS:
        group = [r for r in recs if r["metrics"]["t_RA"] > 0 and trend in ("all", r["trend"])]
        rep.deviation[trend] = {
            "max_abs": _dist([r["metrics"]["max_abs_deviation"] for r in group]),
            "signed": _dist([r["metrics"]["greatest_signed_deviation"] for r in group]),
        }

    vr = [r["strategy"]["vrate"] for r in recs]
    cp = [r["strategy"]["crossing_point"] for r in recs]
    sites = Counter(r["strategy"]["site"] for r in recs)
    rep.strategy = {
        "median_vrate": float(statistics.median(vr)) if vr else None,
        "median_crossing_point": float(statistics.median(cp)) if cp else None,
        "site_counts": {s: sites.get(s, 0) for s in ("mid", "end")},
    }
    rep.spearman_vrate = {
        "n": len(recs),
        "rho": spearman(vr, [r["mean_vrate"] for r in recs]),
    }
    return rep


def table_csv(rep: AggregateReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for row in rep.table:
        w.writerow([f"{row[c]:.2f}" if c.endswith("_pct") else row[c] for c in TABLE_COLUMNS])
    return buf.getvalue()


def ra_length_csv(rep: AggregateReport) -> str:
    lines = ["l_RA,count"] + [f"{k},{v}" for k, v in sorted(rep.ra_length.items())]
    return "\n".join(lines) + "\n"


def deviation_csv(records: list[dict]) -> str:
    """One row per run with an RA: the density source data split by trend."""
    lines = ["id,trend,max_abs_deviation,greatest_signed_deviation"]
    for r in sorted(records, key=lambda r: r["id"]):
        m = r["metrics"]
        if m["t_RA"] > 0:
            lines.append(f"{r['id']},{r['trend']},{m['max_abs_deviation']:.3f},{m['greatest_signed_deviation']:.3f}")
    return "\n".join(lines) + "\n"
