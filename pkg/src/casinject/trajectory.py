"""Ownship trajectories: ingestion, cleaning and classification.

Raw state vectors are grouped per aircraft address, split on reporting
gaps, gap-filled, resampled to 1 Hz, altitude-windowed and rate-checked.
Each stage either returns a trajectory or a ``Rejection`` naming the stage.
"""
from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from . import geometry as geo
from .geometry import FT_PER_M

EARTH_RADIUS_FT = 6371008.8 * FT_PER_M
_ICAO_RE = re.compile(r"^[0-9a-f]{6}$")
CSV_COLUMNS = ("time", "icao24", "lat", "lon", "baroaltitude")


class Trend(enum.Enum):
    CLIMBING = "climbing"
    LEVEL = "level"
    DESCENDING = "descending"


class Containment(enum.Enum):
    FULLY = "fully"
    PARTLY = "partly"
    OUTSIDE = "outside"

    @property
    def partly_contained(self) -> bool:
        """Starts or ends inside the band (a superset of fully contained)."""
        return self is not Containment.OUTSIDE


@dataclass(frozen=True)
class PipelineConfig:
    max_gap_s: float = 60.0
    max_missing_frac: float = 0.20
    alt_floor_ft: float = 3750.0
    alt_ceiling_ft: float = 30000.0
    max_climb_fpm: float = 5000.0
    max_descent_fpm: float = 4500.0
    trend_threshold_ft: float = 500.0
    min_steps: int = 1

    @property
    def max_climb_fps(self) -> float:
        return self.max_climb_fpm / 60.0

    @property
    def max_descent_fps(self) -> float:
        return self.max_descent_fpm / 60.0


DEFAULT_PIPELINE = PipelineConfig()


@dataclass(frozen=True)
class RawStateVector:
    timestamp: float
    icao24: str
    lat: float
    lon: float
    baro_alt: float | None  # ft

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")
        if not _ICAO_RE.match(self.icao24):
            raise ValueError(f"bad icao24 address {self.icao24!r}")


@dataclass
class RawTrajectory:
    """One flight segment before cleaning. Missing altitudes are NaN."""

    icao24: str
    segment: int
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    alt: np.ndarray
    duplicates: int = 0

    @property
    def traj_id(self) -> str:
        return f"{self.icao24}-{self.segment:03d}"

    def __len__(self):
        return len(self.t)


@dataclass
class Trajectory:
    """A cleaned 1 Hz ownship trajectory."""

    traj_id: str
    x: np.ndarray
    y: np.ndarray
    alt: np.ndarray
    trend: Trend = Trend.LEVEL
    containment: Containment = Containment.OUTSIDE
    t0: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.alt)

    @property
    def icao24(self) -> str:
        return self.traj_id.split("-")[0]

    @property
    def mean_vrate(self) -> float:
        if len(self) < 2:
            return 0.0
        return float((self.alt[-1] - self.alt[0]) / (len(self) - 1))


@dataclass(frozen=True)
class Rejection:
    traj_id: str
    stage: str
    reason: str
    length: int = 0


# ---------------------------------------------------------------- ingestion


def project(lat, lon, center: tuple[float, float]):
    """Equirectangular local tangent plane around ``center`` (lat, lon), ft."""
    lat0, lon0 = center
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    x = EARTH_RADIUS_FT * np.radians(lon - lon0) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_FT * np.radians(lat - lat0)
    return x, y


def unproject(x, y, center: tuple[float, float]):
    lat0, lon0 = center
    lat = lat0 + np.degrees(np.asarray(y, dtype=float) / EARTH_RADIUS_FT)
    lon = lon0 + np.degrees(np.asarray(x, dtype=float) / (EARTH_RADIUS_FT * math.cos(math.radians(lat0))))
    return lat, lon


def read_state_vectors(path: str | Path, alt_unit: str = "m") -> pd.DataFrame:
    """Load an OpenSky-style CSV into a frame with altitude in feet.

    Raises ValueError on missing columns or unparseable values.
    """
    if alt_unit not in ("m", "ft"):
        raise ValueError(f"alt_unit must be 'm' or 'ft', got {alt_unit!r}")
    df = pd.read_csv(path, dtype={"icao24": str})
    missing = [c for c in CSV_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    df = df[list(CSV_COLUMNS)].copy()
    try:
        for col in ("time", "lat", "lon", "baroaltitude"):
            df[col] = pd.to_numeric(df[col], errors="raise").astype(float)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"{path}: {exc}") from exc
    df["icao24"] = df["icao24"].str.strip().str.lower()
    bad = ~df["icao24"].str.fullmatch(r"[0-9a-f]{6}").fillna(False)
    if bad.any():
        raise ValueError(f"{path}: bad icao24 values {sorted(df.loc[bad, 'icao24'].astype(str).unique())[:5]}")
    if df[["time", "lat", "lon"]].isna().any().any():
        raise ValueError(f"{path}: missing time or position values")
    if alt_unit == "m":
        df["baroaltitude"] = df["baroaltitude"] * FT_PER_M
    return df


def _records_frame(records) -> pd.DataFrame:
    if isinstance(records, pd.DataFrame):
        return records
    rows = [(r.timestamp, r.icao24, r.lat, r.lon, np.nan if r.baro_alt is None else r.baro_alt) for r in records]
    return pd.DataFrame(rows, columns=list(CSV_COLUMNS))


def split_flights(
    records: Iterable[RawStateVector] | pd.DataFrame,
    center: tuple[float, float] = (0.0, 0.0),
    cfg: PipelineConfig = DEFAULT_PIPELINE,
) -> list[RawTrajectory]:
    """Group by address and split wherever consecutive reports are > max_gap_s apart.

    Reports sharing a timestamp within one address are collapsed to the
    first one; the number dropped is kept on the segment.
    """
    df = _records_frame(records)
    if df.empty:
        return []
    df = df.sort_values(["icao24", "time"], kind="mergesort")
    out: list[RawTrajectory] = []
    for icao, grp in df.groupby("icao24", sort=True):
        dup = grp["time"].duplicated(keep="first").to_numpy()
        dup_times = grp["time"].to_numpy(float)[dup]
        grp = grp[~dup]
        t = grp["time"].to_numpy(float)
        x, y = project(grp["lat"].to_numpy(), grp["lon"].to_numpy(), center)
        alt = grp["baroaltitude"].to_numpy(float)
        cuts = np.flatnonzero(np.diff(t) > cfg.max_gap_s) + 1
        bounds = [0, *cuts.tolist(), len(t)]
        for seg, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
            n_dup = int(np.count_nonzero((dup_times >= t[a]) & (dup_times <= t[b - 1])))
            out.append(RawTrajectory(str(icao), seg, t[a:b].copy(), x[a:b].copy(), y[a:b].copy(), alt[a:b].copy(), n_dup))
    return out


# ----------------------------------------------------------------- cleaning


def fill_altitudes(raw: RawTrajectory, cfg: PipelineConfig = DEFAULT_PIPELINE) -> RawTrajectory | Rejection:
    missing = np.isnan(raw.alt)
    if len(raw) == 0 or missing.mean() > cfg.max_missing_frac or missing.all():
        return Rejection(raw.traj_id, "fill", "missing_altitude", len(raw))
    if not missing.any():
        return raw
    good = np.flatnonzero(~missing)
    a, b = good[0], good[-1] + 1
    t, x, y, alt = raw.t[a:b], raw.x[a:b], raw.y[a:b], raw.alt[a:b].copy()
    gaps = np.isnan(alt)
    alt[gaps] = np.interp(t[gaps], t[~gaps], alt[~gaps])
    return RawTrajectory(raw.icao24, raw.segment, t.copy(), x.copy(), y.copy(), alt, raw.duplicates)


def resample(raw: RawTrajectory) -> Trajectory:
    """Linear resampling onto whole seconds from the first report."""
    t0 = float(raw.t[0])
    n = int(math.floor(raw.t[-1] - t0 + 1e-9)) + 1
    grid = t0 + np.arange(n, dtype=float)
    return Trajectory(
        raw.traj_id,
        np.interp(grid, raw.t, raw.x),
        np.interp(grid, raw.t, raw.y),
        np.interp(grid, raw.t, raw.alt),
        t0=t0,
        meta={"duplicates": raw.duplicates},
    )


def _sub(traj: Trajectory, a: int, b: int) -> Trajectory:
    return Trajectory(traj.traj_id, traj.x[a:b].copy(), traj.y[a:b].copy(), traj.alt[a:b].copy(),
                      traj.trend, traj.containment, traj.t0 + a, dict(traj.meta))


def threshold_altitude(traj: Trajectory, cfg: PipelineConfig = DEFAULT_PIPELINE) -> Trajectory | Rejection:
    """Keep the longest contiguous stretch inside [alt_floor, alt_ceiling].

    For the usual climb-out or descent this is plain trimming of the
    leading and trailing samples outside the window.
    """
    inside = (traj.alt >= cfg.alt_floor_ft) & (traj.alt <= cfg.alt_ceiling_ft)
    if not inside.any():
        return Rejection(traj.traj_id, "threshold", "outside_altitude_window", len(traj))
    if inside.all():
        return traj
    edges = np.diff(np.r_[0, inside.astype(np.int8), 0])
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    best = int(np.argmax(ends - starts))
    return _sub(traj, int(starts[best]), int(ends[best]))


def rate_check(traj: Trajectory, cfg: PipelineConfig = DEFAULT_PIPELINE) -> Trajectory | Rejection:
    d = np.diff(traj.alt)
    if d.size:
        if np.any(np.abs(d) > 2 * cfg.max_climb_fps):
            return Rejection(traj.traj_id, "rate_check", "discontinuity", len(traj))
        if np.any(d > cfg.max_climb_fps):
            return Rejection(traj.traj_id, "rate_check", "climb_rate", len(traj))
        if np.any(d < -cfg.max_descent_fps):
            return Rejection(traj.traj_id, "rate_check", "descent_rate", len(traj))
    return traj


def classify(traj, cfg: PipelineConfig = DEFAULT_PIPELINE) -> tuple[Trend, Containment]:
    alt = traj.alt if hasattr(traj, "alt") else np.asarray(traj, dtype=float)
    net = float(alt[-1] - alt[0])
    if net > cfg.trend_threshold_ft:
        trend = Trend.CLIMBING
    elif net < -cfg.trend_threshold_ft:
        trend = Trend.DESCENDING
    else:
        trend = Trend.LEVEL
    ends_in = geo.in_vulnerable_band(float(alt[0])) + geo.in_vulnerable_band(float(alt[-1]))
    containment = (Containment.OUTSIDE, Containment.PARTLY, Containment.FULLY)[ends_in]
    return trend, containment


def clean(raw: RawTrajectory, cfg: PipelineConfig = DEFAULT_PIPELINE) -> Trajectory | Rejection:
    """Run the full cleaning pipeline on one raw segment."""
    filled = fill_altitudes(raw, cfg)
    if isinstance(filled, Rejection):
        return filled
    traj = resample(filled)
    for stage in (threshold_altitude, rate_check):
        traj = stage(traj, cfg)
        if isinstance(traj, Rejection):
            return traj
    if len(traj) < cfg.min_steps:
        return Rejection(traj.traj_id, "length", "too_short", len(traj))
    traj.trend, traj.containment = classify(traj, cfg)
    return traj


def to_raw(traj: Trajectory) -> RawTrajectory:
    icao, _, seg = traj.traj_id.partition("-")
    return RawTrajectory(icao, int(seg or 0), traj.t0 + np.arange(len(traj), dtype=float),
                         traj.x.copy(), traj.y.copy(), traj.alt.copy())


def invariant_violations(traj: Trajectory, cfg: PipelineConfig = DEFAULT_PIPELINE) -> list[str]:
    """Post-conditions every cleaned trajectory must satisfy (empty when valid)."""
    out = []
    if len(traj) == 0:
        return ["empty"]
    if not (len(traj.x) == len(traj.y) == len(traj.alt)):
        out.append("ragged arrays")
    if np.isnan(traj.alt).any():
        out.append("missing altitude")
    if traj.alt.min() < cfg.alt_floor_ft or traj.alt.max() > cfg.alt_ceiling_ft:
        out.append("altitude outside window")
    d = np.diff(traj.alt)
    if d.size and (d.max() > cfg.max_climb_fps or d.min() < -cfg.max_descent_fps):
        out.append("rate limit exceeded")
    if (traj.trend, traj.containment) != classify(traj, cfg):
        out.append("stale classification")
    return out


# ----------------------------------------------------------------------- io


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    lines = ["step,x_ft,y_ft,alt_ft"]
    for i in range(len(traj)):
        lines.append(f"{i},{traj.x[i]:.3f},{traj.y[i]:.3f},{traj.alt[i]:.3f}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path, traj_id: str | None = None,
                        cfg: PipelineConfig = DEFAULT_PIPELINE) -> Trajectory:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    traj = Trajectory(traj_id or path.stem, data[:, 1].copy(), data[:, 2].copy(), data[:, 3].copy())
    traj.trend, traj.containment = classify(traj, cfg)
    return traj


def manifest_entry(item: Trajectory | Rejection, source: str = "", duplicates: int = 0) -> dict:
    if isinstance(item, Rejection):
        return {"id": item.traj_id, "icao24": item.traj_id.split("-")[0], "source": source,
                "length": item.length, "rejected": True, "stage": item.stage, "reason": item.reason,
                "duplicates": duplicates, "trend": None, "containment": None}
    return {"id": item.traj_id, "icao24": item.icao24, "source": source, "length": len(item),
            "rejected": False, "stage": None, "reason": None, "duplicates": duplicates,
            "trend": item.trend.value, "containment": item.containment.value}


def write_manifest(entries: list[dict], path: str | Path) -> None:
    text = "".join(json.dumps(e, sort_keys=True) + "\n" for e in entries)
    Path(path).write_text(text)


def read_manifest(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
