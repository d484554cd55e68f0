"""Synthetic ownship trajectories for fixtures, demos and property checks."""
from __future__ import annotations

import math

import numpy as np

from .geometry import KT_TO_FPS
from .trajectory import Trajectory, classify


def make_trajectory(traj_id: str, x, y, alt) -> Trajectory:
    traj = Trajectory(traj_id, np.asarray(x, float), np.asarray(y, float), np.asarray(alt, float))
    traj.trend, traj.containment = classify(traj)
    return traj


def straight(
    traj_id: str,
    start_alt: float,
    end_alt: float,
    n: int = 200,
    speed_kt: float = 250.0,
    heading_deg: float = 0.0,
    end: tuple[float, float] = (0.0, 0.0),
    level_frac: float = 0.0,
) -> Trajectory:
    """Straight ground track ending at ``end``; altitude changes linearly.

    ``level_frac`` holds the start altitude for that leading fraction of the
    run before the climb or descent begins.
    """
    v = speed_kt * KT_TO_FPS
    hd = math.radians(heading_deg)
    back = (n - 1 - np.arange(n)) * v
    x = end[0] - back * math.sin(hd)
    y = end[1] - back * math.cos(hd)
    i0 = int(level_frac * (n - 1))
    alt = np.full(n, float(start_alt))
    if n - 1 > i0:
        alt[i0:] = np.linspace(start_alt, end_alt, n - i0)
    return make_trajectory(traj_id, x, y, alt)


def head_on_descent(traj_id, start_alt=10000.0, end_alt=4000.0, n=200, **kw) -> Trajectory:
    return straight(traj_id, start_alt, end_alt, n, **kw)


def climb_out(traj_id, start_alt=4000.0, end_alt=11000.0, n=200, **kw) -> Trajectory:
    return straight(traj_id, start_alt, end_alt, n, **kw)


def overflight(traj_id, alt=8000.0, n=200, **kw) -> Trajectory:
    return straight(traj_id, alt, alt, n, **kw)


def shape_family(seed: int, count: int, alt_lo: float, alt_hi: float, prefix: str = "s") -> list[Trajectory]:
    """A reproducible mix of descents, climbs and level flights.

    Altitudes are drawn inside [alt_lo, alt_hi]; shifting both bounds moves
    every shape rigidly, so two calls with the same seed and a shifted
    window give paired corpora.
    """
    rng = np.random.default_rng(seed)
    out = []
    span = alt_hi - alt_lo
    for j in range(count):
        kind = ("descending", "climbing", "level")[j % 3]
        n = int(rng.integers(120, 200))
        speed = float(rng.uniform(180, 300))
        heading = float(rng.uniform(0, 360))
        change = float(rng.uniform(0.25, 0.9)) * span
        change = min(change, 0.9 * 75.0 * (n - 1), 0.9 * 83.0 * (n - 1))
        lo = alt_lo + float(rng.uniform(0, span - change))
        if kind == "descending":
            a0, a1 = lo + change, lo
        elif kind == "climbing":
            a0, a1 = lo, lo + change
        else:
            a0 = a1 = alt_lo + float(rng.uniform(0, span))
        out.append(straight(f"{prefix}{j:03d}", a0, a1, n, speed, heading))
    return out


def shift(traj: Trajectory, dz: float, traj_id: str | None = None) -> Trajectory:
    return make_trajectory(traj_id or traj.traj_id, traj.x.copy(), traj.y.copy(), traj.alt + dz)
