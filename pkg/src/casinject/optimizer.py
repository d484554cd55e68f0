"""Attack-strategy search: batch gradient ascent with random restart.

Each phase starts from a random strategy and, per iteration, probes the
cost a small step either side in crossing point and vertical rate plus the
other attacker site. It then moves along the improving directions with a
step that shrinks geometrically. A phase ends when the phase best has not
improved for ``plateau_patience`` iterations or after ``max_iterations``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import engine
from .attacker import VRATE_LIMIT_FPS, AttackerSite, AttackStrategy, SiteSelector
from .cas_core import DEFAULT_CAS_CONFIG, CasConfig
from .engine import DEFAULT_RESPONSE, ResponseModel, RunMetrics

VRATE_SPAN = 2 * VRATE_LIMIT_FPS
SITES = (SiteSelector.MID, SiteSelector.END)
MAX_LATTICE = 250_000


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 20
    restarts: int = 8
    probe_crossing: float = 0.02
    probe_vrate: float = 2.0
    # first move as a fraction of each parameter's range
    initial_step_scale: float = 0.25
    decay_factor: float = 0.85
    plateau_patience: int = 4
    rng_seed: int = 0
    optimize_site: bool = True

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1 or self.plateau_patience < 1:
            raise ValueError("iteration, restart and patience budgets must be >= 1")
        if self.probe_crossing <= 0 or self.probe_vrate <= 0 or self.initial_step_scale <= 0:
            raise ValueError("probe deltas and step scale must be positive")
        if not 0 < self.decay_factor < 1:
            raise ValueError("decay_factor must lie in (0, 1)")


@dataclass
class OptimizationResult:
    best: AttackStrategy
    best_cost: float
    best_metrics: RunMetrics | None = None
    trace: list[tuple[AttackStrategy, float]] = field(default_factory=list)
    restarts_used: int = 0
    evaluations: int = 0

    @property
    def best_so_far(self) -> list[float]:
        return list(itertools.accumulate((c for _, c in self.trace), max))

    def to_dict(self) -> dict:
        return {
            "best": self.best.to_dict(),
            "best_cost": self.best_cost,
            "metrics": self.best_metrics.to_dict() if self.best_metrics else None,
            "restarts_used": self.restarts_used,
            "evaluations": self.evaluations,
            "trace": [[s.crossing_point, s.vrate, s.site.value, c] for s, c in self.trace],
        }


def clamp(strategy: AttackStrategy) -> AttackStrategy:
    return _make(strategy.crossing_point, strategy.vrate, strategy.site)


def _make(c: float, v: float, site: SiteSelector) -> AttackStrategy:
    c = min(1.0, max(0.0, c))
    v = min(VRATE_LIMIT_FPS, max(-VRATE_LIMIT_FPS, v))
    return AttackStrategy(c, v, site)


def _other(site: SiteSelector) -> SiteSelector:
    return SiteSelector.END if site is SiteSelector.MID else SiteSelector.MID


def maximize(
    objective: Callable[[AttackStrategy], float],
    cfg: OptimizerConfig = OptimizerConfig(),
    fixed_site: SiteSelector | None = None,
) -> OptimizationResult:
    """Maximise any strategy objective. Evaluations are memoised."""
    rng = np.random.default_rng(cfg.rng_seed)
    cache: dict[tuple, float] = {}
    trace: list[tuple[AttackStrategy, float]] = []
    search_site = cfg.optimize_site and fixed_site is None

    def f(s: AttackStrategy) -> float:
        key = (round(s.crossing_point, 12), round(s.vrate, 9), s.site)
        if key not in cache:
            cache[key] = float(objective(s))
        return cache[key]

    best_s: AttackStrategy | None = None
    best_c = -math.inf
    phases = 0
    for _ in range(cfg.restarts):
        phases += 1
        site = fixed_site or (SITES[int(rng.integers(2))] if search_site else SiteSelector.MID)
        cur = _make(float(rng.uniform(0, 1)), float(rng.uniform(-VRATE_LIMIT_FPS, VRATE_LIMIT_FPS)), site)
        cur_c = f(cur)
        phase_best = cur_c
        stale = 0
        step_c = cfg.initial_step_scale
        step_v = cfg.initial_step_scale * VRATE_SPAN
        trace.append((cur, cur_c))
        if cur_c > best_c:
            best_s, best_c = cur, cur_c
        for _ in range(cfg.max_iterations - 1):
            c, v = cur.crossing_point, cur.vrate
            probes = {
                "c+": _make(c + cfg.probe_crossing, v, cur.site),
                "c-": _make(c - cfg.probe_crossing, v, cur.site),
                "v+": _make(c, v + cfg.probe_vrate, cur.site),
                "v-": _make(c, v - cfg.probe_vrate, cur.site),
            }
            if search_site:
                probes["site"] = _make(c, v, _other(cur.site))
            pc = {k: f(s) for k, s in probes.items()}
            dc = _direction(pc["c+"], pc["c-"], cur_c)
            dv = _direction(pc["v+"], pc["v-"], cur_c)
            site = cur.site
            if search_site and pc["site"] > cur_c:
                site = _other(cur.site)
            candidates = [(pc[k], probes[k]) for k in probes]
            if dc or dv or site is not cur.site:
                move = _make(c + dc * step_c, v + dv * step_v, site)
                # listed first so it wins ties: lets the search walk along ridges
                candidates.insert(0, (f(move), move))
            nxt_c, nxt = max(candidates, key=lambda t: t[0])
            if nxt_c >= cur_c and nxt != cur:
                cur, cur_c = nxt, nxt_c
            step_c *= cfg.decay_factor
            step_v *= cfg.decay_factor
            trace.append((cur, cur_c))
            if cur_c > best_c:
                best_s, best_c = cur, cur_c
            if cur_c > phase_best:
                phase_best = cur_c
                stale = 0
            else:
                stale += 1
                if stale >= cfg.plateau_patience:
                    break
    return OptimizationResult(best_s, best_c, None, trace, phases, len(cache))


def _direction(plus: float, minus: float, here: float) -> int:
    if plus > here and plus >= minus:
        return 1
    if minus > here:
        return -1
    return 0


def optimize(
    traj,
    cfg: OptimizerConfig = OptimizerConfig(),
    response: ResponseModel = DEFAULT_RESPONSE,
    cas_cfg: CasConfig = DEFAULT_CAS_CONFIG,
    site: AttackerSite | None = None,
) -> OptimizationResult:
    """Best attack found on one trajectory.

    With ``site`` given the attacker sits there and only the crossing point
    and vertical rate are searched.
    """

    def objective(s: AttackStrategy) -> float:
        return engine.evaluate(traj, s, response, cas_cfg, site)

    res = maximize(objective, cfg, fixed_site=SiteSelector.MID if site is not None else None)
    m, _ = engine.run(traj, res.best, response, cas_cfg, site)
    res.best_metrics = m
    return res


def lattice(resolution: tuple[int, int] = (51, 85), sites=SITES, cap: int = MAX_LATTICE) -> list[AttackStrategy]:
    nc, nv = resolution
    size = nc * nv * len(sites)
    if size > cap:
        raise ValueError(f"lattice of {size} points exceeds cap {cap}")
    cs = np.linspace(0.0, 1.0, nc) if nc > 1 else np.array([0.5])
    vs = np.linspace(-VRATE_LIMIT_FPS, VRATE_LIMIT_FPS, nv) if nv > 1 else np.array([0.0])
    return [AttackStrategy(float(c), float(v), s) for s in sites for c in cs for v in vs]


def grid_oracle(
    traj,
    resolution: tuple[int, int] = (51, 85),
    response: ResponseModel = DEFAULT_RESPONSE,
    cas_cfg: CasConfig = DEFAULT_CAS_CONFIG,
    sites=SITES,
    cap: int = MAX_LATTICE,
    points: list[AttackStrategy] | None = None,
    keep_map: bool = False,
):
    """Exhaustive maximum of the cost over a strategy lattice.

    Returns (best strategy, best cost) or, with ``keep_map``, also the list
    of (strategy, cost) for every lattice point.
    """
    pts = points if points is not None else lattice(resolution, sites, cap)
    if len(pts) > cap:
        raise ValueError(f"lattice of {len(pts)} points exceeds cap {cap}")
    best_s, best_c = None, -math.inf
    cmap = []
    for s in pts:
        c = engine.evaluate(traj, s, response, cas_cfg)
        if keep_map:
            cmap.append((s, c))
        if c > best_c:
            best_s, best_c = s, c
    if keep_map:
        return best_s, best_c, cmap
    return best_s, best_c


def write_cost_map(cmap, path) -> None:
    lines = ["crossing,vrate,site,cost"]
    lines += [f"{s.crossing_point:.6f},{s.vrate:.6f},{s.site.value},{c:g}" for s, c in cmap]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
