"""Run handler: one attacked pass over one trajectory.

Each 1 Hz step asks the attacker for a reply, feeds the resulting track to
the CAS, and flies the ownship to the next step, following any RA.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import cas_core
from .attacker import (
    AttackerSite,
    AttackStrategy,
    crossing_step,
    respond_at,
    site_for,
)
from .cas_core import (
    DEFAULT_CAS_CONFIG,
    Advisory,
    AdvisoryKind,
    CasConfig,
    CasState,
    IntruderTrack,
    OwnshipState,
    TrackSample,
)
from .geometry import FT_PER_NM, KT_TO_FPS
from .trajectory import Trajectory, Trend

COST_WEIGHTS = {"t_PA": 1, "t_TA": 2, "t_RA": 5, "l_RA": 5, "t_VR": 10}


class ReturnBehavior(enum.Enum):
    HOLD_NEW_LEVEL = "hold_new_level"
    RESUME_ORIGINAL_RATE = "resume_original_rate"


@dataclass(frozen=True)
class ResponseModel:
    ra_follow_vrate: float = 25.0
    response_delay: int = 0
    # None: hold the new level for level trajectories, resume otherwise
    return_behavior: ReturnBehavior | None = None

    def __post_init__(self):
        if self.ra_follow_vrate <= 0:
            raise ValueError("ra_follow_vrate must be positive")
        if self.response_delay < 0:
            raise ValueError("response_delay must be >= 0")

    def behavior_for(self, trend: Trend) -> ReturnBehavior:
        if self.return_behavior is not None:
            return self.return_behavior
        if trend is Trend.LEVEL:
            return ReturnBehavior.HOLD_NEW_LEVEL
        return ReturnBehavior.RESUME_ORIGINAL_RATE


DEFAULT_RESPONSE = ResponseModel()


@dataclass
class RunMetrics:
    t_PA: int = 0
    t_TA: int = 0
    t_RA: int = 0
    l_RA: int = 0
    t_VR: int = 0
    max_abs_deviation: float = 0.0
    greatest_signed_deviation: float = 0.0
    ra_episodes: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class AttackedTrajectory:
    original: np.ndarray
    alt: np.ndarray
    advisories: list[Advisory] = field(default_factory=list)

    @property
    def deviation(self) -> np.ndarray:
        return self.alt - self.original

    def timeline(self) -> list[list]:
        """Run-length encoded advisory labels: [[label, count], ...]."""
        out: list[list] = []
        for adv in self.advisories:
            label = adv.label
            if out and out[-1][0] == label:
                out[-1][1] += 1
            else:
                out.append([label, 1])
        return out


def cost(m: RunMetrics) -> int:
    return (
        COST_WEIGHTS["t_PA"] * m.t_PA
        + COST_WEIGHTS["t_TA"] * m.t_TA
        + COST_WEIGHTS["t_RA"] * m.t_RA
        + COST_WEIGHTS["l_RA"] * m.l_RA
        + COST_WEIGHTS["t_VR"] * m.t_VR
    )


def deviation_stats(attacked: AttackedTrajectory) -> tuple[float, float]:
    """(max |deviation|, signed deviation of largest magnitude)."""
    dev = attacked.deviation
    if dev.size == 0:
        return 0.0, 0.0
    i = int(np.argmax(np.abs(dev)))
    return float(abs(dev[i])), float(dev[i])


def _reach_mask(traj: Trajectory, site: AttackerSite, extra_rate: float) -> np.ndarray:
    """Steps at which a reply is geometrically possible at all.

    The attacker answers only inside the horizontal tau window, i.e. slant
    below SMOD plus one minute of closure. Slant is at least the horizontal
    distance and closure at most the ownship speed, so steps failing this
    bound can be skipped without changing the result.
    """
    h = np.hypot(traj.x - site.x, traj.y - site.y)
    if len(traj) > 1:
        vh = np.hypot(np.gradient(traj.x), np.gradient(traj.y))
        vz = float(np.max(np.abs(np.diff(traj.alt)))) + extra_rate
    else:
        vh, vz = np.zeros(1), extra_rate
    speed_kt = np.maximum(np.hypot(vh, vz) / KT_TO_FPS, 6.0)
    limit_ft = (3.0 + speed_kt / 60.0) * FT_PER_NM
    return h <= limit_ft + 1.0


def reachable(
    traj: Trajectory,
    site: AttackerSite,
    response: ResponseModel = DEFAULT_RESPONSE,
    cas_cfg: CasConfig = DEFAULT_CAS_CONFIG,
) -> bool:
    """False when no strategy can get a single reply from ``site`` to ``traj``."""
    return bool(_reach_mask(traj, site, max(response.ra_follow_vrate, cas_cfg.ra_vrate_fps)).any())


def run(
    traj: Trajectory,
    strategy: AttackStrategy,
    response: ResponseModel = DEFAULT_RESPONSE,
    cas_cfg: CasConfig = DEFAULT_CAS_CONFIG,
    site: AttackerSite | None = None,
) -> tuple[RunMetrics, AttackedTrajectory]:
    """Simulate one attack. Deterministic in its arguments.

    ``site`` overrides the strategy's mid/end selector (heatmap runs).
    """
    n = len(traj)
    if site is None:
        site = site_for(traj, strategy.site)
    planned = np.asarray(traj.alt, dtype=float)
    xs = traj.x.tolist()
    ys = traj.y.tolist()
    alts = planned.tolist()
    if n > 1:
        vxs = np.gradient(traj.x).tolist()
        vys = np.gradient(traj.y).tolist()
        planned_rate = np.r_[np.diff(planned), planned[-1] - planned[-2]].tolist()
    else:
        vxs = vys = planned_rate = [0.0]

    reach = _reach_mask(traj, site, max(response.ra_follow_vrate, cas_cfg.ra_vrate_fps)).tolist()
    behavior = response.behavior_for(traj.trend)
    k = crossing_step(strategy.crossing_point, n)
    inj_base = alts[k]
    inj_rate = strategy.vrate
    delay = response.response_delay
    follow = response.ra_follow_vrate
    vr_threshold = cas_cfg.ra_vrate_fps * (1 - 1e-9)

    state = CasState()
    track: IntruderTrack | None = None
    m = RunMetrics()
    advisories: list[Advisory] = []
    actual = np.empty(n)
    alt = alts[0]
    prev_rate = planned_rate[0]
    had_ra = False
    ra_run = 0
    no_adv = cas_core.NO_ADVISORY

    for i in range(n):
        actual[i] = alt
        own = OwnshipState(alt, prev_rate, xs[i], ys[i], vxs[i], vys[i])
        reply = None
        if reach[i]:
            reply = respond_at(site, own, inj_base + inj_rate * (i - k), inj_rate)
        if reply is not None and reply.responded:
            if track is None:
                track = IntruderTrack("attacker")
            track.add(TrackSample(i, reply.slant_r, reply.bearing, reply.reported_alt))
            state, adv = cas_core.step(state, own, [track], cas_cfg)
        else:
            # the track is dropped once replies stop
            track = None
            if state.ra_latched is None:
                state.advisory = adv = no_adv
            else:
                state, adv = cas_core.step(state, own, [], cas_cfg)
        advisories.append(adv)

        if adv.proximate:
            m.t_PA += 1
        kind = adv.kind
        if kind is AdvisoryKind.TA:
            m.t_TA += 1
        if kind is AdvisoryKind.RA:
            m.t_RA += 1
            if ra_run == 0:
                m.ra_episodes += 1
            ra_run += 1
            if ra_run > m.l_RA:
                m.l_RA = ra_run
            had_ra = True
        else:
            ra_run = 0

        if had_ra and behavior is ReturnBehavior.HOLD_NEW_LEVEL and not _ra_active(advisories, i, delay):
            intended = 0.0
        else:
            intended = planned_rate[i]
        commanded = advisories[i - delay] if i >= delay else no_adv
        if commanded.kind is AdvisoryKind.RA:
            rate = math.copysign(follow, commanded.target_vrate) if commanded.target_vrate else 0.0
        else:
            rate = intended
        # the final sample has no following interval to fly
        if (
            kind is AdvisoryKind.RA
            and i < n - 1
            and adv.target_vrate != 0
            and abs(adv.target_vrate - intended) >= vr_threshold
        ):
            m.t_VR += 1
        alt = alt + rate
        prev_rate = rate

    attacked = AttackedTrajectory(planned.copy(), actual, advisories)
    m.max_abs_deviation, m.greatest_signed_deviation = deviation_stats(attacked)
    return m, attacked


def _ra_active(advisories: list[Advisory], i: int, delay: int) -> bool:
    j = i - delay
    return j >= 0 and advisories[j].kind is AdvisoryKind.RA


def evaluate(traj, strategy, response=DEFAULT_RESPONSE, cas_cfg=DEFAULT_CAS_CONFIG, site=None) -> float:
    m, _ = run(traj, strategy, response, cas_cfg, site)
    return cost(m)


def run_to_dict(traj_id: str, strategy: AttackStrategy, m: RunMetrics, attacked: AttackedTrajectory) -> dict:
    return {
        "id": traj_id,
        "strategy": strategy.to_dict(),
        "metrics": m.to_dict(),
        "cost": cost(m),
        "deviation": {"max_abs": m.max_abs_deviation, "greatest_signed": m.greatest_signed_deviation},
        "timeline": attacked.timeline(),
    }
