"""Tau-threshold collision-avoidance logic.

A sensitivity-level threat machine in the style of TCAS II. It takes the
ownship state plus intruder tracks (slant range, bearing, reported altitude)
once per second and produces the most severe advisory, with RA hysteresis.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import geometry as geo
from .geometry import FT_PER_NM, KT_TO_FPS


class AdvisoryKind(enum.IntEnum):
    NONE = 0
    TA = 1
    RA = 2


class Sense(enum.Enum):
    CLIMB = "climb"
    DESCEND = "descend"
    LEVEL_OFF = "level_off"


class Phase(enum.Enum):
    PASSIVE = "passive"
    ACTIVE = "active"


@dataclass(frozen=True)
class SensitivityLevel:
    level: int
    ta_tau: float
    ra_tau: float | None  # None: TA-only level
    alt_floor: float
    alt_ceiling: float

    def __post_init__(self):
        if self.ra_tau is not None and not self.ra_tau < self.ta_tau:
            raise ValueError(f"SL{self.level}: ra_tau must be below ta_tau")
        if self.alt_floor >= self.alt_ceiling:
            raise ValueError(f"SL{self.level}: empty altitude band")


DEFAULT_SENSITIVITY_TABLE: tuple[SensitivityLevel, ...] = (
    SensitivityLevel(2, 20.0, None, 0.0, 2350.0),
    SensitivityLevel(3, 25.0, 15.0, 2350.0, 5000.0),
    SensitivityLevel(4, 30.0, 20.0, 5000.0, 10000.0),
    SensitivityLevel(5, 40.0, 25.0, 10000.0, 20000.0),
    SensitivityLevel(6, 45.0, 30.0, 20000.0, 42000.0),
    SensitivityLevel(7, 48.0, 35.0, 42000.0, math.inf),
)


@dataclass(frozen=True)
class CasConfig:
    table: tuple[SensitivityLevel, ...] = DEFAULT_SENSITIVITY_TABLE
    ra_vertical_ft: float = 600.0
    ta_vertical_ft: float = 850.0
    proximate_range_nm: float = 6.0
    proximate_alt_ft: float = 1200.0
    ra_hold_steps: int = 5
    ra_clear_steps: int = 3
    ra_vrate_fps: float = 25.0
    sense_horizon_min_s: float = 10.0

    def __post_init__(self):
        table = tuple(sorted(self.table, key=lambda sl: sl.alt_floor))
        if not table:
            raise ValueError("sensitivity table is empty")
        if table[0].alt_floor > 0:
            raise ValueError("sensitivity table must start at 0 ft")
        for lo, hi in zip(table, table[1:]):
            if lo.alt_ceiling != hi.alt_floor:
                raise ValueError(f"SL{lo.level} and SL{hi.level} bands do not abut")
        object.__setattr__(self, "table", table)


DEFAULT_CAS_CONFIG = CasConfig()


def load_cas_config(source: str | Path | dict) -> CasConfig:
    """Build a CasConfig from a JSON file or an already-parsed mapping.

    Recognised keys are the CasConfig field names; ``table`` is a list of
    objects with ``level, ta_tau, ra_tau, alt_floor, alt_ceiling`` (use
    ``null`` for a TA-only ``ra_tau`` and for an open ``alt_ceiling``).
    """
    if isinstance(source, dict):
        data = dict(source)
    else:
        data = json.loads(Path(source).read_text())
    known = {f.name for f in fields(CasConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown CAS config keys: {sorted(unknown)}")
    if "table" in data:
        rows = []
        for row in data["table"]:
            row = dict(row)
            if row.get("alt_ceiling") is None:
                row["alt_ceiling"] = math.inf
            rows.append(SensitivityLevel(**row))
        data["table"] = tuple(rows)
    return CasConfig(**data)


def cas_config_to_dict(cfg: CasConfig) -> dict:
    out = {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "table"}
    out["table"] = [
        {
            "level": sl.level,
            "ta_tau": sl.ta_tau,
            "ra_tau": sl.ra_tau,
            "alt_floor": sl.alt_floor,
            "alt_ceiling": None if math.isinf(sl.alt_ceiling) else sl.alt_ceiling,
        }
        for sl in cfg.table
    ]
    return out


@dataclass(slots=True)
class OwnshipState:
    """Ownship kinematics at one step. Positions in local ft, rates in ft/s."""

    alt: float
    vrate: float = 0.0
    x: float = 0.0
    y: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    airborne: bool = True


@dataclass(frozen=True, slots=True)
class TrackSample:
    timestamp: int
    slant_r: float  # ft
    bearing: float  # deg
    reported_alt: float  # ft


class IntruderTrack:
    """History of surveillance replies from one intruder."""

    __slots__ = ("track_id", "samples")

    def __init__(self, track_id: str = "intruder", samples=()):
        self.track_id = track_id
        self.samples: list[TrackSample] = []
        for s in samples:
            self.add(s)

    def add(self, sample: TrackSample) -> None:
        if self.samples and sample.timestamp <= self.samples[-1].timestamp:
            raise ValueError("track timestamps must be strictly increasing")
        self.samples.append(sample)

    def __len__(self):
        return len(self.samples)

    @property
    def latest(self) -> TrackSample:
        return self.samples[-1]

    @property
    def rdot_kt(self) -> float:
        if len(self.samples) < 2:
            return 0.0
        a, b = self.samples[-2], self.samples[-1]
        return (b.slant_r - a.slant_r) / (b.timestamp - a.timestamp) / KT_TO_FPS

    @property
    def vrate_fps(self) -> float:
        if len(self.samples) < 2:
            return 0.0
        a, b = self.samples[-2], self.samples[-1]
        return (b.reported_alt - a.reported_alt) / (b.timestamp - a.timestamp)


@dataclass(frozen=True, slots=True)
class Advisory:
    kind: AdvisoryKind = AdvisoryKind.NONE
    sense: Sense | None = None
    target_vrate: float | None = None
    proximate: bool = False

    def __post_init__(self):
        if self.kind is not AdvisoryKind.RA and (self.sense is not None or self.target_vrate is not None):
            raise ValueError("only an RA carries a sense and target rate")
        if self.kind is AdvisoryKind.RA and (self.sense is None or self.target_vrate is None):
            raise ValueError("an RA needs a sense and target rate")
        if self.sense is Sense.LEVEL_OFF and self.target_vrate != 0:
            raise ValueError("level-off RA must target 0 ft/s")

    @property
    def label(self) -> str:
        if self.kind is AdvisoryKind.RA:
            return f"RA:{self.sense.value}"
        return self.kind.name if self.kind is AdvisoryKind.TA else "none"


NO_ADVISORY = Advisory()
_PROXIMATE_ONLY = Advisory(proximate=True)


@dataclass
class CasState:
    """Per-run mutable CAS state. ``step`` updates it in place."""

    advisory: Advisory = NO_ADVISORY
    phases: dict[str, Phase] = field(default_factory=dict)
    ra_latched: Advisory | None = None
    ra_held: int = 0
    ra_clear_count: int = 0


def sensitivity_for(own_alt: float, cfg: CasConfig = DEFAULT_CAS_CONFIG) -> SensitivityLevel:
    if own_alt < 0:
        own_alt = 0.0
    for sl in cfg.table:
        if sl.alt_floor <= own_alt < sl.alt_ceiling:
            return sl
    return cfg.table[-1]


def _kinematics(own: OwnshipState, track: IntruderTrack) -> tuple[float, float, float, float]:
    """(|dalt| ft, d|dalt|/dt ft/s, slant NM, range rate kt) for a track."""
    samples = track.samples
    b = samples[-1]
    if len(samples) > 1:
        a = samples[-2]
        dt = b.timestamp - a.timestamp
        rdot = (b.slant_r - a.slant_r) / dt / KT_TO_FPS
        intr_rate = (b.reported_alt - a.reported_alt) / dt
    else:
        rdot = intr_rate = 0.0
    delta = own.alt - b.reported_alt
    rel = own.vrate - intr_rate
    # at co-altitude any relative motion opens the gap
    sdot = math.copysign(rel, delta) if delta != 0 else abs(rel)
    return abs(delta), sdot, b.slant_r / FT_PER_NM, rdot


def surveillance_phase(own: OwnshipState, track: IntruderTrack) -> Phase:
    if geo.surveillance_met(*_kinematics(own, track), own.airborne):
        return Phase.ACTIVE
    return Phase.PASSIVE


def track_tau(track: IntruderTrack) -> float:
    r = track.latest.slant_r / FT_PER_NM
    if r == 0:
        return -math.inf
    return geo.tau_s(r, track.rdot_kt)


def min_separation(delta: float, rel_rate: float, horizon: float) -> float:
    """Smallest |delta + rel_rate*t| for t in [0, horizon]."""
    end = delta + rel_rate * horizon
    if delta == 0 or end == 0 or (delta > 0) != (end > 0):
        return 0.0
    return min(abs(delta), abs(end))


def select_sense(
    own: OwnshipState,
    track: IntruderTrack,
    horizon: float,
    cfg: CasConfig = DEFAULT_CAS_CONFIG,
) -> tuple[Sense, float]:
    """Pick the RA sense by projected separation over ``horizon`` seconds.

    Level-off wins when stopping the current vertical rate alone keeps the
    RA separation threshold. Otherwise the better of climb and descend at
    the standard RA rate, compared on minimum then end-of-window
    separation; ties go to climb.
    """
    delta = own.alt - track.latest.reported_alt
    intr_rate = track.vrate_fps
    if min_separation(delta, -intr_rate, horizon) >= cfg.ra_vertical_ft:
        return Sense.LEVEL_OFF, 0.0
    rate = cfg.ra_vrate_fps

    def score(v):
        return (
            min_separation(delta, v - intr_rate, horizon),
            abs(delta + (v - intr_rate) * horizon),
        )

    if score(-rate) > score(rate):
        return Sense.DESCEND, -rate
    return Sense.CLIMB, rate


def assess(
    own: OwnshipState,
    track: IntruderTrack,
    sl: SensitivityLevel,
    cfg: CasConfig = DEFAULT_CAS_CONFIG,
    phase: Phase | None = None,
    tau: float | None = None,
) -> Advisory:
    """Threat level of one track against the given sensitivity level.

    The vertical test projects both aircraft linearly over the alert
    window (ra_tau or ta_tau seconds). Since the CPA lies inside that
    window whenever the range test passes, the window minimum bounds the
    separation at CPA from below, and it keeps the advisory monotone in tau.
    """
    s, sdot, r, rdot = _kinematics(own, track)
    if phase is None:
        phase = Phase.ACTIVE if geo.surveillance_met(s, sdot, r, rdot, own.airborne) else Phase.PASSIVE
    if tau is None:
        tau = geo.tau_s(r, rdot) if r > 0 else -math.inf
    latest = track.latest
    delta = own.alt - latest.reported_alt
    rel = own.vrate - track.vrate_fps
    proximate = r <= cfg.proximate_range_nm and s <= cfg.proximate_alt_ft
    if (
        sl.ra_tau is not None
        and phase is Phase.ACTIVE
        and tau <= sl.ra_tau
        and min_separation(delta, rel, sl.ra_tau) < cfg.ra_vertical_ft
    ):
        horizon = min(max(tau, cfg.sense_horizon_min_s), sl.ra_tau)
        sense, target = select_sense(own, track, horizon, cfg)
        return Advisory(AdvisoryKind.RA, sense, target, proximate)
    if tau <= sl.ta_tau and min_separation(delta, rel, sl.ta_tau) < cfg.ta_vertical_ft:
        return Advisory(AdvisoryKind.TA, proximate=proximate)
    if proximate:
        return _PROXIMATE_ONLY
    return NO_ADVISORY


def step(
    state: CasState,
    own: OwnshipState,
    tracks: list[IntruderTrack],
    cfg: CasConfig = DEFAULT_CAS_CONFIG,
) -> tuple[CasState, Advisory]:
    """Advance the CAS by one 1 Hz cycle."""
    sl = sensitivity_for(own.alt, cfg)
    worst = NO_ADVISORY
    proximate = False
    seen = set()
    for track in tracks:
        if not track.samples:
            continue
        s, sdot, r, rdot = _kinematics(own, track)
        phase = Phase.ACTIVE if geo.surveillance_met(s, sdot, r, rdot, own.airborne) else Phase.PASSIVE
        state.phases[track.track_id] = phase
        seen.add(track.track_id)
        tau = geo.tau_s(r, rdot) if r > 0 else -math.inf
        adv = assess(own, track, sl, cfg, phase, tau)
        proximate = proximate or adv.proximate
        if adv.kind > worst.kind:
            worst = adv
    for tid in list(state.phases):
        if tid not in seen:
            del state.phases[tid]

    if state.ra_latched is not None:
        if worst.kind is AdvisoryKind.RA:
            state.ra_clear_count = 0
        else:
            state.ra_clear_count += 1
        if state.ra_held >= cfg.ra_hold_steps and state.ra_clear_count >= cfg.ra_clear_steps:
            state.ra_latched = None
            state.ra_held = 0
            state.ra_clear_count = 0
        else:
            # sense is frozen for the life of the RA (no reversals)
            worst = replace(state.ra_latched, proximate=proximate)
            state.ra_held += 1
    elif worst.kind is AdvisoryKind.RA:
        state.ra_latched = worst
        state.ra_held = 1
        state.ra_clear_count = 0

    if worst.proximate != proximate:
        worst = replace(worst, proximate=proximate)
    state.advisory = worst
    return state, worst
