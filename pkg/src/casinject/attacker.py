"""Static ground attacker answering ownship interrogations on arrival.

The attacker cannot shape the round-trip time, so the slant range the CAS
measures is always the true attacker-to-ownship slant. Only the reported
altitude is free; it follows a straight line in time that meets the
target's planned altitude at the crossing step.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import geometry as geo
from .cas_core import OwnshipState
from .geometry import FT_PER_NM, KT_TO_FPS

VRATE_LIMIT_FPS = 84.0


class SiteSelector(enum.Enum):
    MID = "mid"
    END = "end"


@dataclass(frozen=True, slots=True)
class AttackerSite:
    x: float
    y: float
    selector: SiteSelector | None = None  # None for an arbitrary (grid) site


@dataclass(frozen=True, slots=True)
class AttackStrategy:
    crossing_point: float
    vrate: float
    site: SiteSelector = SiteSelector.MID

    def __post_init__(self):
        if not 0.0 <= self.crossing_point <= 1.0:
            raise ValueError(f"crossing_point {self.crossing_point} outside [0, 1]")
        if not -VRATE_LIMIT_FPS <= self.vrate <= VRATE_LIMIT_FPS:
            raise ValueError(f"vrate {self.vrate} outside [-84, 84] ft/s")

    def to_dict(self) -> dict:
        return {"crossing_point": self.crossing_point, "vrate": self.vrate, "site": self.site.value}

    @classmethod
    def from_dict(cls, d: dict) -> "AttackStrategy":
        return cls(float(d["crossing_point"]), float(d["vrate"]), SiteSelector(d["site"]))


@dataclass(frozen=True, slots=True)
class InjectedState:
    responded: bool
    reported_alt: float = math.nan
    slant_r: float = math.nan
    bearing: float = math.nan
    clamped: bool = False


NO_RESPONSE = InjectedState(False)


def site_index(n: int, selector: SiteSelector) -> int:
    if n <= 0:
        raise ValueError("trajectory is empty")
    return n // 2 if selector is SiteSelector.MID else n - 1


def site_for(traj, selector: SiteSelector) -> AttackerSite:
    """Ground point under the middle or final trajectory coordinate."""
    i = site_index(len(traj), selector)
    return AttackerSite(float(traj.x[i]), float(traj.y[i]), selector)


def crossing_step(crossing_point: float, n: int) -> int:
    # round half up; Python's round() is banker's rounding
    return int(math.floor(crossing_point * (n - 1) + 0.5))


def injected_altitude(strategy: AttackStrategy, traj, step: int) -> float:
    k = crossing_step(strategy.crossing_point, len(traj))
    return float(traj.alt[k]) + strategy.vrate * (step - k)


def respond_at(
    site: AttackerSite,
    own: OwnshipState,
    reported_alt: float,
    injected_vrate: float,
) -> InjectedState:
    """Attacker reply for an ownship state and an intended reported altitude."""
    dx = own.x - site.x
    dy = own.y - site.y
    dz = own.alt
    slant = math.sqrt(dx * dx + dy * dy + dz * dz)
    rdot = (dx * own.vx + dy * own.vy + dz * own.vrate) / slant if slant > 0 else 0.0
    delta = own.alt - reported_alt
    rel = own.vrate - injected_vrate
    sdot = math.copysign(rel, delta) if delta != 0 else abs(rel)
    if not geo.surveillance_met(abs(delta), sdot, slant / FT_PER_NM, rdot / KT_TO_FPS, own.airborne):
        return NO_RESPONSE
    clamped = False
    if abs(delta) > slant:
        # a CAS would reject an altitude claim the slant range cannot hold
        reported_alt = own.alt - math.copysign(slant, delta)
        clamped = True
    bearing = geo.bearing_deg(site.x - own.x, site.y - own.y)
    return InjectedState(True, reported_alt, slant, bearing, clamped)


def respond(site: AttackerSite, own: OwnshipState, strategy: AttackStrategy, step: int, traj) -> InjectedState:
    return respond_at(site, own, injected_altitude(strategy, traj, step), strategy.vrate)
