"""Encounter geometry and tau arithmetic.

Internal units are feet and feet per second. Functions that mirror the
collision-avoidance formulas (range tau, the surveillance predicates) take
nautical miles and knots because that is how those thresholds are stated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

FT_PER_NM = 6076.12
FT_PER_M = 1.0 / 0.3048
KT_TO_FPS = FT_PER_NM / 3600.0
SPEED_OF_LIGHT_MPS = 299_792_458.0

# Mode S transponder turnaround, removed from measured round-trip times.
MODE_S_PROCESSING_DELAY_S = 128e-6

# Float slack for threshold comparisons; the published boundaries
# (4560 ft, 3.1 NM) are otherwise lost to rounding.
_EPS = 1e-9


class GeometryError(ValueError):
    """Raised for inputs that describe an impossible geometry."""


@dataclass(frozen=True)
class Constants:
    smod_nm: float = 3.0
    vertical_offset_ft: float = 4500.0
    tau_window_s: float = 60.0
    rdot_floor_kt: float = -6.0
    sdot_floor_fps: float = -1.0
    active_alt_gate_ft: float = 10000.0
    cas_min_alt_ft: float = 2350.0
    band_floor_ft: float = 2350.0
    band_ceiling_ft: float = 13306.0
    processing_delay_s: float = MODE_S_PROCESSING_DELAY_S


CONSTANTS = Constants()


@dataclass(frozen=True, slots=True)
class RangeState:
    """Slant range (NM) and its rate (kt, negative when closing)."""

    r: float
    rdot: float

    def __post_init__(self):
        if self.r < 0:
            raise GeometryError(f"slant range must be >= 0, got {self.r}")
        if not math.isfinite(self.rdot):
            raise GeometryError("range rate must be finite")


@dataclass(frozen=True, slots=True)
class VerticalState:
    """Altitude separation (ft) and its rate (ft/s, negative when converging)."""

    s: float
    sdot: float

    def __post_init__(self):
        if not math.isfinite(self.sdot):
            raise GeometryError("separation rate must be finite")


@dataclass(frozen=True)
class EncounterGeometry:
    slant_r: float
    horiz_h: float
    vert_s: float
    rtt: float

    @classmethod
    def from_slant(cls, slant_r: float, vert_s: float) -> "EncounterGeometry":
        return cls(
            slant_r=slant_r,
            horiz_h=decompose_slant(slant_r, vert_s),
            vert_s=vert_s,
            rtt=rtt_from_slant(slant_r),
        )


def range_tau(state: RangeState, const: Constants = CONSTANTS) -> float:
    """Modified range tau in seconds.

    Negative inside the SMOD radius, where the intruder is treated as
    already at closest approach.
    """
    if state.r == 0:
        raise GeometryError("range tau undefined at zero range")
    return tau_s(state.r, state.rdot, const)


def vertical_tau_met(state: VerticalState, const: Constants = CONSTANTS) -> bool:
    return vertical_met(state.s, state.sdot, const)


def horizontal_tau_met(state: RangeState, const: Constants = CONSTANTS) -> bool:
    return horizontal_met(state.r, state.rdot, const)


def active_surveillance(
    vert: VerticalState,
    rng: RangeState,
    airborne: bool = True,
    const: Constants = CONSTANTS,
) -> bool:
    """True when the ownship would actively interrogate this intruder."""
    return surveillance_met(vert.s, vert.sdot, rng.r, rng.rdot, airborne, const)


# Scalar forms of the above, without the value-type wrappers. The engine
# calls these once per simulated step.


def tau_s(r_nm: float, rdot_kt: float, const: Constants = CONSTANTS) -> float:
    return 3600.0 * -(r_nm - const.smod_nm**2 / r_nm) / min(const.rdot_floor_kt, rdot_kt)


def vertical_met(s_ft: float, sdot_fps: float, const: Constants = CONSTANTS) -> bool:
    value = -(s_ft - const.vertical_offset_ft) / min(const.sdot_floor_fps, sdot_fps)
    return value <= const.tau_window_s + _EPS


def horizontal_met(r_nm: float, rdot_kt: float, const: Constants = CONSTANTS) -> bool:
    # rdot floor read as knots; the window is converted to hours to match
    value = -(r_nm - const.smod_nm) / min(const.rdot_floor_kt, rdot_kt)
    return value <= const.tau_window_s / 3600.0 + _EPS


def surveillance_met(s_ft, sdot_fps, r_nm, rdot_kt, airborne=True, const: Constants = CONSTANTS) -> bool:
    return (
        airborne
        and abs(s_ft) < const.active_alt_gate_ft
        and vertical_met(s_ft, sdot_fps, const)
        and horizontal_met(r_nm, rdot_kt, const)
    )


def slant_from_rtt(rtt: float) -> float:
    """Slant range in feet for a round-trip time with processing delay removed."""
    if rtt < 0:
        raise GeometryError(f"round-trip time must be >= 0, got {rtt}")
    return SPEED_OF_LIGHT_MPS * rtt / 2.0 * FT_PER_M


def rtt_from_slant(r: float) -> float:
    if r < 0:
        raise GeometryError(f"slant range must be >= 0, got {r}")
    return 2.0 * (r / FT_PER_M) / SPEED_OF_LIGHT_MPS


def slant_from_measured_rtt(measured: float, processing_delay: float = MODE_S_PROCESSING_DELAY_S) -> float:
    """Slant range from a raw interrogation-to-reply time."""
    return slant_from_rtt(measured - processing_delay)


def decompose_slant(r: float, s: float) -> float:
    """Horizontal leg of the slant triangle with hypotenuse ``r`` and height ``s``."""
    s = abs(s)
    if r < 0:
        raise GeometryError(f"slant range must be >= 0, got {r}")
    if s > r:
        raise GeometryError(f"altitude difference {s} ft exceeds slant range {r} ft")
    return math.sqrt(r * r - s * s)


def in_vulnerable_band(alt: float, const: Constants = CONSTANTS) -> bool:
    return const.band_floor_ft <= alt <= const.band_ceiling_ft


def bearing_deg(dx: float, dy: float) -> float:
    """Compass bearing of the vector (dx east, dy north), in [0, 360)."""
    return math.degrees(math.atan2(dx, dy)) % 360.0


def nm(ft: float) -> float:
    return ft / FT_PER_NM


def ft(nm_: float) -> float:
    return nm_ * FT_PER_NM
