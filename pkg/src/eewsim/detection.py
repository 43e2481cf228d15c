"""Two-step earthquake detection simulation.

Step one draws per-phone triggers: each monitoring phone independently
notices the P wave with probability ``p_detect`` and reports it after a
uniform random delay. Step two is the server-side declaration: scanning
triggers in time order, a detection fires at the first trigger that closes
a time window holding at least ``k_min`` triggers. With no background
(false) triggers in the simulation, this count threshold is the whole
detector; its location estimate is the coordinate-wise median of the
contributing triggers, robust against a stray distant phone.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnsortedInput
from .geo import GeoPoint, haversine_km
from .network import Network, SeedSpec, STREAM_TRIGGERS
from .scenario import Earthquake, VelocityModel, p_arrivals_s

DEFAULT_P_DETECT = 0.7
DEFAULT_DELAY_LO_S = 0.5
DEFAULT_DELAY_HI_S = 3.5
DEFAULT_K_MIN = 5
DEFAULT_WINDOW_S = 10.0


@dataclass(frozen=True)
class PhoneParams:
    """Per-phone behaviour: detection probability and reporting delay."""

    p_detect: float = DEFAULT_P_DETECT
    delay_lo_s: float = DEFAULT_DELAY_LO_S
    delay_hi_s: float = DEFAULT_DELAY_HI_S

    def __post_init__(self):
        if not 0.0 <= self.p_detect <= 1.0:
            raise ValueError(f"p_detect must be in [0, 1], got {self.p_detect}")
        if not 0.0 <= self.delay_lo_s <= self.delay_hi_s:
            raise ValueError(
                f"need 0 <= delay_lo <= delay_hi, got [{self.delay_lo_s}, {self.delay_hi_s}]"
            )


@dataclass(frozen=True)
class DetectorParams:
    """Server-side declaration rule: k_min triggers within window_s seconds."""

    k_min: int = DEFAULT_K_MIN
    window_s: float = DEFAULT_WINDOW_S

    def __post_init__(self):
        if self.k_min < 2:
            raise ValueError(f"k_min must be >= 2, got {self.k_min}")
        if not (math.isfinite(self.window_s) and self.window_s > 0):
            raise ValueError(f"window_s must be > 0, got {self.window_s}")


@dataclass(frozen=True)
class PhoneTrigger:
    location: GeoPoint
    trigger_time_s: float


@dataclass(frozen=True)
class Detection:
    """Server detection: declaration time, epicenter estimate, evidence."""

    time_s: float
    location: GeoPoint
    contributing: tuple[int, ...]


def simulate_triggers(
    net: Network,
    eq: Earthquake,
    vm: VelocityModel,
    pp: PhoneParams,
    seed: SeedSpec,
) -> list[PhoneTrigger]:
    """Draw the triggers one earthquake produces on one network.

    Each phone is included with probability ``p_detect``; an included phone
    triggers at its P arrival plus a uniform delay. The result is sorted by
    (time, lat, lon) so downstream processing is order-stable.
    """
    rng = seed.generator(STREAM_TRIGGERS)
    n = len(net)
    included = rng.random(n) < pp.p_detect
    delays = rng.uniform(pp.delay_lo_s, pp.delay_hi_s, size=n)
    arrivals = p_arrivals_s(eq, vm, net.lats, net.lons)

    times = arrivals[included] + delays[included]
    lats = net.lats[included]
    lons = net.lons[included]
    order = np.lexsort((lons, lats, times))
    return [
        PhoneTrigger(
            location=GeoPoint(float(lats[i]), float(lons[i])),
            trigger_time_s=float(times[i]),
        )
        for i in order
    ]


def detect(triggers: Sequence[PhoneTrigger], dp: DetectorParams) -> Detection | None:
    """Apply the sliding-window count detector to time-sorted triggers.

    Scanning in time order, the detection is declared at the first trigger
    t_j with at least k_min triggers inside the half-open window
    (t_j - window_s, t_j]; the contributing set is the earliest k_min
    triggers in that window. Returns None when no window ever fills.
    """
    times = [t.trigger_time_s for t in triggers]
    for prev, cur in zip(times, times[1:]):
        if cur < prev:
            raise UnsortedInput("triggers must be sorted ascending by time")

    left = 0
    for j, t_j in enumerate(times):
        cutoff = t_j - dp.window_s
        while times[left] <= cutoff:
            left += 1
        if j - left + 1 >= dp.k_min:
            contributing = tuple(range(left, left + dp.k_min))
            lat = statistics.median(triggers[i].location.lat for i in contributing)
            lon = statistics.median(triggers[i].location.lon for i in contributing)
            return Detection(
                time_s=t_j,
                location=GeoPoint(lat, lon),
                contributing=contributing,
            )
    return None


def detection_metrics(det: Detection, eq: Earthquake) -> tuple[float, float]:
    """(delay since origin in s, great-circle separation from epicenter in km)."""
    delay_s = det.time_s - eq.origin_time_s
    distance_km = haversine_km(det.location, eq.epicenter)
    return delay_s, distance_km
