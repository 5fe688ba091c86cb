"""Simulated world and spatio-temporal traffic demand.

The world is a square area with one macro BS (LTE + mmWave gateway) at its
centre.  The macro's hexagonal cell (inradius ``macro_isd_m / 2``) is the
evaluation cell: SC-BSs are placed inside it, users are spread over the whole
area, and only users inside the cell are served by the simulated micro-RAN.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

MACRO = "MacroBS"
SCBS = "SCBS"
PEAK_AREA_TRAFFIC_BPS = 44e6
MEAN_USER_DEMAND_BPS = 62e3


@dataclass(frozen=True)
class Area:
    side_m: float
    macro_isd_m: float

    def __post_init__(self):
        if not self.side_m > 0 or not self.macro_isd_m > 0:
            raise ValueError("side_m and macro_isd_m must be positive")
        if 2.0 * self.cell_circumradius_m > self.side_m:
            raise ValueError("evaluation cell does not fit inside the area")

    @property
    def center(self) -> tuple[float, float]:
        return (self.side_m / 2.0, self.side_m / 2.0)

    @property
    def cell_inradius_m(self) -> float:
        return self.macro_isd_m / 2.0

    @property
    def cell_circumradius_m(self) -> float:
        return self.macro_isd_m / math.sqrt(3.0)

    @property
    def cell_area_m2(self) -> float:
        return 1.5 * math.sqrt(3.0) * self.cell_circumradius_m ** 2

    def in_cell(self, xy) -> np.ndarray:
        """Pointy-top hexagon membership test; accepts one point or an (n, 2) array."""
        p = np.asarray(xy, dtype=float)
        cx, cy = self.center
        ax = np.abs(p[..., 0] - cx)
        ay = np.abs(p[..., 1] - cy)
        r = self.cell_inradius_m * (1 + 1e-12)
        return (ax <= r) & (0.5 * ax + (math.sqrt(3.0) / 2.0) * ay <= r)

    def contains(self, xy) -> np.ndarray:
        p = np.asarray(xy, dtype=float)
        return ((p[..., 0] >= 0) & (p[..., 0] <= self.side_m)
                & (p[..., 1] >= 0) & (p[..., 1] <= self.side_m))


@dataclass(frozen=True)
class Site:
    id: int
    kind: str
    position: tuple[float, float]
    height_m: float
    n_sectors: int
    is_gateway: bool

    def __post_init__(self):
        if self.kind == MACRO and not self.is_gateway:
            raise ValueError("the macro BS is the mesh gateway")
        if self.kind == SCBS and self.n_sectors not in (3, 4):
            raise ValueError("SC-BSs have three or four sectors")


@dataclass(frozen=True)
class User:
    id: int
    position: tuple[float, float]
    mean_demand_bps: float

    def __post_init__(self):
        if self.mean_demand_bps < 0:
            raise ValueError("mean_demand_bps must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    area_side_m: float = 2000.0
    macro_isd_m: float = 500.0
    n_scbs: int = 90
    n_users: int = 8000
    placement: str = "uniform"
    min_separation_m: float = 20.0
    sectors_per_scbs: int = 3
    user_mean_demand_bps: float = MEAN_USER_DEMAND_BPS
    macro_height_m: float = 25.0
    scbs_height_m: float = 4.0
    user_height_m: float = 1.5

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioConfig":
        return cls(**dict(d))


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    area: Area
    sites: tuple[Site, ...]
    users: tuple[User, ...]

    @property
    def macro(self) -> Site:
        return self.sites[0]

    @property
    def scbs(self) -> tuple[Site, ...]:
        return self.sites[1:]

    @property
    def user_height_m(self) -> float:
        return self.config.user_height_m

    def site(self, site_id: int) -> Site:
        return self.sites[site_id]

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "sites": [asdict(s) for s in self.sites],
            "users": [asdict(u) for u in self.users],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: Mapping) -> "Scenario":
        cfg = ScenarioConfig.from_dict(d["config"])
        sites = tuple(Site(s["id"], s["kind"], tuple(s["position"]), s["height_m"],
                           s["n_sectors"], s["is_gateway"]) for s in d["sites"])
        users = tuple(User(u["id"], tuple(u["position"]), u["mean_demand_bps"])
                      for u in d["users"])
        return cls(cfg, Area(cfg.area_side_m, cfg.macro_isd_m), sites, users)


def _uniform_sites(area: Area, n: int, min_sep: float, rng: np.random.Generator):
    cx, cy = area.center
    placed = np.empty((n + 1, 2))
    placed[0] = (cx, cy)
    count = 1
    r_in, r_out = area.cell_inradius_m, area.cell_circumradius_m
    attempts, budget = 0, 2000 + 500 * n
    while count < n + 1:
        attempts += 1
        if attempts > budget:
            raise ValueError(
                f"cannot place {n} SC-BSs with {min_sep} m separation in the evaluation cell")
        p = np.array([cx + rng.uniform(-r_in, r_in), cy + rng.uniform(-r_out, r_out)])
        if not area.in_cell(p):
            continue
        gaps = placed[:count] - p
        if np.min(np.hypot(gaps[:, 0], gaps[:, 1])) < min_sep:
            continue
        placed[count] = p
        count += 1
    return [tuple(float(v) for v in p) for p in placed[1:]]


def _grid_sites(area: Area, n: int, min_sep: float):
    cx, cy = area.center
    spacing = math.sqrt(area.cell_area_m2 / max(n, 1))
    while True:
        if spacing < min_sep:
            raise ValueError(
                f"cannot place {n} SC-BSs on a grid with {min_sep} m separation")
        k = int(area.cell_circumradius_m / spacing) + 2
        pts = []
        for j in range(-k, k + 1):
            for i in range(-k, k + 1):
                x = cx + spacing * (i + 0.5 * (j % 2)) + spacing / 2.0
                y = cy + spacing * math.sqrt(3.0) / 2.0 * j
                if area.in_cell((x, y)) and math.hypot(x - cx, y - cy) >= min_sep:
                    pts.append((x, y))
        if len(pts) >= n:
            pts.sort(key=lambda p: (round(math.hypot(p[0] - cx, p[1] - cy), 9),
                                    round(math.atan2(p[1] - cy, p[0] - cx), 9)))
            return pts[:n]
        spacing *= 0.98


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Build the macro gateway, ``config.n_scbs`` SC-BSs and the user population."""
    if config.n_scbs < 0 or config.n_users < 0:
        raise ValueError("n_scbs and n_users must be >= 0")
    if config.placement not in ("uniform", "grid"):
        raise ValueError(f"unknown placement mode {config.placement!r}")
    area = Area(config.area_side_m, config.macro_isd_m)
    rng = np.random.default_rng(seed)
    sites = [Site(0, MACRO, area.center, config.macro_height_m, 3, True)]
    if config.placement == "uniform":
        positions = _uniform_sites(area, config.n_scbs, config.min_separation_m, rng)
    else:
        positions = _grid_sites(area, config.n_scbs, config.min_separation_m)
    for i, pos in enumerate(positions, start=1):
        sites.append(Site(i, SCBS, pos, config.scbs_height_m, config.sectors_per_scbs, False))
    xy = rng.uniform(0.0, config.area_side_m, size=(config.n_users, 2))
    users = tuple(User(i, (float(x), float(y)), float(config.user_mean_demand_bps))
                  for i, (x, y) in enumerate(xy))
    return Scenario(config, area, tuple(sites), users)


@dataclass(frozen=True)
class Hotspot:
    offset_m: tuple[float, float]   # relative to the evaluation-cell centre
    radius_m: float                 # Gaussian standard deviation
    weight: float                   # share of area traffic

    def __post_init__(self):
        if not self.radius_m > 0 or self.weight < 0:
            raise ValueError("hotspot radius must be > 0 and weight >= 0")


@dataclass(frozen=True)
class TrafficProfile:
    hourly_multiplier: tuple[float, ...]
    hotspots: tuple[Hotspot, ...] = ()
    scale_factor: float = 1000.0
    area_peak_bps: float = PEAK_AREA_TRAFFIC_BPS
    jitter_sigma: float = 0.5

    def __post_init__(self):
        m = self.hourly_multiplier
        if len(m) != 24:
            raise ValueError("hourly_multiplier must have exactly 24 entries")
        if min(m) < 0 or abs(max(m) - 1.0) > 1e-12:
            raise ValueError("hourly_multiplier must be nonnegative with maximum 1.0")
        if sum(h.weight for h in self.hotspots) > 1.0 + 1e-12:
            raise ValueError("hotspot weights must sum to <= 1")
        if self.scale_factor < 0 or self.area_peak_bps < 0 or self.jitter_sigma < 0:
            raise ValueError("scale_factor, area_peak_bps and jitter_sigma must be >= 0")

    @property
    def peak_hour(self) -> int:
        return int(np.argmax(self.hourly_multiplier))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hourly_multiplier"] = list(self.hourly_multiplier)
        d["hotspots"] = [{"offset_m": list(h.offset_m), "radius_m": h.radius_m,
                          "weight": h.weight} for h in self.hotspots]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrafficProfile":
        d = dict(d)
        hs = tuple(Hotspot(tuple(h["offset_m"]), h["radius_m"], h["weight"])
                   for h in d.pop("hotspots", ()))
        return cls(hourly_multiplier=tuple(float(v) for v in d.pop("hourly_multiplier")),
                   hotspots=hs, **d)


# Urban-station shape: deep trough at 03:00, crest at 15:00.
_DEFAULT_DIURNAL = (
    0.30, 0.16, 0.07, 0.03, 0.05, 0.10, 0.22, 0.42, 0.62, 0.72, 0.78, 0.82,
    0.86, 0.88, 0.93, 1.00, 0.96, 0.92, 0.90, 0.84, 0.74, 0.62, 0.50, 0.40,
)

_DEFAULT_HOTSPOTS = (
    Hotspot((-140.0, 110.0), 45.0, 0.30),   # upper-left
    Hotspot((150.0, -120.0), 35.0, 0.15),   # right-bottom
    Hotspot((-20.0, -150.0), 50.0, 0.15),
)


def diurnal_default() -> TrafficProfile:
    return TrafficProfile(hourly_multiplier=_DEFAULT_DIURNAL, hotspots=_DEFAULT_HOTSPOTS)


def uniform_profile(scale_factor: float = 1000.0) -> TrafficProfile:
    return TrafficProfile(hourly_multiplier=(1.0,) * 24, scale_factor=scale_factor)


@dataclass(frozen=True)
class TrafficSnapshot:
    """Offered rates of the users present during one hour.

    Users absent in that hour are not listed; :meth:`demand` reports 0 for them.
    """
    hour: int
    demands: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.hour <= 23:
            raise ValueError("hour must be in 0..23")
        if any(v < 0 for v in self.demands.values()):
            raise ValueError("demands must be >= 0")

    def demand(self, user_id: int) -> float:
        return self.demands.get(user_id, 0.0)

    @property
    def total_bps(self) -> float:
        return float(sum(self.demands.values()))

    def to_dict(self) -> dict:
        return {"hour": self.hour,
                "demands": {str(k): v for k, v in sorted(self.demands.items())}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrafficSnapshot":
        return cls(int(d["hour"]), {int(k): float(v) for k, v in d["demands"].items()})


def spatial_weights(scenario: Scenario, profile: TrafficProfile) -> np.ndarray:
    """Traffic density at each user relative to a uniform spread over the area."""
    if not scenario.users:
        return np.zeros(0)
    xy = np.array([u.position for u in scenario.users])
    area_m2 = scenario.area.side_m ** 2
    w = np.full(len(xy), 1.0 - sum(h.weight for h in profile.hotspots))
    cx, cy = scenario.area.center
    for h in profile.hotspots:
        d2 = (xy[:, 0] - cx - h.offset_m[0]) ** 2 + (xy[:, 1] - cy - h.offset_m[1]) ** 2
        w += h.weight * area_m2 * np.exp(-d2 / (2.0 * h.radius_m ** 2)) / (2.0 * math.pi * h.radius_m ** 2)
    return w


def sample_traffic(scenario: Scenario, profile: TrafficProfile, hour: int, seed: int) -> TrafficSnapshot:
    """Draw the offered demand of every present user at ``hour``.

    Each user is present with probability ``hourly_multiplier[hour]`` and then
    offers ``mean_demand * spatial_weight * calibration * scale * jitter`` with
    log-normal, mean-one jitter.  The calibration pins the expected area total
    at the peak hour to ``scale_factor * area_peak_bps``.
    """
    if not 0 <= int(hour) <= 23 or int(hour) != hour:
        raise ValueError(f"hour must be an integer in 0..23, got {hour}")
    n = len(scenario.users)
    rng = np.random.default_rng(seed)
    presence = rng.random(n)
    z = rng.standard_normal(n)
    if n == 0:
        return TrafficSnapshot(int(hour), {})
    mean = np.array([u.mean_demand_bps for u in scenario.users])
    w = spatial_weights(scenario, profile)
    base = mean * w
    total = float(base.sum())
    calib = profile.area_peak_bps / total if total > 0 else 0.0
    s = profile.jitter_sigma
    jitter = np.exp(s * z - 0.5 * s * s)
    rate = base * calib * profile.scale_factor * jitter
    mult = profile.hourly_multiplier[int(hour)]
    demands = {scenario.users[i].id: float(rate[i]) for i in range(n) if presence[i] < mult}
    return TrafficSnapshot(int(hour), demands)
