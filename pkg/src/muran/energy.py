"""Sector-level power of the mmWave SC-BS layer and its daily aggregation.

Power of one ON/OFF configuration is the sum over SC-BSs of
``n_on * p_on + n_off * p_off``; the macro BS is not part of the sum.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .mesh import MeshState, OnOffConfig, Policy

HOURS = tuple(range(24))


@dataclass(frozen=True)
class PowerModel:
    p_on_w: float = 6.67     # 20 W node / 3 sectors
    p_off_w: float = 0.67    # standby, 10 % of p_on

    def __post_init__(self):
        if not (self.p_on_w > self.p_off_w >= 0):
            raise ValueError("PowerModel requires p_on_w > p_off_w >= 0")

    @classmethod
    def unchecked(cls, p_on_w: float, p_off_w: float) -> "PowerModel":
        """Skip the ``p_on > p_off`` invariant (degenerate models in tests)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "p_on_w", p_on_w)
        object.__setattr__(obj, "p_off_w", p_off_w)
        return obj

    def scaled(self, c: float) -> "PowerModel":
        return PowerModel.unchecked(self.p_on_w * c, self.p_off_w * c)


def config_power(onoff: OnOffConfig, n_sectors: Mapping[int, int], model: PowerModel) -> float:
    """Watts drawn by the SC-BS layer in one ON/OFF configuration."""
    per_site: dict[int, int] = {}
    for (site, sector) in onoff.status:
        if not 0 <= sector < n_sectors.get(site, 0):
            raise ValueError(f"sector {sector} of site {site} not in the sector map")
        per_site[site] = per_site.get(site, 0) + 1
    if per_site != {s: n for s, n in n_sectors.items() if n}:
        raise ValueError("ON/OFF configuration does not cover every sector exactly once")
    n_on = onoff.n_on
    n_off = len(onoff.status) - n_on
    return n_on * model.p_on_w + n_off * model.p_off_w


def sector_map(scenario) -> dict[int, int]:
    return {s.id: s.n_sectors for s in scenario.scbs}


@dataclass(frozen=True)
class HourEnergy:
    hour: int
    policy: Policy
    active_sectors: int
    watts: float
    satisfied_fraction: float


@dataclass(frozen=True)
class EnergyReport:
    model: PowerModel
    per_hour: tuple[HourEnergy, ...]
    daily_wh: Mapping[Policy, float]
    reduction_vs_always_on: Mapping[Policy, float]
    always_on_wh: float

    def per_hour_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["hour", "policy", "active_sectors", "watts", "satisfied_fraction"])
        for r in self.per_hour:
            w.writerow([r.hour, r.policy.value, r.active_sectors, _fmt(r.watts),
                        _fmt(r.satisfied_fraction)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["policy", "daily_wh", "reduction_vs_always_on", "hours", "p_on_w", "p_off_w"])
        n_hours = len({r.hour for r in self.per_hour})
        for pol, wh in self.daily_wh.items():
            w.writerow([pol.value, _fmt(wh), _fmt(self.reduction_vs_always_on[pol]), n_hours,
                        _fmt(self.model.p_on_w), _fmt(self.model.p_off_w)])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def energy_over_hours(states: Mapping[Policy, Sequence[MeshState]], n_sectors: Mapping[int, int],
                      model: PowerModel, hours: Iterable[int] | None = None) -> EnergyReport:
    """Aggregate hourly power (1 h per state) for each policy.

    ``hours`` restricts and orders the accounted hours; all policies must cover
    the same hours.  The always-on reference is computed analytically, so it is
    available even when that policy was not simulated.
    """
    rows = []
    daily: dict[Policy, float] = {}
    covered = None
    for pol, seq in states.items():
        pol = Policy(pol)
        by_hour = {s.hour: s for s in seq}
        if len(by_hour) != len(seq):
            raise ValueError(f"duplicate hours for {pol.value}")
        want = sorted(by_hour) if hours is None else list(hours)
        missing = [h for h in want if h not in by_hour]
        if missing:
            raise ValueError(f"{pol.value} is missing hours {missing}")
        if covered is None:
            covered = want
        elif want != covered:
            raise ValueError("policies cover different hours")
        total = 0.0
        for h in want:
            s = by_hour[h]
            watts = config_power(s.onoff, n_sectors, model)
            total += watts * 1.0
            rows.append(HourEnergy(h, pol, s.onoff.n_on, watts, s.satisfied_fraction))
        daily[pol] = total
    covered = covered or []
    n_total = sum(n_sectors.values())
    always_on = 0.0
    for _ in covered:
        always_on += n_total * model.p_on_w + 0 * model.p_off_w
    reduction = {p: (1.0 - wh / always_on) if always_on > 0 else 0.0 for p, wh in daily.items()}
    rows.sort(key=lambda r: (r.hour, list(daily).index(r.policy)))
    return EnergyReport(model, tuple(rows), daily, reduction, always_on)


def daily_energy(states: Mapping[Policy, Sequence[MeshState]], model: PowerModel,
                 n_sectors: Mapping[int, int]) -> EnergyReport:
    """Full-day report; every policy must provide exactly one state per hour 0..23."""
    for pol, seq in states.items():
        hours = sorted(s.hour for s in seq)
        if hours != list(HOURS):
            missing = sorted(set(HOURS) - set(hours))
            raise ValueError(f"{Policy(pol).value}: need one state per hour, missing {missing}")
    return energy_over_hours(states, n_sectors, model, HOURS)
