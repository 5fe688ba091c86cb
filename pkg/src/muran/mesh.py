"""Sector ON/OFF control and backhaul path creation for the mmWave mesh.

The network-centric policy runs three steps per traffic snapshot:

1. ``step_initial_onoff``: offload users to LTE (smallest demand first) until
   the LTE resource blocks run out; every remaining user switches on the
   best-SNR sector that can carry it.
2. ``step_path_creation``: route each active SC-BS's aggregated demand to the
   gateway with integer min-cost flow, over links between active nodes only.
   Link cost is lexicographic (sectors newly switched on, hops, metres).
3. ``step_reactivation``: greedily switch on sleeping SC-BSs as relays until
   every isolated node can push its demand to the gateway.

``run_policy`` also implements the user-centric and always-on baselines.
"""

from __future__ import annotations

import enum
import functools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .flow import MinCostFlow
from .radio import (
    LinkKind,
    RadioParams,
    antenna_gain,
    boresight_offset,
    link_rate_array,
    path_loss_array,
    sector_of,
    snr_db,
)
from .scenario import Scenario, TrafficSnapshot

log = logging.getLogger(__name__)

GATEWAY = 0
MAX_ACCESS_CANDIDATES = 8

# lexicographic link cost packed into one integer
COST_SECTOR = 10 ** 12
COST_HOP = 10 ** 7


class Policy(str, enum.Enum):
    NETWORK_CENTRIC = "NetworkCentric"
    USER_CENTRIC = "UserCentric"
    ALWAYS_ON = "AlwaysOn"


@dataclass(frozen=True)
class OnOffConfig:
    status: Mapping[tuple[int, int], bool]

    @classmethod
    def all_off(cls, scenario: Scenario) -> "OnOffConfig":
        return cls({(s.id, k): False for s in scenario.scbs for k in range(s.n_sectors)})

    @classmethod
    def all_on(cls, scenario: Scenario) -> "OnOffConfig":
        return cls({(s.id, k): True for s in scenario.scbs for k in range(s.n_sectors)})

    def with_on(self, sectors: Iterable[tuple[int, int]]) -> "OnOffConfig":
        status = dict(self.status)
        for key in sectors:
            if key not in status:
                raise KeyError(f"unknown sector {key}")
            status[key] = True
        return OnOffConfig(status)

    def is_on(self, site: int, sector: int) -> bool:
        return self.status[(site, sector)]

    @property
    def n_on(self) -> int:
        return sum(1 for v in self.status.values() if v)

    @property
    def n_off(self) -> int:
        return len(self.status) - self.n_on

    @property
    def active_sites(self) -> frozenset[int]:
        return frozenset(site for (site, _), on in self.status.items() if on)

    def sectors_on(self, site: int) -> list[int]:
        return sorted(k for (s, k), on in self.status.items() if s == site and on)


@dataclass(frozen=True)
class Link:
    capacity_bps: int
    flow_bps: int


@dataclass(frozen=True)
class BackhaulGraph:
    nodes: frozenset[int]                       # active SC-BSs (gateway implied)
    links: Mapping[tuple[int, int], Link]       # directed, flow-carrying links only
    demand: Mapping[int, int]                   # aggregated access demand per SC-BS
    routed: Mapping[int, int]                   # demand that reached the gateway
    paths: Mapping[int, tuple[tuple[tuple[int, ...], int], ...]]
    isolated: frozenset[int]
    link_sectors: frozenset[tuple[int, int]]    # SC-BS sectors the links occupy

    @property
    def unmet_bps(self) -> int:
        return sum(self.demand[n] - self.routed.get(n, 0) for n in self.demand)

    def inflow(self, node: int) -> int:
        return sum(l.flow_bps for (_, v), l in self.links.items() if v == node)

    def outflow(self, node: int) -> int:
        return sum(l.flow_bps for (u, _), l in self.links.items() if u == node)


@dataclass(frozen=True)
class Assignment:
    serving: Mapping[int, int | None]           # user -> site id (0 = LTE macro) or None
    sector: Mapping[int, int]                   # mmWave users -> sector index
    admitted: Mapping[int, float]               # user -> admitted access rate (bps)
    site_load: Mapping[int, int]                # site -> admitted rate (bps)
    lte_rb_fraction: float
    airtime: Mapping[tuple[int, int], float]

    def scbs_demand(self) -> dict[int, int]:
        return {s: v for s, v in self.site_load.items() if s != GATEWAY}


@dataclass(frozen=True)
class MeshState:
    policy: Policy
    hour: int
    onoff: OnOffConfig
    graph: BackhaulGraph
    assignment: Assignment
    offered_bps: float
    served_bps: float
    reactivated: frozenset[int] = frozenset()

    @property
    def satisfied_fraction(self) -> float:
        if self.offered_bps <= 0:
            return 1.0
        return min(1.0, max(0.0, self.served_bps / self.offered_bps))

    @property
    def active_scbs(self) -> frozenset[int]:
        return self.onoff.active_sites

    def to_dict(self, scenario: Scenario) -> dict:
        nodes = []
        for s in scenario.sites:
            nodes.append({
                "id": s.id, "kind": s.kind, "x": s.position[0], "y": s.position[1],
                "sectors_on": [] if s.id == GATEWAY else self.onoff.sectors_on(s.id),
                "n_sectors": s.n_sectors,
                "demand_bps": self.graph.demand.get(s.id, 0),
                "routed_bps": self.graph.routed.get(s.id, 0),
            })
        links = [{"src": u, "dst": v, "capacity_bps": l.capacity_bps, "flow_bps": l.flow_bps}
                 for (u, v), l in sorted(self.graph.links.items())]
        return {
            "policy": self.policy.value,
            "hour": self.hour,
            "active_scbs": len(self.active_scbs),
            "sectors_on": self.onoff.n_on,
            "satisfied_fraction": self.satisfied_fraction,
            "lte_users": sum(1 for v in self.assignment.serving.values() if v == GATEWAY),
            "isolated": sorted(self.graph.isolated),
            "reactivated": sorted(self.reactivated),
            "nodes": nodes,
            "links": links,
        }


class _Geometry:
    """Everything that depends only on (scenario, radio): SNRs, rates, capacities."""

    def __init__(self, scenario: Scenario, radio: RadioParams):
        self.scenario = scenario
        self.radio = radio
        n_sites = len(scenario.sites)
        self.n_sites = n_sites
        site_xy = np.array([s.position for s in scenario.sites], dtype=float).reshape(-1, 2)
        site_h = np.array([s.height_m for s in scenario.sites], dtype=float)
        self.site_xy = site_xy

        # site-to-site backhaul, boresight on both ends
        dx = site_xy[None, :, 0] - site_xy[:, None, 0]
        dy = site_xy[None, :, 1] - site_xy[:, None, 1]
        dz = site_h[None, :] - site_h[:, None]
        dist = np.sqrt(dx ** 2 + dy ** 2 + dz ** 2)
        self.dist = dist
        np.fill_diagonal(dist, np.inf)
        pl = path_loss_array(LinkKind.MMW_LINK, dist, radio)
        snr = snr_db(radio.mmw_tx_power_dbm, radio.mmw_antenna_gain_dbi, radio.mmw_antenna_gain_dbi,
                     pl, radio.mmw_channel_bandwidth_hz, radio.noise_density_dbm_hz)
        cap = np.floor(link_rate_array(snr, LinkKind.MMW_LINK, radio)).astype(np.int64)
        np.fill_diagonal(cap, 0)
        self.capacity = cap
        az = np.degrees(np.arctan2(dy, dx)) % 360.0
        self.facing = np.zeros((n_sites, n_sites), dtype=int)
        for s in scenario.sites:
            self.facing[s.id] = sector_of(az[s.id], s.n_sectors)
        self.neighbors = [np.flatnonzero(cap[i] > 0).tolist() for i in range(n_sites)]

        # users inside the evaluation cell
        users = scenario.users
        user_xy = np.array([u.position for u in users], dtype=float).reshape(-1, 2)
        in_cell = scenario.area.in_cell(user_xy) if len(users) else np.zeros(0, bool)
        self.cell_users = [users[i].id for i in np.flatnonzero(in_cell)]
        cell_xy = user_xy[in_cell]
        h_u = scenario.user_height_m

        # LTE from the macro, 3GPP sector pattern
        macro = scenario.macro
        mdx = cell_xy[:, 0] - macro.position[0]
        mdy = cell_xy[:, 1] - macro.position[1]
        d_lte = np.sqrt(mdx ** 2 + mdy ** 2 + (macro.height_m - h_u) ** 2)
        off = boresight_offset(np.degrees(np.arctan2(mdy, mdx)) % 360.0, radio.lte_n_sectors)
        g_lte = np.array([antenna_gain(radio.lte_pattern, o) for o in np.atleast_1d(off)])
        snr_lte = snr_db(radio.lte_tx_power_dbm, g_lte, radio.ue_gain_dbi,
                         path_loss_array(LinkKind.LTE_ACCESS, d_lte, radio),
                         radio.lte_bandwidth_hz, radio.noise_density_dbm_hz)
        lte_rate = link_rate_array(snr_lte, LinkKind.LTE_ACCESS, radio)
        self.lte_rate = {uid: float(r) for uid, r in zip(self.cell_users, np.atleast_1d(lte_rate))}

        # mmWave access candidates per user, best SNR first (ideal in-sector steering)
        self.access: dict[int, list[tuple[int, int, float]]] = {}
        scbs = scenario.scbs
        if scbs and len(cell_xy):
            sxy = site_xy[1:]
            sh = site_h[1:]
            adx = cell_xy[:, None, 0] - sxy[None, :, 0]
            ady = cell_xy[:, None, 1] - sxy[None, :, 1]
            d_acc = np.sqrt(adx ** 2 + ady ** 2 + (sh[None, :] - h_u) ** 2)
            snr_acc = snr_db(radio.mmw_tx_power_dbm, radio.mmw_antenna_gain_dbi,
                             radio.mmw_user_gain_dbi,
                             path_loss_array(LinkKind.MMW_LINK, d_acc, radio),
                             radio.mmw_channel_bandwidth_hz, radio.noise_density_dbm_hz)
            rate = link_rate_array(snr_acc, LinkKind.MMW_LINK, radio)
            az_acc = np.degrees(np.arctan2(-ady, -adx)) % 360.0   # site -> user
            n_sec = np.array([s.n_sectors for s in scbs])
            for row, uid in enumerate(self.cell_users):
                order = np.lexsort((np.arange(len(scbs)), -snr_acc[row]))
                cands = []
                for j in order[:MAX_ACCESS_CANDIDATES]:
                    if rate[row, j] <= 0:
                        break
                    sec = int(sector_of(az_acc[row, j], int(n_sec[j])))
                    cands.append((scbs[j].id, sec, float(rate[row, j])))
                self.access[uid] = cands
        else:
            for uid in self.cell_users:
                self.access[uid] = []

    def best_site(self, uid: int) -> int | None:
        c = self.access.get(uid)
        return c[0][0] if c else None


@functools.lru_cache(maxsize=8)
def _geometry(scenario: Scenario, radio: RadioParams) -> _Geometry:
    return _Geometry(scenario, radio)


def _present_users(geom: _Geometry, snapshot: TrafficSnapshot) -> list[int]:
    return [u for u in geom.cell_users if u in snapshot.demands]


class _Access:
    """Mutable bookkeeping while users are admitted."""

    def __init__(self):
        self.serving: dict[int, int | None] = {}
        self.sector: dict[int, int] = {}
        self.admitted: dict[int, float] = {}
        self.airtime: dict[tuple[int, int], float] = {}
        self.lte_rb = 0.0

    def try_lte(self, geom: _Geometry, uid: int, demand: float) -> bool:
        rate = geom.lte_rate[uid]
        if demand == 0:
            need = 0.0
        elif rate <= 0:
            return False
        else:
            need = demand / rate
        if self.lte_rb + need > 1.0 + 1e-12:
            return False
        self.lte_rb += need
        self.serving[uid] = GATEWAY
        self.admitted[uid] = demand
        return True

    def try_mmw(self, geom: _Geometry, uid: int, demand: float, allowed=None,
                partial: bool = True) -> bool:
        cands = [c for c in geom.access[uid] if allowed is None or allowed(c[0], c[1])]
        best_partial = None
        for site, sec, rate in cands:
            used = self.airtime.get((site, sec), 0.0)
            if used + demand / rate <= 1.0 + 1e-12:
                self._place(uid, site, sec, demand, used + demand / rate)
                return True
            spare = (1.0 - used) * rate
            if spare > 0 and (best_partial is None or spare > best_partial[3]):
                best_partial = (site, sec, rate, spare)
        if partial and best_partial is not None:
            site, sec, rate, spare = best_partial
            self._place(uid, site, sec, spare, 1.0)
            return True
        return False

    def _place(self, uid, site, sec, rate_bps, airtime):
        self.serving[uid] = site
        self.sector[uid] = sec
        self.admitted[uid] = rate_bps
        self.airtime[(site, sec)] = airtime

    def finish(self, users: Iterable[int]) -> Assignment:
        for u in users:
            self.serving.setdefault(u, None)
            self.admitted.setdefault(u, 0.0)
        load: dict[int, float] = {}
        for u, site in self.serving.items():
            if site is not None:
                load[site] = load.get(site, 0.0) + self.admitted[u]
        site_load = {s: int(round(v)) for s, v in sorted(load.items())}
        return Assignment(dict(self.serving), dict(self.sector), dict(self.admitted),
                          site_load, self.lte_rb, dict(self.airtime))


def step_initial_onoff(scenario: Scenario, snapshot: TrafficSnapshot,
                       radio: RadioParams = RadioParams()) -> tuple[OnOffConfig, Assignment]:
    """Step (i): LTE offload in ascending-demand order, then best-sector activation."""
    geom = _geometry(scenario, radio)
    users = _present_users(geom, snapshot)
    acc = _Access()
    leftover = []
    for uid in sorted(users, key=lambda u: (snapshot.demand(u), u)):
        if not acc.try_lte(geom, uid, snapshot.demand(uid)):
            leftover.append(uid)
    for uid in sorted(leftover, key=lambda u: (-snapshot.demand(u), u)):
        acc.try_mmw(geom, uid, snapshot.demand(uid))
    asg = acc.finish(users)
    on = {(asg.serving[u], asg.sector[u]) for u in asg.sector if asg.admitted[u] > 0}
    return OnOffConfig.all_off(scenario).with_on(on), asg


def _baseline_access(geom: _Geometry, snapshot: TrafficSnapshot, users: list[int],
                     allowed) -> Assignment:
    acc = _Access()
    leftover = []
    for uid in sorted(users, key=lambda u: (-snapshot.demand(u), u)):
        if not acc.try_mmw(geom, uid, snapshot.demand(uid), allowed, partial=False):
            leftover.append(uid)
    for uid in sorted(leftover, key=lambda u: (snapshot.demand(u), u)):
        if not acc.try_lte(geom, uid, snapshot.demand(uid)):
            acc.try_mmw(geom, uid, snapshot.demand(uid), allowed, partial=True)
    return acc.finish(users)


def user_centric_onoff(scenario: Scenario, snapshot: TrafficSnapshot,
                       radio: RadioParams = RadioParams()) -> tuple[OnOffConfig, Assignment]:
    """Every SC-BS that is the best server of at least one present user is fully on."""
    geom = _geometry(scenario, radio)
    users = _present_users(geom, snapshot)
    sites = {geom.best_site(u) for u in users} - {None}
    onoff = OnOffConfig.all_off(scenario).with_on(
        (s, k) for s in sites for k in range(scenario.site(s).n_sectors))
    asg = _baseline_access(geom, snapshot, users, lambda s, k: s in sites)
    return onoff, asg


def always_on_onoff(scenario: Scenario, snapshot: TrafficSnapshot,
                    radio: RadioParams = RadioParams()) -> tuple[OnOffConfig, Assignment]:
    geom = _geometry(scenario, radio)
    users = _present_users(geom, snapshot)
    return OnOffConfig.all_on(scenario), _baseline_access(geom, snapshot, users, None)


def _route(geom: _Geometry, nodes: Iterable[int], demand: Mapping[int, int],
           onoff: OnOffConfig) -> BackhaulGraph:
    nodes = sorted(set(nodes) - {GATEWAY})
    index = {GATEWAY: 0}
    for i, n in enumerate(nodes, start=1):
        index[n] = i
    mcf = MinCostFlow(len(index))
    cap, facing, dist = geom.capacity, geom.facing, geom.dist
    arc_of = {}
    for u in nodes:
        iu = index[u]
        for v in geom.neighbors[u]:
            iv = index.get(v)
            if iv is None:
                continue
            new = 0 if onoff.status[(u, int(facing[u, v]))] else 1
            if v != GATEWAY and not onoff.status[(v, int(facing[v, u]))]:
                new += 1
            cost = new * COST_SECTOR + COST_HOP + int(round(dist[u, v]))
            arc_of[mcf.add_arc(iu, iv, int(cap[u, v]), cost)] = (u, v)
    supply = {index[n]: int(demand.get(n, 0)) for n in nodes if demand.get(n, 0) > 0}
    routed_idx = mcf.solve(supply, 0)
    routed = {n: routed_idx.get(index[n], 0) for n in nodes if demand.get(n, 0) > 0}
    links = {}
    for a, _, _, c, f in mcf.arcs():
        if f > 0:
            links[arc_of[a]] = Link(c, f)
    sectors = set()
    for (u, v) in links:
        sectors.add((u, int(facing[u, v])))
        if v != GATEWAY:
            sectors.add((v, int(facing[v, u])))
    isolated = frozenset(n for n in routed if routed[n] < demand[n])
    return BackhaulGraph(
        nodes=frozenset(nodes), links=links,
        demand={n: int(demand[n]) for n in nodes if n in demand and demand[n] > 0},
        routed=routed, paths=_decompose(links, routed), isolated=isolated,
        link_sectors=frozenset(sectors))


def _decompose(links: Mapping[tuple[int, int], Link], routed: Mapping[int, int]):
    """Split link flows into source-to-gateway paths (flows are acyclic)."""
    rem = {k: l.flow_bps for k, l in links.items()}
    out: dict[int, list[int]] = {}
    for (u, v) in sorted(links):
        out.setdefault(u, []).append(v)
    # excess leaving each node = what it originates
    paths: dict[int, list[tuple[tuple[int, ...], int]]] = {}
    for src in sorted(routed):
        left = routed[src]
        while left > 0:
            path, node, amount = [src], src, left
            while node != GATEWAY:
                nxt = next(v for v in out.get(node, ()) if rem[(node, v)] > 0)
                amount = min(amount, rem[(node, nxt)])
                path.append(nxt)
                node = nxt
            for a, b in zip(path, path[1:]):
                rem[(a, b)] -= amount
            paths.setdefault(src, []).append((tuple(path), amount))
            left -= amount
    return {k: tuple(v) for k, v in paths.items()}


def step_path_creation(scenario: Scenario, onoff: OnOffConfig, radio: RadioParams = RadioParams(),
                       demand: Mapping[int, int] | Assignment | None = None) -> BackhaulGraph:
    """Step (ii): min-cost routing of every active SC-BS's demand to the gateway."""
    geom = _geometry(scenario, radio)
    if isinstance(demand, Assignment):
        demand = demand.scbs_demand()
    demand = dict(demand or {})
    return _route(geom, onoff.active_sites, demand, onoff)


def _relay_need(geom: _Geometry, active: set[int], targets: Iterable[int]) -> int:
    """Sum over targets of the fewest sleeping SC-BSs on any path to the gateway."""
    n = geom.n_sites
    inf = n + 1
    dist = [inf] * n
    dist[GATEWAY] = 0
    dq = deque([GATEWAY])
    while dq:
        u = dq.popleft()
        for v in geom.neighbors[u]:
            w = 0 if v in active else 1
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                if w:
                    dq.append(v)
                else:
                    dq.appendleft(v)
    total = 0
    for t in targets:
        # the target itself is active; count relays strictly between it and the gateway
        total += min(inf, dist[t])
    return total


def step_reactivation(scenario: Scenario, graph: BackhaulGraph, onoff: OnOffConfig,
                      radio: RadioParams = RadioParams()) -> tuple[OnOffConfig, BackhaulGraph]:
    """Step (iii): wake sleeping SC-BSs as relays for isolated nodes.

    Greedy: each round wakes the candidate that fully reconnects the most
    isolated nodes, then routes the most stranded bps, then brings isolated
    nodes fewest sleeping hops from the gateway, then turns on fewest sectors,
    then lowest id.  If the greedy stalls, the all-awake configuration is
    tried and pruned back by reverse deletion.
    """
    if not graph.isolated:
        return onoff, graph
    geom = _geometry(scenario, radio)
    base = set(graph.nodes)
    demand = dict(graph.demand)
    sleeping = [s.id for s in scenario.scbs if s.id not in base]

    def route(extra) -> BackhaulGraph:
        return _route(geom, base | set(extra), demand, onoff)

    def score(g: BackhaulGraph) -> tuple[int, int]:
        return len(g.isolated), g.unmet_bps

    chosen: list[int] = []
    current = graph
    need = _relay_need(geom, base, current.isolated)
    while current.isolated:
        awake = base | set(chosen) | {GATEWAY}
        best_key, best = None, None
        for r in sleeping:
            if r in chosen:
                continue
            if not any(v in awake for v in geom.neighbors[r]):
                g, r_need = current, _relay_need(geom, awake | {r}, current.isolated)
            else:
                g = route(chosen + [r])
                r_need = _relay_need(geom, awake | {r}, g.isolated)
            new_sectors = sum(1 for (s, _) in g.link_sectors if s == r)
            key = (len(g.isolated) - len(current.isolated), g.unmet_bps - current.unmet_bps,
                   r_need, new_sectors, r)
            if best_key is None or key < best_key:
                best_key, best = key, (r, g, r_need)
        if best is None:
            break
        r, g, r_need = best
        if best_key[0] >= 0 and best_key[1] >= 0 and r_need >= need:
            break
        chosen.append(r)
        current, need = g, r_need

    if current.isolated:
        everyone = route(sleeping)
        if score(everyone) < score(current):
            keep = list(sleeping)
            target = score(everyone)
            for r in sorted(sleeping, reverse=True):
                trial = [x for x in keep if x != r]
                if score(route(trial)) <= target:
                    keep = trial
            chosen = keep
            current = route(chosen)

    # drop relays that ended up carrying nothing
    while True:
        idle = [r for r in chosen if current.inflow(r) == 0 and current.outflow(r) == 0]
        if not idle:
            break
        kept = [r for r in chosen if r not in idle]
        trial = route(kept)
        if score(trial) > score(current):
            break
        chosen, current = kept, trial

    log.debug("reactivated %s, still isolated %s", chosen, sorted(current.isolated))
    return onoff.with_on(current.link_sectors), current


def run_policy(policy: Policy | str, scenario: Scenario, snapshot: TrafficSnapshot,
               radio: RadioParams = RadioParams()) -> MeshState:
    policy = Policy(policy)
    geom = _geometry(scenario, radio)
    if policy is Policy.NETWORK_CENTRIC:
        onoff, asg = step_initial_onoff(scenario, snapshot, radio)
    elif policy is Policy.USER_CENTRIC:
        onoff, asg = user_centric_onoff(scenario, snapshot, radio)
    else:
        onoff, asg = always_on_onoff(scenario, snapshot, radio)
    initial = onoff.active_sites
    graph = step_path_creation(scenario, onoff, radio, asg)
    if policy is not Policy.ALWAYS_ON:
        onoff, graph = step_reactivation(scenario, graph, onoff, radio)
    onoff = onoff.with_on(graph.link_sectors)
    reactivated = frozenset(graph.nodes - initial)

    offered = sum(snapshot.demand(u) for u in _present_users(geom, snapshot))
    served = 0.0
    for uid, site in asg.serving.items():
        if site is None:
            continue
        if site == GATEWAY:
            served += asg.admitted[uid]
            continue
        d = graph.demand.get(site, 0)
        frac = graph.routed.get(site, 0) / d if d > 0 else 0.0
        served += asg.admitted[uid] * frac
    return MeshState(policy, snapshot.hour, onoff, graph, asg, offered, served, reactivated)
