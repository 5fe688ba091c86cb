"""Integer min-cost flow from many sources to one sink.

Successive shortest paths with node potentials.  Each pass runs Dijkstra
backwards from the sink under reduced costs, which gives every node a
shortest path to the sink.  Sources then push along their tree paths in
order of increasing distance, exactly as if they hung off one zero-cost
super-source; the pass ends at the first source whose path has lost an arc
to saturation.  All capacities and costs are Python ints, so conservation
is exact.
"""

from __future__ import annotations

import heapq
from typing import Mapping


class MinCostFlow:
    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.adj: list[list[int]] = [[] for _ in range(n_nodes)]
        self.to: list[int] = []
        self.res: list[int] = []
        self.cost: list[int] = []
        self.cap: list[int] = []

    def add_arc(self, u: int, v: int, cap: int, cost: int) -> int:
        if cap < 0 or cost < 0:
            raise ValueError("capacities and costs must be nonnegative")
        a = len(self.to)
        self.adj[u].append(a)
        self.to.append(v)
        self.res.append(int(cap))
        self.cost.append(int(cost))
        self.cap.append(int(cap))
        self.adj[v].append(a + 1)
        self.to.append(u)
        self.res.append(0)
        self.cost.append(-int(cost))
        self.cap.append(0)
        return a

    def flow(self, arc: int) -> int:
        return self.cap[arc] - self.res[arc]

    def arcs(self):
        """Yield ``(arc_id, u, v, cap, flow)`` for every forward arc."""
        for a in range(0, len(self.to), 2):
            yield a, self.to[a + 1], self.to[a], self.cap[a], self.cap[a] - self.res[a]

    def total_cost(self) -> int:
        return sum(self.cost[a] * f for a, _, _, _, f in self.arcs())

    def solve(self, supply: Mapping[int, int], sink: int) -> dict[int, int]:
        """Route as much of ``supply`` to ``sink`` as possible at minimum cost.

        Returns the routed amount per source node.
        """
        excess = [0] * self.n
        for node, amount in supply.items():
            if amount < 0:
                raise ValueError("supplies must be nonnegative")
            if node != sink:
                excess[node] += int(amount)
        pot = [0] * self.n
        to, res = self.to, self.res

        while True:
            done, nxt = self._shortest_tree(pot, sink)
            ready = [v for v in range(self.n) if excess[v] > 0 and done[v]]
            if not ready:
                break
            ready.sort(key=lambda v: (pot[v], v))
            for src in ready:
                path = []
                node = src
                while node != sink:
                    a = nxt[node]
                    path.append(a)
                    node = to[a]
                push = min(excess[src], min(res[a] for a in path))
                if push == 0:
                    break           # an earlier push saturated this path
                for a in path:
                    res[a] -= push
                    res[a ^ 1] += push
                excess[src] -= push
                if excess[src]:
                    break           # bottleneck hit; distances must be recomputed

        return {node: int(amount) - excess[node]
                for node, amount in supply.items() if node != sink}

    def _shortest_tree(self, pot: list[int], sink: int):
        """Reverse Dijkstra; updates ``pot`` in place, returns (reached, next arc)."""
        to, res, cost, adj = self.to, self.res, self.cost, self.adj
        n = self.n
        dist: list[int | None] = [None] * n
        nxt = [-1] * n
        dist[sink] = 0
        heap = [(0, sink)]
        done = [False] * n
        while heap:
            d, w = heapq.heappop(heap)
            if done[w]:
                continue
            done[w] = True
            pw = pot[w]
            for b in adj[w]:
                a = b ^ 1            # arc u -> w
                if res[a] <= 0:
                    continue
                u = to[b]
                if done[u]:
                    continue
                nd = d + cost[a] - pot[u] + pw
                du = dist[u]
                if du is None or nd < du or (nd == du and a < nxt[u]):
                    dist[u] = nd
                    nxt[u] = a
                    heapq.heappush(heap, (nd, u))
        dmax = max(d for d in dist if d is not None)
        for v in range(n):
            pot[v] += dist[v] if done[v] else dmax
        return done, nxt
