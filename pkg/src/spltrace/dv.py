"""Synchronous distance-vector routing over router components.

Each router keeps one entry per live subnetwork: distance in router hops
(0 when the router is attached to the subnetwork) and the address of the
next-hop neighbour. Rounds are synchronous: every router reads its
neighbours' tables from the previous round only. Split horizon with
poisoned reverse is always applied, and distances saturate at ``INFINITY``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .kernels import get_kernel
from .partition import COMPONENT, Address, AddressPlan, Partition

INFINITY = 16


class RoutingError(LookupError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class RouteEntry:
    dest: int
    next_hop: Address | None
    distance: int

    @property
    def reachable(self) -> bool:
        return self.distance < INFINITY


@dataclass(frozen=True)
class RoutingTable:
    owner: str
    entries: Mapping[int, RouteEntry]


NeighborGraph = Mapping[str, frozenset[tuple[str, int]]]


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RoutingState:
    routers: tuple[str, ...]
    router_addresses: tuple[tuple[Address, ...], ...]
    subnets: tuple[int, ...]
    own_element: np.ndarray  # (R, S) router's element id in subnet, -1 if not attached
    edge_ptr: np.ndarray
    edge_nbr: np.ndarray
    edge_subnet: np.ndarray
    edge_element: np.ndarray
    dist: np.ndarray
    hop_router: np.ndarray
    hop_subnet: np.ndarray
    hop_element: np.ndarray
    rounds_run: int = 0
    converged: bool = False
    _pos: dict = field(default=None, init=False, repr=False)

    def _index(self) -> tuple[dict, dict]:
        if self._pos is None:
            pos = ({r: i for i, r in enumerate(self.routers)},
                   {s: j for j, s in enumerate(self.subnets)})
            object.__setattr__(self, "_pos", pos)
        return self._pos

    def router_index(self, router: str) -> int:
        try:
            return self._index()[0][router]
        except KeyError:
            raise RoutingError(f"unknown router {router!r}") from None

    def subnet_index(self, subnet: int) -> int:
        try:
            return self._index()[1][subnet]
        except KeyError:
            raise RoutingError(f"unknown subnetwork {subnet}") from None

    def entry(self, router: str, dest: int) -> RouteEntry:
        i, j = self.router_index(router), self.subnet_index(dest)
        return self._entry(i, j)

    def _entry(self, i: int, j: int) -> RouteEntry:
        d = int(self.dist[i, j])
        nh = None
        if d < INFINITY:
            nh = Address(int(self.hop_subnet[i, j]), COMPONENT, int(self.hop_element[i, j]))
        return RouteEntry(self.subnets[j], nh, d)

    @property
    def tables(self) -> dict[str, RoutingTable]:
        return {
            r: RoutingTable(r, {s: self._entry(i, j) for j, s in enumerate(self.subnets)})
            for i, r in enumerate(self.routers)
        }

    @property
    def neighbor_graph(self) -> dict[str, frozenset[tuple[str, int]]]:
        out = {}
        for i, r in enumerate(self.routers):
            lo, hi = self.edge_ptr[i], self.edge_ptr[i + 1]
            out[r] = frozenset((self.routers[self.edge_nbr[e]], int(self.edge_subnet[e])) for e in range(lo, hi))
        return out

    def members(self, subnet: int) -> list[str]:
        """Routers attached to ``subnet``."""
        j = self.subnet_index(subnet)
        return [r for i, r in enumerate(self.routers) if self.own_element[i, j] >= 0]

    def same_tables(self, other: RoutingState) -> bool:
        return (
            self.routers == other.routers
            and self.subnets == other.subnets
            and np.array_equal(self.dist, other.dist)
            and np.array_equal(self.hop_router, other.hop_router)
            and np.array_equal(self.hop_subnet, other.hop_subnet)
            and np.array_equal(self.hop_element, other.hop_element)
        )

    def with_tables(self, dist, hop_router, hop_subnet, hop_element, **kw) -> RoutingState:
        return replace(
            self,
            dist=_frozen(dist),
            hop_router=_frozen(hop_router),
            hop_subnet=_frozen(hop_subnet),
            hop_element=_frozen(hop_element),
            **kw,
        )

    def dump(self) -> str:
        return dump_tables(self)


def build_neighbor_graph(partition: Partition, routers) -> dict[str, frozenset[tuple[str, int]]]:
    """Routers are neighbours iff they share a subnetwork; edges are labelled
    with every shared subnetwork."""
    routers = set(routers)
    graph: dict[str, set[tuple[str, int]]] = {r: set() for r in routers}
    for s, members in partition.membership.items():
        attached = sorted(routers & members)
        for a in attached:
            for b in attached:
                if a != b:
                    graph[a].add((b, s))
    return {r: frozenset(v) for r, v in graph.items()}


def _router_order(routers, plan: AddressPlan) -> list[str]:
    return sorted(routers, key=lambda r: plan.addresses[r][0])


def init_tables(
    partition: Partition,
    routers,
    graph: NeighborGraph,
    plan: AddressPlan,
) -> RoutingState:
    """Distance 0 for attached subnetworks, INFINITY everywhere else."""
    order = _router_order(routers, plan)
    subnets = tuple(partition.subnets)
    n_r, n_s = len(order), len(subnets)
    ridx = {r: i for i, r in enumerate(order)}

    own = np.full((n_r, n_s), -1, dtype=np.int64)
    for i, r in enumerate(order):
        for j, s in enumerate(subnets):
            a = plan.address_in(r, s)
            if a is not None:
                own[i, j] = a.element

    ptr = [0]
    nbr, esub, eelem = [], [], []
    for r in order:
        edges = []
        for n, s in graph.get(r, ()):
            a = plan.address_in(n, s)
            edges.append((a.subnet, a.element, ridx[n]))
        edges.sort()
        for s, e, n in edges:
            nbr.append(n)
            esub.append(s)
            eelem.append(e)
        ptr.append(len(nbr))

    dist = np.where(own >= 0, 0, INFINITY)
    hop_router = np.where(own >= 0, np.arange(n_r, dtype=np.int64)[:, None], -1)
    hop_subnet = np.where(own >= 0, np.asarray(subnets, dtype=np.int64)[None, :], -1)
    hop_element = np.where(own >= 0, own, -1)
    return RoutingState(
        routers=tuple(order),
        router_addresses=tuple(tuple(plan.addresses[r]) for r in order),
        subnets=subnets,
        own_element=_frozen(own.reshape(n_r, n_s)),
        edge_ptr=_frozen(ptr),
        edge_nbr=_frozen(nbr),
        edge_subnet=_frozen(esub),
        edge_element=_frozen(eelem),
        dist=_frozen(dist.reshape(n_r, n_s)),
        hop_router=_frozen(hop_router.reshape(n_r, n_s)),
        hop_subnet=_frozen(hop_subnet.reshape(n_r, n_s)),
        hop_element=_frozen(hop_element.reshape(n_r, n_s)),
    )


def exchange_round(state: RoutingState, backend: str | None = None) -> tuple[RoutingState, bool]:
    kernel = get_kernel(backend)
    if not state.routers or not state.subnets:
        return state, False
    dist, hr, hs, he = kernel(
        state.dist, state.hop_router, state.own_element,
        np.asarray(state.subnets, dtype=np.int64),
        state.edge_ptr, state.edge_nbr, state.edge_subnet, state.edge_element,
        INFINITY,
    )
    changed = not (
        np.array_equal(dist, state.dist)
        and np.array_equal(hr, state.hop_router)
        and np.array_equal(hs, state.hop_subnet)
        and np.array_equal(he, state.hop_element)
    )
    if not changed:
        return state, False
    return state.with_tables(dist, hr, hs, he, converged=False), True


def converge(
    state: RoutingState,
    max_rounds: int | None = None,
    backend: str | None = None,
    observer: Callable[[int, RoutingState], None] | None = None,
) -> RoutingState:
    """Run rounds until nothing changes. ``rounds_run`` counts every round
    executed, including the final one that detected the fixpoint."""
    if max_rounds is None:
        max_rounds = len(state.subnets) + 1
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if not state.routers:
        return replace(state, converged=True, rounds_run=0)
    rounds = 0
    while True:
        if rounds >= max_rounds:
            raise ConvergenceError(f"no fixpoint after {max_rounds} rounds")
        state, changed = exchange_round(state, backend)
        rounds += 1
        if observer is not None:
            observer(rounds, state)
        if not changed:
            return replace(state, converged=True, rounds_run=rounds)


def best_next_hop(state: RoutingState, router: str, dest: int) -> RouteEntry:
    return state.entry(router, dest)


def dump_tables(state: RoutingState) -> str:
    """``router-address<TAB>dest<TAB>next-hop<TAB>distance`` rows, sorted;
    the router is named by its lowest address."""
    rows = []
    for i, addrs in enumerate(state.router_addresses):
        for j, s in enumerate(state.subnets):
            e = state._entry(i, j)
            nh = str(e.next_hop) if e.next_hop is not None else "-"
            d = "inf" if e.distance >= INFINITY else str(e.distance)
            rows.append(((addrs[0], s), f"{addrs[0]}\t{s}\t{nh}\t{d}"))
    rows.sort(key=lambda x: x[0])
    return "".join(line + "\n" for _, line in rows)


def subnet_distance(state: RoutingState, src: int, dst: int) -> int:
    """Router hops needed to get from subnetwork ``src`` into ``dst``."""
    if src == dst:
        return 0
    j_src, j_dst = state.subnet_index(src), state.subnet_index(dst)
    attached = state.own_element[:, j_src] >= 0
    if not attached.any():
        return INFINITY
    return int(min(INFINITY, state.dist[attached, j_dst].min() + 1))


def subnet_distances(state: RoutingState) -> np.ndarray:
    """(S, S) matrix of ``subnet_distance`` for every pair."""
    n_s = len(state.subnets)
    out = np.full((n_s, n_s), INFINITY, dtype=np.int64)
    for j in range(n_s):
        attached = state.own_element[:, j] >= 0
        if attached.any():
            out[j] = np.minimum(state.dist[attached].min(axis=0) + 1, INFINITY)
    np.fill_diagonal(out, 0)
    return out
