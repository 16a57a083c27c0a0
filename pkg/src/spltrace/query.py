"""Trace, neighbour and impact queries over a converged world, plus
application-engineering product binding with on-demand variant addresses."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .dv import INFINITY, subnet_distances
from .partition import COMPONENT, Address
from .world import World


class QueryError(Exception):
    pass


class UnknownElementError(QueryError, LookupError):
    pass


class NoAddressError(QueryError):
    pass


class UnreachableError(QueryError):
    pass


class BindingError(QueryError):
    pass


@dataclass(frozen=True)
class TracePath:
    hops: tuple[Address, ...]
    router_hops: int

    def render(self) -> str:
        return "".join(f"{a}\n" for a in self.hops) + f"router-hops: {self.router_hops}\n"


@dataclass(frozen=True)
class ImpactSet:
    element: str
    features: tuple[str, ...]
    products: tuple[str, ...]
    subnets: tuple[int, ...]

    def render(self) -> str:
        def block(title, xs):
            return f"{title}:\n" + "".join(f"  {x}\n" for x in xs)

        return block("features", self.features) + block("products", self.products) + block("subnets", self.subnets)


def _addresses(world: World, element: str) -> tuple[Address, ...]:
    if not world.model.has_element(element):
        raise UnknownElementError(f"unknown element {element!r}")
    addrs = world.plan.addresses.get(element, ())
    if not addrs:
        raise NoAddressError(f"element {element!r} has no address")
    return addrs


def _route(world: World, sources, targets) -> TracePath:
    """Shortest router-hop path between any source address and any target
    address. ``sources``/``targets`` are ``(address, prefix)`` pairs where
    ``prefix`` lists extra addresses to emit before/after the endpoint."""
    state = world.state
    if not sources or not targets:
        raise NoAddressError("endpoint has no address in scope")
    sd = subnet_distances(state) if state.subnets else None
    sidx = {s: j for j, s in enumerate(state.subnets)}

    best = None
    for src, _ in sources:
        for dst, _ in targets:
            if src.subnet == dst.subnet:
                key = (0, src.subnet, dst.subnet, dst)
            else:
                d = int(sd[sidx[src.subnet], sidx[dst.subnet]])
                if d >= INFINITY:
                    continue
                first = _first_router(world, src.subnet, dst.subnet)
                key = (d, src.subnet, dst.subnet, first[1])
            if best is None or key < best[0]:
                best = (key, src, dst)
    if best is None:
        raise UnreachableError("no route between the endpoints")
    (hops, _, _, _), src, dst = best

    src_extra = dict(sources)[src]
    dst_extra = dict(targets)[dst]
    path = list(src_extra) + [src]
    if src.subnet != dst.subnet:
        router, addr = _first_router(world, src.subnet, dst.subnet)
        path.append(addr)
        while True:
            e = state.entry(router, dst.subnet)
            if e.distance == 0:
                path.append(e.next_hop)  # router's own address in the target subnet
                break
            own = world.plan.address_in(router, e.next_hop.subnet)
            path.extend([own, e.next_hop])
            router = world.plan.owner_map()[e.next_hop]
    path.append(dst)
    path.extend(dst_extra)
    return TracePath(tuple(path), hops)


def _first_router(world: World, src: int, dst: int) -> tuple[str, Address]:
    state = world.state
    cands = []
    for r in state.members(src):
        cands.append((state.entry(r, dst).distance, world.plan.address_in(r, src), r))
    d, addr, r = min(cands)
    return r, addr


def trace(world: World, source: str, target: str) -> TracePath:
    """Trace from one element to another through router components."""
    src = [(a, ()) for a in _addresses(world, source)]
    dst = [(a, ()) for a in _addresses(world, target)]
    return _route(world, src, dst)


def _subnet_dist(world: World):
    sd = subnet_distances(world.state)
    sidx = {s: j for j, s in enumerate(world.state.subnets)}
    return lambda a, b: int(sd[sidx[a], sidx[b]])


def element_distances(world: World, element: str) -> dict[str, int]:
    """Minimum router hops from ``element`` to every reachable element."""
    own = [a.subnet for a in _addresses(world, element)]
    dist = _subnet_dist(world)
    out = {}
    for other, addrs in world.plan.addresses.items():
        if other == element:
            continue
        d = min(dist(s, a.subnet) for s in own for a in addrs)
        if d < INFINITY:
            out[other] = d
    return out


def neighbors(world: World, element: str, level: int = 1) -> list[str]:
    """Elements exactly ``level - 1`` router crossings away."""
    if level < 1:
        raise ValueError("level must be >= 1")
    return sorted(e for e, d in element_distances(world, element).items() if d == level - 1)


def impact(world: World, element: str) -> ImpactSet:
    model = world.model
    if not model.has_element(element):
        raise UnknownElementError(f"unknown element {element!r}")
    subnets = sorted(a.subnet for a in world.plan.addresses.get(element, ()))
    features = sorted(world.partition.subnet_feature(s) for s in subnets)
    vps = set()
    if model.has_component(element):
        vps = {vp.id for vp in model.component(element).variation_points}
    products = sorted(
        p.id for p in model.products
        if set(p.included_features) & set(features) or any(b[0] in vps for b in p.bindings)
    )
    return ImpactSet(element, tuple(features), tuple(products), tuple(subnets))


@dataclass
class BoundProduct:
    product: str
    world_version: int
    variant_addresses: dict[tuple[str, str], tuple[Address, ...]]
    demand_traces: dict[tuple[str, str], TracePath] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def render(self) -> str:
        n = sum(len(a) for a in self.variant_addresses.values())
        lines = [f"product {self.product}", f"{n} variant addresses allocated"]
        for (vp, var), addrs in sorted(self.variant_addresses.items()):
            for a in addrs:
                lines.append(f"{vp}:{var}\t{a}")
        return "\n".join(lines) + "\n"


def bind_product(world: World, product: str) -> BoundProduct:
    """Give every bound variant of ``product`` a fresh component address in
    each subnetwork where its host serves an included feature."""
    model = world.model
    if not model.has_product(product):
        raise UnknownElementError(f"unknown product {product!r}")
    p = model.product(product)
    scope = {world.partition.feature_subnet[f] for f in p.included_features}
    allocated = {}
    for vp_id, var_id in p.bindings:
        host, _ = model.variation_point(vp_id)
        subnets = sorted(a.subnet for a in world.plan.addresses.get(host, ()) if a.subnet in scope)
        if not subnets:
            raise BindingError(
                f"variation point {vp_id!r} on {host!r} is not reachable from any feature of {product!r}"
            )
        allocated[(vp_id, var_id)] = tuple(
            Address(s, COMPONENT, world.variants.take(s, world.plan.next_element[s])) for s in subnets
        )
    return BoundProduct(product, world.version, allocated)


def _scoped_endpoint(world: World, bound: BoundProduct, ref: str):
    """Resolve ``element`` or ``vp:variant`` to ``(address, extra)`` pairs
    restricted to the product's subnetworks. A variant resolves to its host's
    address with the variant address as one extra intra-subnet hop."""
    p = world.model.product(bound.product)
    scope = {world.partition.feature_subnet[f] for f in p.included_features}
    if ":" not in ref:
        return [(a, ()) for a in _addresses(world, ref) if a.subnet in scope]
    vp_id, var_id = ref.split(":", 1)
    addrs = bound.variant_addresses.get((vp_id, var_id))
    if not addrs:
        raise NoAddressError(f"variant {ref!r} is not bound in {bound.product!r}")
    host, _ = world.model.variation_point(vp_id)
    return [(world.plan.address_in(host, v.subnet), (v,)) for v in addrs]


def demand_trace(bound: BoundProduct, world: World, source: str, target: str) -> TracePath:
    """Trace inside the product's scope, created on first request and
    memoised. Variant endpoints are written ``vp:variant``."""
    key = (source, target)
    with bound._lock:
        if bound.world_version != world.version:
            bound.demand_traces.clear()
            bound.world_version = world.version
        if key in bound.demand_traces:
            return bound.demand_traces[key]
    src = _scoped_endpoint(world, bound, source)
    dst = _scoped_endpoint(world, bound, target)
    path = _route(world, src, dst)
    with bound._lock:
        return bound.demand_traces.setdefault(key, path)
