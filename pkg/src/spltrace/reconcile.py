"""Architectural change operations and incremental reconvergence.

A change updates the partition and address plan in place (untouched
elements keep their addresses, retired ids are never reissued), poisons
every routing entry whose next-hop chain relied on something that
disappeared, and re-runs synchronous convergence from there.
"""

from __future__ import annotations

import hashlib
import re
import shlex
from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np

from .dv import (
    INFINITY,
    RouteEntry,
    RoutingState,
    build_neighbor_graph,
    converge,
    init_tables,
    subnet_distances,
)
from .model import IDENT_RE, Component, Feature, ImplementsLink, SplModel
from .partition import COMPONENT, FEATURE, Address, AddressPlan, Partition
from .world import LogEntry, World

# -- change operations ------------------------------------------------------


@dataclass(frozen=True)
class AddFeature:
    id: str
    name: str

    def text(self) -> str:
        return f'add-feature {self.id} "{self.name}"'


@dataclass(frozen=True)
class RemoveFeature:
    id: str

    def text(self) -> str:
        return f"remove-feature {self.id}"


@dataclass(frozen=True)
class AddComponent:
    id: str
    name: str

    def text(self) -> str:
        return f'add-component {self.id} "{self.name}"'


@dataclass(frozen=True)
class RemoveComponent:
    id: str

    def text(self) -> str:
        return f"remove-component {self.id}"


@dataclass(frozen=True)
class AddLink:
    feature: str
    component: str

    def text(self) -> str:
        return f"add-link {self.feature} {self.component}"


@dataclass(frozen=True)
class RemoveLink:
    feature: str
    component: str

    def text(self) -> str:
        return f"remove-link {self.feature} {self.component}"


ChangeOp = Union[AddFeature, RemoveFeature, AddComponent, RemoveComponent, AddLink, RemoveLink]

_OPS = {
    "add-feature": (AddFeature, ("id", "name")),
    "remove-feature": (RemoveFeature, ("id",)),
    "add-component": (AddComponent, ("id", "name")),
    "remove-component": (RemoveComponent, ("id",)),
    "add-link": (AddLink, ("id", "id")),
    "remove-link": (RemoveLink, ("id", "id")),
}
_NAME_RE = re.compile(r'"([^"]+)"\Z')


class ChangeSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def parse_changes(text: str) -> list[ChangeOp]:
    ops = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        kw, _, rest = line.partition(" ")
        if kw not in _OPS:
            raise ChangeSyntaxError(f"unknown change {kw!r}", lineno)
        cls, kinds = _OPS[kw]
        try:
            parts = shlex.split(rest, posix=False)
        except ValueError as exc:
            raise ChangeSyntaxError(str(exc), lineno) from None
        if len(parts) != len(kinds):
            raise ChangeSyntaxError(f"{kw} takes {len(kinds)} arguments", lineno)
        args = []
        for p, k in zip(parts, kinds):
            if k == "id":
                if not IDENT_RE.match(p):
                    raise ChangeSyntaxError(f"expected identifier, got {p!r}", lineno)
                args.append(p)
            else:
                m = _NAME_RE.match(p)
                if not m or not m.group(1).strip():
                    raise ChangeSyntaxError(f"expected quoted name, got {p!r}", lineno)
                args.append(m.group(1))
        ops.append(cls(*args))
    return ops


def _strip_comment(line: str) -> str:
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return line[:i]
    return line


# -- errors -----------------------------------------------------------------


class ChangeError(Exception):
    """A change could not be applied; the world is left untouched."""

    index: int | None = None
    world: World | None = None
    reports: list | None = None


class UnknownIdError(ChangeError):
    pass


class DuplicateIdError(ChangeError):
    pass


class DuplicateLinkError(ChangeError):
    pass


# -- report -----------------------------------------------------------------


@dataclass(frozen=True)
class TableChange:
    router: str
    dest: int
    before: RouteEntry | None
    after: RouteEntry | None


@dataclass(frozen=True)
class AdjustmentReport:
    op: ChangeOp
    affected_subnets: tuple[int, ...]
    retired_addresses: tuple[Address, ...]
    new_addresses: tuple[Address, ...]
    promoted: tuple[str, ...]
    demoted: tuple[str, ...]
    table_delta: tuple[TableChange, ...]
    reach_delta: tuple[tuple[int, int, int, int], ...]  # (src, dst, before, after)
    impacted_features: tuple[str, ...]
    impacted_products: tuple[str, ...]
    rounds_run: int

    def render(self) -> str:
        def ids(xs):
            return " ".join(str(x) for x in xs) if xs else "-"

        def route(e):
            if e is None:
                return "none"
            d = "inf" if e.distance >= INFINITY else str(e.distance)
            return f"{e.next_hop if e.next_hop is not None else '-'}/{d}"

        def dist(d):
            return "inf" if d >= INFINITY else str(d)

        lines = [
            f"change: {self.op.text()}",
            f"affected-subnets: {ids(self.affected_subnets)}",
            f"retired: {ids(self.retired_addresses)}",
            f"new: {ids(self.new_addresses)}",
            f"promoted: {ids(self.promoted)}",
            f"demoted: {ids(self.demoted)}",
            f"table-delta: {len(self.table_delta)}",
        ]
        for t in self.table_delta:
            lines.append(f"  {t.router}\t{t.dest}\t{route(t.before)} -> {route(t.after)}")
        lines.append(f"reach-delta: {len(self.reach_delta)}")
        for s, d, b, a in self.reach_delta:
            lines.append(f"  {s} -> {d}\t{dist(b)} -> {dist(a)}")
        lines.append(f"impacted-features: {ids(self.impacted_features)}")
        lines.append(f"impacted-products: {ids(self.impacted_products)}")
        lines.append(f"rounds: {self.rounds_run}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()[:16]


# -- incremental update -----------------------------------------------------


def _check(model: SplModel, op: ChangeOp) -> None:
    if isinstance(op, (AddFeature, AddComponent)):
        if model.has_element(op.id):
            raise DuplicateIdError(f"element id {op.id!r} already in use")
        if not op.name.strip():
            raise ChangeError("name must be non-empty")
    elif isinstance(op, RemoveFeature):
        if not model.has_feature(op.id):
            raise UnknownIdError(f"unknown feature {op.id!r}")
    elif isinstance(op, RemoveComponent):
        if not model.has_component(op.id):
            raise UnknownIdError(f"unknown component {op.id!r}")
    elif isinstance(op, (AddLink, RemoveLink)):
        if not model.has_feature(op.feature):
            raise UnknownIdError(f"unknown feature {op.feature!r}")
        if not model.has_component(op.component):
            raise UnknownIdError(f"unknown component {op.component!r}")
        linked = model.has_link(op.feature, op.component)
        if isinstance(op, AddLink) and linked:
            raise DuplicateLinkError(f"link {op.feature} {op.component} already exists")
        if isinstance(op, RemoveLink) and not linked:
            raise UnknownIdError(f"no link {op.feature} {op.component}")
    else:
        raise TypeError(f"not a change operation: {op!r}")


class _PlanEdit:
    """Mutable working copy of partition + plan for one change."""

    def __init__(self, partition: Partition, plan: AddressPlan):
        self.feature_subnet = dict(partition.feature_subnet)
        self.membership = {s: set(m) for s, m in partition.membership.items()}
        self.addresses = {e: list(a) for e, a in plan.addresses.items()}
        self.next_subnet = plan.next_subnet
        self.next_element = dict(plan.next_element)
        self.retired: list[Address] = []
        self.new: list[Address] = []
        self.affected: set[int] = set()

    def retire(self, element: str, subnet: int) -> None:
        addrs = self.addresses[element]
        a = next(x for x in addrs if x.subnet == subnet)
        addrs.remove(a)
        if not addrs:
            del self.addresses[element]
        self.membership[subnet].discard(element)
        self.retired.append(a)
        self.affected.add(subnet)

    def add_feature(self, fid: str) -> None:
        s = self.next_subnet
        self.next_subnet += 1
        self.feature_subnet[fid] = s
        self.membership[s] = {fid}
        self.next_element[s] = 1
        a = Address(s, FEATURE, 0)
        self.addresses[fid] = [a]
        self.new.append(a)
        self.affected.add(s)

    def remove_feature(self, fid: str) -> None:
        s = self.feature_subnet.pop(fid)
        for e in sorted(self.membership[s]):
            self.retire(e, s)
        del self.membership[s]
        del self.next_element[s]

    def add_link(self, fid: str, cid: str) -> None:
        s = self.feature_subnet[fid]
        n = self.next_element[s]
        self.next_element[s] = n + 1
        a = Address(s, COMPONENT, n)
        self.addresses.setdefault(cid, []).append(a)
        self.membership[s].add(cid)
        self.new.append(a)
        self.affected.add(s)

    def remove_component(self, cid: str) -> None:
        for a in list(self.addresses.get(cid, ())):
            self.retire(cid, a.subnet)

    def freeze(self) -> tuple[Partition, AddressPlan]:
        partition = Partition(
            dict(sorted(self.feature_subnet.items(), key=lambda kv: kv[1])),
            {s: frozenset(m) for s, m in sorted(self.membership.items())},
        )
        addresses = {e: tuple(sorted(a)) for e, a in self.addresses.items()}
        routers = frozenset(e for e, a in addresses.items() if len(a) >= 2 and a[0].category == COMPONENT)
        plan = AddressPlan(addresses, routers, self.next_subnet, self.next_element)
        return partition, plan


def carry_tables(old: RoutingState, fresh: RoutingState, plan: AddressPlan) -> RoutingState:
    """Seed ``fresh`` (an initialised state for the new topology) with every
    old entry whose whole next-hop chain still exists; everything else stays
    at its initial value, i.e. poisoned to INFINITY."""
    owner = plan.owner_map()
    new_routers = {r: i for i, r in enumerate(fresh.routers)}
    new_subnets = {s: j for j, s in enumerate(fresh.subnets)}
    memo: dict[tuple[int, int], bool] = {}

    def still_valid(i: int, j: int) -> bool:
        key = (i, j)
        if key in memo:
            return memo[key]
        memo[key] = False  # guards against cycles in a non-converged input
        r = old.routers[i]
        ok = False
        d = int(old.dist[i, j])
        if d < INFINITY and r in new_routers and old.subnets[j] in new_subnets:
            hs, he = int(old.hop_subnet[i, j]), int(old.hop_element[i, j])
            hop = Address(hs, COMPONENT, he)
            n = int(old.hop_router[i, j])
            if d == 0:
                ok = owner.get(hop) == r
            else:
                ok = (
                    owner.get(hop) == old.routers[n]
                    and old.routers[n] in new_routers
                    and owner.get(_own_address(old, i, hs)) == r
                    and still_valid(n, j)
                )
        memo[key] = ok
        return ok

    dist = fresh.dist.copy()
    hr, hs_, he_ = fresh.hop_router.copy(), fresh.hop_subnet.copy(), fresh.hop_element.copy()
    for i, r in enumerate(old.routers):
        if r not in new_routers:
            continue
        ni = new_routers[r]
        for j, s in enumerate(old.subnets):
            if s not in new_subnets or not still_valid(i, j):
                continue
            nj = new_subnets[s]
            dist[ni, nj] = old.dist[i, j]
            hr[ni, nj] = new_routers[old.routers[old.hop_router[i, j]]]
            hs_[ni, nj] = old.hop_subnet[i, j]
            he_[ni, nj] = old.hop_element[i, j]
    return fresh.with_tables(dist, hr, hs_, he_)


def _own_address(state: RoutingState, i: int, subnet: int) -> Address | None:
    for a in state.router_addresses[i]:
        if a.subnet == subnet:
            return a
    return None


def apply_change(
    world: World,
    op: ChangeOp,
    max_rounds: int | None = None,
    backend: str | None = None,
    observer: Callable[[int, RoutingState], None] | None = None,
) -> tuple[World, AdjustmentReport]:
    """Apply one change and reconverge. Raises ChangeError with ``world``
    untouched when the change is invalid."""
    model = world.model
    _check(model, op)
    edit = _PlanEdit(world.partition, world.plan)
    touched_component = None
    removed_features: list[str] = []

    if isinstance(op, AddFeature):
        new_model = model.with_feature(Feature(op.id, op.name))
        edit.add_feature(op.id)
    elif isinstance(op, RemoveFeature):
        new_model = model.without_feature(op.id)
        removed_features.append(op.id)
        edit.remove_feature(op.id)
    elif isinstance(op, AddComponent):
        new_model = model.with_component(Component(op.id, op.name))
    elif isinstance(op, RemoveComponent):
        new_model = model.without_component(op.id)
        touched_component = op.id
        edit.remove_component(op.id)
    elif isinstance(op, AddLink):
        new_model = model.with_link(ImplementsLink(op.feature, op.component))
        touched_component = op.component
        edit.add_link(op.feature, op.component)
    else:  # RemoveLink
        new_model = model.without_link(ImplementsLink(op.feature, op.component))
        touched_component = op.component
        edit.retire(op.component, world.partition.feature_subnet[op.feature])

    partition, plan = edit.freeze()
    graph = build_neighbor_graph(partition, plan.routers)
    fresh = init_tables(partition, plan.routers, graph, plan)
    state = carry_tables(world.state, fresh, plan)
    if observer is not None:
        observer(0, state)
    state = converge(state, max_rounds, backend, observer)

    old_sf = world.partition.feature_subnet
    impacted_features = sorted(
        {f for f, s in old_sf.items() if s in edit.affected}
        | {f for f, s in partition.feature_subnet.items() if s in edit.affected}
    )
    dead_vps = set()
    if touched_component is not None:
        dead_vps = {vp.id for vp in model.component(touched_component).variation_points}
    impacted_products = sorted(
        p.id for p in model.products
        if set(p.included_features) & set(impacted_features)
        or any(b[0] in dead_vps for b in p.bindings)
    )

    report = AdjustmentReport(
        op=op,
        affected_subnets=tuple(sorted(edit.affected)),
        retired_addresses=tuple(sorted(edit.retired)),
        new_addresses=tuple(sorted(edit.new)),
        promoted=tuple(sorted(plan.routers - world.plan.routers)),
        demoted=tuple(sorted(world.plan.routers - plan.routers)),
        table_delta=table_delta(world.state, state),
        reach_delta=reach_delta(world.state, state),
        impacted_features=tuple(impacted_features),
        impacted_products=tuple(impacted_products),
        rounds_run=state.rounds_run,
    )
    seq = len(world.log) + 1
    new_world = replace(
        world,
        model=new_model,
        partition=partition,
        plan=plan,
        state=state,
        log=world.log + (LogEntry(seq, op, report.digest()),),
    )
    return new_world, report


def table_delta(before: RoutingState, after: RoutingState) -> tuple[TableChange, ...]:
    """Entries of post-change routers whose (next hop, distance) differ."""
    old_routers = set(before.routers)
    old_subnets = set(before.subnets)
    out = []
    for r in after.routers:
        for s in sorted(set(after.subnets) | (old_subnets if r in old_routers else set())):
            b = before.entry(r, s) if r in old_routers and s in old_subnets else None
            a = after.entry(r, s) if s in after.subnets else None
            if b != a:
                out.append(TableChange(r, s, b, a))
    return tuple(out)


def reach_delta(before: RoutingState, after: RoutingState) -> tuple[tuple[int, int, int, int], ...]:
    """Subnetwork pairs, live before and after, whose router-hop distance moved."""
    common = sorted(set(before.subnets) & set(after.subnets))
    if not common:
        return ()
    bi = [before.subnets.index(s) for s in common]
    ai = [after.subnets.index(s) for s in common]
    bd = subnet_distances(before)[np.ix_(bi, bi)]
    ad = subnet_distances(after)[np.ix_(ai, ai)]
    out = []
    for x, y in zip(*np.nonzero(bd != ad)):
        out.append((common[x], common[y], int(bd[x, y]), int(ad[x, y])))
    return tuple(out)


def apply_changes(
    world: World,
    ops,
    max_rounds: int | None = None,
    backend: str | None = None,
) -> tuple[World, list[AdjustmentReport]]:
    """Sequential fold of ``apply_change``. On failure the raised ChangeError
    carries ``index``, and the prefix result in ``world`` / ``reports``."""
    reports: list[AdjustmentReport] = []
    for i, op in enumerate(ops):
        try:
            world, rep = apply_change(world, op, max_rounds, backend)
        except ChangeError as exc:
            exc.index = i
            exc.world = world
            exc.reports = reports
            raise
        reports.append(rep)
    return world, reports


def event_log(world: World) -> list[tuple[int, ChangeOp, str]]:
    return [(e.seq, e.op, e.digest) for e in world.log]
