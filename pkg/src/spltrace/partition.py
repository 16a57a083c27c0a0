"""Subnetwork partition, router identification and 3-part addressing.

Every feature anchors one subnetwork. A component belongs to the subnetwork
of each feature it implements and receives one address per membership;
components with two or more addresses are routers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .model import SplModel

DEFAULT_SUBNET_BASE = 11

FEATURE = 0
COMPONENT = 1

_ADDR_RE = re.compile(r"(\d+)\|([01])\|(\d+)\Z")


class UnknownAddressError(LookupError):
    pass


@dataclass(frozen=True, order=True)
class Address:
    subnet: int
    category: int
    element: int

    def __str__(self) -> str:
        return f"{self.subnet}|{self.category}|{self.element}"

    @classmethod
    def parse(cls, text: str) -> Address:
        m = _ADDR_RE.match(text.strip())
        if not m:
            raise ValueError(f"malformed address {text!r}")
        return cls(int(m.group(1)), int(m.group(2)), int(m.group(3)))


@dataclass(frozen=True)
class Partition:
    feature_subnet: Mapping[str, int]
    membership: Mapping[int, frozenset[str]]

    @property
    def subnets(self) -> list[int]:
        return sorted(self.membership)

    def subnet_feature(self, subnet: int) -> str:
        for f, s in self.feature_subnet.items():
            if s == subnet:
                return f
        raise KeyError(subnet)

    def subnets_of(self, element: str) -> list[int]:
        return sorted(s for s, members in self.membership.items() if element in members)


@dataclass(frozen=True)
class AddressPlan:
    addresses: Mapping[str, tuple[Address, ...]]
    routers: frozenset[str]
    next_subnet: int
    next_element: Mapping[int, int]
    _owner: dict = field(default=None, init=False, repr=False, compare=False)

    def owner_map(self) -> dict[Address, str]:
        if self._owner is None:
            owner = {a: e for e, addrs in self.addresses.items() for a in addrs}
            object.__setattr__(self, "_owner", owner)
        return self._owner

    def address_in(self, element: str, subnet: int) -> Address | None:
        for a in self.addresses.get(element, ()):
            if a.subnet == subnet:
                return a
        return None

    def live_addresses(self) -> frozenset[Address]:
        return frozenset(self.owner_map())

    def serialize(self) -> str:
        """Counters then address records, one per line, sorted."""
        lines = [f"next-subnet {self.next_subnet}"]
        for s in sorted(self.next_element):
            lines.append(f"next-element {s} {self.next_element[s]}")
        for addr, elem in sorted(self.owner_map().items()):
            lines.append(f"addr {addr} {elem}")
        return "".join(l + "\n" for l in lines)


@dataclass(frozen=True)
class AllocationSeed:
    """Persisted allocation state used to rebuild a world: counters plus the
    address records of elements that already hold addresses."""

    next_subnet: int
    next_element: Mapping[int, int]
    records: Mapping[tuple[str, int], Address]  # (element, subnet) -> address

    @classmethod
    def from_plan(cls, plan: AddressPlan) -> AllocationSeed:
        records = {(e, a.subnet): a for e, addrs in plan.addresses.items() for a in addrs}
        return cls(plan.next_subnet, dict(plan.next_element), records)

    @classmethod
    def parse(cls, text: str) -> AllocationSeed:
        next_subnet = None
        next_element: dict[int, int] = {}
        records: dict[tuple[str, int], Address] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                if parts[0] == "next-subnet" and len(parts) == 2:
                    next_subnet = int(parts[1])
                elif parts[0] == "next-element" and len(parts) == 3:
                    next_element[int(parts[1])] = int(parts[2])
                elif parts[0] == "addr" and len(parts) == 3:
                    a = Address.parse(parts[1])
                    records[(parts[2], a.subnet)] = a
                else:
                    raise ValueError(f"unrecognised record {line!r}")
            except ValueError as exc:
                raise ValueError(f"plan line {lineno}: {exc}") from None
        if next_subnet is None:
            raise ValueError("plan has no next-subnet record")
        return cls(next_subnet, next_element, records)


def derive_partition(
    model: SplModel,
    subnet_base: int = DEFAULT_SUBNET_BASE,
    seed: AllocationSeed | None = None,
) -> Partition:
    """One subnetwork per feature, numbered in declaration order.

    With a seed, features that already own a subnetwork keep it and new
    features continue from the seed's counter.
    """
    if subnet_base < 1:
        raise ValueError("subnet_base must be >= 1")
    next_subnet = subnet_base if seed is None else max(subnet_base, seed.next_subnet)
    seeded = {} if seed is None else {
        elem: a.subnet for (elem, _), a in seed.records.items() if a.category == FEATURE
    }
    feature_subnet: dict[str, int] = {}
    for f in model.features:
        s = seeded.get(f.id)
        if s is None:
            s = next_subnet
            next_subnet += 1
        feature_subnet[f.id] = s
    members: dict[int, set[str]] = {s: {f} for f, s in feature_subnet.items()}
    for l in model.links:
        members[feature_subnet[l.feature]].add(l.component)
    return Partition(feature_subnet, {s: frozenset(m) for s, m in members.items()})


def identify_routers(partition: Partition) -> frozenset[str]:
    """Components that sit in two or more subnetworks."""
    features = set(partition.feature_subnet)
    counts: dict[str, int] = {}
    for members in partition.membership.values():
        for e in members:
            if e not in features:
                counts[e] = counts.get(e, 0) + 1
    return frozenset(e for e, n in counts.items() if n >= 2)


def allocate_addresses(
    model: SplModel,
    partition: Partition,
    subnet_base: int = DEFAULT_SUBNET_BASE,
    seed: AllocationSeed | None = None,
) -> AddressPlan:
    """Assign ``subnet|category|element`` addresses.

    The feature is element 0 of its subnetwork; components take 1, 2, ... in
    link declaration order. Seeded records are reused verbatim and counters
    never move backwards, so retired ids are not reissued.
    """
    used = set(partition.feature_subnet.values())
    next_subnet = max([subnet_base] + [s + 1 for s in used])
    next_element: dict[int, int] = {}
    if seed is not None:
        next_subnet = max(next_subnet, seed.next_subnet)
        for s in used:
            if s in seed.next_element:
                next_element[s] = seed.next_element[s]

    addresses: dict[str, list[Address]] = {}

    def take(elem: str, subnet: int, category: int) -> Address:
        if seed is not None and (elem, subnet) in seed.records:
            a = seed.records[(elem, subnet)]
            next_element[subnet] = max(next_element.get(subnet, 1), a.element + 1)
            return a
        if category == FEATURE:
            next_element[subnet] = max(next_element.get(subnet, 1), 1)
            return Address(subnet, FEATURE, 0)
        n = next_element.get(subnet, 1)
        next_element[subnet] = n + 1
        return Address(subnet, COMPONENT, n)

    for f in model.features:
        s = partition.feature_subnet[f.id]
        addresses[f.id] = [take(f.id, s, FEATURE)]
    for l in model.links:
        s = partition.feature_subnet[l.feature]
        addresses.setdefault(l.component, []).append(take(l.component, s, COMPONENT))

    frozen = {e: tuple(sorted(a)) for e, a in addresses.items()}
    routers = frozenset(e for e, a in frozen.items() if len(a) >= 2 and a[0].category == COMPONENT)
    return AddressPlan(frozen, routers, next_subnet, next_element)


def resolve(plan: AddressPlan, address: Address) -> str:
    try:
        return plan.owner_map()[address]
    except KeyError:
        raise UnknownAddressError(f"no live element at {address}") from None


def render_partition(partition: Partition, plan: AddressPlan, model: SplModel) -> str:
    """Human-readable partition dump, deterministic."""
    owner = plan.owner_map()
    lines = []
    for s in partition.subnets:
        lines.append(f"subnet {s}\t{partition.subnet_feature(s)}")
        for a in sorted(x for x in owner if x.subnet == s):
            lines.append(f"  {a}\t{owner[a]}")
    for c in model.components:
        if c.id in plan.routers:
            addrs = " ".join(str(a) for a in plan.addresses[c.id])
            lines.append(f"router\t{c.id}\t{addrs}")
    return "".join(l + "\n" for l in lines)


def addresses_text(addrs: Iterable[Address]) -> str:
    return " ".join(str(a) for a in sorted(addrs))
