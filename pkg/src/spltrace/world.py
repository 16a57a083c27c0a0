"""A converged snapshot: model, partition, addresses and routing tables."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .dv import RoutingState, build_neighbor_graph, converge, init_tables
from .model import SplModel, serialize_model
from .partition import (
    DEFAULT_SUBNET_BASE,
    AddressPlan,
    AllocationSeed,
    Partition,
    allocate_addresses,
    derive_partition,
    identify_routers,
)


class VariantAllocator:
    """Per-subnetwork counters for application-engineering variant ids.

    Kept outside the address plan so binding never touches the serialized
    domain-engineering world. Shared by every snapshot derived from one load.
    """

    def __init__(self):
        self._next: dict[int, int] = {}
        self._lock = threading.Lock()

    def take(self, subnet: int, floor: int) -> int:
        with self._lock:
            n = max(self._next.get(subnet, 0), floor)
            self._next[subnet] = n + 1
            return n


@dataclass(frozen=True)
class LogEntry:
    seq: int
    op: object  # reconcile.ChangeOp
    digest: str


@dataclass(frozen=True)
class World:
    model: SplModel
    partition: Partition
    plan: AddressPlan
    state: RoutingState
    subnet_base: int = DEFAULT_SUBNET_BASE
    log: tuple[LogEntry, ...] = ()
    variants: VariantAllocator = field(default_factory=VariantAllocator, compare=False, repr=False)

    @property
    def version(self) -> int:
        return len(self.log)

    @property
    def routers(self) -> frozenset[str]:
        return self.plan.routers

    def table_dump(self) -> str:
        return self.state.dump()

    def serialize_de(self) -> str:
        """Everything the domain-engineering phase owns, as text."""
        return (
            "%% model\n" + serialize_model(self.model)
            + "%% plan\n" + self.plan.serialize()
            + "%% tables\n" + self.table_dump()
        )


def build_world(
    model: SplModel,
    subnet_base: int = DEFAULT_SUBNET_BASE,
    seed: AllocationSeed | None = None,
    max_rounds: int | None = None,
    backend: str | None = None,
    log: tuple[LogEntry, ...] = (),
) -> World:
    """Derive everything from scratch and converge the routing tables."""
    partition = derive_partition(model, subnet_base, seed)
    plan = allocate_addresses(model, partition, subnet_base, seed)
    routers = identify_routers(partition)
    assert routers == plan.routers
    graph = build_neighbor_graph(partition, routers)
    state = init_tables(partition, routers, graph, plan)
    state = converge(state, max_rounds, backend)
    return World(model, partition, plan, state, subnet_base, log)


def rebuild(world: World, backend: str | None = None) -> World:
    """Tear down and rebuild from the model, seeded with the world's
    persisted allocation state."""
    return build_world(
        world.model, world.subnet_base, AllocationSeed.from_plan(world.plan),
        backend=backend, log=world.log,
    )
