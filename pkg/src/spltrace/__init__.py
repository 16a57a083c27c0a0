"""Dynamic feature-to-component tracing for product lines, built on
distance-vector routing between multi-homed components."""

__version__ = "0.1.0"

from .archive import dump_archive, load_archive
from .dv import INFINITY, RouteEntry, RoutingState, best_next_hop, converge, exchange_round
from .model import SplModel, parse_model, serialize_model, validate
from .partition import Address, AddressPlan, Partition, resolve
from .query import bind_product, demand_trace, impact, neighbors, trace
from .reconcile import (
    AddComponent, AddFeature, AddLink, RemoveComponent, RemoveFeature, RemoveLink,
    apply_change, apply_changes, event_log, parse_changes,
)
from .world import World, build_world, rebuild

__all__ = [
    "AddComponent", "AddFeature", "AddLink", "RemoveComponent", "RemoveFeature", "RemoveLink",
    "dump_archive", "load_archive",
    "INFINITY", "Address", "AddressPlan", "Partition", "RouteEntry", "RoutingState", "SplModel", "World",
    "apply_change", "apply_changes", "best_next_hop", "bind_product", "build_world", "converge",
    "demand_trace", "event_log", "exchange_round", "impact", "neighbors", "parse_changes",
    "parse_model", "rebuild", "resolve", "serialize_model", "trace", "validate",
]
