import numpy as np
import pytest

from oracles import element_distance
from spltrace.model import parse_model
from spltrace.partition import Address
from spltrace.query import (
    BindingError,
    NoAddressError,
    UnknownElementError,
    UnreachableError,
    bind_product,
    demand_trace,
    impact,
    neighbors,
    trace,
)
from spltrace.reconcile import RemoveComponent, apply_change
from spltrace.synth import random_model
from spltrace.world import build_world

ISLANDS = (
    'feature a "A"\nfeature b "B"\nfeature c "C"\nfeature d "D"\n'
    'component x "X"\ncomponent y "Y"\ncomponent lone "Lone"\nlink a x\nlink b x\nlink c y\nlink d y\n'
)


def test_trace_hierarchy_to_tariff(telecom):
    path = trace(telecom, "hierarchy-validation", "tariff")
    assert path.router_hops == 1
    # two equal-cost paths exist (via network-parameters into 12, via
    # offer-validation into 11); the smaller destination subnetwork wins
    assert [str(a) for a in path.hops] == ["13|0|0", "13|1|2", "11|1|1", "11|1|2"]
    owners = {telecom.plan.owner_map()[a] for a in path.hops[1:-1]}
    assert owners == {"offer-validation"}


def test_both_one_hop_paths_exist(telecom):
    via_np = trace(telecom, "hierarchy-validation", "offer-duration")
    assert via_np.router_hops == 1
    assert [str(a) for a in via_np.hops] == ["13|0|0", "13|1|1", "12|1|2", "12|1|5"]


def test_trace_shared_subnet(telecom):
    path = trace(telecom, "offer-elaboration", "flow")
    assert path.router_hops == 0
    assert path.hops == (Address(12, 0, 0), Address(12, 1, 3))


def test_trace_render(telecom):
    assert trace(telecom, "offer-elaboration", "flow").render() == "12|0|0\n12|1|3\nrouter-hops: 0\n"


def test_trace_errors():
    w = build_world(parse_model(ISLANDS))
    with pytest.raises(UnreachableError):
        trace(w, "a", "d")
    with pytest.raises(NoAddressError):
        trace(w, "a", "lone")
    with pytest.raises(UnknownElementError):
        trace(w, "a", "ghost")


def test_neighbors_of_network_parameters(telecom):
    level1 = neighbors(telecom, "network-parameters", 1)
    assert {"tariff", "offer-duration"} <= set(level1)
    assert "network-parameters" not in level1
    assert "telecom-regulator-validation" in neighbors(telecom, "network-parameters", 2)


def test_neighbors_singleton_subnet():
    w = build_world(parse_model('feature a "A"\nfeature b "B"\ncomponent c "C"\nlink b c\n'))
    assert neighbors(w, "a", 1) == []


def test_neighbor_levels_partition_reachable_set(telecom):
    levels = [set(neighbors(telecom, "flow", k)) for k in range(1, 5)]
    for i in range(len(levels)):
        for j in range(i + 1, len(levels)):
            assert not levels[i] & levels[j]
    reachable = set(telecom.plan.addresses) - {"flow"}
    assert set().union(*levels) == reachable


def test_impact(telecom):
    imp = impact(telecom, "tariff")
    assert imp.features == ("offer-elaboration", "telecom-regulator-validation")
    assert imp.subnets == (11, 12)
    assert imp.products == ("prepaid-offer", "regulated-offer")
    f = impact(telecom, "hierarchy-validation")
    assert f.features == ("hierarchy-validation",)
    assert f.products == ("draft-offer", "regulated-offer")
    assert imp.render().startswith("features:\n  offer-elaboration\n")


def test_impact_unlinked_and_unknown():
    w = build_world(parse_model(ISLANDS))
    imp = impact(w, "lone")
    assert imp.features == () and imp.subnets == () and imp.products == ()
    with pytest.raises(UnknownElementError):
        impact(w, "ghost")


def test_bind_zero_bindings_leaves_world_untouched(telecom):
    before = telecom.serialize_de()
    bound = bind_product(telecom, "draft-offer")
    assert bound.variant_addresses == {} and bound.demand_traces == {}
    assert telecom.serialize_de() == before
    assert "0 variant addresses allocated" in bound.render()


def test_bind_one_variant(telecom):
    before = telecom.serialize_de()
    bound = bind_product(telecom, "prepaid-offer")
    addrs = bound.variant_addresses[("tariff-plan", "prepaid")]
    # host tariff serves offer-elaboration (subnet 12); elements 1-5 are taken
    assert addrs == (Address(12, 1, 6),)
    assert telecom.serialize_de() == before
    again = bind_product(telecom, "prepaid-offer")
    assert again.variant_addresses[("tariff-plan", "prepaid")] != addrs
    assert telecom.serialize_de() == before


def test_bind_errors(telecom):
    with pytest.raises(UnknownElementError):
        bind_product(telecom, "nope")
    text = (
        'feature a "A"\nfeature b "B"\ncomponent c "C"\nvp c v "V"\nvariant v x "X"\n'
        'link a c\nproduct p "P"\ninclude p b\nbind p v x\n'
    )
    with pytest.raises(BindingError):
        bind_product(build_world(parse_model(text)), "p")


def test_demand_trace_memoised(telecom):
    bound = bind_product(telecom, "regulated-offer")
    p1 = demand_trace(bound, telecom, "hierarchy-validation", "tariff")
    p2 = demand_trace(bound, telecom, "hierarchy-validation", "tariff")
    assert p1 is p2 and len(bound.demand_traces) == 1


def test_demand_trace_to_variant(telecom):
    bound = bind_product(telecom, "prepaid-offer")
    (v,) = bound.variant_addresses[("tariff-plan", "prepaid")]
    path = demand_trace(bound, telecom, "offer-elaboration", "tariff-plan:prepaid")
    assert path.hops == (Address(12, 0, 0), Address(12, 1, 4), v)
    assert path.router_hops == 0

    bound = bind_product(telecom, "regulated-offer")
    path = demand_trace(bound, telecom, "hierarchy-validation", "commitment:months-24")
    base = trace(telecom, "hierarchy-validation", "offer-duration")
    (v,) = bound.variant_addresses[("commitment", "months-24")]
    assert path.hops == base.hops + (v,)
    assert path.router_hops == base.router_hops == 1


def test_demand_trace_out_of_scope(telecom):
    bound = bind_product(telecom, "prepaid-offer")
    with pytest.raises(NoAddressError):
        demand_trace(bound, telecom, "hierarchy-validation", "flow")


def test_demand_traces_invalidated_by_changes(telecom):
    bound = bind_product(telecom, "regulated-offer")
    demand_trace(bound, telecom, "hierarchy-validation", "tariff")
    w, _ = apply_change(telecom, RemoveComponent("flow"))
    demand_trace(bound, w, "offer-elaboration", "tariff")
    assert list(bound.demand_traces) == [("offer-elaboration", "tariff")]


@pytest.mark.parametrize("seed", range(30))
def test_trace_properties_random(seed):
    rng = np.random.default_rng(7000 + seed)
    m = random_model(rng, int(rng.integers(2, 12)), int(rng.integers(2, 30)), rng.uniform(0.05, 0.5))
    w = build_world(m)
    owner = w.plan.owner_map()
    elems = sorted(w.plan.addresses)
    for _ in range(15):
        a, b = rng.choice(elems, 2, replace=False)
        expected = element_distance(m, a, b)
        try:
            p = trace(w, a, b)
        except UnreachableError:
            assert expected >= 16
            with pytest.raises(UnreachableError):
                trace(w, b, a)
            continue
        assert p.router_hops == expected
        assert trace(w, b, a).router_hops == expected
        assert owner[p.hops[0]] == a and owner[p.hops[-1]] == b
        for x, y in zip(p.hops, p.hops[1:]):
            assert x != y
            assert x.subnet == y.subnet or owner[x] == owner[y]
        routers = {owner[h] for h in p.hops[1:-1]}
        assert len(routers) == p.router_hops
        # impact / trace consistency for feature -> component
        if a in {f.id for f in m.features} and b not in {f.id for f in m.features}:
            assert (a in impact(w, b).features) == (p.router_hops == 0)
