import numpy as np
import pytest

from oracles import router_oracle
from spltrace.model import Feature, ImplementsLink, parse_model
from spltrace.partition import (
    Address,
    AllocationSeed,
    UnknownAddressError,
    allocate_addresses,
    derive_partition,
    identify_routers,
    resolve,
)
from spltrace.synth import random_model


def plan_for(model, base=11):
    part = derive_partition(model, base)
    return part, allocate_addresses(model, part, base)


def test_fixture_three_subnetworks(telecom_model):
    part = derive_partition(telecom_model)
    assert part.subnets == [11, 12, 13]
    assert part.feature_subnet["offer-elaboration"] == 12
    assert part.feature_subnet["hierarchy-validation"] == 13


def test_single_feature_membership():
    m = parse_model('feature f1 "F"\ncomponent c1 "A"\ncomponent c2 "B"\nlink f1 c1\nlink f1 c2\n')
    part = derive_partition(m)
    assert dict(part.membership) == {11: frozenset({"f1", "c1", "c2"})}
    assert identify_routers(part) == frozenset()


def test_empty_model():
    part, plan = plan_for(parse_model(""))
    assert part.membership == {} and plan.addresses == {} and plan.routers == frozenset()


def test_fixture_routers(telecom_model):
    # brute-force membership count, straight from the link list
    counts = {}
    for l in telecom_model.links:
        counts[l.component] = counts.get(l.component, 0) + 1
    expected = {c for c, n in counts.items() if n >= 2}
    assert expected == {"network-parameters", "offer-validation", "tariff"}
    assert identify_routers(derive_partition(telecom_model)) == expected


def test_two_features_without_sharing():
    m = parse_model('feature a "A"\nfeature b "B"\ncomponent x "X"\ncomponent y "Y"\nlink a x\nlink b y\n')
    assert identify_routers(derive_partition(m)) == frozenset()


def test_network_parameters_addresses(telecom_model):
    _, plan = plan_for(telecom_model)
    assert [str(a) for a in plan.addresses["network-parameters"]] == ["12|1|2", "13|1|1"]
    assert [str(a) for a in plan.addresses["flow"]] == ["12|1|3"]
    assert [str(a) for a in plan.addresses["hierarchy-validation"]] == ["13|0|0"]


def test_allocation_rule_by_hand():
    m = parse_model(
        'feature a "A"\nfeature b "B"\ncomponent x "X"\ncomponent y "Y"\n'
        "link b y\nlink a x\nlink b x\n"
    )
    _, plan = plan_for(m, base=5)
    assert {e: [str(x) for x in a] for e, a in plan.addresses.items()} == {
        "a": ["5|0|0"], "b": ["6|0|0"], "x": ["5|1|1", "6|1|2"], "y": ["6|1|1"],
    }
    assert plan.next_subnet == 7
    assert dict(plan.next_element) == {5: 2, 6: 3}


def test_reallocation_is_deterministic(telecom_model):
    assert plan_for(telecom_model)[1].serialize() == plan_for(telecom_model)[1].serialize()


def test_resolve(telecom_model):
    _, plan = plan_for(telecom_model)
    assert resolve(plan, Address(13, 0, 0)) == "hierarchy-validation"
    assert resolve(plan, Address(12, 1, 2)) == resolve(plan, Address(13, 1, 1)) == "network-parameters"
    with pytest.raises(UnknownAddressError):
        resolve(plan, Address(12, 1, 99))


def test_address_text_round_trip():
    assert str(Address.parse("13|1|1")) == "13|1|1"
    with pytest.raises(ValueError):
        Address.parse("13|2|1")


def test_subnet_base_must_be_positive(telecom_model):
    with pytest.raises(ValueError):
        derive_partition(telecom_model, 0)


@pytest.mark.parametrize("seed", range(40))
def test_partition_properties_random(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, int(rng.integers(1, 12)), int(rng.integers(0, 25)), rng.uniform(0.05, 0.5))
    part, plan = plan_for(m)
    # bijection
    assert len(part.membership) == len(m.features) == len(set(part.feature_subnet.values()))
    # router soundness / completeness against the link-count oracle
    assert plan.routers == router_oracle(m) == identify_routers(part)
    assert all((len(plan.addresses[c]) >= 2) == (c in plan.routers) for c in plan.addresses)
    # address uniqueness
    all_addrs = [a for addrs in plan.addresses.values() for a in addrs]
    assert len(all_addrs) == len(set(all_addrs))
    # membership matches links
    for l in m.links:
        assert l.component in part.membership[part.feature_subnet[l.feature]]


@pytest.mark.parametrize("seed", range(20))
def test_stable_under_feature_append(seed):
    rng = np.random.default_rng(100 + seed)
    m = random_model(rng, 6, 12, 0.3)
    _, before = plan_for(m)
    grown = m.with_feature(Feature("extra", "Extra"))
    for c in m.components[:3]:
        grown = grown.with_link(ImplementsLink("extra", c.id))
    _, after = plan_for(grown)
    for e, addrs in before.addresses.items():
        assert set(addrs) <= set(after.addresses[e])


def test_seeded_allocation_reuses_records_and_counters(telecom_model):
    part, plan = plan_for(telecom_model)
    seed = AllocationSeed.from_plan(plan)
    again = allocate_addresses(telecom_model, derive_partition(telecom_model, seed=seed), seed=seed)
    assert again.serialize() == plan.serialize()
    assert AllocationSeed.parse(plan.serialize()) == seed
