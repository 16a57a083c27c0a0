"""Random product-line models for property tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .model import Component, Feature, ImplementsLink, Product, SplModel, Variant, VariationPoint


def random_model(
    rng: np.random.Generator,
    n_features: int,
    n_components: int,
    p_link: float,
    n_products: int = 0,
) -> SplModel:
    """Each (feature, component) pair is linked independently with
    probability ``p_link``; links are declared in a shuffled order."""
    features = tuple(Feature(f"f{i}", f"Feature {i}") for i in range(n_features))
    components = []
    for j in range(n_components):
        vps = ()
        if rng.random() < 0.2:
            vps = (VariationPoint(f"vp{j}", f"VP {j}", (Variant("a", "A"), Variant("b", "B"))),)
        components.append(Component(f"c{j}", f"Component {j}", vps))
    mask = rng.random((n_features, n_components)) < p_link
    pairs = [ImplementsLink(f"f{i}", f"c{j}") for i, j in zip(*np.nonzero(mask))]
    order = rng.permutation(len(pairs)) if pairs else []
    links = tuple(pairs[k] for k in order)

    products = []
    vp_ids = [vp.id for c in components for vp in c.variation_points]
    for k in range(n_products):
        included = tuple(f.id for f in features if rng.random() < 0.5)
        bindings = tuple((v, "a" if rng.random() < 0.5 else "b") for v in vp_ids if rng.random() < 0.5)
        products.append(Product(f"p{k}", f"Product {k}", included, bindings))
    return SplModel(features, tuple(components), links, tuple(products))


def chain_model(k: int) -> SplModel:
    """``k`` features in a line; consecutive features share one component."""
    features = tuple(Feature(f"f{i}", f"Feature {i}") for i in range(k))
    components = tuple(Component(f"r{i}", f"Router {i}") for i in range(k - 1))
    links = []
    for i in range(k - 1):
        links.append(ImplementsLink(f"f{i}", f"r{i}"))
        links.append(ImplementsLink(f"f{i + 1}", f"r{i}"))
    return SplModel(features, components, tuple(links))
