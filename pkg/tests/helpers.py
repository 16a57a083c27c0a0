import itertools

from spltrace.reconcile import AddComponent, AddFeature, AddLink, RemoveComponent, RemoveFeature, RemoveLink

_ids = itertools.count(1)


def random_ops(rng, model, n_ops):
    """A valid sequence of change operations for ``model``, tracked on a
    lightweight shadow of the model."""
    features = [f.id for f in model.features]
    components = [c.id for c in model.components]
    links = {(l.feature, l.component) for l in model.links}
    ops = []
    for _ in range(n_ops):
        kind = rng.integers(6)
        if kind == 0:
            fid = f"nf{next(_ids)}"
            ops.append(AddFeature(fid, "New feature"))
            features.append(fid)
        elif kind == 1 and features:
            fid = features.pop(rng.integers(len(features)))
            ops.append(RemoveFeature(fid))
            links = {l for l in links if l[0] != fid}
        elif kind == 2:
            cid = f"nc{next(_ids)}"
            ops.append(AddComponent(cid, "New component"))
            components.append(cid)
        elif kind == 3 and components:
            cid = components.pop(rng.integers(len(components)))
            ops.append(RemoveComponent(cid))
            links = {l for l in links if l[1] != cid}
        elif kind == 4 and features and components:
            free = [(f, c) for f in features for c in components if (f, c) not in links]
            if free:
                l = free[rng.integers(len(free))]
                ops.append(AddLink(*l))
                links.add(l)
        elif kind == 5 and links:
            l = sorted(links)[rng.integers(len(links))]
            ops.append(RemoveLink(*l))
            links.discard(l)
    return ops
