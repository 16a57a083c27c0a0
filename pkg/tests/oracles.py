"""Independent reference computations used to check the engine.

Everything here works straight from the model's link list; nothing is
imported from the partition, routing or query modules.
"""

from collections import defaultdict, deque

INF = 16


def feature_sets(model):
    """component -> set of features it implements."""
    out = defaultdict(set)
    for link in model.links:
        out[link.component].add(link.feature)
    return out


def router_oracle(model):
    return {c for c, fs in feature_sets(model).items() if len(fs) >= 2}


def bipartite(model):
    """Adjacency of the router/subnetwork bipartite graph, nodes ('R', c) and ('S', f)."""
    adj = defaultdict(set)
    for f in model.features:
        adj[("S", f.id)]
    for c, fs in feature_sets(model).items():
        if len(fs) < 2:
            continue
        for f in fs:
            adj[("R", c)].add(("S", f))
            adj[("S", f)].add(("R", c))
    return adj


def bfs(adj, start):
    dist = {start: 0}
    q = deque([start])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def router_distances(model):
    """(router, feature) -> router hops past the router itself, capped at INF."""
    adj = bipartite(model)
    out = {}
    for c in router_oracle(model):
        d = bfs(adj, ("R", c))
        for f in model.features:
            e = d.get(("S", f.id))
            out[(c, f.id)] = INF if e is None else min(INF, (e - 1) // 2)
    return out


def subnet_distances(model):
    """(feature, feature) -> routers crossed between their subnetworks."""
    adj = bipartite(model)
    out = {}
    for f in model.features:
        d = bfs(adj, ("S", f.id))
        for g in model.features:
            e = d.get(("S", g.id))
            out[(f.id, g.id)] = INF if e is None else min(INF, e // 2)
    return out


def element_distance(model, a, b):
    """Min routers crossed between any subnetwork of ``a`` and any of ``b``."""
    fs = feature_sets(model)
    feats = {f.id for f in model.features}
    sa = {a} if a in feats else fs.get(a, set())
    sb = {b} if b in feats else fs.get(b, set())
    sd = subnet_distances(model)
    return min((sd[(x, y)] for x in sa for y in sb), default=INF)


class AddressLedger:
    """Replays change operations with plain counters to predict addresses."""

    def __init__(self, model, base=11):
        self.subnet = {}
        self.next_subnet = base
        self.next_elem = {}
        self.addr = {}  # (element, subnet) -> element id
        for f in model.features:
            self.add_feature(f.id)
        for link in model.links:
            self.add_link(link.feature, link.component)

    def add_feature(self, fid):
        s = self.next_subnet
        self.next_subnet += 1
        self.subnet[fid] = s
        self.next_elem[s] = 1
        self.addr[(fid, s)] = 0

    def add_link(self, fid, cid):
        s = self.subnet[fid]
        self.addr[(cid, s)] = self.next_elem[s]
        self.next_elem[s] += 1

    def remove_link(self, fid, cid):
        del self.addr[(cid, self.subnet[fid])]

    def remove_component(self, cid):
        for key in [k for k in self.addr if k[0] == cid]:
            del self.addr[key]

    def remove_feature(self, fid):
        s = self.subnet.pop(fid)
        for key in [k for k in self.addr if k[1] == s]:
            del self.addr[key]
        del self.next_elem[s]

    def apply(self, op):
        name = type(op).__name__
        if name == "AddFeature":
            self.add_feature(op.id)
        elif name == "RemoveFeature":
            self.remove_feature(op.id)
        elif name == "RemoveComponent":
            self.remove_component(op.id)
        elif name == "AddLink":
            self.add_link(op.feature, op.component)
        elif name == "RemoveLink":
            self.remove_link(op.feature, op.component)

    def addresses(self):
        """Set of ``subnet|category|element`` strings."""
        feats = set(self.subnet)
        return {f"{s}|{0 if e in feats else 1}|{n}" for (e, s), n in self.addr.items()}
