"""Relaxation kernels for one synchronous distance-vector round.

Two interchangeable implementations compute the same arrays:

* ``relax_loops`` - explicit loops, compiled with numba ``@njit`` when
  available (``relax_numba``);
* ``relax_numpy`` - vectorised over the edge list with plain numpy.

``SPLTRACE_NUMBA=0`` in the environment forces the numpy path. Inputs are
int64 arrays; ``R`` routers, ``S`` subnetworks, ``E`` directed neighbour
edges sorted by (source router, next-hop subnet, next-hop element).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None

NUMBA_AVAILABLE = numba is not None


def _numba_requested() -> bool:
    return os.environ.get("SPLTRACE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def relax_loops(dist, hop_router, own_element, subnet_ids, edge_ptr, edge_nbr,
                edge_subnet, edge_element, inf):
    n_routers, n_subnets = dist.shape
    new_dist = np.empty_like(dist)
    new_router = np.empty_like(hop_router)
    new_subnet = np.empty_like(hop_router)
    new_element = np.empty_like(hop_router)
    for r in range(n_routers):
        for s in range(n_subnets):
            if own_element[r, s] >= 0:
                new_dist[r, s] = 0
                new_router[r, s] = r
                new_subnet[r, s] = subnet_ids[s]
                new_element[r, s] = own_element[r, s]
                continue
            best = inf
            best_edge = -1
            # edges are pre-sorted by next-hop address, so the first strict
            # improvement is also the tie-break winner
            for e in range(edge_ptr[r], edge_ptr[r + 1]):
                n = edge_nbr[e]
                adv = dist[n, s]
                if hop_router[n, s] == r:
                    adv = inf  # poisoned reverse
                cand = adv + 1
                if cand > inf:
                    cand = inf
                if cand < best:
                    best = cand
                    best_edge = e
            new_dist[r, s] = best
            if best < inf:
                new_router[r, s] = edge_nbr[best_edge]
                new_subnet[r, s] = edge_subnet[best_edge]
                new_element[r, s] = edge_element[best_edge]
            else:
                new_router[r, s] = -1
                new_subnet[r, s] = -1
                new_element[r, s] = -1
    return new_dist, new_router, new_subnet, new_element


if NUMBA_AVAILABLE:
    relax_numba = numba.njit(cache=True, nogil=True)(relax_loops)
else:  # pragma: no cover
    relax_numba = None


def relax_numpy(dist, hop_router, own_element, subnet_ids, edge_ptr, edge_nbr,
                edge_subnet, edge_element, inf):
    n_routers, n_subnets = dist.shape
    n_edges = edge_nbr.shape[0]
    best = np.full((n_routers, n_subnets), inf, dtype=np.int64)
    best_edge = np.full((n_routers, n_subnets), -1, dtype=np.int64)
    if n_edges:
        edge_src = np.repeat(np.arange(n_routers, dtype=np.int64), np.diff(edge_ptr))
        adv = dist[edge_nbr].copy()
        adv[hop_router[edge_nbr] == edge_src[:, None]] = inf
        cand = np.minimum(adv + 1, inf)
        # encode (distance, edge rank) in one integer so a single min picks the
        # shortest route and, among equals, the smallest next-hop address
        key = cand * (n_edges + 1) + np.arange(n_edges, dtype=np.int64)[:, None]
        has_edges = np.diff(edge_ptr) > 0
        starts = edge_ptr[:-1][has_edges]
        reduced = np.minimum.reduceat(key, starts, axis=0)
        best[has_edges] = reduced // (n_edges + 1)
        best_edge[has_edges] = reduced % (n_edges + 1)
    reachable = best < inf
    safe_edge = np.where(reachable, best_edge, 0)
    if n_edges:
        new_router = np.where(reachable, edge_nbr[safe_edge], -1)
        new_subnet = np.where(reachable, edge_subnet[safe_edge], -1)
        new_element = np.where(reachable, edge_element[safe_edge], -1)
    else:
        new_router = np.full_like(best, -1)
        new_subnet = np.full_like(best, -1)
        new_element = np.full_like(best, -1)

    direct = own_element >= 0
    rows = np.broadcast_to(np.arange(n_routers, dtype=np.int64)[:, None], best.shape)
    cols = np.broadcast_to(np.asarray(subnet_ids, dtype=np.int64)[None, :], best.shape)
    new_dist = np.where(direct, 0, best)
    new_router = np.where(direct, rows, new_router)
    new_subnet = np.where(direct, cols, new_subnet)
    new_element = np.where(direct, own_element, new_element)
    return new_dist, new_router, new_subnet, new_element


BACKENDS = ("numba", "numpy", "python")


def default_backend() -> str:
    if NUMBA_AVAILABLE and _numba_requested():
        return "numba"
    return "numpy"


def get_kernel(backend: str | None = None):
    backend = backend or default_backend()
    if backend == "numba":
        if relax_numba is None:
            raise RuntimeError("numba backend requested but numba is not installed")
        return relax_numba
    if backend == "numpy":
        return relax_numpy
    if backend == "python":
        return relax_loops
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
