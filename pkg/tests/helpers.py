"""Shared test utilities: fixture hypergraphs, random-instance generators,
independent reference metrics, and a brute-force optimum oracle.

Everything here is deliberately independent of the incremental code paths it
checks: metrics are recomputed straight from pins and an assignment vector,
and the oracle enumerates assignments outright.
"""

from __future__ import annotations

import itertools
import math
from random import Random

from hgpart import Hypergraph


def quad() -> Hypergraph:
    """4 unit nodes, edges {0,1}, {1,2,3}, {0,2,3}."""
    return Hypergraph(4, [[0, 1], [1, 2, 3], [0, 2, 3]])


def random_hypergraph(
    rng: Random,
    max_nodes=10,
    max_edges=12,
    min_nodes=2,
    max_pins=None,
    random_weights=False,
    random_costs=False,
) -> Hypergraph:
    n = rng.randint(min_nodes, max_nodes)
    m = rng.randint(1, max_edges)
    cap = max_pins if max_pins is not None else n
    pins_list = []
    for _ in range(m):
        size = rng.randint(2, max(2, min(cap, n)))
        pins_list.append(rng.sample(range(n), min(size, n)))
    weights = [rng.randint(1, 4) for _ in range(n)] if random_weights else None
    costs = [rng.randint(1, 5) for _ in range(m)] if random_costs else None
    return Hypergraph(n, pins_list, weights, costs)


# -- independent reference metrics -------------------------------------------


def ref_lambda(h, assignment, e) -> int:
    return len({assignment[v] for v in h.edge_pins[e]})


def ref_connectivity(h, assignment):
    return sum(
        (ref_lambda(h, assignment, e) - 1) * h.edge_cost[e] for e in range(h.num_edges)
    )


def ref_cut(h, assignment):
    return sum(
        h.edge_cost[e] for e in range(h.num_edges) if ref_lambda(h, assignment, e) > 1
    )


def ref_balanced(h, assignment, k, eps) -> bool:
    weights = [0] * k
    for v in range(h.num_nodes):
        if h.active[v]:
            weights[assignment[v]] += h.node_weight[v]
    total = sum(weights)
    cap = (1.0 + eps) * math.ceil(total / k)
    return all(w <= cap for w in weights)


def snapshot(h):
    """Everything contraction mutates, for bit-identical restore checks."""
    return (
        [list(p) for p in h.edge_pins],
        [list(es) for es in h.node_edges],
        list(h.node_weight),
        list(h.active),
        h.num_active,
    )


def check_incidence(h):
    """Full-scan incidence symmetry audit."""
    for e, pins in enumerate(h.edge_pins):
        assert pins, f"edge {e} is empty"
        assert len(set(pins)) == len(pins), f"edge {e} repeats a pin"
        for v in pins:
            assert h.active[v], f"edge {e} holds inactive node {v}"
            assert e in h.node_edges[v], f"edge {e} missing from node {v}"
    for v in range(h.num_nodes):
        if not h.active[v]:
            continue
        for e in h.node_edges[v]:
            assert v in h.edge_pins[e], f"node {v} lists edge {e} without a pin"


# -- brute-force oracle --------------------------------------------------------


def brute_force_best(h, k, eps):
    """Exhaustive minimum of the connectivity metric over eps-balanced k-way
    partitions with k nonempty blocks, over the active nodes. Returns
    (best_cost, assignment vector over all node slots) or (None, None)."""
    actives = h.active_nodes()
    n = len(actives)
    if n < k:
        return None, None
    best_cost = None
    best_assign = None
    # the first active node is pinned to block 0: block labels are symmetric
    for tail in itertools.product(range(k), repeat=n - 1):
        labels = (0,) + tail
        if len(set(labels)) != k:
            continue
        assign = [0] * h.num_nodes
        for v, b in zip(actives, labels):
            assign[v] = b
        if not ref_balanced(h, assign, k, eps):
            continue
        cost = ref_connectivity(h, assign)
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_assign = assign
    return best_cost, best_assign


# -- benchmark-scale synthetic instances ----------------------------------------


def generate_benchmark_instance(seed, n, m=None, span=25, group=None) -> Hypergraph:
    """Locality-structured unweighted instance, VLSI-ish in shape: nodes sit on
    a line carved into tight groups; most edges gather 2-9 pins near a random
    center inside one group, a minority bridge between groups."""
    rng = Random(seed)
    m = m if m is not None else int(n * 1.05)
    group = group if group is not None else max(32, n // 400)
    group_size = n // group
    pins_list = []
    for _ in range(m):
        center = rng.randrange(n)
        size = 2 + min(rng.randrange(8), rng.randrange(8))
        local = rng.random() < 0.85
        pins = {center}
        tries = 0
        while len(pins) < size and tries < 12 * size:
            tries += 1
            if local:
                cand = center + int(rng.gauss(0, span))
                lo = (center // group_size) * group_size
                cand = lo + (cand - lo) % group_size
            else:
                cand = rng.randrange(n)
            if 0 <= cand < n:
                pins.add(cand)
        if len(pins) >= 2:
            pins_list.append(sorted(pins))
    return Hypergraph(n, pins_list)
