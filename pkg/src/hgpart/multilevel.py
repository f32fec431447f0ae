"""Single-shot multilevel partitioning.

The pipeline contracts one node pair per level (constrained by an optional
clustering), produces an initial k-way partition by recursive bisection with a
randomized algorithm pool, then walks the hierarchy back up, refining with a
gain-based FM local search after every uncontraction and once more at full
resolution. Every stage is deterministic given its rng.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

from .hgraph import Hypergraph
from .partition import (
    Partition,
    balance_cap,
    balance_ceiling,
    connectivity_metric,
    is_balanced,
)

DEFAULT_T = 150
# edges larger than this are ignored while rating contraction partners
DEFAULT_MAX_RATING_PINS = 1000
# non-improving moves tolerated before a full FM pass gives up
FM_STALL = 350
# much tighter tail for the per-uncontraction localized search
FM_LOCAL_STALL = 6
# coarsest size multiplier for the inner multilevel used by each bisection
BISECTION_T = 16
class ClusterPolicy(Enum):
    SAME_CLUSTER_ONLY = "same_cluster_only"
    SAME_CLUSTER_OR_ZERO = "same_cluster_or_zero"
    UNRESTRICTED = "unrestricted"


@dataclass
class Clustering:
    """Per-node labels constraining coarsening; label 0 is the reserved
    blocked/unconstrained cluster (meaning depends on the policy)."""

    cluster_of: list
    policy: ClusterPolicy

    def __post_init__(self):
        if any(c < 0 for c in self.cluster_of):
            raise ValueError("cluster labels must be non-negative")


@dataclass
class CoarseningConfig:
    k: int
    t: int = DEFAULT_T
    kappa: int = 1
    respect_kappa: bool = True
    stop_at_tk: bool = True
    min_active: int = 1
    max_rating_pins: int = DEFAULT_MAX_RATING_PINS

    def __post_init__(self):
        if self.t < 1 or self.kappa < 1:
            raise ValueError("t and kappa must be at least 1")

    @classmethod
    def create(cls, h, k, t=DEFAULT_T, respect_kappa=True, stop_at_tk=True, min_active=1):
        kappa = balance_ceiling(h.total_weight, t * k)
        return cls(k, t, max(kappa, 1), respect_kappa, stop_at_tk, min_active)


@dataclass
class CoarseningHierarchy:
    mementos: list = field(default_factory=list)

    def __len__(self):
        return len(self.mementos)


class HeavyEdgeRater:
    """Default contraction rating: sum of c(e) / (|pins(e)| - 1) over shared edges."""

    __slots__ = ("cost",)

    def __init__(self, h):
        self.cost = h.edge_cost

    def edge_factor(self, e, npins):
        return self.cost[e] / (npins - 1)

    def scale(self, wu, wv):
        return 1.0


def heavy_edge_rating(h, u, v, max_pins=DEFAULT_MAX_RATING_PINS):
    """Standalone pairwise heavy-edge score (single-pin edges are inert)."""
    edges_v = set(h.node_edges[v])
    score = 0.0
    for e in h.node_edges[u]:
        if e in edges_v:
            p = len(h.edge_pins[e])
            if 2 <= p <= max_pins:
                score += h.edge_cost[e] / (p - 1)
    return score


def _best_partner(h, v, cfg, cluster_of, policy, rater):
    scores = {}
    pins_cap = cfg.max_rating_pins
    edge_pins = h.edge_pins
    for e in h.live_edges[v]:
        pins = edge_pins[e]
        p = len(pins)
        if p > pins_cap:
            continue
        f = rater.edge_factor(e, p)
        for u in pins:
            if u != v:
                scores[u] = scores.get(u, 0.0) + f
    if not scores:
        return None
    weight = h.node_weight
    wv = weight[v]
    kappa = cfg.kappa if cfg.respect_kappa else None
    same_only = policy is ClusterPolicy.SAME_CLUSTER_ONLY
    or_zero = policy is ClusterPolicy.SAME_CLUSTER_OR_ZERO
    cv = cluster_of[v] if cluster_of is not None else 0
    best = None
    best_score = -1.0
    for u, s in scores.items():
        if kappa is not None and wv + weight[u] > kappa:
            continue
        if same_only:
            if cv == 0 or cluster_of[u] != cv:
                continue
        elif or_zero:
            cu = cluster_of[u]
            if cu != cv and cu != 0 and cv != 0:
                continue
        s *= rater.scale(wv, weight[u])
        if s > best_score or (s == best_score and u < best):
            best_score = s
            best = u
    return best


def coarsen(h, cfg: CoarseningConfig, clustering, rating, rng) -> CoarseningHierarchy:
    """Contract highest-rated eligible pairs, visiting nodes in random sweeps,
    until the node floor is reached or no eligible pair remains.

    The randomly visited node survives each contraction and keeps its cluster
    label. Stops at (not below) t*k nodes when ``stop_at_tk`` is set.
    """
    policy = clustering.policy if clustering is not None else ClusterPolicy.UNRESTRICTED
    cluster_of = clustering.cluster_of if clustering is not None else None
    rater = rating if rating is not None else HeavyEdgeRater(h)
    floor = cfg.min_active
    if cfg.stop_at_tk:
        floor = max(floor, cfg.t * cfg.k)
    mementos = []
    active = h.active
    while h.num_active > floor:
        order = h.active_nodes()
        rng.shuffle(order)
        progressed = False
        for v in order:
            if h.num_active <= floor:
                break
            if not active[v]:
                continue
            u = _best_partner(h, v, cfg, cluster_of, policy, rater)
            if u is None:
                continue
            mementos.append(h.contract(v, u))
            progressed = True
        if not progressed:
            break
    return CoarseningHierarchy(mementos)


# -- FM refinement ---------------------------------------------------------


def _best_move(h, p, caps, v):
    """Highest-gain balance-feasible move for v, or None. Candidate targets are
    the blocks already present on v's edges; ties prefer the lower block id."""
    src = p.block_of[v]
    if p.block_size[src] <= 1:
        return None
    acc = {}
    total = 0
    removal = 0
    pib = p.pins_in_block
    cost = h.edge_cost
    if p.dense:
        k = p.k
        for e in h.live_edges[v]:
            row = pib[e]
            c = cost[e]
            total += c
            if row[src] == 1:
                removal += c
            for b in range(k):
                if b != src and row[b]:
                    acc[b] = acc.get(b, 0) + c
    else:
        for e in h.live_edges[v]:
            row = pib[e]
            c = cost[e]
            total += c
            if row.get(src) == 1:
                removal += c
            for b in row:
                if b != src:
                    acc[b] = acc.get(b, 0) + c
    if not acc:
        return None
    wv = h.node_weight[v]
    bw = p.block_weight
    best_b = -1
    best_gain = None
    for b in sorted(acc):
        if bw[b] + wv > caps[b]:
            continue
        g = acc[b] + removal - total
        if best_gain is None or g > best_gain:
            best_gain = g
            best_b = b
    if best_gain is None:
        return None
    return best_gain, best_b


def _fm_pass(h, p, caps, seed_nodes=None, stall=FM_STALL, positive_only=False,
             max_applies=None):
    """One FM pass: apply best feasible moves (locking each mover), then roll
    back to the first best prefix. Returns the improvement (>= 0).

    With ``seed_nodes`` only those nodes start active and the search spreads to
    neighbors of applied moves (the localized per-level variant).
    ``positive_only`` stops as soon as the best available gain is not an
    improvement; every applied move re-activates its neighbors, so the top of
    the heap always covers the current gains."""
    heap = []
    version = [0] * h.num_nodes
    locked = bytearray(h.num_nodes)
    push = heapq.heappush

    def activate(v):
        version[v] += 1
        mv = _best_move(h, p, caps, v)
        if mv is not None:
            push(heap, (-mv[0], v, mv[1], version[v]))

    if seed_nodes is None:
        for v in range(h.num_nodes):
            if h.active[v]:
                activate(v)
    else:
        for v in seed_nodes:
            if h.active[v]:
                activate(v)

    history = []
    obj_delta = 0
    best_delta = 0
    best_len = 0
    node_weight = h.node_weight
    edge_pins = h.edge_pins
    while heap:
        neg_gain, v, tgt, ver = heapq.heappop(heap)
        if positive_only and neg_gain >= 0:
            break
        if locked[v] or version[v] != ver:
            continue
        src = p.block_of[v]
        # feasibility may have drifted since the entry was pushed
        if p.block_weight[tgt] + node_weight[v] > caps[tgt] or p.block_size[src] <= 1:
            activate(v)
            continue
        delta = p.move_node(v, tgt)
        locked[v] = 1
        version[v] += 1
        history.append((v, src))
        obj_delta += delta
        if obj_delta < best_delta:
            best_delta = obj_delta
            best_len = len(history)
        elif len(history) - best_len >= stall:
            break
        if max_applies is not None and len(history) >= max_applies:
            break
        seen = {v}
        for e in h.live_edges[v]:
            for u in edge_pins[e]:
                if u not in seen:
                    seen.add(u)
                    if not locked[u]:
                        activate(u)
    for v, src in reversed(history[best_len:]):
        p.move_node(v, src)
    return -best_delta


def _fm(h, p, caps, max_rounds=None, stall=FM_STALL):
    total = 0
    rounds = 0
    while True:
        gained = _fm_pass(h, p, caps, None, stall)
        total += gained
        rounds += 1
        if gained <= 0 or (max_rounds is not None and rounds >= max_rounds):
            break
    return total


def fm_refine(h, p, eps, rounds=0):
    """Pass-based k-way FM under the (1+eps)*ceil(W/k) block cap. Repeats
    passes until one yields no improvement, or ``rounds`` passes ran
    (0 = until convergence). Returns the total improvement."""
    caps = [balance_cap(h, p.k, eps)] * p.k
    return _fm(h, p, caps, max_rounds=rounds or None)


# -- initial partitioning by recursive bisection ----------------------------


def extract_subhypergraph(h, nodes, merge_parallel=False):
    """Sub-hypergraph induced by ``nodes``; edges keep only inside pins and
    survive with >= 2 of them. ``merge_parallel`` folds identical pin sets
    into one edge with summed cost (cut metrics are preserved)."""
    local = {v: i for i, v in enumerate(nodes)}
    seen = set()
    for v in nodes:
        seen.update(h.node_edges[v])
    pins_list = []
    costs = []
    merged = {}
    for e in sorted(seen):
        pins = [local[v] for v in h.edge_pins[e] if v in local]
        if len(pins) < 2:
            continue
        if merge_parallel:
            key = tuple(sorted(pins))
            at = merged.get(key)
            if at is not None:
                costs[at] += h.edge_cost[e]
                continue
            merged[key] = len(pins_list)
        pins_list.append(pins)
        costs.append(h.edge_cost[e])
    weights = [h.node_weight[v] for v in nodes]
    return Hypergraph(len(nodes), pins_list, weights, costs)


def _fix_nonempty(sub, actives, blk):
    zero = [v for v in actives if blk[v] == 0]
    if not zero:
        blk[actives[0]] = 0
    elif len(zero) == len(actives):
        blk[actives[-1]] = 1


def _gen_random(sub, actives, target0, rng):
    order = list(actives)
    rng.shuffle(order)
    blk = [1] * sub.num_nodes
    w0 = 0
    weight = sub.node_weight
    for v in order:
        if w0 < target0:
            blk[v] = 0
            w0 += weight[v]
    return blk


def _neighbors(sub, v):
    out = set()
    for e in sub.node_edges[v]:
        out.update(sub.edge_pins[e])
    out.discard(v)
    return out


def _gen_bfs(sub, actives, target0, rng):
    """Region growing: BFS from random seeds until the side-0 target weight."""
    blk = [1] * sub.num_nodes
    w0 = 0
    weight = sub.node_weight
    seeds = list(actives)
    rng.shuffle(seeds)
    seed_pos = 0
    pending = set(actives)
    queue = []
    qhead = 0
    while w0 < target0 and pending:
        if qhead >= len(queue):
            while seed_pos < len(seeds) and seeds[seed_pos] not in pending:
                seed_pos += 1
            if seed_pos >= len(seeds):
                break
            s = seeds[seed_pos]
            pending.discard(s)
            queue.append(s)
        v = queue[qhead]
        qhead += 1
        blk[v] = 0
        w0 += weight[v]
        if w0 >= target0:
            break
        for u in sorted(_neighbors(sub, v)):
            if u in pending:
                pending.discard(u)
                queue.append(u)
    return blk


def _gen_greedy(sub, actives, target0, rng):
    """Greedy growing: extend side 0 by the frontier node whose move cuts the
    least new edge cost (and closes the most). Gains are memoized and only
    refreshed for neighbors of the node just added."""
    blk = [1] * sub.num_nodes
    weight = sub.node_weight
    cost = sub.edge_cost
    edge_pins = sub.edge_pins
    node_edges = sub.node_edges
    cnt0 = [0] * sub.num_edges
    unassigned = set(actives)
    gains = {}

    def gain(v):
        g = 0
        for e in node_edges[v]:
            c0 = cnt0[e]
            if c0 == len(edge_pins[e]) - 1:
                g += cost[e]
            elif c0 == 0:
                g -= cost[e]
        return g

    def add(v):
        nonlocal w0
        blk[v] = 0
        w0 += weight[v]
        unassigned.discard(v)
        frontier.discard(v)
        gains.pop(v, None)
        for e in node_edges[v]:
            cnt0[e] += 1
            for u in edge_pins[e]:
                if u in unassigned:
                    frontier.add(u)
                    dirty.add(u)
                elif u in frontier:
                    dirty.add(u)

    w0 = 0
    frontier = set()
    dirty = set()
    seeds = list(actives)
    rng.shuffle(seeds)
    seed_pos = 0
    while w0 < target0 and unassigned:
        if not frontier:
            while seed_pos < len(seeds) and seeds[seed_pos] not in unassigned:
                seed_pos += 1
            if seed_pos >= len(seeds):
                break
            add(seeds[seed_pos])
            continue
        for u in dirty:
            if u in frontier:
                gains[u] = gain(u)
        dirty.clear()
        v = max(frontier, key=lambda u: (gains[u], -u))
        add(v)
    return blk


_POOL = (_gen_random, _gen_bfs, _gen_greedy)


def _overweight(p, caps):
    return sum(max(0, w - cap) for w, cap in zip(p.block_weight, caps))


def _bisect(h, nodes, caps, frac0, need, rng, pool_runs, inner_t):
    """Split ``nodes`` into two sides within the given weight caps, minimizing
    cut cost, via an inner multilevel: coarsen, pool of randomized bisections
    refined by 2-way FM, localized FM on the way back up."""
    sub = extract_subhypergraph(h, nodes, merge_parallel=True)
    wsub = sub.total_weight
    cap0, cap1 = caps
    target0 = min(max(wsub * frac0, wsub - cap1), cap0)
    cfg = CoarseningConfig.create(sub, 2, t=inner_t)
    hier = coarsen(sub, cfg, None, None, rng)
    actives = sub.active_nodes()

    # the pool works on a compact re-extraction of the coarse state: merged
    # nodes drag along piles of inert single-pin edges that would otherwise
    # dominate candidate generation and refinement cost
    core = extract_subhypergraph(sub, actives, merge_parallel=True)
    core_nodes = list(range(core.num_nodes))
    candidates = []
    for gen in _POOL:
        for _ in range(pool_runs):
            blk = gen(core, core_nodes, target0, rng)
            _fix_nonempty(core, core_nodes, blk)
            candidates.append(blk)
    scored = []
    for i, blk in enumerate(candidates):
        p = Partition(core, 2, blk)
        _fm_pass(core, p, caps, None, FM_STALL, positive_only=True)
        scored.append((_overweight(p, caps), connectivity_metric(core, p), i, p))
    scored.sort(key=lambda t: t[:3])
    winner = scored[0][3]

    blk_sub = [0] * sub.num_nodes
    for i, v in enumerate(actives):
        blk_sub[v] = winner.block_of[i]
    best = Partition(sub, 2, blk_sub)
    for m in reversed(hier.mementos):
        sub.uncontract(m)
        best.uncontract_update(m)
        _fm_pass(sub, best, caps, (m.kept_node, m.removed_node), FM_LOCAL_STALL,
                 positive_only=True)

    side0 = [nodes[i] for i in range(sub.num_nodes) if best.block_of[i] == 0]
    side1 = [nodes[i] for i in range(sub.num_nodes) if best.block_of[i] == 1]
    # guarantee enough nodes on each side for the downstream block counts
    need0, need1 = need
    side0.sort()
    side1.sort()
    while len(side0) < need0:
        side0.append(side1.pop())
    while len(side1) < need1:
        side1.append(side0.pop())
    w0 = sum(h.node_weight[v] for v in side0)
    w1 = sum(h.node_weight[v] for v in side1)
    ok = w0 <= cap0 and w1 <= cap1
    return side0, side1, ok


def initial_partition(h, k, eps, rng, *, pool_runs=20, inner_t=BISECTION_T) -> Partition:
    """epsilon-balanced k-way partition of the (coarse) hypergraph by recursive
    bisection. Side weight caps tighten with remaining depth so the final
    (1+eps)*ceil(W/k) bound stays reachable; if some bisection cannot meet its
    caps the least-imbalanced split is kept and the result is flagged."""
    actives = h.active_nodes()
    if len(actives) < k:
        raise ValueError(f"initial partitioning needs at least {k} active nodes")
    assignment = [0] * h.num_nodes
    if k == 1:
        return Partition(h, 1, assignment)
    unit = balance_ceiling(h.total_weight, k)
    depth_total = math.ceil(math.log2(k))

    def side_cap(k_side):
        r = math.ceil(math.log2(k_side)) if k_side > 1 else 0
        eps_side = (1.0 + eps) ** ((depth_total - r) / depth_total) - 1.0
        return (1.0 + eps_side) * k_side * unit

    flagged = False
    stack = [(actives, 0, k)]
    while stack:
        nodes, lo, kk = stack.pop()
        if kk == 1:
            for v in nodes:
                assignment[v] = lo
            continue
        k0 = (kk + 1) // 2
        k1 = kk - k0
        caps = (side_cap(k0), side_cap(k1))
        side0, side1, ok = _bisect(
            h, nodes, caps, k0 / kk, (k0, k1), rng, pool_runs, inner_t
        )
        flagged = flagged or not ok
        stack.append((side1, lo + k0, k1))
        stack.append((side0, lo, k0))
    p = Partition(h, k, assignment)
    p.imbalance_flagged = flagged or not is_balanced(h, p, eps)
    return p


# -- full pipeline -----------------------------------------------------------


def run_pipeline(
    h,
    k,
    eps,
    rng,
    *,
    cfg=None,
    clustering=None,
    rating=None,
    project_from=None,
    final_rounds=0,
    pool_runs=20,
    inner_t=BISECTION_T,
) -> Partition:
    """Coarsen, obtain a coarse partition (projected or freshly computed),
    then uncoarsen with localized FM per level and a full FM at the end.

    ``project_from`` skips initial partitioning: it must be a per-node block
    vector that stays valid under the clustering used (same-block contractions
    only). The hypergraph is restored to its input state on return."""
    if cfg is None:
        cfg = CoarseningConfig.create(h, k)
    hierarchy = coarsen(h, cfg, clustering, rating, rng)
    if project_from is not None:
        p = Partition(h, k, project_from)
    else:
        p = initial_partition(h, k, eps, rng, pool_runs=pool_runs, inner_t=inner_t)
    caps = [balance_cap(h, k, eps)] * k
    for m in reversed(hierarchy.mementos):
        h.uncontract(m)
        p.uncontract_update(m)
        _fm_pass(h, p, caps, (m.kept_node, m.removed_node), FM_LOCAL_STALL,
                 positive_only=True)
    _fm(h, p, caps, max_rounds=final_rounds or None)
    p.imbalance_flagged = p.imbalance_flagged or not is_balanced(h, p, eps)
    return p


def partition_single(h, k, eps, rng, *, t=DEFAULT_T, **kwargs) -> Partition:
    """The full single-shot pipeline: unconstrained coarsening to t*k nodes,
    recursive-bisection initial partitioning, FM-refined uncoarsening."""
    if k < 1:
        raise ValueError("k must be positive")
    if h.num_active < k:
        raise ValueError(f"hypergraph has {h.num_active} active nodes, need >= k={k}")
    cfg = CoarseningConfig.create(h, k, t=t)
    return run_pipeline(h, k, eps, rng, cfg=cfg, **kwargs)


def vcycle(h, p, eps, rng, *, t=DEFAULT_T, **kwargs) -> Partition:
    """One V-cycle: re-coarsen restricted to same-block pairs (so the input
    projects unchanged), then refine on the way back up. Never degrades."""
    k = p.k
    labels = [b + 1 for b in p.block_of]
    clustering = Clustering(labels, ClusterPolicy.SAME_CLUSTER_ONLY)
    cfg = CoarseningConfig.create(h, k, t=t)
    return run_pipeline(
        h,
        k,
        eps,
        rng,
        cfg=cfg,
        clustering=clustering,
        project_from=list(p.block_of),
        **kwargs,
    )
