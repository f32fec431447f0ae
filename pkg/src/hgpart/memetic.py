"""Steady-state memetic search on top of the multilevel pipeline.

Every operator steers the coarsening stage through a clustering constraint or
a rating swap and produces exactly one offspring per generation; a
diversity-aware rule decides who it replaces. Individuals are compared by the
connectivity metric (lower is fitter) and by the multiset of their cut edges
(each edge counted lambda(e) - 1 times) for similarity.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass

from .multilevel import (
    DEFAULT_MAX_RATING_PINS,
    Clustering,
    ClusterPolicy,
    CoarseningConfig,
    partition_single,
    run_pipeline,
    vcycle,
)
from .partition import Partition, balance_cap, connectivity_metric
from .partition import signature as partition_signature


@dataclass
class Individual:
    """A partition plus its fitness and cut-edge multiset."""

    partition: Partition
    objective: float
    signature: Counter

    @classmethod
    def from_partition(cls, h, p: Partition) -> "Individual":
        return cls(p, connectivity_metric(h, p), partition_signature(h, p))


def distance(a: Individual, b: Individual) -> int:
    """Symmetric-difference cardinality of the two cut-edge multisets."""
    sa, sb = a.signature, b.signature
    d = 0
    for e, c in sa.items():
        d += abs(c - sb.get(e, 0))
    for e, c in sb.items():
        if e not in sa:
            d += c
    return d


@dataclass
class Population:
    members: list

    def __len__(self):
        return len(self.members)

    def fittest(self) -> Individual:
        return min(self.members, key=lambda m: m.objective)


@dataclass
class OperatorConfig:
    """Operator schedule. Defaults are the full-operator mix; ``classic()`` is
    the two-recombination / two-mutation baseline."""

    p_combine: float = 0.8
    combine_weights: tuple = (0.4, 0.2, 0.4)
    mutate_weights: tuple = (0.25, 0.25, 0.25, 0.25)
    gamma: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p_combine <= 1.0:
            raise ValueError("p_combine must be a probability")
        for group in (self.combine_weights, self.mutate_weights):
            if any(w < 0 for w in group) or sum(group) <= 0:
                raise ValueError("weight groups must be non-negative and normalizable")
        if len(self.combine_weights) != 3 or len(self.mutate_weights) != 4:
            raise ValueError("expected 3 recombination and 4 mutation weights")

    @classmethod
    def classic(cls) -> "OperatorConfig":
        return cls(
            p_combine=0.5,
            combine_weights=(0.5, 0.5, 0.0),
            mutate_weights=(0.5, 0.5, 0.0, 0.0),
        )


@dataclass
class ProgressEvent:
    elapsed_s: float
    generation: int
    operator: str
    best_objective: float


# -- population ------------------------------------------------------------


def _random_balanced_move(h, p: Partition, eps, rng) -> bool:
    """Apply one random move that keeps balance and block non-emptiness."""
    cap = balance_cap(h, p.k, eps)
    nodes = h.active_nodes()
    rng.shuffle(nodes)
    for v in nodes:
        src = p.block_of[v]
        if p.block_size[src] <= 1:
            continue
        targets = [
            b
            for b in range(p.k)
            if b != src and p.block_weight[b] + h.node_weight[v] <= cap
        ]
        if targets:
            p.move_node(v, rng.choice(targets))
            return True
    return False


def init_population(
    h,
    k,
    eps,
    time_limit,
    rng,
    *,
    pop_size=None,
    clock=time.perf_counter,
    budget_fraction=0.15,
) -> Population:
    """Size the population from the measured single-run time so that roughly
    ``budget_fraction`` of the limit goes to construction, clamped to [3, 50]:
    S = clamp(round(fraction * limit / first_run_seconds), 3, 50). (An
    alternative reading, spawning until the fraction of the budget has
    elapsed, would track slow runs better but makes S timing-dependent.)
    With no time limit (deterministic runs) the size is ``pop_size`` (default
    8). Duplicates are re-rolled up to 5 times, then nudged by one random
    balanced move."""
    t0 = clock()
    first = partition_single(h, k, eps, rng)
    tau = max(clock() - t0, 1e-9)
    if time_limit is not None:
        size = round(budget_fraction * time_limit / tau)
    else:
        size = pop_size if pop_size is not None else 8
    size = min(max(size, 3), 50)

    members = [Individual.from_partition(h, first)]
    stuck = 0
    while len(members) < size and stuck < 100:
        cand = None
        for _ in range(6):  # first roll + 5 fresh re-rolls
            trial = Individual.from_partition(h, partition_single(h, k, eps, rng))
            if all(distance(trial, m) > 0 for m in members):
                cand = trial
                break
        if cand is None:
            p = trial.partition
            for _ in range(50):
                if not _random_balanced_move(h, p, eps, rng):
                    break
                trial = Individual.from_partition(h, p)
                if all(distance(trial, m) > 0 for m in members):
                    cand = trial
                    break
        if cand is None:
            stuck += 1
            continue
        members.append(cand)
    return Population(members)


def _tournament_one(pop: Population, rng) -> int:
    a, b = rng.sample(range(len(pop.members)), 2)
    ma, mb = pop.members[a], pop.members[b]
    if ma.objective < mb.objective:
        return a
    if mb.objective < ma.objective:
        return b
    return a if rng.random() < 0.5 else b


def tournament_select(pop: Population, rng):
    """Two independent two-way tournaments; the pair comes back fitter-first.
    If both return the same member the second is redrawn (up to 5 times), then
    a uniform different member is taken."""
    i = _tournament_one(pop, rng)
    j = i
    for _ in range(5):
        j = _tournament_one(pop, rng)
        if j != i:
            break
    if j == i:
        j = rng.choice([x for x in range(len(pop.members)) if x != i])
    a, b = pop.members[i], pop.members[j]
    if b.objective < a.objective:
        a, b = b, a
    return a, b


# -- recombination -----------------------------------------------------------


def combine_c1(h, parent1: Individual, parent2: Individual, eps, rng) -> Individual:
    """Contract only node pairs that BOTH parents place together, project the
    fitter parent's partition through, refine. Expects parent1 to be the
    fitter parent; the offspring never scores worse than it."""
    b1 = parent1.partition.block_of
    b2 = parent2.partition.block_of
    k = parent1.partition.k
    labels = [0] * h.num_nodes
    lut = {}
    for v in range(h.num_nodes):
        if h.active[v]:
            key = (b1[v], b2[v])
            lab = lut.get(key)
            if lab is None:
                lab = len(lut) + 1
                lut[key] = lab
            labels[v] = lab
    clustering = Clustering(labels, ClusterPolicy.SAME_CLUSTER_ONLY)
    cfg = CoarseningConfig.create(h, k)
    p = run_pipeline(
        h, k, eps, rng, cfg=cfg, clustering=clustering, project_from=list(b1)
    )
    return Individual.from_partition(h, p)


class FrequencyRater:
    """Coarsening rating that favors node pairs sharing many small edges that
    are rarely cut among the fittest individuals:
    sum_e exp(-gamma * f(e)) / |pins(e)|, scaled by 1 / (w(u) * w(v))."""

    __slots__ = ("numer",)

    def __init__(self, numerators):
        self.numer = numerators

    def edge_factor(self, e, npins):
        return self.numer[e] / npins

    def scale(self, wu, wv):
        return 1.0 / max(wu * wv, 1e-12)


def edge_frequencies(members, num_edges) -> list:
    """f(e) = number of the given individuals in which e is cut."""
    freq = [0] * num_edges
    for m in members:
        for e in m.signature:
            freq[e] += 1
    return freq


def frequency_rating(h, u, v, frequencies, gamma=0.5, max_pins=DEFAULT_MAX_RATING_PINS):
    """Standalone pairwise frequency score (the C2 analogue of heavy-edge)."""
    edges_v = set(h.node_edges[v])
    s = 0.0
    for e in h.node_edges[u]:
        if e in edges_v:
            p = len(h.edge_pins[e])
            if 2 <= p <= max_pins:
                s += math.exp(-gamma * frequencies[e]) / p
    return s / max(h.node_weight[u] * h.node_weight[v], 1e-12)


def combine_c2(h, pop: Population, k, eps, rng, gamma=0.5) -> Individual:
    """Full pipeline with the heavy-edge rating replaced by the cut-frequency
    rating derived from the round(sqrt(S)) fittest members."""
    count = max(1, round(math.sqrt(len(pop.members))))
    ranked = sorted(range(len(pop.members)), key=lambda i: (pop.members[i].objective, i))
    fittest = [pop.members[i] for i in ranked[:count]]
    freq = edge_frequencies(fittest, h.num_edges)
    numerators = [math.exp(-gamma * f) for f in freq]
    cfg = CoarseningConfig.create(h, k)
    p = run_pipeline(h, k, eps, rng, cfg=cfg, rating=FrequencyRater(numerators))
    return Individual.from_partition(h, p)


def block_quality(h, block_nodes) -> float:
    """Mean squared pin-fraction of a node set over its incident edges: close
    to 1 when the set swallows its edges whole, close to 0 when it only grazes
    large edges."""
    counts = {}
    for v in block_nodes:
        for e in h.node_edges[v]:
            counts[e] = counts.get(e, 0) + 1
    if not counts:
        return 0.0
    total = 0.0
    for e, c in counts.items():
        frac = c / len(h.edge_pins[e])
        total += frac * frac
    return total / len(counts)


def greedy_block_clusters(h, parent1: Individual, parent2: Individual, k) -> Clustering:
    """Cluster construction for greedy block recombination: repeatedly take
    the highest-quality block across both parents (ties to the lower
    (parent, block) pair) as a fresh cluster, remove its nodes from the other
    parent's blocks and re-score what shrank; at most floor(3k/2) picks,
    leftovers go to the blocked cluster 0."""
    parents = (parent1, parent2)
    blocks = {}
    for pi, par in enumerate(parents):
        bo = par.partition.block_of
        for v in range(h.num_nodes):
            if h.active[v]:
                blocks.setdefault((pi, bo[v]), set()).add(v)
    quality = {key: block_quality(h, nodes) for key, nodes in blocks.items()}

    labels = [0] * h.num_nodes
    limit = (3 * k) // 2
    picked = 0
    assigned = 0
    total_active = h.num_active
    next_label = 0
    while picked < limit and assigned < total_active and blocks:
        key = min(quality, key=lambda kk: (-quality[kk], kk))
        nodes = blocks.pop(key)
        del quality[key]
        next_label += 1
        other = 1 - key[0]
        other_bo = parents[other].partition.block_of
        dirty = set()
        for v in nodes:
            labels[v] = next_label
            okey = (other, other_bo[v])
            s = blocks.get(okey)
            if s is not None:
                s.discard(v)
                if s:
                    dirty.add(okey)
                else:
                    del blocks[okey]
                    del quality[okey]
        assigned += len(nodes)
        picked += 1
        for okey in dirty:
            if okey in blocks:
                quality[okey] = block_quality(h, blocks[okey])
    return Clustering(labels, ClusterPolicy.SAME_CLUSTER_ONLY)


def combine_c3(h, parent1: Individual, parent2: Individual, k, eps, rng) -> Individual:
    """Greedy block recombination. Selected clusters collapse without any
    weight cap until no contraction is possible (never below k nodes), then a
    fresh initial partition is computed."""
    if k < 3:
        raise ValueError("greedy block recombination needs k >= 3")
    clustering = greedy_block_clusters(h, parent1, parent2, k)
    cfg = CoarseningConfig.create(
        h, k, respect_kappa=False, stop_at_tk=False, min_active=k
    )
    p = run_pipeline(h, k, eps, rng, cfg=cfg, clustering=clustering)
    return Individual.from_partition(h, p)


# -- mutation ----------------------------------------------------------------


def build_mutation_clusters(h, p: Partition) -> Clustering:
    """Connected components within each block (two nodes adjacent when they
    co-pin an edge having >= 2 pins inside the block). Components that fully
    contain no edge are blocked (cluster 0); the rest share their block's
    shifted label."""
    n = h.num_nodes
    parent = list(range(n))

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    block_of = p.block_of
    for pins in h.edge_pins:
        first = {}
        for v in pins:
            b = block_of[v]
            f = first.get(b)
            if f is None:
                first[b] = v
            else:
                ra, rb = find(f), find(v)
                if ra != rb:
                    parent[rb] = ra
    qualified = set()
    for pins in h.edge_pins:
        r0 = find(pins[0])
        if all(find(v) == r0 for v in pins):
            qualified.add(r0)
    labels = [0] * n
    for v in range(n):
        if h.active[v] and find(v) in qualified:
            labels[v] = block_of[v] + 1
    return Clustering(labels, ClusterPolicy.SAME_CLUSTER_ONLY)


def mutate_m1(h, parent: Individual, k, eps, rng) -> Individual:
    """Plain V-cycle mutation: never degrades."""
    return Individual.from_partition(h, vcycle(h, parent.partition, eps, rng))


def mutate_m2(h, parent: Individual, k, eps, rng) -> Individual:
    """V-cycle coarsening but with a fresh initial partition; may degrade."""
    labels = [b + 1 for b in parent.partition.block_of]
    clustering = Clustering(labels, ClusterPolicy.SAME_CLUSTER_ONLY)
    cfg = CoarseningConfig.create(h, k)
    p = run_pipeline(h, k, eps, rng, cfg=cfg, clustering=clustering)
    return Individual.from_partition(h, p)


def mutate_m3(h, parent: Individual, k, eps, rng) -> Individual:
    """Component-restricted V-cycle: cluster-0 components never contract, so
    the parent projects through unchanged. Never degrades."""
    clustering = build_mutation_clusters(h, parent.partition)
    cfg = CoarseningConfig.create(h, k)
    p = run_pipeline(
        h,
        k,
        eps,
        rng,
        cfg=cfg,
        clustering=clustering,
        project_from=list(parent.partition.block_of),
    )
    return Individual.from_partition(h, p)


def mutate_m4(h, parent: Individual, k, eps, rng) -> Individual:
    """Component clusters with free mixing through cluster 0; cross-block
    contractions invalidate the parent, so a fresh initial partition is
    computed."""
    base = build_mutation_clusters(h, parent.partition)
    clustering = Clustering(base.cluster_of, ClusterPolicy.SAME_CLUSTER_OR_ZERO)
    cfg = CoarseningConfig.create(h, k)
    p = run_pipeline(h, k, eps, rng, cfg=cfg, clustering=clustering)
    return Individual.from_partition(h, p)


_MUTATORS = {"m1": mutate_m1, "m2": mutate_m2, "m3": mutate_m3, "m4": mutate_m4}


# -- replacement and the loop --------------------------------------------------


def replace(pop: Population, offspring: Individual) -> bool:
    """Evict the most similar member among those no fitter than the offspring;
    ties fall to the worse objective, then the lower index. Offspring that
    would duplicate a surviving member are discarded."""
    members = pop.members
    dist = [distance(m, offspring) for m in members]
    candidates = [i for i, m in enumerate(members) if m.objective >= offspring.objective]
    if not candidates:
        return False
    evict = min(candidates, key=lambda i: (dist[i], -members[i].objective, i))
    if any(dist[i] == 0 for i in range(len(members)) if i != evict):
        return False
    members[evict] = offspring
    return True


def evolve(
    h,
    k,
    eps,
    *,
    time_limit=None,
    generations=None,
    cfg=None,
    rng,
    pop_size=None,
    progress=None,
    on_generation=None,
) -> Individual:
    """Steady-state loop: one offspring per generation, operator drawn from the
    schedule, diversity-aware replacement. Returns the best individual ever
    seen (tracked outside the population, so eviction cannot lose it).

    Exactly one of ``time_limit`` (wall-clock seconds) and ``generations``
    (deterministic count) must be set. Progress events fire on every
    improvement of the best objective."""
    if (time_limit is None) == (generations is None):
        raise ValueError("set exactly one of time_limit and generations")
    if h.num_active < k:
        raise ValueError(f"hypergraph has {h.num_active} active nodes, need >= k={k}")
    cfg = cfg if cfg is not None else OperatorConfig()
    cw = list(cfg.combine_weights)
    mw = list(cfg.mutate_weights)
    if k == 2 and cw[2] > 0:
        # greedy block recombination only reproduces a parent at k = 2; its
        # weight is folded proportionally into the other recombinations
        extra, cw[2] = cw[2], 0.0
        base = cw[0] + cw[1]
        if base > 0:
            cw[0] += extra * cw[0] / base
            cw[1] += extra * cw[1] / base
        else:
            cw[0] = cw[1] = extra / 2.0

    start = time.perf_counter()
    pop = init_population(h, k, eps, time_limit, rng, pop_size=pop_size)
    best = pop.fittest()
    gen = 0

    def stamp():
        return float(gen) if generations is not None else time.perf_counter() - start

    if progress is not None:
        progress(ProgressEvent(stamp(), 0, "init", best.objective))
    if len(pop.members) < 2:
        return best

    combine_ops = ("c1", "c2", "c3")
    mutate_ops = ("m1", "m2", "m3", "m4")
    while True:
        if generations is not None:
            if gen >= generations:
                break
        elif time.perf_counter() - start >= time_limit:
            break
        gen += 1
        if rng.random() < cfg.p_combine:
            op = rng.choices(combine_ops, weights=cw)[0]
        else:
            op = rng.choices(mutate_ops, weights=mw)[0]
        if op == "c1":
            pa, pb = tournament_select(pop, rng)
            offspring = combine_c1(h, pa, pb, eps, rng)
        elif op == "c2":
            offspring = combine_c2(h, pop, k, eps, rng, cfg.gamma)
        elif op == "c3":
            pa, pb = tournament_select(pop, rng)
            offspring = combine_c3(h, pa, pb, k, eps, rng)
        else:
            parent = pop.members[_tournament_one(pop, rng)]
            offspring = _MUTATORS[op](h, parent, k, eps, rng)
        replace(pop, offspring)
        if offspring.objective < best.objective:
            best = offspring
            if progress is not None:
                progress(ProgressEvent(stamp(), gen, op, best.objective))
        if on_generation is not None:
            on_generation(gen, op, offspring, pop)
    return best
