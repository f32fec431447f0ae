"""Partition state over a hypergraph: block assignment with incrementally
maintained block weights and per-edge block pin counts, objective metrics,
and the balance test.

The objective throughout is the connectivity metric
sum_e (lambda(e) - 1) * c(e); the cut metric is computed for reporting only.
"""

from __future__ import annotations

import math
from collections import Counter


def balance_ceiling(total_weight, k) -> int:
    """ceil(total_weight / k), exact for integer weights."""
    if isinstance(total_weight, int):
        return -(-total_weight // k)
    return math.ceil(total_weight / k)


def balance_cap(h, k, eps) -> float:
    """Maximum admissible block weight: (1 + eps) * ceil(W / k).

    Applied literally for non-integral total weights too; comparisons happen
    in floating point."""
    return (1.0 + eps) * balance_ceiling(h.total_weight, k)


class Partition:
    """k-way block assignment with incremental connectivity bookkeeping.

    ``pins_in_block`` is dense (one list of k counters per edge) for k <= 8
    and a sparse per-edge dict otherwise, since lambda(e) is typically far
    below k. Single-owner mutable: one mover at a time.
    """

    DENSE_K = 8

    def __init__(self, h, k, assignment, require_nonempty=True):
        self.h = h
        self.k = k
        self.block_of = list(assignment)
        self.dense = k <= self.DENSE_K
        self.imbalance_flagged = False
        if len(self.block_of) != h.num_nodes:
            raise ValueError("assignment length mismatch")
        block_weight = [0] * k
        block_size = [0] * k
        for v in range(h.num_nodes):
            if not h.active[v]:
                continue
            b = self.block_of[v]
            if not 0 <= b < k:
                raise ValueError(f"node {v}: block {b} out of range")
            block_weight[b] += h.node_weight[v]
            block_size[b] += 1
        if require_nonempty and any(s == 0 for s in block_size):
            raise ValueError("every block must be nonempty")
        self.block_weight = block_weight
        self.block_size = block_size
        block_of = self.block_of
        lambdas = []
        pins_in_block = []
        if self.dense:
            for pins in h.edge_pins:
                row = [0] * k
                for v in pins:
                    row[block_of[v]] += 1
                pins_in_block.append(row)
                lambdas.append(sum(1 for c in row if c))
        else:
            for pins in h.edge_pins:
                row = {}
                for v in pins:
                    b = block_of[v]
                    row[b] = row.get(b, 0) + 1
                pins_in_block.append(row)
                lambdas.append(len(row))
        self.pins_in_block = pins_in_block
        self.lambdas = lambdas

    def copy(self) -> "Partition":
        p = Partition.__new__(Partition)
        p.h = self.h
        p.k = self.k
        p.block_of = list(self.block_of)
        p.dense = self.dense
        p.imbalance_flagged = self.imbalance_flagged
        p.block_weight = list(self.block_weight)
        p.block_size = list(self.block_size)
        if self.dense:
            p.pins_in_block = [list(r) for r in self.pins_in_block]
        else:
            p.pins_in_block = [dict(r) for r in self.pins_in_block]
        p.lambdas = list(self.lambdas)
        return p

    def move_node(self, v, target) -> float:
        """Move v to ``target`` and return the exact connectivity-metric delta
        (negative = improvement). Refuses to empty the source block; balance is
        the caller's concern."""
        src = self.block_of[v]
        if target == src:
            raise ValueError("target equals current block")
        if not 0 <= target < self.k:
            raise ValueError(f"block {target} out of range")
        if self.block_size[src] <= 1:
            raise ValueError("move would empty source block")
        h = self.h
        delta = 0
        lambdas = self.lambdas
        # single-pin edges travel whole with the mover (lambda stays 1, delta
        # 0); their rows are refreshed if they ever regrow, see
        # uncontract_update
        if self.dense:
            for e in h.live_edges[v]:
                row = self.pins_in_block[e]
                cost = h.edge_cost[e]
                if row[src] == 1:
                    delta -= cost
                    lambdas[e] -= 1
                if row[target] == 0:
                    delta += cost
                    lambdas[e] += 1
                row[src] -= 1
                row[target] += 1
        else:
            for e in h.live_edges[v]:
                row = self.pins_in_block[e]
                cost = h.edge_cost[e]
                ns = row[src]
                if ns == 1:
                    delta -= cost
                    lambdas[e] -= 1
                    del row[src]
                else:
                    row[src] = ns - 1
                nt = row.get(target, 0)
                if nt == 0:
                    delta += cost
                    lambdas[e] += 1
                row[target] = nt + 1
        w = h.node_weight[v]
        self.block_weight[src] -= w
        self.block_weight[target] += w
        self.block_size[src] -= 1
        self.block_size[target] += 1
        self.block_of[v] = target
        return delta

    def uncontract_update(self, m):
        """Mirror one hypergraph uncontraction: the removed node re-enters in
        the kept node's block. Connectivity and block weights are unchanged."""
        b = self.block_of[m.kept_node]
        self.block_of[m.removed_node] = b
        self.block_size[b] += 1
        pins_of = self.h.edge_pins
        for e, _pos in m.shrunk_edges:
            if len(pins_of[e]) == 2:
                # regrew from a single pin: while inert the row may have gone
                # stale (moves skip such edges), and both pins now sit in b
                if self.dense:
                    row = self.pins_in_block[e]
                    for i in range(self.k):
                        row[i] = 0
                    row[b] = 2
                else:
                    self.pins_in_block[e] = {b: 2}
                self.lambdas[e] = 1
            else:
                self.pins_in_block[e][b] += 1


def connectivity_metric(h, p: Partition):
    """(lambda - 1) objective: sum over edges of (lambda(e) - 1) * c(e)."""
    cost = h.edge_cost
    return sum((lam - 1) * cost[e] for e, lam in enumerate(p.lambdas) if lam > 1)


def cut_metric(h, p: Partition):
    """Total cost of edges spanning more than one block."""
    cost = h.edge_cost
    return sum(cost[e] for e, lam in enumerate(p.lambdas) if lam > 1)


def is_balanced(h, p: Partition, eps) -> bool:
    cap = balance_cap(h, p.k, eps)
    return all(w <= cap for w in p.block_weight)


def imbalance(h, p: Partition) -> float:
    """max block weight relative to ceil(W/k), minus one."""
    return max(p.block_weight) / balance_ceiling(h.total_weight, p.k) - 1.0


def signature(h, p: Partition) -> Counter:
    """Cut-edge multiset: each edge appears lambda(e) - 1 times."""
    return Counter({e: lam - 1 for e, lam in enumerate(p.lambdas) if lam > 1})


def audit_partition(h, p: Partition):
    """Full-recompute consistency check; raises AssertionError on divergence.

    Single-pin edges are checked for shape only (one entry, lambda 1): moves
    skip them, so the surviving block id may lag until the edge regrows."""
    ref = Partition(h, p.k, p.block_of, require_nonempty=False)
    assert ref.block_weight == p.block_weight, "block weights diverged"
    assert ref.block_size == p.block_size, "block sizes diverged"
    assert ref.lambdas == p.lambdas, "lambda values diverged"
    for e in range(h.num_edges):
        a, b = ref.pins_in_block[e], p.pins_in_block[e]
        total = sum(b) if p.dense else sum(b.values())
        assert total == len(h.edge_pins[e]), f"edge {e}: pin count total diverged"
        if len(h.edge_pins[e]) < 2:
            continue
        if p.dense:
            assert a == b, f"edge {e}: pin counts diverged"
        else:
            assert {x: c for x, c in a.items() if c} == {
                x: c for x, c in b.items() if c
            }, f"edge {e}: pin counts diverged"
