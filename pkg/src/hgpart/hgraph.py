"""Hypergraph core: incidence structure, hMetis-format I/O, and node
contraction with exact (bit-identical) undo.

Internal node and edge ids are 0-indexed; all file I/O converts between the
1-indexed hMetis convention and internal ids at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable


class HmetisFormatError(ValueError):
    """A .hgr stream violates the hMetis text conventions."""


@dataclass
class ContractionMemento:
    """Undo record for one contraction (``removed_node`` merged into ``kept_node``).

    ``moved_edges`` are the edges where the removed node was replaced in place
    by the kept node; ``shrunk_edges`` are (edge id, former pin position) pairs
    for edges that already contained the kept node, where the removed pin was
    deleted. Together they are exactly N(removed) at contraction time.
    """

    kept_node: int
    removed_node: int
    moved_edges: list = field(default_factory=list)
    shrunk_edges: list = field(default_factory=list)
    removed_weight: int = 0
    # position in the owning hypergraph's contraction stack, for nesting checks
    stack_depth: int = 0


class Hypergraph:
    """Mutable hypergraph with per-node/per-edge weights and contraction support.

    A hypergraph not undergoing contraction is safe to read from many threads;
    contraction sequences are single-owner. Parallel edges (identical pin
    sets) are kept distinct; merging them would be a possible optimization for
    dense instances but is never required for correctness.
    """

    def __init__(self, num_nodes, edge_pins, node_weight=None, edge_cost=None):
        self.num_nodes = num_nodes
        self.num_edges = len(edge_pins)
        self.edge_pins = [list(p) for p in edge_pins]
        self.node_weight = list(node_weight) if node_weight is not None else [1] * num_nodes
        self.edge_cost = list(edge_cost) if edge_cost is not None else [1] * self.num_edges
        self.active = [True] * num_nodes
        self.num_active = num_nodes
        self.node_edges = [[] for _ in range(num_nodes)]
        # per-node edges that still have >= 2 pins; single-pin edges are inert
        # for rating, gain computation and moves, and hot paths iterate these
        # sets instead of the full incidence lists
        self.live_edges = [set() for _ in range(num_nodes)]
        for e, pins in enumerate(self.edge_pins):
            if not pins:
                raise ValueError(f"edge {e} has no pins")
            if len(set(pins)) != len(pins):
                raise ValueError(f"edge {e} has a repeated pin")
            live = len(pins) >= 2
            for v in pins:
                if not 0 <= v < num_nodes:
                    raise ValueError(f"edge {e} pin {v} out of range")
                self.node_edges[v].append(e)
                if live:
                    self.live_edges[v].add(e)
        if len(self.node_weight) != num_nodes:
            raise ValueError("node weight count mismatch")
        if len(self.edge_cost) != self.num_edges:
            raise ValueError("edge cost count mismatch")
        if any(w < 0 for w in self.node_weight) or any(c < 0 for c in self.edge_cost):
            raise ValueError("weights and costs must be non-negative")
        self.total_weight = sum(self.node_weight)
        self._stack_depth = 0

    # -- queries ---------------------------------------------------------

    def active_nodes(self):
        return [v for v in range(self.num_nodes) if self.active[v]]

    def total_pins(self):
        return sum(len(p) for p in self.edge_pins)

    def copy(self) -> "Hypergraph":
        """Deep copy; only valid with no live contractions."""
        if self._stack_depth:
            raise ValueError("cannot copy a hypergraph with live contractions")
        return Hypergraph(self.num_nodes, self.edge_pins, self.node_weight, self.edge_cost)

    # -- contraction -----------------------------------------------------

    def contract(self, u, v) -> ContractionMemento:
        """Merge node v into node u and return the memento that undoes it.

        w(u) grows by w(v); v is replaced by u in every edge of N(v) \\ N(u)
        and deleted from every edge of N(v) ∩ N(u); v becomes inactive.
        """
        if u == v:
            raise ValueError("cannot contract a node with itself")
        if not (self.active[u] and self.active[v]):
            raise ValueError("contract requires two active nodes")
        edge_pins = self.edge_pins
        live_u = self.live_edges[u]
        moved = []
        shrunk = []
        for e in self.node_edges[v]:
            pins = edge_pins[e]
            vpos = -1
            has_u = False
            for i, x in enumerate(pins):
                if x == v:
                    vpos = i
                elif x == u:
                    has_u = True
            if has_u:
                del pins[vpos]
                shrunk.append((e, vpos))
                if len(pins) == 1:
                    live_u.discard(e)
            else:
                pins[vpos] = u
                moved.append(e)
                if len(pins) >= 2:
                    live_u.add(e)
        ne_u = self.node_edges[u]
        for e in moved:
            ne_u.append(e)
        self.node_weight[u] += self.node_weight[v]
        self.active[v] = False
        self.num_active -= 1
        self._stack_depth += 1
        return ContractionMemento(u, v, moved, shrunk, self.node_weight[v], self._stack_depth)

    def uncontract(self, m: ContractionMemento):
        """Exact inverse of the matching contract; enforces stack discipline."""
        if m.stack_depth != self._stack_depth:
            raise ValueError("uncontract out of stack order")
        u, v = m.kept_node, m.removed_node
        edge_pins = self.edge_pins
        live_u = self.live_edges[u]
        for e in m.moved_edges:
            pins = edge_pins[e]
            pins[pins.index(u)] = v
            if len(pins) >= 2:
                live_u.discard(e)
        for e, pos in m.shrunk_edges:
            pins = edge_pins[e]
            pins.insert(pos, v)
            if len(pins) == 2:
                live_u.add(e)
        if m.moved_edges:
            del self.node_edges[u][-len(m.moved_edges):]
        self.node_weight[u] -= m.removed_weight
        self.active[v] = True
        self.num_active += 1
        self._stack_depth -= 1


# -- hMetis-format I/O ----------------------------------------------------


def _data_lines(text: str | IO | Iterable[str]):
    if isinstance(text, str):
        raw = text.splitlines()
    else:
        raw = text
    for line in raw:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        yield s


def parse_hmetis(text) -> Hypergraph:
    """Parse hMetis hypergraph text (string, file object, or line iterable).

    Header is ``m n [fmt]`` with fmt in {absent, 1, 10, 11}: 1 = edge costs
    present, 10 = node weights present, 11 = both. Pins are 1-indexed in the
    file. Comment lines start with '%'. Content past the declared data is
    ignored (lenient, like common hMetis readers).
    """
    lines = _data_lines(text)
    try:
        header = next(lines)
    except StopIteration:
        raise HmetisFormatError("empty input") from None
    parts = header.split()
    if len(parts) not in (2, 3):
        raise HmetisFormatError(f"malformed header: {header!r}")
    try:
        num_edges, num_nodes = int(parts[0]), int(parts[1])
        fmt = int(parts[2]) if len(parts) == 3 else 0
    except ValueError:
        raise HmetisFormatError(f"malformed header: {header!r}") from None
    if num_edges < 0 or num_nodes < 0 or fmt not in (0, 1, 10, 11):
        raise HmetisFormatError(f"malformed header: {header!r}")
    has_costs = fmt in (1, 11)
    has_weights = fmt in (10, 11)

    edge_pins = []
    edge_cost = []
    for i in range(num_edges):
        try:
            line = next(lines)
        except StopIteration:
            raise HmetisFormatError(
                f"expected {num_edges} edge lines, found {i}"
            ) from None
        try:
            nums = [int(tok) for tok in line.split()]
        except ValueError:
            raise HmetisFormatError(f"bad edge line: {line!r}") from None
        if has_costs:
            if not nums:
                raise HmetisFormatError(f"edge {i + 1}: missing cost")
            cost, nums = nums[0], nums[1:]
            if cost < 0:
                raise HmetisFormatError(f"edge {i + 1}: negative cost")
        else:
            cost = 1
        if not nums:
            raise HmetisFormatError(f"edge {i + 1}: empty edge")
        pins = []
        seen = set()
        for p in nums:
            if not 1 <= p <= num_nodes:
                raise HmetisFormatError(f"edge {i + 1}: pin {p} out of [1, {num_nodes}]")
            if p in seen:
                raise HmetisFormatError(f"edge {i + 1}: duplicate pin {p}")
            seen.add(p)
            pins.append(p - 1)
        edge_pins.append(pins)
        edge_cost.append(cost)

    node_weight = None
    if has_weights:
        node_weight = []
        for i in range(num_nodes):
            try:
                line = next(lines)
            except StopIteration:
                raise HmetisFormatError(
                    f"expected {num_nodes} node weight lines, found {i}"
                ) from None
            toks = line.split()
            try:
                w = int(toks[0])
            except (IndexError, ValueError):
                raise HmetisFormatError(f"bad weight line: {line!r}") from None
            if w < 0:
                raise HmetisFormatError(f"node {i + 1}: negative weight")
            node_weight.append(w)

    return Hypergraph(num_nodes, edge_pins, node_weight, edge_cost)


def write_hmetis(h: Hypergraph, sink):
    """Write h in hMetis text form (weights/costs emitted only when non-unit)."""
    has_costs = any(c != 1 for c in h.edge_cost)
    has_weights = any(w != 1 for w in h.node_weight)
    fmt = {(False, False): "", (True, False): " 1", (False, True): " 10", (True, True): " 11"}[
        (has_costs, has_weights)
    ]
    out = [f"{h.num_edges} {h.num_nodes}{fmt}"]
    for e in range(h.num_edges):
        pins = " ".join(str(v + 1) for v in h.edge_pins[e])
        out.append(f"{h.edge_cost[e]} {pins}" if has_costs else pins)
    if has_weights:
        out.extend(str(w) for w in h.node_weight)
    _write_lines(sink, out)


def write_partition_file(assignment, sink):
    """Write one block id per line in node order (hMetis output convention)."""
    _write_lines(sink, [str(b) for b in assignment])


def read_partition_file(source) -> list:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r") as f:
            text = f.read()
    return [int(line) for line in text.split()]


def _write_lines(sink, lines):
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w") as f:
            f.write(text)
