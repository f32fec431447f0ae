import glob
import io
import os
from random import Random

import pytest

from hgpart import (
    HmetisFormatError,
    Hypergraph,
    parse_hmetis,
    read_partition_file,
    write_hmetis,
    write_partition_file,
)
from helpers import check_incidence, quad, random_hypergraph, snapshot


# -- parsing -----------------------------------------------------------------


def test_parse_minimal():
    h = parse_hmetis("1 2\n1 2\n")
    assert h.num_nodes == 2
    assert h.num_edges == 1
    assert h.edge_pins == [[0, 1]]
    assert h.node_weight == [1, 1]
    assert h.edge_cost == [1]


def test_parse_weighted_and_costed(data_dir):
    with open(os.path.join(data_dir, "weighted.hgr")) as f:
        h = parse_hmetis(f)
    assert h.edge_cost == [5, 2, 7]
    assert h.node_weight == [1, 1, 2, 3]
    assert h.edge_pins == [[0, 1], [2, 3], [0, 2, 3]]


def test_parse_costs_only(data_dir):
    with open(os.path.join(data_dir, "costs_only.hgr")) as f:
        h = parse_hmetis(f)
    assert h.edge_cost == [4, 9]
    assert h.node_weight == [1, 1, 1]


def test_parse_weights_only(data_dir):
    with open(os.path.join(data_dir, "weights_only.hgr")) as f:
        h = parse_hmetis(f)
    assert h.edge_cost == [1, 1]
    assert h.node_weight == [7, 1, 5]


def test_parse_comments_and_blank_lines():
    text = "% header comment\n\n2 3\n% edge comment\n1 2\n\n2 3\n"
    h = parse_hmetis(text)
    assert h.num_edges == 2
    assert h.edge_pins == [[0, 1], [1, 2]]


def test_parse_rejects_all_corrupt_fixtures(data_dir):
    paths = sorted(glob.glob(os.path.join(data_dir, "corrupt", "*.hgr")))
    assert len(paths) >= 8
    for path in paths:
        with open(path) as f:
            with pytest.raises(HmetisFormatError):
                parse_hmetis(f)


def test_parse_accepts_shipped_corpus(data_dir):
    for path in sorted(glob.glob(os.path.join(data_dir, "*.hgr"))):
        with open(path) as f:
            h = parse_hmetis(f)
        check_incidence(h)


def test_parse_ibm06_counts_when_available():
    """Published size of the ibm06 circuit; runs only if a copy is provided."""
    path = os.environ.get(
        "HGPART_IBM06", os.path.join(os.path.dirname(__file__), "data", "ibm06.hgr")
    )
    if not os.path.exists(path):
        pytest.skip("ibm06.hgr not available offline")
    with open(path) as f:
        h = parse_hmetis(f)
    assert h.num_nodes == 32498
    assert h.num_edges == 34826
    assert h.total_pins() == 128182


def test_write_hmetis_round_trip():
    rng = Random(5)
    for _ in range(30):
        h = random_hypergraph(rng, random_weights=True, random_costs=True)
        buf = io.StringIO()
        write_hmetis(h, buf)
        h2 = parse_hmetis(buf.getvalue())
        assert h2.edge_pins == h.edge_pins
        assert h2.node_weight == h.node_weight
        assert h2.edge_cost == h.edge_cost


# -- contraction --------------------------------------------------------------


def test_contract_hand_trace():
    h = quad()
    m = h.contract(2, 3)
    assert h.edge_pins == [[0, 1], [1, 2], [0, 2]]
    assert h.node_weight[2] == 2
    assert not h.active[3]
    assert h.num_active == 3
    assert m.kept_node == 2 and m.removed_node == 3
    assert m.moved_edges == []
    assert sorted(e for e, _ in m.shrunk_edges) == [1, 2]
    check_incidence(h)


def test_contract_moved_edges():
    # e0={0,1} moves to node 2 when 1 is swallowed; e1={1,2} shrinks
    h = Hypergraph(3, [[0, 1], [1, 2]])
    m = h.contract(2, 1)
    assert h.edge_pins == [[0, 2], [2]]
    assert m.moved_edges == [0]
    assert m.shrunk_edges == [(1, 0)]
    assert 0 in h.node_edges[2]
    h.uncontract(m)
    assert h.edge_pins == [[0, 1], [1, 2]]
    check_incidence(h)


def test_contract_full_overlap_only_deletes():
    # N(v) subset of N(u): v simply vanishes from its edges, nothing moves
    h = Hypergraph(3, [[0, 1, 2], [0, 1]])
    sizes = [len(p) for p in h.edge_pins]
    m = h.contract(0, 1)
    assert m.moved_edges == []
    assert [len(p) for p in h.edge_pins] == [s - 1 for s in sizes]


def test_contract_errors():
    h = quad()
    with pytest.raises(ValueError):
        h.contract(1, 1)
    h.contract(2, 3)
    with pytest.raises(ValueError):
        h.contract(0, 3)
    with pytest.raises(ValueError):
        h.contract(3, 0)


def test_uncontract_stack_discipline():
    h = quad()
    m1 = h.contract(0, 1)
    m2 = h.contract(0, 2)
    with pytest.raises(ValueError):
        h.uncontract(m1)
    h.uncontract(m2)
    h.uncontract(m1)
    assert h.edge_pins == quad().edge_pins


def test_nested_contract_uncontract_restores():
    h = quad()
    before = snapshot(h)
    ma = h.contract(0, 1)
    mb = h.contract(0, 2)
    h.uncontract(mb)
    h.uncontract(ma)
    assert snapshot(h) == before


def test_contract_uncontract_thousand_random_pairs():
    rng = Random(11)
    pairs = 0
    while pairs < 1000:
        h = random_hypergraph(rng, max_nodes=12, max_edges=14)
        before = snapshot(h)
        u, v = rng.sample(range(h.num_nodes), 2)
        m = h.contract(u, v)
        check_incidence(h)
        h.uncontract(m)
        assert snapshot(h) == before
        check_incidence(h)
        pairs += 1


def test_random_contraction_chains_round_trip():
    rng = Random(23)
    for _ in range(100):
        h = random_hypergraph(rng, max_nodes=30, min_nodes=10, max_edges=40)
        before = snapshot(h)
        total = h.total_weight
        stack = []
        for _ in range(50):
            if h.num_active < 2:
                break
            alive = h.active_nodes()
            u, v = rng.sample(alive, 2)
            stack.append(h.contract(u, v))
            assert sum(h.node_weight[x] for x in h.active_nodes()) == total
        check_incidence(h)
        while stack:
            h.uncontract(stack.pop())
        assert snapshot(h) == before
        check_incidence(h)


# -- partition files -----------------------------------------------------------


def test_write_partition_file_format(tmp_path):
    path = tmp_path / "p.part"
    write_partition_file([0, 0, 1, 1], str(path))
    assert path.read_text() == "0\n0\n1\n1\n"
    assert read_partition_file(str(path)) == [0, 0, 1, 1]


def test_partition_file_round_trip_large_ids(tmp_path):
    rng = Random(3)
    assignment = [rng.randrange(128) for _ in range(500)]
    assignment[0] = 127  # make sure the top id appears
    path = tmp_path / "big.part"
    write_partition_file(assignment, str(path))
    assert read_partition_file(str(path)) == assignment
    assert max(read_partition_file(str(path))) == max(assignment)
