import pytest
from hypothesis import given, settings

from conftest import (
    barbell7,
    brute_total_connectivity,
    graphs,
    path_graph,
    random_graph,
    triangle,
    naive_greedy,
    union_find_connectivity,
)
from gnnshs.datasets import generate_pa
from gnnshs.errors import InvalidEdgeError, InvalidKError, InvalidPairError
from gnnshs.graph import Graph, induced_subgraph_without
from gnnshs.oracle import (
    ShsResult,
    connectivity_score,
    greedy_top_k,
    label_top_k,
    pairwise_connectivity,
    read_labels,
    score_all_nodes,
    total_pairwise_connectivity,
    write_labels,
)


def test_pairwise_connectivity_examples():
    assert pairwise_connectivity(triangle(), 0, 2) == 1
    assert pairwise_connectivity(Graph(4, [(0, 1), (2, 3)]), 0, 3) == 0
    with pytest.raises(InvalidPairError):
        pairwise_connectivity(triangle(), 0, 0)
    with pytest.raises(InvalidEdgeError):
        pairwise_connectivity(triangle(), 0, 9)


def test_total_connectivity_examples():
    assert total_pairwise_connectivity(triangle()) == 6
    two_three = Graph(5, [(0, 1), (2, 3), (3, 4)])
    assert total_pairwise_connectivity(two_three) == 8
    for n in (0, 1, 7):
        assert total_pairwise_connectivity(Graph(n)) == 0


@pytest.mark.parametrize("seed", range(5))
def test_total_connectivity_matches_double_sum_n64(seed):
    g = random_graph(64, 0.03, seed)
    direct = sum(
        pairwise_connectivity(g, i, j) for i in range(g.n) for j in range(g.n) if i != j
    )
    assert total_pairwise_connectivity(g) == direct


def test_connectivity_score_examples(barbell):
    p3 = path_graph(3)
    assert connectivity_score(p3, 1).score == 6
    assert connectivity_score(p3, 0).score == 4
    # brute force: 7*6 ordered pairs, minus 3*2 for each remaining triangle
    assert total_pairwise_connectivity(barbell) == 42
    assert total_pairwise_connectivity(induced_subgraph_without(barbell, {3})) == 12
    assert connectivity_score(barbell, 3).score == 30
    with pytest.raises(InvalidEdgeError):
        connectivity_score(p3, 3)


def test_score_all_nodes_examples():
    assert [s.score for s in score_all_nodes(path_graph(3))] == [4, 6, 4]
    assert [s.score for s in score_all_nodes(Graph(5))] == [0] * 5


def test_score_all_nodes_matches_brute_force_n48():
    g = random_graph(48, 0.05, 11)
    edges = list(g.edges())
    base = union_find_connectivity(g.n, edges)
    expected = [base - union_find_connectivity(g.n, edges, skip=v) for v in range(g.n)]
    assert [s.score for s in score_all_nodes(g)] == expected


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_component_formula_equals_double_sum(g):
    assert total_pairwise_connectivity(g) == brute_total_connectivity(g)


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=40))
def test_scores_nonnegative_and_exact(g):
    full = total_pairwise_connectivity(g)
    for s in score_all_nodes(g):
        assert s.score >= 0
        assert s.score == full - total_pairwise_connectivity(induced_subgraph_without(g, {s.node}))


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=50))
def test_scores_independent_of_worker_count(g):
    serial = score_all_nodes(g, workers=1)
    assert score_all_nodes(g, workers=3) == serial
    assert score_all_nodes(g, workers=8) == serial


def test_label_top_k_examples():
    p3 = path_graph(3)
    assert label_top_k(p3, 1).spanners == [1]
    assert label_top_k(p3, 2).spanners == [1, 0]
    with pytest.raises(InvalidKError):
        label_top_k(p3, 4)
    with pytest.raises(InvalidKError):
        label_top_k(p3, 0)


def test_label_top_k_pa500_against_brute_force():
    g = generate_pa(500, 3)
    edges = list(g.edges())
    base = union_find_connectivity(g.n, edges)
    scores = [base - union_find_connectivity(g.n, edges, skip=v) for v in range(g.n)]
    expected = sorted(range(g.n), key=lambda v: (-scores[v], v))[:50]
    result = label_top_k(g, 50)
    assert result.spanners == expected
    assert len(set(result.spanners)) == 50
    assert sum(result.labels(g.n)) == 50


def test_greedy_examples(barbell):
    assert greedy_top_k(barbell, 1).spanners == [3]
    p5 = path_graph(5)
    assert [s.score for s in score_all_nodes(p5)][2] == 16
    assert greedy_top_k(p5, 2).spanners == [2, 0]
    full = greedy_top_k(p5, 5)
    assert sorted(full.spanners) == list(range(5))
    assert full.residual_connectivity == 0


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=30, min_n=1))
def test_greedy_first_pick_and_k1_agreement(g):
    scores = [s.score for s in score_all_nodes(g)]
    argmax = max(range(g.n), key=lambda v: (scores[v], -v))
    assert greedy_top_k(g, 1).spanners == [argmax]
    assert label_top_k(g, 1).spanners == [argmax]


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=25, min_n=1))
def test_greedy_matches_naive(g):
    k = min(4, g.n)
    res = greedy_top_k(g, k)
    assert res.spanners == naive_greedy(g, k)
    assert len(set(res.spanners)) == k
    assert res.residual_connectivity == total_pairwise_connectivity(
        induced_subgraph_without(g, res.spanners)
    )


def test_labels_file_round_trip(tmp_path):
    labels = ShsResult([2, 0], 0).labels(4)
    path = tmp_path / "labels.txt"
    write_labels(labels, path)
    assert path.read_text() == "0 1\n1 0\n2 1\n3 0\n"
    assert read_labels(path, 4) == labels
