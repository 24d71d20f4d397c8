import random

import networkx as nx
import pytest

from damtsim import ontology as og
from damtsim.ontology import (
    DomainOntology,
    MappingLink,
    OntologyGraph,
    VoPath,
    concept_name,
)


def tiny_medic_graph():
    """Hand-built 3-domain fixture: health <-> clinic <-> field."""
    health = DomainOntology(0, frozenset({"doctor", "nurse", "ward"}))
    clinic = DomainOntology(1, frozenset({"physician", "assistant", "room"}))
    field = DomainOntology(2, frozenset({"medic", "helper"}))
    l01 = MappingLink(0, 1, {"doctor": "physician", "nurse": "assistant", "ward": "room"})
    l12 = MappingLink(1, 2, {"physician": "medic", "assistant": "helper"})
    return OntologyGraph([health, clinic, field], [l01, l12])


def to_networkx(graph: OntologyGraph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(graph.vo_ids())
    for a in graph.vo_ids():
        for b in graph.neighbors(a):
            g.add_edge(a, b)
    return g


def test_translate_single_hop():
    g = tiny_medic_graph()
    assert g.translate("doctor", 0, 1) == "physician"
    assert g.translate("physician", 1, 0) == "doctor"
    assert g.translate("room", 1, 2) is None  # outside the mapped support


def test_translate_missing_link_raises():
    g = tiny_medic_graph()
    with pytest.raises(og.NoMappingLink):
        g.translate("doctor", 0, 2)


def test_translate_along_path_and_reverse():
    g = tiny_medic_graph()
    path = VoPath(((0, 1), (1, 2)))
    assert g.translate_along_path("doctor", path) == "medic"
    assert g.translate_along_path("medic", path.reversed()) == "doctor"
    # drops out mid-path: ward has no image in the field ontology
    assert g.translate_along_path("ward", path) is None


def test_malformed_path_rejected():
    with pytest.raises(og.MalformedPath):
        VoPath(((0, 1), (2, 0)))


def test_mapping_must_be_injective():
    with pytest.raises(og.OntologyError):
        MappingLink(0, 1, {"a": "x", "b": "x"})


def test_path_graph_diameter():
    g = og.path_graph(5, corpus_size=4)
    assert g.is_connected()
    assert g.diameter() == 4
    assert g.neighbors(2) == [1, 3]


def test_star_graph_diameter():
    g = og.star_graph(6, corpus_size=4)
    assert g.diameter() == 2
    assert g.neighbors(0) == [1, 2, 3, 4, 5]
    assert g.neighbors(3) == [0]


def test_complete_graph_diameter():
    g = og.complete_graph(7, corpus_size=4)
    assert g.diameter() == 1
    assert g.edge_count() == 21


def test_single_vo_graph():
    g = og.path_graph(1, corpus_size=3)
    assert g.is_connected()
    assert g.diameter() == 0
    assert g.neighbors(0) == []


def test_diameter_matches_bfs_oracle_on_random_graphs():
    # independent all-pairs oracle over 60 seeded random connected graphs
    for seed in range(60):
        rng = random.Random(seed)
        n = rng.randrange(2, 13)
        g = og.random_connected_graph(n, corpus_size=3, rng=rng)
        oracle = to_networkx(g)
        assert nx.is_connected(oracle)
        assert g.is_connected()
        assert g.diameter() == nx.diameter(oracle)


def test_superpeer_graph_min_degree_and_connectivity():
    for seed in (1, 7, 42):
        rng = random.Random(seed)
        for n in (2, 5, 10, 40):
            g = og.superpeer_graph(n, corpus_size=3, rng=rng)
            want = min(4, n - 1)
            assert all(len(g.neighbors(v)) >= want for v in g.vo_ids())
            assert g.is_connected()


def test_full_coverage_translation_round_trip_property():
    # along any simple path in a full-coverage graph, forward then reverse
    # translation is the identity
    for seed in range(25):
        rng = random.Random(1000 + seed)
        n = rng.randrange(2, 10)
        g = og.random_connected_graph(n, corpus_size=6, coverage=1.0, rng=rng)
        oracle = to_networkx(g)
        src, dst = rng.sample(g.vo_ids(), 2)
        hops = nx.shortest_path(oracle, src, dst)
        path = VoPath(tuple((hops[i], hops[i + 1]) for i in range(len(hops) - 1)))
        slot = rng.randrange(6)
        c = concept_name(slot, src)
        out = g.translate_along_path(c, path)
        assert out == concept_name(slot, dst)
        assert g.translate_along_path(out, path.reversed()) == c


def test_partial_coverage_prunes_some_translations():
    rng = random.Random(9)
    g = og.path_graph(4, corpus_size=50, coverage=0.5, rng=rng)
    path = VoPath(((0, 1), (1, 2), (2, 3)))
    outcomes = {g.translate_along_path(concept_name(k, 0), path) is None for k in range(50)}
    assert outcomes == {True, False}  # some survive, some prune


def test_immutability_of_accessors():
    g = tiny_medic_graph()
    g.neighbors(0).append(99)
    assert g.neighbors(0) == [1]
