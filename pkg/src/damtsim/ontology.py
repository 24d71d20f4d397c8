"""Ontology-level view of the network: which domains exist and how concepts
translate between them.

Vertices are domain ontologies (one per virtual organization), edges are
mapping links carrying a pair of mutually inverse partial translation tables.
The graph is immutable after construction; every query-routing decision in the
discovery protocols reduces to `neighbors`, `translate` and `diameter` calls
on this structure.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

ConceptId = str  # opaque short identifier, unique within one ontology's concept set


class OntologyError(Exception):
    pass


class UnknownOntology(OntologyError):
    pass


class NoMappingLink(OntologyError):
    pass


class MalformedPath(OntologyError):
    pass


class UntranslatableConcept(OntologyError):
    pass


class DisconnectedGraph(OntologyError):
    pass


@dataclass(frozen=True)
class DomainOntology:
    """A domain ontology: an id and its flat concept vocabulary."""

    id: int
    concepts: frozenset[str]

    def __post_init__(self) -> None:
        if len(self.concepts) == 0:
            raise OntologyError(f"ontology {self.id} has an empty concept set")


class MappingLink:
    """Undirected mapping edge between two ontologies.

    `forward` maps concepts of endpoint `a` to endpoint `b`; `backward` is its
    exact inverse. Both are partial: concepts outside the mapped support do
    not translate across this link.
    """

    __slots__ = ("a", "b", "forward", "backward")

    def __init__(self, a: int, b: int, forward: dict[str, str]):
        if a == b:
            raise OntologyError(f"self-link on ontology {a}")
        values = list(forward.values())
        if len(set(values)) != len(values):
            raise OntologyError(f"mapping {a}<->{b} is not injective")
        self.a = a
        self.b = b
        self.forward = dict(forward)
        self.backward = {v: k for k, v in forward.items()}

    def endpoints(self) -> frozenset[int]:
        return frozenset((self.a, self.b))

    def translate(self, concept: str, source: int) -> str | None:
        """Translate across this link, or None when outside the mapped support."""
        if source == self.a:
            return self.forward.get(concept)
        if source == self.b:
            return self.backward.get(concept)
        raise UnknownOntology(f"ontology {source} is not an endpoint of {self.a}<->{self.b}")


@dataclass(frozen=True)
class VoPath:
    """Ordered walk over mapping edges, recorded as (from, to) steps."""

    steps: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        prev_to: int | None = None
        for frm, to in self.steps:
            if prev_to is not None and frm != prev_to:
                raise MalformedPath(f"step {frm}->{to} does not continue from {prev_to}")
            prev_to = to

    def extend(self, frm: int, to: int) -> "VoPath":
        return VoPath(self.steps + ((frm, to),))

    def reversed(self) -> "VoPath":
        return VoPath(tuple((to, frm) for frm, to in reversed(self.steps)))

    def visited(self) -> tuple[int, ...]:
        if not self.steps:
            return ()
        return (self.steps[0][0],) + tuple(to for _, to in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


class OntologyGraph:
    """Immutable graph of domain ontologies joined by mapping links."""

    def __init__(self, ontologies: list[DomainOntology], links: list[MappingLink]):
        self.ontologies: dict[int, DomainOntology] = {}
        for onto in ontologies:
            if onto.id in self.ontologies:
                raise OntologyError(f"duplicate ontology id {onto.id}")
            self.ontologies[onto.id] = onto
        self._links: dict[frozenset[int], MappingLink] = {}
        self._adj: dict[int, list[int]] = {oid: [] for oid in self.ontologies}
        for link in links:
            for end in (link.a, link.b):
                if end not in self.ontologies:
                    raise UnknownOntology(f"link endpoint {end} is not an ontology")
            key = link.endpoints()
            if key in self._links:
                raise OntologyError(f"duplicate link {sorted(key)}")
            self._check_support(link)
            self._links[key] = link
            self._adj[link.a].append(link.b)
            self._adj[link.b].append(link.a)
        for oid in self._adj:
            self._adj[oid].sort()
        self._diameter: int | None = None

    def _check_support(self, link: MappingLink) -> None:
        onto_a, onto_b = self.ontologies[link.a], self.ontologies[link.b]
        for src, dst in link.forward.items():
            if src not in onto_a.concepts or dst not in onto_b.concepts:
                raise OntologyError(
                    f"mapping {link.a}<->{link.b} uses concepts outside the vocabularies"
                )

    def vo_ids(self) -> list[int]:
        return sorted(self.ontologies)

    def neighbors(self, oid: int) -> list[int]:
        if oid not in self._adj:
            raise UnknownOntology(f"no ontology {oid}")
        return list(self._adj[oid])

    def link_between(self, a: int, b: int) -> MappingLink:
        link = self._links.get(frozenset((a, b)))
        if link is None:
            raise NoMappingLink(f"no mapping link between {a} and {b}")
        return link

    def edge_count(self) -> int:
        return len(self._links)

    def is_connected(self) -> bool:
        ids = self.vo_ids()
        if not ids:
            return True
        seen = {ids[0]}
        frontier = [ids[0]]
        while frontier:
            nxt = []
            for oid in frontier:
                for other in self._adj[oid]:
                    if other not in seen:
                        seen.add(other)
                        nxt.append(other)
            frontier = nxt
        return len(seen) == len(ids)

    def eccentricity(self, oid: int) -> int:
        """Longest shortest-path distance from `oid`, by breadth-first search."""
        dist = {oid: 0}
        frontier = [oid]
        depth = 0
        while frontier:
            depth += 1
            nxt = []
            for cur in frontier:
                for other in self._adj[cur]:
                    if other not in dist:
                        dist[other] = depth
                        nxt.append(other)
            frontier = nxt
        if len(dist) != len(self.ontologies):
            raise DisconnectedGraph("eccentricity undefined on a disconnected graph")
        return max(dist.values())

    def diameter(self) -> int:
        if self._diameter is None:
            if not self.is_connected():
                raise DisconnectedGraph("diameter undefined on a disconnected graph")
            self._diameter = max(self.eccentricity(oid) for oid in self.ontologies)
        return self._diameter

    def translate(self, concept: str, source: int, target: int) -> str | None:
        """One-hop translation along the (source, target) mapping link.

        Returns None when the concept is outside the link's mapped support;
        raises NoMappingLink when the edge does not exist at all.
        """
        return self.link_between(source, target).translate(concept, source)

    def translate_along_path(self, concept: str, path: VoPath) -> str | None:
        current = concept
        for frm, to in path.steps:
            current = self.translate(current, frm, to)
            if current is None:
                return None
        return current


# --- generators -------------------------------------------------------------
#
# All generators share one concept model: a global corpus of `corpus_size`
# slots; ontology `i` names slot `k` as "c{k}~{i}". A mapping link between i
# and j aligns the slots whose index survives the link's coverage draw, so a
# full-coverage graph translates any concept along any path and lands on the
# same slot.


def concept_name(slot: int, oid: int) -> str:
    return f"c{slot}~{oid}"


def _make_ontology(oid: int, corpus_size: int) -> DomainOntology:
    return DomainOntology(oid, frozenset(concept_name(k, oid) for k in range(corpus_size)))


def _make_link(a: int, b: int, corpus_size: int, coverage: float, rng: random.Random) -> MappingLink:
    forward = {}
    for k in range(corpus_size):
        if coverage >= 1.0 or rng.random() < coverage:
            forward[concept_name(k, a)] = concept_name(k, b)
    if not forward:
        # a structurally empty link would silently disconnect the graph
        forward[concept_name(0, a)] = concept_name(0, b)
    return MappingLink(a, b, forward)


def _build(edges: list[tuple[int, int]], vo_count: int, corpus_size: int,
           coverage: float, rng: random.Random) -> OntologyGraph:
    ontologies = [_make_ontology(i, corpus_size) for i in range(vo_count)]
    links = [_make_link(a, b, corpus_size, coverage, rng) for a, b in sorted(edges)]
    return OntologyGraph(ontologies, links)


def path_graph(vo_count: int, corpus_size: int, coverage: float = 1.0,
               rng: random.Random | None = None) -> OntologyGraph:
    rng = rng or random.Random(0)
    if vo_count < 1:
        raise OntologyError("need at least one ontology")
    edges = [(i, i + 1) for i in range(vo_count - 1)]
    return _build(edges, vo_count, corpus_size, coverage, rng)


def star_graph(vo_count: int, corpus_size: int, coverage: float = 1.0,
               rng: random.Random | None = None) -> OntologyGraph:
    rng = rng or random.Random(0)
    if vo_count < 2:
        raise OntologyError("a star needs a hub and at least one leaf")
    edges = [(0, i) for i in range(1, vo_count)]
    return _build(edges, vo_count, corpus_size, coverage, rng)


def complete_graph(vo_count: int, corpus_size: int, coverage: float = 1.0,
                   rng: random.Random | None = None) -> OntologyGraph:
    rng = rng or random.Random(0)
    edges = [(i, j) for i in range(vo_count) for j in range(i + 1, vo_count)]
    return _build(edges, vo_count, corpus_size, coverage, rng)


def random_connected_graph(vo_count: int, corpus_size: int, coverage: float = 1.0,
                           rng: random.Random | None = None,
                           extra_edges: int | None = None) -> OntologyGraph:
    """Random spanning tree plus `extra_edges` chords (default ~20% of |V|).

    Connectivity holds by construction; the tree is drawn uniformly over
    attachment orders, which keeps typical diameters small without letting
    the edge count approach the complete graph.
    """
    rng = rng or random.Random(0)
    if vo_count < 1:
        raise OntologyError("need at least one ontology")
    if extra_edges is None:
        extra_edges = max(1, round(0.2 * vo_count)) if vo_count > 2 else 0
    order = list(range(vo_count))
    rng.shuffle(order)
    edges: set[tuple[int, int]] = set()
    for pos in range(1, vo_count):
        attach = order[rng.randrange(pos)]
        a, b = sorted((order[pos], attach))
        edges.add((a, b))
    candidates = [(i, j) for i in range(vo_count) for j in range(i + 1, vo_count)
                  if (i, j) not in edges]
    rng.shuffle(candidates)
    for edge in candidates[:extra_edges]:
        edges.add(edge)
    return _build(sorted(edges), vo_count, corpus_size, coverage, rng)


def superpeer_graph(vo_count: int, corpus_size: int, coverage: float = 1.0,
                    rng: random.Random | None = None,
                    min_degree: int = 4) -> OntologyGraph:
    """Random graph where every vertex keeps at least `min_degree` neighbors
    (capped at vo_count - 1), patched to connectivity with extra edges."""
    rng = rng or random.Random(0)
    if vo_count < 2:
        return _build([], vo_count, corpus_size, coverage, rng)
    want = min(min_degree, vo_count - 1)
    edges: set[tuple[int, int]] = set()
    degree = {i: 0 for i in range(vo_count)}
    for i in range(vo_count):
        others = [j for j in range(vo_count) if j != i]
        rng.shuffle(others)
        for j in others:
            if degree[i] >= want:
                break
            edge = tuple(sorted((i, j)))
            if edge not in edges:
                edges.add(edge)
                degree[i] += 1
                degree[j] += 1
    # connect components: link each later component to the first
    comp = _components(vo_count, edges)
    base = comp[0]
    for other in comp[1:]:
        a = base[rng.randrange(len(base))]
        b = other[rng.randrange(len(other))]
        edges.add(tuple(sorted((a, b))))
    return _build(sorted(edges), vo_count, corpus_size, coverage, rng)


def _components(n: int, edges: set[tuple[int, int]]) -> list[list[int]]:
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen: set[int] = set()
    out = []
    for start in range(n):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        frontier = [start]
        while frontier:
            nxt = []
            for cur in frontier:
                for other in adj[cur]:
                    if other not in seen:
                        seen.add(other)
                        comp.append(other)
                        nxt.append(other)
            frontier = nxt
        out.append(sorted(comp))
    return out
