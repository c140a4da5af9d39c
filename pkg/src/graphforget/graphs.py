"""Knowledge-graph structures for contract datasets.

A graph holds company/person nodes and contract edges.  Edges carry the
contract domain (sales between two companies, employment between a company
and a person).  The inter-connectivity of an edge is the total degree of its
two endpoints minus one (the shared edge itself counted once).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .errors import InvalidParameterError, NotFoundError


class ContractDomain(str, Enum):
    SALES_OF_GOODS = "sales_of_goods"
    EMPLOYMENT = "employment"


class NodeKind(str, Enum):
    COMPANY = "company"
    PERSON = "person"


@dataclass(frozen=True)
class NodeId:
    index: int
    label: str


@dataclass(frozen=True)
class Edge:
    """Undirected contract edge; endpoints stored sorted by label."""

    a: str
    b: str
    domain: ContractDomain

    @property
    def label(self) -> str:
        return self.a + self.b

    @property
    def endpoints(self) -> tuple[str, str]:
        return (self.a, self.b)


class KnowledgeGraph:
    """Immutable node/edge structure with an adjacency index."""

    def __init__(self, nodes: list[tuple[str, NodeKind]], edges: list[tuple[str, str, ContractDomain]]):
        self.nodes: list[NodeId] = [NodeId(i, label) for i, (label, _) in enumerate(nodes)]
        self.kinds: dict[str, NodeKind] = {label: kind for label, kind in nodes}
        if len(self.kinds) != len(nodes):
            raise InvalidParameterError("node labels must be unique")
        self._index = {n.label: n.index for n in self.nodes}

        self.edges: list[Edge] = []
        self._adj: dict[str, set[str]] = {n.label: set() for n in self.nodes}
        seen: set[tuple[str, str]] = set()
        for a, b, domain in edges:
            if a == b:
                raise InvalidParameterError(f"self-loop on node {a!r}")
            a, b = sorted((a, b))
            for end in (a, b):
                if end not in self.kinds:
                    raise InvalidParameterError(f"edge endpoint {end!r} is not a node")
            if (a, b) in seen:
                raise InvalidParameterError(f"duplicate edge {a}{b}")
            seen.add((a, b))
            self._check_domain(a, b, domain)
            self.edges.append(Edge(a, b, domain))
            self._adj[a].add(b)
            self._adj[b].add(a)
        labels = [e.label for e in self.edges]
        if len(set(labels)) != len(labels):
            raise InvalidParameterError("edge labels are not unique under label concatenation")
        self._edge_by_label = {e.label: e for e in self.edges}

    def _check_domain(self, a: str, b: str, domain: ContractDomain) -> None:
        kinds = {self.kinds[a], self.kinds[b]}
        if domain is ContractDomain.SALES_OF_GOODS and kinds != {NodeKind.COMPANY}:
            raise InvalidParameterError(f"sales edge {a}{b} requires two companies")
        if domain is ContractDomain.EMPLOYMENT and kinds != {NodeKind.COMPANY, NodeKind.PERSON}:
            raise InvalidParameterError(f"employment edge {a}{b} requires one company and one person")

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def node_index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise NotFoundError(f"no node labeled {label!r}") from None

    def degree(self, label: str) -> int:
        if label not in self._adj:
            raise NotFoundError(f"no node labeled {label!r}")
        return len(self._adj[label])

    def edge(self, label: str) -> Edge:
        try:
            return self._edge_by_label[label]
        except KeyError:
            raise NotFoundError(f"no edge labeled {label!r}") from None

    def has_edge(self, label: str) -> bool:
        return label in self._edge_by_label

    def edge_labels(self) -> list[str]:
        return [e.label for e in self.edges]

    def component_of(self, label: str) -> set[str]:
        """Node labels reachable from ``label`` (breadth-first)."""
        seen = {label}
        frontier = [label]
        while frontier:
            nxt = []
            for n in frontier:
                for other in self._adj[n]:
                    if other not in seen:
                        seen.add(other)
                        nxt.append(other)
            frontier = nxt
        return seen

    def is_connected(self) -> bool:
        return len(self.component_of(self.nodes[0].label)) == self.node_count


def edge_interconnectivity(graph: KnowledgeGraph, edge: Edge | str) -> int:
    """deg(u) + deg(v) - 1 for an edge {u, v} present in the graph."""
    label = edge if isinstance(edge, str) else edge.label
    e = graph.edge(label)
    return graph.degree(e.a) + graph.degree(e.b) - 1


def _numbered_companies(n: int, start: int = 0) -> list[tuple[str, NodeKind]]:
    return [(str(start + i), NodeKind.COMPANY) for i in range(n)]


def build_chain(n: int) -> KnowledgeGraph:
    """Chain of ``n`` companies linked by n-1 sales edges."""
    if n < 2:
        raise InvalidParameterError(f"chain needs at least 2 nodes, got {n}")
    nodes = _numbered_companies(n)
    edges = [(str(i), str(i + 1), ContractDomain.SALES_OF_GOODS) for i in range(n - 1)]
    return KnowledgeGraph(nodes, edges)


def build_complete(n: int) -> KnowledgeGraph:
    """Fully connected graph of ``n`` companies, all sales edges."""
    if n < 2:
        raise InvalidParameterError(f"complete graph needs at least 2 nodes, got {n}")
    nodes = _numbered_companies(n)
    edges = [
        (str(i), str(j), ContractDomain.SALES_OF_GOODS)
        for i in range(n)
        for j in range(i + 1, n)
    ]
    return KnowledgeGraph(nodes, edges)


def build_semi_dense(n: int, e: int, seed: int = 0) -> KnowledgeGraph:
    """Connected graph: chain backbone plus ``e - (n-1)`` seeded extra edges."""
    if n < 2:
        raise InvalidParameterError(f"semi-dense graph needs at least 2 nodes, got {n}")
    lo, hi = n - 1, n * (n - 1) // 2
    if not lo <= e <= hi:
        raise InvalidParameterError(f"edge count {e} outside [{lo}, {hi}] for n={n}")
    nodes = _numbered_companies(n)
    chain = {(i, i + 1) for i in range(n - 1)}
    candidates = sorted(
        (i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in chain
    )
    extra = random.Random(seed).sample(candidates, e - (n - 1))
    pairs = sorted(chain) + sorted(extra)
    edges = [(str(i), str(j), ContractDomain.SALES_OF_GOODS) for i, j in pairs]
    return KnowledgeGraph(nodes, edges)


# Node index ranges of the three density sub-graphs inside build_dataset2().
DATASET2_SPARSE_RANGE = (0, 9)
DATASET2_SEMI_DENSE_RANGE = (10, 19)
DATASET2_DENSE_RANGE = (20, 29)


def build_dataset2(semi_dense_edges: int = 21, seed: int = 0) -> KnowledgeGraph:
    """Three disconnected 10-company sub-graphs of increasing density.

    Nodes 0-9 form a chain (9 edges), 10-19 a semi-dense sub-graph
    (21 edges by default, 27 in the released variant), 20-29 a complete
    sub-graph (45 edges).  All edges are sales contracts.
    """
    nodes = _numbered_companies(30)
    pairs: list[tuple[int, int]] = [(i, i + 1) for i in range(9)]
    semi = build_semi_dense(10, semi_dense_edges, seed=seed)
    pairs += [(int(e.a) + 10, int(e.b) + 10) for e in semi.edges]
    pairs += [(i, j) for i in range(20, 30) for j in range(i + 1, 30)]
    edges = [
        (str(i), str(j), ContractDomain.SALES_OF_GOODS)
        for i, j in ((min(p), max(p)) for p in pairs)
    ]
    return KnowledgeGraph(nodes, edges)


def _load_dataset1_fixture() -> dict:
    with resources.files("graphforget.fixtures").joinpath("dataset1_graph.json").open("r") as fh:
        return json.load(fh)


def build_dataset1() -> KnowledgeGraph:
    """The 24-node / 20-edge symmetric contract graph, loaded from its fixture.

    Validates the documented structure on every load: hub degrees
    deg(A)=8 and deg(B)=7, sales edges AB/AC with deg(C)=1, employment
    edge An, and the isolated {E, F, q} component carrying sales edge EF
    and employment edge Eq.
    """
    data = _load_dataset1_fixture()
    nodes = [(n["label"], NodeKind(n["kind"])) for n in data["nodes"]]
    edges = [(e["a"], e["b"], ContractDomain(e["domain"])) for e in data["edges"]]
    g = KnowledgeGraph(nodes, edges)

    checks = [
        (g.node_count == 24, "node count"),
        (g.edge_count == 20, "edge count"),
        (g.degree("A") == 8, "degree of A"),
        (g.degree("B") == 7, "degree of B"),
        (g.degree("C") == 1, "degree of C"),
        (g.has_edge("AB") and g.edge("AB").domain is ContractDomain.SALES_OF_GOODS, "sales edge AB"),
        (g.has_edge("AC") and g.edge("AC").domain is ContractDomain.SALES_OF_GOODS, "sales edge AC"),
        (g.has_edge("An") and g.edge("An").domain is ContractDomain.EMPLOYMENT, "employment edge An"),
        (g.has_edge("EF") and g.edge("EF").domain is ContractDomain.SALES_OF_GOODS, "sales edge EF"),
        (g.has_edge("Eq") and g.edge("Eq").domain is ContractDomain.EMPLOYMENT, "employment edge Eq"),
        (g.kinds["n"] is NodeKind.PERSON, "n is a person"),
        (g.component_of("E") == {"E", "F", "q"}, "isolated {E, F, q} component"),
    ]
    for ok, what in checks:
        if not ok:
            raise InvalidParameterError(f"dataset1 fixture violates its contract: {what}")
    return g


@dataclass(frozen=True)
class TopologySpec:
    """Named topology plus its parameters; buildable and serializable.

    Variants: ``dataset1``, ``dataset2``, ``chain``, ``complete``,
    ``semi_dense``, ``custom``.  Company-company edges become sales
    contracts, company-person edges employment contracts (the only
    domain-assignment rule used).
    """

    variant: str
    n: int | None = None
    e: int | None = None
    seed: int = 0
    custom_edges: tuple[tuple[str, str, str], ...] = ()
    custom_nodes: tuple[tuple[str, str], ...] = ()
    semi_dense_edges: int = 21

    VARIANTS = ("dataset1", "dataset2", "chain", "complete", "semi_dense", "custom")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise InvalidParameterError(
                f"unknown topology {self.variant!r}; expected one of {', '.join(self.VARIANTS)}"
            )

    def build(self) -> KnowledgeGraph:
        if self.variant == "dataset1":
            return build_dataset1()
        if self.variant == "dataset2":
            return build_dataset2(self.semi_dense_edges, seed=self.seed)
        if self.variant == "chain":
            return build_chain(self._need("n"))
        if self.variant == "complete":
            return build_complete(self._need("n"))
        if self.variant == "semi_dense":
            return build_semi_dense(self._need("n"), self._need("e"), seed=self.seed)
        nodes = [(label, NodeKind(kind)) for label, kind in self.custom_nodes]
        edges = [(a, b, ContractDomain(d)) for a, b, d in self.custom_edges]
        return KnowledgeGraph(nodes, edges)

    def _need(self, name: str) -> int:
        value = getattr(self, name)
        if value is None:
            raise InvalidParameterError(f"topology {self.variant!r} requires parameter {name!r}")
        return value

    def to_dict(self) -> dict:
        out: dict = {"variant": self.variant}
        if self.n is not None:
            out["n"] = self.n
        if self.e is not None:
            out["e"] = self.e
        if self.variant in ("semi_dense", "dataset2"):
            out["seed"] = self.seed
        if self.variant == "dataset2":
            out["semi_dense_edges"] = self.semi_dense_edges
        if self.variant == "custom":
            out["nodes"] = [list(x) for x in self.custom_nodes]
            out["edges"] = [list(x) for x in self.custom_edges]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TopologySpec":
        return cls(
            variant=data["variant"],
            n=data.get("n"),
            e=data.get("e"),
            seed=data.get("seed", 0),
            semi_dense_edges=data.get("semi_dense_edges", 21),
            custom_nodes=tuple(tuple(x) for x in data.get("nodes", ())),
            custom_edges=tuple(tuple(x) for x in data.get("edges", ())),
        )

    @classmethod
    def parse(cls, text: str) -> "TopologySpec":
        """Parse compact CLI forms: ``dataset1``, ``chain:10``, ``semi_dense:10:21``,
        ``complete:10``, ``dataset2`` or ``dataset2:27``."""
        parts = text.split(":")
        name = parts[0]
        try:
            args = [int(p) for p in parts[1:]]
        except ValueError:
            raise InvalidParameterError(f"non-integer topology parameter in {text!r}") from None
        if name == "dataset1":
            return cls._no_args(name, args)
        if name == "dataset2":
            if len(args) > 1:
                raise InvalidParameterError("dataset2 takes at most one parameter (semi-dense edge count)")
            return cls("dataset2", semi_dense_edges=args[0] if args else 21)
        if name in ("chain", "complete"):
            if len(args) != 1:
                raise InvalidParameterError(f"{name} takes exactly one parameter (node count)")
            return cls(name, n=args[0])
        if name == "semi_dense":
            if len(args) not in (2, 3):
                raise InvalidParameterError("semi_dense takes node count, edge count, and optional seed")
            return cls(name, n=args[0], e=args[1], seed=args[2] if len(args) == 3 else 0)
        raise InvalidParameterError(f"unknown topology {name!r}")

    @classmethod
    def _no_args(cls, name: str, args: list[int]) -> "TopologySpec":
        if args:
            raise InvalidParameterError(f"{name} takes no parameters")
        return cls(name)
