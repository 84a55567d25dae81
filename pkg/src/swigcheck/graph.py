"""Directed acyclic graphs with study roles, trails, and d-separation.

The Dag value is immutable: editing helpers return new graphs. Node and edge
orderings are deterministic everywhere (declaration order for nodes, sorted
pairs for edges) so that rendered output is byte-stable.

d-separation is decided by the ancestral-moralization reduction; the trail
enumerator is kept alongside it as an independent oracle and as the source of
open-path certificates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .errors import Error

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

# Enumeration routines (trails, adjustment-set search) assume small graphs.
MAX_NODES = 24

TREATMENT = "treatment"
OUTCOME = "outcome"
SELECTION = "selection"
COVARIATE = "covariate"
ROLES = (TREATMENT, OUTCOME, SELECTION, COVARIATE)

ARROW_FWD = "->"
ARROW_BWD = "<-"


class GraphError(Error):
    code = "graph_error"


class UnknownNodeError(GraphError):
    code = "unknown_node"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown node: {name!r}")


class CycleError(GraphError):
    code = "cycle"

    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        super().__init__("directed cycle: " + " -> ".join(self.cycle))


class DanglingEdgeError(GraphError):
    code = "dangling_edge"

    def __init__(self, edge: tuple[str, str], missing: str):
        self.edge = edge
        self.missing = missing
        super().__init__(
            f"edge {edge[0]} -> {edge[1]} refers to undeclared node {missing!r}"
        )


class RoleError(GraphError):
    code = "role_error"


class NodeLimitError(GraphError):
    code = "node_limit"

    def __init__(self, count: int):
        self.count = count
        super().__init__(f"graph has {count} nodes; the supported maximum is {MAX_NODES}")


class OverlappingSetsError(GraphError):
    code = "overlapping_sets"

    def __init__(self, names: Iterable[str]):
        self.names = sorted(names)
        super().__init__("query sets overlap on: " + ", ".join(self.names))


@dataclass(frozen=True)
class Node:
    """A graph node with an optional study role.

    stage orders selection nodes in multi-stage designs (1-based). latent
    marks unmeasured variables, which can never be conditioned on.
    """

    name: str
    role: str = COVARIATE
    stage: Optional[int] = None
    latent: bool = False


@dataclass(frozen=True)
class Matching:
    """Selection node built by matching.

    The design balances match_on across levels of across within the selected
    population, creating an independence there that the edge structure alone
    does not imply.
    """

    selection: str
    match_on: str
    across: str


NodeLike = Union[Node, str]


class Dag:
    """An immutable DAG over named binary variables.

    Nodes keep declaration order; edges are stored as a sorted tuple of
    (tail, head) pairs. Validation runs at construction time.
    """

    def __init__(
        self,
        nodes: Iterable[NodeLike],
        edges: Iterable[tuple[str, str]] = (),
        dashed: Iterable[tuple[str, str]] = (),
        matchings: Iterable[Matching] = (),
    ):
        self._nodes = tuple(
            n if isinstance(n, Node) else Node(str(n)) for n in nodes
        )
        self._edges = tuple(sorted({(str(u), str(v)) for u, v in edges}))
        self._dashed = frozenset((str(u), str(v)) for u, v in dashed)
        self._matchings = tuple(matchings)
        self._index = {n.name: n for n in self._nodes}
        self._parents: dict[str, tuple[str, ...]] = {}
        self._children: dict[str, tuple[str, ...]] = {}
        self._anc: dict[str, frozenset[str]] = {}
        self._desc: dict[str, frozenset[str]] = {}
        self._validate()
        for name in self._index:
            self._parents[name] = tuple(
                sorted(u for u, v in self._edges if v == name)
            )
            self._children[name] = tuple(
                sorted(v for u, v in self._edges if u == name)
            )

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        seen = set()
        for node in self._nodes:
            if not _NAME_RE.match(node.name):
                raise GraphError(f"invalid node name: {node.name!r}")
            if node.name in seen:
                raise GraphError(f"duplicate node: {node.name!r}")
            seen.add(node.name)
            if node.role not in ROLES:
                raise RoleError(f"unknown role {node.role!r} on node {node.name!r}")
            if node.stage is not None and node.role != SELECTION:
                raise RoleError(f"stage given for non-selection node {node.name!r}")
        if len(self._nodes) > MAX_NODES:
            raise NodeLimitError(len(self._nodes))

        for u, v in self._edges:
            for end in (u, v):
                if end not in seen:
                    raise DanglingEdgeError((u, v), end)
            if u == v:
                raise CycleError([u, u])
        for u, v in self._dashed:
            if (u, v) not in set(self._edges):
                raise GraphError(f"dashed flag on missing edge {u} -> {v}")

        self._check_acyclic()
        self._check_roles()
        self._check_matchings()

    def _check_acyclic(self) -> None:
        indeg = {n.name: 0 for n in self._nodes}
        for _, v in self._edges:
            indeg[v] += 1
        queue = [n for n, d in indeg.items() if d == 0]
        removed = 0
        while queue:
            cur = queue.pop()
            removed += 1
            for u, v in self._edges:
                if u == cur:
                    indeg[v] -= 1
                    if indeg[v] == 0:
                        queue.append(v)
        if removed != len(self._nodes):
            raise CycleError(self._find_cycle())

    def _find_cycle(self) -> list[str]:
        succ: dict[str, list[str]] = {n.name: [] for n in self._nodes}
        for u, v in self._edges:
            succ[u].append(v)
        color: dict[str, int] = {}
        stack: list[str] = []

        def visit(node: str) -> Optional[list[str]]:
            color[node] = 1
            stack.append(node)
            for nxt in succ[node]:
                if color.get(nxt) == 1:
                    return stack[stack.index(nxt):] + [nxt]
                if color.get(nxt) is None:
                    found = visit(nxt)
                    if found:
                        return found
            stack.pop()
            color[node] = 2
            return None

        for name in sorted(succ):
            if color.get(name) is None:
                found = visit(name)
                if found:
                    return found
        return []  # unreachable when called after Kahn failure

    def _check_roles(self) -> None:
        treatments = [n.name for n in self._nodes if n.role == TREATMENT]
        outcomes = [n.name for n in self._nodes if n.role == OUTCOME]
        if len(treatments) > 1:
            raise RoleError("more than one treatment node: " + ", ".join(treatments))
        if len(outcomes) > 1:
            raise RoleError("more than one outcome node: " + ", ".join(outcomes))

        selection = [n for n in self._nodes if n.role == SELECTION]
        stages = [n.stage for n in selection]
        if selection:
            if all(s is None for s in stages):
                # Stages default to declaration order.
                self._auto_stage(selection)
            elif any(s is None for s in stages):
                raise RoleError("either all or none of the selection nodes take a stage")
            else:
                expect = list(range(1, len(selection) + 1))
                if sorted(stages) != expect:
                    raise RoleError(
                        f"selection stages must be 1..{len(selection)}, got {sorted(stages)}"
                    )

        if treatments and outcomes:
            x, d = treatments[0], outcomes[0]
            if self._reachable(d, x):
                raise RoleError(f"treatment {x!r} is a descendant of outcome {d!r}")

    def _auto_stage(self, selection: Sequence[Node]) -> None:
        for i, node in enumerate(selection, start=1):
            staged = Node(node.name, node.role, i, node.latent)
            self._index[node.name] = staged
        self._nodes = tuple(self._index[n.name] for n in self._nodes)

    def _check_matchings(self) -> None:
        for m in self._matchings:
            for name in (m.selection, m.match_on, m.across):
                if name not in self._index:
                    raise UnknownNodeError(name)
            if self._index[m.selection].role != SELECTION:
                raise RoleError(f"matched node {m.selection!r} must have the selection role")
            present = set(self._edges)
            for src in (m.match_on, m.across):
                if (src, m.selection) not in present:
                    raise RoleError(
                        f"matched selection {m.selection!r} needs an edge from {src!r}"
                    )

    def _reachable(self, src: str, dst: str) -> bool:
        seen = {src}
        frontier = [src]
        while frontier:
            cur = frontier.pop()
            if cur == dst:
                return True
            for u, v in self._edges:
                if u == cur and v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return dst in seen

    # -- basic accessors ------------------------------------------------------

    @property
    def nodes(self) -> tuple[Node, ...]:
        return self._nodes

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self._nodes)

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return self._edges

    @property
    def dashed_edges(self) -> frozenset[tuple[str, str]]:
        return self._dashed

    @property
    def matchings(self) -> tuple[Matching, ...]:
        return self._matchings

    def node(self, name: str) -> Node:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownNodeError(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in set(self._edges)

    def parents(self, name: str) -> tuple[str, ...]:
        self.node(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.node(name)
        return self._children[name]

    def observed(self) -> frozenset[str]:
        return frozenset(n.name for n in self._nodes if not n.latent)

    def treatment(self) -> Optional[str]:
        for n in self._nodes:
            if n.role == TREATMENT:
                return n.name
        return None

    def outcome(self) -> Optional[str]:
        for n in self._nodes:
            if n.role == OUTCOME:
                return n.name
        return None

    def selection_nodes(self) -> tuple[str, ...]:
        """Selection node names ordered by stage."""
        staged = [(n.stage or 1, n.name) for n in self._nodes if n.role == SELECTION]
        return tuple(name for _, name in sorted(staged))

    def topological_order(self) -> tuple[str, ...]:
        order: list[str] = []
        indeg = {n.name: len(self._parents.get(n.name, ())) for n in self._nodes}
        if not self._parents:  # during construction
            indeg = {n.name: 0 for n in self._nodes}
            for _, v in self._edges:
                indeg[v] += 1
        ready = sorted(n for n, d in indeg.items() if d == 0)
        while ready:
            cur = ready.pop(0)
            order.append(cur)
            changed = False
            for v in self._children[cur]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
                    changed = True
            if changed:
                ready.sort()
        return tuple(order)

    # -- ancestry -------------------------------------------------------------

    def ancestors(self, name: str) -> frozenset[str]:
        """Strict ancestors of name (name excluded)."""
        if name not in self._anc:
            self.node(name)
            out: set[str] = set()
            frontier = list(self._parents[name])
            while frontier:
                cur = frontier.pop()
                if cur not in out:
                    out.add(cur)
                    frontier.extend(self._parents[cur])
            self._anc[name] = frozenset(out)
        return self._anc[name]

    def descendants(self, name: str) -> frozenset[str]:
        """Strict descendants of name (name excluded)."""
        if name not in self._desc:
            self.node(name)
            out: set[str] = set()
            frontier = list(self._children[name])
            while frontier:
                cur = frontier.pop()
                if cur not in out:
                    out.add(cur)
                    frontier.extend(self._children[cur])
            self._desc[name] = frozenset(out)
        return self._desc[name]

    # -- editing helpers --------------------------------------------------------

    def with_edge(self, u: str, v: str, dashed: bool = False) -> "Dag":
        for end in (u, v):
            self.node(end)
        edges = set(self._edges) | {(u, v)}
        dashed_set = set(self._dashed) | ({(u, v)} if dashed else set())
        return Dag(self._nodes, edges, dashed_set, self._matchings)

    def without_edge(self, u: str, v: str) -> "Dag":
        edges = [e for e in self._edges if e != (u, v)]
        dashed = {e for e in self._dashed if e != (u, v)}
        return Dag(self._nodes, edges, dashed, self._matchings)

    def without_dashed(self) -> "Dag":
        edges = [e for e in self._edges if e not in self._dashed]
        return Dag(self._nodes, edges, (), self._matchings)

    def under_null(self) -> "Dag":
        """Remove dashed edges plus the treatment-to-outcome edge."""
        g = self.without_dashed()
        x, d = self.treatment(), self.outcome()
        if x is not None and d is not None and g.has_edge(x, d):
            g = g.without_edge(x, d)
        return g

    # -- equality ---------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._edges == other._edges
            and self._dashed == other._dashed
            and self._matchings == other._matchings
        )

    def __hash__(self) -> int:
        return hash((self._nodes, self._edges, self._dashed, self._matchings))

    def __repr__(self) -> str:
        return f"Dag(nodes={len(self._nodes)}, edges={len(self._edges)})"


def validate(graph: Dag) -> Dag:
    """Re-run structural validation; returns the graph unchanged on success."""
    graph._validate()
    return graph


# -- trails and certificates ------------------------------------------------


@dataclass(frozen=True)
class PathCertificate:
    """A trail between two query nodes with its blocking analysis.

    nodes lists the trail from source to target; arrows[i] gives the edge
    direction between nodes[i] and nodes[i+1]. reasons explains, for each
    interior node, why the trail passes or is blocked there given the
    conditioning set used to classify it.
    """

    nodes: tuple[str, ...]
    arrows: tuple[str, ...]
    open: bool
    reasons: tuple[tuple[str, str], ...] = ()

    def render(self) -> str:
        parts = [self.nodes[0]]
        for arrow, node in zip(self.arrows, self.nodes[1:]):
            parts.append(arrow)
            parts.append(node)
        return " ".join(parts)

    def renamed(self, mapping: Mapping[str, str]) -> "PathCertificate":
        return PathCertificate(
            tuple(mapping.get(n, n) for n in self.nodes),
            self.arrows,
            self.open,
            tuple((mapping.get(n, n), r) for n, r in self.reasons),
        )


def trails(graph: Dag, source: str, target: str) -> Iterator[tuple[tuple[str, ...], tuple[str, ...]]]:
    """Yield every simple trail between source and target.

    Trails come out in lexicographic order of their node sequence. Each item
    is (nodes, arrows) with arrows as in PathCertificate.
    """
    graph.node(source)
    graph.node(target)
    if source == target:
        raise OverlappingSetsError([source])
    yield from _trails_to(graph, source, frozenset({target}))


def _trails_to(
    graph: Dag, source: str, targets: frozenset[str]
) -> Iterator[tuple[tuple[str, ...], tuple[str, ...]]]:
    path = [source]
    arrows: list[str] = []
    on_path = {source}

    def neighbors(name: str) -> list[tuple[str, str]]:
        out = [(c, ARROW_FWD) for c in graph.children(name)]
        out += [(p, ARROW_BWD) for p in graph.parents(name)]
        out.sort()
        return out

    def walk() -> Iterator[tuple[tuple[str, ...], tuple[str, ...]]]:
        for nxt, arrow in neighbors(path[-1]):
            if nxt in on_path:
                continue
            on_path.add(nxt)
            path.append(nxt)
            arrows.append(arrow)
            if nxt in targets:
                yield tuple(path), tuple(arrows)
            else:
                yield from walk()
            path.pop()
            arrows.pop()
            on_path.discard(nxt)

    yield from walk()


def classify_trail(
    graph: Dag,
    nodes: Sequence[str],
    arrows: Sequence[str],
    given: Iterable[str] = (),
) -> PathCertificate:
    """Decide openness of a trail given a conditioning set.

    A collider on the trail passes when it or one of its descendants is
    conditioned on; any other interior node passes when it is not.
    """
    z = frozenset(given)
    open_ = True
    reasons: list[tuple[str, str]] = []
    for i in range(1, len(nodes) - 1):
        name = nodes[i]
        collider = arrows[i - 1] == ARROW_FWD and arrows[i] == ARROW_BWD
        if collider:
            if name in z:
                reasons.append((name, "collider opened by conditioning on it"))
            else:
                opened_by = sorted(graph.descendants(name) & z)
                if opened_by:
                    reasons.append(
                        (name, f"collider opened through conditioned descendant {opened_by[0]}")
                    )
                else:
                    reasons.append((name, "collider blocks: neither it nor a descendant is conditioned on"))
                    open_ = False
        else:
            if name in z:
                reasons.append((name, "blocked by conditioning"))
                open_ = False
            else:
                reasons.append((name, "passes: not conditioned on"))
    return PathCertificate(tuple(nodes), tuple(arrows), open_, tuple(reasons))


def _query_sets(
    graph: Dag,
    a: Iterable[str],
    b: Iterable[str],
    z: Iterable[str],
) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
    sa, sb, sz = frozenset(a), frozenset(b), frozenset(z)
    for name in sa | sb | sz:
        graph.node(name)
    overlap = (sa & sb) | (sa & sz) | (sb & sz)
    if overlap:
        raise OverlappingSetsError(overlap)
    return sa, sb, sz


def d_separated(
    graph: Dag,
    a: Iterable[str],
    b: Iterable[str],
    z: Iterable[str] = (),
    *,
    certificate: bool = True,
) -> tuple[bool, Optional[PathCertificate]]:
    """Test whether a and b are d-separated given z.

    Returns (True, None) when separated. When connected and certificate is
    requested, also returns the first open trail in lexicographic order.
    """
    sa, sb, sz = _query_sets(graph, a, b, z)
    if not sa or not sb:
        return True, None
    if _moral_separated(graph, sa, sb, sz):
        return True, None
    if not certificate:
        return False, None
    return False, _first_open_trail(graph, sa, sb, sz)


def _moral_separated(
    graph: Dag, a: frozenset[str], b: frozenset[str], z: frozenset[str]
) -> bool:
    # Restrict to ancestors of the query, moralize, drop the conditioned
    # nodes, and test undirected connectivity.
    need = set(a | b | z)
    for name in a | b | z:
        need |= graph.ancestors(name)
    adj: dict[str, set[str]] = {n: set() for n in need}
    for u, v in graph.edges:
        if u in need and v in need:
            adj[u].add(v)
            adj[v].add(u)
    for name in need:
        ps = [p for p in graph.parents(name) if p in need]
        for p1, p2 in combinations(ps, 2):
            adj[p1].add(p2)
            adj[p2].add(p1)
    seen = set(a)
    frontier = list(a)
    while frontier:
        cur = frontier.pop()
        if cur in b:
            return False
        for nxt in adj[cur]:
            if nxt not in seen and nxt not in z:
                seen.add(nxt)
                frontier.append(nxt)
    return not (seen & b)


def _first_open_trail(
    graph: Dag, a: frozenset[str], b: frozenset[str], z: frozenset[str]
) -> Optional[PathCertificate]:
    for source in sorted(a):
        for nodes, arrows in _trails_to(graph, source, b):
            cert = classify_trail(graph, nodes, arrows, z)
            if cert.open:
                return cert
    return None


def d_separated_by_enumeration(
    graph: Dag,
    a: Iterable[str],
    b: Iterable[str],
    z: Iterable[str] = (),
) -> bool:
    """Trail-enumeration decision procedure; the oracle for d_separated."""
    sa, sb, sz = _query_sets(graph, a, b, z)
    for source in sorted(sa):
        for nodes, arrows in _trails_to(graph, source, sb):
            if classify_trail(graph, nodes, arrows, sz).open:
                return False
    return True


def open_trail_set(
    graph: Dag, a: str, b: str, given: Iterable[str]
) -> frozenset[tuple[str, ...]]:
    """Node sequences of all open trails between two nodes given a set."""
    z = frozenset(given)
    out = set()
    for nodes, arrows in trails(graph, a, b):
        if classify_trail(graph, nodes, arrows, z).open:
            out.add(nodes)
    return frozenset(out)


def backdoor_paths(
    graph: Dag, x: str, d: str, given: Iterable[str] = ()
) -> list[PathCertificate]:
    """All trails from x to d that start with an edge into x.

    Each is classified against the conditioning set (empty by default).
    """
    graph.node(x)
    graph.node(d)
    z = frozenset(given)
    out = []
    for nodes, arrows in trails(graph, x, d):
        if arrows[0] == ARROW_BWD:
            out.append(classify_trail(graph, nodes, arrows, z))
    return out
