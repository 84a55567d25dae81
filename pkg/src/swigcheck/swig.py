"""Node splitting for interventions.

Splitting a node X at value x leaves a random half that keeps the incoming
edges and carries the actual value, and a fixed half, written in lowercase,
that passes the intervened value along the outgoing edges. Every random node
descended from an intervened one (in the source graph) is renamed with the
intervention labels as a superscript, e.g. D^x or S^{x,d}.

Independence queries address random nodes by their base name; the fixed
halves are removed before any separation test, which is what blocks paths
that would otherwise run through the intervened value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import Error
from .graph import Dag, Node, PathCertificate, UnknownNodeError, d_separated


class SwigError(Error):
    code = "swig_error"


class DuplicateLabelError(SwigError):
    code = "duplicate_label"

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"intervention label {label!r} used more than once")


class FixedNodeInQueryError(SwigError):
    code = "fixed_node_in_query"

    def __init__(self, label: str):
        self.label = label
        super().__init__(
            f"{label!r} names a fixed intervention value; query the random node instead"
        )


@dataclass(frozen=True)
class Intervention:
    """Ordered targets with their lowercase value labels."""

    pairs: tuple[tuple[str, str], ...]

    @classmethod
    def on(cls, *targets: str, labels: Optional[Iterable[str]] = None) -> "Intervention":
        names = list(targets)
        if labels is None:
            labs = [t.lower() for t in names]
        else:
            labs = list(labels)
        if len(labs) != len(names):
            raise SwigError("one label per intervention target")
        return cls(tuple(zip(names, labs)))

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.pairs)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for _, l in self.pairs)

    def label_of(self, target: str) -> str:
        for t, l in self.pairs:
            if t == target:
                return l
        raise UnknownNodeError(target)


@dataclass(frozen=True)
class SwigNode:
    """One half of a split node, or an untouched random node.

    suffix holds intervention labels in intervention order; it is empty for
    fixed halves and for nodes with no intervened ancestor.
    """

    base: str
    kind: str  # "random" | "fixed"
    suffix: tuple[str, ...] = ()
    label: Optional[str] = None

    @property
    def display(self) -> str:
        if self.kind == "fixed":
            return self.label or self.base.lower()
        if not self.suffix:
            return self.base
        if len(self.suffix) == 1:
            return f"{self.base}^{self.suffix[0]}"
        return f"{self.base}^{{{','.join(self.suffix)}}}"


class Swig:
    """A source DAG split at one or more intervention targets."""

    def __init__(self, source: Dag, intervention: Intervention):
        seen_targets: set[str] = set()
        seen_labels: set[str] = set()
        for target, label in intervention.pairs:
            source.node(target)
            if target in seen_targets:
                raise SwigError(f"node {target!r} intervened on twice")
            if label in seen_labels:
                raise DuplicateLabelError(label)
            seen_targets.add(target)
            seen_labels.add(label)

        self.source = source
        self.intervention = intervention
        self._targets = seen_targets

        suffixes: dict[str, tuple[str, ...]] = {}
        for name in source.names:
            labels = tuple(
                label
                for target, label in intervention.pairs
                if name in source.descendants(target)
            )
            suffixes[name] = labels
        self._suffixes = suffixes

        randoms = []
        fixeds = []
        for node in source.nodes:
            randoms.append(SwigNode(node.name, "random", suffixes[node.name]))
            if node.name in self._targets:
                fixeds.append(
                    SwigNode(node.name, "fixed", (), intervention.label_of(node.name))
                )
        self.random_nodes = tuple(randoms)
        self.fixed_nodes = tuple(fixeds)
        self._fixed_labels = {n.label: n for n in self.fixed_nodes}
        self._random_index = {n.base: n for n in self.random_nodes}

        # The random half keeps incoming edges; outgoing edges leave from the
        # fixed half of an intervened node.
        edges = []
        for u, v in source.edges:
            tail = self._fixed_labels[intervention.label_of(u)] if u in self._targets else self._random_index[u]
            edges.append((tail, self._random_index[v]))
        self.edges = tuple(edges)

        self._random_view: Optional[Dag] = None

    def suffix(self, base: str) -> tuple[str, ...]:
        self.source.node(base)
        return self._suffixes[base]

    def display(self, base: str) -> str:
        return self._random_index[base].display

    def random_view(self) -> Dag:
        """The SWIG with fixed halves deleted, as a plain DAG on base names.

        Matching metadata is dropped: the view exists for separation queries
        only, and the designed independence of a matched pair is a property
        of the source graph, not of any split of it.
        """
        if self._random_view is None:
            kept = [
                (u, v) for u, v in self.source.edges if u not in self._targets
            ]
            self._random_view = Dag(self.source.nodes, kept)
        return self._random_view

    def to_source(self) -> Dag:
        """Merge the halves back; inverse of splitting."""
        edges = [(tail.base, head.base) for tail, head in self.edges]
        return Dag(
            self.source.nodes,
            edges,
            self.source.dashed_edges,
            self.source.matchings,
        )


def build_swig(graph: Dag, intervention: Intervention) -> Swig:
    return Swig(graph, intervention)


def counterfactual_name(swig: Swig, base: str) -> str:
    """Superscripted display name of a random node, e.g. S^{x,d}."""
    if base not in swig.source and base in swig._fixed_labels:
        raise FixedNodeInQueryError(base)
    swig.source.node(base)
    return swig.display(base)


def swig_d_separated(
    swig: Swig,
    a: Iterable[str],
    b: Iterable[str],
    z: Iterable[str] = (),
    *,
    certificate: bool = True,
) -> tuple[bool, Optional[PathCertificate]]:
    """d-separation among random nodes, by base name.

    Certificates come back with counterfactual display names.
    """
    for name in (*a, *b, *z):
        if name not in swig.source:
            if name in swig._fixed_labels:
                raise FixedNodeInQueryError(name)
            raise UnknownNodeError(name)
    sep, cert = d_separated(swig.random_view(), a, b, z, certificate=certificate)
    if cert is not None:
        cert = cert.renamed({base: swig.display(base) for base in swig.source.names})
    return sep, cert
