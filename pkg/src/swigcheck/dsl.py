"""Text format for graphs and their probability tables.

A document is one dag block, optionally followed by one model block:

    dag cohort {
      C;
      X [role=treatment];
      D [role=outcome];
      S [role=selection];
      C -> D;
      X -> D [dashed];
    }

    model {
      p(C=1) = 0.3;
      p(D=1 | C=0, X=0) = 0.1;
      ...
    }

Comments run from '#' to end of line. Serialization is canonical: nodes in
declaration order, edges sorted by endpoint names, table rows in ascending
parent-configuration order, two-space indent, LF newlines. Parsing the
serialized form reproduces the document byte for byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Optional

from .errors import Error
from .graph import (
    COVARIATE,
    Dag,
    GraphError,
    Matching,
    Node,
    OUTCOME,
    ROLES,
    SELECTION,
    TREATMENT,
)
from .inference import Cpt, DiscreteModel, InferenceError
from .swig import Swig

Span = tuple[int, int]  # 1-based (line, column)


class ParseError(Error):
    code = "parse_error"

    def __init__(self, message: str, span: Optional[Span] = None):
        self.span = span
        super().__init__(message)

    def payload(self) -> dict:
        out = super().payload()
        if self.span is not None:
            out["span"] = {"line": self.span[0], "column": self.span[1]}
        return out


class SemanticError(ParseError):
    code = "semantic_error"


@dataclass(frozen=True)
class Document:
    name: str
    graph: Dag
    model: Optional[DiscreteModel] = None


# -- tokens ---------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<number>\d+\.\d+(?:[eE][+-]?\d+)?|\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}\[\]();,=|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # arrow | number | ident | punct | eof
    text: str
    span: Span


def _tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", (line, col))
        kind = m.lastgroup
        raw = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, raw, (line, col)))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            col = len(raw) - raw.rfind("\n")
        else:
            col += len(raw)
        pos = m.end()
    tokens.append(Token("eof", "", (line, col)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.peek()
        want = text if text is not None else kind
        if tok.kind != kind or (text is not None and tok.text != text):
            got = tok.text if tok.kind != "eof" else "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", tok.span)
        return self.next()

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    # -- grammar ----------------------------------------------------------

    def document(self) -> Document:
        name, graph = self.dag_block()
        model = None
        if self.at("ident", "model"):
            model = self.model_block(graph)
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.text!r} after document", tok.span)
        return Document(name, graph, model)

    def dag_block(self) -> tuple[str, Dag]:
        self.expect("ident", "dag")
        name_tok = self.expect("ident")
        self.expect("punct", "{")
        nodes: list[Node] = []
        node_spans: dict[str, Span] = {}
        edges: list[tuple[str, str]] = []
        dashed: list[tuple[str, str]] = []
        matches: dict[str, dict[str, str]] = {}
        while not self.at("punct", "}"):
            first = self.expect("ident")
            if self.at("arrow"):
                self.next()
                head = self.expect("ident")
                attrs = self.attr_list()
                edges.append((first.text, head.text))
                for key, (value, span) in attrs.items():
                    if key == "dashed":
                        if value is not None:
                            raise SemanticError("'dashed' takes no value", span)
                        dashed.append((first.text, head.text))
                    else:
                        raise SemanticError(
                            f"unknown edge attribute {key!r}", span
                        )
                self.expect("punct", ";")
            else:
                if first.text in node_spans:
                    raise SemanticError(
                        f"node {first.text!r} declared twice", first.span
                    )
                attrs = self.attr_list()
                role = COVARIATE
                stage = None
                latent = False
                match_attrs: dict[str, str] = {}
                for key, (value, span) in attrs.items():
                    if key == "role":
                        if value is None or value not in ROLES:
                            raise SemanticError(
                                f"role must be one of {', '.join(sorted(ROLES))}",
                                span,
                            )
                        role = value
                    elif key == "stage":
                        if value is None or not value.isdigit():
                            raise SemanticError(
                                "stage must be a positive integer", span
                            )
                        stage = int(value)
                    elif key == "latent":
                        if value is not None:
                            raise SemanticError("'latent' takes no value", span)
                        latent = True
                    elif key in ("match", "across"):
                        if value is None:
                            raise SemanticError(
                                f"{key!r} needs a node name", span
                            )
                        match_attrs[key] = value
                    else:
                        raise SemanticError(
                            f"unknown node attribute {key!r}", span
                        )
                if match_attrs and set(match_attrs) != {"match", "across"}:
                    raise SemanticError(
                        "'match' and 'across' must be given together",
                        first.span,
                    )
                nodes.append(Node(first.text, role, stage, latent))
                node_spans[first.text] = first.span
                if match_attrs:
                    matches[first.text] = match_attrs
                self.expect("punct", ";")
        self.expect("punct", "}")
        matchings = [
            Matching(sel, attrs["match"], attrs["across"])
            for sel, attrs in matches.items()
        ]
        try:
            graph = Dag(nodes, edges, dashed=dashed, matchings=matchings)
        except GraphError as exc:
            raise SemanticError(str(exc), name_tok.span) from exc
        return name_tok.text, graph

    def attr_list(self) -> dict[str, tuple[Optional[str], Span]]:
        attrs: dict[str, tuple[Optional[str], Span]] = {}
        if not self.at("punct", "["):
            return attrs
        self.next()
        while True:
            key = self.expect("ident")
            value = None
            if self.at("punct", "="):
                self.next()
                tok = self.peek()
                if tok.kind not in ("ident", "number"):
                    raise ParseError("expected an attribute value", tok.span)
                value = self.next().text
            if key.text in attrs:
                raise SemanticError(
                    f"attribute {key.text!r} repeated", key.span
                )
            attrs[key.text] = (value, key.span)
            if self.at("punct", ","):
                self.next()
                continue
            break
        self.expect("punct", "]")
        return attrs

    def model_block(self, graph: Dag) -> DiscreteModel:
        self.expect("ident", "model")
        self.expect("punct", "{")
        rows: dict[str, dict[tuple[int, ...], float]] = {}
        parent_order: dict[str, tuple[str, ...]] = {}
        while not self.at("punct", "}"):
            self.prob_stmt(graph, rows, parent_order)
        close = self.expect("punct", "}")
        cpts = {}
        for name in graph.names:
            parents = tuple(
                n for n in graph.names if n in set(graph.parents(name))
            )
            expected = set(product((0, 1), repeat=len(parents)))
            got = rows.get(name, {})
            if set(got) != expected:
                raise SemanticError(
                    f"model is missing rows for {name!r}", close.span
                )
            cpts[name] = Cpt(parents, got)
        try:
            return DiscreteModel(graph, cpts)
        except InferenceError as exc:
            raise SemanticError(str(exc), close.span) from exc

    def prob_stmt(
        self,
        graph: Dag,
        rows: dict[str, dict[tuple[int, ...], float]],
        parent_order: dict[str, tuple[str, ...]],
    ) -> None:
        self.expect("ident", "p")
        self.expect("punct", "(")
        node_tok = self.expect("ident")
        name = node_tok.text
        if name not in set(graph.names):
            raise SemanticError(f"unknown node {name!r}", node_tok.span)
        self.expect("punct", "=")
        val_tok = self.expect("number")
        if val_tok.text != "1":
            raise SemanticError(
                "rows give the probability that the node equals 1",
                val_tok.span,
            )
        given: dict[str, int] = {}
        if self.at("punct", "|"):
            self.next()
            while True:
                p_tok = self.expect("ident")
                self.expect("punct", "=")
                v_tok = self.expect("number")
                if v_tok.text not in ("0", "1"):
                    raise SemanticError(
                        "parent values must be 0 or 1", v_tok.span
                    )
                if p_tok.text in given:
                    raise SemanticError(
                        f"parent {p_tok.text!r} repeated", p_tok.span
                    )
                given[p_tok.text] = int(v_tok.text)
                if self.at("punct", ","):
                    self.next()
                    continue
                break
        self.expect("punct", ")")
        self.expect("punct", "=")
        prob_tok = self.expect("number")
        self.expect("punct", ";")

        parents = set(graph.parents(name))
        if set(given) != parents:
            missing = sorted(parents - set(given))
            extra = sorted(set(given) - parents)
            detail = []
            if missing:
                detail.append("missing " + ", ".join(missing))
            if extra:
                detail.append("not parents: " + ", ".join(extra))
            raise SemanticError(
                f"row for {name!r} must condition on exactly its parents "
                f"({'; '.join(detail)})",
                node_tok.span,
            )
        order = tuple(n for n in graph.names if n in parents)
        parent_order[name] = order
        key = tuple(given[p] for p in order)
        bucket = rows.setdefault(name, {})
        if key in bucket:
            raise SemanticError(
                f"row for {name!r} given {dict(given)} repeated", node_tok.span
            )
        p = float(prob_tok.text)
        if not 0.0 <= p <= 1.0:
            raise SemanticError("probability outside [0, 1]", prob_tok.span)
        bucket[key] = p


def parse(text: str) -> Document:
    return _Parser(text).document()


# -- canonical serialization -------------------------------------------------------


def _number(value: float) -> str:
    """Shortest exact decimal form that the tokenizer accepts."""
    text = repr(float(value))
    if "e" in text and "." not in text.split("e", 1)[0]:
        mantissa, exponent = text.split("e", 1)
        text = f"{mantissa}.0e{exponent}"
    return text


def _node_attrs(node: Node, matching: Optional[Matching]) -> str:
    parts = []
    if node.role != COVARIATE:
        parts.append(f"role={node.role}")
    if node.role == SELECTION and node.stage is not None:
        parts.append(f"stage={node.stage}")
    if node.latent:
        parts.append("latent")
    if matching is not None:
        parts.append(f"match={matching.match_on}")
        parts.append(f"across={matching.across}")
    return f" [{', '.join(parts)}]" if parts else ""


def serialize(doc: Document) -> str:
    graph = doc.graph
    by_selection = {m.selection: m for m in graph.matchings}
    lines = [f"dag {doc.name} {{"]
    for node in graph.nodes:
        lines.append(f"  {node.name}{_node_attrs(node, by_selection.get(node.name))};")
    dashed = set(graph.dashed_edges)
    for tail, head in sorted(graph.edges):
        suffix = " [dashed]" if (tail, head) in dashed else ""
        lines.append(f"  {tail} -> {head}{suffix};")
    lines.append("}")

    if doc.model is not None:
        lines.append("")
        lines.append("model {")
        for name in graph.names:
            cpt = doc.model.cpts[name]
            order = tuple(n for n in graph.names if n in set(cpt.parents))
            for cfg in sorted(product((0, 1), repeat=len(order))):
                key = tuple(
                    cfg[order.index(p)] for p in cpt.parents
                )
                cond = ", ".join(f"{p}={v}" for p, v in zip(order, cfg))
                lhs = f"p({name}=1 | {cond})" if cond else f"p({name}=1)"
                lines.append(f"  {lhs} = {_number(cpt.rows[key])};")
        lines.append("}")
    return "\n".join(lines) + "\n"


# -- DOT output -----------------------------------------------------------------


def _quote(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def emit_dot(obj, name: str = "g") -> str:
    """Graphviz text for a graph or a split graph."""
    if isinstance(obj, Swig):
        return _swig_dot(obj, name)
    if isinstance(obj, Dag):
        return _dag_dot(obj, name)
    raise TypeError(f"cannot render {type(obj).__name__} as DOT")


def _dag_dot(graph: Dag, name: str) -> str:
    lines = [f"digraph {_quote(name)} {{"]
    for node in graph.nodes:
        attrs = []
        if node.latent:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_quote(node.name)}{suffix};")
    dashed = set(graph.dashed_edges)
    for tail, head in sorted(graph.edges):
        attrs = []
        if (tail, head) in dashed:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_quote(tail)} -> {_quote(head)}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _swig_dot(swig: Swig, name: str) -> str:
    source = swig.source
    latent = {n.name for n in source.nodes if n.latent}
    lines = [f"digraph {_quote(name)} {{"]
    display = {}
    for node in swig.random_nodes:
        display[("random", node.base)] = node.display
    for node in swig.fixed_nodes:
        display[("fixed", node.base)] = node.display

    intervened = set(swig.intervention.targets)
    for base in swig.intervention.targets:
        lines.append(f"  subgraph {_quote('cluster_' + base)} {{")
        rand = display[("random", base)]
        fixed = display[("fixed", base)]
        rand_attrs = ["style=dashed"] if base in latent else []
        suffix = f" [{', '.join(rand_attrs)}]" if rand_attrs else ""
        lines.append(f"    {_quote(rand)}{suffix};")
        lines.append(f"    {_quote(fixed)} [shape=box];")
        lines.append("  }")
    for node in swig.random_nodes:
        if node.base in intervened:
            continue
        attrs = []
        if node.base in latent:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_quote(node.display)}{suffix};")

    dashed = set(source.dashed_edges)
    rendered = []
    for tail, head in swig.edges:
        attrs = []
        if (tail.base, head.base) in dashed:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        rendered.append(f"  {_quote(tail.display)} -> {_quote(head.display)}{suffix};")
    lines.extend(sorted(rendered))
    lines.append("}")
    return "\n".join(lines) + "\n"
