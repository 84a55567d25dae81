"""Text format: parsing, spans, canonical output, DOT rendering."""

import pytest
from hypothesis import given, strategies as st

from swigcheck.dsl import Document, ParseError, SemanticError, emit_dot, parse, serialize
from swigcheck.graph import Dag, Matching, Node
from swigcheck.inference import Cpt, DiscreteModel
from swigcheck.swig import Intervention, build_swig

COHORT_TEXT = """dag cohort {
  C;
  X [role=treatment];
  D [role=outcome];
  S [role=selection, stage=1];
  C -> D;
  C -> S;
  C -> X;
  X -> D [dashed];
  X -> S;
}

model {
  p(C=1) = 0.3;
  p(X=1 | C=0) = 0.2;
  p(X=1 | C=1) = 0.7;
  p(D=1 | C=0, X=0) = 0.1;
  p(D=1 | C=0, X=1) = 0.2;
  p(D=1 | C=1, X=0) = 0.3;
  p(D=1 | C=1, X=1) = 0.6;
  p(S=1 | C=0, X=0) = 0.5;
  p(S=1 | C=0, X=1) = 0.4;
  p(S=1 | C=1, X=0) = 0.3;
  p(S=1 | C=1, X=1) = 0.2;
}
"""


class TestParse:
    def test_full_document(self):
        doc = parse(COHORT_TEXT)
        assert doc.name == "cohort"
        g = doc.graph
        assert g.names == ("C", "X", "D", "S")
        assert g.treatment() == "X"
        assert g.outcome() == "D"
        assert g.selection_nodes() == ("S",)
        assert g.dashed_edges == frozenset({("X", "D")})
        assert doc.model.cpts["D"].p1({"C": 1, "X": 0}) == 0.3

    def test_graph_only_document(self):
        doc = parse("dag g { A; B; A -> B; }")
        assert doc.model is None
        assert doc.graph.has_edge("A", "B")

    def test_comments_ignored(self):
        text = "dag g { # nodes\n A; B;\n A -> B; # edge\n }"
        assert parse(text).graph.has_edge("A", "B")

    def test_latent_and_matching_attributes(self):
        doc = parse(
            "dag g { U [latent]; C; X [role=treatment]; D [role=outcome];"
            " S [role=selection, match=C, across=X];"
            " C -> S; X -> S; X -> D; }"
        )
        assert doc.graph.node("U").latent
        assert doc.graph.matchings == (Matching("S", "C", "X"),)

    def test_parent_order_follows_declaration(self):
        doc = parse(
            "dag g { B; A; D; A -> D; B -> D; }\n"
            "model { p(B=1) = 0.5; p(A=1) = 0.5;"
            " p(D=1 | B=0, A=0) = 0.1; p(D=1 | B=0, A=1) = 0.2;"
            " p(D=1 | B=1, A=0) = 0.3; p(D=1 | B=1, A=1) = 0.4; }"
        )
        assert doc.model.cpts["D"].parents == ("B", "A")
        assert doc.model.cpts["D"].p1({"B": 1, "A": 0}) == 0.3


class TestParseErrors:
    def test_unexpected_character_span(self):
        with pytest.raises(ParseError) as exc:
            parse("dag g {\n  A @;\n}")
        assert exc.value.span == (2, 5)

    def test_missing_semicolon(self):
        with pytest.raises(ParseError, match="expected ';'"):
            parse("dag g { A B; }")

    def test_trailing_garbage(self):
        with pytest.raises(ParseError, match="after document"):
            parse("dag g { A; } extra")

    def test_payload_carries_the_span(self):
        with pytest.raises(ParseError) as exc:
            parse("dag g { A -> ; }")
        payload = exc.value.payload()
        assert payload["code"] == "parse_error"
        assert set(payload["span"]) == {"line", "column"}

    def test_eof_message(self):
        with pytest.raises(ParseError, match="end of input"):
            parse("dag g { A;")


class TestSemanticErrors:
    def test_duplicate_node(self):
        with pytest.raises(SemanticError, match="declared twice"):
            parse("dag g { A; A; }")

    def test_bad_role(self):
        with pytest.raises(SemanticError, match="role must be one of"):
            parse("dag g { A [role=exposure]; }")

    def test_bad_stage(self):
        with pytest.raises(SemanticError, match="stage"):
            parse("dag g { A [role=selection, stage=first]; }")

    def test_dashed_takes_no_value(self):
        with pytest.raises(SemanticError, match="no value"):
            parse("dag g { A; B; A -> B [dashed=1]; }")

    def test_unknown_edge_attribute(self):
        with pytest.raises(SemanticError, match="unknown edge attribute"):
            parse("dag g { A; B; A -> B [weight=2]; }")

    def test_unknown_node_attribute(self):
        with pytest.raises(SemanticError, match="unknown node attribute"):
            parse("dag g { A [color=red]; }")

    def test_match_requires_across(self):
        with pytest.raises(SemanticError, match="given together"):
            parse("dag g { C; S [role=selection, match=C]; C -> S; }")

    def test_cycle_is_reported_at_the_graph(self):
        with pytest.raises(SemanticError) as exc:
            parse("dag loop { A; B; A -> B; B -> A; }")
        assert exc.value.span == (1, 5)

    def test_repeated_attribute(self):
        with pytest.raises(SemanticError, match="repeated"):
            parse("dag g { A [latent, latent]; }")


class TestModelErrors:
    def test_unknown_node_in_model(self):
        with pytest.raises(SemanticError, match="unknown node"):
            parse("dag g { A; }\nmodel { p(Q=1) = 0.5; }")

    def test_left_side_must_be_one(self):
        with pytest.raises(SemanticError, match="equals 1"):
            parse("dag g { A; }\nmodel { p(A=0) = 0.5; }")

    def test_parent_values_binary(self):
        with pytest.raises(SemanticError, match="0 or 1"):
            parse("dag g { A; B; A -> B; }\nmodel { p(A=1) = 0.5; p(B=1 | A=2) = 0.5; }")

    def test_row_with_missing_parent(self):
        with pytest.raises(SemanticError, match="missing"):
            parse(
                "dag g { A; B; C; A -> C; B -> C; }\n"
                "model { p(A=1) = 0.5; p(B=1) = 0.5; p(C=1 | A=0) = 0.5; }"
            )

    def test_row_with_non_parent(self):
        with pytest.raises(SemanticError, match="not parents"):
            parse("dag g { A; B; }\nmodel { p(A=1) = 0.5; p(B=1 | A=0) = 0.5; }")

    def test_repeated_row(self):
        with pytest.raises(SemanticError, match="repeated"):
            parse("dag g { A; }\nmodel { p(A=1) = 0.5; p(A=1) = 0.6; }")

    def test_probability_range(self):
        with pytest.raises(SemanticError, match="outside"):
            parse("dag g { A; }\nmodel { p(A=1) = 1.5; }")

    def test_missing_rows_detected_at_the_close(self):
        with pytest.raises(SemanticError, match="missing rows") as exc:
            parse("dag g { A; B; A -> B; }\nmodel { p(A=1) = 0.5; }")
        assert exc.value.span == (2, 23)


class TestSerialize:
    def test_canonical_form_round_trips_bytes(self):
        doc = parse(COHORT_TEXT)
        assert serialize(doc) == COHORT_TEXT

    def test_edges_are_sorted(self):
        doc = parse("dag g { B; A; C; C -> B; A -> B; }")
        out = serialize(doc)
        assert out.index("A -> B") < out.index("C -> B")

    def test_comments_do_not_survive(self):
        with_comments = "dag g { # hello\n A; B; A -> B; }"
        assert "#" not in serialize(parse(with_comments))

    def test_tiny_probability_stays_parseable(self):
        g = Dag(["A"], [])
        doc = Document("g", g, DiscreteModel(g, {"A": Cpt((), {(): 1e-05})}))
        text = serialize(doc)
        assert "1.0e-05" in text
        again = parse(text)
        assert again.model.cpts["A"].rows[()] == 1e-05
        assert serialize(again) == text

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=3, max_size=3))
    def test_serialized_probabilities_round_trip_exactly(self, ps):
        g = Dag(["A", "B"], [("A", "B")])
        model = DiscreteModel(
            g,
            {
                "A": Cpt((), {(): ps[0]}),
                "B": Cpt(("A",), {(0,): ps[1], (1,): ps[2]}),
            },
        )
        text = serialize(Document("g", g, model))
        again = parse(text)
        assert again.model.cpts["A"].rows[()] == ps[0]
        assert again.model.cpts["B"].rows[(0,)] == ps[1]
        assert again.model.cpts["B"].rows[(1,)] == ps[2]
        assert serialize(again) == text


class TestDot:
    def test_dag_dot_is_frozen(self):
        doc = parse("dag g { U [latent]; X [role=treatment]; D [role=outcome]; U -> X; X -> D [dashed]; }")
        assert emit_dot(doc.graph, "g") == (
            'digraph "g" {\n'
            '  "U" [style=dashed];\n'
            '  "X";\n'
            '  "D";\n'
            '  "U" -> "X";\n'
            '  "X" -> "D" [style=dashed];\n'
            "}\n"
        )

    def test_swig_dot_clusters_the_split_node(self):
        g = Dag(
            [Node("X", "treatment"), Node("D", "outcome")],
            [("X", "D")],
        )
        dot = emit_dot(build_swig(g, Intervention.on("X")), "g")
        assert 'subgraph "cluster_X"' in dot
        assert '"x" [shape=box];' in dot
        assert '"x" -> "D^x";' in dot

    def test_other_objects_rejected(self):
        with pytest.raises(TypeError):
            emit_dot(42)
