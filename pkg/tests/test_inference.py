"""Numeric layer: joints, intervention laws, measures, sweeps, tables."""

import math

import pytest

from swigcheck.graph import Dag, Matching, Node
from swigcheck.inference import (
    Cpt,
    DegenerateTableError,
    DiscreteModel,
    InfeasibleMatchError,
    InferenceError,
    InvalidCptError,
    TooManyVariablesError,
    TwoByTwo,
    ZeroProbabilityEventError,
    apply_matching,
    ci_deviation,
    ci_holds_numeric,
    effect_modification,
    joint,
    labbe_csv,
    labbe_curve,
    matched_selection_cpt,
    measure,
    null_curve,
    read_two_by_two_csv,
    rr_fixed_null_test,
    study_population,
    sweep_csv,
    swig_joint,
    trial_sweep,
    two_by_two_stats,
)
from swigcheck.measures import UndefinedMeasureError


def tiny_model() -> DiscreteModel:
    g = Dag(["A", "B"], [("A", "B")])
    return DiscreteModel(
        g,
        {
            "A": Cpt((), {(): 0.3}),
            "B": Cpt(("A",), {(0,): 0.2, (1,): 0.6}),
        },
    )


def randomized_model(risks=None) -> DiscreteModel:
    # C and X independent coin flips feeding D
    g = Dag(
        [Node("C"), Node("X", "treatment"), Node("D", "outcome")],
        [("C", "D"), ("X", "D")],
    )
    risks = risks or {(0, 0): 0.1, (0, 1): 0.2, (1, 0): 0.4, (1, 1): 0.8}
    return DiscreteModel(
        g,
        {
            "C": Cpt((), {(): 0.5}),
            "X": Cpt((), {(): 0.5}),
            "D": Cpt(("C", "X"), risks),
        },
    )


def greenland_model() -> DiscreteModel:
    # randomized X, risk factor C drives both outcome and selection
    g = Dag(
        [Node("C"), Node("X", "treatment"), Node("D", "outcome"), Node("S", "selection")],
        [("C", "D"), ("C", "S"), ("X", "D")],
    )
    return DiscreteModel(
        g,
        {
            "C": Cpt((), {(): 0.5}),
            "X": Cpt((), {(): 0.5}),
            "D": Cpt(("C", "X"), {(0, 0): 0.05, (0, 1): 0.1, (1, 0): 0.2, (1, 1): 0.4}),
            "S": Cpt(("C",), {(0,): 0.8, (1,): 0.2}),
        },
    )


class TestModelValidation:
    def test_missing_table(self):
        g = Dag(["A", "B"], [("A", "B")])
        with pytest.raises(InvalidCptError, match="no table"):
            DiscreteModel(g, {"A": Cpt((), {(): 0.5})})

    def test_wrong_parents(self):
        g = Dag(["A", "B"], [("A", "B")])
        with pytest.raises(InvalidCptError, match="conditions on"):
            DiscreteModel(
                g,
                {"A": Cpt((), {(): 0.5}), "B": Cpt((), {(): 0.5})},
            )

    def test_incomplete_rows(self):
        g = Dag(["A", "B"], [("A", "B")])
        with pytest.raises(InvalidCptError, match="every parent configuration"):
            DiscreteModel(
                g,
                {"A": Cpt((), {(): 0.5}), "B": Cpt(("A",), {(0,): 0.5})},
            )

    def test_probability_out_of_range(self):
        g = Dag(["A"], [])
        with pytest.raises(InvalidCptError, match="outside"):
            DiscreteModel(g, {"A": Cpt((), {(): 1.5})})

    def test_variable_cap(self):
        names = [f"N{i}" for i in range(21)]
        g = Dag(names, [])
        m = DiscreteModel(g, {n: Cpt((), {(): 0.5}) for n in names})
        with pytest.raises(TooManyVariablesError):
            joint(m)


class TestJointTable:
    def test_hand_computed_joint(self):
        t = joint(tiny_model())
        assert t.variables == ("A", "B")
        d = t.distribution()
        assert d[(0, 0)] == pytest.approx(0.56)
        assert d[(0, 1)] == pytest.approx(0.14)
        assert d[(1, 0)] == pytest.approx(0.12)
        assert d[(1, 1)] == pytest.approx(0.18)

    def test_prob_and_marginal(self):
        t = joint(tiny_model())
        assert t.prob({"B": 1}) == pytest.approx(0.32)
        assert t.marginal(["A"]).prob({"A": 1}) == pytest.approx(0.3)

    def test_condition_renormalizes_and_drops(self):
        t = joint(tiny_model())
        c = t.condition({"A": 1})
        assert c.variables == ("B",)
        assert c.prob({"B": 1}) == pytest.approx(0.6)

    def test_zero_probability_conditioning(self):
        g = Dag(["A"], [])
        m = DiscreteModel(g, {"A": Cpt((), {(): 0.0})})
        with pytest.raises(ZeroProbabilityEventError):
            joint(m).condition({"A": 1})

    def test_marginal_outcome_probability(self):
        # quarter weight on each (C, X) cell
        t = joint(randomized_model())
        assert t.prob({"D": 1}) == pytest.approx(0.375, abs=1e-12)


class TestSwigJoint:
    def test_downstream_tables_read_the_clamp(self):
        t = swig_joint(tiny_model(), {"A": 1})
        # B follows its A=1 row while A keeps its natural law
        assert t.condition({"A": 0}).prob({"B": 1}) == pytest.approx(0.6)
        assert t.marginal(["A"]).prob({"A": 1}) == pytest.approx(0.3)

    def test_randomization_makes_counterfactual_independent(self):
        m = greenland_model()
        t = swig_joint(m, {"X": 1})
        assert ci_holds_numeric(t, ["X"], ["D"])
        # intervened outcome risk averages the C strata
        assert t.prob({"D": 1}) == pytest.approx(0.25, abs=1e-12)

    def test_confounding_breaks_the_independence(self):
        g = Dag(
            [Node("C"), Node("X", "treatment"), Node("D", "outcome")],
            [("C", "X"), ("C", "D"), ("X", "D")],
        )
        m = DiscreteModel(
            g,
            {
                "C": Cpt((), {(): 0.5}),
                "X": Cpt(("C",), {(0,): 0.2, (1,): 0.8}),
                "D": Cpt(("C", "X"), {(0, 0): 0.1, (0, 1): 0.3, (1, 0): 0.5, (1, 1): 0.7}),
            },
        )
        assert ci_deviation(swig_joint(m, {"X": 1}), ["X"], ["D"]) > 1e-3
        assert ci_holds_numeric(swig_joint(m, {"X": 1}), ["X"], ["D"], given=["C"])

    def test_bad_intervention_value(self):
        with pytest.raises(InferenceError, match="0 or 1"):
            swig_joint(tiny_model(), {"A": 2})


class TestCiDeviation:
    def test_chain_screens_off(self):
        g = Dag(["A", "B", "C"], [("A", "B"), ("B", "C")])
        m = DiscreteModel(
            g,
            {
                "A": Cpt((), {(): 0.4}),
                "B": Cpt(("A",), {(0,): 0.3, (1,): 0.9}),
                "C": Cpt(("B",), {(0,): 0.2, (1,): 0.7}),
            },
        )
        t = joint(m)
        assert ci_deviation(t, ["A"], ["C"]) > 1e-3
        assert ci_deviation(t, ["A"], ["C"], ["B"]) < 1e-12

    def test_overlap_rejected(self):
        t = joint(tiny_model())
        with pytest.raises(InferenceError, match="overlap"):
            ci_deviation(t, ["A"], ["A"])

    def test_zero_probability_strata_skipped(self):
        g = Dag(["A", "B", "Z"], [("Z", "A"), ("Z", "B")])
        m = DiscreteModel(
            g,
            {
                "Z": Cpt((), {(): 0.0}),
                "A": Cpt(("Z",), {(0,): 0.3, (1,): 0.9}),
                "B": Cpt(("Z",), {(0,): 0.4, (1,): 0.8}),
            },
        )
        assert ci_deviation(joint(m), ["A"], ["B"], ["Z"]) < 1e-12


class TestMeasure:
    def test_study_population_conditions_on_selection(self):
        m = greenland_model()
        sp = study_population(joint(m), ["S"])
        assert "S" not in sp.variables
        # selection favors C=0, so risk drops relative to the eligible
        assert sp.prob({"D": 1}) < joint(m).prob({"D": 1})

    def test_randomized_risk_ratio_is_exact(self):
        rep = measure(joint(greenland_model()), "X", "D", "rr")
        assert rep.marginal == pytest.approx(2.0, abs=1e-12)
        assert rep.risks[0] == pytest.approx(0.125, abs=1e-12)
        assert rep.risks[1] == pytest.approx(0.25, abs=1e-12)

    def test_stratified_report(self):
        rep = measure(joint(randomized_model()), "X", "D", "rr", stratify_by=("C",))
        values = rep.stratum_values()
        assert values[(("C", 0),)] == pytest.approx(2.0, abs=1e-12)
        assert values[(("C", 1),)] == pytest.approx(2.0, abs=1e-12)
        assert rep.standardized == pytest.approx(2.0, abs=1e-12)

    def test_standardization_with_explicit_weights(self):
        rep = measure(
            joint(randomized_model()),
            "X",
            "D",
            "rd",
            stratify_by=("C",),
            standard={(("C", 0),): 1.0, (("C", 1),): 0.0},
        )
        # weights collapse onto the C=0 stratum
        assert rep.standardized == pytest.approx(0.1, abs=1e-12)

    def test_empty_strata_are_skipped(self):
        m = randomized_model()
        m = m.replace_cpt("C", Cpt((), {(): 0.0}))
        rep = measure(joint(m), "X", "D", "rr", stratify_by=("C",))
        assert list(rep.stratum_values()) == [(("C", 0),)]

    def test_zero_mass_arm_is_undefined(self):
        m = tiny_model().replace_cpt("A", Cpt((), {(): 0.0}))
        with pytest.raises(UndefinedMeasureError, match="no probability mass"):
            measure(joint(m), "A", "B", "rd")

    def test_effect_modification_depends_on_the_scale(self):
        t = joint(randomized_model())
        em_rr, _ = effect_modification(t, "X", "D", "C", "rr")
        em_or, values = effect_modification(t, "X", "D", "C", "or")
        assert not em_rr
        assert em_or
        assert values[0] == pytest.approx(2.25, abs=1e-12)
        assert values[1] == pytest.approx(6.0, abs=1e-12)


class TestMatching:
    def matched_model(self) -> DiscreteModel:
        g = Dag(
            [Node("C"), Node("X", "treatment"), Node("D", "outcome"), Node("S", "selection")],
            [("C", "D"), ("C", "S"), ("C", "X"), ("X", "D"), ("X", "S")],
        )
        return DiscreteModel(
            g,
            {
                "C": Cpt((), {(): 0.4}),
                "X": Cpt(("C",), {(0,): 0.3, (1,): 0.7}),
                "D": Cpt(("C", "X"), {(0, 0): 0.1, (0, 1): 0.2, (1, 0): 0.3, (1, 1): 0.5}),
                "S": Cpt(("C", "X"), {(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5}),
            },
        )

    def test_matched_rows_balance_the_matched_variable(self):
        m = self.matched_model()
        cpt = matched_selection_cpt(m, "S", "C", "X", 0.25)
        assert cpt.parents == ("C", "X")
        rebuilt = m.replace_cpt("S", cpt)
        sp = study_population(joint(rebuilt), ["S"])
        assert ci_deviation(sp, ["C"], ["X"]) < 1e-12

    def test_matching_preserves_the_matched_marginal(self):
        m = self.matched_model()
        g2 = Dag(m.graph.nodes, m.graph.edges, matchings=[Matching("S", "C", "X")])
        m2 = DiscreteModel(g2, m.cpts)
        matched = apply_matching(m2, 0.25)
        sp = study_population(joint(matched), ["S"])
        eligible = joint(m2)
        assert sp.prob({"C": 1}) == pytest.approx(eligible.prob({"C": 1}), abs=1e-12)

    def test_balanced_model_gets_a_constant_table(self):
        m = self.matched_model().replace_cpt("X", Cpt(("C",), {(0,): 0.5, (1,): 0.5}))
        cpt = matched_selection_cpt(m, "S", "C", "X", 0.2)
        assert all(v == pytest.approx(0.2, abs=1e-12) for v in cpt.rows.values())

    def test_infeasible_rate(self):
        m = self.matched_model()
        with pytest.raises(InfeasibleMatchError) as exc:
            matched_selection_cpt(m, "S", "C", "X", 0.99)
        assert 0.0 < exc.value.max_rate < 0.99

    def test_matching_requires_both_edges(self):
        m = greenland_model()  # S has parent C only
        with pytest.raises(InferenceError, match="no edge"):
            matched_selection_cpt(m, "S", "C", "X", 0.2)

    def test_rate_must_be_a_probability(self):
        m = self.matched_model()
        with pytest.raises(InferenceError, match="target rate"):
            matched_selection_cpt(m, "S", "C", "X", 0.0)


class TestTrialSweep:
    def test_odds_ratio_dips_between_the_endpoints(self):
        pts = trial_sweep((0.2, 0.8), "or", 2.0)
        assert len(pts) == 101
        ors = [p.or_value for p in pts]
        assert ors[0] == pytest.approx(2.0, abs=1e-9)
        assert ors[-1] == pytest.approx(2.0, abs=1e-9)
        assert pts[50].or_value == pytest.approx(11 / 7, abs=1e-12)
        low = min(ors)
        assert low == pytest.approx(1081 / 689, abs=1e-12)
        assert pts[ors.index(low)].p == pytest.approx(0.55)

    def test_risk_ratio_companion_range(self):
        pts = trial_sweep((0.2, 0.8), "or", 2.0)
        rrs = [p.rr_value for p in pts]
        assert min(rrs) == pytest.approx(10 / 9, abs=1e-9)
        assert max(rrs) == pytest.approx(5 / 3, abs=1e-9)

    def test_null_curves_sit_at_one(self):
        pts = trial_sweep((0.2, 0.8), "or", 2.0)
        assert all(abs(p.or_null - 1.0) < 1e-12 for p in pts)
        assert all(abs(p.rr_null - 1.0) < 1e-12 for p in pts)

    def test_constant_risk_ratio_moves_the_odds_ratio(self):
        pts = trial_sweep((0.1, 0.4), "rr", 2.0)
        assert all(abs(p.rr_value - 2.0) < 1e-12 for p in pts)
        ors = [p.or_value for p in pts]
        assert min(ors) == pytest.approx(2.25, abs=1e-9)
        assert max(ors) == pytest.approx(6.0, abs=1e-9)

    def test_difference_scale_rejected(self):
        with pytest.raises(InferenceError):
            trial_sweep((0.2, 0.8), "rd", 0.1)

    def test_grid_validation(self):
        with pytest.raises(InferenceError, match="outside"):
            trial_sweep((0.2, 0.8), "or", 2.0, grid=[0.5, 1.5])

    def test_custom_grid(self):
        pts = trial_sweep((0.2, 0.8), "or", 2.0, grid=[0.0, 1.0])
        assert [p.p for p in pts] == [0.0, 1.0]


class TestLabbe:
    def test_difference_band_clips_the_domain(self):
        c = labbe_curve("rd", 0.3, resolution=3)
        assert c.label == "rd=0.3"
        assert c.points[0] == (0.0, pytest.approx(0.3))
        assert c.points[-1][0] == pytest.approx(0.7)
        assert c.points[-1][1] == pytest.approx(1.0)

    def test_ratio_curve_stops_where_risk_hits_one(self):
        c = labbe_curve("rr", 2.0, resolution=3)
        assert c.points[-1][0] == pytest.approx(0.5)
        assert c.points[-1][1] == pytest.approx(1.0)

    def test_odds_curve_spans_the_square(self):
        c = labbe_curve("or", 2.0, resolution=5)
        assert c.points[0] == (0.0, pytest.approx(0.0))
        assert c.points[-1] == (1.0, pytest.approx(1.0))
        p0, p1 = c.points[2]
        assert p0 == pytest.approx(0.5)
        assert p1 == pytest.approx(2 / 3)

    def test_null_curve_is_the_diagonal(self):
        c = null_curve(resolution=11)
        assert c.label == "null"
        assert c.scale is None
        assert all(p0 == pytest.approx(p1) for p0, p1 in c.points)

    def test_validation(self):
        with pytest.raises(InferenceError):
            labbe_curve("rd", 1.5)
        with pytest.raises(InferenceError):
            labbe_curve("or", 0.0)
        with pytest.raises(InferenceError):
            labbe_curve("rr", 2.0, resolution=1)


class TestTwoByTwo:
    def test_textbook_table(self):
        s = two_by_two_stats(TwoByTwo(20, 30, 30, 20))
        assert s.chi_square == pytest.approx(4.0, abs=1e-12)
        assert s.p_value == pytest.approx(0.0455003, abs=1e-6)
        assert s.rd == pytest.approx(-0.2, abs=1e-12)
        assert s.rr == pytest.approx(2 / 3, abs=1e-12)
        assert s.or_value == pytest.approx(4 / 9, abs=1e-12)

    def test_second_table(self):
        s = two_by_two_stats(TwoByTwo(10, 10, 5, 15))
        assert s.rd == pytest.approx(0.25, abs=1e-12)
        assert s.rr == pytest.approx(2.0, abs=1e-12)
        assert s.or_value == pytest.approx(3.0, abs=1e-12)

    def test_continuity_correction_shrinks_the_statistic(self):
        plain = two_by_two_stats(TwoByTwo(20, 30, 30, 20))
        corrected = two_by_two_stats(TwoByTwo(20, 30, 30, 20), continuity=True)
        assert corrected.chi_square == pytest.approx(3.24, abs=1e-12)
        assert corrected.p_value == pytest.approx(0.0718606, abs=1e-6)
        assert corrected.chi_square < plain.chi_square

    def test_statistic_scales_linearly_with_counts(self):
        base = two_by_two_stats(TwoByTwo(20, 30, 30, 20))
        big = two_by_two_stats(TwoByTwo(20, 30, 30, 20).scaled(10))
        assert big.chi_square == pytest.approx(10 * base.chi_square, abs=1e-9)
        assert big.p_value < base.p_value

    def test_undefined_ratios_are_none(self):
        s = two_by_two_stats(TwoByTwo(5, 5, 0, 10))
        assert s.rr is None and s.or_value is None
        s2 = two_by_two_stats(TwoByTwo(5, 0, 5, 5))
        assert s2.or_value is None and s2.rr is not None

    def test_degenerate_tables(self):
        with pytest.raises(DegenerateTableError):
            two_by_two_stats(TwoByTwo(-1, 5, 5, 5))
        with pytest.raises(DegenerateTableError):
            two_by_two_stats(TwoByTwo(0, 0, 5, 5))

    def test_fixed_null_risk_ratio_test(self):
        r = rr_fixed_null_test(TwoByTwo(20, 30, 30, 20), 1.0)
        assert r.rr == pytest.approx(2 / 3, abs=1e-12)
        assert r.z == pytest.approx(-1.9477914, abs=1e-6)
        assert r.p_value == pytest.approx(0.0514399, abs=1e-6)

    def test_scaling_sharpens_the_fixed_null_test(self):
        small = rr_fixed_null_test(TwoByTwo(20, 30, 30, 20), 1.0)
        big = rr_fixed_null_test(TwoByTwo(20, 30, 30, 20).scaled(100), 1.0)
        assert big.p_value < small.p_value

    def test_fixed_null_validation(self):
        with pytest.raises(InferenceError):
            rr_fixed_null_test(TwoByTwo(20, 30, 30, 20), 0.0)
        with pytest.raises(DegenerateTableError):
            rr_fixed_null_test(TwoByTwo(0, 30, 30, 20), 1.0)

    def test_at_the_reference_the_test_is_null(self):
        r = rr_fixed_null_test(TwoByTwo(20, 30, 30, 20), 2 / 3)
        assert r.z == pytest.approx(0.0, abs=1e-12)
        assert r.p_value == pytest.approx(1.0)


class TestDelimitedIo:
    def test_round_trip(self):
        t = read_two_by_two_csv("a,b,c,d\n20,30,30,20\n")
        assert (t.a, t.b, t.c, t.d) == (20.0, 30.0, 30.0, 20.0)

    def test_header_must_match(self):
        with pytest.raises(InferenceError, match="header"):
            read_two_by_two_csv("w,x,y,z\n1,2,3,4\n")

    def test_single_row_required(self):
        with pytest.raises(InferenceError, match="one data row"):
            read_two_by_two_csv("a,b,c,d\n1,2,3,4\n5,6,7,8\n")

    def test_numeric_counts_required(self):
        with pytest.raises(InferenceError, match="numeric"):
            read_two_by_two_csv("a,b,c,d\n1,2,three,4\n")

    def test_sweep_csv_shape(self):
        text = sweep_csv(trial_sweep((0.2, 0.8), "or", 2.0, grid=[0.0, 0.5, 1.0]))
        lines = text.strip().split("\n")
        assert lines[0] == "p,or,rr,or_null,rr_null"
        assert len(lines) == 4
        assert lines[1].startswith("0.000000,2.000000000")

    def test_labbe_csv_shape(self):
        text = labbe_csv([labbe_curve("or", 2.0, resolution=2), null_curve(resolution=2)])
        lines = text.strip().split("\n")
        assert lines[0] == "curve,p0,p1"
        assert lines[1] == "or=2,0.000000,0.000000"
        assert lines[-1] == "null,1.000000,1.000000"
