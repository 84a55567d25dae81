"""Built-in study designs with vetted verdicts.

Each scenario bundles a graph, a worked probability model, and a table of
expected outcomes: condition checks, minimal adjustment sets, and
adjust-or-not decisions. The expectations are derived by hand from the
graphs, so they double as a regression table for the engine; evaluate()
reruns any entry against the current code.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from . import criteria
from .criteria import Hypothesis, StudyRoles
from .dsl import Document, serialize
from .errors import Error
from .graph import Dag, Matching, Node, OUTCOME, SELECTION, TREATMENT
from .inference import Cpt, DiscreteModel, apply_matching
from .measures import OR as OR_SCALE, apply_effect


class UnknownScenarioError(Error):
    code = "unknown_scenario"

    def __init__(self, scenario: str, variant: Optional[str] = None):
        if variant is None:
            super().__init__(f"no scenario named {scenario!r}")
        else:
            super().__init__(
                f"scenario {scenario!r} has no variant {variant!r}"
            )


@dataclass(frozen=True)
class Expectation:
    """One vetted engine outcome.

    kind selects what to run: a single condition check, a minimal-set
    search, an adjust-or-not decision, or the staged overall check.
    """

    scenario: str
    kind: str
    variant: Optional[str] = None
    adjust: tuple[str, ...] = ()
    stage: int = 1
    include_earlier_stages: bool = True
    require: tuple[str, ...] = ()
    covariate: Optional[str] = None
    scale: Optional[str] = None
    null: bool = False
    no_em: Optional[str] = None
    expect_holds: Optional[bool] = None
    expect_sets: Optional[tuple[tuple[str, ...], ...]] = None
    expect_needs: Optional[bool] = None
    expect_target: Optional[str] = None
    note: str = ""

    def expected(self) -> dict:
        if self.kind in ("exchangeability", "cohort", "casecontrol", "multi_stage"):
            return {"holds": self.expect_holds}
        if self.kind == "adjustment_sets":
            return {"sets": self.expect_sets}
        if self.kind == "decision":
            return {"needs": self.expect_needs, "target": self.expect_target}
        raise ValueError(f"unknown expectation kind {self.kind!r}")


@dataclass(frozen=True)
class ExpectationResult:
    expectation: Expectation
    actual: dict
    ok: bool


@dataclass(frozen=True)
class Scenario:
    id: str
    title: str
    summary: str
    doc: Document
    variants: Mapping[str, Document] = field(default_factory=dict)

    def document(self, variant: Optional[str] = None) -> Document:
        if variant is None:
            return self.doc
        try:
            return self.variants[variant]
        except KeyError:
            raise UnknownScenarioError(self.id, variant) from None


def _doc(name, nodes, edges, dashed=(), matchings=(), cpts=None, match_rate=None):
    graph = Dag(nodes, edges, dashed=dashed, matchings=matchings)
    model = None
    if cpts is not None:
        model = DiscreteModel(graph, cpts)
        if match_rate is not None:
            model = apply_matching(model, match_rate)
    return Document(name, graph, model)


def _root(p):
    return Cpt((), {(): p})


def _table(parents, values):
    keys = sorted(values)
    return Cpt(tuple(parents), {k: values[k] for k in keys})


X = Node("X", TREATMENT)
D = Node("D", OUTCOME)
S = Node("S", SELECTION)


def _build_scenarios() -> tuple[Scenario, ...]:
    out = []

    # Selection driven by treatment and an independent risk factor.
    cohort = _doc(
        "cohort",
        [Node("C"), X, D, S],
        [("C", "D"), ("C", "S"), ("X", "D"), ("X", "S")],
        dashed=[("X", "D")],
        cpts={
            "C": _root(0.3),
            "X": _root(0.4),
            "D": _table(("C", "X"), {(0, 0): 0.05, (0, 1): 0.12, (1, 0): 0.2, (1, 1): 0.45}),
            "S": _table(("C", "X"), {(0, 0): 0.5, (0, 1): 0.8, (1, 0): 0.3, (1, 1): 0.65}),
        },
    )
    out.append(
        Scenario(
            "cohort",
            "Cohort with differential follow-up",
            "Staying under follow-up depends on treatment and on a risk "
            "factor for the outcome, so the study population is a biased "
            "slice of the eligible one.",
            cohort,
        )
    )

    # Selection driven by the outcome, as in sampling cases and controls.
    casecontrol = _doc(
        "casecontrol",
        [Node("C"), X, D, S],
        [("C", "D"), ("C", "S"), ("D", "S"), ("X", "D")],
        dashed=[("X", "D")],
        cpts={
            "C": _root(0.35),
            "X": _root(0.45),
            "D": _table(("C", "X"), {(0, 0): 0.08, (0, 1): 0.18, (1, 0): 0.3, (1, 1): 0.5}),
            "S": _table(("C", "D"), {(0, 0): 0.08, (0, 1): 0.7, (1, 0): 0.15, (1, 1): 0.9}),
        },
    )
    out.append(
        Scenario(
            "casecontrol",
            "Case-control sampling with a shared risk factor",
            "Cases are sampled preferentially and a covariate affects both "
            "the outcome and who ends up sampled.",
            casecontrol,
        )
    )

    # Pure collider stratification: selection responds to treatment and
    # outcome but treatment does nothing.
    colliderS = _doc(
        "colliderS",
        [X, D, S],
        [("D", "S"), ("X", "S")],
        cpts={
            "X": _root(0.4),
            "D": _root(0.25),
            "S": _table(("D", "X"), {(0, 0): 0.1, (0, 1): 0.55, (1, 0): 0.4, (1, 1): 0.85}),
        },
    )
    colliderS_effect = _doc(
        "colliderS_effect",
        [X, D, S],
        [("D", "S"), ("X", "D"), ("X", "S")],
        cpts={
            "X": _root(0.4),
            "D": _table(("X",), {(0,): 0.2, (1,): 0.42}),
            "S": _table(("D", "X"), {(0, 0): 0.1, (0, 1): 0.55, (1, 0): 0.4, (1, 1): 0.85}),
        },
    )
    out.append(
        Scenario(
            "colliderS",
            "Selection as a pure collider",
            "Both treatment and outcome drive selection directly; nothing "
            "measured can close the path they open.",
            colliderS,
            {"effect": colliderS_effect},
        )
    )

    # Selection upstream of treatment through a shared cause.
    colliderX_cpts = {
        "U": _root(0.3),
        "V": _root(0.45),
        "X": _table(("U", "V"), {(0, 0): 0.15, (0, 1): 0.5, (1, 0): 0.4, (1, 1): 0.75}),
        "D": _table(("V", "X"), {(0, 0): 0.1, (0, 1): 0.22, (1, 0): 0.3, (1, 1): 0.55}),
        "S": _table(("U",), {(0,): 0.25, (1,): 0.7}),
    }
    colliderX = _doc(
        "colliderX",
        [Node("U"), Node("V"), X, D, S],
        [("U", "S"), ("U", "X"), ("V", "D"), ("V", "X"), ("X", "D")],
        dashed=[("X", "D")],
        cpts=colliderX_cpts,
    )
    colliderX_latent = _doc(
        "colliderX_latent_v",
        [Node("U"), Node("V", latent=True), X, D, S],
        [("U", "S"), ("U", "X"), ("V", "D"), ("V", "X"), ("X", "D")],
        dashed=[("X", "D")],
        cpts=colliderX_cpts,
    )
    out.append(
        Scenario(
            "colliderX",
            "Selection sharing a cause with treatment",
            "One unmeasured-style cause feeds both selection and treatment "
            "while a second covariate confounds treatment and outcome.",
            colliderX,
            {"latent_v": colliderX_latent},
        )
    )

    # Selection sharing a cause with the outcome.
    colliderD = _doc(
        "colliderD",
        [Node("U"), X, D, S],
        [("U", "D"), ("U", "S"), ("X", "D")],
        cpts={
            "U": _root(0.3),
            "X": _root(0.5),
            "D": _table(("U", "X"), {(0, 0): 0.1, (0, 1): 0.25, (1, 0): 0.35, (1, 1): 0.6}),
            "S": _table(("U",), {(0,): 0.2, (1,): 0.75}),
        },
    )
    out.append(
        Scenario(
            "colliderD",
            "Selection sharing a cause with the outcome",
            "A covariate raising the outcome risk also decides who enters "
            "the study; treatment itself plays no role in selection.",
            colliderD,
        )
    )

    # Selection driven by a risk factor alone.
    greenland = _doc(
        "greenland",
        [Node("C"), X, D, S],
        [("C", "D"), ("C", "S"), ("X", "D")],
        dashed=[("X", "D")],
        cpts={
            "C": _root(0.25),
            "X": _root(0.5),
            "D": _table(("C", "X"), {(0, 0): 0.07, (0, 1): 0.16, (1, 0): 0.28, (1, 1): 0.5}),
            "S": _table(("C",), {(0,): 0.15, (1,): 0.6}),
        },
    )
    out.append(
        Scenario(
            "greenland",
            "Risk factor drives selection",
            "Selection depends only on a risk factor for the outcome, a "
            "design where ratio and difference scales part ways with the "
            "odds scale.",
            greenland,
        )
    )

    # Selection ahead of treatment: being in care changes what you get.
    clinical = _doc(
        "clinical",
        [Node("C"), S, X, D],
        [("C", "D"), ("C", "S"), ("S", "X"), ("X", "D")],
        dashed=[("X", "D")],
        cpts={
            "C": _root(0.3),
            "S": _table(("C",), {(0,): 0.2, (1,): 0.7}),
            "X": _table(("S",), {(0,): 0.25, (1,): 0.6}),
            # Constant odds ratio of 2.5 in both C strata: stratum ORs in the
            # study population agree while the crude OR shifts toward 1.
            "D": _table(
                ("C", "X"),
                {
                    (0, 0): 0.06,
                    (0, 1): apply_effect(OR_SCALE, 0.06, 2.5),
                    (1, 0): 0.25,
                    (1, 1): apply_effect(OR_SCALE, 0.25, 2.5),
                },
            ),
        },
    )
    out.append(
        Scenario(
            "clinical",
            "Care setting upstream of treatment",
            "Entry into care precedes and influences treatment, making "
            "selection part of the confounding structure.",
            clinical,
        )
    )

    # Matched cohort: controls picked to mirror the exposed on C.
    S_matched_x = Node("S", SELECTION)
    mc_matchings = [Matching("S", "C", "X")]
    matched_cohort = _doc(
        "matched_cohort",
        [Node("C"), X, D, S_matched_x],
        [("C", "D"), ("C", "S"), ("C", "X"), ("X", "D"), ("X", "S")],
        dashed=[("X", "D")],
        matchings=mc_matchings,
        cpts={
            "C": _root(0.4),
            "X": _table(("C",), {(0,): 0.3, (1,): 0.6}),
            "D": _table(("C", "X"), {(0, 0): 0.08, (0, 1): 0.2, (1, 0): 0.25, (1, 1): 0.5}),
            "S": _table(("C", "X"), {(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5}),
        },
        match_rate=0.25,
    )
    matched_cohort_nc = _doc(
        "matched_cohort_no_confounding",
        [Node("C"), X, D, S_matched_x],
        [("C", "D"), ("C", "S"), ("X", "D"), ("X", "S")],
        dashed=[("X", "D")],
        matchings=mc_matchings,
        cpts={
            "C": _root(0.4),
            "X": _root(0.42),
            "D": _table(("C", "X"), {(0, 0): 0.08, (0, 1): 0.2, (1, 0): 0.25, (1, 1): 0.5}),
            "S": _table(("C", "X"), {(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5}),
        },
        match_rate=0.25,
    )
    matched_cohort_nr = _doc(
        "matched_cohort_no_risk",
        [Node("C"), X, D, S_matched_x],
        [("C", "S"), ("C", "X"), ("X", "D"), ("X", "S")],
        dashed=[("X", "D")],
        matchings=mc_matchings,
        cpts={
            "C": _root(0.4),
            "X": _table(("C",), {(0,): 0.3, (1,): 0.6}),
            "D": _table(("X",), {(0,): 0.12, (1,): 0.3}),
            "S": _table(("C", "X"), {(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5}),
        },
        match_rate=0.25,
    )
    out.append(
        Scenario(
            "matched_cohort",
            "Cohort matched on a confounder",
            "Unexposed subjects are taken so the matching factor has the "
            "same distribution in both treatment arms of the study "
            "population.",
            matched_cohort,
            {
                "no_confounding": matched_cohort_nc,
                "no_risk": matched_cohort_nr,
            },
        )
    )

    # Matched case-control: controls mirror the cases on C.
    mcc_matchings = [Matching("S", "C", "D")]
    matched_casecontrol = _doc(
        "matched_casecontrol",
        [Node("C"), X, D, S],
        [("C", "D"), ("C", "S"), ("C", "X"), ("D", "S"), ("X", "D")],
        dashed=[("X", "D")],
        matchings=mcc_matchings,
        cpts={
            "C": _root(0.35),
            "X": _table(("C",), {(0,): 0.3, (1,): 0.55}),
            "D": _table(("C", "X"), {(0, 0): 0.06, (0, 1): 0.14, (1, 0): 0.22, (1, 1): 0.4}),
            "S": _table(("C", "D"), {(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5}),
        },
        match_rate=0.2,
    )
    matched_casecontrol_nc = _doc(
        "matched_casecontrol_no_confounding",
        [Node("C"), X, D, S],
        [("C", "D"), ("C", "S"), ("D", "S"), ("X", "D")],
        dashed=[("X", "D")],
        matchings=mcc_matchings,
        cpts={
            "C": _root(0.35),
            "X": _root(0.4),
            "D": _table(("C", "X"), {(0, 0): 0.06, (0, 1): 0.14, (1, 0): 0.22, (1, 1): 0.4}),
            "S": _table(("C", "D"), {(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5}),
        },
        match_rate=0.2,
    )
    matched_casecontrol_nr = _doc(
        "matched_casecontrol_no_risk",
        [Node("C"), X, D, S],
        [("C", "S"), ("C", "X"), ("D", "S"), ("X", "D")],
        dashed=[("X", "D")],
        matchings=mcc_matchings,
        cpts={
            "C": _root(0.35),
            "X": _table(("C",), {(0,): 0.3, (1,): 0.55}),
            "D": _table(("X",), {(0,): 0.1, (1,): 0.25}),
            "S": _table(("C", "D"), {(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5}),
        },
        match_rate=0.2,
    )
    out.append(
        Scenario(
            "matched_casecontrol",
            "Case-control matched on a shared cause",
            "Controls are drawn to give the matching factor the case "
            "distribution, balancing it across outcome status in the "
            "study population.",
            matched_casecontrol,
            {
                "no_confounding": matched_casecontrol_nc,
                "no_risk": matched_casecontrol_nr,
            },
        )
    )

    # A two-stage design: a subcohort first, case sampling second.
    casecohort = _doc(
        "casecohort",
        [X, D, Node("S1", SELECTION, 1), Node("S2", SELECTION, 2)],
        [("D", "S2"), ("S1", "S2"), ("X", "D"), ("X", "S1")],
        cpts={
            "X": _root(0.45),
            "D": _table(("X",), {(0,): 0.12, (1,): 0.3}),
            "S1": _table(("X",), {(0,): 0.3, (1,): 0.7}),
            "S2": _table(("D", "S1"), {(0, 0): 0.02, (0, 1): 0.25, (1, 0): 0.1, (1, 1): 0.9}),
        },
    )
    out.append(
        Scenario(
            "casecohort",
            "Two-stage case-cohort sampling",
            "Stage one draws a treatment-dependent subcohort, stage two "
            "enriches for cases; each stage answers to its own condition.",
            casecohort,
        )
    )

    return tuple(out)


SCENARIOS: tuple[Scenario, ...] = _build_scenarios()
_BY_ID = {s.id: s for s in SCENARIOS}


def ids() -> tuple[str, ...]:
    return tuple(s.id for s in SCENARIOS)


def get(scenario_id: str) -> Scenario:
    try:
        return _BY_ID[scenario_id]
    except KeyError:
        raise UnknownScenarioError(scenario_id) from None


def document(scenario_id: str, variant: Optional[str] = None) -> Document:
    return get(scenario_id).document(variant)


def export_files(directory: str) -> list[str]:
    """Write every scenario (and variant) as a .dag file; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for scenario in SCENARIOS:
        docs = [(scenario.id, scenario.doc)]
        docs += [
            (f"{scenario.id}__{name}", doc)
            for name, doc in sorted(scenario.variants.items())
        ]
        for stem, doc in docs:
            path = os.path.join(directory, f"{stem}.dag")
            with open(path, "w", newline="") as fh:
                fh.write(serialize(doc))
            paths.append(path)
    return paths


# -- the expectation table ---------------------------------------------------------


def _cond(scenario, kind, adjust, holds, note, variant=None, stage=1, earlier=True):
    return Expectation(
        scenario,
        kind,
        variant=variant,
        adjust=tuple(adjust),
        stage=stage,
        include_earlier_stages=earlier,
        expect_holds=holds,
        note=note,
    )


def _sets(scenario, require, sets, note, variant=None):
    return Expectation(
        scenario,
        "adjustment_sets",
        variant=variant,
        require=tuple(require),
        expect_sets=tuple(tuple(s) for s in sets),
        note=note,
    )


def _decision(scenario, covariate, scale, needs, target, note, variant=None,
              null=False, no_em=None):
    return Expectation(
        scenario,
        "decision",
        variant=variant,
        covariate=covariate,
        scale=scale,
        null=null,
        no_em=no_em,
        expect_needs=needs,
        expect_target=target,
        note=note,
    )


MARGINAL = criteria.MARGINAL_ELIGIBLE
CONDITIONAL = criteria.CONDITIONAL_ELIGIBLE

EXPECTATIONS: tuple[Expectation, ...] = (
    # cohort ----------------------------------------------------------------
    _cond("cohort", "cohort", ("C",), True,
          "Inside levels of the risk factor, staying in differs from the "
          "counterfactual outcome."),
    _cond("cohort", "cohort", (), False,
          "Unadjusted, the shared risk factor links selection to the outcome."),
    _cond("cohort", "casecontrol", (), False,
          "Selection responds to treatment, which breaks the case-control route."),
    _cond("cohort", "casecontrol", ("C",), False,
          "No conditioning removes the treatment-to-selection arrow."),
    _cond("cohort", "exchangeability", (), True,
          "Treatment is randomized against the covariate here."),
    _sets("cohort", ("exchangeability", "selection"), (("C",),),
          "The risk factor alone restores both requirements."),
    _decision("cohort", "C", "rd", True, MARGINAL,
              "Selection tied to treatment forces standardization even on "
              "the difference scale.", no_em="rd"),
    _decision("cohort", "C", "or", True, CONDITIONAL,
              "The odds scale only supports the within-stratum contrast.",
              no_em="or"),
    _decision("cohort", "C", "rd", True, MARGINAL,
              "The bias survives the null because selection still tracks "
              "both treatment and the risk factor.", null=True),
    _decision("cohort", "C", "or", True, MARGINAL,
              "Null or not, the collider at selection stays open.", null=True),

    # casecontrol -----------------------------------------------------------
    _cond("casecontrol", "casecontrol", ("C",), True,
          "Given the risk factor, sampling no longer tracks treatment."),
    _cond("casecontrol", "casecontrol", (), False,
          "The shared risk factor connects sampling to treatment through "
          "the outcome's parents."),
    _cond("casecontrol", "cohort", ("C",), False,
          "Outcome-driven sampling can never satisfy the cohort route."),
    _cond("casecontrol", "cohort", (), False,
          "Same failure unadjusted."),
    _cond("casecontrol", "exchangeability", (), True,
          "Treatment has no causes in this design."),
    _sets("casecontrol", ("exchangeability", "selection"), (("C",),),
          "Adjusting the risk factor is necessary and sufficient."),
    _decision("casecontrol", "C", "or", True, CONDITIONAL,
              "Off the null the covariate is needed in the model.",
              no_em="or"),
    _decision("casecontrol", "C", "or", False, MARGINAL,
              "Under the null the crude odds ratio is already clean.",
              null=True),

    # colliderS -------------------------------------------------------------
    _cond("colliderS", "cohort", (), False,
          "Treatment and outcome collide at selection; no covariate exists "
          "to block it."),
    _cond("colliderS", "casecontrol", (), False,
          "The treatment arrow into selection defeats this route too."),
    _cond("colliderS", "exchangeability", (), True,
          "Assignment itself is unconfounded."),
    _sets("colliderS", ("selection",), (),
          "Nothing measured can repair the design."),
    _cond("colliderS", "cohort", (), False,
          "Adding a real effect changes nothing about the collider.",
          variant="effect"),
    _cond("colliderS", "casecontrol", (), False,
          "Still broken with a real effect present.", variant="effect"),

    # colliderX -------------------------------------------------------------
    _cond("colliderX", "cohort", (), False,
          "Conditioning on treatment opens the path through its two causes."),
    _cond("colliderX", "cohort", ("U",), True,
          "Blocking the selection-side cause closes it."),
    _cond("colliderX", "cohort", ("V",), True,
          "Blocking the outcome-side cause closes it as well."),
    _cond("colliderX", "cohort", ("U", "V"), True,
          "Both together also work."),
    _cond("colliderX", "exchangeability", (), False,
          "The outcome-side cause confounds assignment."),
    _cond("colliderX", "exchangeability", ("U",), False,
          "The selection-side cause is not the confounder."),
    _cond("colliderX", "exchangeability", ("V",), True,
          "The confounder itself restores exchangeability."),
    _cond("colliderX", "casecontrol", (), False,
          "Selection and treatment share a cause."),
    _cond("colliderX", "casecontrol", ("U",), True,
          "That shared cause is blockable."),
    _cond("colliderX", "casecontrol", ("V",), False,
          "The wrong covariate leaves the shared cause open."),
    _sets("colliderX", ("cohort",), (("U",), ("V",)),
          "Either parent of treatment fixes selection; both are minimal."),
    _sets("colliderX", ("exchangeability", "cohort"), (("V",),),
          "Only the confounder satisfies both demands at once."),
    _sets("colliderX", ("cohort",), (("U",),),
          "With the confounder unmeasured, one option remains.",
          variant="latent_v"),
    _sets("colliderX", ("exchangeability", "cohort"), (),
          "Unmeasured confounding cannot be adjusted away.",
          variant="latent_v"),

    # colliderD -------------------------------------------------------------
    _cond("colliderD", "cohort", ("U",), True,
          "The shared cause of outcome and selection is blockable."),
    _cond("colliderD", "cohort", (), False,
          "Unadjusted, selection still tracks the outcome's cause."),
    _cond("colliderD", "casecontrol", ("U",), True,
          "Same covariate fixes the case-control route."),
    _cond("colliderD", "casecontrol", (), False,
          "Conditioning on the outcome opens its collider."),
    _cond("colliderD", "exchangeability", (), True,
          "Treatment is assigned independently of everything."),
    _decision("colliderD", "U", "rd", False, MARGINAL,
              "With no effect modification on this scale the crude "
              "difference already matches the standardized one.",
              no_em="rd"),
    _decision("colliderD", "U", "rr", False, MARGINAL,
              "Likewise for the ratio.", no_em="rr"),
    _decision("colliderD", "U", "or", True, CONDITIONAL,
              "The odds scale is not collapsible over a risk factor.",
              no_em="or"),
    _decision("colliderD", "U", "or", False, MARGINAL,
              "Under the null treatment is disconnected and sampling on "
              "the outcome side is harmless for the odds ratio.",
              null=True),
    _decision("colliderD", "U", "rd", False, MARGINAL,
              "Under the null the equalities hold end to end.", null=True),

    # greenland ---------------------------------------------------------------
    _cond("greenland", "cohort", ("C",), True,
          "Within the risk factor, selection carries no outcome signal."),
    _cond("greenland", "cohort", (), False,
          "The risk factor links selection and outcome."),
    _cond("greenland", "casecontrol", ("C",), True,
          "Also fine on the case-control route once adjusted."),
    _cond("greenland", "casecontrol", (), False,
          "Unadjusted the back route stays open."),
    _cond("greenland", "exchangeability", (), True,
          "Nothing causes treatment."),
    _decision("greenland", "C", "rd", False, MARGINAL,
              "Difference scale collapses over a treatment-independent "
              "covariate, so the crude study contrast suffices.",
              no_em="rd"),
    _decision("greenland", "C", "rr", False, MARGINAL,
              "Ratio scale behaves the same way.", no_em="rr"),
    _decision("greenland", "C", "or", True, CONDITIONAL,
              "Odds ratios do not collapse over a risk factor even without "
              "effect modification.", no_em="or"),
    _decision("greenland", "C", "rd", False, MARGINAL,
              "Nothing to correct at the null.", null=True),
    _decision("greenland", "C", "or", False, MARGINAL,
              "At the null even the odds scale is clean.", null=True),

    # clinical ----------------------------------------------------------------
    _cond("clinical", "cohort", ("C",), True,
          "The underlying condition screens selection off the outcome."),
    _cond("clinical", "cohort", (), False,
          "Unadjusted, care entry and outcome share their cause."),
    _cond("clinical", "casecontrol", (), False,
          "Selection feeds treatment, so this route cannot hold."),
    _cond("clinical", "exchangeability", (), False,
          "Being in care confounds treatment."),
    _cond("clinical", "exchangeability", ("C",), True,
          "The shared condition blocks the back path."),
    _cond("clinical", "exchangeability", ("S",), True,
          "Conditioning on care entry itself also blocks it."),
    _decision("clinical", "C", "rd", False, CONDITIONAL,
              "Conditioning on selection blocks the confounding path, so "
              "the study-population strata are already right.",
              no_em="rd"),
    _decision("clinical", "C", "or", True, CONDITIONAL,
              "The odds version of collapsibility fails off the null.",
              no_em="or"),
    _decision("clinical", "C", "rd", False, CONDITIONAL,
              "Still fine at the null.", null=True),
    _decision("clinical", "C", "or", False, CONDITIONAL,
              "At the null the odds obstruction disappears.", null=True),

    # matched_cohort -----------------------------------------------------------
    _cond("matched_cohort", "cohort", ("C",), True,
          "Matching aside, adjusting the confounder satisfies the cohort "
          "route."),
    _cond("matched_cohort", "cohort", (), False,
          "Unadjusted it fails like any confounded cohort."),
    _cond("matched_cohort", "casecontrol", (), False,
          "Treatment drives selection by construction here."),
    _cond("matched_cohort", "exchangeability", ("C",), True,
          "The matching factor is the confounder."),
    _cond("matched_cohort", "exchangeability", (), False,
          "Confounded without it."),
    _decision("matched_cohort", "C", "rd", False, CONDITIONAL,
              "Matching balances the factor across arms in the study "
              "population, which is exactly what the difference scale "
              "needs.", no_em="rd"),
    _decision("matched_cohort", "C", "or", True, CONDITIONAL,
              "Balance does not rescue the odds scale off the null.",
              no_em="or"),
    _decision("matched_cohort", "C", "or", False, CONDITIONAL,
              "At the null the matched design is clean on any scale.",
              null=True),
    _decision("matched_cohort", "C", "rd", False, CONDITIONAL,
              "Same at the null for the difference.", null=True),
    _decision("matched_cohort", "C", "rd", False, MARGINAL,
              "Without confounding, matching still leaves the crude "
              "difference interpretable.", variant="no_confounding",
              no_em="rd"),
    _decision("matched_cohort", "C", "or", True, CONDITIONAL,
              "The odds scale still resists collapsing off the null.",
              variant="no_confounding", no_em="or"),
    _decision("matched_cohort", "C", "or", False, MARGINAL,
              "Null plus no confounding leaves nothing to fix.",
              variant="no_confounding", null=True),
    _decision("matched_cohort", "C", "rd", False, MARGINAL,
              "Matching on a non risk factor is ignorable outright.",
              variant="no_risk", no_em="rd"),
    _decision("matched_cohort", "C", "or", False, MARGINAL,
              "Ignorable on the odds scale too.", variant="no_risk",
              no_em="or"),

    # matched_casecontrol --------------------------------------------------------
    _cond("matched_casecontrol", "casecontrol", ("C",), True,
          "With the matching factor adjusted, sampling is ignorable for "
          "the odds route."),
    _cond("matched_casecontrol", "casecontrol", (), False,
          "Unadjusted, the factor ties sampling to treatment."),
    _cond("matched_casecontrol", "cohort", ("C",), False,
          "Outcome-driven sampling rules out the cohort route."),
    _cond("matched_casecontrol", "exchangeability", ("C",), True,
          "The matching factor doubles as the confounder."),
    _cond("matched_casecontrol", "exchangeability", (), False,
          "Confounded without it."),
    _decision("matched_casecontrol", "C", "or", True, CONDITIONAL,
              "Matching balances the factor against the outcome, but the "
              "treatment link keeps the stratified analysis necessary.",
              no_em="or"),
    _decision("matched_casecontrol", "C", "or", False, CONDITIONAL,
              "Under the null the matched case-control design needs no "
              "correction.", null=True),
    _decision("matched_casecontrol", "C", "or", False, CONDITIONAL,
              "Without the treatment link, matched sampling plus the "
              "within-stratum contrast is already coherent.",
              variant="no_confounding", no_em="or"),
    _decision("matched_casecontrol", "C", "or", False, MARGINAL,
              "Null and unconfounded: the crude odds ratio stands.",
              variant="no_confounding", null=True),
    _decision("matched_casecontrol", "C", "or", True, MARGINAL,
              "Matching on a non risk factor distorts the crude odds "
              "ratio through the treatment link, so adjust even though "
              "the eligible-population target is marginal.",
              variant="no_risk", no_em="or"),
    _decision("matched_casecontrol", "C", "or", False, MARGINAL,
              "At the null that distortion vanishes.",
              variant="no_risk", null=True),

    # casecohort -------------------------------------------------------------------
    _cond("casecohort", "cohort", (), True,
          "Stage one only looks at treatment, which the condition "
          "conditions on anyway.", stage=1),
    _cond("casecohort", "casecontrol", (), True,
          "Stage two is outcome sampling within stage one.", stage=2),
    _cond("casecohort", "casecontrol", (), False,
          "Dropping the earlier-stage conditioning breaks stage two.",
          stage=2, earlier=False),
    _cond("casecohort", "cohort", (), False,
          "Stage two cannot satisfy the cohort route at all.", stage=2),
    _cond("casecohort", "exchangeability", (), True,
          "Treatment is exogenous in this design."),
    Expectation("casecohort", "multi_stage", expect_holds=True,
                note="Each stage passes one of its two routes, so the "
                "whole design is accounted for."),
)


def expectations_for(scenario_id: str) -> tuple[Expectation, ...]:
    get(scenario_id)
    return tuple(e for e in EXPECTATIONS if e.scenario == scenario_id)


def evaluate(exp: Expectation) -> ExpectationResult:
    """Rerun one table entry against the engine."""
    doc = document(exp.scenario, exp.variant)
    graph = doc.graph
    roles = StudyRoles.from_graph(graph)

    if exp.kind == "exchangeability":
        verdict = criteria.exchangeability(graph, roles, exp.adjust)
        actual = {"holds": verdict.holds}
    elif exp.kind == "cohort":
        verdict = criteria.cohort_condition(
            graph, roles, exp.adjust, stage=exp.stage,
            include_earlier_stages=exp.include_earlier_stages,
        )
        actual = {"holds": verdict.holds}
    elif exp.kind == "casecontrol":
        verdict = criteria.case_control_condition(
            graph, roles, exp.adjust, stage=exp.stage,
            include_earlier_stages=exp.include_earlier_stages,
        )
        actual = {"holds": verdict.holds}
    elif exp.kind == "multi_stage":
        report = criteria.multi_stage_check(graph, roles)
        actual = {"holds": report.holds}
    elif exp.kind == "adjustment_sets":
        found = criteria.find_adjustment_sets(graph, roles, require=exp.require)
        actual = {"sets": tuple(tuple(sorted(s)) for s in found)}
    elif exp.kind == "decision":
        report = criteria.adjustment_decision(
            graph, roles, exp.covariate, exp.scale,
            Hypothesis(null=exp.null, no_em=exp.no_em),
        )
        actual = {"needs": report.needs_adjustment,
                  "target": report.identified_target}
    else:
        raise ValueError(f"unknown expectation kind {exp.kind!r}")

    return ExpectationResult(exp, actual, actual == exp.expected())


def evaluate_all() -> tuple[ExpectationResult, ...]:
    return tuple(evaluate(e) for e in EXPECTATIONS)
