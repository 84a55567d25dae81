"""Study-design conditions and the adjustment decision procedure.

Three conditions are checked on split graphs:

- exchangeability: X independent of D^x given C (no unmeasured confounding);
- cohort condition: S^x independent of D^x given X and C, for designs where
  selection happens before or with treatment;
- case-control condition: S^d independent of X given D and C, for designs
  where selection depends on the outcome.

Multi-stage designs check one condition per stage, conditioning on the
earlier stages' selection nodes.

The adjustment decision walks the equality chain

    measure in eligible population (marginal over C)
      = C-conditional measure in eligible population
      = C-conditional measure in study population
      = crude measure in study population

deciding each link graphically: the outer links through collapsibility
conditions (which need a no-effect-modification premise away from the null),
the middle link through absence of selection bias given C. Matched designs
carry a designed independence between the matched covariate and the variable
it is balanced across; conditioning on more can destroy it exactly when the
extra conditioning opens or closes a trail between the pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

from . import measures
from .errors import Error
from .graph import (
    COVARIATE,
    Dag,
    PathCertificate,
    SELECTION,
    UnknownNodeError,
    backdoor_paths,
    d_separated,
    open_trail_set,
)
from .swig import Intervention, Swig, build_swig, swig_d_separated

EXCHANGEABILITY = "exchangeability"
COHORT = "cohort"
CASE_CONTROL = "casecontrol"
CONDITIONS = (EXCHANGEABILITY, COHORT, CASE_CONTROL)

# Requirement atoms for adjustment-set search; "selection" asks for at least
# one of the cohort and case-control conditions at every stage.
SELECTION_ATOM = "selection"
REQUIREMENT_ATOMS = CONDITIONS + (SELECTION_ATOM,)

MARGINAL_ELIGIBLE = "marginal_eligible"
CONDITIONAL_ELIGIBLE = "conditional_eligible"
NO_TARGET = "none"


class CriteriaError(Error):
    code = "criteria_error"


class InvalidAdjustSetError(CriteriaError):
    code = "invalid_adjust_set"

    def __init__(self, name: str, why: str):
        self.name = name
        self.why = why
        super().__init__(f"cannot adjust for {name!r}: {why}")


class UnmeasuredCovariateError(CriteriaError):
    code = "unmeasured_covariate"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"covariate {name!r} is not measured")


@dataclass(frozen=True)
class StudyRoles:
    """Treatment, outcome, and stage-ordered selection nodes.

    candidates optionally restricts the adjustment-set search; when None the
    eligible measured covariates are used.
    """

    treatment: str
    outcome: str
    selection: tuple[str, ...]
    candidates: Optional[tuple[str, ...]] = None

    @classmethod
    def from_graph(cls, graph: Dag) -> "StudyRoles":
        x, d = graph.treatment(), graph.outcome()
        if x is None:
            raise CriteriaError("graph declares no treatment node")
        if d is None:
            raise CriteriaError("graph declares no outcome node")
        s = graph.selection_nodes()
        if not s:
            raise CriteriaError("graph declares no selection node")
        return cls(x, d, s)

    def check(self, graph: Dag) -> None:
        for name in (self.treatment, self.outcome, *self.selection):
            graph.node(name)
        if self.treatment in graph.descendants(self.outcome):
            raise CriteriaError("treatment cannot descend from the outcome")


@dataclass(frozen=True)
class ConditionVerdict:
    condition: str
    stage: int
    holds: bool
    adjust: tuple[str, ...]
    conditioning: tuple[str, ...]
    certificate: Optional[PathCertificate] = None


@dataclass(frozen=True)
class StageReport:
    stage: int
    cohort: ConditionVerdict
    casecontrol: ConditionVerdict

    @property
    def satisfied(self) -> bool:
        return self.cohort.holds or self.casecontrol.holds


@dataclass(frozen=True)
class MultiStageReport:
    stages: tuple[StageReport, ...]

    @property
    def holds(self) -> bool:
        return all(s.satisfied for s in self.stages)


@dataclass(frozen=True)
class Hypothesis:
    """Null or off-null, with an optional scale free of effect modification."""

    null: bool = False
    no_em: Optional[str] = None  # rd | rr | or

    def no_em_on(self, scale: str) -> bool:
        # Under the null every scale is free of effect modification.
        return self.null or self.no_em == scale


@dataclass(frozen=True)
class Disjunct:
    description: str
    a: str
    b: str
    given: tuple[str, ...]
    holds: bool


@dataclass(frozen=True)
class CollapsibilityReport:
    scale: str
    holds: bool
    satisfied_by: Optional[str]
    disjuncts: tuple[Disjunct, ...]


@dataclass(frozen=True)
class DecisionReport:
    covariate: str
    measure: str
    hypothesis: Hypothesis
    equalities: tuple[bool, bool, bool]
    needs_adjustment: bool
    identified_target: str
    confounded_marginal: bool
    selection_ignorable: bool


# -- adjustment-set validation ------------------------------------------------


def _validate_adjust(
    graph: Dag,
    roles: StudyRoles,
    adjust: Iterable[str],
    *,
    intervened: str,
    forbid_outcome_descendants: bool = False,
    allow_selection: bool = False,
) -> tuple[str, ...]:
    out = []
    special = {roles.treatment, roles.outcome}
    for name in sorted(set(adjust)):
        node = graph.node(name)
        if name in special:
            raise InvalidAdjustSetError(name, "it is the treatment or outcome")
        if node.role == SELECTION and not allow_selection:
            raise InvalidAdjustSetError(name, "it is a selection node")
        if node.latent:
            raise InvalidAdjustSetError(name, "it is unmeasured")
        if name in graph.descendants(intervened):
            raise InvalidAdjustSetError(
                name,
                f"it is a descendant of {intervened}, so intervening replaces it "
                "with a counterfactual version",
            )
        if forbid_outcome_descendants and name in graph.descendants(roles.outcome):
            raise InvalidAdjustSetError(
                name, f"it is a descendant of the outcome {roles.outcome}"
            )
        out.append(name)
    return tuple(out)


# -- the three conditions -----------------------------------------------------


def exchangeability(
    graph: Dag, roles: StudyRoles, adjust: Iterable[str] = ()
) -> ConditionVerdict:
    """X independent of D^x given the adjustment set."""
    roles.check(graph)
    adj = _validate_adjust(
        graph,
        roles,
        adjust,
        intervened=roles.treatment,
        forbid_outcome_descendants=True,
        allow_selection=True,
    )
    swig = build_swig(graph, Intervention.on(roles.treatment))
    holds, cert = swig_d_separated(swig, {roles.treatment}, {roles.outcome}, adj)
    return ConditionVerdict(EXCHANGEABILITY, 0, holds, adj, adj, cert)


def _stage_node(roles: StudyRoles, stage: int) -> str:
    if not 1 <= stage <= len(roles.selection):
        raise CriteriaError(f"no selection stage {stage}")
    return roles.selection[stage - 1]


def cohort_condition(
    graph: Dag,
    roles: StudyRoles,
    adjust: Iterable[str] = (),
    stage: int = 1,
    *,
    include_earlier_stages: bool = True,
) -> ConditionVerdict:
    """S^x independent of D^x given X, the earlier stages, and the set."""
    roles.check(graph)
    s = _stage_node(roles, stage)
    adj = _validate_adjust(graph, roles, adjust, intervened=roles.treatment)
    earlier = roles.selection[: stage - 1] if include_earlier_stages else ()
    conditioning = tuple(sorted({roles.treatment, *earlier, *adj}))
    swig = build_swig(graph, Intervention.on(roles.treatment))
    holds, cert = swig_d_separated(swig, {s}, {roles.outcome}, conditioning)
    return ConditionVerdict(COHORT, stage, holds, adj, conditioning, cert)


def case_control_condition(
    graph: Dag,
    roles: StudyRoles,
    adjust: Iterable[str] = (),
    stage: int = 1,
    *,
    include_earlier_stages: bool = True,
) -> ConditionVerdict:
    """S^d independent of X given D, the earlier stages, and the set."""
    roles.check(graph)
    s = _stage_node(roles, stage)
    adj = _validate_adjust(graph, roles, adjust, intervened=roles.outcome)
    earlier = roles.selection[: stage - 1] if include_earlier_stages else ()
    conditioning = tuple(sorted({roles.outcome, *earlier, *adj}))
    swig = build_swig(graph, Intervention.on(roles.outcome))
    holds, cert = swig_d_separated(swig, {s}, {roles.treatment}, conditioning)
    return ConditionVerdict(CASE_CONTROL, stage, holds, adj, conditioning, cert)


def condition_verdicts(
    graph: Dag,
    roles: StudyRoles,
    adjust: Iterable[str] = (),
    which: str = "all",
    stage: int = 1,
    include_earlier_stages: bool = True,
) -> list[ConditionVerdict]:
    """Evaluate one named condition, or all three, with one adjustment set."""
    earlier = include_earlier_stages
    funcs = {
        EXCHANGEABILITY: lambda: exchangeability(graph, roles, adjust),
        COHORT: lambda: cohort_condition(
            graph, roles, adjust, stage, include_earlier_stages=earlier
        ),
        CASE_CONTROL: lambda: case_control_condition(
            graph, roles, adjust, stage, include_earlier_stages=earlier
        ),
    }
    if which == "all":
        out = [funcs[EXCHANGEABILITY]()]
        for k in range(1, len(roles.selection) + 1):
            out.append(
                cohort_condition(graph, roles, adjust, k, include_earlier_stages=earlier)
            )
            out.append(
                case_control_condition(
                    graph, roles, adjust, k, include_earlier_stages=earlier
                )
            )
        return out
    if which not in funcs:
        raise CriteriaError(f"unknown condition {which!r}")
    return [funcs[which]()]


def multi_stage_check(
    graph: Dag,
    roles: StudyRoles,
    adjust_sets: Optional[Mapping[int, Iterable[str]]] = None,
) -> MultiStageReport:
    """Per-stage cohort and case-control verdicts, earlier stages conditioned.

    The design is free of selection bias when every stage satisfies at least
    one condition.
    """
    roles.check(graph)
    adjust_sets = dict(adjust_sets or {})
    reports = []
    for stage in range(1, len(roles.selection) + 1):
        adj = tuple(adjust_sets.get(stage, ()))
        reports.append(
            StageReport(
                stage,
                cohort_condition(graph, roles, adj, stage),
                case_control_condition(graph, roles, adj, stage),
            )
        )
    return MultiStageReport(tuple(reports))


# -- adjustment-set search ----------------------------------------------------


def _default_candidates(graph: Dag, roles: StudyRoles, atoms: frozenset[str]) -> list[str]:
    special = {roles.treatment, roles.outcome, *roles.selection}
    banned = set(graph.descendants(roles.treatment))
    if atoms & {EXCHANGEABILITY, CASE_CONTROL, SELECTION_ATOM}:
        banned |= graph.descendants(roles.outcome)
    out = []
    for node in graph.nodes:
        if node.name in special or node.latent:
            continue
        if node.role == SELECTION:
            continue
        if node.name in banned:
            continue
        out.append(node.name)
    return sorted(out)


def _atom_holds(graph: Dag, roles: StudyRoles, atom: str, adjust: tuple[str, ...]) -> bool:
    try:
        if atom == EXCHANGEABILITY:
            return exchangeability(graph, roles, adjust).holds
        stages = range(1, len(roles.selection) + 1)
        if atom == COHORT:
            return all(
                cohort_condition(graph, roles, adjust, k).holds for k in stages
            )
        if atom == CASE_CONTROL:
            return all(
                case_control_condition(graph, roles, adjust, k).holds for k in stages
            )
        # at least one of the two selection conditions, at every stage
        return all(
            cohort_condition(graph, roles, adjust, k).holds
            or case_control_condition(graph, roles, adjust, k).holds
            for k in stages
        )
    except InvalidAdjustSetError:
        return False


def find_adjustment_sets(
    graph: Dag,
    roles: StudyRoles,
    require: Iterable[str] = (EXCHANGEABILITY, SELECTION_ATOM),
) -> list[frozenset[str]]:
    """All inclusion-minimal measured sets satisfying the required atoms.

    Sets are enumerated by increasing size, then lexicographically, so the
    result order is deterministic.
    """
    roles.check(graph)
    atoms = frozenset(require)
    unknown = atoms - set(REQUIREMENT_ATOMS)
    if unknown:
        raise CriteriaError("unknown requirement: " + ", ".join(sorted(unknown)))
    if not atoms:
        raise CriteriaError("at least one requirement is needed")

    if roles.candidates is not None:
        candidates = sorted(roles.candidates)
    else:
        candidates = _default_candidates(graph, roles, atoms)

    found: list[frozenset[str]] = []
    for size in range(len(candidates) + 1):
        for combo in combinations(candidates, size):
            cand = frozenset(combo)
            if any(prev <= cand for prev in found):
                continue
            if all(_atom_holds(graph, roles, atom, tuple(combo)) for atom in atoms):
                found.append(cand)
    return found


# -- collapsibility and the decision chain -------------------------------------


def _design_independence(
    graph: Dag, a: str, b: str, given: frozenset[str]
) -> Optional[bool]:
    """Designed independence of a matched pair, None when no matching applies.

    Matching guarantees the pair independent given the matched selection
    node alone. Extra conditioning preserves that exactly when it leaves the
    set of open trails between the pair unchanged; opening a new trail or
    blocking a previously open one breaks the designed cancellation.
    """
    for m in graph.matchings:
        if m.selection not in given:
            continue
        if {a, b} != {m.match_on, m.across}:
            continue
        baseline = open_trail_set(graph, a, b, {m.selection})
        queried = open_trail_set(graph, a, b, given)
        return baseline == queried
    return None


def _population_ci(graph: Dag, a: str, b: str, given: Iterable[str]) -> bool:
    """Conditional independence in the population the conditioning selects.

    Plain d-separation, strengthened by designed matching independences when
    the conditioning includes a matched selection node.
    """
    z = frozenset(given)
    sep, _ = d_separated(graph, {a}, {b}, z, certificate=False)
    if sep:
        return True
    designed = _design_independence(graph, a, b, z)
    return bool(designed)


def collapsibility_conditions(
    graph: Dag,
    roles: StudyRoles,
    covariate: str,
    scale: str,
    extra: Iterable[str] = (),
) -> CollapsibilityReport:
    """Conditions under which the C-marginal measure equals the C-conditional.

    For the risk difference and risk ratio: C independent of X, or C
    independent of D given X. For the odds ratio the first disjunct also
    conditions on D. Both presume no effect modification on the scale, which
    is the caller's premise to supply. extra adds nodes (the selection node,
    for study-population checks) to every disjunct's conditioning set.
    """
    measures.check_scale(scale)
    roles.check(graph)
    node = graph.node(covariate)
    if node.latent:
        raise UnmeasuredCovariateError(covariate)
    x, d = roles.treatment, roles.outcome
    extra_t = tuple(sorted(set(extra)))

    if scale in (measures.RD, measures.RR):
        first = Disjunct(
            "covariate independent of treatment",
            covariate,
            x,
            extra_t,
            _population_ci(graph, covariate, x, extra_t),
        )
    else:
        given = tuple(sorted({d, *extra_t}))
        first = Disjunct(
            "covariate independent of treatment given outcome",
            covariate,
            x,
            given,
            _population_ci(graph, covariate, x, given),
        )
    given2 = tuple(sorted({x, *extra_t}))
    second = Disjunct(
        "covariate independent of outcome given treatment",
        covariate,
        d,
        given2,
        _population_ci(graph, covariate, d, given2),
    )
    disjuncts = (first, second)
    satisfied = next((dj.description for dj in disjuncts if dj.holds), None)
    return CollapsibilityReport(scale, satisfied is not None, satisfied, disjuncts)


def _is_confounder(graph: Dag, roles: StudyRoles, covariate: str) -> bool:
    """True when an open backdoor trail from X to D passes through covariate."""
    for cert in backdoor_paths(graph, roles.treatment, roles.outcome):
        if cert.open and covariate in cert.nodes[1:-1]:
            return True
    return False


def _selection_ignorable(graph: Dag, roles: StudyRoles, scale: str) -> bool:
    """No selection bias at all, with no covariate needed.

    When the cohort condition holds unconditionally the study risks equal the
    eligible risks, so every measure carries over; the case-control condition
    pins only the exposure prevalences, which suffices for the odds ratio.
    """
    if all(
        cohort_condition(graph, roles, (), k).holds
        for k in range(1, len(roles.selection) + 1)
    ):
        return True
    if scale == measures.OR:
        return all(
            case_control_condition(graph, roles, (), k).holds
            for k in range(1, len(roles.selection) + 1)
        )
    return False


def adjustment_decision(
    graph: Dag,
    roles: StudyRoles,
    covariate: str,
    scale: str,
    hypothesis: Hypothesis,
) -> DecisionReport:
    """Walk the equality chain and report whether adjustment is needed.

    Under the null hypothesis the treatment-to-outcome edge is removed before
    any test. When the covariate sits on an open backdoor trail the marginal
    eligible measure is confounded, so only the conditional target is ever
    declared and only the second and third links are decisive.
    """
    measures.check_scale(scale)
    roles.check(graph)
    if len(roles.selection) != 1:
        raise CriteriaError("the adjustment decision covers single-stage designs")
    node = graph.node(covariate)
    if node.latent:
        raise UnmeasuredCovariateError(covariate)
    if covariate in (roles.treatment, roles.outcome, *roles.selection):
        raise CriteriaError("covariate must be distinct from the study roles")

    g = graph
    if hypothesis.null and g.has_edge(roles.treatment, roles.outcome):
        g = g.without_edge(roles.treatment, roles.outcome)

    s = roles.selection[0]
    no_em = hypothesis.no_em_on(scale)
    confounded = _is_confounder(g, roles, covariate)

    eq1 = no_em and collapsibility_conditions(g, roles, covariate, scale).holds
    eq2 = (
        cohort_condition(g, roles, (covariate,)).holds
        or case_control_condition(g, roles, (covariate,)).holds
    )
    eq3 = no_em and collapsibility_conditions(g, roles, covariate, scale, extra=(s,)).holds

    ignorable = not confounded and _selection_ignorable(g, roles, scale)
    if ignorable:
        return DecisionReport(
            covariate,
            scale,
            hypothesis,
            (eq1, eq2, eq3),
            needs_adjustment=False,
            identified_target=MARGINAL_ELIGIBLE,
            confounded_marginal=confounded,
            selection_ignorable=True,
        )

    if not eq2:
        return DecisionReport(
            covariate,
            scale,
            hypothesis,
            (eq1, eq2, eq3),
            needs_adjustment=True,
            identified_target=NO_TARGET,
            confounded_marginal=confounded,
            selection_ignorable=False,
        )

    if confounded:
        # The marginal eligible measure mixes the backdoor association, so
        # the conditional measure is the only meaningful target.
        target = CONDITIONAL_ELIGIBLE
    else:
        target = MARGINAL_ELIGIBLE if eq1 else CONDITIONAL_ELIGIBLE
    needs = not eq3

    return DecisionReport(
        covariate,
        scale,
        hypothesis,
        (eq1, eq2, eq3),
        needs_adjustment=needs,
        identified_target=target,
        confounded_marginal=confounded,
        selection_ignorable=False,
    )
