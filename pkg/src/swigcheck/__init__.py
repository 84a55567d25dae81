"""Graphical checks for selection bias in study designs.

The package answers three questions about a study drawn as a causal graph
with treatment, outcome, and selection nodes: is the design free of
selection bias (and under which adjustment set), what does the chosen
association measure identify in the eligible population, and does the
crude study-population measure need covariate adjustment at all. Exact
probability models, a small text format, a CLI, and an HTTP service sit
around that core.
"""

from .criteria import (
    CASE_CONTROL,
    COHORT,
    CONDITIONAL_ELIGIBLE,
    EXCHANGEABILITY,
    ConditionVerdict,
    DecisionReport,
    Hypothesis,
    MARGINAL_ELIGIBLE,
    MultiStageReport,
    NO_TARGET,
    SELECTION_ATOM,
    StudyRoles,
    adjustment_decision,
    case_control_condition,
    cohort_condition,
    collapsibility_conditions,
    condition_verdicts,
    exchangeability,
    find_adjustment_sets,
    multi_stage_check,
)
from .dsl import Document, ParseError, SemanticError, emit_dot, parse, serialize
from .errors import Error
from .graph import (
    COVARIATE,
    Dag,
    Matching,
    Node,
    OUTCOME,
    PathCertificate,
    SELECTION,
    TREATMENT,
    backdoor_paths,
    d_separated,
    trails,
)
from .inference import (
    Cpt,
    DiscreteModel,
    JointTable,
    LabbeCurve,
    MeasureReport,
    SweepPoint,
    TwoByTwo,
    ci_holds_numeric,
    joint,
    labbe_curve,
    matched_selection_cpt,
    measure,
    null_curve,
    rr_fixed_null_test,
    swig_joint,
    trial_sweep,
    two_by_two_stats,
)
from .measures import OR, RD, RR, SCALES
from .swig import Intervention, Swig, build_swig, counterfactual_name, swig_d_separated

__version__ = "0.1.0"

__all__ = [
    "CASE_CONTROL",
    "COHORT",
    "CONDITIONAL_ELIGIBLE",
    "COVARIATE",
    "ConditionVerdict",
    "Cpt",
    "Dag",
    "DecisionReport",
    "DiscreteModel",
    "Document",
    "EXCHANGEABILITY",
    "Error",
    "Hypothesis",
    "Intervention",
    "JointTable",
    "LabbeCurve",
    "MARGINAL_ELIGIBLE",
    "Matching",
    "MeasureReport",
    "MultiStageReport",
    "NO_TARGET",
    "Node",
    "OR",
    "OUTCOME",
    "ParseError",
    "PathCertificate",
    "RD",
    "RR",
    "SCALES",
    "SELECTION",
    "SELECTION_ATOM",
    "SemanticError",
    "StudyRoles",
    "SweepPoint",
    "Swig",
    "TREATMENT",
    "TwoByTwo",
    "adjustment_decision",
    "backdoor_paths",
    "build_swig",
    "case_control_condition",
    "ci_holds_numeric",
    "cohort_condition",
    "collapsibility_conditions",
    "condition_verdicts",
    "counterfactual_name",
    "d_separated",
    "emit_dot",
    "exchangeability",
    "find_adjustment_sets",
    "joint",
    "labbe_curve",
    "matched_selection_cpt",
    "measure",
    "multi_stage_check",
    "null_curve",
    "parse",
    "rr_fixed_null_test",
    "serialize",
    "swig_d_separated",
    "swig_joint",
    "trails",
    "trial_sweep",
    "two_by_two_stats",
]
