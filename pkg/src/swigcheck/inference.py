"""Exact inference for small discrete models.

Every variable is binary. A model attaches one conditional probability table
per node; the joint law is the product of the tables and lives in a dense
array indexed by the variables in graph declaration order, so results are
exact up to floating point rather than sampled.

Intervening clamps the intervened parents inside each table, which yields
the joint law of the pre-treatment variables together with the
counterfactuals, e.g. (C, X, S^x, D^x) indexed by base names.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import stats as scipy_stats

from . import measures
from .errors import Error
from .graph import Dag, UnknownNodeError
from .measures import OR, RD, RR, UndefinedMeasureError

# 2**20 joint cells is the largest table the dense representation enumerates.
MAX_JOINT_VARIABLES = 20


class InferenceError(Error):
    code = "inference_error"


class InvalidCptError(InferenceError):
    code = "invalid_cpt"


class TooManyVariablesError(InferenceError):
    code = "too_many_variables"

    def __init__(self, count: int):
        super().__init__(
            f"{count} variables; dense joints support at most {MAX_JOINT_VARIABLES}"
        )


class ZeroProbabilityEventError(InferenceError):
    code = "zero_probability_event"


class InfeasibleMatchError(InferenceError):
    code = "infeasible_match"

    def __init__(self, max_rate: float):
        self.max_rate = max_rate
        super().__init__(
            f"target selection rate is infeasible; the largest feasible rate is {max_rate:.6g}"
        )


class DegenerateTableError(InferenceError):
    code = "degenerate_table"


@dataclass(frozen=True)
class Cpt:
    """P(node = 1) for every configuration of the parents.

    rows maps a tuple of parent values, aligned with parents, to the
    probability that the node equals 1.
    """

    parents: tuple[str, ...]
    rows: Mapping[tuple[int, ...], float]

    def p1(self, assignment: Mapping[str, int]) -> float:
        key = tuple(assignment[p] for p in self.parents)
        return self.rows[key]


class DiscreteModel:
    """A DAG plus one table per node."""

    def __init__(self, graph: Dag, cpts: Mapping[str, Cpt]):
        self.graph = graph
        self.cpts = dict(cpts)
        self._validate()

    def _validate(self) -> None:
        for name in self.graph.names:
            if name not in self.cpts:
                raise InvalidCptError(f"no table for node {name!r}")
        for name, cpt in self.cpts.items():
            node_parents = set(self.graph.parents(name))
            if set(cpt.parents) != node_parents:
                raise InvalidCptError(
                    f"table for {name!r} conditions on {sorted(cpt.parents)}, "
                    f"graph parents are {sorted(node_parents)}"
                )
            expected = set(product((0, 1), repeat=len(cpt.parents)))
            if set(cpt.rows) != expected:
                raise InvalidCptError(
                    f"table for {name!r} must cover every parent configuration"
                )
            for key, p in cpt.rows.items():
                if not 0.0 <= p <= 1.0:
                    raise InvalidCptError(
                        f"P({name}=1 | {key}) = {p} is outside [0, 1]"
                    )

    def replace_cpt(self, name: str, cpt: Cpt) -> "DiscreteModel":
        new = dict(self.cpts)
        new[name] = cpt
        return DiscreteModel(self.graph, new)


@dataclass(frozen=True)
class JointTable:
    """Dense joint distribution over named binary variables."""

    variables: tuple[str, ...]
    array: np.ndarray  # shape (2,) * len(variables)

    def _axis(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise UnknownNodeError(name) from None

    def prob(self, event: Mapping[str, int]) -> float:
        idx = tuple(
            event[v] if v in event else slice(None) for v in self.variables
        )
        for name in event:
            self._axis(name)
        return float(self.array[idx].sum())

    def condition(self, event: Mapping[str, int]) -> "JointTable":
        """Distribution given the event; conditioned variables are dropped."""
        mass = self.prob(event)
        if mass <= 0.0:
            raise ZeroProbabilityEventError(
                "conditioning event has probability zero: "
                + ", ".join(f"{k}={v}" for k, v in sorted(event.items()))
            )
        idx = tuple(
            event[v] if v in event else slice(None) for v in self.variables
        )
        kept = tuple(v for v in self.variables if v not in event)
        return JointTable(kept, np.asarray(self.array[idx]) / mass)

    def marginal(self, keep: Iterable[str]) -> "JointTable":
        keep_set = set(keep)
        for name in keep_set:
            self._axis(name)
        drop = tuple(
            i for i, v in enumerate(self.variables) if v not in keep_set
        )
        kept = tuple(v for v in self.variables if v in keep_set)
        return JointTable(kept, self.array.sum(axis=drop) if drop else self.array)

    def distribution(self) -> dict[tuple[int, ...], float]:
        out = {}
        for key in product((0, 1), repeat=len(self.variables)):
            out[key] = float(self.array[key])
        return out


def joint(model: DiscreteModel) -> JointTable:
    """Product of the tables, in graph declaration order."""
    names = model.graph.names
    if len(names) > MAX_JOINT_VARIABLES:
        raise TooManyVariablesError(len(names))
    return _factorize(model, {})


def swig_joint(model: DiscreteModel, assignments: Mapping[str, int]) -> JointTable:
    """Joint law after intervening, with intervened parents clamped.

    The returned variables keep their base names; nodes downstream of an
    intervention are the counterfactual versions.
    """
    names = model.graph.names
    if len(names) > MAX_JOINT_VARIABLES:
        raise TooManyVariablesError(len(names))
    for name, value in assignments.items():
        model.graph.node(name)
        if value not in (0, 1):
            raise InferenceError(f"intervention value for {name!r} must be 0 or 1")
    return _factorize(model, dict(assignments))


def _factorize(model: DiscreteModel, clamped: Mapping[str, int]) -> JointTable:
    names = model.graph.names
    n = len(names)
    axis = {name: i for i, name in enumerate(names)}
    table = np.ones((2,) * n)
    for name in names:
        cpt = model.cpts[name]
        factor = np.zeros((2,) * n)
        # Broadcast P(name | parents) over the full index space.
        free = [p for p in cpt.parents if p not in clamped]
        for combo in product((0, 1), repeat=len(free)):
            assign = dict(clamped)
            assign.update(zip(free, combo))
            p1 = cpt.p1(assign)
            idx: list = [slice(None)] * n
            for p, v in zip(free, combo):
                idx[axis[p]] = v
            idx1 = list(idx)
            idx1[axis[name]] = 1
            idx0 = list(idx)
            idx0[axis[name]] = 0
            factor[tuple(idx1)] = p1
            factor[tuple(idx0)] = 1.0 - p1
        table = table * factor
    return JointTable(names, table)


def study_population(table: JointTable, selection: Iterable[str]) -> JointTable:
    """Condition on every selection node being 1."""
    return table.condition({s: 1 for s in selection})


# -- conditional independence, numerically ------------------------------------


def ci_deviation(
    table: JointTable,
    a: Iterable[str],
    b: Iterable[str],
    given: Iterable[str] = (),
) -> float:
    """Largest |P(a,b|z) - P(a|z)P(b|z)| over configurations with P(z) > 0."""
    sa, sb, sz = tuple(sorted(set(a))), tuple(sorted(set(b))), tuple(sorted(set(given)))
    overlap = (set(sa) & set(sb)) | (set(sa) & set(sz)) | (set(sb) & set(sz))
    if overlap:
        raise InferenceError("query sets overlap on: " + ", ".join(sorted(overlap)))
    sub = table.marginal(set(sa) | set(sb) | set(sz))
    worst = 0.0
    for zcfg in product((0, 1), repeat=len(sz)):
        z_event = dict(zip(sz, zcfg))
        if sz and sub.prob(z_event) <= 0.0:
            continue
        cond = sub.condition(z_event) if sz else sub
        pa = cond.marginal(sa)
        pb = cond.marginal(sb)
        pab = cond.marginal(set(sa) | set(sb))
        for acfg in product((0, 1), repeat=len(sa)):
            for bcfg in product((0, 1), repeat=len(sb)):
                p_joint = pab.prob({**dict(zip(sa, acfg)), **dict(zip(sb, bcfg))})
                gap = abs(p_joint - pa.prob(dict(zip(sa, acfg))) * pb.prob(dict(zip(sb, bcfg))))
                worst = max(worst, gap)
    return worst


def ci_holds_numeric(
    table: JointTable,
    a: Iterable[str],
    b: Iterable[str],
    given: Iterable[str] = (),
    tol: float = 1e-9,
) -> bool:
    return ci_deviation(table, a, b, given) <= tol


# -- association measures ------------------------------------------------------


@dataclass(frozen=True)
class MeasureReport:
    scale: str
    treatment: str
    outcome: str
    marginal: float
    risks: tuple[float, float]  # (untreated, treated), marginal
    strata: tuple[tuple[tuple[tuple[str, int], ...], float], ...] = ()
    standardized: Optional[float] = None

    def stratum_values(self) -> dict[tuple[tuple[str, int], ...], float]:
        return dict(self.strata)


def _risk(table: JointTable, d: str, event: Mapping[str, int]) -> float:
    denom = table.prob(event)
    if denom <= 0.0:
        raise UndefinedMeasureError(
            "no probability mass at " + ", ".join(f"{k}={v}" for k, v in sorted(event.items()))
        )
    return table.prob({**event, d: 1}) / denom


def measure(
    table: JointTable,
    x: str,
    d: str,
    scale: str,
    stratify_by: Iterable[str] = (),
    standard: Optional[Mapping[tuple[tuple[str, int], ...], float]] = None,
) -> MeasureReport:
    """Marginal, stratum-specific, and standardized association measures.

    Standardization weights the stratum risks by the covariate distribution
    of the table itself unless an explicit standard is supplied.
    """
    measures.check_scale(scale)
    strata_vars = tuple(sorted(set(stratify_by)))
    for name in (x, d, *strata_vars):
        table._axis(name)

    r0 = _risk(table, d, {x: 0})
    r1 = _risk(table, d, {x: 1})
    marginal = measures.from_risks(scale, r1, r0)

    strata: list[tuple[tuple[tuple[str, int], ...], float]] = []
    standardized = None
    if strata_vars:
        weights: dict[tuple[tuple[str, int], ...], float] = {}
        risks: dict[tuple[tuple[str, int], ...], tuple[float, float]] = {}
        for cfg in product((0, 1), repeat=len(strata_vars)):
            key = tuple(zip(strata_vars, cfg))
            event = dict(key)
            if table.prob(event) <= 0.0:
                continue
            sr0 = _risk(table, d, {**event, x: 0})
            sr1 = _risk(table, d, {**event, x: 1})
            risks[key] = (sr0, sr1)
            strata.append((key, measures.from_risks(scale, sr1, sr0)))
            weights[key] = table.prob(event)
        if standard is not None:
            weights = dict(standard)
        total = sum(weights.values())
        if total <= 0.0:
            raise UndefinedMeasureError("standard distribution has no mass")
        std_r0 = sum(w * risks[k][0] for k, w in weights.items() if k in risks) / total
        std_r1 = sum(w * risks[k][1] for k, w in weights.items() if k in risks) / total
        standardized = measures.from_risks(scale, std_r1, std_r0)

    return MeasureReport(
        scale, x, d, marginal, (r0, r1), tuple(strata), standardized
    )


def effect_modification(
    table: JointTable,
    x: str,
    d: str,
    covariate: str,
    scale: str,
    tol: float = 1e-9,
) -> tuple[bool, dict[int, float]]:
    """Whether the stratum measures differ across the covariate levels."""
    report = measure(table, x, d, scale, stratify_by=(covariate,))
    values = {dict(key)[covariate]: v for key, v in report.strata}
    if len(values) < 2:
        return False, values
    spread = max(values.values()) - min(values.values())
    return spread > tol, values


# -- matched designs -------------------------------------------------------------


def matched_selection_cpt(
    model: DiscreteModel,
    selection: str,
    match_on: str,
    across: str,
    target_rate: float,
) -> Cpt:
    """Selection probabilities that balance match_on across a variable.

    The returned table selects with probability target_rate * P(m) / P(m | b),
    which leaves match_on at its eligible-population distribution within the
    selected population and independent of across there. In an
    already-balanced model the table is constant at target_rate.
    """
    graph = model.graph
    parents = graph.parents(selection)
    for req in (match_on, across):
        if req not in parents:
            raise InferenceError(
                f"selection {selection!r} has no edge from {req!r}"
            )
    if not 0.0 < target_rate <= 1.0:
        raise InferenceError("target rate must be inside (0, 1]")

    base = joint(model).marginal({match_on, across})
    max_rate = math.inf
    ratio: dict[tuple[int, int], float] = {}
    for m in (0, 1):
        p_m = base.prob({match_on: m})
        for b in (0, 1):
            p_b = base.prob({across: b})
            if p_b <= 0.0:
                ratio[(m, b)] = 0.0
                continue
            p_m_given_b = base.prob({match_on: m, across: b}) / p_b
            if p_m_given_b <= 0.0:
                ratio[(m, b)] = 0.0
                continue
            ratio[(m, b)] = p_m / p_m_given_b
            max_rate = min(max_rate, p_m_given_b / p_m) if p_m > 0 else max_rate
    if target_rate > max_rate + 1e-12:
        raise InfeasibleMatchError(max_rate)

    rows = {}
    for cfg in product((0, 1), repeat=len(parents)):
        assign = dict(zip(parents, cfg))
        p = target_rate * ratio[(assign[match_on], assign[across])]
        rows[cfg] = min(1.0, max(0.0, p))
    return Cpt(parents, rows)


def apply_matching(model: DiscreteModel, target_rate: float = 0.1) -> DiscreteModel:
    """Replace every matched selection node's table per the graph's matchings."""
    out = model
    for m in model.graph.matchings:
        out = out.replace_cpt(
            m.selection,
            matched_selection_cpt(out, m.selection, m.match_on, m.across, target_rate),
        )
    return out


# -- randomized-trial sweeps -----------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    p: float
    or_value: float
    rr_value: float
    or_null: float
    rr_null: float


def _trial_table(p_c: float, r0: tuple[float, float], r1: tuple[float, float]) -> JointTable:
    graph = Dag(["C", "X", "D"], [("C", "D"), ("X", "D")])
    model = DiscreteModel(
        graph,
        {
            "C": Cpt((), {(): p_c}),
            "X": Cpt((), {(): 0.5}),
            "D": Cpt(
                ("C", "X"),
                {
                    (0, 0): r0[0],
                    (0, 1): r1[0],
                    (1, 0): r0[1],
                    (1, 1): r1[1],
                },
            ),
        },
    )
    return joint(model)


def trial_sweep(
    untreated: tuple[float, float],
    scale: str,
    value: float,
    grid: Optional[Sequence[float]] = None,
) -> list[SweepPoint]:
    """Marginal OR and RR in a randomized trial, across covariate prevalence.

    Treatment is assigned at probability one half independent of the
    covariate, as within a trial's study population. The stratum-specific
    effect sits on the given scale; null curves rerun the same sweep with the
    effect removed.
    """
    measures.check_scale(scale)
    if scale == RD:
        raise InferenceError("trial sweeps cover the or and rr scales")
    if grid is None:
        grid = [i / 100 for i in range(101)]
    r1 = tuple(measures.apply_effect(scale, r, value) for r in untreated)
    out = []
    for p in grid:
        if not 0.0 <= p <= 1.0:
            raise InferenceError(f"grid point {p} outside [0, 1]")
        table = _trial_table(p, untreated, r1)
        null_table = _trial_table(p, untreated, untreated)
        out.append(
            SweepPoint(
                p,
                measure(table, "X", "D", OR).marginal,
                measure(table, "X", "D", RR).marginal,
                measure(null_table, "X", "D", OR).marginal,
                measure(null_table, "X", "D", RR).marginal,
            )
        )
    return out


# -- constant-measure curves ------------------------------------------------------


@dataclass(frozen=True)
class LabbeCurve:
    label: str
    scale: Optional[str]  # None for the null diagonal
    value: float
    points: tuple[tuple[float, float], ...]


def labbe_curve(scale: str, value: float, resolution: int = 201) -> LabbeCurve:
    """Treated-vs-untreated risk pairs holding one measure constant."""
    measures.check_scale(scale)
    if resolution < 2:
        raise InferenceError("resolution must be at least 2")
    if scale == RD and not -1.0 <= value <= 1.0:
        raise InferenceError("risk difference must lie in [-1, 1]")
    if scale in (RR, OR) and value <= 0.0:
        raise InferenceError(f"{scale} must be positive")

    if scale == RD:
        lo, hi = max(0.0, -value), min(1.0, 1.0 - value)
    elif scale == RR:
        lo, hi = 0.0, min(1.0, 1.0 / value)
    else:
        lo, hi = 0.0, 1.0

    pts = []
    for i in range(resolution):
        p0 = lo + (hi - lo) * i / (resolution - 1)
        if scale == RD:
            p1 = p0 + value
        elif scale == RR:
            p1 = min(1.0, p0 * value)
        else:
            p1 = 1.0 if p0 >= 1.0 else measures.apply_effect(OR, p0, value)
        pts.append((p0, min(1.0, max(0.0, p1))))
    return LabbeCurve(f"{scale}={value:g}", scale, value, tuple(pts))


def null_curve(resolution: int = 201) -> LabbeCurve:
    pts = tuple(
        (i / (resolution - 1), i / (resolution - 1)) for i in range(resolution)
    )
    return LabbeCurve("null", None, 1.0, pts)


# -- two-by-two tables --------------------------------------------------------------


@dataclass(frozen=True)
class TwoByTwo:
    """Counts: a, b exposed with and without disease; c, d unexposed."""

    a: float
    b: float
    c: float
    d: float

    def scaled(self, k: float) -> "TwoByTwo":
        return TwoByTwo(self.a * k, self.b * k, self.c * k, self.d * k)


@dataclass(frozen=True)
class TableStats:
    rd: Optional[float]
    rr: Optional[float]
    or_value: Optional[float]
    chi_square: float
    p_value: float


def scale_table(table: TwoByTwo, k: float) -> TwoByTwo:
    return table.scaled(k)


def two_by_two_stats(table: TwoByTwo, continuity: bool = False) -> TableStats:
    """Association measures and the chi-square independence test.

    The test uses no continuity correction unless asked, so its statistic
    scales linearly with the counts.
    """
    a, b, c, d = table.a, table.b, table.c, table.d
    if min(a, b, c, d) < 0:
        raise DegenerateTableError("counts must be nonnegative")
    n = a + b + c + d
    row1, row0 = a + b, c + d
    col1, col0 = a + c, b + d
    if 0 in (row1, row0, col1, col0):
        raise DegenerateTableError("a margin of the table is zero")

    rd = a / row1 - c / row0
    rr = (a / row1) / (c / row0) if c > 0 else None
    orv = (a * d) / (b * c) if b > 0 and c > 0 else None

    delta = abs(a * d - b * c)
    if continuity:
        delta = max(0.0, delta - n / 2)
    chi = n * delta * delta / (row1 * row0 * col1 * col0)
    p = float(scipy_stats.chi2.sf(chi, df=1))
    return TableStats(rd, rr, orv, chi, p)


@dataclass(frozen=True)
class RrTestResult:
    rr: float
    rr0: float
    z: float
    p_value: float


def rr_fixed_null_test(table: TwoByTwo, rr0: float) -> RrTestResult:
    """Two-sided test of the risk ratio against a fixed reference value.

    Uses the log risk ratio with its usual large-sample standard error, so
    scaling all counts up strictly sharpens the test when rr differs from
    the reference.
    """
    if rr0 <= 0.0:
        raise InferenceError("reference risk ratio must be positive")
    a, b, c, d = table.a, table.b, table.c, table.d
    if min(a, b, c, d) <= 0:
        raise DegenerateTableError("all four counts must be positive")
    n1, n0 = a + b, c + d
    rr = (a / n1) / (c / n0)
    se = math.sqrt(1 / a - 1 / n1 + 1 / c - 1 / n0)
    z = (math.log(rr) - math.log(rr0)) / se
    p = 2.0 * float(scipy_stats.norm.sf(abs(z)))
    return RrTestResult(rr, rr0, z, min(1.0, p))


# -- delimited I/O -------------------------------------------------------------------


def read_two_by_two_csv(text: str) -> TwoByTwo:
    """Parse a CSV with header a,b,c,d and a single data row."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["a", "b", "c", "d"]:
        raise InferenceError("expected CSV header: a,b,c,d")
    rows = list(reader)
    if len(rows) != 1:
        raise InferenceError("expected exactly one data row")
    try:
        vals = {k: float(rows[0][k]) for k in ("a", "b", "c", "d")}
    except (TypeError, ValueError):
        raise InferenceError("counts must be numeric") from None
    return TwoByTwo(vals["a"], vals["b"], vals["c"], vals["d"])


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["p", "or", "rr", "or_null", "rr_null"])
    for pt in points:
        writer.writerow(
            [
                f"{pt.p:.6f}",
                f"{pt.or_value:.9f}",
                f"{pt.rr_value:.9f}",
                f"{pt.or_null:.9f}",
                f"{pt.rr_null:.9f}",
            ]
        )
    return out.getvalue()


def labbe_csv(curves: Sequence[LabbeCurve]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["curve", "p0", "p1"])
    for curve in curves:
        for p0, p1 in curve.points:
            writer.writerow([curve.label, f"{p0:.6f}", f"{p1:.6f}"])
    return out.getvalue()
