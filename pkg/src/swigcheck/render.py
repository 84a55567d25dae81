"""Converters from engine objects to JSON-friendly dicts and terminal text.

The dict shapes here are the wire format of both the --json CLI flag and the
HTTP service, so changes are contract changes.
"""

from __future__ import annotations

import os
import sys
from typing import Any, Iterable, Optional, Sequence

from .criteria import (
    CollapsibilityReport,
    ConditionVerdict,
    DecisionReport,
    MultiStageReport,
)
from .dsl import Document, emit_dot, serialize
from .graph import Dag, PathCertificate
from .inference import (
    LabbeCurve,
    MeasureReport,
    RrTestResult,
    SweepPoint,
    TableStats,
    TwoByTwo,
)
from .scenarios import Expectation, ExpectationResult, Scenario
from .swig import Swig

SCHEMA_VERSION = "1"


# -- envelopes ----------------------------------------------------------------


def envelope(result: Any) -> dict:
    return {"schema_version": SCHEMA_VERSION, "ok": True, "result": result}


def error_envelope(code: str, message: str, span: Optional[dict] = None) -> dict:
    error: dict[str, Any] = {"code": code, "message": message}
    if span is not None:
        error["span"] = span
    return {"schema_version": SCHEMA_VERSION, "ok": False, "error": error}


def exception_envelope(exc: Exception) -> dict:
    payload = getattr(exc, "payload", None)
    if callable(payload):
        data = payload()
        return error_envelope(
            data.get("code", "error"), data.get("message", str(exc)),
            data.get("span"),
        )
    return error_envelope("error", str(exc))


# -- JSON shapes ----------------------------------------------------------------


def dag_json(graph: Dag, name: Optional[str] = None) -> dict:
    nodes = []
    for node in graph.nodes:
        entry: dict[str, Any] = {"name": node.name, "role": node.role}
        if node.stage is not None:
            entry["stage"] = node.stage
        if node.latent:
            entry["latent"] = True
        nodes.append(entry)
    dashed = set(graph.dashed_edges)
    edges = [
        {"tail": u, "head": v, "dashed": (u, v) in dashed}
        for u, v in graph.edges
    ]
    out: dict[str, Any] = {"nodes": nodes, "edges": edges}
    if name is not None:
        out["name"] = name
    if graph.matchings:
        out["matchings"] = [
            {"selection": m.selection, "match_on": m.match_on, "across": m.across}
            for m in graph.matchings
        ]
    return out


def model_json(model) -> list[dict]:
    out = []
    for node in model.graph.nodes:
        cpt = model.cpts[node.name]
        rows = [
            {"given": list(config), "p1": cpt.rows[config]}
            for config in sorted(cpt.rows)
        ]
        out.append({"node": node.name, "parents": list(cpt.parents), "rows": rows})
    return out


def document_json(doc: Document) -> dict:
    out = {
        "name": doc.name,
        "graph": dag_json(doc.graph),
        "has_model": doc.model is not None,
        "text": serialize(doc),
        "dot": emit_dot(doc.graph, doc.name),
    }
    return out


def certificate_json(cert: PathCertificate) -> dict:
    return {
        "nodes": list(cert.nodes),
        "trail": cert.render(),
        "open": cert.open,
        "reasons": [{"node": n, "reason": r} for n, r in cert.reasons],
    }


def verdict_json(v: ConditionVerdict) -> dict:
    out: dict[str, Any] = {
        "condition": v.condition,
        "stage": v.stage,
        "holds": v.holds,
        "adjust": list(v.adjust),
        "conditioning": list(v.conditioning),
    }
    if v.certificate is not None:
        out["certificate"] = certificate_json(v.certificate)
    return out


def multi_stage_json(report: MultiStageReport) -> dict:
    return {
        "holds": report.holds,
        "stages": [
            {
                "stage": s.stage,
                "satisfied": s.satisfied,
                "cohort": verdict_json(s.cohort),
                "casecontrol": verdict_json(s.casecontrol),
            }
            for s in report.stages
        ],
    }


def collapsibility_json(report: CollapsibilityReport) -> dict:
    return {
        "scale": report.scale,
        "holds": report.holds,
        "satisfied_by": report.satisfied_by,
        "disjuncts": [
            {
                "description": d.description,
                "a": d.a,
                "b": d.b,
                "given": list(d.given),
                "holds": d.holds,
            }
            for d in report.disjuncts
        ],
    }


def decision_json(report: DecisionReport) -> dict:
    return {
        "covariate": report.covariate,
        "measure": report.measure,
        "hypothesis": {
            "null": report.hypothesis.null,
            "no_em": report.hypothesis.no_em,
        },
        "equalities": list(report.equalities),
        "needs_adjustment": report.needs_adjustment,
        "identified_target": report.identified_target,
        "confounded_marginal": report.confounded_marginal,
        "selection_ignorable": report.selection_ignorable,
    }


def swig_json(swig: Swig) -> dict:
    return {
        "intervention": [
            {"target": t, "label": swig.intervention.label_of(t)}
            for t in swig.intervention.targets
        ],
        "random_nodes": [
            {"base": n.base, "display": n.display, "suffix": list(n.suffix)}
            for n in swig.random_nodes
        ],
        "fixed_nodes": [
            {"base": n.base, "display": n.display} for n in swig.fixed_nodes
        ],
        "edges": [
            {"tail": tail.display, "head": head.display}
            for tail, head in swig.edges
        ],
        "dot": emit_dot(swig, "swig"),
    }


def measure_json(report: MeasureReport) -> dict:
    out: dict[str, Any] = {
        "measure": report.scale,
        "treatment": report.treatment,
        "outcome": report.outcome,
        "marginal": report.marginal,
        "risks": {"untreated": report.risks[0], "treated": report.risks[1]},
    }
    if report.strata:
        out["strata"] = [
            {"stratum": {k: v for k, v in key}, "value": value}
            for key, value in report.strata
        ]
    if report.standardized is not None:
        out["standardized"] = report.standardized
    return out


def sweep_json(points: Sequence[SweepPoint]) -> dict:
    return {
        "points": [
            {
                "p": pt.p,
                "or": pt.or_value,
                "rr": pt.rr_value,
                "or_null": pt.or_null,
                "rr_null": pt.rr_null,
            }
            for pt in points
        ]
    }


def labbe_json(curves: Sequence[LabbeCurve]) -> dict:
    return {
        "curves": [
            {
                "label": c.label,
                "scale": c.scale,
                "value": c.value,
                "points": [[p0, p1] for p0, p1 in c.points],
            }
            for c in curves
        ]
    }


def stats_json(
    table: TwoByTwo, stats: TableStats, rr_test: Optional[RrTestResult] = None
) -> dict:
    out: dict[str, Any] = {
        "table": {"a": table.a, "b": table.b, "c": table.c, "d": table.d},
        "rd": stats.rd,
        "rr": stats.rr,
        "or": stats.or_value,
        "chi_square": stats.chi_square,
        "p_value": stats.p_value,
    }
    if rr_test is not None:
        out["rr_test"] = {
            "rr": rr_test.rr,
            "rr0": rr_test.rr0,
            "z": rr_test.z,
            "p_value": rr_test.p_value,
        }
    return out


def expectation_json(exp: Expectation) -> dict:
    out: dict[str, Any] = {
        "scenario": exp.scenario,
        "kind": exp.kind,
        "expected": exp.expected(),
        "note": exp.note,
    }
    if exp.variant:
        out["variant"] = exp.variant
    if exp.kind in ("cohort", "casecontrol"):
        out["stage"] = exp.stage
        out["include_earlier_stages"] = exp.include_earlier_stages
    if exp.kind in ("exchangeability", "cohort", "casecontrol"):
        out["adjust"] = list(exp.adjust)
    if exp.kind == "adjustment_sets":
        out["require"] = list(exp.require)
    if exp.kind == "decision":
        out["covariate"] = exp.covariate
        out["scale"] = exp.scale
        out["hypothesis"] = {"null": exp.null, "no_em": exp.no_em}
    return out


def expectation_result_json(res: ExpectationResult) -> dict:
    out = expectation_json(res.expectation)
    out["actual"] = res.actual
    out["ok"] = res.ok
    return out


def scenario_json(scenario: Scenario, include_text: bool = False) -> dict:
    out: dict[str, Any] = {
        "id": scenario.id,
        "title": scenario.title,
        "summary": scenario.summary,
        "variants": sorted(scenario.variants),
    }
    if include_text:
        out["document"] = document_json(scenario.doc)
        out["variant_documents"] = {
            name: document_json(doc)
            for name, doc in sorted(scenario.variants.items())
        }
    return out


# -- terminal text ----------------------------------------------------------------

_GREEN = "32"
_RED = "31"
_DIM = "2"
_BOLD = "1"


def color_enabled(stream=None) -> bool:
    mode = os.environ.get("SWIGCHECK_COLOR", "auto").lower()
    if mode == "always":
        return True
    if mode == "never":
        return False
    stream = stream if stream is not None else sys.stdout
    return bool(getattr(stream, "isatty", lambda: False)())


def paint(text: str, code: str, enabled: bool) -> str:
    if not enabled:
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _flag(holds: bool, color: bool) -> str:
    return (
        paint("holds", _GREEN, color) if holds else paint("fails", _RED, color)
    )


def verdict_lines(v: ConditionVerdict, color: bool = False) -> list[str]:
    name = v.condition if v.stage in (0, 1) else f"{v.condition} (stage {v.stage})"
    given = ", ".join(v.conditioning) if v.conditioning else "nothing"
    lines = [f"{name}: {_flag(v.holds, color)}  [given {given}]"]
    if v.certificate is not None and not v.holds:
        lines.append(
            paint(f"  open trail: {v.certificate.render()}", _DIM, color)
        )
        for node, reason in v.certificate.reasons:
            lines.append(paint(f"    {node}: {reason}", _DIM, color))
    return lines


def decision_lines(report: DecisionReport, color: bool = False) -> list[str]:
    h = report.hypothesis
    regime = "null" if h.null else (
        f"off-null, no effect modification on {h.no_em}" if h.no_em else "off-null"
    )
    eq = ", ".join(
        f"{name}={'yes' if ok else 'no'}"
        for name, ok in zip(
            ("marginal=conditional", "conditional=study", "study=crude"),
            report.equalities,
        )
    )
    target = {
        "marginal_eligible": "marginal measure in the eligible population",
        "conditional_eligible": "covariate-conditional measure in the eligible population",
        "none": "nothing identified without further assumptions",
    }[report.identified_target]
    verdict = (
        paint("adjust for " + report.covariate, _BOLD, color)
        if report.needs_adjustment
        else paint("no adjustment needed", _BOLD, color)
    )
    lines = [
        f"measure {report.measure}, {regime}: {verdict}",
        f"  chain: {eq}",
        f"  identified: {target}",
    ]
    if report.confounded_marginal:
        lines.append("  note: the covariate confounds the marginal contrast")
    if report.selection_ignorable:
        lines.append("  note: selection is ignorable in this design")
    return lines
