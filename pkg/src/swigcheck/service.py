"""HTTP face of the engine.

Every response, success or failure, is wrapped in the same envelope the CLI
emits with --json: {"schema_version": "1", "ok": bool, "result" | "error"}.
Request bodies are capped at 256 KiB.
"""

from __future__ import annotations

import json
from typing import Any, Callable, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import criteria, dsl, inference, render, scenarios
from .criteria import Hypothesis, StudyRoles
from .errors import Error
from .graph import COVARIATE, Dag, Matching, Node, ROLES
from .measures import OR, RR, SCALES
from .scenarios import UnknownScenarioError

MAX_BODY_BYTES = 256 * 1024
MAX_SWEEP_POINTS = 1001


class RequestProblem(Error):
    code = "bad_request"


def _status_for(exc: Exception) -> int:
    if isinstance(exc, UnknownScenarioError):
        return 404
    if isinstance(exc, (dsl.ParseError, RequestProblem)):
        return 400
    if isinstance(exc, Error):
        return 422
    raise exc


def _failure(exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=_status_for(exc), content=render.exception_envelope(exc)
    )


def _success(result: Any) -> JSONResponse:
    return JSONResponse(content=render.envelope(result))


async def _read_json(request: Request) -> dict:
    body = await request.body()
    if len(body) > MAX_BODY_BYTES:
        raise _TooLarge(len(body))
    try:
        data = json.loads(body or b"{}")
    except json.JSONDecodeError as exc:
        raise RequestProblem(f"request body is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise RequestProblem("request body must be a JSON object")
    return data


class _TooLarge(Error):
    code = "payload_too_large"

    def __init__(self, size: int):
        super().__init__(
            f"request body of {size} bytes exceeds the {MAX_BODY_BYTES} byte limit"
        )


def _text_field(data: dict) -> dsl.Document:
    text = data.get("text")
    if not isinstance(text, str) or not text.strip():
        raise RequestProblem("field 'text' (the .dag source) is required")
    return dsl.parse(text)


def _dag_from_json(data: Any) -> Dag:
    """Graph back from the wire shape dag_json produces."""
    if not isinstance(data, dict):
        raise RequestProblem("field 'graph' must be an object")
    raw_nodes = data.get("nodes")
    if not isinstance(raw_nodes, list):
        raise RequestProblem("graph.nodes must be a list")
    nodes = []
    for i, entry in enumerate(raw_nodes):
        if isinstance(entry, str):
            nodes.append(Node(entry))
            continue
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise RequestProblem(f"graph.nodes[{i}] needs a string 'name'")
        role = entry.get("role", COVARIATE)
        if role not in ROLES:
            raise RequestProblem(
                f"graph.nodes[{i}].role must be one of: " + ", ".join(ROLES)
            )
        stage = entry.get("stage")
        if stage is not None and (not isinstance(stage, int) or stage < 1):
            raise RequestProblem(f"graph.nodes[{i}].stage must be a positive integer")
        nodes.append(
            Node(entry["name"], role, stage, bool(entry.get("latent", False)))
        )
    raw_edges = data.get("edges", [])
    if not isinstance(raw_edges, list):
        raise RequestProblem("graph.edges must be a list")
    edges, dashed = [], []
    for i, entry in enumerate(raw_edges):
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get("tail"), str)
            or not isinstance(entry.get("head"), str)
        ):
            raise RequestProblem(f"graph.edges[{i}] needs string 'tail' and 'head'")
        pair = (entry["tail"], entry["head"])
        edges.append(pair)
        if entry.get("dashed"):
            dashed.append(pair)
    raw_matchings = data.get("matchings", [])
    if not isinstance(raw_matchings, list):
        raise RequestProblem("graph.matchings must be a list")
    matchings = []
    for i, entry in enumerate(raw_matchings):
        if not isinstance(entry, dict) or not all(
            isinstance(entry.get(k), str) for k in ("selection", "match_on", "across")
        ):
            raise RequestProblem(
                f"graph.matchings[{i}] needs 'selection', 'match_on' and 'across'"
            )
        matchings.append(
            Matching(entry["selection"], entry["match_on"], entry["across"])
        )
    return Dag(nodes, edges, dashed=dashed, matchings=matchings)


def _graph_field(data: dict) -> Dag:
    """The working graph of a request: inline DSL text or graph JSON."""
    if "graph" in data:
        return _dag_from_json(data["graph"])
    return _text_field(data).graph


def _roles_field(data: dict, graph: Dag) -> StudyRoles:
    spec = data.get("roles")
    if spec is None:
        return StudyRoles.from_graph(graph)
    if not isinstance(spec, dict):
        raise RequestProblem("field 'roles' must be an object")
    treatment = spec.get("treatment") or graph.treatment()
    outcome = spec.get("outcome") or graph.outcome()
    selection = spec.get("selection")
    if selection is None:
        selection = graph.selection_nodes()
    elif not isinstance(selection, list) or not all(
        isinstance(s, str) for s in selection
    ):
        raise RequestProblem("roles.selection must be a list of node names")
    if not isinstance(treatment, str) or not isinstance(outcome, str):
        raise RequestProblem("roles.treatment and roles.outcome must be node names")
    if not selection:
        raise RequestProblem("the graph declares no selection node and roles name none")
    roles = StudyRoles(treatment, outcome, tuple(selection))
    roles.check(graph)
    return roles


def _str_field(data: dict, name: str, choices=None, required=True) -> Optional[str]:
    value = data.get(name)
    if value is None:
        if required:
            raise RequestProblem(f"field {name!r} is required")
        return None
    if not isinstance(value, str):
        raise RequestProblem(f"field {name!r} must be a string")
    if choices is not None and value not in choices:
        raise RequestProblem(
            f"field {name!r} must be one of: " + ", ".join(choices)
        )
    return value


def create_app(allow_origin: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="swigcheck", openapi_url=None, docs_url=None, redoc_url=None)

    if allow_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[allow_origin],
            allow_methods=["GET", "POST"],
            allow_headers=["content-type"],
        )

    async def handle(request: Request, fn: Callable[[dict], Any]) -> JSONResponse:
        try:
            data = await _read_json(request)
            return _success(fn(data))
        except _TooLarge as exc:
            return JSONResponse(status_code=413, content=render.exception_envelope(exc))
        except Error as exc:
            return _failure(exc)

    @app.post("/v1/parse")
    async def parse_endpoint(request: Request) -> JSONResponse:
        def run(data: dict):
            doc = _text_field(data)
            result = {
                "name": doc.name,
                "graph": render.dag_json(doc.graph),
                "warnings": [],
                "text": dsl.serialize(doc),
                "dot": dsl.emit_dot(doc.graph, doc.name),
            }
            if doc.model is not None:
                result["model"] = render.model_json(doc.model)
            return result

        return await handle(request, run)

    @app.post("/v1/check")
    async def check_endpoint(request: Request) -> JSONResponse:
        def run(data: dict):
            graph = _graph_field(data)
            if data.get("null"):
                graph = graph.under_null()
            roles = _roles_field(data, graph)
            condition = _str_field(
                data,
                "condition",
                choices=("all",) + criteria.CONDITIONS,
                required=False,
            ) or "all"
            adjust = data.get("adjust", [])
            if not isinstance(adjust, list) or not all(
                isinstance(a, str) for a in adjust
            ):
                raise RequestProblem("field 'adjust' must be a list of node names")
            stage = data.get("stage", 1)
            if not isinstance(stage, int) or stage < 1:
                raise RequestProblem("field 'stage' must be a positive integer")
            earlier = data.get("include_earlier_stages", True)
            if not isinstance(earlier, bool):
                raise RequestProblem(
                    "field 'include_earlier_stages' must be a boolean"
                )
            verdicts = criteria.condition_verdicts(
                graph, roles, tuple(adjust), condition, stage, earlier
            )
            return {"verdicts": [render.verdict_json(v) for v in verdicts]}

        return await handle(request, run)

    @app.post("/v1/adjust")
    async def adjust_endpoint(request: Request) -> JSONResponse:
        def run(data: dict):
            graph = _graph_field(data)
            if data.get("null"):
                graph = graph.under_null()
            roles = _roles_field(data, graph)
            require = data.get(
                "require", [criteria.EXCHANGEABILITY, criteria.SELECTION_ATOM]
            )
            if not isinstance(require, list):
                raise RequestProblem("field 'require' must be a list")
            sets = criteria.find_adjustment_sets(graph, roles, require=require)
            return {
                "require": list(require),
                "sets": [sorted(s) for s in sets],
            }

        return await handle(request, run)

    @app.post("/v1/eval")
    async def eval_endpoint(request: Request) -> JSONResponse:
        def run(data: dict):
            doc = _text_field(data)
            if doc.model is None:
                raise RequestProblem("the document has no model block")
            x, d = doc.graph.treatment(), doc.graph.outcome()
            if x is None or d is None:
                raise RequestProblem(
                    "the graph must declare a treatment and an outcome"
                )
            population = _str_field(
                data, "population", choices=("eligible", "study"), required=False
            ) or "eligible"
            scale = _str_field(data, "measure", choices=SCALES)
            stratify = data.get("stratify", [])
            if not isinstance(stratify, list) or not all(
                isinstance(s, str) for s in stratify
            ):
                raise RequestProblem("field 'stratify' must be a list of node names")
            table = inference.joint(doc.model)
            if population == "study":
                selection = doc.graph.selection_nodes()
                if not selection:
                    raise RequestProblem("the study population needs a selection node")
                table = inference.study_population(table, selection)
            report = inference.measure(table, x, d, scale, stratify_by=stratify)
            result = render.measure_json(report)
            result["population"] = population
            return result

        return await handle(request, run)

    @app.post("/v1/decide")
    async def decide_endpoint(request: Request) -> JSONResponse:
        def run(data: dict):
            graph = _graph_field(data)
            roles = _roles_field(data, graph)
            covariate = _str_field(data, "covariate")
            scale = _str_field(data, "measure", choices=SCALES)
            no_em = _str_field(data, "no_em", choices=SCALES, required=False)
            hyp = Hypothesis(null=bool(data.get("null")), no_em=no_em)
            report = criteria.adjustment_decision(
                graph, roles, covariate, scale, hyp
            )
            return {"decision": render.decision_json(report)}

        return await handle(request, run)

    @app.post("/v1/sweep")
    async def sweep_endpoint(request: Request) -> JSONResponse:
        def run(data: dict):
            untreated = data.get("untreated")
            if (
                not isinstance(untreated, list)
                or len(untreated) != 2
                or not all(isinstance(v, (int, float)) for v in untreated)
            ):
                raise RequestProblem("field 'untreated' must be two risks [a, b]")
            scale = _str_field(data, "scale", choices=(RR, OR))
            value = data.get("value")
            if not isinstance(value, (int, float)):
                raise RequestProblem("field 'value' must be a number")
            points = data.get("grid", 101)
            if not isinstance(points, int) or points < 2:
                raise RequestProblem("field 'grid' must be an integer of at least 2")
            if points > MAX_SWEEP_POINTS:
                raise RequestProblem(
                    f"field 'grid' is capped at {MAX_SWEEP_POINTS}"
                )
            grid = [i / (points - 1) for i in range(points)]
            swept = inference.trial_sweep(
                (float(untreated[0]), float(untreated[1])),
                scale,
                float(value),
                grid,
            )
            return render.sweep_json(swept)

        return await handle(request, run)

    @app.get("/v1/scenarios")
    async def scenarios_endpoint() -> JSONResponse:
        return _success(
            {"scenarios": [render.scenario_json(s) for s in scenarios.SCENARIOS]}
        )

    @app.get("/v1/scenarios/{scenario_id}")
    async def scenario_endpoint(
        scenario_id: str, variant: Optional[str] = None
    ) -> JSONResponse:
        try:
            scenario = scenarios.get(scenario_id)
            doc = scenario.document(variant)
        except Error as exc:
            return _failure(exc)
        result = render.scenario_json(scenario, include_text=True)
        result["selected"] = render.document_json(doc)
        result["expectations"] = [
            render.expectation_json(e)
            for e in scenarios.expectations_for(scenario_id)
        ]
        return _success(result)

    return app


app = create_app()
