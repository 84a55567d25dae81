"""Command-line front end.

Exit codes: 0 success; 1 an --expect mismatch, an empty adjustment-set
search, or a failed table entry; 2 usage errors; 3 unreadable or unparsable
input; 4 numeric failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import criteria, dsl, inference, render, scenarios
from .criteria import Hypothesis, StudyRoles
from .errors import Error
from .graph import Dag
from .inference import InferenceError, TwoByTwo
from .measures import OR, RR, SCALES, UndefinedMeasureError
from .swig import Intervention, build_swig

EXIT_OK = 0
EXIT_UNMET = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4


def _load_document(path: str) -> dsl.Document:
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return dsl.parse(text)


def _graph_for(args, doc: dsl.Document) -> Dag:
    graph = doc.graph
    if getattr(args, "null", False):
        graph = graph.under_null()
    return graph


def _emit(args, result: dict, lines: list[str]) -> None:
    if args.json:
        json.dump(render.envelope(result), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        for line in lines:
            print(line)


def _split_names(raw: Optional[str]) -> tuple[str, ...]:
    if not raw:
        return ()
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _roles_for(args, graph: Dag) -> StudyRoles:
    """Roles from the file, with any command-line overrides applied."""
    treatment = getattr(args, "treatment", None) or graph.treatment()
    outcome = getattr(args, "outcome", None) or graph.outcome()
    selection = tuple(getattr(args, "selection", None) or graph.selection_nodes())
    if treatment is None:
        raise Error("no treatment node; declare one or pass --treatment")
    if outcome is None:
        raise Error("no outcome node; declare one or pass --outcome")
    if not selection:
        raise Error("no selection node; declare one or pass --selection")
    roles = StudyRoles(treatment, outcome, selection)
    roles.check(graph)
    return roles


# -- subcommand handlers ---------------------------------------------------------


def _cmd_check(args) -> int:
    doc = _load_document(args.file)
    graph = _graph_for(args, doc)
    roles = _roles_for(args, graph)
    color = render.color_enabled()

    verdicts = criteria.condition_verdicts(
        graph, roles, _split_names(args.adjust), args.condition, args.stage
    )
    lines: list[str] = []
    for v in verdicts:
        lines.extend(render.verdict_lines(v, color))
    result = {"verdicts": [render.verdict_json(v) for v in verdicts]}
    _emit(args, result, lines)

    if args.expect is not None:
        want = args.expect == "holds"
        if args.condition == "all":
            got = all(v.holds for v in verdicts)
        else:
            got = verdicts[0].holds
        if got != want:
            if not args.json:
                print(f"expected {args.expect}, got the opposite", file=sys.stderr)
            return EXIT_UNMET
    return EXIT_OK


def _cmd_adjust(args) -> int:
    doc = _load_document(args.file)
    graph = _graph_for(args, doc)
    roles = StudyRoles.from_graph(graph)
    require = _split_names(args.require) or (
        criteria.EXCHANGEABILITY,
        criteria.SELECTION_ATOM,
    )
    sets = criteria.find_adjustment_sets(graph, roles, require=require)
    listed = [sorted(s) for s in sets]
    lines = (
        ["minimal adjustment sets:"] + [f"  {{{', '.join(s)}}}" if s else "  {} (empty set)" for s in listed]
        if sets
        else ["no adjustment set satisfies: " + ", ".join(require)]
    )
    _emit(args, {"require": list(require), "sets": listed}, lines)
    return EXIT_OK if sets else EXIT_UNMET


def _cmd_swig(args) -> int:
    doc = _load_document(args.file)
    graph = _graph_for(args, doc)
    targets: list[str] = []
    labels: list[str] = []
    for spec in args.set or []:
        name, eq, label = spec.partition("=")
        name = name.strip()
        if not name:
            raise Error(f"--set takes NODE or NODE=label, got {spec!r}")
        targets.append(name)
        labels.append(label.strip() if eq else name.lower())
    if not targets:
        x = graph.treatment()
        if x is None:
            raise Error("no treatment declared; pass --set NODE")
        targets, labels = [x], [x.lower()]
    swig = build_swig(graph, Intervention.on(*targets, labels=labels))
    dot = dsl.emit_dot(swig, doc.name)
    if args.dot is not None:
        if args.dot == "-":
            sys.stdout.write(dot)
        else:
            with open(args.dot, "w", encoding="utf-8") as fh:
                fh.write(dot)
        if not args.json:
            return EXIT_OK
    lines = ["random nodes: " + ", ".join(n.display for n in swig.random_nodes)]
    lines.append("fixed nodes: " + ", ".join(n.display for n in swig.fixed_nodes))
    lines.append("edges:")
    lines.extend(
        f"  {tail.display} -> {head.display}" for tail, head in swig.edges
    )
    _emit(args, render.swig_json(swig), lines)
    return EXIT_OK


def _cmd_eval(args) -> int:
    doc = _load_document(args.file)
    if doc.model is None:
        raise Error("the document has no model block")
    graph = doc.graph
    x, d = graph.treatment(), graph.outcome()
    if x is None or d is None:
        raise Error("the graph must declare a treatment and an outcome")

    table = inference.joint(doc.model)
    if args.population == "study":
        selection = graph.selection_nodes()
        if not selection:
            raise Error("the study population needs a selection node")
        table = inference.study_population(table, selection)
    stratify = _split_names(args.stratify)
    report = inference.measure(table, x, d, args.measure, stratify_by=stratify)

    lines = [
        f"{args.measure} of {x} on {d}, {args.population} population",
        f"  risks: untreated {report.risks[0]:.6f}, treated {report.risks[1]:.6f}",
        f"  marginal {args.measure}: {report.marginal:.6f}",
    ]
    for key, value in report.strata:
        label = ", ".join(f"{k}={v}" for k, v in key)
        lines.append(f"  {args.measure} | {label}: {value:.6f}")
    result = render.measure_json(report)
    result["population"] = args.population
    _emit(args, result, lines)
    return EXIT_OK


def _cmd_decide(args) -> int:
    doc = _load_document(args.file)
    graph = doc.graph
    roles = StudyRoles.from_graph(graph)
    hyp = Hypothesis(null=args.null, no_em=args.no_em)
    report = criteria.adjustment_decision(
        graph, roles, args.covariate, args.measure, hyp
    )
    _emit(
        args,
        {"decision": render.decision_json(report)},
        render.decision_lines(report, render.color_enabled()),
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    untreated = (args.untreated[0], args.untreated[1])
    grid = None
    if args.grid is not None:
        if args.grid < 2:
            raise Error("--grid must be at least 2")
        grid = [i / (args.grid - 1) for i in range(args.grid)]
    points = inference.trial_sweep(untreated, args.scale, args.value, grid)

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(inference.sweep_csv(points))
    if args.png:
        from . import plots

        plots.render_sweep(
            points,
            args.png,
            title=f"stratum {args.scale} = {args.value:g}",
        )

    ors = [pt.or_value for pt in points]
    rrs = [pt.rr_value for pt in points]
    lines = [
        f"{len(points)} points, stratum {args.scale} = {args.value:g}",
        f"  marginal or: min {min(ors):.6f}, max {max(ors):.6f}",
        f"  marginal rr: min {min(rrs):.6f}, max {max(rrs):.6f}",
    ]
    for path, flag in ((args.csv, "csv"), (args.png, "png")):
        if path:
            lines.append(f"  wrote {flag}: {path}")
    _emit(args, render.sweep_json(points), lines)
    return EXIT_OK


def _cmd_labbe(args) -> int:
    curves = [inference.null_curve(args.points)]
    for spec in args.curve or []:
        scale, _, value = spec.partition("=")
        scale = scale.strip().lower()
        if scale not in SCALES or not value:
            raise Error(f"--curve takes SCALE=VALUE with scale in {', '.join(SCALES)}")
        curves.append(inference.labbe_curve(scale, float(value), args.points))
    if len(curves) == 1:
        raise Error("pass at least one --curve SCALE=VALUE")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(inference.labbe_csv(curves))
    if args.png:
        from . import plots

        plots.render_labbe(curves, args.png)

    lines = [f"{len(curves) - 1} curves plus the null diagonal"]
    for path, flag in ((args.csv, "csv"), (args.png, "png")):
        if path:
            lines.append(f"  wrote {flag}: {path}")
    _emit(args, render.labbe_json(curves), lines)
    return EXIT_OK


def _cmd_stats(args) -> int:
    if args.table and args.csv:
        raise Error("pass --table or --csv, not both")
    if args.table:
        vals = [float(v) for v in _split_names(args.table)]
        if len(vals) != 4:
            raise Error("--table takes a,b,c,d")
        table = TwoByTwo(*vals)
    elif args.csv:
        with open(args.csv, "r", encoding="utf-8") as fh:
            table = inference.read_two_by_two_csv(fh.read())
    else:
        raise Error("pass --table a,b,c,d or --csv FILE")

    if args.scale_counts is not None:
        if args.scale_counts <= 0:
            raise Error("--scale-counts must be positive")
        table = table.scaled(args.scale_counts)

    stats = inference.two_by_two_stats(table, continuity=args.continuity)
    rr_test = (
        inference.rr_fixed_null_test(table, args.rr0)
        if args.rr0 is not None
        else None
    )

    def fmt(v):
        return "undefined" if v is None else f"{v:.6f}"

    lines = [
        f"table a={table.a:g} b={table.b:g} c={table.c:g} d={table.d:g}",
        f"  rd {fmt(stats.rd)}   rr {fmt(stats.rr)}   or {fmt(stats.or_value)}",
        f"  chi-square {stats.chi_square:.6f}   p {stats.p_value:.6g}",
    ]
    if rr_test is not None:
        lines.append(
            f"  rr test against {rr_test.rr0:g}: z {rr_test.z:.4f}, p {rr_test.p_value:.6g}"
        )
    _emit(args, render.stats_json(table, stats, rr_test), lines)
    return EXIT_OK


def _cmd_scenarios(args) -> int:
    if args.action == "list":
        lines = []
        for s in scenarios.SCENARIOS:
            lines.append(f"{s.id:22s} {s.title}")
            if s.variants:
                lines.append(f"{'':22s}   variants: {', '.join(sorted(s.variants))}")
        result = {"scenarios": [render.scenario_json(s) for s in scenarios.SCENARIOS]}
        _emit(args, result, lines)
        return EXIT_OK

    if args.action == "show":
        scenario = scenarios.get(args.id)
        doc = scenario.document(args.variant)
        if args.dot and not args.json:
            sys.stdout.write(dsl.emit_dot(doc.graph, doc.name))
            return EXIT_OK
        lines = [f"{scenario.id}: {scenario.title}", scenario.summary, ""]
        lines.append(dsl.serialize(doc).rstrip("\n"))
        exps = scenarios.expectations_for(scenario.id)
        shown = [e for e in exps if e.variant == args.variant]
        if shown:
            lines.append("")
            lines.append("expected verdicts:")
            for e in shown:
                lines.append(f"  - {e.kind}: {e.expected()}  ({e.note})")
        result = render.scenario_json(scenario, include_text=True)
        result["selected"] = render.document_json(doc)
        result["expectations"] = [render.expectation_json(e) for e in exps]
        _emit(args, result, lines)
        return EXIT_OK

    if args.action == "export":
        paths = scenarios.export_files(args.dir)
        for p in paths:
            print(p)
        return EXIT_OK

    # table: rerun every vetted entry and compare
    results = scenarios.evaluate_all()
    bad = [r for r in results if not r.ok]
    lines = []
    for r in results:
        mark = "ok " if r.ok else "FAIL"
        where = r.expectation.scenario + (
            f"[{r.expectation.variant}]" if r.expectation.variant else ""
        )
        lines.append(f"{mark} {where:34s} {r.expectation.kind}")
    lines.append(f"{len(results) - len(bad)}/{len(results)} entries match")
    _emit(
        args,
        {
            "total": len(results),
            "failures": len(bad),
            "entries": [render.expectation_result_json(r) for r in results],
        },
        lines,
    )
    return EXIT_OK if not bad else EXIT_UNMET


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(allow_origin=args.allow_origin)
    uvicorn.run(app, host=args.bind, port=args.port, log_level="warning")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swigcheck",
        description="Graphical checks for selection bias in study designs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_json(p):
        p.add_argument("--json", action="store_true", help="emit a JSON envelope")

    p = sub.add_parser("check", help="evaluate the design conditions on a graph")
    p.add_argument("file", help=".dag file, or - for stdin")
    p.add_argument(
        "--condition",
        choices=("all",) + criteria.CONDITIONS,
        default="all",
    )
    p.add_argument("--adjust", help="comma-separated adjustment set")
    p.add_argument("--stage", type=int, default=1)
    p.add_argument("--treatment", help="override the treatment declared in the file")
    p.add_argument("--outcome", help="override the outcome declared in the file")
    p.add_argument(
        "--selection",
        action="append",
        help="override the selection nodes; repeatable, stage follows order",
    )
    p.add_argument("--null", action="store_true", help="drop dashed edges and the treatment effect")
    p.add_argument("--expect", choices=("holds", "fails"))
    add_json(p)
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("adjust", help="search for minimal adjustment sets")
    p.add_argument("file")
    p.add_argument(
        "--require",
        help="comma-separated requirements: "
        + ", ".join(criteria.REQUIREMENT_ATOMS),
    )
    p.add_argument("--null", action="store_true")
    add_json(p)
    p.set_defaults(handler=_cmd_adjust)

    p = sub.add_parser("swig", help="split a graph at intervention targets")
    p.add_argument("file")
    p.add_argument(
        "--set",
        action="append",
        help="intervene on NODE or NODE=label; repeatable (default: the treatment)",
    )
    p.add_argument("--null", action="store_true")
    p.add_argument(
        "--dot",
        nargs="?",
        const="-",
        metavar="PATH",
        help="write Graphviz text to PATH (or stdout when no path is given)",
    )
    add_json(p)
    p.set_defaults(handler=_cmd_swig)

    p = sub.add_parser("eval", help="association measures from the model block")
    p.add_argument("file")
    p.add_argument(
        "--population",
        choices=("eligible", "study"),
        default="eligible",
        help="study conditions on every selection node being 1",
    )
    p.add_argument("--measure", choices=SCALES, required=True)
    p.add_argument("--stratify", help="comma-separated covariates")
    add_json(p)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("decide", help="should the covariate be adjusted for?")
    p.add_argument("file")
    p.add_argument("--covariate", required=True)
    p.add_argument("--measure", choices=SCALES, required=True)
    hyp = p.add_mutually_exclusive_group()
    hyp.add_argument("--null", action="store_true", help="assume no treatment effect")
    hyp.add_argument(
        "--off-null",
        dest="null",
        action="store_false",
        help="allow a treatment effect (the default)",
    )
    p.add_argument(
        "--no-em",
        choices=SCALES,
        help="assume no effect modification on this scale",
    )
    add_json(p)
    p.set_defaults(handler=_cmd_decide, null=False)

    p = sub.add_parser("sweep", help="marginal measures in a trial as prevalence varies")
    p.add_argument(
        "--untreated",
        nargs=2,
        type=float,
        metavar=("R0", "R1"),
        required=True,
        help="untreated risks in the two covariate strata",
    )
    p.add_argument("--scale", choices=(RR, OR), required=True)
    p.add_argument("--value", type=float, required=True, help="stratum effect size")
    p.add_argument("--grid", type=int, help="grid points (default 101)")
    p.add_argument("--csv", help="write the grid to this CSV file")
    p.add_argument("--png", help="render the curves to this PNG file")
    add_json(p)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("labbe", help="constant-measure curves in the risk plane")
    p.add_argument(
        "--curve",
        action="append",
        help="SCALE=VALUE, repeatable (e.g. --curve or=2 --curve rr=2)",
    )
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--csv")
    p.add_argument("--png")
    add_json(p)
    p.set_defaults(handler=_cmd_labbe)

    p = sub.add_parser("stats", help="two-by-two table measures and tests")
    p.add_argument("--table", help="counts a,b,c,d (exposed cases first)")
    p.add_argument("--csv", help="CSV file with header a,b,c,d")
    p.add_argument("--continuity", action="store_true")
    p.add_argument("--scale-counts", type=float, help="multiply all counts")
    p.add_argument("--rr0", type=float, help="test the risk ratio against this value")
    add_json(p)
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("scenarios", help="built-in designs and their vetted verdicts")
    psub = p.add_subparsers(dest="action", required=True)
    pl = psub.add_parser("list")
    add_json(pl)
    pl.set_defaults(handler=_cmd_scenarios)
    ps = psub.add_parser("show")
    ps.add_argument("id")
    ps.add_argument("--variant")
    ps.add_argument("--dot", action="store_true")
    add_json(ps)
    ps.set_defaults(handler=_cmd_scenarios)
    pe = psub.add_parser("export")
    pe.add_argument("--dir", required=True)
    pe.set_defaults(handler=_cmd_scenarios, json=False)
    pt = psub.add_parser("table")
    add_json(pt)
    pt.set_defaults(handler=_cmd_scenarios)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--allow-origin", help="enable CORS for this origin")
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (InferenceError, UndefinedMeasureError) as exc:
        _report_error(args, exc)
        return EXIT_NUMERIC
    except Error as exc:
        _report_error(args, exc)
        return EXIT_INPUT
    except OSError as exc:
        _report_error(args, exc)
        return EXIT_INPUT


def _report_error(args, exc: Exception) -> None:
    if getattr(args, "json", False):
        json.dump(render.exception_envelope(exc), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        print(f"error: {exc}", file=sys.stderr)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
