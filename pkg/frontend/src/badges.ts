// Badge rendering for the expected-verdict table. Expected and computed
// badges go through the same formatter, so "the computed column matches the
// vetted table" is literally string equality, and the computed side always
// comes from service responses.

import type { AnalysisClient, Decision, Expectation, Verdict, WireGraph } from "./api.js";

function setText(names: string[] | undefined): string {
  return `{${(names ?? []).join(",")}}`;
}

function holdsText(holds: boolean): string {
  return holds ? "holds" : "fails";
}

export function badgeLabel(exp: Expectation): string {
  const variant = exp.variant ? ` (${exp.variant})` : "";
  switch (exp.kind) {
    case "exchangeability":
      return `exchangeability | ${setText(exp.adjust)}${variant}`;
    case "cohort":
    case "casecontrol": {
      const stage = exp.stage && exp.stage > 1 ? ` stage ${exp.stage}` : "";
      const solo = exp.include_earlier_stages === false ? " alone" : "";
      return `${exp.kind}${stage}${solo} | ${setText(exp.adjust)}${variant}`;
    }
    case "decision": {
      const hyp = exp.hypothesis?.null
        ? "null"
        : exp.hypothesis?.no_em
          ? `no EM on ${exp.hypothesis.no_em}`
          : "off-null";
      return `decide ${exp.covariate} on ${exp.scale} | ${hyp}${variant}`;
    }
    case "adjustment_sets":
      return `adjust for ${setText(exp.require)}${variant}`;
    case "multi_stage":
      return `all stages${variant}`;
    default:
      return exp.kind + variant;
  }
}

export function expectedValue(exp: Expectation): string {
  switch (exp.kind) {
    case "exchangeability":
    case "cohort":
    case "casecontrol":
    case "multi_stage":
      return holdsText(exp.expected.holds === true);
    case "decision": {
      const needs = exp.expected.needs ? "adjust" : "no adjustment";
      return `${needs} | ${exp.expected.target ?? ""}`;
    }
    case "adjustment_sets":
      return (exp.expected.sets ?? []).map((s) => setText(s)).join(" ");
    default:
      return JSON.stringify(exp.expected);
  }
}

// --- Computed side --------------------------------------------------------

export function conditionValue(verdicts: Verdict[], exp: Expectation): string | null {
  const v = verdicts.find(
    (v) => v.condition === exp.kind && (exp.stage === undefined || v.stage === exp.stage),
  );
  return v ? holdsText(v.holds) : null;
}

export function decisionValue(decision: Decision): string {
  const needs = decision.needs_adjustment ? "adjust" : "no adjustment";
  return `${needs} | ${decision.identified_target}`;
}

export function adjustmentSetsValue(sets: string[][]): string {
  return sets.map((s) => setText(s)).join(" ");
}

// A multi-stage design is accounted for when every stage passes at least one
// of its two routes. The per-stage verdicts come straight from the service;
// this only folds their booleans for the summary badge.
export function multiStageValue(stageVerdicts: Verdict[][]): string {
  const ok = stageVerdicts.every((verdicts) => {
    const cohort = verdicts.find((v) => v.condition === "cohort");
    const casecontrol = verdicts.find((v) => v.condition === "casecontrol");
    return (cohort?.holds ?? false) || (casecontrol?.holds ?? false);
  });
  return holdsText(ok && stageVerdicts.length > 0);
}

export interface BadgeRow {
  label: string;
  expected: string;
  computed: string | null;
  agree: boolean | null;
  note: string;
}

export function badgeRow(exp: Expectation, computed: string | null): BadgeRow {
  const expected = expectedValue(exp);
  return {
    label: badgeLabel(exp),
    expected,
    computed,
    agree: computed === null ? null : computed === expected,
    note: exp.note,
  };
}

function stageCount(graph: WireGraph): number {
  let top = 1;
  for (const n of graph.nodes) {
    if (n.stage !== undefined) top = Math.max(top, n.stage);
  }
  return top;
}

// One service round trip per table row: each expectation names its own
// adjustment set and hypothesis, so the rows cannot share a single check.
export async function computeBadge(
  api: AnalysisClient,
  graph: WireGraph,
  exp: Expectation,
): Promise<string> {
  switch (exp.kind) {
    case "exchangeability":
    case "cohort":
    case "casecontrol": {
      const req = {
        condition: exp.kind,
        adjust: exp.adjust ?? [],
        ...(exp.stage !== undefined ? { stage: exp.stage } : {}),
        ...(exp.include_earlier_stages === false
          ? { include_earlier_stages: false }
          : {}),
      };
      const { verdicts } = await api.check({ graph }, req);
      return conditionValue(verdicts, exp) ?? "missing";
    }
    case "decision": {
      const { decision } = await api.decide(
        { graph },
        {
          covariate: exp.covariate ?? "",
          measure: exp.scale ?? "rr",
          ...(exp.hypothesis?.null ? { null: true } : {}),
          ...(exp.hypothesis?.no_em ? { no_em: exp.hypothesis.no_em } : {}),
        },
      );
      return decisionValue(decision);
    }
    case "adjustment_sets": {
      const out = await api.adjust({ graph }, exp.require);
      return adjustmentSetsValue(out.sets);
    }
    case "multi_stage": {
      const stages = stageCount(graph);
      const perStage: Verdict[][] = [];
      for (let stage = 1; stage <= stages; stage += 1) {
        const { verdicts } = await api.check({ graph }, { adjust: [], stage });
        perStage.push(verdicts);
      }
      return multiStageValue(perStage);
    }
    default:
      return "unsupported";
  }
}

// The vetted table belongs to the scenario, not to whatever is on the
// canvas: each row is rechecked against the document it was written for,
// so variant-bound rows use their variant's graph.
export interface ScenarioGraphs {
  base: WireGraph;
  variants: Record<string, WireGraph>;
}

export function graphFor(graphs: ScenarioGraphs, exp: Expectation): WireGraph {
  if (!exp.variant) return graphs.base;
  const graph = graphs.variants[exp.variant];
  if (!graph) throw new Error(`variant '${exp.variant}' is not in the document`);
  return graph;
}

// A row whose request fails renders the error text and counts as
// disagreement instead of taking the whole table down.
export async function computeBadges(
  api: AnalysisClient,
  graphs: ScenarioGraphs,
  expectations: Expectation[],
): Promise<BadgeRow[]> {
  return Promise.all(
    expectations.map(async (exp) => {
      try {
        return badgeRow(exp, await computeBadge(api, graphFor(graphs, exp), exp));
      } catch (err) {
        return badgeRow(exp, err instanceof Error ? err.message : String(err));
      }
    }),
  );
}
