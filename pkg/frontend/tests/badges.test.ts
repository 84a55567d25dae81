import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import type { AnalysisClient, Decision, Expectation, ScenarioDetail, Verdict } from "../src/api.js";
import type { ScenarioGraphs } from "../src/badges.js";
import {
  adjustmentSetsValue,
  badgeLabel,
  badgeRow,
  computeBadges,
  decisionValue,
  expectedValue,
  graphFor,
  multiStageValue,
} from "../src/badges.js";

function fixture<T>(name: string): T {
  const raw = readFileSync(new URL(`./fixtures/${name}.json`, import.meta.url), "utf8");
  return JSON.parse(raw).result as T;
}

function graphsOf(detail: ScenarioDetail): ScenarioGraphs {
  return {
    base: detail.document.graph,
    variants: Object.fromEntries(
      Object.entries(detail.variant_documents).map(([name, doc]) => [name, doc.graph]),
    ),
  };
}

const clinical = fixture<ScenarioDetail>("scenario_detail_clinical");
const matchedCC = fixture<ScenarioDetail>("scenario_detail_matched_casecontrol");
const casecohort = fixture<ScenarioDetail>("scenario_detail_casecohort");

describe("badge text", () => {
  it("names condition rows by kind and adjustment set", () => {
    const cohort = clinical.expectations.find((e) => e.kind === "cohort")!;
    expect(badgeLabel(cohort)).toBe("cohort | {C}");
    expect(expectedValue(cohort)).toBe("holds");
  });

  it("spells out decision hypotheses", () => {
    const rows = clinical.expectations.filter((e) => e.kind === "decision");
    const labels = rows.map(badgeLabel);
    expect(labels).toContain("decide C on rd | no EM on rd");
    const nulls = rows.filter((e) => e.hypothesis?.null);
    for (const row of nulls) {
      expect(badgeLabel(row)).toContain("| null");
    }
  });

  it("prints adjustment set lists", () => {
    const exp: Expectation = {
      scenario: "x",
      kind: "adjustment_sets",
      expected: { sets: [["C"], ["V"]] },
      note: "",
      require: ["selection"],
    };
    expect(badgeLabel(exp)).toBe("adjust for {selection}");
    expect(expectedValue(exp)).toBe("{C} {V}");
    expect(adjustmentSetsValue([["C"], ["V"]])).toBe("{C} {V}");
  });

  it("marks disagreement", () => {
    const cohort = clinical.expectations.find((e) => e.kind === "cohort")!;
    expect(badgeRow(cohort, "holds").agree).toBe(true);
    expect(badgeRow(cohort, "fails").agree).toBe(false);
    expect(badgeRow(cohort, null).agree).toBeNull();
  });

  it("keeps variant rows apart from their base twins", () => {
    const rows = matchedCC.expectations.filter(
      (e) => e.kind === "decision" && e.hypothesis?.no_em === "or",
    );
    const labels = rows.map(badgeLabel);
    expect(labels).toContain("decide C on or | no EM on or");
    expect(labels).toContain("decide C on or | no EM on or (no_confounding)");
    expect(labels).toContain("decide C on or | no EM on or (no_risk)");
    expect(new Set(labels).size).toBe(labels.length);
  });

  it("flags rows that drop earlier-stage conditioning", () => {
    const solo = casecohort.expectations.find(
      (e) => e.include_earlier_stages === false,
    )!;
    expect(badgeLabel(solo)).toBe("casecontrol stage 2 alone | {}");
    expect(expectedValue(solo)).toBe("fails");
  });
});

describe("multi-stage folding", () => {
  const verdict = (condition: string, holds: boolean): Verdict => ({
    condition,
    stage: 1,
    holds,
    adjust: [],
    conditioning: [],
    certificate: null,
  });

  it("passes when every stage passes one route", () => {
    expect(
      multiStageValue([
        [verdict("cohort", true), verdict("casecontrol", false)],
        [verdict("cohort", false), verdict("casecontrol", true)],
      ]),
    ).toBe("holds");
  });

  it("fails when any stage fails both routes", () => {
    expect(
      multiStageValue([
        [verdict("cohort", true), verdict("casecontrol", true)],
        [verdict("cohort", false), verdict("casecontrol", false)],
      ]),
    ).toBe("fails");
    expect(multiStageValue([])).toBe("fails");
  });
});

describe("computed badges", () => {
  it("issues one request per row with the row's own parameters", async () => {
    const seen: string[] = [];
    const client: AnalysisClient = {
      async check(_payload, req) {
        seen.push(`check:${req?.condition ?? "all"}:{${(req?.adjust ?? []).join(",")}}`);
        const verdicts: Verdict[] = [
          {
            condition: req?.condition === "all" ? "cohort" : (req?.condition ?? "cohort"),
            stage: req?.stage ?? 1,
            holds: true,
            adjust: req?.adjust ?? [],
            conditioning: [],
            certificate: null,
          },
        ];
        return { verdicts, raw: JSON.stringify(verdicts) };
      },
      async decide(_payload, req) {
        seen.push(`decide:${req.covariate}:${req.measure}:${req.null ? "null" : "off"}`);
        const decision: Decision = {
          covariate: req.covariate,
          measure: req.measure,
          hypothesis: { null: Boolean(req.null), no_em: req.no_em ?? null },
          equalities: [true, true, true],
          needs_adjustment: false,
          identified_target: "conditional_eligible",
          confounded_marginal: true,
          selection_ignorable: false,
        };
        return { decision, raw: JSON.stringify(decision) };
      },
      async adjust(_payload, require) {
        seen.push(`adjust:{${(require ?? []).join(",")}}`);
        return { require: require ?? [], sets: [["C"]] };
      },
    };

    const rows = await computeBadges(client, graphsOf(clinical), clinical.expectations);
    expect(rows).toHaveLength(clinical.expectations.length);
    const cohort = clinical.expectations.find((e) => e.kind === "cohort")!;
    expect(seen).toContain(`check:cohort:{${(cohort.adjust ?? []).join(",")}}`);
    const decision = clinical.expectations.find((e) => e.kind === "decision")!;
    expect(
      seen.some((s) => s.startsWith(`decide:${decision.covariate}:${decision.scale}`)),
    ).toBe(true);
  });

  it("checks each row against the document it was written for", () => {
    const graphs = graphsOf(matchedCC);
    const base = matchedCC.expectations.find((e) => !e.variant)!;
    const bound = matchedCC.expectations.find((e) => e.variant === "no_risk")!;
    expect(graphFor(graphs, base)).toBe(graphs.base);
    expect(graphFor(graphs, bound)).toBe(graphs.variants["no_risk"]);
    expect(() =>
      graphFor(graphs, { ...base, variant: "missing" }),
    ).toThrowError(/variant 'missing'/);
  });

  it("forwards the earlier-stages flag only when a row drops it", async () => {
    const flags: Array<boolean | undefined> = [];
    const client: AnalysisClient = {
      async check(_payload, req) {
        flags.push(req?.include_earlier_stages);
        const verdicts: Verdict[] = [
          {
            condition: req?.condition ?? "cohort",
            stage: req?.stage ?? 1,
            holds: false,
            adjust: [],
            conditioning: [],
            certificate: null,
          },
        ];
        return { verdicts, raw: JSON.stringify(verdicts) };
      },
      async decide() {
        throw new Error("not used");
      },
      async adjust() {
        throw new Error("not used");
      },
    };
    const rows = casecohort.expectations.filter(
      (e) => e.kind === "casecontrol" && e.stage === 2,
    );
    expect(rows.map((e) => e.include_earlier_stages)).toContain(false);
    await computeBadges(client, graphsOf(casecohort), rows);
    expect(flags).toContain(false);
    expect(flags).not.toContain(true);
  });

  it("grades decision agreement against the expected needs and target", () => {
    const exp = clinical.expectations.find(
      (e) => e.kind === "decision" && e.expected.needs === false,
    )!;
    const computed = decisionValue({
      covariate: "C",
      measure: "rd",
      hypothesis: { null: false, no_em: "rd" },
      equalities: [false, true, true],
      needs_adjustment: false,
      identified_target: exp.expected.target!,
      confounded_marginal: true,
      selection_ignorable: false,
    });
    expect(badgeRow(exp, computed).agree).toBe(true);
  });
});
