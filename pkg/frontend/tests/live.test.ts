// End-to-end checks against a real service instance. Gated behind
// SWIGCHECK_LIVE=1 (npm run test:live) so plain `npm test` stays
// network-free; the suite boots its own server unless SWIGCHECK_URL points
// at one already running.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { Api } from "../src/api.js";
import type { ScenarioDetail } from "../src/api.js";
import type { ScenarioGraphs } from "../src/badges.js";
import { computeBadges } from "../src/badges.js";
import { sweepChart, fmt } from "../src/charts.js";
import { fromWire, isomorphic, toDsl } from "../src/graph.js";

function graphsOf(detail: ScenarioDetail): ScenarioGraphs {
  return {
    base: detail.document.graph,
    variants: Object.fromEntries(
      Object.entries(detail.variant_documents).map(([name, doc]) => [name, doc.graph]),
    ),
  };
}

const LIVE = process.env.SWIGCHECK_LIVE === "1";

let server: ChildProcess | null = null;
let api: Api;

async function waitReady(base: string): Promise<void> {
  for (let i = 0; i < 60; i += 1) {
    try {
      const resp = await fetch(`${base}/v1/scenarios`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`service at ${base} never became ready`);
}

beforeAll(async () => {
  if (!LIVE) return;
  let base = process.env.SWIGCHECK_URL;
  if (!base) {
    const port = 8800 + Math.floor(Math.random() * 400);
    base = `http://127.0.0.1:${port}`;
    server = spawn(
      "python3",
      ["-m", "swigcheck", "serve", "--port", String(port)],
      { cwd: new URL("../..", import.meta.url).pathname, stdio: "ignore" },
    );
  }
  api = new Api(base);
  await waitReady(base);
}, 30000);

afterAll(() => {
  server?.kill();
});

describe.skipIf(!LIVE)("against the live service", () => {
  it("renders every scenario's badges identical to its vetted table", async () => {
    const { scenarios } = await api.scenarios();
    expect(scenarios.length).toBeGreaterThanOrEqual(10);
    let rows = 0;
    const disagreements: string[] = [];
    for (const entry of scenarios) {
      const detail = await api.scenario(entry.id);
      const table = await computeBadges(api, graphsOf(detail), detail.expectations);
      for (const row of table) {
        rows += 1;
        if (!row.agree) {
          disagreements.push(
            `${entry.id} ${row.label}: expected ${row.expected}, computed ${row.computed}`,
          );
        }
      }
    }
    expect(disagreements).toEqual([]);
    expect(rows).toBeGreaterThanOrEqual(99);
  }, 120000);

  it("keeps the vetted table fixed when a variant is loaded", async () => {
    // the table describes the scenario's documents, not the canvas, so
    // loading a variant changes `selected` but not one table row
    const base = await api.scenario("matched_cohort");
    const variant = await api.scenario("matched_cohort", "no_confounding");
    expect(variant.selected.text).not.toBe(base.selected.text);
    const baseRows = await computeBadges(api, graphsOf(base), base.expectations);
    const variantRows = await computeBadges(api, graphsOf(variant), variant.expectations);
    expect(variantRows).toEqual(baseRows);
    expect(variantRows.every((r) => r.agree === true)).toBe(true);
  }, 60000);

  it("renders a row's service rejection inside the table", async () => {
    // asking a variant with an unmeasured node to adjust for it must yield
    // an error row, not a rejected table
    const detail = await api.scenario("colliderX", "latent_v");
    const rows = await computeBadges(api, graphsOf(detail), [
      {
        scenario: "colliderX",
        kind: "exchangeability",
        expected: { holds: true },
        note: "",
        adjust: ["V"],
        variant: "latent_v",
      },
    ]);
    expect(rows[0]!.agree).toBe(false);
    expect(rows[0]!.computed).toContain("unmeasured");
  });

  it("flips the matched case-control or decision under the null", async () => {
    const detail = await api.scenario("matched_casecontrol");
    const graph = detail.selected.graph;
    const offNull = await api.decide({ graph }, { covariate: "C", measure: "or" });
    const underNull = await api.decide(
      { graph },
      { covariate: "C", measure: "or", null: true },
    );
    expect(offNull.decision.needs_adjustment).toBe(true);
    expect(underNull.decision.needs_adjustment).toBe(false);
    // the badge the decision panel renders changes with it
    const badge = (d: typeof offNull.decision) =>
      d.needs_adjustment ? `adjust for ${d.covariate}` : "no adjustment needed";
    expect(badge(offNull.decision)).toBe("adjust for C");
    expect(badge(underNull.decision)).toBe("no adjustment needed");
  });

  it("reads the sweep extremes off the service curve", async () => {
    const { points } = await api.sweep({
      untreated: [0.2, 0.8],
      scale: "or",
      value: 2,
      grid: 101,
    });
    const chart = sweepChart(points, "or");
    expect(chart.min.label).toBe("1.57");
    expect(fmt(chart.min.p)).toBe("0.55");
    expect(chart.max.label).toBe("2.00");

    const rr = await api.sweep({ untreated: [0.1, 0.4], scale: "rr", value: 2, grid: 101 });
    const rrChart = sweepChart(rr.points, "rr");
    expect(rrChart.min.label).toBe("2.00");
    expect(rrChart.max.label).toBe("2.00");
  });

  it("round-trips every scenario canvas through export and re-parse", async () => {
    const { scenarios } = await api.scenarios();
    for (const entry of scenarios) {
      const detail = await api.scenario(entry.id);
      const canvas = fromWire(detail.selected.graph, detail.selected.text);
      const text = toDsl(canvas);
      const reparsed = await api.parse({ text });
      const again = fromWire(reparsed.graph, text);
      expect(isomorphic(canvas, again), entry.id).toBe(true);
      // the parser ignores the position comments but they survive our export
      expect(toDsl(again)).toBe(text);
    }
  });

  it("keeps the canvas when a scenario load fails", async () => {
    const err = await api.scenario("not_a_scenario").catch((e) => e);
    expect(err.code).toBe("unknown_scenario");
    expect(err.status).toBe(404);
  });
});
