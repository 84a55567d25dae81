// @vitest-environment happy-dom

// Boots the real page markup against a stubbed client and drives it the way
// a user would: load a scenario, flip the null switch, run a sweep. Keeps
// the DOM wiring honest without a browser.

import { beforeEach, describe, expect, it, vi } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";
import type {
  Decision,
  ScenarioDetail,
  ScenarioEntry,
  SweepPoint,
  Verdict,
  WorkbenchApi,
} from "../src/api.js";
import { ApiError } from "../src/api.js";
import { initialState, Store } from "../src/state.js";
import { Workbench } from "../src/ui.js";

// happy-dom swaps the global URL class, so resolve fixture paths with
// node:path instead of import.meta.url like the node-environment suites do
function fixture<T>(name: string): T {
  const raw = readFileSync(join(process.cwd(), "tests", "fixtures", `${name}.json`), "utf8");
  return JSON.parse(raw).result as T;
}

const detail = fixture<ScenarioDetail>("scenario_detail_matched_casecontrol");
const listing = fixture<{ scenarios: ScenarioEntry[] }>("scenario_list");
const checkOff = fixture<{ verdicts: Verdict[] }>("check_mcc");
const checkNull = fixture<{ verdicts: Verdict[] }>("check_mcc_null");
const decideOff = fixture<{ decision: Decision }>("decide_mcc_or");
const decideNull = fixture<{ decision: Decision }>("decide_mcc_or_null");
const sweepA4 = fixture<{ points: SweepPoint[] }>("sweep_a4");

interface CallLog {
  sweeps: number;
  scenarioIds: Array<string | undefined>;
}

function stubApi(log: CallLog): WorkbenchApi {
  return {
    async parse() {
      throw new Error("parse is not exercised here");
    },
    async check(_payload, req) {
      const result = req?.null ? checkNull : checkOff;
      return { verdicts: result.verdicts, raw: JSON.stringify(result.verdicts) };
    },
    async decide(_payload, req) {
      const result = req.null ? decideNull : decideOff;
      return { decision: result.decision, raw: JSON.stringify(result.decision) };
    },
    async adjust() {
      return { require: ["exchangeability", "selection"], sets: [["C"]] };
    },
    async sweep() {
      log.sweeps += 1;
      return sweepA4;
    },
    async scenarios() {
      return listing;
    },
    async scenario(id, variant) {
      log.scenarioIds.push(variant ?? id);
      if (id !== "matched_casecontrol") {
        throw new ApiError("unknown_scenario", `no scenario named '${id}'`, 404);
      }
      if (variant) {
        const doc = detail.variant_documents[variant];
        if (!doc) throw new ApiError("unknown_scenario", `no variant '${variant}'`, 404);
        return { ...detail, selected: doc };
      }
      return detail;
    },
  };
}

function mountPage(): void {
  const html = readFileSync(join(process.cwd(), "index.html"), "utf8");
  const body = html
    .replace(/<script[\s\S]*?<\/script>/g, "")
    .replace(/^[\s\S]*<body>/, "")
    .replace(/<\/body>[\s\S]*$/, "");
  document.body.innerHTML = body;
}

function byId<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

async function bootWorkbench(log: CallLog): Promise<{ store: Store; bench: Workbench }> {
  mountPage();
  const store = new Store(initialState());
  const bench = new Workbench(stubApi(log), store);
  await bench.boot();
  return { store, bench };
}

async function loadScenario(variant = ""): Promise<void> {
  const picker = byId<HTMLSelectElement>("scenario-picker");
  picker.value = "matched_casecontrol";
  picker.dispatchEvent(new Event("change"));
  byId<HTMLSelectElement>("variant-picker").value = variant;
  byId("load-button").click();
  await vi.waitFor(() => {
    if (document.querySelectorAll("#badge-panel .badge").length === 0) {
      throw new Error("table not rendered yet");
    }
  });
}

describe("workbench page", () => {
  let log: CallLog;
  let store: Store;

  beforeEach(async () => {
    log = { sweeps: 0, scenarioIds: [] };
    ({ store } = await bootWorkbench(log));
  });

  it("fills the pickers on boot", () => {
    const options = byId<HTMLSelectElement>("scenario-picker").options;
    expect(options.length).toBe(listing.scenarios.length);
    const picker = byId<HTMLSelectElement>("scenario-picker");
    picker.value = "matched_casecontrol";
    picker.dispatchEvent(new Event("change"));
    const variants = Array.from(byId<HTMLSelectElement>("variant-picker").options).map(
      (o) => o.value,
    );
    expect(variants).toEqual(["", "no_confounding", "no_risk"]);
  });

  it("loads a scenario into every panel", async () => {
    await loadScenario();
    expect(document.querySelectorAll("#canvas-svg g.node").length).toBe(4);
    expect(byId<HTMLTextAreaElement>("dsl-text").value).toContain("dag matched_casecontrol {");
    expect(document.querySelectorAll("#verdict-panel .verdict").length).toBe(
      checkOff.verdicts.length,
    );
    expect(byId("decision-badge").textContent).toBe("adjust for C");
    expect(document.querySelectorAll("#badge-panel .badge").length).toBe(
      detail.expectations.length,
    );
    expect(byId("adjust-panel").textContent).toContain("minimal sets: {C}");
    const covariates = Array.from(
      byId<HTMLSelectElement>("covariate-picker").options,
    ).map((o) => o.value);
    expect(covariates).toEqual(["C"]);
  });

  it("loads a variant without shrinking the vetted table", async () => {
    await loadScenario("no_risk");
    expect(log.scenarioIds).toContain("no_risk");
    expect(byId<HTMLTextAreaElement>("dsl-text").value).toContain(
      "dag matched_casecontrol_no_risk {",
    );
    expect(document.querySelectorAll("#badge-panel .badge").length).toBe(
      detail.expectations.length,
    );
  });

  it("flips the decision badge when the null switch toggles", async () => {
    await loadScenario();
    expect(byId("decision-badge").textContent).toBe("adjust for C");
    const toggle = byId<HTMLInputElement>("null-toggle");
    toggle.checked = true;
    toggle.dispatchEvent(new Event("change"));
    await vi.waitFor(() => {
      expect(byId("decision-badge").textContent).toBe("no adjustment needed");
    });
    expect(store.state.decisionRaw).toBe(JSON.stringify(decideNull.decision));
  });

  it("keeps the canvas when a load fails", async () => {
    await loadScenario();
    const before = byId<HTMLTextAreaElement>("dsl-text").value;
    const picker = byId<HTMLSelectElement>("scenario-picker");
    const ghost = document.createElement("option");
    ghost.value = "ghost";
    picker.append(ghost);
    picker.value = "ghost";
    byId("load-button").click();
    await vi.waitFor(() => {
      expect(byId("toast").textContent).toContain("no scenario named 'ghost'");
    });
    expect(byId<HTMLTextAreaElement>("dsl-text").value).toBe(before);
    expect(document.querySelectorAll("#canvas-svg g.node").length).toBe(4);
  });

  it("selects a node and opens the inspector", async () => {
    await loadScenario();
    const group = document.querySelector<SVGGElement>('#canvas-svg g.node[data-name="S"]')!;
    group.dispatchEvent(new Event("pointerdown"));
    window.dispatchEvent(new Event("pointerup"));
    await vi.waitFor(() => {
      expect(byId("inspector").textContent).toContain("S");
    });
    expect(byId("inspector").querySelector("select")).not.toBeNull();
  });

  it("runs a sweep and writes the extreme readout", async () => {
    await loadScenario();
    byId("sweep-run").click();
    await vi.waitFor(() => {
      expect(byId("sweep-readout").textContent).toContain("minimum 1.57 at p=0.55");
    });
    expect(byId("sweep-readout").textContent).toContain("maximum 2.00");
    expect(byId("sweep-chart").querySelector("svg")).not.toBeNull();
    expect(log.sweeps).toBe(1);
  });

  it("rejects out-of-range sweep risks locally", async () => {
    byId<HTMLInputElement>("sweep-r0").value = "1.5";
    byId("sweep-run").click();
    await vi.waitFor(() => {
      expect(byId("toast").textContent).toContain("between 0 and 1");
    });
    expect(log.sweeps).toBe(0);
  });

  it("adds a node through the toolbar", async () => {
    await loadScenario();
    byId("add-node").click();
    await vi.waitFor(() => {
      expect(document.querySelectorAll("#canvas-svg g.node").length).toBe(5);
    });
    expect(byId<HTMLTextAreaElement>("dsl-text").value).toContain("N1");
    expect(byId("inspector").textContent).toContain("N1");
  });
});
