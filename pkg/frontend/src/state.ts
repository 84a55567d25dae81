// Workbench state and the request plumbing around it. Network calls are
// asynchronous and can land out of order; a sequence gate makes sure a
// verdict panel never shows results for a graph the user has already edited.

import type { AnalysisClient, Decision, Expectation, Verdict } from "./api.js";
import type { ScenarioGraphs } from "./badges.js";
import type { CanvasGraph } from "./graph.js";
import { emptyGraph, toWire } from "./graph.js";

// --- Stale-response control ----------------------------------------------

// Every request takes a stamp. An edit raises the barrier, so responses to
// requests stamped at or below it are dropped, as are responses arriving
// after a newer response has already been rendered.
export class SequenceGate {
  private issued = 0;
  private barrier = 0;
  private rendered = 0;

  stamp(): number {
    this.issued += 1;
    return this.issued;
  }

  invalidate(): void {
    this.barrier = this.issued;
  }

  admit(stamp: number): boolean {
    if (stamp <= this.barrier || stamp <= this.rendered) return false;
    this.rendered = stamp;
    return true;
  }
}

// --- State ----------------------------------------------------------------

export interface WorkbenchState {
  scenario: string | null;
  variant: string | null;
  canvas: CanvasGraph;
  expectations: Expectation[];
  scenarioGraphs: ScenarioGraphs | null;
  adjust: string[];
  nullHypothesis: boolean;
  covariate: string | null;
  measure: "rd" | "rr" | "or";
  noEm: "rd" | "rr" | "or" | null;
  verdicts: Verdict[] | null;
  verdictsRaw: string | null;
  decision: Decision | null;
  decisionRaw: string | null;
  adjustmentSets: string[][] | null;
  busy: number;
  toast: { message: string; error: boolean } | null;
}

export function initialState(): WorkbenchState {
  return {
    scenario: null,
    variant: null,
    canvas: emptyGraph(),
    expectations: [],
    scenarioGraphs: null,
    adjust: [],
    nullHypothesis: false,
    covariate: null,
    measure: "or",
    noEm: null,
    verdicts: null,
    verdictsRaw: null,
    decision: null,
    decisionRaw: null,
    adjustmentSets: null,
    busy: 0,
    toast: null,
  };
}

export type Listener = (state: WorkbenchState) => void;

export class Store {
  readonly gate = new SequenceGate();
  private listeners: Listener[] = [];

  constructor(public state: WorkbenchState = initialState()) {}

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  update(mutate: (state: WorkbenchState) => void): void {
    mutate(this.state);
    for (const fn of this.listeners) fn(this.state);
  }

  toast(message: string, error = false): void {
    this.update((s) => {
      s.toast = { message, error };
    });
  }
}

// --- Refresh round trips ---------------------------------------------------

function defaultCovariate(state: WorkbenchState): string | null {
  if (state.covariate && state.canvas.nodes.some((n) => n.name === state.covariate)) {
    return state.covariate;
  }
  const c = state.canvas.nodes.find((n) => n.role === "covariate" && !n.latent);
  return c ? c.name : null;
}

function checkable(canvas: CanvasGraph): boolean {
  return (
    canvas.nodes.some((n) => n.role === "treatment") &&
    canvas.nodes.some((n) => n.role === "outcome") &&
    canvas.nodes.some((n) => n.role === "selection")
  );
}

// Re-derive the verdict panel, the decision panel, and the adjustment sets
// for the canvas as it stands. Responses for an older canvas are discarded.
export async function refresh(api: AnalysisClient, store: Store): Promise<void> {
  const state = store.state;
  if (!checkable(state.canvas)) {
    store.update((s) => {
      s.verdicts = null;
      s.verdictsRaw = null;
      s.decision = null;
      s.decisionRaw = null;
      s.adjustmentSets = null;
    });
    return;
  }
  const stamp = store.gate.stamp();
  const graph = toWire(state.canvas);
  const covariate = defaultCovariate(state);
  store.update((s) => {
    s.busy += 1;
  });
  try {
    const checkReq = {
      adjust: state.adjust,
      ...(state.nullHypothesis ? { null: true } : {}),
    };
    const decideReq = covariate
      ? {
          covariate,
          measure: state.measure,
          ...(state.nullHypothesis ? { null: true } : {}),
          ...(state.noEm ? { no_em: state.noEm } : {}),
        }
      : null;
    const [checked, decided, sets] = await Promise.all([
      api.check({ graph }, checkReq),
      decideReq ? api.decide({ graph }, decideReq) : Promise.resolve(null),
      api.adjust({ graph }, undefined, state.nullHypothesis),
    ]);
    if (!store.gate.admit(stamp)) return;
    store.update((s) => {
      s.verdicts = checked.verdicts;
      s.verdictsRaw = checked.raw;
      s.decision = decided ? decided.decision : null;
      s.decisionRaw = decided ? decided.raw : null;
      s.adjustmentSets = sets.sets;
      s.covariate = covariate;
    });
  } catch (err) {
    if (store.gate.admit(stamp)) {
      store.toast(err instanceof Error ? err.message : String(err), true);
    }
  } finally {
    store.update((s) => {
      s.busy -= 1;
    });
  }
}

// Any structural edit invalidates in-flight requests, then re-checks.
export function editAndRefresh(
  api: AnalysisClient,
  store: Store,
  mutate: (state: WorkbenchState) => void,
): Promise<void> {
  store.gate.invalidate();
  store.update(mutate);
  return refresh(api, store);
}
