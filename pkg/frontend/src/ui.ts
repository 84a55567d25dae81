// DOM wiring for the workbench. All analysis stays behind the service; this
// file renders state and turns pointer events into edits.

import { ApiError } from "./api.js";
import type { ScenarioDetail, ScenarioEntry, SweepPoint, Verdict, WorkbenchApi } from "./api.js";
import { badgeRow, computeBadges } from "./badges.js";
import type { BadgeRow } from "./badges.js";
import { fmt, labbeChart, sweepChart, validRisk } from "./charts.js";
import type { LabbeCurve } from "./charts.js";
import {
  addEdge,
  addNode,
  fromWire,
  node,
  removeEdge,
  removeNode,
  renameNode,
  setLatent,
  setRole,
  toDsl,
  toggleDashed,
  toWire,
} from "./graph.js";
import type { CanvasGraph, Role } from "./graph.js";
import { editAndRefresh, refresh, Store } from "./state.js";

const NODE_R = 22;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const out = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) out.setAttribute(k, v);
  if (text !== undefined) out.textContent = text;
  return out;
}

function byId<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

// counterfactual labels like "D^x" or "S^{x,s}" belong to the base node
function baseName(vertex: string): string {
  const cut = vertex.indexOf("^");
  return cut === -1 ? vertex : vertex.slice(0, cut);
}

export class Workbench {
  private linking: string | null = null;
  private highlight = new Set<string>();
  private badges: BadgeRow[] = [];
  private curves: LabbeCurve[] = [{ scale: "or", value: 2 }, { scale: "rr", value: 2 }];
  private lastSweep: { points: SweepPoint[]; scale: "or" | "rr" } | null = null;
  private toastTimer: number | undefined;

  constructor(
    private api: WorkbenchApi,
    private store: Store,
  ) {
    store.subscribe(() => this.render());
  }

  async boot(): Promise<void> {
    this.bindToolbar();
    this.bindPanels();
    let listing: ScenarioEntry[] = [];
    try {
      listing = (await this.api.scenarios()).scenarios;
    } catch (err) {
      this.store.toast(describe(err), true);
    }
    const picker = byId<HTMLSelectElement>("scenario-picker");
    for (const s of listing) {
      picker.append(el("option", { value: s.id }, `${s.id}: ${s.title}`));
    }
    picker.addEventListener("change", () => this.fillVariants(listing));
    this.fillVariants(listing);
    byId("load-button").addEventListener("click", () => void this.loadScenario());
    this.render();
  }

  private fillVariants(listing: ScenarioEntry[]): void {
    const picker = byId<HTMLSelectElement>("scenario-picker");
    const variants = byId<HTMLSelectElement>("variant-picker");
    variants.textContent = "";
    variants.append(el("option", { value: "" }, "base"));
    const entry = listing.find((s) => s.id === picker.value);
    for (const v of entry?.variants ?? []) {
      variants.append(el("option", { value: v }, v));
    }
  }

  private async loadScenario(): Promise<void> {
    const id = byId<HTMLSelectElement>("scenario-picker").value;
    const variant = byId<HTMLSelectElement>("variant-picker").value || undefined;
    if (!id) return;
    let detail: ScenarioDetail;
    try {
      detail = await this.api.scenario(id, variant);
    } catch (err) {
      // canvas untouched on failure
      this.store.toast(describe(err), true);
      return;
    }
    this.store.gate.invalidate();
    this.highlight.clear();
    this.linking = null;
    this.store.update((s) => {
      s.scenario = id;
      s.variant = variant ?? null;
      s.canvas = fromWire(detail.selected.graph, detail.selected.text);
      s.canvas.name = detail.selected.name;
      s.expectations = detail.expectations;
      s.scenarioGraphs = {
        base: detail.document.graph,
        variants: Object.fromEntries(
          Object.entries(detail.variant_documents).map(([name, doc]) => [
            name,
            doc.graph,
          ]),
        ),
      };
      s.adjust = [];
      s.nullHypothesis = false;
    });
    await refresh(this.api, this.store);
    await this.refreshBadges();
  }

  // The table is the scenario's own record: rows recheck against the
  // scenario documents, not the canvas, so edits change the live panels
  // while the vetted table keeps describing the loaded design.
  private async refreshBadges(): Promise<void> {
    const s = this.store.state;
    if (s.expectations.length === 0 || s.scenarioGraphs === null) {
      this.badges = [];
      this.render();
      return;
    }
    try {
      this.badges = await computeBadges(this.api, s.scenarioGraphs, s.expectations);
    } catch (err) {
      this.badges = s.expectations.map((exp) => badgeRow(exp, null));
      this.store.toast(describe(err), true);
    }
    this.render();
  }

  // --- Toolbar and panels -------------------------------------------------

  private bindToolbar(): void {
    byId("add-node").addEventListener("click", () => {
      void editAndRefresh(this.api, this.store, (s) => {
        const name = addNode(s.canvas, 80 + Math.random() * 240, 60 + Math.random() * 200);
        s.canvas.selected = { kind: "node", name };
      });
    });
    byId("connect").addEventListener("click", () => {
      const sel = this.store.state.canvas.selected;
      if (sel?.kind !== "node") {
        this.store.toast("select a node first, then connect");
        return;
      }
      this.linking = sel.name;
      this.store.toast(`click the node ${sel.name} should point at`);
    });
    byId<HTMLInputElement>("null-toggle").addEventListener("change", (ev) => {
      const on = (ev.target as HTMLInputElement).checked;
      void editAndRefresh(this.api, this.store, (s) => {
        s.nullHypothesis = on;
      });
    });
    byId("export-button").addEventListener("click", () => this.exportFile());
    byId<HTMLInputElement>("import-input").addEventListener("change", (ev) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (file) void this.importFile(file);
    });
  }

  private bindPanels(): void {
    byId<HTMLSelectElement>("measure-picker").addEventListener("change", (ev) => {
      const measure = (ev.target as HTMLSelectElement).value as "rd" | "rr" | "or";
      void editAndRefresh(this.api, this.store, (s) => {
        s.measure = measure;
      });
    });
    byId<HTMLSelectElement>("covariate-picker").addEventListener("change", (ev) => {
      const covariate = (ev.target as HTMLSelectElement).value || null;
      void editAndRefresh(this.api, this.store, (s) => {
        s.covariate = covariate;
      });
    });
    byId<HTMLSelectElement>("noem-picker").addEventListener("change", (ev) => {
      const raw = (ev.target as HTMLSelectElement).value;
      void editAndRefresh(this.api, this.store, (s) => {
        s.noEm = raw === "" ? null : (raw as "rd" | "rr" | "or");
      });
    });
    byId("sweep-run").addEventListener("click", () => void this.runSweep());
    byId("labbe-add").addEventListener("click", () => this.addCurve());
  }

  private exportFile(): void {
    const text = toDsl(this.store.state.canvas);
    const blob = new Blob([text], { type: "text/plain" });
    const link = el("a", {
      href: URL.createObjectURL(blob),
      download: `${this.store.state.canvas.name}.dag`,
    });
    link.click();
    URL.revokeObjectURL(link.href);
    this.store.update((s) => {
      s.canvas.dirty = false;
    });
  }

  private async importFile(file: File): Promise<void> {
    const text = await file.text();
    try {
      const parsed = await this.api.parse({ text });
      this.store.gate.invalidate();
      this.store.update((s) => {
        s.scenario = null;
        s.variant = null;
        s.expectations = [];
        s.scenarioGraphs = null;
        s.canvas = fromWire(parsed.graph, text);
        s.canvas.name = parsed.name;
      });
      this.badges = [];
      await refresh(this.api, this.store);
    } catch (err) {
      this.store.toast(describe(err), true);
    }
  }

  private async runSweep(): Promise<void> {
    const r0 = Number(byId<HTMLInputElement>("sweep-r0").value);
    const r1 = Number(byId<HTMLInputElement>("sweep-r1").value);
    const value = Number(byId<HTMLInputElement>("sweep-value").value);
    const scale = byId<HTMLSelectElement>("sweep-scale").value as "or" | "rr";
    if (!validRisk(r0) || !validRisk(r1)) {
      this.store.toast("untreated risks must lie strictly between 0 and 1", true);
      return;
    }
    if (!Number.isFinite(value) || value <= 0) {
      this.store.toast("the effect value must be positive", true);
      return;
    }
    try {
      const { points } = await this.api.sweep({ untreated: [r0, r1], scale, value, grid: 101 });
      this.lastSweep = { points, scale };
      this.render();
    } catch (err) {
      this.store.toast(describe(err), true);
    }
  }

  private addCurve(): void {
    const scale = byId<HTMLSelectElement>("labbe-scale").value as "or" | "rr";
    const value = Number(byId<HTMLInputElement>("labbe-value").value);
    if (!Number.isFinite(value) || value <= 0) {
      this.store.toast("curve value must be positive", true);
      return;
    }
    this.curves.push({ scale, value });
    this.render();
  }

  // --- Rendering ------------------------------------------------------------

  private render(): void {
    const s = this.store.state;
    this.renderCanvas(s.canvas);
    this.renderVerdicts(s.verdicts);
    this.renderDecision();
    this.renderBadges();
    this.renderAdjust();
    this.renderInspector();
    this.renderCharts();
    byId<HTMLTextAreaElement>("dsl-text").value = toDsl(s.canvas);
    byId<HTMLInputElement>("null-toggle").checked = s.nullHypothesis;
    byId("busy").classList.toggle("on", s.busy > 0);
    this.renderToast();
    this.fillPickers();
  }

  private renderToast(): void {
    const t = this.store.state.toast;
    const box = byId("toast");
    if (!t) {
      box.classList.remove("show");
      return;
    }
    box.textContent = t.message;
    box.classList.toggle("error", t.error);
    box.classList.add("show");
    window.clearTimeout(this.toastTimer);
    this.toastTimer = window.setTimeout(() => {
      box.classList.remove("show");
      this.store.state.toast = null;
    }, 4000);
  }

  private fillPickers(): void {
    const s = this.store.state;
    const covPicker = byId<HTMLSelectElement>("covariate-picker");
    const names = s.canvas.nodes
      .filter((n) => n.role === "covariate" && !n.latent)
      .map((n) => n.name);
    const existing = Array.from(covPicker.options).map((o) => o.value);
    if (existing.join(",") !== names.join(",")) {
      covPicker.textContent = "";
      for (const n of names) covPicker.append(el("option", { value: n }, n));
    }
    if (s.covariate && covPicker.value !== s.covariate) covPicker.value = s.covariate;
  }

  private renderCanvas(g: CanvasGraph): void {
    const svg = byId("canvas-svg");
    const parts: string[] = [
      `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" markerHeight="7" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z"/></marker></defs>`,
    ];
    for (const e of g.edges) {
      const a = node(g, e.tail)!;
      const b = node(g, e.head)!;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const len = Math.hypot(dx, dy) || 1;
      const sx = a.x + (dx / len) * NODE_R;
      const sy = a.y + (dy / len) * NODE_R;
      const tx = b.x - (dx / len) * (NODE_R + 4);
      const ty = b.y - (dy / len) * (NODE_R + 4);
      const selected =
        g.selected?.kind === "edge" && g.selected.tail === e.tail && g.selected.head === e.head;
      const hot = this.highlight.has(e.tail) && this.highlight.has(e.head);
      parts.push(
        `<g class="edge${e.dashed ? " dashed" : ""}${selected ? " selected" : ""}${hot ? " hot" : ""}" data-tail="${e.tail}" data-head="${e.head}">` +
          `<line x1="${sx}" y1="${sy}" x2="${tx}" y2="${ty}" class="edge-line" marker-end="url(#arrow)"/>` +
          `<line x1="${sx}" y1="${sy}" x2="${tx}" y2="${ty}" class="edge-hit"/>` +
          `</g>`,
      );
    }
    for (const n of g.nodes) {
      const selected = g.selected?.kind === "node" && g.selected.name === n.name;
      const hot = this.highlight.has(n.name);
      const stage = n.role === "selection" && n.stage !== null ? `<tspan class="stage-tag" dy="4" dx="1">${n.stage}</tspan>` : "";
      parts.push(
        `<g class="node role-${n.role}${n.latent ? " latent" : ""}${selected ? " selected" : ""}${hot ? " hot" : ""}" data-name="${n.name}" transform="translate(${n.x},${n.y})">` +
          `<circle r="${NODE_R}"/>` +
          `<text class="node-label" text-anchor="middle" dominant-baseline="middle">${n.name}${stage}</text>` +
          `</g>`,
      );
    }
    svg.innerHTML = parts.join("");
    this.bindCanvasEvents(svg);
  }

  private bindCanvasEvents(svg: HTMLElement): void {
    for (const group of Array.from(svg.querySelectorAll<SVGGElement>("g.node"))) {
      const name = group.dataset.name!;
      group.addEventListener("pointerdown", (ev) => this.nodePointerDown(name, ev));
    }
    for (const group of Array.from(svg.querySelectorAll<SVGGElement>("g.edge"))) {
      group.addEventListener("pointerdown", (ev) => {
        ev.stopPropagation();
        this.store.update((s) => {
          s.canvas.selected = { kind: "edge", tail: group.dataset.tail!, head: group.dataset.head! };
        });
      });
    }
    svg.addEventListener("pointerdown", (ev) => {
      if (ev.target === svg) {
        this.linking = null;
        this.store.update((s) => {
          s.canvas.selected = null;
        });
      }
    });
  }

  private nodePointerDown(name: string, ev: PointerEvent): void {
    ev.stopPropagation();
    if (this.linking && this.linking !== name) {
      const from = this.linking;
      this.linking = null;
      void editAndRefresh(this.api, this.store, (s) => {
        const res = addEdge(s.canvas, from, name);
        if (!res.ok) s.toast = { message: res.reason, error: true };
      });
      return;
    }
    const svg = byId("canvas-svg");
    const rect = svg.getBoundingClientRect();
    const start = { x: ev.clientX, y: ev.clientY };
    let moved = false;
    const move = (e: PointerEvent) => {
      const dx = e.clientX - start.x;
      const dy = e.clientY - start.y;
      if (!moved && Math.hypot(dx, dy) < 3) return;
      moved = true;
      // dragging only repositions; verdicts still describe the same graph
      this.store.update((s) => {
        const n = node(s.canvas, name);
        if (n) {
          n.x = Math.max(NODE_R, Math.min(rect.width - NODE_R, e.clientX - rect.left));
          n.y = Math.max(NODE_R, Math.min(rect.height - NODE_R, e.clientY - rect.top));
          s.canvas.dirty = true;
        }
      });
    };
    const up = () => {
      window.removeEventListener("pointermove", move);
      window.removeEventListener("pointerup", up);
      if (!moved) {
        this.store.update((s) => {
          s.canvas.selected = { kind: "node", name };
        });
      }
    };
    window.addEventListener("pointermove", move);
    window.addEventListener("pointerup", up);
  }

  private renderVerdicts(verdicts: Verdict[] | null): void {
    const box = byId("verdict-panel");
    box.textContent = "";
    if (!verdicts) {
      box.append(el("p", { class: "hint" }, "assign treatment, outcome, and selection roles to check the design"));
      return;
    }
    for (const v of verdicts) {
      const row = el("div", { class: `verdict ${v.holds ? "holds" : "fails"}` });
      const title = v.stage > 1 ? `${v.condition} (stage ${v.stage})` : v.condition;
      row.append(el("span", { class: "chip" }, v.holds ? "holds" : "fails"));
      row.append(el("span", { class: "verdict-name" }, title));
      row.append(el("span", { class: "conditioning" }, `given {${v.conditioning.join(",")}}`));
      if (v.certificate) {
        const cert = el("div", { class: "certificate" });
        cert.append(el("code", {}, v.certificate.trail));
        for (const r of v.certificate.reasons) {
          cert.append(el("div", { class: "reason" }, `${r.node}: ${r.reason}`));
        }
        row.append(cert);
        row.addEventListener("mouseenter", () => {
          this.highlight = new Set(v.certificate!.nodes.map(baseName));
          this.renderCanvas(this.store.state.canvas);
        });
        row.addEventListener("mouseleave", () => {
          this.highlight.clear();
          this.renderCanvas(this.store.state.canvas);
        });
      }
      box.append(row);
    }
  }

  private renderDecision(): void {
    const s = this.store.state;
    const box = byId("decision-panel");
    box.textContent = "";
    if (!s.decision) return;
    const d = s.decision;
    const badge = el(
      "span",
      { class: `chip big ${d.needs_adjustment ? "fails" : "holds"}`, id: "decision-badge" },
      d.needs_adjustment ? `adjust for ${d.covariate}` : "no adjustment needed",
    );
    box.append(badge);
    box.append(
      el(
        "div",
        { class: "decision-detail" },
        `${d.measure} for ${d.covariate}, ${d.hypothesis.null ? "under the null" : "off-null"}` +
          (d.hypothesis.no_em ? `, no effect modification on ${d.hypothesis.no_em}` : ""),
      ),
    );
    box.append(el("div", { class: "decision-detail" }, `identified: ${d.identified_target}`));
    const chain = el("div", { class: "equalities" });
    const names = ["marginal=conditional", "conditional=study", "study=crude"];
    d.equalities.forEach((ok, i) => {
      chain.append(el("span", { class: `chip ${ok ? "holds" : "fails"}` }, `${names[i]}: ${ok ? "yes" : "no"}`));
    });
    box.append(chain);
  }

  private renderBadges(): void {
    const box = byId("badge-panel");
    box.textContent = "";
    if (this.badges.length === 0) {
      box.append(el("p", { class: "hint" }, "load a scenario to compare against its vetted table"));
      return;
    }
    for (const b of this.badges) {
      const row = el("div", { class: `badge ${b.agree === false ? "disagree" : ""}` });
      row.append(el("span", { class: "badge-label" }, b.label));
      row.append(el("span", { class: `chip ${chipClass(b.expected)}` }, b.expected));
      if (b.computed !== null && b.computed !== b.expected) {
        row.append(el("span", { class: "chip fails" }, `computed: ${b.computed}`));
      }
      row.title = b.note;
      box.append(row);
    }
  }

  private renderAdjust(): void {
    const s = this.store.state;
    const box = byId("adjust-panel");
    box.textContent = "";
    const eligible = s.canvas.nodes.filter((n) => n.role === "covariate" && !n.latent);
    for (const n of eligible) {
      const active = s.adjust.includes(n.name);
      const chip = el("button", { class: `chip toggle ${active ? "on" : ""}` }, n.name);
      chip.addEventListener("click", () => {
        void editAndRefresh(this.api, this.store, (st) => {
          st.adjust = active ? st.adjust.filter((a) => a !== n.name) : [...st.adjust, n.name];
        });
      });
      box.append(chip);
    }
    if (s.adjustmentSets) {
      const text =
        s.adjustmentSets.length === 0
          ? "no measured set works"
          : s.adjustmentSets.map((set) => `{${set.join(",")}}`).join("  ");
      box.append(el("div", { class: "hint" }, `minimal sets: ${text}`));
    }
  }

  private renderInspector(): void {
    const s = this.store.state;
    const box = byId("inspector");
    box.textContent = "";
    const sel = s.canvas.selected;
    if (!sel) return;
    if (sel.kind === "edge") {
      box.append(el("div", { class: "inspector-title" }, `${sel.tail} -> ${sel.head}`));
      const dash = el("button", {}, "toggle dashed");
      dash.addEventListener("click", () => {
        void editAndRefresh(this.api, this.store, (st) => toggleDashed(st.canvas, sel.tail, sel.head));
      });
      const del = el("button", { class: "danger" }, "delete edge");
      del.addEventListener("click", () => {
        void editAndRefresh(this.api, this.store, (st) => removeEdge(st.canvas, sel.tail, sel.head));
      });
      box.append(dash, del);
      return;
    }
    const n = node(s.canvas, sel.name);
    if (!n) return;
    box.append(el("div", { class: "inspector-title" }, n.name));
    const nameInput = el("input", { value: n.name, class: "rename" }) as HTMLInputElement;
    nameInput.addEventListener("change", () => {
      void editAndRefresh(this.api, this.store, (st) => {
        const res = renameNode(st.canvas, sel.name, nameInput.value.trim());
        if (!res.ok) st.toast = { message: res.reason, error: true };
      });
    });
    box.append(nameInput);
    const rolePicker = el("select", {}) as HTMLSelectElement;
    for (const role of ["covariate", "treatment", "outcome", "selection"] as Role[]) {
      const opt = el("option", { value: role }, role);
      if (n.role === role) opt.selected = true;
      rolePicker.append(opt);
    }
    rolePicker.addEventListener("change", () => {
      void editAndRefresh(this.api, this.store, (st) => {
        const res = setRole(st.canvas, sel.name, rolePicker.value as Role);
        if (!res.ok) st.toast = { message: res.reason, error: true };
      });
    });
    box.append(rolePicker);
    const latentWrap = el("label", { class: "latent-toggle" });
    const latentBox = el("input", { type: "checkbox" }) as HTMLInputElement;
    latentBox.checked = n.latent;
    latentBox.addEventListener("change", () => {
      void editAndRefresh(this.api, this.store, (st) => {
        const res = setLatent(st.canvas, sel.name, latentBox.checked);
        if (!res.ok) st.toast = { message: res.reason, error: true };
      });
    });
    latentWrap.append(latentBox, document.createTextNode(" latent"));
    box.append(latentWrap);
    const del = el("button", { class: "danger" }, "delete node");
    del.addEventListener("click", () => {
      void editAndRefresh(this.api, this.store, (st) => removeNode(st.canvas, sel.name));
    });
    box.append(del);
  }

  private renderCharts(): void {
    const sweepBox = byId("sweep-chart");
    if (this.lastSweep) {
      const chart = sweepChart(this.lastSweep.points, this.lastSweep.scale);
      sweepBox.innerHTML = chart.svg;
      byId("sweep-readout").textContent =
        `minimum ${chart.min.label} at p=${fmt(chart.min.p)}, maximum ${chart.max.label} at p=${fmt(chart.max.p)}`;
      const svg = sweepBox.querySelector("svg")!;
      svg.addEventListener("pointermove", (ev) => {
        const rect = svg.getBoundingClientRect();
        const frac = ((ev.clientX - rect.left) / rect.width) * 460;
        const pt = chart.nearest(chart.pAt(frac));
        byId("sweep-hover").textContent =
          `p=${fmt(pt.p)}  or=${fmt(pt.or)}  rr=${fmt(pt.rr)}`;
      });
    }
    byId("labbe-chart").innerHTML = labbeChart(this.curves);
  }
}

function chipClass(value: string): string {
  if (value.startsWith("holds") || value.startsWith("no adjustment")) return "holds";
  if (value.startsWith("fails") || value.startsWith("adjust |") || value.startsWith("adjust ")) return "fails";
  return "";
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return err.span ? `${err.message} (line ${err.span.line})` : err.message;
  }
  return err instanceof Error ? err.message : String(err);
}
