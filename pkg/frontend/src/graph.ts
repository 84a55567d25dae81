// Editable canvas model of a study-design DAG. The editor keeps illegal
// states unrepresentable: names stay identifiers, edges stay acyclic, the
// treatment never descends from the outcome, and at most one node holds the
// treatment or outcome role. Because of that the model serializes to valid
// DSL text at all times; node positions ride along as comment lines the
// parser ignores.

import type { WireGraph, WireNode } from "./api.js";

export type Role = "covariate" | "treatment" | "outcome" | "selection";

export interface CanvasNode {
  name: string;
  x: number;
  y: number;
  role: Role;
  stage: number | null;
  latent: boolean;
}

export interface CanvasEdge {
  tail: string;
  head: string;
  dashed: boolean;
}

export interface CanvasMatching {
  selection: string;
  matchOn: string;
  across: string;
}

export type Selection =
  | { kind: "node"; name: string }
  | { kind: "edge"; tail: string; head: string }
  | null;

export interface CanvasGraph {
  name: string;
  nodes: CanvasNode[];
  edges: CanvasEdge[];
  matchings: CanvasMatching[];
  selected: Selection;
  dirty: boolean;
}

export type EditResult = { ok: true } | { ok: false; reason: string };

const NAME_RE = /^[A-Za-z_][A-Za-z0-9_]*$/;

export function emptyGraph(name = "untitled"): CanvasGraph {
  return { name, nodes: [], edges: [], matchings: [], selected: null, dirty: false };
}

export function node(g: CanvasGraph, name: string): CanvasNode | undefined {
  return g.nodes.find((n) => n.name === name);
}

function hasEdge(g: CanvasGraph, tail: string, head: string): boolean {
  return g.edges.some((e) => e.tail === tail && e.head === head);
}

function descendantsOf(g: CanvasGraph, start: string): Set<string> {
  const out = new Set<string>();
  const stack = [start];
  while (stack.length) {
    const cur = stack.pop()!;
    for (const e of g.edges) {
      if (e.tail === cur && !out.has(e.head)) {
        out.add(e.head);
        stack.push(e.head);
      }
    }
  }
  return out;
}

// --- Edits --------------------------------------------------------------

export function addNode(g: CanvasGraph, x: number, y: number): string {
  let i = 1;
  let name = "N1";
  while (node(g, name)) {
    i += 1;
    name = `N${i}`;
  }
  g.nodes.push({ name, x, y, role: "covariate", stage: null, latent: false });
  g.dirty = true;
  return name;
}

export function renameNode(g: CanvasGraph, from: string, to: string): EditResult {
  if (!NAME_RE.test(to)) return { ok: false, reason: `'${to}' is not a valid name` };
  if (from === to) return { ok: true };
  if (node(g, to)) return { ok: false, reason: `a node named '${to}' already exists` };
  const n = node(g, from);
  if (!n) return { ok: false, reason: `no node named '${from}'` };
  n.name = to;
  for (const e of g.edges) {
    if (e.tail === from) e.tail = to;
    if (e.head === from) e.head = to;
  }
  for (const m of g.matchings) {
    if (m.selection === from) m.selection = to;
    if (m.matchOn === from) m.matchOn = to;
    if (m.across === from) m.across = to;
  }
  if (g.selected?.kind === "node" && g.selected.name === from) {
    g.selected = { kind: "node", name: to };
  }
  g.dirty = true;
  return { ok: true };
}

export function addEdge(g: CanvasGraph, tail: string, head: string): EditResult {
  if (tail === head) return { ok: false, reason: "a node cannot cause itself" };
  if (!node(g, tail) || !node(g, head)) return { ok: false, reason: "unknown node" };
  if (hasEdge(g, tail, head)) return { ok: false, reason: "edge already present" };
  if (descendantsOf(g, head).has(tail)) {
    return { ok: false, reason: `${tail} -> ${head} would close a directed cycle` };
  }
  // mirror of the service's semantic rule, caught locally so the editor
  // can explain the rejection before any request goes out
  const x = g.nodes.find((n) => n.role === "treatment");
  const d = g.nodes.find((n) => n.role === "outcome");
  if (x && d) {
    const fromOutcome = descendantsOf(g, d.name);
    fromOutcome.add(d.name);
    const pastHead = descendantsOf(g, head);
    pastHead.add(head);
    if (fromOutcome.has(tail) && pastHead.has(x.name)) {
      return { ok: false, reason: "the treatment cannot descend from the outcome" };
    }
  }
  g.edges.push({ tail, head, dashed: false });
  g.dirty = true;
  return { ok: true };
}

export function removeEdge(g: CanvasGraph, tail: string, head: string): void {
  g.edges = g.edges.filter((e) => !(e.tail === tail && e.head === head));
  if (g.selected?.kind === "edge" && g.selected.tail === tail && g.selected.head === head) {
    g.selected = null;
  }
  g.dirty = true;
}

export function removeNode(g: CanvasGraph, name: string): void {
  g.nodes = g.nodes.filter((n) => n.name !== name);
  g.edges = g.edges.filter((e) => e.tail !== name && e.head !== name);
  g.matchings = g.matchings.filter(
    (m) => m.selection !== name && m.matchOn !== name && m.across !== name,
  );
  if (g.selected?.kind === "node" && g.selected.name === name) g.selected = null;
  g.dirty = true;
}

export function toggleDashed(g: CanvasGraph, tail: string, head: string): void {
  const e = g.edges.find((e) => e.tail === tail && e.head === head);
  if (e) {
    e.dashed = !e.dashed;
    g.dirty = true;
  }
}

export function setRole(g: CanvasGraph, name: string, role: Role): EditResult {
  const n = node(g, name);
  if (!n) return { ok: false, reason: `no node named '${name}'` };
  if (role === "treatment" || role === "outcome") {
    // only one of each; demote the previous holder instead of erroring
    const other = role === "treatment" ? "outcome" : "treatment";
    const counterpart = g.nodes.find((c) => c.role === other);
    if (counterpart) {
      const down = descendantsOf(
        g,
        role === "treatment" ? counterpart.name : name,
      );
      const target = role === "treatment" ? name : counterpart.name;
      if (down.has(target)) {
        return { ok: false, reason: "the treatment cannot descend from the outcome" };
      }
    }
    for (const c of g.nodes) {
      if (c.role === role && c.name !== name) c.role = "covariate";
    }
  }
  if (n.role === "selection" && role !== "selection") {
    g.matchings = g.matchings.filter((m) => m.selection !== name);
    n.stage = null;
  }
  n.role = role;
  if (role === "selection" && n.stage === null) n.stage = nextStage(g, name);
  if (role !== "covariate") n.latent = false;
  g.dirty = true;
  return { ok: true };
}

function nextStage(g: CanvasGraph, except: string): number {
  let top = 0;
  for (const n of g.nodes) {
    if (n.role === "selection" && n.name !== except && n.stage !== null) {
      top = Math.max(top, n.stage);
    }
  }
  return top + 1;
}

export function setLatent(g: CanvasGraph, name: string, latent: boolean): EditResult {
  const n = node(g, name);
  if (!n) return { ok: false, reason: `no node named '${name}'` };
  if (latent && n.role !== "covariate") {
    return { ok: false, reason: "only covariates can be latent" };
  }
  n.latent = latent;
  g.dirty = true;
  return { ok: true };
}

// --- Wire and DSL -------------------------------------------------------

export function fromWire(wire: WireGraph, sourceText?: string): CanvasGraph {
  const g = emptyGraph(wire.name ?? "untitled");
  for (const n of wire.nodes) {
    g.nodes.push({
      name: n.name,
      x: 0,
      y: 0,
      role: n.role as Role,
      stage: n.stage ?? null,
      latent: n.latent ?? false,
    });
  }
  for (const e of wire.edges) {
    g.edges.push({ tail: e.tail, head: e.head, dashed: e.dashed });
  }
  for (const m of wire.matchings ?? []) {
    g.matchings.push({ selection: m.selection, matchOn: m.match_on, across: m.across });
  }
  const saved = sourceText ? positionComments(sourceText) : new Map();
  if (saved.size > 0) {
    for (const n of g.nodes) {
      const p = saved.get(n.name);
      if (p) {
        n.x = p.x;
        n.y = p.y;
      }
    }
  } else {
    layeredLayout(g);
  }
  return g;
}

export function toWire(g: CanvasGraph): WireGraph {
  const nodes: WireNode[] = g.nodes.map((n) => {
    const out: WireNode = { name: n.name, role: n.role };
    if (n.stage !== null) out.stage = n.stage;
    if (n.latent) out.latent = true;
    return out;
  });
  const wire: WireGraph = {
    name: g.name,
    nodes,
    edges: g.edges.map((e) => ({ tail: e.tail, head: e.head, dashed: e.dashed })),
  };
  if (g.matchings.length > 0) {
    wire.matchings = g.matchings.map((m) => ({
      selection: m.selection,
      match_on: m.matchOn,
      across: m.across,
    }));
  }
  return wire;
}

export function toDsl(g: CanvasGraph): string {
  const lines: string[] = [`dag ${g.name} {`];
  for (const n of g.nodes) {
    lines.push(`  # pos: ${n.name} ${Math.round(n.x)} ${Math.round(n.y)}`);
  }
  for (const n of g.nodes) {
    const attrs: string[] = [];
    if (n.role !== "covariate") attrs.push(`role=${n.role}`);
    if (n.stage !== null) attrs.push(`stage=${n.stage}`);
    const m = g.matchings.find((m) => m.selection === n.name);
    if (m) attrs.push(`match=${m.matchOn}`, `across=${m.across}`);
    if (n.latent) attrs.push("latent");
    lines.push(attrs.length ? `  ${n.name} [${attrs.join(", ")}];` : `  ${n.name};`);
  }
  for (const e of g.edges) {
    lines.push(
      e.dashed ? `  ${e.tail} -> ${e.head} [dashed];` : `  ${e.tail} -> ${e.head};`,
    );
  }
  lines.push("}");
  return lines.join("\n") + "\n";
}

// `# pos: NAME X Y` lines written by toDsl; unknown comments pass through
export function positionComments(text: string): Map<string, { x: number; y: number }> {
  const out = new Map<string, { x: number; y: number }>();
  const re = /^\s*#\s*pos:\s*([A-Za-z_][A-Za-z0-9_]*)\s+(-?\d+)\s+(-?\d+)\s*$/gm;
  let m: RegExpExecArray | null;
  while ((m = re.exec(text)) !== null) {
    out.set(m[1]!, { x: Number(m[2]), y: Number(m[3]) });
  }
  return out;
}

// --- Layout and comparison ----------------------------------------------

const LAYER_W = 150;
const ROW_H = 90;
const MARGIN = 70;

// longest-path layering: roots in column 0, every edge points rightward
export function layeredLayout(g: CanvasGraph): void {
  const depth = new Map<string, number>();
  const visit = (name: string, seen: Set<string>): number => {
    const cached = depth.get(name);
    if (cached !== undefined) return cached;
    if (seen.has(name)) return 0;
    seen.add(name);
    let d = 0;
    for (const e of g.edges) {
      if (e.head === name) d = Math.max(d, visit(e.tail, seen) + 1);
    }
    depth.set(name, d);
    return d;
  };
  for (const n of g.nodes) visit(n.name, new Set());
  const rows = new Map<number, number>();
  for (const n of g.nodes) {
    const col = depth.get(n.name) ?? 0;
    const row = rows.get(col) ?? 0;
    rows.set(col, row + 1);
    n.x = MARGIN + col * LAYER_W;
    n.y = MARGIN + row * ROW_H;
  }
}

// same structure, ignoring positions, selection, and node order
export function isomorphic(a: CanvasGraph, b: CanvasGraph): boolean {
  if (a.nodes.length !== b.nodes.length || a.edges.length !== b.edges.length) {
    return false;
  }
  for (const n of a.nodes) {
    const twin = node(b, n.name);
    if (!twin) return false;
    if (twin.role !== n.role || twin.stage !== n.stage || twin.latent !== n.latent) {
      return false;
    }
  }
  for (const e of a.edges) {
    const twin = b.edges.find((f) => f.tail === e.tail && f.head === e.head);
    if (!twin || twin.dashed !== e.dashed) return false;
  }
  const key = (m: CanvasMatching) => `${m.selection}|${m.matchOn}|${m.across}`;
  const am = a.matchings.map(key).sort();
  const bm = b.matchings.map(key).sort();
  return am.length === bm.length && am.every((k, i) => k === bm[i]);
}
