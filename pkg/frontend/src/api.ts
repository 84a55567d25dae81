// Typed client for the swigcheck JSON service. Every call unwraps the
// {schema_version, ok, result|error} envelope; failures of any kind surface
// as ApiError so the UI has a single error path.

// --- Wire types ---------------------------------------------------------

export interface Span {
  line: number;
  column: number;
}

export interface WireNode {
  name: string;
  role: string;
  stage?: number;
  latent?: boolean;
}

export interface WireEdge {
  tail: string;
  head: string;
  dashed: boolean;
}

export interface WireMatching {
  selection: string;
  match_on: string;
  across: string;
}

export interface WireGraph {
  name?: string;
  nodes: WireNode[];
  edges: WireEdge[];
  matchings?: WireMatching[];
}

export interface ParseResult {
  name: string;
  graph: WireGraph;
  warnings: string[];
  text: string;
  dot: string;
  model: unknown;
}

export interface CertificateReason {
  node: string;
  reason: string;
}

export interface Certificate {
  nodes: string[];
  trail: string;
  open: boolean;
  reasons: CertificateReason[];
}

export interface Verdict {
  condition: string;
  stage: number;
  holds: boolean;
  adjust: string[];
  conditioning: string[];
  certificate: Certificate | null;
}

export interface Hypothesis {
  null: boolean;
  no_em: string | null;
}

export interface Decision {
  covariate: string;
  measure: string;
  hypothesis: Hypothesis;
  equalities: boolean[];
  needs_adjustment: boolean;
  identified_target: string;
  confounded_marginal: boolean;
  selection_ignorable: boolean;
}

export interface SweepPoint {
  p: number;
  or: number;
  rr: number;
  or_null: number;
  rr_null: number;
}

export interface ScenarioEntry {
  id: string;
  title: string;
  summary: string;
  variants: string[];
}

// Expectation rows are a tagged union on `kind`; the kind-specific fields
// (adjust, stage, covariate, scale, hypothesis, require) stay optional so
// one type covers the whole table.
export interface Expectation {
  scenario: string;
  kind: string;
  expected: {
    holds?: boolean;
    needs?: boolean;
    target?: string;
    sets?: string[][];
  };
  note: string;
  variant?: string;
  adjust?: string[];
  stage?: number;
  include_earlier_stages?: boolean;
  covariate?: string;
  scale?: string;
  hypothesis?: Hypothesis;
  require?: string[];
}

export interface ScenarioDocument {
  name: string;
  graph: WireGraph;
  has_model: boolean;
  text: string;
  dot: string;
}

export interface ScenarioDetail {
  id: string;
  title: string;
  summary: string;
  variants: string[];
  document: ScenarioDocument;
  variant_documents: Record<string, ScenarioDocument>;
  selected: ScenarioDocument;
  expectations: Expectation[];
}

// --- Requests -----------------------------------------------------------

export type GraphPayload = { text: string } | { graph: WireGraph };

export interface CheckRequest {
  condition?: "all" | "exchangeability" | "cohort" | "casecontrol";
  adjust?: string[];
  stage?: number;
  include_earlier_stages?: boolean;
  null?: boolean;
  treatment?: string;
  outcome?: string;
  selection?: string;
}

export interface DecideRequest {
  covariate: string;
  measure: string;
  null?: boolean;
  no_em?: string;
}

export interface SweepRequest {
  untreated: [number, number];
  scale: "or" | "rr";
  value: number;
  grid?: number;
}

// --- Client -------------------------------------------------------------

// the slice of the client that verdict plumbing needs; tests stub this
export interface AnalysisClient {
  check(
    payload: GraphPayload,
    req?: CheckRequest,
  ): Promise<{ verdicts: Verdict[]; raw: string }>;
  decide(
    payload: GraphPayload,
    req: DecideRequest,
  ): Promise<{ decision: Decision; raw: string }>;
  adjust(
    payload: GraphPayload,
    require?: string[],
    useNull?: boolean,
  ): Promise<{ require: string[]; sets: string[][] }>;
}

// everything the workbench touches; Api satisfies it, tests can stub it
export interface WorkbenchApi extends AnalysisClient {
  parse(payload: GraphPayload): Promise<ParseResult>;
  sweep(req: SweepRequest): Promise<{ points: SweepPoint[] }>;
  scenarios(): Promise<{ scenarios: ScenarioEntry[] }>;
  scenario(id: string, variant?: string): Promise<ScenarioDetail>;
}

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
    public span?: Span,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

interface Envelope {
  schema_version: string;
  ok: boolean;
  result?: unknown;
  error?: { code: string; message: string; span?: Span };
}

export class Api {
  constructor(public base: string = "") {}

  async parse(payload: GraphPayload): Promise<ParseResult> {
    return this.post("/v1/parse", payload);
  }

  async check(
    payload: GraphPayload,
    req: CheckRequest = {},
  ): Promise<{ verdicts: Verdict[]; raw: string }> {
    const body = await this.postRaw("/v1/check", { ...payload, ...req });
    const result = unwrap(body.text, body.status);
    // keep the raw result text alongside: badges render what the service
    // said, never a local recomputation
    return {
      verdicts: (result as { verdicts: Verdict[] }).verdicts,
      raw: JSON.stringify((result as { verdicts: Verdict[] }).verdicts),
    };
  }

  async adjust(
    payload: GraphPayload,
    require?: string[],
    useNull?: boolean,
  ): Promise<{ require: string[]; sets: string[][] }> {
    const body: Record<string, unknown> = { ...payload };
    if (require) body.require = require;
    if (useNull) body.null = true;
    return this.post("/v1/adjust", body);
  }

  async decide(
    payload: GraphPayload,
    req: DecideRequest,
  ): Promise<{ decision: Decision; raw: string }> {
    const body = await this.postRaw("/v1/decide", { ...payload, ...req });
    const result = unwrap(body.text, body.status) as { decision: Decision };
    return { decision: result.decision, raw: JSON.stringify(result.decision) };
  }

  async sweep(req: SweepRequest): Promise<{ points: SweepPoint[] }> {
    return this.post("/v1/sweep", req);
  }

  async scenarios(): Promise<{ scenarios: ScenarioEntry[] }> {
    return this.get("/v1/scenarios");
  }

  async scenario(id: string, variant?: string): Promise<ScenarioDetail> {
    const q = variant ? `?variant=${encodeURIComponent(variant)}` : "";
    return this.get(`/v1/scenarios/${encodeURIComponent(id)}${q}`);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const raw = await this.postRaw(path, body);
    return unwrap(raw.text, raw.status) as T;
  }

  private async postRaw(
    path: string,
    body: unknown,
  ): Promise<{ text: string; status: number }> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("network", String(err), 0);
    }
    return { text: await resp.text(), status: resp.status };
  }

  private async get<T>(path: string): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path);
    } catch (err) {
      throw new ApiError("network", String(err), 0);
    }
    return unwrap(await resp.text(), resp.status) as T;
  }
}

function unwrap(text: string, status: number): unknown {
  let envelope: Envelope;
  try {
    envelope = JSON.parse(text) as Envelope;
  } catch {
    throw new ApiError("bad_envelope", `not a JSON envelope (${status})`, status);
  }
  if (!envelope.ok || envelope.result === undefined) {
    const err = envelope.error ?? { code: "unknown", message: "no error body" };
    throw new ApiError(err.code, err.message, status, err.span);
  }
  return envelope.result;
}
