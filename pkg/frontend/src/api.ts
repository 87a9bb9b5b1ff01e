/** Typed client for the workbench JSON API. All numbers rendered by the UI
 * come from these payloads; the client computes nothing itself. */

export type View = "dataset" | "model";

export interface WizardStep {
  step: string;
  done: boolean;
  fixed: boolean;
}

export interface SessionInfo {
  session: string;
  version: number;
  role?: string;
  steps?: WizardStep[];
}

export interface Overview {
  view: View;
  instances: number;
  acceptance_rate: number;
  target: string;
  positive_label: string;
  features: { name: string; kind: string; missing_count: number; derived?: boolean }[];
}

export interface GraphNode {
  feature: string;
  in_degree: number;
  out_degree: number;
  spd_range: number;
  sensitive: boolean;
  target: boolean;
  unfair: boolean;
  importance?: number;
}

export interface GraphEdge {
  src: string;
  dst: string;
  strength: number;
}

export interface GraphPayload {
  view: View;
  nodes: GraphNode[];
  edges: GraphEdge[];
  meta: Record<string, unknown>;
}

export interface MetricValue {
  kind: string;
  scope: string;
  value: number | null;
  defined: boolean;
  view: View;
  reason?: string | null;
}

export interface FeatureGroup {
  value: string;
  count: number;
  positive: number;
  rate: number | null;
  mean_confidence?: number | null;
}

export interface FeatureInfo {
  view: View;
  feature: string;
  kind: string;
  missing_count: number;
  in_degree: number;
  out_degree: number;
  sensitive: boolean;
  unfair: boolean;
  metrics: MetricValue[];
  groups: FeatureGroup[];
  overall_rate: number;
}

export interface RelationshipBar {
  value: string;
  total: number;
  parts: { value: string; count: number; pct: number }[];
}

export interface RelationshipInfo {
  view: View;
  src: string;
  dst: string;
  bars: RelationshipBar[];
}

export interface Card {
  id: string;
  constraints: { feature: string; value: string }[];
  count: number;
  rate: number | null;
  unfair: boolean;
}

export interface Prediction {
  row: number;
  p: number | null;
  label: string | null;
  confidence: number | null;
  defined: boolean;
}

export interface DatasetRow {
  id: number;
  values: Record<string, string | number | null>;
  prediction?: Prediction;
}

export interface DatasetPage {
  view: View;
  total: number;
  page: number;
  page_size: number;
  columns: string[];
  rows: DatasetRow[];
}

export interface ContributionItem {
  feature: string;
  value: string | number | null;
  contribution: number;
  sign: "positive" | "negative" | "zero";
  depth: number;
}

export interface ApplicationDetail {
  view: View;
  id: number;
  values: Record<string, string | number | null>;
  prediction?: Prediction;
  contributions?: {
    intercept: number;
    logit: number;
    items: ContributionItem[];
  } | null;
}

export interface ScatterPoint {
  id: number;
  sim: number;
  x: number;
  label: string | null;
  selected: boolean;
}

export interface ScatterPayload {
  view: View;
  selected: number;
  points: ScatterPoint[];
}

export interface CompareFeature {
  name: string;
  va: string | number | null;
  vb: string | number | null;
  score: number;
}

export interface ComparePayload {
  a: number;
  b: number;
  features: CompareFeature[];
}

export interface Job {
  id: string;
  kind: string;
  status: "queued" | "running" | "done" | "error";
  error: string | null;
}

export interface ApiError {
  code: string;
  message: string;
  detail?: { offset?: number; expected?: string[] } | null;
}

export class ApiRequestError extends Error {
  constructor(readonly status: number, readonly body: ApiError) {
    super(body.message);
  }
}

export type Filter = { feature: string; value: string };

const API = "/api/v1";

export class ApiClient {
  constructor(
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
    private readonly base: string = "",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.base + API + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiRequestError(response.status, payload as ApiError);
    }
    return payload as T;
  }

  createSession(role: string): Promise<SessionInfo> {
    return this.request("POST", "/sessions", { role });
  }

  wizardStatus(sid: string): Promise<SessionInfo & { ready: boolean }> {
    return this.request("GET", `/sessions/${sid}/wizard`);
  }

  setDataset(sid: string, body: { synth?: { seed: number; rows: number }; csv?: string }) {
    return this.request<SessionInfo>("PUT", `/sessions/${sid}/dataset`, body);
  }

  setTarget(sid: string, feature: string, positiveLabel: string) {
    return this.request<SessionInfo>("PUT", `/sessions/${sid}/target`, {
      feature,
      positive_label: positiveLabel,
    });
  }

  setModel(sid: string, family = "logistic") {
    return this.request<SessionInfo>("PUT", `/sessions/${sid}/model`, { family });
  }

  setSensitive(sid: string, features: Record<string, string[] | null>) {
    return this.request<SessionInfo>("PUT", `/sessions/${sid}/sensitive`, { features });
  }

  setMetrics(sid: string, kinds: string[]) {
    return this.request<SessionInfo>("PUT", `/sessions/${sid}/metrics`, { kinds });
  }

  addCustomMetric(sid: string, name: string, sourceText: string) {
    return this.request<SessionInfo>("POST", `/sessions/${sid}/metrics/custom`, {
      name,
      source_text: sourceText,
    });
  }

  computeGraph(sid: string): Promise<{ job: Job }> {
    return this.request("POST", `/sessions/${sid}/graph/compute`);
  }

  trainModel(sid: string, seed: number): Promise<{ job: Job }> {
    return this.request("POST", `/sessions/${sid}/model/train`, { seed });
  }

  jobStatus(jobId: string): Promise<{ job: Job }> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  overview(sid: string, view: View): Promise<Overview> {
    return this.request("GET", `/sessions/${sid}/overview?view=${view}`);
  }

  graph(sid: string, view: View, drill?: string[]): Promise<GraphPayload> {
    const drillPart = drill && drill.length ? `&drill=${encodeURIComponent(drill.join(","))}` : "";
    return this.request("GET", `/sessions/${sid}/graph?view=${view}${drillPart}`);
  }

  featureInfo(sid: string, feature: string, view: View): Promise<FeatureInfo> {
    return this.request("GET", `/sessions/${sid}/features/${encodeURIComponent(feature)}?view=${view}`);
  }

  relationship(sid: string, src: string, dst: string, view: View): Promise<RelationshipInfo> {
    return this.request(
      "GET",
      `/sessions/${sid}/relationship?src=${encodeURIComponent(src)}&dst=${encodeURIComponent(dst)}&view=${view}`,
    );
  }

  combinations(sid: string, view: View): Promise<{ cards: Card[] }> {
    return this.request("GET", `/sessions/${sid}/combinations?view=${view}`);
  }

  addCombination(sid: string, constraints: Filter[]) {
    return this.request<SessionInfo & { id: string }>("POST", `/sessions/${sid}/combinations`, {
      constraints,
    });
  }

  removeCombination(sid: string, comboId: string) {
    return this.request<SessionInfo>("DELETE", `/sessions/${sid}/combinations/${comboId}`);
  }

  datasetPage(
    sid: string,
    view: View,
    opts: { filters?: Filter[]; sort?: string; dir?: "asc" | "desc"; page?: number; pageSize?: number } = {},
  ): Promise<DatasetPage> {
    const params = new URLSearchParams({ view });
    if (opts.filters && opts.filters.length) params.set("filters", JSON.stringify(opts.filters));
    if (opts.sort) params.set("sort", opts.sort);
    if (opts.dir) params.set("dir", opts.dir);
    if (opts.page !== undefined) params.set("page", String(opts.page));
    if (opts.pageSize !== undefined) params.set("page_size", String(opts.pageSize));
    return this.request("GET", `/sessions/${sid}/dataset?${params.toString()}`);
  }

  application(sid: string, row: number, view: View): Promise<ApplicationDetail> {
    return this.request("GET", `/sessions/${sid}/applications/${row}?view=${view}`);
  }

  select(sid: string, row: number) {
    return this.request<SessionInfo>("POST", `/sessions/${sid}/select`, { row });
  }

  scatter(sid: string, selected: number, view: View): Promise<ScatterPayload> {
    return this.request("GET", `/sessions/${sid}/scatter?selected=${selected}&view=${view}`);
  }

  compare(sid: string, a: number, b: number): Promise<ComparePayload> {
    return this.request("GET", `/sessions/${sid}/compare?a=${a}&b=${b}`);
  }

  toggleSensitive(sid: string, feature: string, value: boolean) {
    return this.request<SessionInfo & { sensitive: string[] }>(
      "POST",
      `/sessions/${sid}/sensitive/toggle`,
      { feature, value },
    );
  }

  flagUnfair(sid: string, kind: "feature" | "subgroup", id: string, unfair: boolean) {
    return this.request<SessionInfo & { features: string[]; subgroups: string[] }>(
      "POST",
      `/sessions/${sid}/flags`,
      { kind, id, unfair },
    );
  }

  reportUrl(sid: string, format: "json" | "text" = "json"): string {
    return `${this.base}${API}/sessions/${sid}/report?format=${format}`;
  }
}
