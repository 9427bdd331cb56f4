/**
 * Typed client for the teaching service JSON API.
 *
 * One method per endpoint, nothing else: the console keeps no learning
 * state of its own, so every piece of truth shown on screen comes back
 * through these calls verbatim.
 */

export interface SessionEvent {
  iteration: number;
  event: "teach" | "ask" | "correct";
  label: string | null;
  predicted: string | null;
  correct: boolean | null;
  instance_id: string;
}

export interface Prediction {
  instance_id: string;
  label: string;
  log_scores: Record<string, number>;
}

export interface SessionState {
  id: string;
  categories: Record<string, number>;
  n_total: number;
  d: number | null;
  window_accuracy: number | null;
  last_prediction: Prediction | null;
  kb_digest: string;
  events: SessionEvent[];
}

export interface AskResult {
  prediction: Prediction;
  true_label: string | null;
  correct: boolean | null;
  window_accuracy: number | null;
  session: SessionState;
}

export interface Metrics {
  qci: number;
  alc: number;
  aic: number;
  gca: number;
  apa: number;
  window_accuracy: number | null;
}

export interface CatalogObject {
  id: string;
  label: string | null;
  points: number;
}

export interface ViewPayload {
  index: number;
  entropy_bits: number;
  grid: number[][];
}

export interface ViewsResponse {
  object_id: string;
  bins: number;
  plane_side: number;
  best: number;
  ranking: { view_index: number; entropy_bits: number }[];
  views: ViewPayload[];
}

export interface GraspBest {
  u: number;
  v: number;
  rotation_rad: number;
  width_m: number;
  quality: number;
}

export interface GraspResponse {
  object_id: string;
  view_index: number;
  entropies: number[];
  best: GraspBest;
  collision_free: boolean;
  plane_side: number;
  bins: number;
  map: { quality: number[][]; rotation: number[][]; width: number[][] };
}

/** Error payloads are flat `{code, message}` regardless of status. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.baseUrl + path, init);
    const payload = await res.json();
    if (!res.ok) {
      const code = typeof payload?.code === "string" ? payload.code : "error";
      const message = typeof payload?.message === "string" ? payload.message : res.statusText;
      throw new ApiError(res.status, code, message);
    }
    return payload as T;
  }

  createSession(options?: { smoothing?: number; window_factor?: number }): Promise<SessionState> {
    return this.request("POST", "/sessions", options ?? {});
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  getMetrics(sessionId: string): Promise<Metrics> {
    return this.request("GET", `/sessions/${sessionId}/metrics`);
  }

  teach(sessionId: string, label: string, instanceIds: string[]): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/teach`, {
      label,
      instance_ids: instanceIds,
    });
  }

  ask(sessionId: string, instanceId: string): Promise<AskResult> {
    return this.request("POST", `/sessions/${sessionId}/ask`, { instance_id: instanceId });
  }

  correct(sessionId: string, label: string, instanceId: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/correct`, {
      label,
      instance_id: instanceId,
    });
  }

  listObjects(): Promise<{ objects: CatalogObject[] }> {
    return this.request("GET", "/objects");
  }

  getViews(objectId: string): Promise<ViewsResponse> {
    return this.request("GET", `/objects/${objectId}/views`);
  }

  planGrasp(
    objectId: string,
    options?: { seed?: number; budget?: number; iters?: number },
  ): Promise<GraspResponse> {
    return this.request("POST", `/objects/${objectId}/grasp`, options ?? {});
  }
}
