/** Typed client for the session service HTTP+JSON API (schema v1). */

export type Answer = 1 | 0 | -1;

export interface TicketPoint {
  id: number;
  coords: number[];
}

export interface Ticket {
  ticket: number;
  x: TicketPoint;
  y: TicketPoint;
  progress: { iteration: number; k: number; phase: number; queries: number };
}

export interface DatasetPoint {
  id: number;
  coords: number[];
  label: number | null;
}

export interface DatasetView {
  v: number;
  dim: number;
  k: number;
  has_truth: boolean;
  points: DatasetPoint[];
}

export interface Snapshot {
  k: number;
  labels: Record<string, number>;
  centers: Record<string, number[]>;
  radii: Record<string, number | null>;
  iteration: number;
  phase: number;
  queries: number;
  failures: { kind: string; iteration: number }[];
  finished: boolean;
}

export interface StateView {
  v: number;
  status: string;
  snapshot: Snapshot;
  summary?: Record<string, unknown>;
}

export interface NextView {
  v: number;
  status: string;
  ticket?: Ticket | null;
  summary?: Record<string, unknown>;
}

export interface CreateResponse {
  v: number;
  id: string;
  status: string;
  n: number;
  k: number;
  ticket: Ticket | null;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await res.json();
  if (!res.ok) {
    throw new ApiError(res.status, String(body.error ?? res.statusText));
  }
  return body as T;
}

export interface CreateSessionBody {
  dataset: { text?: string; gen?: Record<string, number> };
  params: Record<string, unknown>;
  oracle: { kind: string; q?: number; nu?: number; rho?: number };
  allow_beta_probes?: boolean;
}

export class SessionApi {
  constructor(readonly base: string = "") {}

  createSession(body: CreateSessionBody): Promise<CreateResponse> {
    return request(this.base, "/sessions", { method: "POST", body: JSON.stringify(body) });
  }

  next(id: string): Promise<NextView> {
    return request(this.base, `/sessions/${id}/next`);
  }

  answer(id: string, ticket: number, answer: Answer): Promise<NextView> {
    return request(this.base, `/sessions/${id}/answer`, {
      method: "POST",
      body: JSON.stringify({ ticket, answer }),
    });
  }

  state(id: string): Promise<StateView> {
    return request(this.base, `/sessions/${id}/state`);
  }

  dataset(id: string): Promise<DatasetView> {
    return request(this.base, `/sessions/${id}/dataset`);
  }

  transcript(id: string): Promise<{ v: number; entries: { ticket: number; x: number; y: number; answer: number }[] }> {
    return request(this.base, `/sessions/${id}/transcript`);
  }
}
