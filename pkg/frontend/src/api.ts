/** HTTP client for the case service.
 *
 * Every mutating call carries the version the client last saw as an
 * X-Expected-Version precondition; a 409 is surfaced as StaleVersionError so
 * the workbench can show a reload banner instead of silently overwriting.
 */

import type {
  CaseSummary,
  GraphExport,
  LinkPath,
  QueryHit,
  TimelineEvent,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class StaleVersionError extends ApiError {
  constructor(detail: string) {
    super(409, detail);
  }
}

async function fail(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  if (resp.status === 409) throw new StaleVersionError(detail);
  throw new ApiError(resp.status, detail);
}

export class CaseApi {
  constructor(
    private readonly baseUrl: string,
    private readonly caseId: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}/cases/${encodeURIComponent(this.caseId)}${path}`;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.url(path));
    if (!resp.ok) await fail(resp);
    return (await resp.json()) as T;
  }

  private async post<T>(
    path: string,
    expectedVersion?: number,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {
      "content-type": "application/json",
    };
    if (expectedVersion !== undefined) {
      headers["x-expected-version"] = String(expectedVersion);
    }
    const resp = await this.fetchImpl(this.url(path), {
      method: "POST",
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) await fail(resp);
    return (await resp.json()) as T;
  }

  summary(): Promise<CaseSummary> {
    return this.get("");
  }

  graph(): Promise<GraphExport> {
    return this.get("/graph");
  }

  timeline(window?: [number, number]): Promise<{ events: TimelineEvent[] }> {
    const query = window ? `?from=${window[0]}&to=${window[1]}` : "";
    return this.get(`/timeline${query}`);
  }

  confirmEdge(edgeId: string, expectedVersion: number) {
    return this.post<{ edge_id: string; status: string; version: number }>(
      `/edges/${edgeId}:confirm`,
      expectedVersion,
    );
  }

  rejectEdge(edgeId: string, expectedVersion: number) {
    return this.post<{ edge_id: string; status: string; version: number }>(
      `/edges/${edgeId}:reject`,
      expectedVersion,
    );
  }

  resetEdge(edgeId: string, expectedVersion: number) {
    return this.post<{ edge_id: string; status: string; version: number }>(
      `/edges/${edgeId}:reset`,
      expectedVersion,
    );
  }

  addManualEdge(attrA: string, attrB: string, note: string, expectedVersion: number) {
    return this.post<{ edge_id: string; status: string; version: number }>(
      "/edges",
      expectedVersion,
      { attr_a: attrA, attr_b: attrB, note },
    );
  }

  excludeNode(nodeId: string, expectedVersion: number) {
    return this.post<{ node_id: string; excluded: boolean; version: number }>(
      `/nodes/${nodeId}:exclude`,
      expectedVersion,
    );
  }

  includeNode(nodeId: string, expectedVersion: number) {
    return this.post<{ node_id: string; excluded: boolean; version: number }>(
      `/nodes/${nodeId}:include`,
      expectedVersion,
    );
  }

  query(kind: string, value: string): Promise<{ hits: QueryHit[] }> {
    const params = new URLSearchParams({ kind, value });
    return this.get(`/query?${params.toString()}`);
  }

  links(from: string, to: string, maxHops = 6): Promise<{ paths: LinkPath[] }> {
    const params = new URLSearchParams({ from, to, max_hops: String(maxHops) });
    return this.get(`/links?${params.toString()}`);
  }
}
