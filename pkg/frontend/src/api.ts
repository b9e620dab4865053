/** Thin fetch client for the seqaudit service.
 *
 * Every call either resolves with a parsed payload or throws; callers keep
 * their previous view model on failure, so a dropped connection never
 * corrupts on-screen state. 409 conflicts are surfaced as a typed result
 * carrying the server's current session view for refresh-and-retry.
 */

import type { ApiError, DesignDetail, DesignStatus, OcResponse, SessionView } from './types.js';

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: ApiError['detail'],
  ) {
    super(typeof detail === 'string' ? detail : JSON.stringify(detail));
  }
}

export type MutationResult =
  | { kind: 'ok'; view: SessionView }
  | { kind: 'conflict'; view: SessionView };

async function parseError(resp: Response): Promise<never> {
  let detail: ApiError['detail'] = resp.statusText;
  try {
    const body = (await resp.json()) as ApiError;
    if (body && body.detail !== undefined) detail = body.detail;
  } catch {
    // keep the status text
  }
  throw new ServiceError(resp.status, detail);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string = '',
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  async createDesign(config: Record<string, unknown>): Promise<string> {
    const body = await this.postJson<{ design_id: string }>('/designs', config);
    return body.design_id;
  }

  designStatus(designId: string): Promise<DesignStatus> {
    return this.getJson(`/designs/${designId}/status`);
  }

  designDetail(designId: string): Promise<DesignDetail> {
    return this.getJson(`/designs/${designId}`);
  }

  ocCurve(designId: string, reps: number, seed: number, grid = 'all'): Promise<OcResponse> {
    return this.getJson(`/designs/${designId}/oc?reps=${reps}&seed=${seed}&grid=${grid}`);
  }

  async createSession(designId: string): Promise<SessionView> {
    return this.postJson('/sessions', { design_id: designId });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.getJson(`/sessions/${sessionId}`);
  }

  /** observe/undo share the conflict contract: 409 returns the current view. */
  private async mutate(path: string, body: unknown): Promise<MutationResult> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (resp.status === 409) {
      return { kind: 'conflict', view: (await resp.json()) as SessionView };
    }
    if (!resp.ok) await parseError(resp);
    return { kind: 'ok', view: (await resp.json()) as SessionView };
  }

  observe(sessionId: string, x: 0 | 1, expectedSeq: number): Promise<MutationResult> {
    return this.mutate(`/sessions/${sessionId}/observe`, { x, expected_seq: expectedSeq });
  }

  undo(sessionId: string, expectedSeq: number): Promise<MutationResult> {
    return this.mutate(`/sessions/${sessionId}/undo`, { expected_seq: expectedSeq });
  }

  sessionExport(sessionId: string): Promise<Record<string, unknown>> {
    return this.getJson(`/sessions/${sessionId}/export`);
  }
}
