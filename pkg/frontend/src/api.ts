// Thin fetch client for the telecare service. Network failures surface as
// OfflineError (so the UI can show an explicit offline state instead of a
// silent empty list); non-2xx responses as ApiError with the status code.

import type {
  AnalysisPayload,
  Annotation,
  AnnotationDraft,
  ManifestSlice,
  SessionRecordPayload,
} from './types.js';

export class OfflineError extends Error {
  constructor(message = 'service unreachable') {
    super(message);
    this.name = 'OfflineError';
  }
}

export class ApiError extends Error {
  status: number;
  constructor(status: number, detail: string) {
    super(detail);
    this.name = 'ApiError';
    this.status = status;
  }
}

export class ApiClient {
  baseUrl: string;
  // bearer token lives in memory only; never persisted
  token: string | null = null;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h['Content-Type'] = 'application/json';
    if (this.token) h['Authorization'] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new OfflineError(String(err));
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request('/api/v1/health');
  }

  listSessions(page = 1, pageSize = 10): Promise<ManifestSlice> {
    return this.request(`/api/v1/sessions?page=${page}&page_size=${pageSize}`, {
      headers: this.headers(false),
    });
  }

  getSession(id: string): Promise<SessionRecordPayload> {
    return this.request(`/api/v1/sessions/${encodeURIComponent(id)}`, {
      headers: this.headers(false),
    });
  }

  getAnalysis(id: string): Promise<AnalysisPayload> {
    return this.request(`/api/v1/sessions/${encodeURIComponent(id)}/analysis`, {
      headers: this.headers(false),
    });
  }

  postAnnotation(id: string, draft: AnnotationDraft): Promise<{ annotations: Annotation[] }> {
    return this.request(`/api/v1/sessions/${encodeURIComponent(id)}/annotations`, {
      method: 'POST',
      headers: this.headers(true),
      body: JSON.stringify(draft),
    });
  }
}

export function totalPages(total: number, pageSize: number): number {
  return Math.max(1, Math.ceil(total / pageSize));
}
