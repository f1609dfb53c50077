/** Thin client for the gateway JSON API. The dashboard performs no
 * business logic of its own: every state change happens server-side. */

export interface CandidateFields {
  name: string | null;
  url: string | null;
  version: string | null;
  publisher: string | null;
}

export interface PendingRecord {
  record_id: string;
  paper_id: string;
  paper_title: string;
  state: string;
  sentence: string;
  candidate: CandidateFields;
}

export interface MentionSpan {
  component: string;
  start_byte: number;
  end_byte: number;
  surface: string;
}

export interface ValidationView {
  record_id: string;
  paper_id: string;
  paper_title: string;
  sentence: string;
  mentions: MentionSpan[];
  candidate: CandidateFields;
}

export interface DecisionResult {
  record_id: string;
  state: string;
}

export type Amendments = { name?: string; url?: string; version?: string };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${status} ${code}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let code = "http_error";
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { code?: string; detail?: string };
      code = body.code ?? code;
      detail = body.detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, code, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  getPending(): Promise<PendingRecord[]> {
    return request(`${this.baseUrl}/api/pending`);
  }

  managerApprove(recordId: string): Promise<DecisionResult> {
    return request(`${this.baseUrl}/api/records/${recordId}/manager-approve`, {
      method: "POST",
    });
  }

  managerReject(recordId: string): Promise<DecisionResult> {
    return request(`${this.baseUrl}/api/records/${recordId}/manager-reject`, {
      method: "POST",
    });
  }

  getValidation(token: string): Promise<ValidationView> {
    return request(`${this.baseUrl}/api/validate/${token}`);
  }

  submitDecision(
    token: string,
    decision: "confirm" | "amend" | "reject",
    amendments?: Amendments,
  ): Promise<DecisionResult> {
    return request(`${this.baseUrl}/api/validate/${token}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(amendments ? { decision, amendments } : { decision }),
    });
  }
}
