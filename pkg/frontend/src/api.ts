/** Typed client for the review service HTTP API; the UI's only data source. */

export interface CxnSummary {
  cxn_id: number;
  name: string;
  function: string;
  vertical_links: number[];
  horizontal_links: number[];
  missing_links: number[];
}

export interface CxnDetail extends CxnSummary {
  conll_c: string;
  required_ids: string[];
  optional_ids: string[];
  queries: string[];
}

export interface BoundToken {
  label: string;
  index: number;
  form: string;
  lemma: string;
  upos: string;
  deprel: string;
  head: number;
  start: number | null;
  end: number | null;
}

export type CandidateStatus = "pending" | "accepted" | "rejected";

export interface CandidateView {
  candidate_id: string;
  cxn_id: number;
  cxn_name: string;
  function: string;
  sent_id: string;
  source: string | null;
  text: string;
  status: CandidateStatus;
  binding: Record<string, number>;
  tokens: BoundToken[];
}

export interface CandidatePage {
  total: number;
  page: number;
  page_size: number;
  items: CandidateView[];
}

export type Verdict = "accepted" | "rejected";

export interface DecisionRequest {
  verdict: Verdict;
  reviewer: string;
  note?: string | null;
  expected_status?: CandidateStatus;
}

export interface DecisionResponse {
  candidate_id: string;
  verdict: Verdict;
  reviewer: string;
  timestamp: string;
  note: string | null;
}

export interface StatsRow {
  cxn_id: number;
  pending: number;
  accepted: number;
  rejected: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  listCxns(): Promise<CxnSummary[]> {
    return this.request("/cxns");
  }

  getCxn(cxnId: number): Promise<CxnDetail> {
    return this.request(`/cxns/${cxnId}`);
  }

  listCandidates(
    cxnId: number,
    status?: CandidateStatus,
    page = 1,
    pageSize = 20,
  ): Promise<CandidatePage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (status) params.set("status", status);
    return this.request(`/cxns/${cxnId}/candidates?${params}`);
  }

  postDecision(candidateId: string, body: DecisionRequest): Promise<DecisionResponse> {
    return this.request(`/candidates/${candidateId}/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getStats(): Promise<StatsRow[]> {
    return this.request("/stats");
  }
}
