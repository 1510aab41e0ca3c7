import type {
  DecisionRecord,
  Explanation,
  ExplainRequest,
  MemeEntry,
  ModelInfo,
  PrototypeSetReport,
  Verdict,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    const body = await res.json().catch(() => null);
    if (!res.ok) {
      const message =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: { message: string } }).error.message)
          : `${res.status} ${res.statusText}`;
      throw new ApiError(res.status, message);
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  models(): Promise<ModelInfo[]> {
    return this.request("/api/models");
  }

  meme(id: string, task?: string): Promise<MemeEntry> {
    const qs = task ? `?task=${encodeURIComponent(task)}` : "";
    return this.request(`/api/memes/${encodeURIComponent(id)}${qs}`);
  }

  explain(req: ExplainRequest): Promise<Explanation> {
    return this.request("/api/explain", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  prototypes(task: string, model: string, label?: string): Promise<PrototypeSetReport[]> {
    const qs = new URLSearchParams({ task, model });
    if (label) qs.set("label", label);
    return this.request(`/api/prototypes?${qs.toString()}`);
  }

  submitDecision(meme_id: string, verdict: Verdict, note = ""): Promise<DecisionRecord> {
    return this.request("/api/decisions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ meme_id, verdict, note }),
    });
  }
}
