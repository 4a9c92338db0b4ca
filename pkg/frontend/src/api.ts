// Typed fetch client for the retrieval service. The fetch function is
// injectable so tests can run against a mock without a server.

import type {
  HealthInfo,
  NodeInfo,
  SearchRequest,
  SearchResponse,
  TagPrediction,
  ThumbnailMap,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    if (body && typeof body.error === "string") return body.error;
  } catch {
    // not JSON; fall through
  }
  return `HTTP ${response.status}`;
}

export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) throw new ApiError(response.status, await errorMessage(response));
    return (await response.json()) as T;
  }

  async search(request: SearchRequest): Promise<SearchResponse> {
    const response = await this.fetchFn(this.baseUrl + "/api/v1/search", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) throw new ApiError(response.status, await errorMessage(response));
    return (await response.json()) as SearchResponse;
  }

  async predictTags(imageKey: string, k = 5): Promise<TagPrediction[]> {
    const query = `?image_key=${encodeURIComponent(imageKey)}&k=${k}`;
    const body = await this.get<{ tags: TagPrediction[] }>(
      "/api/v1/tags/predict" + query);
    return body.tags;
  }

  async node(key: string): Promise<NodeInfo> {
    return this.get<NodeInfo>(`/api/v1/nodes/${encodeURIComponent(key)}`);
  }

  async health(): Promise<HealthInfo> {
    return this.get<HealthInfo>("/api/v1/health");
  }

  /** Static key -> URL mapping; missing file just means placeholders. */
  async thumbnails(): Promise<ThumbnailMap> {
    try {
      const response = await this.fetchFn(this.baseUrl + "/ui/thumbnails.json");
      if (!response.ok) return {};
      return (await response.json()) as ThumbnailMap;
    } catch {
      return {};
    }
  }
}
