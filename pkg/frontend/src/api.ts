/** Typed client for the read-only analytics API.
 *
 * Every request the dashboard makes goes through here, and the URL builders
 * below are the complete list of endpoints it ever touches.
 */

import type { ViewState } from "./state.js";
import { comparePanes } from "./state.js";
import type {
  ApiErrorBody,
  CompareResponse,
  DocumentListResponse,
  ModelsResponse,
  RollupResponse,
  TopicsResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

function rollupParams(state: ViewState): URLSearchParams {
  const params = new URLSearchParams();
  params.set("model_id", state.modelId);
  params.set("from", state.from);
  params.set("to", state.to);
  params.set("bucket", state.bucket);
  if (state.persons.length > 0) params.set("persons", state.persons.join(","));
  if (state.parties.length > 0) params.set("parties", state.parties.join(","));
  if (state.platforms.length > 0) params.set("platforms", state.platforms.join(","));
  return params;
}

export function modelsUrl(base: string): string {
  return `${base}/api/models`;
}

export function topicsUrl(base: string, modelId: string): string {
  return `${base}/api/topics?${new URLSearchParams({ model_id: modelId })}`;
}

export function rollupUrl(base: string, state: ViewState, topicIds: number[] = []): string {
  const params = rollupParams(state);
  if (topicIds.length > 0) params.set("topics", topicIds.join(","));
  return `${base}/api/rollup?${params}`;
}

export function compareUrl(base: string, state: ViewState): string {
  const { left, right } = comparePanes(state);
  const params = new URLSearchParams({
    left: rollupParams(left).toString(),
    right: rollupParams(right).toString(),
  });
  return `${base}/api/compare?${params}`;
}

export function documentsUrl(
  base: string,
  state: ViewState,
  window: { from: string; to: string },
  topicIds: number[],
  limit = 20,
): string {
  const params = new URLSearchParams();
  params.set("model_id", state.modelId);
  params.set("from", window.from);
  params.set("to", window.to);
  if (topicIds.length > 0) params.set("topics", topicIds.join(","));
  if (state.persons.length > 0) params.set("persons", state.persons.join(","));
  if (state.parties.length > 0) params.set("parties", state.parties.join(","));
  if (state.platforms.length > 0) params.set("platforms", state.platforms.join(","));
  params.set("limit", String(limit));
  return `${base}/api/documents?${params}`;
}

export type FetchLike = (url: string) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string,
    private fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  private async get<T>(url: string): Promise<T> {
    const response = await this.fetchFn(url);
    if (!response.ok) {
      let body: ApiErrorBody;
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        body = { code: "http_error", message: `status ${response.status}` };
      }
      throw new ApiError(response.status, body);
    }
    return (await response.json()) as T;
  }

  models(): Promise<ModelsResponse> {
    return this.get(modelsUrl(this.base));
  }

  topics(modelId: string): Promise<TopicsResponse> {
    return this.get(topicsUrl(this.base, modelId));
  }

  rollup(state: ViewState, topicIds: number[] = []): Promise<RollupResponse> {
    return this.get(rollupUrl(this.base, state, topicIds));
  }

  compare(state: ViewState): Promise<CompareResponse> {
    return this.get(compareUrl(this.base, state));
  }

  documents(
    state: ViewState,
    window: { from: string; to: string },
    topicIds: number[],
    limit = 20,
  ): Promise<DocumentListResponse> {
    return this.get(documentsUrl(this.base, state, window, topicIds, limit));
  }
}
