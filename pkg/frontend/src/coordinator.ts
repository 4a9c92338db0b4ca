// One search pipeline per result pane: debounces bursts (slider drags) into
// a single request and discards responses that arrive for anything but the
// most recently issued request, so the grid always reflects the latest
// user state no matter the network ordering.

import type { ApiClient } from "./api.js";
import { debounce } from "./debounce.js";
import type { SearchRequest, SearchResponse } from "./types.js";

export interface SearchOutcome {
  requestId: number;
  request: SearchRequest;
  response?: SearchResponse;
  error?: Error;
}

export const DEFAULT_DEBOUNCE_MS = 150;

export class SearchCoordinator {
  private nextId = 0;
  private latestIssued = 0;
  private debounced: ReturnType<typeof debounce<[SearchRequest]>>;

  constructor(
    private client: ApiClient,
    private onOutcome: (outcome: SearchOutcome) => void,
    debounceMs: number = DEFAULT_DEBOUNCE_MS,
  ) {
    this.debounced = debounce((request: SearchRequest) => {
      void this.issue(request);
    }, debounceMs);
  }

  /** Debounced entry point (slider drags, typing). */
  request(request: SearchRequest): void {
    this.debounced(request);
  }

  /** Immediate entry point (explicit submit); cancels any pending burst. */
  requestNow(request: SearchRequest): void {
    this.debounced.cancel();
    void this.issue(request);
  }

  private async issue(request: SearchRequest): Promise<void> {
    const id = ++this.nextId;
    this.latestIssued = id;
    try {
      const response = await this.client.search(request);
      if (id !== this.latestIssued) return; // stale: a newer request exists
      this.onOutcome({ requestId: id, request, response });
    } catch (err) {
      if (id !== this.latestIssued) return;
      this.onOutcome({
        requestId: id,
        request,
        error: err instanceof Error ? err : new Error(String(err)),
      });
    }
  }
}
