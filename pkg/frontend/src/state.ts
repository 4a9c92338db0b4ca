// Query state and its rules: tag chips (normalized, deduplicated), the
// visual-weight slider (disabled/forced when a modality is missing), and
// query-string serialization for shareable links. Pure functions over an
// immutable state object.

import { normalizeTag } from "./normalize.js";
import type { ConnectivityMode, SearchRequest } from "./types.js";

export interface QueryState {
  imageKey: string | null;
  tags: string[];
  visualWeight: number;
  k: number;
  connectivity: ConnectivityMode;
  unresolvedTags: string[];
}

export const SLIDER_STEP = 0.05;

export function initialState(): QueryState {
  return {
    imageKey: null,
    tags: [],
    visualWeight: 1.0,
    k: 12,
    connectivity: "both",
    unresolvedTags: [],
  };
}

export type ChipResult =
  | { state: QueryState; added: string }
  | { state: QueryState; rejected: "empty" | "duplicate" };

export function addChip(state: QueryState, raw: string): ChipResult {
  const tag = normalizeTag(raw);
  if (tag === null) return { state, rejected: "empty" };
  if (state.tags.includes(tag)) return { state, rejected: "duplicate" };
  return { state: { ...state, tags: [...state.tags, tag] }, added: tag };
}

export function removeChip(state: QueryState, tag: string): QueryState {
  return {
    ...state,
    tags: state.tags.filter((t) => t !== tag),
    unresolvedTags: state.unresolvedTags.filter((t) => t !== tag),
  };
}

export function setImageKey(state: QueryState, key: string | null): QueryState {
  return { ...state, imageKey: key && key.length > 0 ? key : null };
}

export function setWeight(state: QueryState, value: number): QueryState {
  const clamped = Math.min(1, Math.max(0, value));
  return { ...state, visualWeight: clamped };
}

export function setK(state: QueryState, k: number): QueryState {
  return { ...state, k: Math.max(1, Math.round(k)) };
}

export function setConnectivity(state: QueryState, mode: ConnectivityMode): QueryState {
  return { ...state, connectivity: mode };
}

/** The slider only matters when both modalities are present. */
export function sliderDisabled(state: QueryState): boolean {
  return state.imageKey === null || state.tags.length === 0;
}

/** Weight after the forcing rules: no image -> 0, no tags -> 1. */
export function effectiveWeight(state: QueryState): number {
  if (state.imageKey === null) return 0.0;
  if (state.tags.length === 0) return 1.0;
  return state.visualWeight;
}

export function canSearch(state: QueryState): boolean {
  return state.imageKey !== null || state.tags.length > 0;
}

/** Mark chips the server reported as unresolvable (kept, flagged inline). */
export function markUnresolved(state: QueryState, dropped: string[]): QueryState {
  const normalized = dropped
    .map((t) => normalizeTag(t))
    .filter((t): t is string => t !== null);
  return { ...state, unresolvedTags: state.tags.filter((t) => normalized.includes(t)) };
}

export function toSearchRequest(state: QueryState, weight?: number): SearchRequest {
  const request: SearchRequest = {
    visual_weight: weight ?? effectiveWeight(state),
    k: state.k,
    connectivity: state.connectivity,
  };
  if (state.imageKey !== null) request.image_key = state.imageKey;
  if (state.tags.length > 0) request.tags = [...state.tags];
  return request;
}

export function toQueryString(state: QueryState): string {
  const params = new URLSearchParams();
  if (state.imageKey) params.set("image", state.imageKey);
  if (state.tags.length) params.set("tags", state.tags.join(","));
  params.set("w", state.visualWeight.toFixed(2));
  params.set("k", String(state.k));
  params.set("mode", state.connectivity);
  return params.toString();
}

export function fromQueryString(qs: string): QueryState {
  const params = new URLSearchParams(qs);
  let state = initialState();
  state = setImageKey(state, params.get("image"));
  for (const raw of (params.get("tags") ?? "").split(",")) {
    const result = addChip(state, raw);
    state = result.state;
  }
  const w = Number(params.get("w"));
  if (Number.isFinite(w) && params.get("w") !== null) state = setWeight(state, w);
  const k = Number(params.get("k"));
  if (Number.isInteger(k) && k > 0) state = setK(state, k);
  const mode = params.get("mode");
  if (mode === "image_only" || mode === "tag_only" || mode === "both") {
    state = setConnectivity(state, mode);
  }
  return state;
}
