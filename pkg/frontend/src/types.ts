// Wire types for the retrieval service API.

export type ConnectivityMode = "image_only" | "tag_only" | "both";

export interface SearchRequest {
  image_key?: string;
  feature?: number[];
  tags?: string[];
  visual_weight: number;
  k?: number;
  connectivity?: ConnectivityMode;
}

export interface SearchHit {
  key: string;
  score: number;
}

export interface EffectiveWeights {
  w1: number;
  w2: number;
}

export interface SearchResponse {
  results: SearchHit[];
  dropped_tags: string[];
  effective_weights: EffectiveWeights;
}

export interface TagPrediction {
  tag: string;
  score: number;
}

export interface NodeInfo {
  key: string;
  kind: "image" | "tag";
  degree: number;
  tags?: string[];
}

export interface HealthInfo {
  status: string;
  node_count: number;
  index_rows: number;
}

export type ThumbnailMap = Record<string, string>;
