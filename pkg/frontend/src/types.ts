// Wire types mirroring the service's JSON schemas. Every rendered value is
// traceable to one of these payloads; the client does no inference of its own.

export interface ModelInfo {
  task: string;
  model: string;
  model_tag: string;
  checksums: Record<string, string>;
}

export interface MemeEntry {
  id: string;
  text: string;
  image_path: string | null;
  labels: Record<string, number>;
  task?: string;
  split?: string;
}

export interface Neighbor {
  id: string;
  similarity: number;
  labels: Record<string, number> | null;
}

export interface XdnnScores {
  positive: number;
  negative: number;
}

export interface XdnnDecision {
  labels: Record<string, number | null>;
  scores: Record<string, XdnnScores | null>;
  winning_prototype: Record<string, string | null>;
}

export interface ModelExplanation {
  model_tag: string;
  probs: Record<string, number>;
  labels: Record<string, number>;
  neighbors: Neighbor[];
  xdnn?: XdnnDecision;
}

export interface Explanation {
  meme_id: string;
  task: string;
  split: string;
  k: number;
  entry: MemeEntry;
  models: Record<string, ModelExplanation>;
}

export interface ExplainRequest {
  meme_id: string;
  task: string;
  models?: string[];
  k?: number;
}

export interface PrototypeExemplar {
  exemplar_id: string;
  support: number;
}

export interface PrototypeSetReport {
  label: string;
  side: "positive" | "negative";
  prototype_count: number;
  sample_count: number;
  ratio: number;
  top_exemplars: PrototypeExemplar[];
}

export type Verdict = "flag" | "allow";

export interface DecisionRecord {
  ts: string;
  meme_id: string;
  verdict: Verdict;
  note: string;
}
