// Session logic for the moderator workbench: pure view-model builders plus a
// small stateful session. Rendering consumes these verbatim; response order is
// never re-sorted client-side.

import type { ApiClient } from "./api";
import type {
  DecisionRecord,
  Explanation,
  ModelExplanation,
  ModelInfo,
  Neighbor,
  Verdict,
} from "./types";

export function formatSimilarity(x: number): string {
  return x.toFixed(2);
}

export function formatConfidence(p: number): string {
  return `${Math.round(p * 100)}%`;
}

export interface NeighborCard {
  id: string;
  similarity: string;
  rawSimilarity: number;
  labels: Record<string, number> | null;
  highlighted: boolean; // gold-positive under the highlight label
}

export function neighborCards(
  neighbors: Neighbor[],
  highlightLabel: string | null,
): NeighborCard[] {
  // order preserved exactly as served
  return neighbors.map((n) => ({
    id: n.id,
    similarity: formatSimilarity(n.similarity),
    rawSimilarity: n.similarity,
    labels: n.labels,
    highlighted:
      highlightLabel !== null && n.labels !== null && n.labels[highlightLabel] === 1,
  }));
}

export function gridRows<T>(cards: T[], width = 3): T[][] {
  const rows: T[][] = [];
  for (let i = 0; i < cards.length; i += width) {
    rows.push(cards.slice(i, i + width));
  }
  return rows;
}

export interface PredictionBadge {
  label: string;
  value: number;
  confidence: string;
  confidencePct: number;
}

export function predictionBadges(model: ModelExplanation): PredictionBadge[] {
  return Object.keys(model.labels).map((label) => ({
    label,
    value: model.labels[label] ?? 0,
    confidence: formatConfidence(model.probs[label] ?? 0),
    confidencePct: Math.round((model.probs[label] ?? 0) * 100),
  }));
}

export interface ModelPanelVM {
  model: string;
  modelTag: string;
  badges: PredictionBadge[];
  grid: NeighborCard[][];
  xdnnWinners: Record<string, string | null> | null;
}

export function modelPanels(
  explanation: Explanation,
  highlightLabel: string | null,
  gridWidth = 3,
): ModelPanelVM[] {
  // panel order follows the response's model key order
  return Object.entries(explanation.models).map(([model, block]) => ({
    model,
    modelTag: block.model_tag,
    badges: predictionBadges(block),
    grid: gridRows(neighborCards(block.neighbors, highlightLabel), gridWidth),
    xdnnWinners: block.xdnn ? block.xdnn.winning_prototype : null,
  }));
}

export interface WorkbenchState {
  models: ModelInfo[];
  task: string | null;
  selectedModels: string[];
  k: number;
  explanation: Explanation | null;
  audit: DecisionRecord[];
  error: string | null;
}

export function initialState(): WorkbenchState {
  return {
    models: [],
    task: null,
    selectedModels: [],
    k: 9,
    explanation: null,
    audit: [],
    error: null,
  };
}

export class WorkbenchSession {
  readonly state: WorkbenchState = initialState();

  constructor(private readonly client: ApiClient) {}

  async loadModels(): Promise<void> {
    const models = await this.client.models();
    this.state.models = models;
    if (this.state.task === null && models.length > 0) {
      this.state.task = models[0]!.task;
      this.state.selectedModels = models
        .filter((m) => m.task === this.state.task)
        .map((m) => m.model);
    }
  }

  setTask(task: string): void {
    this.state.task = task;
    this.state.selectedModels = this.state.models
      .filter((m) => m.task === task)
      .map((m) => m.model);
    this.state.explanation = null; // switching tasks clears the view, never the audit
  }

  setSelectedModels(models: string[]): void {
    this.state.selectedModels = models; // audit untouched by construction
  }

  setK(k: number): void {
    this.state.k = Math.min(25, Math.max(1, Math.trunc(k)));
  }

  async explain(memeId: string): Promise<Explanation> {
    if (this.state.task === null) throw new Error("no task selected");
    const explanation = await this.client.explain({
      meme_id: memeId,
      task: this.state.task,
      models: this.state.selectedModels,
      k: this.state.k,
    });
    this.state.explanation = explanation;
    this.state.error = null;
    return explanation;
  }

  async decide(memeId: string, verdict: Verdict, note = ""): Promise<DecisionRecord> {
    const record = await this.client.submitDecision(memeId, verdict, note);
    this.state.audit = [...this.state.audit, record]; // append-only session audit
    return record;
  }
}
