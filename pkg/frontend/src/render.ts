// Thin DOM layer over the workbench view models. No sorting, no inference:
// everything shown comes straight from the view models in their given order.

import type { DecisionRecord, MemeEntry, PrototypeSetReport } from "./types";
import type { ModelPanelVM, NeighborCard, PredictionBadge } from "./workbench";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderQueryCard(entry: MemeEntry): HTMLElement {
  const card = el("div", "query-card");
  card.appendChild(el("h3", "query-id", entry.id));
  if (entry.image_path) {
    const img = el("img", "query-image");
    img.src = entry.image_path;
    img.alt = entry.id;
    card.appendChild(img);
  }
  card.appendChild(el("p", "query-text", entry.text || "(no transcription)"));
  const gold = el("div", "gold-labels");
  for (const [label, value] of Object.entries(entry.labels)) {
    gold.appendChild(el("span", value === 1 ? "badge badge-pos" : "badge", `${label}=${value}`));
  }
  card.appendChild(gold);
  return card;
}

function renderBadge(badge: PredictionBadge): HTMLElement {
  const wrap = el("div", "prediction");
  wrap.appendChild(
    el("span", badge.value === 1 ? "badge badge-pos" : "badge", `${badge.label}: ${badge.value}`),
  );
  const bar = el("div", "confidence-bar");
  const fill = el("div", "confidence-fill");
  fill.style.width = `${badge.confidencePct}%`;
  bar.appendChild(fill);
  bar.title = badge.confidence;
  wrap.appendChild(bar);
  wrap.appendChild(el("span", "confidence-text", badge.confidence));
  return wrap;
}

function renderNeighborCard(card: NeighborCard): HTMLElement {
  const node = el("div", card.highlighted ? "neighbor highlighted" : "neighbor");
  node.dataset.memeId = card.id;
  node.appendChild(el("div", "neighbor-id", card.id));
  node.appendChild(el("div", "neighbor-sim", card.similarity));
  if (card.labels) {
    const labels = el("div", "neighbor-labels");
    for (const [label, value] of Object.entries(card.labels)) {
      if (value === 1) labels.appendChild(el("span", "badge badge-pos", label));
    }
    node.appendChild(labels);
  }
  return node;
}

export function renderModelPanel(panel: ModelPanelVM): HTMLElement {
  const section = el("section", "model-panel");
  section.dataset.model = panel.model;
  section.appendChild(el("h3", "model-name", panel.modelTag));
  const badges = el("div", "predictions");
  for (const badge of panel.badges) badges.appendChild(renderBadge(badge));
  section.appendChild(badges);
  const grid = el("div", "neighbor-grid");
  for (const row of panel.grid) {
    const rowNode = el("div", "neighbor-row");
    for (const card of row) rowNode.appendChild(renderNeighborCard(card));
    grid.appendChild(rowNode);
  }
  section.appendChild(grid);
  if (panel.xdnnWinners) {
    const drawer = el("details", "prototype-drawer");
    drawer.appendChild(el("summary", undefined, "prototype decision"));
    for (const [label, winner] of Object.entries(panel.xdnnWinners)) {
      drawer.appendChild(el("div", "winner", `${label}: ${winner ?? "abstain"}`));
    }
    section.appendChild(drawer);
  }
  return section;
}

export function renderAudit(records: DecisionRecord[]): HTMLElement {
  const list = el("ul", "audit-list");
  for (const record of records) {
    list.appendChild(
      el("li", `audit-${record.verdict}`, `${record.ts} ${record.verdict} ${record.meme_id}`),
    );
  }
  return list;
}

export function renderPrototypeReport(reports: PrototypeSetReport[]): HTMLElement {
  const table = el("table", "prototype-report");
  const head = el("tr");
  for (const col of ["label", "side", "prototypes", "samples", "ratio", "top exemplars"]) {
    head.appendChild(el("th", undefined, col));
  }
  table.appendChild(head);
  for (const r of reports) {
    const row = el("tr");
    row.appendChild(el("td", undefined, r.label));
    row.appendChild(el("td", undefined, r.side));
    row.appendChild(el("td", undefined, String(r.prototype_count)));
    row.appendChild(el("td", undefined, String(r.sample_count)));
    row.appendChild(el("td", undefined, r.ratio.toFixed(3)));
    row.appendChild(
      el(
        "td",
        undefined,
        r.top_exemplars.map((t) => `${t.exemplar_id} (${t.support})`).join(", "),
      ),
    );
    table.appendChild(row);
  }
  return table;
}

export function renderErrorBanner(message: string, onRetry: () => void): HTMLElement {
  const banner = el("div", "error-banner");
  banner.appendChild(el("span", undefined, message));
  const retry = el("button", "retry", "retry");
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
  return banner;
}
