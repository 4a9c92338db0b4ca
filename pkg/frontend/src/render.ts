// HTML-string renderers for the result grid, chips and banners. Card order
// always equals the service response order.

import type { EffectiveWeights, SearchHit, ThumbnailMap } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderCard(hit: SearchHit, thumbnails: ThumbnailMap): string {
  const key = escapeHtml(hit.key);
  const score = hit.score.toFixed(4);
  const url = thumbnails[hit.key];
  const media = url
    ? `<img class="card-thumb" src="${escapeHtml(url)}" alt="${key}">`
    : `<div class="card-placeholder" aria-label="${key}"><span>${key}</span></div>`;
  return `<figure class="card" data-key="${key}">
  ${media}
  <figcaption><code>${key}</code><span class="score">${score}</span></figcaption>
</figure>`;
}

export function renderGrid(hits: SearchHit[], thumbnails: ThumbnailMap): string {
  if (hits.length === 0) {
    return `<p class="empty">No results.</p>`;
  }
  return hits.map((hit) => renderCard(hit, thumbnails)).join("\n");
}

export function renderDroppedNotice(dropped: string[]): string {
  if (dropped.length === 0) return "";
  const chips = dropped
    .map((t) => `<span class="chip chip-unresolved">${escapeHtml(t)}</span>`)
    .join(" ");
  return `<div class="notice" role="status">Not in the corpus vocabulary: ${chips}</div>`;
}

export function renderWeightsBanner(weights: EffectiveWeights): string {
  const w1 = weights.w1.toFixed(2);
  const w2 = weights.w2.toFixed(2);
  return `<div class="weights-banner">visual ${w1} / conceptual ${w2}</div>`;
}

export function renderChips(tags: string[], unresolved: string[]): string {
  return tags
    .map((tag) => {
      const cls = unresolved.includes(tag) ? "chip chip-unresolved" : "chip";
      return `<span class="${cls}" data-tag="${escapeHtml(tag)}">${escapeHtml(tag)}` +
        `<button class="chip-remove" data-remove="${escapeHtml(tag)}" ` +
        `aria-label="remove ${escapeHtml(tag)}">&times;</button></span>`;
    })
    .join(" ");
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner banner-error" role="alert">${escapeHtml(message)}</div>`;
}
