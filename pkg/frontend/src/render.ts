/** HTML rendering: pure string builders over the view state. */

import { imageUrl, thumbUrl } from './api.js';
import type { ViewState } from './state.js';
import { MAX_K, MIN_K } from './types.js';

function esc(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function renderQueryPanel(state: ViewState): string {
  if (state.query === null) {
    return `<div class="query-panel empty">
      <p>Pick a corpus image id or upload a design to explore similar styles.</p>
    </div>`;
  }
  const src =
    state.query.kind === 'id' ? imageUrl(state.query.id) : state.query.previewUrl;
  const label = state.query.kind === 'id' ? state.query.id : state.query.name;
  return `<div class="query-panel">
    <img class="query-image" src="${esc(src)}" alt="query image">
    <div class="query-label">${esc(label)}</div>
  </div>`;
}

function renderBanner(state: ViewState): string {
  if (state.error === null) return '';
  const retry = state.retryable
    ? '<button type="button" data-action="retry">Retry</button>'
    : '';
  return `<div class="banner error-banner" role="alert">${esc(state.error)} ${retry}</div>`;
}

function renderResults(state: ViewState): string {
  if (state.loading) {
    return '<div class="results loading">Searching…</div>';
  }
  if (state.results === null) {
    return '';
  }
  if (state.results.length === 0) {
    return '<div class="results empty-results">No results</div>';
  }
  const tiles = state.results
    .map(
      (r) => `<figure class="tile" data-id="${esc(r.id)}" title="requery with ${esc(r.id)}">
      <img src="${esc(thumbUrl(r.id))}" alt="${esc(r.id)}" loading="lazy">
      <figcaption>${esc(r.id)}<span class="distance">d=${r.distance.toFixed(4)}</span></figcaption>
    </figure>`,
    )
    .join('');
  return `<div class="results grid">${tiles}</div>`;
}

function renderControls(state: ViewState, canGoBack: boolean): string {
  const back = canGoBack
    ? '<button type="button" data-action="back">&#8592; Back</button>'
    : '';
  return `<div class="controls">
    ${back}
    <form data-action="id-form">
      <input name="corpus-id" type="text" placeholder="corpus image id" aria-label="corpus image id">
      <button type="submit">Search</button>
    </form>
    <label class="upload-label">Upload
      <input name="upload" type="file" accept="image/png,image/jpeg" data-action="upload">
    </label>
    <label>k
      <input name="k" type="number" min="${MIN_K}" max="${MAX_K}" value="${state.k}" data-action="k">
    </label>
  </div>`;
}

export function renderApp(state: ViewState, canGoBack: boolean): string {
  return `<header><h1>infostyle browse</h1></header>
    ${renderControls(state, canGoBack)}
    ${renderBanner(state)}
    <main>
      ${renderQueryPanel(state)}
      ${renderResults(state)}
    </main>`;
}
