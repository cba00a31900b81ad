/**
 * Controller: wires DOM events to the service client and re-renders on
 * every state change.  At most one search request is in flight; starting
 * a new query aborts the previous one, and a duplicate of the in-flight
 * query (e.g. a double-click) is dropped.
 */

import { ServiceError, fetchSimilar, uploadSearch } from './api.js';
import { renderApp } from './render.js';
import {
  HistoryEntry,
  ViewState,
  clampK,
  initialState,
  queryKey,
  restored,
  startingQuery,
  withError,
  withK,
  withResults,
} from './state.js';
import { MAX_UPLOAD_BYTES, QueryRef } from './types.js';

const IMAGE_TYPES = ['image/png', 'image/jpeg'];

export class App {
  state: ViewState = initialState();

  private history: HistoryEntry[] = [];
  private controller: AbortController | null = null;
  private inFlightKey: string | null = null;

  constructor(private root: HTMLElement) {
    this.bindEvents();
    this.render();
    window.addEventListener('popstate', () => this.goBack(false));
  }

  // -- queries --------------------------------------------------------------

  queryById(id: string): void {
    this.runQuery({ kind: 'id', id }, (signal) => fetchSimilar(id, this.state.k, signal));
  }

  queryByUpload(file: File): void {
    if (!IMAGE_TYPES.includes(file.type)) {
      this.state = withError(this.state, `"${file.name}" is not a PNG or JPEG image`);
      this.render();
      return;
    }
    if (file.size > MAX_UPLOAD_BYTES) {
      const mb = (file.size / (1024 * 1024)).toFixed(1);
      this.state = withError(this.state, `"${file.name}" is ${mb} MB; the limit is 20 MB`);
      this.render();
      return;
    }
    const previewUrl = URL.createObjectURL(file);
    this.runQuery({ kind: 'upload', name: file.name, previewUrl }, (signal) =>
      uploadSearch(file, this.state.k, signal),
    );
  }

  setK(value: number): void {
    const k = clampK(value);
    if (k === this.state.k) return;
    this.state = withK(this.state, k);
    this.render();
    this.requery();
  }

  retry(): void {
    this.requery();
  }

  goBack(fromButton = true): void {
    const entry = this.history.pop();
    if (!entry) return;
    this.cancelInFlight();
    this.state = restored(this.state, entry);
    this.render();
    if (fromButton && window.history.state !== null) {
      // keep browser history in step with the internal stack
      window.history.back();
    }
  }

  private requery(): void {
    const query = this.state.query;
    if (query === null) return;
    if (query.kind === 'id') {
      this.queryById(query.id);
    } else {
      // an upload cannot be re-posted without the file; keep the snapshot
      this.state = withError(this.state, 'Re-upload the file to search with a new k');
      this.render();
    }
  }

  private runQuery(
    query: QueryRef,
    send: (signal: AbortSignal) => Promise<{ results: ViewState['results'] }>,
  ): void {
    const key = queryKey(query, this.state.k);
    if (this.inFlightKey === key) {
      return; // duplicate of the request already on the wire
    }
    this.cancelInFlight();
    this.pushHistory();
    this.controller = new AbortController();
    this.inFlightKey = key;
    this.state = startingQuery(this.state, query);
    this.render();
    const mine = this.controller;
    send(mine.signal)
      .then((resp) => {
        if (mine.signal.aborted) return;
        this.state = withResults(this.state, resp.results ?? []);
      })
      .catch((err) => {
        if (mine.signal.aborted) return;
        this.state = withError(this.state, ...describeError(err));
      })
      .finally(() => {
        if (this.controller === mine) {
          this.controller = null;
          this.inFlightKey = null;
        }
        if (!mine.signal.aborted) this.render();
      });
  }

  private pushHistory(): void {
    if (this.state.query !== null && this.state.results !== null) {
      this.history.push({
        query: this.state.query,
        k: this.state.k,
        results: this.state.results,
      });
      window.history.pushState({ depth: this.history.length }, '');
    }
  }

  private cancelInFlight(): void {
    if (this.controller !== null) {
      this.controller.abort();
      this.controller = null;
      this.inFlightKey = null;
    }
  }

  // -- dom ------------------------------------------------------------------

  private bindEvents(): void {
    this.root.addEventListener('click', (ev) => {
      const target = ev.target as HTMLElement;
      const tile = target.closest<HTMLElement>('.tile[data-id]');
      if (tile && tile.dataset.id) {
        this.queryById(tile.dataset.id);
        return;
      }
      const action = target.closest<HTMLElement>('[data-action]')?.dataset.action;
      if (action === 'back') this.goBack();
      if (action === 'retry') this.retry();
    });
    this.root.addEventListener('submit', (ev) => {
      const form = ev.target as HTMLElement;
      if (form.matches('[data-action="id-form"]')) {
        ev.preventDefault();
        const input = form.querySelector<HTMLInputElement>('input[name="corpus-id"]');
        const id = input?.value.trim();
        if (id) this.queryById(id);
      }
    });
    this.root.addEventListener('change', (ev) => {
      const target = ev.target as HTMLInputElement;
      if (target.matches('[data-action="upload"]')) {
        const file = target.files?.[0];
        if (file) this.queryByUpload(file);
        target.value = '';
      } else if (target.matches('[data-action="k"]')) {
        this.setK(Number(target.value));
      }
    });
  }

  private render(): void {
    this.root.innerHTML = renderApp(this.state, this.history.length > 0);
  }
}

function describeError(err: unknown): [string, boolean] {
  if (err instanceof ServiceError) {
    if (err.status === 503) return ['The service is still warming up.', true];
    if (err.status === 413) return ['That file is too large for the server (20 MB limit).', false];
    if (err.status === 404) return [err.message, false];
    if (err.status === 400) return [`The server rejected the request: ${err.message}`, false];
    return [err.message, false];
  }
  return ['Could not reach the search service.', true];
}

export function mount(root: HTMLElement): App {
  return new App(root);
}
