/**
 * View state and its pure transitions.  Rendering is a function of this
 * state alone; results always keep the server's (ascending distance)
 * order, never reordered client-side.
 */

import type { QueryRef, SearchResult } from './types.js';
import { DEFAULT_K, MAX_K, MIN_K } from './types.js';

export interface ViewState {
  query: QueryRef | null;
  k: number;
  results: SearchResult[] | null; // null until the first response lands
  loading: boolean;
  error: string | null;
  retryable: boolean; // offer a retry button (service warming up)
}

/** Snapshot of a completed query, kept for back navigation. */
export interface HistoryEntry {
  query: QueryRef;
  k: number;
  results: SearchResult[];
}

export function initialState(): ViewState {
  return {
    query: null,
    k: DEFAULT_K,
    results: null,
    loading: false,
    error: null,
    retryable: false,
  };
}

export function startingQuery(state: ViewState, query: QueryRef): ViewState {
  return { ...state, query, loading: true, error: null, retryable: false };
}

export function withResults(state: ViewState, results: SearchResult[]): ViewState {
  return { ...state, results, loading: false, error: null, retryable: false };
}

export function withError(state: ViewState, error: string, retryable = false): ViewState {
  return { ...state, loading: false, error, retryable };
}

export function withK(state: ViewState, k: number): ViewState {
  return { ...state, k: clampK(k) };
}

export function restored(state: ViewState, entry: HistoryEntry): ViewState {
  return {
    ...state,
    query: entry.query,
    k: entry.k,
    results: entry.results,
    loading: false,
    error: null,
    retryable: false,
  };
}

export function clampK(k: number): number {
  if (!Number.isFinite(k)) return DEFAULT_K;
  return Math.min(MAX_K, Math.max(MIN_K, Math.round(k)));
}

/** Stable identity of a query, used to drop duplicate in-flight requests. */
export function queryKey(query: QueryRef, k: number): string {
  return query.kind === 'id' ? `id:${query.id}:${k}` : `upload:${query.name}:${k}`;
}
