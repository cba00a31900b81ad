/** Wire types mirroring the search service responses. */

export interface SearchResult {
  id: string;
  distance: number;
  thumbnail_url: string;
}

export interface SearchResponse {
  query_id: string;
  results: SearchResult[];
}

export interface HealthResponse {
  status: string;
  index_size: number;
  model_fingerprint: string;
}

/** What the user is currently looking at: a corpus image or an upload. */
export type QueryRef =
  | { kind: 'id'; id: string }
  | { kind: 'upload'; name: string; previewUrl: string };

export const DEFAULT_K = 5;
export const MIN_K = 1;
export const MAX_K = 20;

/** Mirror of the server-side upload cap; checked before any request. */
export const MAX_UPLOAD_BYTES = 20 * 1024 * 1024;
