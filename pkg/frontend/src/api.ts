/**
 * Typed client for the search service.  Every network interaction in the
 * app goes through these functions and the documented endpoints only.
 */

import type { HealthResponse, SearchResponse } from './types.js';

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseOrThrow(resp: Response): Promise<SearchResponse> {
  if (!resp.ok) {
    let code = 'http_error';
    let message = `request failed with status ${resp.status}`;
    try {
      const body = (await resp.json()) as { error?: { code?: string; message?: string } };
      if (body.error) {
        code = body.error.code ?? code;
        message = body.error.message ?? message;
      }
    } catch {
      // non-JSON error body; keep the generic message
    }
    throw new ServiceError(resp.status, code, message);
  }
  return (await resp.json()) as SearchResponse;
}

export async function fetchSimilar(
  id: string,
  k: number,
  signal?: AbortSignal,
): Promise<SearchResponse> {
  const resp = await fetch(`/similar/${encodeURIComponent(id)}?k=${k}`, { signal });
  return parseOrThrow(resp);
}

export async function uploadSearch(
  file: File,
  k: number,
  signal?: AbortSignal,
): Promise<SearchResponse> {
  const form = new FormData();
  form.append('image', file, file.name);
  const resp = await fetch(`/search?k=${k}`, { method: 'POST', body: form, signal });
  return parseOrThrow(resp);
}

export async function fetchHealth(signal?: AbortSignal): Promise<HealthResponse> {
  const resp = await fetch('/health', { signal });
  if (!resp.ok) {
    throw new ServiceError(resp.status, 'not_ready', 'service is not ready');
  }
  return (await resp.json()) as HealthResponse;
}

export function imageUrl(id: string): string {
  return `/image/${encodeURIComponent(id)}`;
}

export function thumbUrl(id: string): string {
  return `/thumb/${encodeURIComponent(id)}`;
}
