/**
 * Typed client for the catalog HTTP service. This is the UI's only
 * data source: compositions, renders and manifests all come from the
 * service, never from local computation.
 */

import type { Layer, Mode } from './query.js';
import { parseProfileCsv } from './profiles.js';
import type { CompositionDoc, ProfileEntry, SearchResponse } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** A 4xx from the service; query errors carry the offending offset. */
export class ServiceError extends Error {
  readonly status: number;
  readonly offset: number | null;

  constructor(message: string, status: number, offset: number | null = null) {
    super(message);
    this.name = 'ServiceError';
    this.status = status;
    this.offset = offset;
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let message = `HTTP ${response.status}`;
  let offset: number | null = null;
  try {
    const detail = (await response.json()).detail;
    if (typeof detail === 'string') message = detail;
    else if (detail && typeof detail === 'object') {
      message = String(detail.error ?? message);
      if (typeof detail.offset === 'number') offset = detail.offset;
    }
  } catch {
    /* non-JSON body, keep the status message */
  }
  throw new ServiceError(message, response.status, offset);
}

export class CohortApi {
  private searchController: AbortController | null = null;
  private profileCache = new Map<Layer, ProfileEntry[]>();

  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
  }

  /**
   * Search the catalog. At most one search is in flight: a new call
   * aborts the previous one and the superseded promise resolves to
   * null so stale results never reach the grid.
   */
  async search(query: string, mode?: Mode): Promise<SearchResponse | null> {
    this.searchController?.abort();
    const controller = new AbortController();
    this.searchController = controller;
    const params = new URLSearchParams({ query });
    if (mode) params.set('mode', mode);
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/wsis?${params}`, {
        signal: controller.signal,
      });
      await raiseForStatus(response);
      return (await response.json()) as SearchResponse;
    } catch (error) {
      if (controller.signal.aborted) return null;
      throw error;
    } finally {
      if (this.searchController === controller) this.searchController = null;
    }
  }

  async composition(wsiId: string): Promise<CompositionDoc> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/wsis/${encodeURIComponent(wsiId)}/composition`,
    );
    await raiseForStatus(response);
    return (await response.json()) as CompositionDoc;
  }

  mapUrl(wsiId: string, layer: Layer, alpha: number): string {
    const params = new URLSearchParams({ layer, alpha: String(alpha) });
    return `${this.baseUrl}/wsis/${encodeURIComponent(wsiId)}/map?${params}`;
  }

  barchartUrl(wsiId: string, mode: Mode): string {
    const params = new URLSearchParams({ mode });
    return `${this.baseUrl}/wsis/${encodeURIComponent(wsiId)}/barchart?${params}`;
  }

  /** POST /cohorts with the exact id list; returns the manifest text. */
  async exportCohort(
    wsiIds: readonly string[],
    format: 'csv' | 'jsonl',
    query: string,
  ): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/cohorts`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ wsi_ids: wsiIds, format, query }),
    });
    await raiseForStatus(response);
    return response.text();
  }

  async profile(layer: Layer): Promise<ProfileEntry[]> {
    const cached = this.profileCache.get(layer);
    if (cached) return cached;
    const response = await this.fetchImpl(`${this.baseUrl}/profiles/${layer}`);
    await raiseForStatus(response);
    const entries = parseProfileCsv(await response.text());
    this.profileCache.set(layer, entries);
    return entries;
  }
}
