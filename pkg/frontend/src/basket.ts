/**
 * The cohort basket: the set of selected wsi ids plus the query text
 * that produced them. Ids are kept unique in insertion order.
 */

import type { CohortApi } from './api.js';

export type ManifestFormat = 'csv' | 'jsonl';

export class CohortBasket {
  private selected = new Set<string>();
  queryText = '';

  get ids(): string[] {
    return [...this.selected];
  }

  get size(): number {
    return this.selected.size;
  }

  has(wsiId: string): boolean {
    return this.selected.has(wsiId);
  }

  add(wsiId: string): void {
    this.selected.add(wsiId);
  }

  remove(wsiId: string): void {
    this.selected.delete(wsiId);
  }

  toggle(wsiId: string): boolean {
    if (this.selected.has(wsiId)) this.selected.delete(wsiId);
    else this.selected.add(wsiId);
    return this.selected.has(wsiId);
  }

  clear(): void {
    this.selected.clear();
  }

  /** Fetch the manifest for exactly the selected ids. */
  async export(
    api: CohortApi,
    format: ManifestFormat,
  ): Promise<{ filename: string; text: string }> {
    if (this.selected.size === 0) throw new Error('basket is empty');
    const text = await api.exportCohort(this.ids, format, this.queryText);
    return { filename: `cohort.${format}`, text };
  }
}

/** Offer text as a browser download (no-op outside a real browser). */
export function downloadText(filename: string, text: string, mime: string): void {
  if (typeof URL.createObjectURL !== 'function') return;
  const blob = new Blob([text], { type: mime });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement('a');
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}
