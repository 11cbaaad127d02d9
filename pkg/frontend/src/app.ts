/**
 * Cohort browser shell: filter panel on top, paginated result grid of
 * record cards, basket bar with manifest export. Talks to the catalog
 * service through CohortApi and nothing else.
 */

import { CohortApi, ServiceError } from './api.js';
import { CohortBasket, ManifestFormat, downloadText } from './basket.js';
import { FilterPanel } from './filterPanel.js';
import type { Layer } from './query.js';
import { DEFAULT_MODE, LAYERS } from './query.js';
import { RecordCard } from './recordCard.js';
import type { ProfileEntry, RecordSummary } from './types.js';

export const PAGE_SIZE = 50;

export class CohortApp {
  readonly panel: FilterPanel;
  readonly basket = new CohortBasket();
  private results: RecordSummary[] = [];
  private page = 0;
  private generation = 0;
  private profiles: Partial<Record<Layer, ProfileEntry[]>> = {};

  private gridEl: HTMLElement;
  private statusEl: HTMLElement;
  private pagerEl: HTMLElement;
  private basketEl: HTMLElement;

  constructor(
    root: HTMLElement,
    private api: CohortApi,
  ) {
    root.classList.add('cohort-app');
    const panelEl = document.createElement('section');
    panelEl.className = 'panel-box';
    root.appendChild(panelEl);
    this.panel = new FilterPanel(panelEl, { onCommit: (text) => void this.search(text) });

    this.statusEl = document.createElement('p');
    this.statusEl.className = 'status';
    root.appendChild(this.statusEl);

    this.gridEl = document.createElement('section');
    this.gridEl.className = 'result-grid';
    root.appendChild(this.gridEl);

    this.pagerEl = document.createElement('nav');
    this.pagerEl.className = 'pager';
    root.appendChild(this.pagerEl);

    this.basketEl = document.createElement('section');
    this.basketEl.className = 'basket-bar';
    root.appendChild(this.basketEl);
    this.renderBasketBar();
  }

  /** Issue a search; stale responses (superseded edits) are dropped. */
  async search(queryText: string): Promise<void> {
    const generation = ++this.generation;
    this.statusEl.textContent = 'searching...';
    let response;
    try {
      response = await this.api.search(queryText);
    } catch (error) {
      if (generation !== this.generation) return;
      if (error instanceof ServiceError) {
        this.panel.showServiceError(error.message, error.offset);
        this.statusEl.textContent = 'query rejected';
        return;
      }
      this.statusEl.textContent = 'service unreachable';
      return;
    }
    if (response === null || generation !== this.generation) return;
    this.basket.queryText = queryText;
    this.results = response.records;
    this.page = 0;
    this.statusEl.textContent = `${response.count} match(es)`;
    await this.renderPage();
  }

  private async loadProfiles(): Promise<void> {
    for (const layer of LAYERS) {
      this.profiles[layer] ??= await this.api.profile(layer);
    }
  }

  private async renderPage(): Promise<void> {
    const generation = this.generation;
    this.gridEl.textContent = '';
    this.renderPager();
    try {
      await this.loadProfiles();
    } catch {
      this.statusEl.textContent = 'failed to load profiles';
      return;
    }
    const start = this.page * PAGE_SIZE;
    const visible = this.results.slice(start, start + PAGE_SIZE);
    for (const summary of visible) {
      let composition;
      try {
        composition = await this.api.composition(summary.wsi_id);
      } catch {
        continue;
      }
      if (generation !== this.generation) return;
      const card = new RecordCard({
        summary,
        composition,
        profiles: this.profiles,
        api: this.api,
        mode: DEFAULT_MODE,
        inBasket: this.basket.has(summary.wsi_id),
        onBasketToggle: (wsiId) => {
          this.basket.toggle(wsiId);
          this.renderBasketBar();
        },
      });
      this.gridEl.appendChild(card.element);
    }
  }

  private renderPager(): void {
    this.pagerEl.textContent = '';
    const pages = Math.max(1, Math.ceil(this.results.length / PAGE_SIZE));
    const label = document.createElement('span');
    label.className = 'page-label';
    label.textContent = `page ${this.page + 1} / ${pages}`;

    const prev = document.createElement('button');
    prev.type = 'button';
    prev.className = 'page-prev';
    prev.textContent = 'prev';
    prev.disabled = this.page === 0;
    prev.addEventListener('click', () => {
      this.page -= 1;
      void this.renderPage();
    });

    const next = document.createElement('button');
    next.type = 'button';
    next.className = 'page-next';
    next.textContent = 'next';
    next.disabled = this.page >= pages - 1;
    next.addEventListener('click', () => {
      this.page += 1;
      void this.renderPage();
    });

    this.pagerEl.append(prev, label, next);
  }

  private renderBasketBar(): void {
    this.basketEl.textContent = '';
    const label = document.createElement('span');
    label.className = 'basket-count';
    label.textContent = `basket: ${this.basket.size}`;
    this.basketEl.appendChild(label);
    for (const format of ['csv', 'jsonl'] as ManifestFormat[]) {
      const button = document.createElement('button');
      button.type = 'button';
      button.className = `export-${format}`;
      button.textContent = `export ${format}`;
      button.disabled = this.basket.size === 0;
      button.addEventListener('click', () => void this.exportBasket(format));
      this.basketEl.appendChild(button);
    }
  }

  async exportBasket(format: ManifestFormat): Promise<{ filename: string; text: string }> {
    const manifest = await this.basket.export(this.api, format);
    downloadText(
      manifest.filename,
      manifest.text,
      format === 'csv' ? 'text/csv' : 'application/x-ndjson',
    );
    return manifest;
  }
}

export function mountCohortApp(root: HTMLElement, baseUrl: string): CohortApp {
  return new CohortApp(root, new CohortApi(baseUrl));
}

declare global {
  interface Window {
    cohortApp?: CohortApp;
  }
}

const autoRoot = typeof document !== 'undefined' ? document.getElementById('cohort-root') : null;
if (autoRoot) {
  window.cohortApp = mountCohortApp(autoRoot, autoRoot.dataset.service ?? '');
}
