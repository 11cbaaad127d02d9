/**
 * One result card: header, triple bar chart (one bar per layer), and
 * layer thumbnails with an alpha slider and per-layer toggles. All
 * ratios shown are the service's own numbers.
 */

import type { CohortApi } from './api.js';
import { renderBar, toSegments } from './barchart.js';
import type { Layer, Mode } from './query.js';
import { LAYERS } from './query.js';
import type { CompositionDoc, ProfileEntry, RecordSummary } from './types.js';

export interface RecordCardParams {
  summary: RecordSummary;
  composition: CompositionDoc;
  profiles: Partial<Record<Layer, ProfileEntry[]>>;
  api: CohortApi;
  mode: Mode;
  inBasket: boolean;
  onBasketToggle: (wsiId: string) => void;
}

export class RecordCard {
  readonly element: HTMLElement;
  private alpha = 1.0;
  private enabled: Record<Layer, boolean> = { source: true, tissue: true, alteration: true };
  private chartBox!: HTMLElement;
  private thumbBox!: HTMLElement;

  constructor(private params: RecordCardParams) {
    this.element = document.createElement('article');
    this.element.className = 'record-card';
    this.element.dataset.wsiId = params.summary.wsi_id;
    this.build();
  }

  private build(): void {
    const { summary, inBasket } = this.params;

    const header = document.createElement('header');
    const title = document.createElement('h3');
    title.textContent = summary.wsi_id;
    header.appendChild(title);
    const meta = document.createElement('p');
    meta.className = 'card-meta';
    meta.textContent = [summary.case_id, summary.organ_codes.join(' ')]
      .filter(Boolean)
      .join(' | ');
    header.appendChild(meta);

    const basketButton = document.createElement('button');
    basketButton.type = 'button';
    basketButton.className = 'basket-toggle';
    basketButton.textContent = inBasket ? 'remove from basket' : 'add to basket';
    basketButton.addEventListener('click', () => {
      this.params.onBasketToggle(summary.wsi_id);
      basketButton.textContent =
        basketButton.textContent === 'add to basket' ? 'remove from basket' : 'add to basket';
    });
    header.appendChild(basketButton);
    this.element.appendChild(header);

    const toggles = document.createElement('div');
    toggles.className = 'layer-toggles';
    for (const layer of LAYERS) {
      const label = document.createElement('label');
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.className = `toggle-${layer}`;
      box.checked = true;
      box.addEventListener('change', () => {
        this.enabled[layer] = box.checked;
        this.renderChart();
        this.renderThumbnails();
      });
      label.appendChild(box);
      label.appendChild(document.createTextNode(layer));
      toggles.appendChild(label);
    }
    this.element.appendChild(toggles);

    this.chartBox = document.createElement('div');
    this.chartBox.className = 'card-chart';
    this.element.appendChild(this.chartBox);
    this.renderChart();

    const alphaLabel = document.createElement('label');
    alphaLabel.className = 'alpha-control';
    alphaLabel.appendChild(document.createTextNode('overlay alpha'));
    const slider = document.createElement('input');
    slider.type = 'range';
    slider.className = 'alpha-slider';
    slider.min = '0';
    slider.max = '1';
    slider.step = '0.05';
    slider.value = '1';
    slider.addEventListener('input', () => {
      this.alpha = Number(slider.value);
      this.renderThumbnails();
    });
    alphaLabel.appendChild(slider);
    this.element.appendChild(alphaLabel);

    this.thumbBox = document.createElement('div');
    this.thumbBox.className = 'card-thumbs';
    this.element.appendChild(this.thumbBox);
    this.renderThumbnails();
  }

  private renderChart(): void {
    this.chartBox.textContent = '';
    const { composition, profiles, mode } = this.params;
    for (const layer of LAYERS) {
      if (!this.enabled[layer]) continue;
      const vector = composition.compositions[layer]?.[mode];
      const profile = profiles[layer];
      if (!vector || !profile) continue;
      this.chartBox.appendChild(renderBar(layer, toSegments(vector.ratios, profile)));
    }
  }

  private renderThumbnails(): void {
    this.thumbBox.textContent = '';
    for (const layer of LAYERS) {
      if (!this.enabled[layer]) continue;
      this.thumbBox.appendChild(this.thumbnail(layer));
    }
  }

  private thumbnail(layer: Layer): HTMLElement {
    const box = document.createElement('figure');
    box.className = 'thumb';
    box.dataset.layer = layer;
    this.mountImage(box, layer);
    const caption = document.createElement('figcaption');
    caption.textContent = layer;
    box.appendChild(caption);
    return box;
  }

  private mountImage(box: HTMLElement, layer: Layer): void {
    const img = document.createElement('img');
    img.className = 'thumb-img';
    img.alt = `${layer} layer of ${this.params.summary.wsi_id}`;
    img.src = this.params.api.mapUrl(this.params.summary.wsi_id, layer, this.alpha);
    img.addEventListener('error', () => {
      const placeholder = document.createElement('div');
      placeholder.className = 'img-placeholder';
      placeholder.textContent = 'image unavailable';
      const retry = document.createElement('button');
      retry.type = 'button';
      retry.className = 'retry';
      retry.textContent = 'retry';
      retry.addEventListener('click', () => {
        placeholder.remove();
        this.mountImage(box, layer);
      });
      placeholder.appendChild(retry);
      img.replaceWith(placeholder);
    });
    box.prepend(img);
  }
}
