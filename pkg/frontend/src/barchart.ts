/**
 * Horizontal stacked bars for composition vectors. Ratios always come
 * from a service response; this module only turns them into pixels.
 */

import type { Layer } from './query.js';
import type { ProfileEntry } from './types.js';

export const BAR_WIDTH = 320;
export const BAR_HEIGHT = 18;

export interface BarSegment {
  code: string;
  name: string;
  color: string;
  ratio: number;
  width: number;
}

/**
 * Integer segment widths from ratios, in the given order. Boundaries
 * are rounded cumulative sums, so every segment stays within 1 px of
 * its proportional width and the total never drifts.
 */
export function segmentWidths(ratios: readonly number[], barWidth = BAR_WIDTH): number[] {
  const widths: number[] = [];
  let cumulative = 0;
  let previous = 0;
  for (const ratio of ratios) {
    cumulative += ratio;
    const boundary = Math.round(cumulative * barWidth);
    widths.push(boundary - previous);
    previous = boundary;
  }
  return widths;
}

/**
 * Order a composition vector's ratios into drawable segments:
 * profile-id order (file order of the vocabulary), skipping classes
 * with no mass. Codes missing from the profile are appended last.
 */
export function toSegments(
  ratios: Record<string, number>,
  profile: readonly ProfileEntry[],
  barWidth = BAR_WIDTH,
): BarSegment[] {
  const known = profile.filter((entry) => entry.code in ratios);
  const knownCodes = new Set(known.map((entry) => entry.code));
  const stray = Object.keys(ratios)
    .filter((code) => !knownCodes.has(code))
    .sort()
    .map((code) => ({ code, name: code, color: '#444444' }));
  const ordered = [...known, ...stray];
  const widths = segmentWidths(
    ordered.map((entry) => ratios[entry.code]!),
    barWidth,
  );
  return ordered.map((entry, i) => ({
    code: entry.code,
    name: entry.name,
    color: entry.color,
    ratio: ratios[entry.code]!,
    width: widths[i]!,
  }));
}

export function renderBar(layer: Layer, segments: readonly BarSegment[]): HTMLElement {
  const row = document.createElement('div');
  row.className = 'bar-row';
  row.dataset.layer = layer;

  const label = document.createElement('span');
  label.className = 'bar-label';
  label.textContent = layer;
  row.appendChild(label);

  const bar = document.createElement('div');
  bar.className = 'bar';
  bar.style.width = `${BAR_WIDTH}px`;
  bar.style.height = `${BAR_HEIGHT}px`;
  for (const segment of segments) {
    if (segment.width <= 0) continue;
    const el = document.createElement('div');
    el.className = 'bar-segment';
    el.dataset.code = segment.code;
    el.style.width = `${segment.width}px`;
    el.style.backgroundColor = segment.color;
    el.title = `${segment.name} ${(segment.ratio * 100).toFixed(2)}%`;
    bar.appendChild(el);
  }
  row.appendChild(bar);
  return row;
}
