import { beforeEach, describe, expect, it, vi } from 'vitest';

import { CohortApi } from '../src/api.js';
import { CohortApp, PAGE_SIZE } from '../src/app.js';
import { StubRecord, stubService, summaryOf } from './stubs.js';

function record(wsiId: string): StubRecord {
  return {
    summary: summaryOf(wsiId),
    ratios: { tissue: { per_specimen: { C12472: 1.0 } } },
  };
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '';
  root = document.createElement('div');
  document.body.appendChild(root);
});

function makeApp(records: StubRecord[], options: Parameters<typeof stubService>[0] = {}) {
  const stub = stubService({ records, ...options });
  const app = new CohortApp(root, new CohortApi('http://svc', stub.fetch));
  return { app, calls: stub.calls };
}

const cards = () => [...root.querySelectorAll('.record-card')];

describe('CohortApp pagination', () => {
  it('shows at most 50 records per page', async () => {
    const records = Array.from({ length: 120 }, (_, i) =>
      record(`w${String(i).padStart(3, '0')}`),
    );
    const { app } = makeApp(records);
    await app.search('');
    await vi.waitFor(() => expect(cards()).toHaveLength(PAGE_SIZE));
    expect(root.querySelector('.page-label')?.textContent).toBe('page 1 / 3');
    expect((root.querySelector('.page-prev') as HTMLButtonElement).disabled).toBe(true);

    (root.querySelector('.page-next') as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(root.querySelector('.page-label')?.textContent).toBe('page 2 / 3');
      expect(cards()).toHaveLength(PAGE_SIZE);
    });
    expect(cards()[0]!.getAttribute('data-wsi-id')).toBe('w050');

    (root.querySelector('.page-next') as HTMLButtonElement).click();
    await vi.waitFor(() => expect(cards()).toHaveLength(20));
    expect((root.querySelector('.page-next') as HTMLButtonElement).disabled).toBe(true);
  });
});

describe('CohortApp search flow', () => {
  it('drops superseded searches (last write wins)', async () => {
    const records = [record('w1'), record('w2')];
    const { app } = makeApp(records, {
      matcher: (query) => (query === 'a' ? ['w1'] : ['w2']),
    });
    const stale = app.search('a');
    const fresh = app.search('b');
    await Promise.all([stale, fresh]);
    await vi.waitFor(() => expect(cards()).toHaveLength(1));
    expect(cards()[0]!.getAttribute('data-wsi-id')).toBe('w2');
    expect(root.querySelector('.status')?.textContent).toBe('1 match(es)');
  });

  it('routes query rejections into the filter panel', async () => {
    const { app } = makeApp([], {
      matcher: () => ({ error: 'unexpected end of query', offset: 12 }),
    });
    await app.search('tissue.Fat >');
    expect(root.querySelector('.panel-error')?.textContent).toMatch('unexpected end of query');
    expect(root.querySelector('.status')?.textContent).toBe('query rejected');
  });

  it('commits from the panel straight into a search', async () => {
    const { calls } = makeApp([record('w1')]);
    (root.querySelector('.add-row') as HTMLButtonElement).click();
    const key = root.querySelector('.row-key') as HTMLInputElement;
    key.value = 'Fat';
    key.dispatchEvent(new Event('change'));
    await vi.waitFor(() => {
      const search = calls.find((c) => c.url.includes('/wsis?'));
      expect(search).toBeDefined();
      expect(new URL(search!.url).searchParams.get('query')).toBe(
        'tissue.Fat >= 0.5 @per_specimen',
      );
    });
  });
});

describe('CohortApp basket', () => {
  it('disables export buttons while empty and posts the exact deduped id set', async () => {
    const { app, calls } = makeApp([record('w1'), record('w2'), record('w3')]);
    expect((root.querySelector('.export-csv') as HTMLButtonElement).disabled).toBe(true);
    await expect(app.exportBasket('csv')).rejects.toThrow('basket is empty');

    await app.search('organ = C50');
    await vi.waitFor(() => expect(cards()).toHaveLength(3));

    app.basket.add('w3');
    app.basket.add('w1');
    app.basket.add('w3');
    expect(app.basket.ids).toEqual(['w3', 'w1']);

    const manifest = await app.exportBasket('csv');
    const post = calls.find((c) => c.method === 'POST')!;
    expect(post.body).toEqual({
      wsi_ids: ['w3', 'w1'],
      format: 'csv',
      query: 'organ = C50',
    });
    expect(manifest.filename).toBe('cohort.csv');
    expect(manifest.text).toContain('w3,,C50,maps/w3.png,organ = C50');
  });

  it('toggling a card twice keeps the basket without that id', async () => {
    const { app } = makeApp([record('w1')]);
    await app.search('');
    await vi.waitFor(() => expect(cards()).toHaveLength(1));
    const button = cards()[0]!.querySelector('.basket-toggle') as HTMLButtonElement;
    button.click();
    expect(app.basket.ids).toEqual(['w1']);
    expect(root.querySelector('.basket-count')?.textContent).toBe('basket: 1');
    expect((root.querySelector('.export-jsonl') as HTMLButtonElement).disabled).toBe(false);
    button.click();
    expect(app.basket.ids).toEqual([]);
    expect((root.querySelector('.export-csv') as HTMLButtonElement).disabled).toBe(true);
  });
});
