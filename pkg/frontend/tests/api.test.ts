import { describe, expect, it } from 'vitest';

import { CohortApi, FetchLike, ServiceError } from '../src/api.js';
import { PROFILE_CSVS, stubService, summaryOf } from './stubs.js';

describe('CohortApi.search', () => {
  it('issues GET /wsis with the query verbatim', async () => {
    const { fetch, calls } = stubService({ records: [{ summary: summaryOf('w1'), ratios: {} }] });
    const api = new CohortApi('http://svc', fetch);
    const result = await api.search('tissue.Fat >= 0.5 @per_specimen');
    expect(result?.records.map((r) => r.wsi_id)).toEqual(['w1']);
    const url = new URL(calls[0]!.url);
    expect(url.pathname).toBe('/wsis');
    expect(url.searchParams.get('query')).toBe('tissue.Fat >= 0.5 @per_specimen');
  });

  it('aborts the previous search so only one request is in flight', async () => {
    const seen: AbortSignal[] = [];
    const hangingFetch: FetchLike = (url, init) =>
      new Promise((resolve, reject) => {
        seen.push(init!.signal!);
        init!.signal!.addEventListener('abort', () =>
          reject(new DOMException('aborted', 'AbortError')),
        );
        if (seen.length === 2) {
          resolve(
            new Response(JSON.stringify({ query: '', count: 0, records: [] }), { status: 200 }),
          );
        }
      });
    const api = new CohortApi('http://svc', hangingFetch);
    const first = api.search('tissue.Fat >= 0.1');
    const second = api.search('tissue.Fat >= 0.2');
    const [staleResult, freshResult] = await Promise.all([first, second]);
    expect(seen[0]!.aborted).toBe(true);
    expect(seen[1]!.aborted).toBe(false);
    expect(staleResult).toBeNull();
    expect(freshResult?.count).toBe(0);
  });

  it('turns a 400 with offset into a ServiceError carrying it', async () => {
    const { fetch } = stubService({
      matcher: () => ({ error: 'unexpected end of query', offset: 12 }),
    });
    const api = new CohortApi('http://svc', fetch);
    await expect(api.search('tissue.Fat >')).rejects.toMatchObject({
      name: 'ServiceError',
      status: 400,
      offset: 12,
    });
  });

  it('propagates non-query failures', async () => {
    const failing: FetchLike = async () => new Response('nope', { status: 500 });
    const api = new CohortApi('http://svc', failing);
    await expect(api.search('')).rejects.toBeInstanceOf(ServiceError);
  });
});

describe('CohortApi.exportCohort', () => {
  it('posts exactly the given id list and query', async () => {
    const { fetch, calls } = stubService({});
    const api = new CohortApi('http://svc', fetch);
    const text = await api.exportCohort(['w2', 'w1'], 'csv', 'organ = C50');
    expect(calls[0]!.method).toBe('POST');
    expect(calls[0]!.body).toEqual({ wsi_ids: ['w2', 'w1'], format: 'csv', query: 'organ = C50' });
    expect(text).toContain('w2,,C50');
  });
});

describe('CohortApi.profile', () => {
  it('parses the CSV and caches per layer', async () => {
    const { fetch, calls } = stubService({});
    const api = new CohortApi('http://svc', fetch);
    const tissue = await api.profile('tissue');
    expect(tissue.find((e) => e.code === 'C12472')).toMatchObject({
      name: 'Connective-Tissue-Fat',
      color: '#ADD8E6',
      id: 5,
    });
    await api.profile('tissue');
    expect(calls).toHaveLength(1);
    expect(PROFILE_CSVS.tissue.startsWith('ID,PARENT,CODE')).toBe(true);
  });
});

describe('CohortApi url builders', () => {
  it('builds map and barchart urls with parameters', () => {
    const api = new CohortApi('http://svc/', async () => new Response(''));
    expect(api.mapUrl('w 1', 'tissue', 0.5)).toBe(
      'http://svc/wsis/w%201/map?layer=tissue&alpha=0.5',
    );
    expect(api.barchartUrl('w1', 'per_content')).toBe(
      'http://svc/wsis/w1/barchart?mode=per_content',
    );
  });
});
