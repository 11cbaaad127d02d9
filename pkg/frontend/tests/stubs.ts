/** In-memory stand-in for the catalog service, driven through fetch. */

import type { FetchLike } from '../src/api.js';
import type { Layer, Mode } from '../src/query.js';
import type { CompositionDoc, RecordSummary } from '../src/types.js';

export interface StubRecord {
  summary: RecordSummary;
  ratios: Partial<Record<Layer, Partial<Record<Mode, Record<string, number>>>>>;
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export function summaryOf(wsiId: string, organCodes: string[] = ['C50']): RecordSummary {
  return {
    wsi_id: wsiId,
    case_id: '',
    organ_codes: organCodes,
    map_ref: `maps/${wsiId}.png`,
    ingested_at: '2026-08-15T00:00:00+00:00',
    profile_hashes: { source: 'a'.repeat(64), tissue: 'b'.repeat(64), alteration: 'c'.repeat(64) },
  };
}

const PROFILE_HEADER = 'ID,PARENT,CODE,DEF COLOR,COLOR,NAME,COMMENT,ONTOLOGY,CONCEPT';

const SENTINELS = [
  '0,-1,NI,#000000,#000000,NI,,,',
  '1,-1,UNC,#D3D3D3,#D3D3D3,UNC,,,',
  '2,-1,UNK,#808080,#808080,UNK,,,',
  '3,-1,NV,#660066,#660066,NV,,,',
];

export const PROFILE_CSVS: Record<Layer, string> = {
  source: [
    PROFILE_HEADER,
    ...SENTINELS,
    '4,-1,C34,#005F5F,#005F5F,Bronchus-and-lung,,,',
    '5,-1,C50,#000037,#000037,Breast,,,',
    '6,5,C50.4,#000057,#000057,Breast-upper-outer,,,',
  ].join('\n') + '\n',
  tissue: [
    PROFILE_HEADER,
    ...SENTINELS,
    '4,-1,C12434,#B03060,#B03060,Blood,,,',
    '5,-1,C12472,#ADD8E6,#ADD8E6,Connective-Tissue-Fat,,,',
    '6,-1,C12435,#8B4513,#8B4513,Muscle,,,',
  ].join('\n') + '\n',
  alteration: [
    PROFILE_HEADER,
    ...SENTINELS,
    '4,-1,C3262,#E62020,#E62020,Neoplastic,,,',
    '5,4,C9305,#8B0000,#8B0000,Neoplastic-Malignant,,,',
  ].join('\n') + '\n',
};

function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

function compositionDocOf(record: StubRecord): CompositionDoc {
  const compositions: CompositionDoc['compositions'] = {};
  for (const [layer, perMode] of Object.entries(record.ratios)) {
    const modes: Record<string, unknown> = {};
    for (const [mode, ratios] of Object.entries(perMode)) {
      modes[mode] = {
        layer,
        mode,
        ratios,
        pixel_counts: {},
        specimen_pixels: 0,
        total_pixels: 0,
        profile_hash: 'x'.repeat(64),
      };
    }
    compositions[layer as Layer] = modes as never;
  }
  return {
    wsi_id: record.summary.wsi_id,
    profile_hashes: record.summary.profile_hashes,
    compositions,
  };
}

export interface StubServiceOptions {
  records?: StubRecord[];
  /** Map query text to matching ids; default returns every record. */
  matcher?: (query: string) => string[] | { error: string; offset: number };
  manifest?: (ids: string[], format: string, query: string) => string;
}

export function stubService(options: StubServiceOptions = {}): {
  fetch: FetchLike;
  calls: RecordedCall[];
} {
  const records = options.records ?? [];
  const calls: RecordedCall[] = [];

  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? 'GET';
    const body = typeof init?.body === 'string' ? JSON.parse(init.body) : undefined;
    calls.push({ url, method, body });
    const { pathname, searchParams } = new URL(url, 'http://stub');

    if (init?.signal?.aborted) {
      throw new DOMException('aborted', 'AbortError');
    }

    if (pathname === '/wsis') {
      const query = searchParams.get('query') ?? '';
      const verdict = options.matcher
        ? options.matcher(query)
        : records.map((r) => r.summary.wsi_id);
      if (!Array.isArray(verdict)) {
        return json({ detail: { error: verdict.error, offset: verdict.offset } }, 400);
      }
      const matched = records.filter((r) => verdict.includes(r.summary.wsi_id));
      return json({
        query,
        count: matched.length,
        records: matched.map((r) => r.summary),
      });
    }

    const composition = pathname.match(/^\/wsis\/([^/]+)\/composition$/);
    if (composition) {
      const record = records.find((r) => r.summary.wsi_id === composition[1]);
      if (!record) return json({ detail: 'no record' }, 404);
      return json(compositionDocOf(record));
    }

    if (pathname === '/cohorts' && method === 'POST') {
      const { wsi_ids, format, query } = body as {
        wsi_ids: string[];
        format: string;
        query: string;
      };
      const text = options.manifest
        ? options.manifest(wsi_ids, format, query)
        : ['wsi_id,case_id,organ_codes,map_ref,query']
            .concat(wsi_ids.map((id) => `${id},,C50,maps/${id}.png,${query}`))
            .join('\n') + '\n';
      return new Response(text, { status: 200, headers: { 'Content-Type': 'text/csv' } });
    }

    const profile = pathname.match(/^\/profiles\/(source|tissue|alteration)$/);
    if (profile) {
      return new Response(PROFILE_CSVS[profile[1] as Layer], {
        status: 200,
        headers: { 'Content-Type': 'text/csv' },
      });
    }

    return json({ detail: `no stub route for ${pathname}` }, 404);
  };

  return { fetch: fetchImpl, calls };
}
