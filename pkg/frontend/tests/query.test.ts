import { describe, expect, it } from 'vitest';

import {
  FilterRow,
  QueryNode,
  QuerySyntaxError,
  parseQuery,
  rowsFromNode,
  rowsToQueryText,
  serializeQuery,
  validateRow,
} from '../src/query.js';

const row = (partial: Partial<FilterRow> = {}): FilterRow => ({
  layer: 'tissue',
  key: 'Connective-Tissue-Fat',
  op: '>=',
  threshold: 0.5,
  mode: 'per_specimen',
  ...partial,
});

describe('parseQuery', () => {
  it('parses a comparison with the default mode', () => {
    expect(parseQuery('tissue.Fat >= 0.5')).toEqual({
      kind: 'comparison',
      layer: 'tissue',
      key: 'Fat',
      op: '>=',
      threshold: 0.5,
      mode: 'per_specimen',
    });
  });

  it('honors an explicit @mode', () => {
    const node = parseQuery('alteration.C9305 < 0.25 @per_image');
    expect(node).toMatchObject({ kind: 'comparison', mode: 'per_image', op: '<' });
  });

  it('parses organ and has predicates', () => {
    expect(parseQuery('organ = C50')).toEqual({ kind: 'organ-is', code: 'C50' });
    expect(parseQuery('has(tissue.Muscle)')).toEqual({
      kind: 'has-class',
      layer: 'tissue',
      key: 'Muscle',
    });
  });

  it('binds NOT tighter than AND tighter than OR', () => {
    const node = parseQuery('NOT organ = C50 AND tissue.Fat > 0.1 OR organ = C34');
    expect(node.kind).toBe('or');
    if (node.kind !== 'or') return;
    expect(node.items[0]!.kind).toBe('and');
    expect(node.items[1]).toEqual({ kind: 'organ-is', code: 'C34' });
  });

  it('treats blank input as match-all', () => {
    expect(parseQuery('')).toEqual({ kind: 'match-all' });
    expect(parseQuery('   ')).toEqual({ kind: 'match-all' });
  });

  it('keeps dotted and hyphenated keys intact', () => {
    const node = parseQuery('source.C50.9 = 1.0');
    expect(node).toMatchObject({ kind: 'comparison', layer: 'source', key: 'C50.9' });
  });

  const errorCases: [string, number][] = [
    ['tissue.Fat >= 1.2', 14],
    ['tissue.Fat >', 12],
    ['bogus.Fat > 0.1', 0],
    ['tissue.Fat > 0.1 @daily', 18],
    ['(tissue.Fat > 0.1', 17],
    ['organ > C50', 6],
    ['tissue.Fat > 0.1 tissue.Blood > 0.1', 17],
  ];

  it.each(errorCases)('rejects %s at offset %i', (text, offset) => {
    try {
      parseQuery(text);
      expect.unreachable('should have thrown');
    } catch (error) {
      expect(error).toBeInstanceOf(QuerySyntaxError);
      expect((error as QuerySyntaxError).offset).toBe(offset);
    }
  });
});

describe('serializeQuery', () => {
  it('always states the mode explicitly', () => {
    expect(serializeQuery(parseQuery('tissue.Fat >= 0.5'))).toBe(
      'tissue.Fat >= 0.5 @per_specimen',
    );
  });

  it('round-trips nested queries', () => {
    const texts = [
      'tissue.Fat >= 0.5 @per_specimen AND organ = C50',
      'NOT (organ = C50 OR organ = C34) AND has(alteration.Neoplastic)',
      'tissue.Blood < 0.1 @per_content OR (tissue.Fat = 1.0 @per_image AND organ = C16)',
    ];
    for (const text of texts) {
      const node = parseQuery(text);
      expect(parseQuery(serializeQuery(node))).toEqual(node);
    }
  });

  it('writes integral thresholds with a decimal point', () => {
    const node: QueryNode = {
      kind: 'comparison',
      layer: 'tissue',
      key: 'Fat',
      op: '=',
      threshold: 1,
      mode: 'per_image',
    };
    expect(serializeQuery(node)).toBe('tissue.Fat = 1.0 @per_image');
  });
});

describe('rowsToQueryText', () => {
  it('emits the exact text for a single predicate row', () => {
    const { text } = rowsToQueryText([row({ layer: 'alteration', key: 'Neoplastic-Malignant' })], 'AND');
    expect(text).toBe('alteration.Neoplastic-Malignant >= 0.5 @per_specimen');
  });

  it('joins rows with the chosen combinator and records spans', () => {
    const rows = [row(), row({ layer: 'source', key: 'C50', op: '=', threshold: 1, mode: 'per_image' })];
    const { text, spans } = rowsToQueryText(rows, 'OR');
    expect(text).toBe(
      'tissue.Connective-Tissue-Fat >= 0.5 @per_specimen OR source.C50 = 1.0 @per_image',
    );
    expect(spans).toHaveLength(2);
    expect(text.slice(spans[0]!.start, spans[0]!.end)).toBe(
      'tissue.Connective-Tissue-Fat >= 0.5 @per_specimen',
    );
    expect(text.slice(spans[1]!.start, spans[1]!.end)).toBe('source.C50 = 1.0 @per_image');
  });

  it('produces match-all for no rows', () => {
    expect(rowsToQueryText([], 'AND').text).toBe('');
  });

  it('parses back to an equivalent AST (panel round trip)', () => {
    const rows = [
      row(),
      row({ layer: 'alteration', key: 'Neoplastic', op: '>', threshold: 0.2, mode: 'per_image' }),
      row({ layer: 'tissue', key: 'Muscle', op: '<=', threshold: 0.75, mode: 'per_content' }),
    ];
    for (const combinator of ['AND', 'OR'] as const) {
      const { text } = rowsToQueryText(rows, combinator);
      const recovered = rowsFromNode(parseQuery(text));
      expect(recovered).toEqual({ rows, combinator });
    }
  });
});

describe('rowsFromNode', () => {
  it('recovers rows from flat shapes', () => {
    expect(rowsFromNode(parseQuery(''))).toEqual({ rows: [], combinator: 'AND' });
    const single = rowsFromNode(parseQuery('tissue.Fat >= 0.5'));
    expect(single?.rows).toHaveLength(1);
  });

  it('declines shapes the panel cannot represent', () => {
    expect(rowsFromNode(parseQuery('NOT tissue.Fat >= 0.5'))).toBeNull();
    expect(rowsFromNode(parseQuery('organ = C50'))).toBeNull();
    expect(rowsFromNode(parseQuery('tissue.Fat > 0.1 AND (organ = C50 OR organ = C34)'))).toBeNull();
  });
});

describe('validateRow', () => {
  it('accepts a sane row and rejects out-of-range thresholds', () => {
    expect(validateRow(row())).toBeNull();
    expect(validateRow(row({ threshold: 1.2 }))).toMatch('outside [0, 1]');
    expect(validateRow(row({ threshold: Number.NaN }))).toMatch('outside [0, 1]');
    expect(validateRow(row({ key: 'two words' }))).toMatch('not a valid identifier');
  });
});
