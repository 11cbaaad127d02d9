/**
 * Parse the service's profile CSV (GET /profiles/{layer}) into entries
 * kept in file order, which is id order in the shipped vocabularies.
 * Bar segments and legends follow this order for stable displays.
 */

import type { ProfileEntry } from './types.js';

/** Minimal RFC-4180 reader; profile CSVs quote only fields that need it. */
function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = '';
  let quoted = false;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i]!;
    if (quoted) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ',') {
      row.push(field);
      field = '';
    } else if (ch === '\n') {
      row.push(field);
      rows.push(row);
      row = [];
      field = '';
    } else if (ch !== '\r') {
      field += ch;
    }
  }
  if (field !== '' || row.length > 0) {
    row.push(field);
    rows.push(row);
  }
  return rows;
}

export function parseProfileCsv(text: string): ProfileEntry[] {
  const rows = parseCsv(text);
  const header = rows[0];
  if (!header) throw new Error('empty profile CSV');
  const col = (name: string): number => {
    const index = header.indexOf(name);
    if (index < 0) throw new Error(`profile CSV lacks column ${name}`);
    return index;
  };
  const [id, parent, code, color, name] = [
    col('ID'),
    col('PARENT'),
    col('CODE'),
    col('COLOR'),
    col('NAME'),
  ];
  return rows.slice(1).map((row) => ({
    id: Number(row[id]),
    parentId: Number(row[parent]),
    code: row[code] ?? '',
    color: row[color] ?? '',
    name: row[name] ?? '',
  }));
}
