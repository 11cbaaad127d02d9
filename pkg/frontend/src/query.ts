/**
 * Client-side mirror of the catalog query language, used only to keep
 * the structured filter rows and the raw query text in sync. The
 * service stays the single authority for evaluating queries.
 *
 * Grammar (case-insensitive keywords, free-form whitespace):
 *
 *   expr       := term (OR term)*
 *   term       := factor (AND factor)*
 *   factor     := NOT factor | '(' expr ')' | comparison | organ | has
 *   comparison := layer '.' key op number ['@' mode]
 *   organ      := 'organ' '=' code
 *   has        := 'has' '(' layer '.' key ')'
 */

export type Layer = 'source' | 'tissue' | 'alteration';
export type Mode = 'per_image' | 'per_specimen' | 'per_content';
export type Op = '<' | '<=' | '=' | '>=' | '>';

export const LAYERS: readonly Layer[] = ['source', 'tissue', 'alteration'];
export const MODES: readonly Mode[] = ['per_image', 'per_specimen', 'per_content'];
export const OPS: readonly Op[] = ['<', '<=', '=', '>=', '>'];
export const DEFAULT_MODE: Mode = 'per_specimen';

export type QueryNode =
  | { kind: 'match-all' }
  | { kind: 'comparison'; layer: Layer; key: string; op: Op; threshold: number; mode: Mode }
  | { kind: 'organ-is'; code: string }
  | { kind: 'has-class'; layer: Layer; key: string }
  | { kind: 'not'; item: QueryNode }
  | { kind: 'and'; items: QueryNode[] }
  | { kind: 'or'; items: QueryNode[] };

export class QuerySyntaxError extends Error {
  readonly offset: number;

  constructor(message: string, offset: number) {
    super(`${message} at offset ${offset}`);
    this.name = 'QuerySyntaxError';
    this.offset = offset;
  }
}

interface Token {
  kind: string;
  text: string;
  offset: number;
}

const TOKEN_RE =
  /(?<ws>\s+)|(?<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|(?<op><=|>=|=|<|>)|(?<lparen>\()|(?<rparen>\))|(?<at>@)|(?<symbol>[A-Za-z_][A-Za-z0-9_.\-]*)/y;

const KEYWORDS = new Set(['and', 'or', 'not', 'has', 'organ']);

function lex(text: string): Token[] {
  const tokens: Token[] = [];
  let pos = 0;
  while (pos < text.length) {
    TOKEN_RE.lastIndex = pos;
    const match = TOKEN_RE.exec(text);
    if (!match || !match.groups) {
      throw new QuerySyntaxError(`unexpected character '${text[pos]}'`, pos);
    }
    const [kind, value] = Object.entries(match.groups).find(([, v]) => v !== undefined)!;
    if (kind !== 'ws') {
      const lowered = value!.toLowerCase();
      tokens.push({
        kind: kind === 'symbol' && KEYWORDS.has(lowered) ? lowered : kind,
        text: value!,
        offset: pos,
      });
    }
    pos = TOKEN_RE.lastIndex;
  }
  return tokens;
}

class Parser {
  private pos = 0;

  constructor(
    private tokens: Token[],
    private length: number,
    private defaultMode: Mode,
  ) {}

  private peek(): Token | undefined {
    return this.tokens[this.pos];
  }

  private take(kind?: string): Token {
    const token = this.peek();
    if (!token) throw new QuerySyntaxError('unexpected end of query', this.length);
    if (kind !== undefined && token.kind !== kind) {
      throw new QuerySyntaxError(`expected ${kind}, found '${token.text}'`, token.offset);
    }
    this.pos += 1;
    return token;
  }

  expr(): QueryNode {
    const items = [this.term()];
    while (this.peek()?.kind === 'or') {
      this.take();
      items.push(this.term());
    }
    return items.length === 1 ? items[0]! : { kind: 'or', items };
  }

  private term(): QueryNode {
    const items = [this.factor()];
    while (this.peek()?.kind === 'and') {
      this.take();
      items.push(this.factor());
    }
    return items.length === 1 ? items[0]! : { kind: 'and', items };
  }

  private factor(): QueryNode {
    const token = this.peek();
    if (!token) throw new QuerySyntaxError('unexpected end of query', this.length);
    if (token.kind === 'not') {
      this.take();
      return { kind: 'not', item: this.factor() };
    }
    if (token.kind === 'lparen') {
      this.take();
      const inner = this.expr();
      this.take('rparen');
      return inner;
    }
    if (token.kind === 'has') {
      this.take();
      this.take('lparen');
      const [layer, key] = this.layerKey();
      this.take('rparen');
      return { kind: 'has-class', layer, key };
    }
    if (token.kind === 'organ') {
      this.take();
      const eq = this.take('op');
      if (eq.text !== '=') throw new QuerySyntaxError("organ accepts only '='", eq.offset);
      const code = this.take('symbol');
      return { kind: 'organ-is', code: code.text };
    }
    if (token.kind === 'symbol') return this.comparison();
    throw new QuerySyntaxError(`unexpected token '${token.text}'`, token.offset);
  }

  private layerKey(): [Layer, string] {
    const token = this.take('symbol');
    const dot = token.text.indexOf('.');
    const layerName = dot < 0 ? token.text : token.text.slice(0, dot);
    const key = dot < 0 ? '' : token.text.slice(dot + 1);
    if (!key) throw new QuerySyntaxError('expected layer.key', token.offset);
    if (!(LAYERS as readonly string[]).includes(layerName)) {
      throw new QuerySyntaxError(`unknown layer '${layerName}'`, token.offset);
    }
    return [layerName as Layer, key];
  }

  private comparison(): QueryNode {
    const [layer, key] = this.layerKey();
    const op = this.take('op');
    const number = this.take('number');
    const threshold = Number(number.text);
    if (!(threshold >= 0 && threshold <= 1)) {
      throw new QuerySyntaxError(`threshold ${number.text} outside [0, 1]`, number.offset);
    }
    let mode = this.defaultMode;
    if (this.peek()?.kind === 'at') {
      this.take();
      const modeToken = this.take('symbol');
      if (!(MODES as readonly string[]).includes(modeToken.text)) {
        throw new QuerySyntaxError(`unknown mode '${modeToken.text}'`, modeToken.offset);
      }
      mode = modeToken.text as Mode;
    }
    return { kind: 'comparison', layer, key, op: op.text as Op, threshold, mode };
  }

  atEnd(): Token | undefined {
    return this.peek();
  }
}

/** Parse query text; empty or blank input matches everything. */
export function parseQuery(text: string, defaultMode: Mode = DEFAULT_MODE): QueryNode {
  const tokens = lex(text);
  if (tokens.length === 0) return { kind: 'match-all' };
  const parser = new Parser(tokens, text.length, defaultMode);
  const node = parser.expr();
  const trailing = parser.atEnd();
  if (trailing) throw new QuerySyntaxError(`unexpected token '${trailing.text}'`, trailing.offset);
  return node;
}

function formatThreshold(value: number): string {
  return Number.isInteger(value) ? value.toFixed(1) : String(value);
}

function wrapped(node: QueryNode, parenthesize: readonly QueryNode['kind'][]): string {
  const text = serializeQuery(node);
  return parenthesize.includes(node.kind) ? `(${text})` : text;
}

/** Render an AST back to text; parseQuery(serializeQuery(q)) is equivalent to q. */
export function serializeQuery(node: QueryNode): string {
  switch (node.kind) {
    case 'match-all':
      return '';
    case 'comparison':
      return `${node.layer}.${node.key} ${node.op} ${formatThreshold(node.threshold)} @${node.mode}`;
    case 'organ-is':
      return `organ = ${node.code}`;
    case 'has-class':
      return `has(${node.layer}.${node.key})`;
    case 'not':
      return `NOT ${wrapped(node.item, ['and', 'or'])}`;
    case 'and':
      return node.items.map((i) => wrapped(i, ['and', 'or'])).join(' AND ');
    case 'or':
      return node.items.map((i) => wrapped(i, ['or'])).join(' OR ');
  }
}

/* ── Structured filter rows (the novice half of the two-way sync) ── */

export type Combinator = 'AND' | 'OR';

export interface FilterRow {
  layer: Layer;
  key: string;
  op: Op;
  threshold: number;
  mode: Mode;
}

export interface RowSpan {
  start: number;
  end: number;
}

const KEY_RE = /^[A-Za-z_][A-Za-z0-9_.\-]*$/;

export function validateRow(row: FilterRow): string | null {
  if (!KEY_RE.test(row.key)) return `class key '${row.key}' is not a valid identifier`;
  if (!Number.isFinite(row.threshold) || row.threshold < 0 || row.threshold > 1) {
    return `threshold ${row.threshold} outside [0, 1]`;
  }
  return null;
}

/**
 * Build the exact query text for a row configuration, with the
 * character span each row occupies (for mapping service errors back
 * to the offending row). Empty rows produce the match-all query "".
 */
export function rowsToQueryText(
  rows: readonly FilterRow[],
  combinator: Combinator,
): { text: string; spans: RowSpan[] } {
  const spans: RowSpan[] = [];
  let text = '';
  rows.forEach((row, i) => {
    if (i > 0) text += ` ${combinator} `;
    const start = text.length;
    text += `${row.layer}.${row.key} ${row.op} ${formatThreshold(row.threshold)} @${row.mode}`;
    spans.push({ start, end: text.length });
  });
  return { text, spans };
}

/**
 * Recover filter rows from an AST when it has the flat shape the
 * panel can represent: nothing, one comparison, or one AND/OR chain
 * of comparisons. Anything else (NOT, nesting, organ, has) returns
 * null and the panel falls back to raw-text mode.
 */
export function rowsFromNode(
  node: QueryNode,
): { rows: FilterRow[]; combinator: Combinator } | null {
  const asRow = (n: QueryNode): FilterRow | null =>
    n.kind === 'comparison'
      ? { layer: n.layer, key: n.key, op: n.op, threshold: n.threshold, mode: n.mode }
      : null;

  if (node.kind === 'match-all') return { rows: [], combinator: 'AND' };
  const single = asRow(node);
  if (single) return { rows: [single], combinator: 'AND' };
  if (node.kind === 'and' || node.kind === 'or') {
    const rows = node.items.map(asRow);
    if (rows.some((r) => r === null)) return null;
    return { rows: rows as FilterRow[], combinator: node.kind === 'and' ? 'AND' : 'OR' };
  }
  return null;
}
