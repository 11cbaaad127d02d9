/**
 * The filter panel: structured predicate rows for building composition
 * queries, kept in two-way sync with a raw query textarea so the DSL
 * can also be typed directly. Every committed edit hands the exact
 * query text to the onCommit callback; invalid edits never commit.
 */

import {
  Combinator,
  DEFAULT_MODE,
  FilterRow,
  LAYERS,
  MODES,
  OPS,
  QuerySyntaxError,
  RowSpan,
  parseQuery,
  rowsFromNode,
  rowsToQueryText,
  validateRow,
} from './query.js';

export interface FilterPanelOptions {
  onCommit: (queryText: string) => void;
}

interface RowState extends FilterRow {
  error: string | null;
}

export class FilterPanel {
  private rows: RowState[] = [];
  private combinator: Combinator = 'AND';
  private rawText = '';
  private spans: RowSpan[] = [];
  private advanced = false;
  private panelError: string | null = null;

  constructor(
    private container: HTMLElement,
    private options: FilterPanelOptions,
  ) {
    this.render();
  }

  get queryText(): string {
    return this.rawText;
  }

  /** Current text for the copy button; also pushed to the clipboard when available. */
  copyQueryText(): string {
    navigator.clipboard?.writeText(this.rawText).catch(() => undefined);
    return this.rawText;
  }

  addRow(partial: Partial<FilterRow> = {}): void {
    this.rows.push({
      layer: partial.layer ?? 'tissue',
      key: partial.key ?? '',
      op: partial.op ?? '>=',
      threshold: partial.threshold ?? 0.5,
      mode: partial.mode ?? DEFAULT_MODE,
      error: null,
    });
    this.advanced = false;
    this.render();
  }

  clearRows(): void {
    this.rows = [];
    this.advanced = false;
    this.commitFromRows();
  }

  /** Surface a service-side rejection at the offending row when possible. */
  showServiceError(message: string, offset: number | null): void {
    this.panelError = null;
    this.rows.forEach((row) => (row.error = null));
    if (offset !== null && !this.advanced) {
      const index = this.spans.findIndex((s) => offset >= s.start && offset < s.end);
      const row = index >= 0 ? this.rows[index] : undefined;
      if (row) {
        row.error = message;
        this.render();
        return;
      }
    }
    this.panelError = message;
    this.render();
  }

  private commitFromRows(): void {
    this.panelError = null;
    let valid = true;
    for (const row of this.rows) {
      row.error = row.key === '' ? 'class key is required' : validateRow(row);
      valid &&= row.error === null;
    }
    if (!valid) {
      this.render();
      return;
    }
    const { text, spans } = rowsToQueryText(this.rows, this.combinator);
    this.rawText = text;
    this.spans = spans;
    this.render();
    this.options.onCommit(text);
  }

  private commitFromText(text: string): void {
    this.panelError = null;
    let node;
    try {
      node = parseQuery(text);
    } catch (error) {
      if (error instanceof QuerySyntaxError) {
        this.rawText = text;
        this.panelError = error.message;
        this.render();
        return;
      }
      throw error;
    }
    const recovered = rowsFromNode(node);
    if (recovered) {
      this.rows = recovered.rows.map((row) => ({ ...row, error: null }));
      this.combinator = recovered.combinator;
      this.spans = rowsToQueryText(recovered.rows, recovered.combinator).spans;
      this.advanced = false;
    } else {
      this.advanced = true;
      this.spans = [];
    }
    this.rawText = text;
    this.render();
    this.options.onCommit(text);
  }

  private render(): void {
    this.container.textContent = '';
    this.container.classList.add('filter-panel');

    const rowsBox = document.createElement('div');
    rowsBox.className = 'filter-rows';
    if (this.advanced) {
      const note = document.createElement('p');
      note.className = 'advanced-note';
      note.textContent =
        'Query uses features beyond the row editor (NOT, nesting, organ, has); edit the text below.';
      rowsBox.appendChild(note);
    } else {
      this.rows.forEach((row, index) => rowsBox.appendChild(this.renderRow(row, index)));
    }
    this.container.appendChild(rowsBox);

    const controls = document.createElement('div');
    controls.className = 'filter-controls';
    controls.appendChild(
      this.button('add-row', '+ predicate', () => this.addRow()),
    );
    controls.appendChild(this.button('clear-rows', 'clear', () => this.clearRows()));
    const combinator = this.select(
      'combinator',
      ['AND', 'OR'],
      this.combinator,
      (value) => {
        this.combinator = value as Combinator;
        if (this.rows.length > 0) this.commitFromRows();
      },
    );
    controls.appendChild(combinator);
    this.container.appendChild(controls);

    const rawBox = document.createElement('div');
    rawBox.className = 'raw-box';
    const textarea = document.createElement('textarea');
    textarea.className = 'raw-query';
    textarea.rows = 2;
    textarea.value = this.rawText;
    textarea.addEventListener('change', () => this.commitFromText(textarea.value));
    rawBox.appendChild(textarea);
    rawBox.appendChild(this.button('copy-query', 'copy', () => this.copyQueryText()));
    if (this.panelError) {
      const error = document.createElement('p');
      error.className = 'panel-error';
      error.textContent = this.panelError;
      rawBox.appendChild(error);
    }
    this.container.appendChild(rawBox);
  }

  private renderRow(row: RowState, index: number): HTMLElement {
    const el = document.createElement('div');
    el.className = 'filter-row';
    el.appendChild(
      this.select('row-layer', LAYERS, row.layer, (value) => {
        row.layer = value as FilterRow['layer'];
        this.commitFromRows();
      }),
    );

    const key = document.createElement('input');
    key.className = 'row-key';
    key.type = 'text';
    key.placeholder = 'class name or code';
    key.value = row.key;
    key.addEventListener('change', () => {
      row.key = key.value.trim();
      this.commitFromRows();
    });
    el.appendChild(key);

    el.appendChild(
      this.select('row-op', OPS, row.op, (value) => {
        row.op = value as FilterRow['op'];
        this.commitFromRows();
      }),
    );

    const threshold = document.createElement('input');
    threshold.className = 'row-threshold';
    threshold.type = 'number';
    threshold.min = '0';
    threshold.max = '1';
    threshold.step = '0.05';
    threshold.value = String(row.threshold);
    threshold.addEventListener('change', () => {
      row.threshold = Number(threshold.value);
      this.commitFromRows();
    });
    el.appendChild(threshold);

    el.appendChild(
      this.select('row-mode', MODES, row.mode, (value) => {
        row.mode = value as FilterRow['mode'];
        this.commitFromRows();
      }),
    );

    el.appendChild(
      this.button('remove-row', 'x', () => {
        this.rows.splice(index, 1);
        this.commitFromRows();
      }),
    );

    if (row.error) {
      const error = document.createElement('p');
      error.className = 'row-error';
      error.textContent = row.error;
      el.appendChild(error);
    }
    return el;
  }

  private button(className: string, label: string, onClick: () => void): HTMLButtonElement {
    const el = document.createElement('button');
    el.type = 'button';
    el.className = className;
    el.textContent = label;
    el.addEventListener('click', onClick);
    return el;
  }

  private select(
    className: string,
    values: readonly string[],
    current: string,
    onChange: (value: string) => void,
  ): HTMLSelectElement {
    const el = document.createElement('select');
    el.className = className;
    for (const value of values) {
      const option = document.createElement('option');
      option.value = value;
      option.textContent = value;
      option.selected = value === current;
      el.appendChild(option);
    }
    el.addEventListener('change', () => onChange(el.value));
    return el;
  }
}
