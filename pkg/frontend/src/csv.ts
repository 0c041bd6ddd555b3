import { readFileSync } from 'fs';

export interface Table {
  columns: string[];
  rows: number[][];
}

/**
 * Read a knudsenlab CSV: a `#`-prefixed provenance line, one schema line,
 * then numeric rows.  The expected column list is validated exactly; a
 * mismatch reports the offending column by name.
 */
export function readTable(path: string, expected: string[]): Table {
  const text = readFileSync(path, 'utf8');
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  let i = 0;
  while (i < lines.length && lines[i].startsWith('#')) i++;
  if (i >= lines.length) throw new Error(`${path}: no schema line found`);
  const columns = lines[i].split(',').map((c) => c.trim());
  for (const col of expected) {
    if (!columns.includes(col)) {
      throw new Error(`${path}: schema mismatch, missing column '${col}'`);
    }
  }
  for (const col of columns) {
    if (!expected.includes(col)) {
      throw new Error(`${path}: schema mismatch, unexpected column '${col}'`);
    }
  }
  const rows: number[][] = [];
  for (const line of lines.slice(i + 1)) {
    const parts = line.split(',');
    if (parts.length !== columns.length) {
      throw new Error(`${path}: row has ${parts.length} fields, expected ${columns.length}`);
    }
    rows.push(parts.map(Number));
  }
  if (rows.length === 0) throw new Error(`${path}: no data rows`);
  return { columns, rows };
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new Error(`missing column '${name}'`);
  return table.rows.map((r) => r[idx]);
}
