// csv.ts - Read the experiment CLI's CSV outputs into typed columns.
//
// Every file the CLI writes starts with a single provenance comment
//   # config_sha256=<64 hex> seed=<int>
// followed by a header row and %.17g-formatted data rows.  A file without
// that comment did not come from the experiment runner and is rejected.

import * as fs from 'fs';
import { parse } from 'papaparse';

export const PROVENANCE_RE = /^# config_sha256=([0-9a-f]{64}) seed=(-?\d+)$/;

export interface Provenance {
  sha256: string;
  seed: number;
}

export interface Table {
  provenance: Provenance;
  header: string[];
  rows: string[][];
}

export class ParseError extends Error {}

/**
 * Read one CSV file, validating the provenance line and the row shapes.
 * Cells stay strings; use numberColumn/stringColumn to pull typed columns.
 */
export function readTable(path: string): Table {
  if (!fs.existsSync(path)) {
    throw new ParseError(`missing input file: ${path}`);
  }
  const text = fs.readFileSync(path, 'utf-8');
  const newline = text.indexOf('\n');
  const firstLine = (newline < 0 ? text : text.slice(0, newline)).trimEnd();
  const match = PROVENANCE_RE.exec(firstLine);
  if (!match) {
    throw new ParseError(
      `${path}: line 1 is not the provenance comment ` +
      `(expected '# config_sha256=<hex> seed=<n>', got '${firstLine.slice(0, 60)}')`);
  }
  const provenance: Provenance = { sha256: match[1], seed: parseInt(match[2], 10) };

  const body = newline < 0 ? '' : text.slice(newline + 1);
  const parsed = parse<string[]>(body, { delimiter: ',', skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new ParseError(`${path}: ${e.message} (row ${e.row})`);
  }
  if (parsed.data.length === 0) {
    throw new ParseError(`${path}: no header row after the provenance comment`);
  }
  const [header, ...rows] = parsed.data;
  rows.forEach((row, i) => {
    if (row.length !== header.length) {
      throw new ParseError(
        `${path}: data row ${i + 1} has ${row.length} cells, header has ${header.length}`);
    }
  });
  return { provenance, header, rows };
}

function columnIndex(table: Table, name: string): number {
  const j = table.header.indexOf(name);
  if (j < 0) {
    throw new ParseError(
      `column '${name}' not found (header: ${table.header.join(', ')})`);
  }
  return j;
}

export function numberColumn(table: Table, name: string): number[] {
  const j = columnIndex(table, name);
  return table.rows.map((row, i) => {
    const v = Number(row[j]);
    if (row[j].trim() === '' || !Number.isFinite(v)) {
      throw new ParseError(
        `data row ${i + 1}, column '${name}': expected a number, got '${row[j]}'`);
    }
    return v;
  });
}

export function stringColumn(table: Table, name: string): string[] {
  const j = columnIndex(table, name);
  return table.rows.map(row => row[j]);
}
