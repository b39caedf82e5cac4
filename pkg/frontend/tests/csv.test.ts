import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { afterAll, describe, expect, it } from 'vitest';
import { numberColumn, ParseError, PROVENANCE_RE, readTable, stringColumn } from '../src/csv';

const FIXTURES = path.join(__dirname, 'fixtures', 'run');

const tmpRoot = fs.mkdtempSync(path.join(os.tmpdir(), 'csv-test-'));
afterAll(() => fs.rmSync(tmpRoot, { recursive: true, force: true }));

function tmpCsv(name: string, content: string): string {
  const p = path.join(tmpRoot, name);
  fs.writeFileSync(p, content);
  return p;
}

const GOOD_PROVENANCE = `# config_sha256=${'a'.repeat(64)} seed=3`;

describe('readTable', () => {
  it('reads the invariant fixture with provenance and exact cells', () => {
    const table = readTable(path.join(FIXTURES, 'invariant.csv'));
    expect(table.provenance.sha256).toMatch(/^[0-9a-f]{64}$/);
    expect(table.provenance.seed).toBe(0);
    expect(table.header).toEqual(['t', 'phi', 'oracle', 'abs_err', 'sqrt_g']);
    expect(table.rows).toHaveLength(64);
    // %.17g survives the string -> number round trip untouched
    expect(numberColumn(table, 'phi')[0]).toBe(0.99999999532162021);
    expect(numberColumn(table, 'oracle')[0]).toBe(1);
  });

  it('reads the semigroup fixture rows in file order', () => {
    const table = readTable(path.join(FIXTURES, 'semigroup.csv'));
    expect(numberColumn(table, 'n_paths')).toEqual([100, 1000, 10000]);
    expect(numberColumn(table, 'stderr')).toEqual([
      0.070414111132087231, 0.022489076581036566, 0.0070629430037202389,
    ]);
  });

  it('rejects a file whose first line is not the provenance comment', () => {
    const p = tmpCsv('no_prov.csv', 't,phi\n0,1\n');
    expect(() => readTable(p)).toThrow(ParseError);
    expect(() => readTable(p)).toThrow(/provenance/);
  });

  it('rejects a provenance line with a short digest', () => {
    const p = tmpCsv('short_sha.csv', `# config_sha256=${'a'.repeat(63)} seed=1\nt\n0\n`);
    expect(() => readTable(p)).toThrow(/provenance/);
  });

  it('rejects a ragged data row, naming it', () => {
    const p = tmpCsv('ragged.csv', `${GOOD_PROVENANCE}\na,b,c\n1,2,3\n4,5\n`);
    expect(() => readTable(p)).toThrow(/data row 2 has 2 cells, header has 3/);
  });

  it('rejects a file with no header row', () => {
    const p = tmpCsv('empty.csv', `${GOOD_PROVENANCE}\n`);
    expect(() => readTable(p)).toThrow(/no header row/);
  });

  it('rejects a missing file', () => {
    expect(() => readTable(path.join(tmpRoot, 'does_not_exist.csv'))).toThrow(/missing input file/);
  });

  it('keeps a header-only table as zero rows', () => {
    const p = tmpCsv('header_only.csv', `${GOOD_PROVENANCE}\nt,phi\n`);
    expect(readTable(p).rows).toEqual([]);
  });
});

describe('columns', () => {
  const table = readTable(path.join(FIXTURES, 'verify.csv'));

  it('pulls string and numeric columns', () => {
    expect(stringColumn(table, 'scope')).toContain('geometry');
    const passed = numberColumn(table, 'passed');
    expect(passed.every(v => v === 0 || v === 1)).toBe(true);
  });

  it('rejects an unknown column name', () => {
    expect(() => numberColumn(table, 'nope')).toThrow(/column 'nope' not found/);
  });

  it('rejects non-numeric cells in a numeric column', () => {
    const p = tmpCsv('text_cell.csv', `${GOOD_PROVENANCE}\nt,phi\n0,fine\n`);
    const bad = readTable(p);
    expect(() => numberColumn(bad, 'phi')).toThrow(/expected a number, got 'fine'/);
  });
});

describe('provenance pattern', () => {
  it('matches exactly the runner format', () => {
    expect(PROVENANCE_RE.test(GOOD_PROVENANCE)).toBe(true);
    expect(PROVENANCE_RE.test('# config_sha256=xyz seed=1')).toBe(false);
    expect(PROVENANCE_RE.test(`# config_sha256=${'a'.repeat(64)} seed=`)).toBe(false);
    expect(PROVENANCE_RE.test(`# config_sha256=${'a'.repeat(64)} seed=-5`)).toBe(true);
  });
});
