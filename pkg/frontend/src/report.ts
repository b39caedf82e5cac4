// report.ts - Orchestrate figure rendering: read CSVs from the input
// directory, write SVGs plus an index.html into the output directory.
// The input directory is never written to; a failed figure becomes an error
// record instead of aborting the run.

import * as fs from 'fs';
import * as path from 'path';
import { readTable } from './csv';
import { escapeXml } from './chart';
import { FIGURES, renderVerifyTableHtml } from './figures';

export interface ReportSpec {
  inputDir: string;
  /** figure names from FIGURES; empty list renders nothing */
  figures: string[];
  outDir: string;
}

export interface FigureResult {
  name: string;
  status: 'ok' | 'error';
  file?: string;
  error?: string;
}

export const DEFAULT_FIGURES = Object.keys(FIGURES);

export function allFailed(results: FigureResult[]): boolean {
  return results.length > 0 && results.every(r => r.status === 'error');
}

export function renderReport(spec: ReportSpec): FigureResult[] {
  if (path.resolve(spec.outDir) === path.resolve(spec.inputDir)) {
    throw new Error('output directory must differ from the input directory (inputs are read-only)');
  }
  if (spec.figures.length === 0) {
    return [];
  }

  fs.mkdirSync(spec.outDir, { recursive: true });
  const results: FigureResult[] = spec.figures.map(name => {
    const def = FIGURES[name];
    if (!def) {
      return {
        name,
        status: 'error' as const,
        error: `unknown figure type '${name}' (known: ${DEFAULT_FIGURES.join(', ')})`,
      };
    }
    try {
      const svg = def.build(spec.inputDir);
      const file = `${name}.svg`;
      fs.writeFileSync(path.join(spec.outDir, file), svg);
      return { name, status: 'ok' as const, file };
    } catch (err) {
      return {
        name,
        status: 'error' as const,
        error: err instanceof Error ? err.message : String(err),
      };
    }
  });

  fs.writeFileSync(path.join(spec.outDir, 'index.html'), buildIndex(spec, results));
  return results;
}

function buildIndex(spec: ReportSpec, results: FigureResult[]): string {
  const sections = results.map(r => {
    const caption = FIGURES[r.name]?.caption ?? '';
    if (r.status === 'ok') {
      const svg = fs.readFileSync(path.join(spec.outDir, r.file!), 'utf-8');
      return `<section id="${r.name}">\n<h2>${r.name}</h2>\n<p>${escapeXml(caption)}</p>\n${svg}</section>`;
    }
    return `<section id="${r.name}">\n<h2>${r.name}</h2>\n<p class="error">error: ${escapeXml(r.error!)}</p>\n</section>`;
  });

  // pass/fail summary table whenever the dashboard was part of the request
  if (results.some(r => r.name === 'verify-dashboard' && r.status === 'ok')) {
    const table = readTable(path.join(spec.inputDir, 'verify.csv'));
    sections.push(`<section id="verify-table">\n<h2>verification summary</h2>\n${renderVerifyTableHtml(table)}\n</section>`);
  }

  const nOk = results.filter(r => r.status === 'ok').length;
  return `<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Experiment report</title>
<style>
body { font-family: system-ui, sans-serif; margin: 2rem auto; max-width: 960px; color: #111827; }
h2 { border-bottom: 1px solid #e5e7eb; padding-bottom: 4px; }
p.error { color: #dc2626; font-weight: bold; }
table.verify { border-collapse: collapse; font-size: 13px; }
table.verify th, table.verify td { border: 1px solid #d1d5db; padding: 3px 10px; text-align: left; }
table.verify tr.fail td { background: #fee2e2; }
</style>
</head>
<body>
<h1>Experiment report</h1>
<p>${nOk}/${results.length} figures rendered from ${escapeXml(spec.inputDir)}.</p>
${sections.join('\n')}
</body>
</html>
`;
}
