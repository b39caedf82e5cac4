// figures.ts - One builder per experiment CSV, each returning a complete SVG
// document.  Builders read from the input directory and throw FigureError on
// missing or unusable data; the report layer records those per figure.

import * as path from 'path';
import { numberColumn, readTable, stringColumn, Table } from './csv';
import { composePanels, escapeXml, PALETTE, renderPanel, Series } from './chart';

export class FigureError extends Error {}

export interface FigureDef {
  /** basename of the CLI output this figure consumes */
  input: string;
  caption: string;
  build(inputDir: string): string;
}

function loadTable(inputDir: string, basename: string): Table {
  const table = readTable(path.join(inputDir, basename));
  if (table.rows.length === 0) {
    throw new FigureError(`${basename}: no data rows`);
  }
  return table;
}

function zip(xs: number[], ys: number[]): Array<[number, number]> {
  return xs.map((x, i) => [x, ys[i]]);
}

/** Least-squares fit of log10(y) = intercept + slope * log10(x). */
export function fitPowerLaw(points: Array<[number, number]>): { slope: number; intercept: number } {
  const usable = points.filter(([x, y]) => x > 0 && y > 0);
  if (usable.length < 2) {
    throw new FigureError('power-law fit needs at least two positive points');
  }
  const lx = usable.map(([x]) => Math.log10(x));
  const ly = usable.map(([, y]) => Math.log10(y));
  const n = usable.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxy = 0;
  let sxx = 0;
  for (let i = 0; i < n; i++) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx === 0) throw new FigureError('power-law fit needs distinct x values');
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

function buildInvariantOverlay(inputDir: string): string {
  const table = loadTable(inputDir, 'invariant.csv');
  const t = numberColumn(table, 't');
  const phi = numberColumn(table, 'phi');
  const oracle = numberColumn(table, 'oracle');
  const maxErr = Math.max(...phi.map((v, i) => Math.abs(v - oracle[i])));
  return renderPanel({
    title: 'Invariant density: solver vs closed form',
    x: { label: 't' },
    y: { label: 'phi(t)' },
    series: [
      { label: 'solver', points: zip(t, phi), color: PALETTE[0], cssClass: 'solver' },
      { label: 'oracle', points: zip(t, oracle), color: PALETTE[1], kind: 'dashed', cssClass: 'oracle' },
    ],
    notes: [`max |solver - oracle| = ${maxErr.toExponential(2)}`],
  });
}

function buildDilationProfiles(inputDir: string): string {
  const table = loadTable(inputDir, 'dilate.csv');
  const t = numberColumn(table, 't');
  const phiBase = numberColumn(table, 'phi_base');
  const phiDilated = numberColumn(table, 'phi_dilated');
  const kappa = numberColumn(table, 'kappa_dilated');
  const delta = numberColumn(table, 'delta_kappa');
  const maxDrift = Math.max(...phiDilated.map(v => Math.abs(v - 1)));
  const maxDelta = Math.max(...delta.map(Math.abs));
  return composePanels([
    {
      title: 'Invariant density before and after metric dilation',
      x: { label: 't' },
      y: { label: 'phi(t)' },
      series: [
        { label: 'before dilation', points: zip(t, phiBase), color: PALETTE[0] },
        { label: 'after dilation', points: zip(t, phiDilated), color: PALETTE[2] },
      ],
      notes: [`max |phi_after - 1| = ${maxDrift.toExponential(2)}`],
    },
    {
      title: 'Dilated mean curvature and its harmonic defect',
      x: { label: 't' },
      y: { label: 'value' },
      series: [
        { label: 'kappa after dilation', points: zip(t, kappa), color: PALETTE[3] },
        { label: 'harmonic defect', points: zip(t, delta), color: PALETTE[1], kind: 'dashed' },
      ],
      notes: [`max |defect| = ${maxDelta.toExponential(2)}`],
    },
  ]);
}

function buildSemigroupConvergence(inputDir: string): string {
  const table = loadTable(inputDir, 'semigroup.csv');
  const t = numberColumn(table, 't');
  const n = numberColumn(table, 'n_paths');
  const mean = numberColumn(table, 'mean');
  const stderr = numberColumn(table, 'stderr');
  const oracle = numberColumn(table, 'oracle');

  // one estimate + oracle pair per distinct horizon
  const groups = new Map<string, number[]>();
  t.forEach((v, i) => {
    const key = v.toPrecision(12);
    const idx = groups.get(key);
    if (idx) idx.push(i);
    else groups.set(key, [i]);
  });

  const estSeries: Series[] = [];
  let color = 0;
  for (const [key, idx] of groups) {
    const label = groups.size > 1 ? ` (t=${Number(key)})` : '';
    estSeries.push({
      label: `estimate ± 3 stderr${label}`,
      points: idx.map(i => [n[i], mean[i]]),
      yerr: idx.map(i => 3 * stderr[i]),
      color: PALETTE[color % PALETTE.length],
      kind: 'markers',
    });
    estSeries.push({
      label: `oracle${label}`,
      points: idx.map(i => [n[i], oracle[i]]),
      color: PALETTE[(color + 1) % PALETTE.length],
      kind: 'dashed',
      cssClass: `oracle-${estSeries.length}`,
    });
    color += 2;
  }

  const fit = fitPowerLaw(zip(n, stderr));
  const nLo = Math.min(...n);
  const nHi = Math.max(...n);
  const fitLine: Array<[number, number]> = [
    [nLo, Math.pow(10, fit.intercept + fit.slope * Math.log10(nLo))],
    [nHi, Math.pow(10, fit.intercept + fit.slope * Math.log10(nHi))],
  ];

  return composePanels([
    {
      title: 'Semigroup estimate vs closed-form oracle',
      x: { label: 'number of sample paths', log: true },
      y: { label: 'estimate' },
      series: estSeries,
    },
    {
      title: 'Monte Carlo error decay',
      x: { label: 'number of sample paths', log: true },
      y: { label: 'stderr', log: true },
      series: [
        { label: 'measured stderr', points: zip(n, stderr), color: PALETTE[0], kind: 'markers' },
        { label: 'power-law fit', points: fitLine, color: PALETTE[1], kind: 'dashed', cssClass: 'fit' },
      ],
      notes: [`fitted slope ${fit.slope.toFixed(3)} (CLT: -0.5)`],
    },
  ]);
}

function buildFlowLevels(inputDir: string): string {
  const table = loadTable(inputDir, 'flow_convergence.csv');
  const k = numberColumn(table, 'k');
  const gap = numberColumn(table, 'endpoint_gap_to_finest');
  const tFinal = numberColumn(table, 't_final')[0];
  const refIdx = gap.findIndex(g => g === 0);
  const pts = zip(k, gap).filter(([, g]) => g > 0);
  if (pts.length === 0) {
    throw new FigureError('flow_convergence.csv: no positive endpoint gaps to plot');
  }
  const notes = [`horizon T = ${tFinal}`];
  if (refIdx >= 0) {
    notes.unshift(`reference level k = ${k[refIdx]} (gap 0, omitted)`);
  }
  return renderPanel({
    title: 'Endpoint gap vs dyadic refinement level',
    x: { label: 'dyadic level k' },
    y: { label: 'endpoint gap to finest level', log: true },
    series: [
      { label: 'endpoint gap', points: pts, color: PALETTE[0], kind: 'markers' },
      { label: 'level trend', points: pts, color: PALETTE[0], cssClass: 'trend' },
    ],
    notes,
  });
}

function buildVerifyDashboard(inputDir: string): string {
  const table = loadTable(inputDir, 'verify.csv');
  return renderVerifyBars(table);
}

/** Residual/tolerance bars, one per check, green for pass and red for fail. */
export function renderVerifyBars(table: Table): string {
  const names = stringColumn(table, 'name');
  const scopes = stringColumn(table, 'scope');
  const residual = numberColumn(table, 'residual');
  const tolerance = numberColumn(table, 'tolerance');
  const passed = numberColumn(table, 'passed').map(v => v !== 0);

  const ratios = residual.map((r, i) => r / tolerance[i]);
  const floor = 1e-12;                      // zero residuals draw at the floor
  const maxRatio = Math.max(...ratios, 1);
  const lo10 = Math.log10(floor);
  const hi10 = Math.ceil(Math.log10(maxRatio)) + 1;

  const rowH = 18;
  const top = 48;
  const labelW = 280;
  const width = 860;
  const plotX0 = labelW + 10;
  const plotX1 = width - 20;
  const height = top + names.length * rowH + 36;
  const px = (ratio: number) =>
    plotX0 + ((Math.log10(Math.max(ratio, floor)) - lo10) / (hi10 - lo10)) * (plotX1 - plotX0);

  const nPass = passed.filter(Boolean).length;
  const parts: string[] = [];
  parts.push(`<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`);
  parts.push(`<text x="${plotX0}" y="20" font-size="14" font-weight="bold" fill="#111827">Verification checks: residual / tolerance</text>`);
  parts.push(`<text x="${plotX0}" y="38" font-size="12" fill="#4b5563" class="note">${nPass}/${names.length} checks passed</text>`);

  for (let e = Math.ceil(lo10); e <= hi10; e += 2) {
    const x = px(Math.pow(10, e)).toFixed(2);
    parts.push(`<line x1="${x}" y1="${top}" x2="${x}" y2="${height - 30}" stroke="#e5e7eb"/>`);
    parts.push(`<text x="${x}" y="${height - 16}" font-size="10" fill="#374151" text-anchor="middle">1e${e}</text>`);
  }
  const xTol = px(1).toFixed(2);
  parts.push(`<line x1="${xTol}" y1="${top}" x2="${xTol}" y2="${height - 30}" stroke="#111827" stroke-dasharray="4 3"/>`);
  parts.push(`<text x="${xTol}" y="${top - 4}" font-size="10" fill="#111827" text-anchor="middle">tolerance</text>`);

  names.forEach((name, i) => {
    const y = top + i * rowH;
    const xEnd = px(ratios[i]);
    const cls = passed[i] ? 'check pass' : 'check fail';
    const color = passed[i] ? '#16a34a' : '#dc2626';
    parts.push(`<text x="${labelW}" y="${y + 12}" font-size="10" fill="#374151" text-anchor="end">${escapeXml(`${scopes[i]}/${name}`)}</text>`);
    parts.push(`<rect class="${cls}" x="${plotX0}" y="${y + 3}" width="${Math.max(xEnd - plotX0, 1).toFixed(2)}" height="${rowH - 7}" fill="${color}"/>`);
  });

  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">\n${parts.join('\n')}\n</svg>\n`;
}

/** Pass/fail table for the report index page. */
export function renderVerifyTableHtml(table: Table): string {
  const names = stringColumn(table, 'name');
  const scopes = stringColumn(table, 'scope');
  const residual = numberColumn(table, 'residual');
  const tolerance = numberColumn(table, 'tolerance');
  const passed = numberColumn(table, 'passed').map(v => v !== 0);
  const rows = names.map((name, i) => {
    const cls = passed[i] ? 'pass' : 'fail';
    return `<tr class="${cls}"><td>${escapeXml(scopes[i])}</td><td>${escapeXml(name)}</td>` +
           `<td>${residual[i].toExponential(3)}</td><td>${tolerance[i].toExponential(1)}</td>` +
           `<td>${passed[i] ? 'PASS' : 'FAIL'}</td></tr>`;
  }).join('\n');
  return `<table class="verify">\n<thead><tr><th>scope</th><th>check</th><th>residual</th><th>tolerance</th><th>status</th></tr></thead>\n<tbody>\n${rows}\n</tbody>\n</table>`;
}

export const FIGURES: Record<string, FigureDef> = {
  'invariant-overlay': {
    input: 'invariant.csv',
    caption: 'Solved invariant density overlaid on the closed-form profile.',
    build: buildInvariantOverlay,
  },
  'dilation-profiles': {
    input: 'dilate.csv',
    caption: 'Density profiles before/after dilation and the flattened curvature.',
    build: buildDilationProfiles,
  },
  'semigroup-convergence': {
    input: 'semigroup.csv',
    caption: 'Monte Carlo semigroup estimates against the oracle, with CLT error decay.',
    build: buildSemigroupConvergence,
  },
  'flow-levels': {
    input: 'flow_convergence.csv',
    caption: 'Trajectory endpoint agreement across dyadic driving resolutions.',
    build: buildFlowLevels,
  },
  'verify-dashboard': {
    input: 'verify.csv',
    caption: 'Residual-vs-tolerance dashboard for the verification suite.',
    build: buildVerifyDashboard,
  },
};
