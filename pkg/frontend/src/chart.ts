// chart.ts - Minimal static SVG charts: linear/log scales, lines, markers,
// error bars, legend.  String assembly only, no DOM and no canvas, so the
// output is deterministic byte-for-byte for a given input.

export interface Series {
  label: string;
  points: Array<[number, number]>;
  color: string;
  kind?: 'line' | 'dashed' | 'markers';
  /** vertical error-bar half widths, same length as points */
  yerr?: number[];
  /** slug used in class="series <slug>"; defaults to a slug of the label */
  cssClass?: string;
}

export interface Axis {
  label: string;
  log?: boolean;
}

export interface PanelSpec {
  title?: string;
  x: Axis;
  y: Axis;
  series: Series[];
  /** annotation lines drawn inside the plot area, top left */
  notes?: string[];
  width?: number;
  height?: number;
}

export const PALETTE = ['#2563eb', '#dc2626', '#16a34a', '#ea580c', '#9333ea', '#0891b2'];

const MARGIN = { top: 44, right: 18, bottom: 48, left: 70 };

export function slug(label: string): string {
  return label.toLowerCase().replace(/[^a-z0-9]+/g, '-').replace(/^-+|-+$/g, '');
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
          .replace(/"/g, '&quot;');
}

// ---------------------------------------------------------------------------
// scales and ticks
// ---------------------------------------------------------------------------

interface Scale {
  /** data value -> pixel */
  px(v: number): number;
  /** true if the value is representable on this scale */
  ok(v: number): boolean;
  ticks: number[];
  log: boolean;
}

function niceStep(rough: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const r = rough / mag;
  if (r <= 1) return mag;
  if (r <= 2) return 2 * mag;
  if (r <= 5) return 5 * mag;
  return 10 * mag;
}

export function linearTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const step = niceStep((hi - lo) / n);
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    // snap to a clean decimal so 0.30000000000000004 renders as 0.3
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function logTicks(lo10: number, hi10: number): number[] {
  const span = hi10 - lo10;
  const step = span > 9 ? Math.ceil(span / 9) : 1;
  const out: number[] = [];
  // Number('1e-4') is exact where Math.pow(10, -4) is not
  for (let e = lo10; e <= hi10; e += step) out.push(Number(`1e${e}`));
  return out;
}

function makeScale(values: number[], log: boolean, pxLo: number, pxHi: number): Scale {
  const usable = values.filter(v => Number.isFinite(v) && (!log || v > 0));
  if (usable.length === 0) {
    throw new Error(log ? 'no positive values to place on a log axis'
                        : 'no finite values to plot');
  }
  let lo = Math.min(...usable);
  let hi = Math.max(...usable);
  let ticks: number[];
  if (log) {
    let e0 = Math.floor(Math.log10(lo));
    let e1 = Math.ceil(Math.log10(hi));
    if (e1 === e0) e1 = e0 + 1;
    lo = e0;
    hi = e1;
    ticks = logTicks(e0, e1);
  } else {
    if (lo === hi) {
      const pad = Math.abs(lo) * 0.1 || 1;
      lo -= pad;
      hi += pad;
    } else {
      const pad = (hi - lo) * 0.06;
      lo -= pad;
      hi += pad;
    }
    ticks = linearTicks(lo, hi);
  }
  const span = hi - lo;
  return {
    px(v: number): number {
      const u = log ? Math.log10(v) : v;
      return pxLo + ((u - lo) / span) * (pxHi - pxLo);
    },
    ok(v: number): boolean {
      return Number.isFinite(v) && (!log || v > 0);
    },
    ticks,
    log,
  };
}

export function formatTick(v: number, log: boolean): string {
  if (log) {
    const e = Math.round(Math.log10(v));
    if (e >= -2 && e <= 3) return String(Number(v.toPrecision(6)));
    return `1e${e}`;
  }
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-3)) {
    return v.toExponential(1).replace('e+', 'e');
  }
  return String(Number(v.toPrecision(6)));
}

// ---------------------------------------------------------------------------
// panel rendering
// ---------------------------------------------------------------------------

interface BuiltPanel {
  inner: string;
  width: number;
  height: number;
}

function buildPanel(spec: PanelSpec): BuiltPanel {
  const width = spec.width ?? 760;
  const height = spec.height ?? 360;
  const plotX0 = MARGIN.left;
  const plotX1 = width - MARGIN.right;
  const plotY0 = MARGIN.top;
  const plotY1 = height - MARGIN.bottom;

  const xs = spec.series.flatMap(s => s.points.map(p => p[0]));
  const ys = spec.series.flatMap((s, _) =>
    s.points.flatMap((p, i) => {
      const e = s.yerr ? s.yerr[i] : 0;
      return e > 0 ? [p[1] - e, p[1] + e] : [p[1]];
    }));
  const sx = makeScale(xs, spec.x.log ?? false, plotX0, plotX1);
  const sy = makeScale(ys, spec.y.log ?? false, plotY1, plotY0);

  const parts: string[] = [];
  parts.push(`<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`);

  // grid + tick labels
  for (const t of sx.ticks) {
    const x = sx.px(t).toFixed(2);
    parts.push(`<line x1="${x}" y1="${plotY0}" x2="${x}" y2="${plotY1}" stroke="#e5e7eb" stroke-width="1"/>`);
    parts.push(`<text x="${x}" y="${plotY1 + 16}" font-size="11" fill="#374151" text-anchor="middle">${escapeXml(formatTick(t, sx.log))}</text>`);
  }
  for (const t of sy.ticks) {
    const y = sy.px(t).toFixed(2);
    parts.push(`<line x1="${plotX0}" y1="${y}" x2="${plotX1}" y2="${y}" stroke="#e5e7eb" stroke-width="1"/>`);
    parts.push(`<text x="${plotX0 - 6}" y="${y}" font-size="11" fill="#374151" text-anchor="end" dominant-baseline="middle">${escapeXml(formatTick(t, sy.log))}</text>`);
  }
  parts.push(`<rect x="${plotX0}" y="${plotY0}" width="${plotX1 - plotX0}" height="${plotY1 - plotY0}" fill="none" stroke="#9ca3af" stroke-width="1"/>`);

  if (spec.title) {
    parts.push(`<text x="${plotX0}" y="24" font-size="14" font-weight="bold" fill="#111827">${escapeXml(spec.title)}</text>`);
  }
  parts.push(`<text x="${(plotX0 + plotX1) / 2}" y="${height - 10}" font-size="12" fill="#111827" text-anchor="middle">${escapeXml(spec.x.label)}</text>`);
  parts.push(`<text x="16" y="${(plotY0 + plotY1) / 2}" font-size="12" fill="#111827" text-anchor="middle" transform="rotate(-90 16 ${(plotY0 + plotY1) / 2})">${escapeXml(spec.y.label)}</text>`);

  // series
  for (const s of spec.series) {
    const cls = s.cssClass ?? slug(s.label);
    const pts = s.points
      .map((p, i) => ({ p, e: s.yerr ? s.yerr[i] : 0 }))
      .filter(({ p }) => sx.ok(p[0]) && sy.ok(p[1]));
    if (pts.length === 0) continue;

    if (s.yerr) {
      const bars = pts.filter(({ p, e }) => e > 0 && sy.ok(p[1] - e) && sy.ok(p[1] + e))
        .map(({ p, e }) => {
          const x = sx.px(p[0]).toFixed(2);
          const yLo = sy.px(p[1] - e).toFixed(2);
          const yHi = sy.px(p[1] + e).toFixed(2);
          return `<line x1="${x}" y1="${yLo}" x2="${x}" y2="${yHi}"/>` +
                 `<line x1="${Number(x) - 4}" y1="${yLo}" x2="${Number(x) + 4}" y2="${yLo}"/>` +
                 `<line x1="${Number(x) - 4}" y1="${yHi}" x2="${Number(x) + 4}" y2="${yHi}"/>`;
        }).join('');
      parts.push(`<g class="errbars ${cls}" stroke="${s.color}" stroke-width="1.2">${bars}</g>`);
    }

    const kind = s.kind ?? 'line';
    if (kind === 'markers' || s.yerr) {
      const dots = pts.map(({ p }) =>
        `<circle cx="${sx.px(p[0]).toFixed(2)}" cy="${sy.px(p[1]).toFixed(2)}" r="3.2"/>`).join('');
      parts.push(`<g class="series ${cls}" fill="${s.color}">${dots}</g>`);
    }
    if (kind === 'line' || kind === 'dashed') {
      const attr = kind === 'dashed' ? ' stroke-dasharray="7 4"' : '';
      const path = pts.map(({ p }) => `${sx.px(p[0]).toFixed(2)},${sy.px(p[1]).toFixed(2)}`).join(' ');
      parts.push(`<polyline class="series ${cls}" points="${path}" fill="none" stroke="${s.color}" stroke-width="1.8"${attr}/>`);
    }
  }

  // legend, top right inside the plot
  const legendW = Math.max(...spec.series.map(s => s.label.length)) * 6.6 + 36;
  const legendX = plotX1 - legendW - 8;
  let legendY = plotY0 + 8;
  parts.push(`<rect x="${legendX}" y="${legendY}" width="${legendW}" height="${spec.series.length * 17 + 8}" fill="#ffffff" fill-opacity="0.92" stroke="#d1d5db"/>`);
  spec.series.forEach((s, i) => {
    const y = legendY + 13 + i * 17;
    if ((s.kind ?? 'line') === 'markers') {
      parts.push(`<circle cx="${legendX + 14}" cy="${y - 3}" r="3.2" fill="${s.color}"/>`);
    } else {
      const dash = s.kind === 'dashed' ? ' stroke-dasharray="7 4"' : '';
      parts.push(`<line x1="${legendX + 6}" y1="${y - 3}" x2="${legendX + 24}" y2="${y - 3}" stroke="${s.color}" stroke-width="1.8"${dash}/>`);
    }
    parts.push(`<text x="${legendX + 30}" y="${y}" font-size="11" fill="#111827">${escapeXml(s.label)}</text>`);
  });

  // notes, top left inside the plot
  (spec.notes ?? []).forEach((note, i) => {
    parts.push(`<text x="${plotX0 + 8}" y="${plotY0 + 16 + i * 15}" font-size="11" fill="#4b5563" class="note">${escapeXml(note)}</text>`);
  });

  return { inner: parts.join('\n'), width, height };
}

export function renderPanel(spec: PanelSpec): string {
  const built = buildPanel(spec);
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${built.width}" height="${built.height}" viewBox="0 0 ${built.width} ${built.height}">\n${built.inner}\n</svg>\n`;
}

/** Stack several panels vertically into one SVG document. */
export function composePanels(specs: PanelSpec[]): string {
  const built = specs.map(buildPanel);
  const width = Math.max(...built.map(b => b.width));
  const height = built.reduce((acc, b) => acc + b.height, 0);
  const groups: string[] = [];
  let offset = 0;
  for (const b of built) {
    groups.push(`<g transform="translate(0 ${offset})">\n${b.inner}\n</g>`);
    offset += b.height;
  }
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">\n${groups.join('\n')}\n</svg>\n`;
}
