import { describe, expect, it } from 'vitest';
import {
  composePanels, escapeXml, formatTick, linearTicks, logTicks, renderPanel, slug,
} from '../src/chart';

describe('ticks', () => {
  it('covers a unit range with clean decimals', () => {
    expect(linearTicks(0, 1)).toEqual([0, 0.2, 0.4, 0.6, 0.8, 1]);
  });

  it('snaps accumulated float error to clean values', () => {
    for (const t of linearTicks(-0.06, 1.06)) {
      expect(String(t).length).toBeLessThanOrEqual(5);
    }
  });

  it('produces one tick per decade on log axes', () => {
    expect(logTicks(-4, -1)).toEqual([1e-4, 1e-3, 1e-2, 1e-1]);
  });

  it('thins decades on very wide log ranges', () => {
    expect(logTicks(-12, 1).length).toBeLessThanOrEqual(10);
  });
});

describe('formatTick', () => {
  it('uses exponent form away from unity', () => {
    expect(formatTick(1e-4, true)).toBe('1e-4');
    expect(formatTick(1e6, true)).toBe('1e6');
    expect(formatTick(12345.6, false)).toBe('1.2e4');
  });

  it('keeps small magnitudes plain', () => {
    expect(formatTick(100, true)).toBe('100');
    expect(formatTick(0.25, false)).toBe('0.25');
    expect(formatTick(0, false)).toBe('0');
  });
});

describe('renderPanel', () => {
  const line = {
    label: 'measured', color: '#2563eb',
    points: [[0, 0.1], [0.5, 0.4], [1, 0.9]] as Array<[number, number]>,
  };

  it('emits title, axis labels, and a classed polyline', () => {
    const svg = renderPanel({ title: 'Demo', x: { label: 'xs' }, y: { label: 'ys' }, series: [line] });
    expect(svg).toContain('<svg xmlns="http://www.w3.org/2000/svg"');
    expect(svg).toContain('>Demo</text>');
    expect(svg).toContain('>xs</text>');
    expect(svg).toContain('>ys</text>');
    expect(svg).toContain('class="series measured"');
    expect(svg).toContain('<polyline');
  });

  it('keeps every plotted coordinate inside the canvas', () => {
    const svg = renderPanel({ x: { label: 'x' }, y: { label: 'y' }, series: [line] });
    const match = svg.match(/points="([^"]+)"/);
    expect(match).not.toBeNull();
    for (const pair of match![1].split(' ')) {
      const [x, y] = pair.split(',').map(Number);
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(760);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(360);
    }
  });

  it('renders markers as circles and dashed lines with a dash array', () => {
    const svg = renderPanel({
      x: { label: 'x' }, y: { label: 'y' },
      series: [
        { ...line, label: 'dots', kind: 'markers' },
        { ...line, label: 'ref', kind: 'dashed' },
      ],
    });
    expect((svg.match(/<circle/g) ?? []).length).toBeGreaterThanOrEqual(3);
    expect(svg).toContain('stroke-dasharray="7 4"');
  });

  it('draws one error bar group per series with yerr', () => {
    const svg = renderPanel({
      x: { label: 'x' }, y: { label: 'y' },
      series: [{ ...line, yerr: [0.05, 0.05, 0.05] }],
    });
    expect(svg).toContain('class="errbars measured"');
  });

  it('drops nonpositive points from log axes instead of failing', () => {
    const svg = renderPanel({
      x: { label: 'x' }, y: { label: 'y', log: true },
      series: [{
        label: 'mixed', color: '#111', kind: 'markers',
        points: [[1, 1e-3], [2, 0], [3, 1e-2]],
      }],
    });
    const group = svg.match(/<g class="series mixed"[^>]*>(.*?)<\/g>/s);
    expect(group).not.toBeNull();
    expect((group![1].match(/<circle/g) ?? []).length).toBe(2);
  });

  it('fails loudly when a log axis has nothing positive to show', () => {
    expect(() => renderPanel({
      x: { label: 'x' }, y: { label: 'y', log: true },
      series: [{ label: 's', color: '#111', points: [[1, 0], [2, -1]] }],
    })).toThrow(/no positive values/);
  });

  it('renders every series into the legend', () => {
    const svg = renderPanel({
      x: { label: 'x' }, y: { label: 'y' },
      series: [line, { ...line, label: 'second <run>' }],
    });
    expect(svg).toContain('>measured</text>');
    expect(svg).toContain('second &lt;run&gt;');
  });
});

describe('composePanels', () => {
  it('stacks panels into one document of summed height', () => {
    const spec = {
      x: { label: 'x' }, y: { label: 'y' },
      series: [{ label: 's', color: '#111', points: [[0, 1], [1, 2]] as Array<[number, number]> }],
    };
    const svg = composePanels([spec, { ...spec, height: 200 }]);
    expect((svg.match(/<svg /g) ?? []).length).toBe(1);
    expect(svg).toContain('height="560"');
    expect(svg).toContain('translate(0 0)');
    expect(svg).toContain('translate(0 360)');
  });
});

describe('helpers', () => {
  it('slugs labels to css-safe tokens', () => {
    expect(slug('estimate ± 3 stderr')).toBe('estimate-3-stderr');
    expect(slug('Power-law fit')).toBe('power-law-fit');
  });

  it('escapes xml metacharacters', () => {
    expect(escapeXml('a<b>&"c"')).toBe('a&lt;b&gt;&amp;&quot;c&quot;');
  });
});
