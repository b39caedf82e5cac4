import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { afterAll, describe, expect, it } from 'vitest';
import { numberColumn, readTable } from '../src/csv';
import { FigureError, FIGURES, fitPowerLaw, renderVerifyBars } from '../src/figures';

const FIXTURES = path.join(__dirname, 'fixtures', 'run');

const tmpRoot = fs.mkdtempSync(path.join(os.tmpdir(), 'figures-test-'));
afterAll(() => fs.rmSync(tmpRoot, { recursive: true, force: true }));

const PROVENANCE = `# config_sha256=${'b'.repeat(64)} seed=0`;

describe('fitPowerLaw', () => {
  it('recovers the exact exponent of y = 5 / sqrt(n)', () => {
    // oracle by construction: slope -1/2, intercept log10(5)
    const fit = fitPowerLaw([[100, 0.5], [400, 0.25], [10000, 0.05]]);
    expect(Math.abs(fit.slope - (-0.5))).toBeLessThan(1e-12);
    expect(Math.abs(fit.intercept - Math.log10(5))).toBeLessThan(1e-12);
  });

  it('ignores nonpositive points', () => {
    const fit = fitPowerLaw([[100, 0.5], [0, 7], [400, 0.25], [10000, 0.05], [-3, 1]]);
    expect(Math.abs(fit.slope - (-0.5))).toBeLessThan(1e-12);
  });

  it('matches an external least-squares fit of the bundled fixture', () => {
    // frozen from numpy.polyfit on the same (log10 n, log10 stderr) data
    const table = readTable(path.join(FIXTURES, 'semigroup.csv'));
    const n = numberColumn(table, 'n_paths');
    const stderr = numberColumn(table, 'stderr');
    const fit = fitPowerLaw(n.map((v, i) => [v, stderr[i]] as [number, number]));
    expect(fit.slope).toBeCloseTo(-0.4993369998781204, 12);
    expect(fit.intercept).toBeCloseTo(-0.15244999159494257, 12);
  });

  it('needs two positive points', () => {
    expect(() => fitPowerLaw([[100, 0.5]])).toThrow(FigureError);
    expect(() => fitPowerLaw([[100, 0.5], [100, 0.25]])).toThrow(/distinct x/);
  });
});

describe('invariant-overlay', () => {
  const svg = FIGURES['invariant-overlay'].build(FIXTURES);

  it('contains both the solver and the oracle curve', () => {
    expect(svg).toContain('class="series solver"');
    expect(svg).toContain('class="series oracle"');
    expect(svg).toContain('>solver</text>');
    expect(svg).toContain('>oracle</text>');
  });

  it('annotates the gap computed by the experiment runner', () => {
    const table = readTable(path.join(FIXTURES, 'invariant.csv'));
    const expected = Math.max(...numberColumn(table, 'abs_err')).toExponential(2);
    expect(svg).toContain(`max |solver - oracle| = ${expected}`);
  });
});

describe('dilation-profiles', () => {
  const svg = FIGURES['dilation-profiles'].build(FIXTURES);

  it('shows the density before and after dilation in one panel pair', () => {
    expect(svg).toContain('>before dilation</text>');
    expect(svg).toContain('>after dilation</text>');
    expect(svg).toContain('>kappa after dilation</text>');
    expect((svg.match(/<g transform="translate/g) ?? []).length).toBe(2);
  });

  it('annotates flatness of the dilated profile and curvature defect', () => {
    const table = readTable(path.join(FIXTURES, 'dilate.csv'));
    const drift = Math.max(...numberColumn(table, 'phi_dilated').map(v => Math.abs(v - 1)));
    const defect = Math.max(...numberColumn(table, 'delta_kappa').map(Math.abs));
    expect(svg).toContain(`max |phi_after - 1| = ${drift.toExponential(2)}`);
    expect(svg).toContain(`max |defect| = ${defect.toExponential(2)}`);
  });
});

describe('semigroup-convergence', () => {
  const svg = FIGURES['semigroup-convergence'].build(FIXTURES);

  it('draws estimates with error bars against the oracle', () => {
    expect(svg).toContain('class="errbars estimate-3-stderr"');
    expect(svg).toContain('class="series oracle-1"');
  });

  it('annotates a fitted slope consistent with the CLT', () => {
    expect(svg).toContain('fitted slope -0.499 (CLT: -0.5)');
  });
});

describe('flow-levels', () => {
  const svg = FIGURES['flow-levels'].build(FIXTURES);

  it('plots one marker per coarse level and names the reference', () => {
    const group = svg.match(/<g class="series endpoint-gap"[^>]*>(.*?)<\/g>/s);
    expect(group).not.toBeNull();
    expect((group![1].match(/<circle/g) ?? []).length).toBe(5);
    expect(svg).toContain('reference level k = 8 (gap 0, omitted)');
    expect(svg).toContain('horizon T = 1');
  });
});

describe('verify-dashboard', () => {
  it('draws one passing bar per check from the fixture', () => {
    const svg = FIGURES['verify-dashboard'].build(FIXTURES);
    expect((svg.match(/class="check pass"/g) ?? []).length).toBe(26);
    expect(svg).not.toContain('check fail');
    expect(svg).toContain('26/26 checks passed');
    expect(svg).toContain('>tolerance</text>');
  });

  it('marks failing checks red', () => {
    const svg = renderVerifyBars({
      provenance: { sha256: 'c'.repeat(64), seed: 1 },
      header: ['name', 'scope', 'residual', 'tolerance', 'passed'],
      rows: [
        ['drift', 'geometry', '1e-12', '1e-10', '1'],
        ['doomed', 'flows', '5e-3', '1e-8', '0'],
      ],
    });
    expect((svg.match(/class="check pass"/g) ?? []).length).toBe(1);
    expect((svg.match(/class="check fail"/g) ?? []).length).toBe(1);
    expect(svg).toContain('1/2 checks passed');
  });
});

describe('input validation', () => {
  it('rejects a CSV with no data rows', () => {
    const dir = path.join(tmpRoot, 'empty-rows');
    fs.mkdirSync(dir);
    fs.writeFileSync(path.join(dir, 'invariant.csv'),
                     `${PROVENANCE}\nt,phi,oracle,abs_err,sqrt_g\n`);
    expect(() => FIGURES['invariant-overlay'].build(dir)).toThrow(FigureError);
    expect(() => FIGURES['invariant-overlay'].build(dir)).toThrow(/no data rows/);
  });

  it('propagates missing-file errors with the file name', () => {
    expect(() => FIGURES['flow-levels'].build(tmpRoot)).toThrow(/flow_convergence\.csv/);
  });

  it('rejects convergence data with no positive gaps', () => {
    const dir = path.join(tmpRoot, 'zero-gaps');
    fs.mkdirSync(dir);
    fs.writeFileSync(path.join(dir, 'flow_convergence.csv'),
                     `${PROVENANCE}\nk,t_final,endpoint_gap_to_finest\n3,1,0\n`);
    expect(() => FIGURES['flow-levels'].build(dir)).toThrow(/no positive endpoint gaps/);
  });
});
