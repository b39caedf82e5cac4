#!/usr/bin/env node
// cli.ts - render_report --in <dir> --out <dir> [--figures a,b,...]

import * as fs from 'fs';
import * as path from 'path';
import { allFailed, DEFAULT_FIGURES, renderReport } from './report';

const USAGE = `usage: render_report --in <dir> --out <dir> [--figures <name,name,...>]

Renders report figures from experiment CSV outputs.
Figures: ${DEFAULT_FIGURES.join(', ')} (default: all).
Exit codes: 0 rendered (or nothing requested), 1 every figure failed, 2 bad arguments.`;

export function main(argv: string[]): number {
  let inDir: string | undefined;
  let outDir: string | undefined;
  let figures = [...DEFAULT_FIGURES];

  for (let i = 0; i < argv.length; i++) {
    let arg = argv[i];
    let inlineValue: string | undefined;
    const eq = arg.indexOf('=');
    if (arg.startsWith('--') && eq > 0) {
      inlineValue = arg.slice(eq + 1);
      arg = arg.slice(0, eq);
    }
    const next = (): string | undefined => {
      if (inlineValue !== undefined) return inlineValue;
      i += 1;
      return argv[i];
    };
    switch (arg) {
      case '--in':
        inDir = next();
        break;
      case '--out':
        outDir = next();
        break;
      case '--figures': {
        const raw = next();
        if (raw === undefined) {
          process.stderr.write(`--figures needs a value\n${USAGE}\n`);
          return 2;
        }
        figures = raw.split(',').map(s => s.trim()).filter(s => s !== '');
        break;
      }
      case '--help':
      case '-h':
        process.stdout.write(USAGE + '\n');
        return 0;
      default:
        process.stderr.write(`unknown argument '${argv[i]}'\n${USAGE}\n`);
        return 2;
    }
  }

  if (inDir === undefined || outDir === undefined) {
    process.stderr.write(`--in and --out are required\n${USAGE}\n`);
    return 2;
  }
  if (!fs.existsSync(inDir) || !fs.statSync(inDir).isDirectory()) {
    process.stderr.write(`input directory not found: ${inDir}\n`);
    return 2;
  }

  let results;
  try {
    results = renderReport({ inputDir: inDir, figures, outDir });
  } catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : err}\n`);
    return 2;
  }

  if (results.length === 0) {
    console.log('no figures requested; nothing to do');
    return 0;
  }
  for (const r of results) {
    if (r.status === 'ok') {
      console.log(`ok    ${r.name} -> ${path.join(outDir, r.file!)}`);
    } else {
      console.log(`error ${r.name}: ${r.error}`);
    }
  }
  const nOk = results.filter(r => r.status === 'ok').length;
  console.log(`${nOk}/${results.length} figures rendered -> ${path.join(outDir, 'index.html')}`);
  return allFailed(results) ? 1 : 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
