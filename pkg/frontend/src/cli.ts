#!/usr/bin/env node
import { writeFileSync } from 'fs';

import { SchemaError, parseCsv } from './csv.js';
import { FigureKind, extractSeries, sidecarJson } from './series.js';
import { renderSvg } from './svg.js';
import { renderTable3 } from './table3.js';

const LINE_FIGURES: Record<string, string> = {
  fig4: 'Improvement over SRPT-k across loads',
  fig5: 'Improvement over SRPT-k, expanded axis',
  fig6: 'SEK family for k = 2..6 servers',
  fig7: 'SEK-n variants across server counts',
  fig8: 'SEK-Estimate vs SRPT-Estimate under size-estimate error',
};

function flags(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a.startsWith('--')) {
      const eq = a.indexOf('=');
      if (eq >= 0) out.set(a.slice(2, eq), a.slice(eq + 1));
      else out.set(a.slice(2), argv[++i] ?? '');
    }
  }
  return out;
}

export function run(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== 'render') {
    console.error('usage: plots render --csv <path> --figure <fig4..fig8|table3> --out <path>');
    return 1;
  }
  const opt = flags(rest);
  const csv = opt.get('csv');
  const figure = opt.get('figure');
  const out = opt.get('out');
  if (!csv || !figure || !out) {
    console.error('render needs --csv, --figure and --out');
    return 1;
  }
  try {
    const rows = parseCsv(csv);
    if (figure === 'table3') {
      writeFileSync(out, renderTable3(rows));
      console.log(`wrote ${out}`);
      return 0;
    }
    const title = LINE_FIGURES[figure];
    if (!title) {
      console.error(`unknown figure ${figure}`);
      return 1;
    }
    const series = extractSeries(rows, figure as FigureKind);
    writeFileSync(out, renderSvg(title, series));
    const sidecar = `${out}.series.json`;
    writeFileSync(sidecar, sidecarJson(figure, series));
    console.log(`wrote ${out} and ${sidecar}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const isMain = process.argv[1] && import.meta.url.endsWith(
  process.argv[1].split('/').pop() ?? '',
);
if (isMain) {
  process.exit(run(process.argv.slice(2)));
}
