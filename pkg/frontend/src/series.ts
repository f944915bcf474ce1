import { Row, SchemaError, aggregates } from './csv.js';

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
}

export type FigureKind = 'fig4' | 'fig5' | 'fig6' | 'fig7' | 'fig8';

/**
 * Group aggregate rows into plotted series: improvement ratio vs load, one
 * line per policy (and per k when several server counts are present; per
 * sigma for the estimate-error family).
 */
export function extractSeries(rows: Row[], figure: FigureKind): Series[] {
  const agg = aggregates(rows);
  if (agg.length === 0) {
    throw new SchemaError('no aggregate rows (blank seed) to plot');
  }
  const multiK = new Set(agg.map((r) => r.k)).size > 1;
  const byLabel = new Map<string, Point[]>();
  for (const r of agg) {
    if (r.improvement_ratio === null) continue;
    let label = r.policy;
    if (multiK) label += ` (k=${r.k})`;
    if (figure === 'fig8' && r.sigma !== null) label += ` sigma=${r.sigma}`;
    let pts = byLabel.get(label);
    if (!pts) {
      pts = [];
      byLabel.set(label, pts);
    }
    pts.push({ x: r.rho, y: r.improvement_ratio });
  }
  const out: Series[] = [];
  for (const [label, points] of [...byLabel.entries()].sort((a, b) =>
    a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0,
  )) {
    points.sort((a, b) => a.x - b.x);
    out.push({ label, points });
  }
  if (out.length === 0) {
    throw new SchemaError('no plottable series in CSV');
  }
  return out;
}

/** The sidecar payload: exactly the plotted (x, y) pairs, key-stable. */
export function sidecarJson(figure: string, series: Series[]): string {
  return JSON.stringify({ figure, series }, null, 1) + '\n';
}
