import { readFileSync } from 'fs';
import Papa from 'papaparse';

export const REQUIRED_COLUMNS = [
  'policy', 'k', 'dist', 'rho', 'eps', 'n', 'sigma', 'seed', 'num_arrivals',
  'mean_t', 'time_avg_n', 'improvement_ratio', 'ci_halfwidth',
] as const;

export interface Row {
  policy: string;
  k: number;
  dist: string;
  rho: number;
  eps: number | null;
  n: number | null;
  sigma: number | null;
  seed: number | null;
  num_arrivals: number;
  mean_t: number;
  time_avg_n: number;
  improvement_ratio: number | null;
  ci_halfwidth: number | null;
}

export class SchemaError extends Error {}

function num(v: string): number | null {
  return v === '' ? null : Number(v);
}

/** Parse a sweep CSV; never mutates the input file. */
export function parseCsv(path: string): Row[] {
  const text = readFileSync(path, 'utf8');
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse failure: ${parsed.errors[0].message}`);
  }
  const [header, ...records] = parsed.data;
  if (!header || REQUIRED_COLUMNS.some((c, i) => header[i] !== c)) {
    throw new SchemaError(
      `bad header: expected ${REQUIRED_COLUMNS.join(',')}, got ${(header ?? []).join(',')}`,
    );
  }
  if (records.length === 0) {
    throw new SchemaError('no data rows');
  }
  return records.map((cells) => ({
    policy: cells[0],
    k: Number(cells[1]),
    dist: cells[2],
    rho: Number(cells[3]),
    eps: num(cells[4]),
    n: num(cells[5]),
    sigma: num(cells[6]),
    seed: num(cells[7]),
    num_arrivals: Number(cells[8]),
    mean_t: Number(cells[9]),
    time_avg_n: Number(cells[10]),
    improvement_ratio: num(cells[11]),
    ci_halfwidth: num(cells[12]),
  }));
}

/** Aggregate rows (blank seed) carry the plotted improvement ratios. */
export function aggregates(rows: Row[]): Row[] {
  return rows.filter((r) => r.seed === null);
}

/** Pull csq / rho_high back out of a hyperexp distribution spec. */
export function hyperexpParams(dist: string): { csq: number; rhoHigh: number } | null {
  const m = dist.match(/^hyperexp:csq=([^,]+),rho_high=([^,]+),mean=/);
  if (!m) return null;
  return { csq: Number(m[1]), rhoHigh: Number(m[2]) };
}
