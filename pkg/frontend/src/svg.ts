import { Series } from './series.js';

const W = 720;
const H = 440;
const M = { top: 36, right: 220, bottom: 48, left: 64 };

const PALETTE = [
  '#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b',
  '#e377c2', '#7f7f7f', '#bcbd22', '#17becf',
];

function fmtTick(v: number): string {
  return Number(v.toPrecision(4)).toString();
}

/**
 * Deterministic hand-rolled SVG line chart: improvement ratio versus load
 * with a horizontal zero baseline and a right-hand legend.
 */
export function renderSvg(title: string, series: Series[]): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(0, ...ys);
  const y1 = Math.max(0, ...ys);
  const xSpan = x1 - x0 || 1;
  const ySpan = y1 - y0 || 1;
  const plotW = W - M.left - M.right;
  const plotH = H - M.top - M.bottom;
  const px = (x: number) => M.left + ((x - x0) / xSpan) * plotW;
  const py = (y: number) => M.top + (1 - (y - y0) / ySpan) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    `<text x="${M.left}" y="20" font-family="sans-serif" font-size="14" font-weight="bold">${title}</text>`,
  );
  // frame and zero baseline
  parts.push(
    `<rect x="${M.left}" y="${M.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333"/>`,
    `<line x1="${M.left}" y1="${py(0)}" x2="${M.left + plotW}" y2="${py(0)}" stroke="#999" stroke-dasharray="4 3"/>`,
  );
  // axis ticks
  for (let i = 0; i <= 4; i++) {
    const xv = x0 + (xSpan * i) / 4;
    const yv = y0 + (ySpan * i) / 4;
    parts.push(
      `<text x="${px(xv)}" y="${H - M.bottom + 18}" font-family="sans-serif" font-size="11" text-anchor="middle">${fmtTick(xv)}</text>`,
      `<text x="${M.left - 8}" y="${py(yv) + 4}" font-family="sans-serif" font-size="11" text-anchor="end">${fmtTick(yv * 100)}%</text>`,
    );
  }
  parts.push(
    `<text x="${M.left + plotW / 2}" y="${H - 10}" font-family="sans-serif" font-size="12" text-anchor="middle">load rho</text>`,
    `<text x="16" y="${M.top + plotH / 2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${M.top + plotH / 2})">improvement ratio</text>`,
  );
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const path = s.points.map((p) => `${px(p.x).toFixed(2)},${py(p.y).toFixed(2)}`).join(' ');
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8"/>`,
    );
    for (const p of s.points) {
      parts.push(
        `<circle cx="${px(p.x).toFixed(2)}" cy="${py(p.y).toFixed(2)}" r="2.6" fill="${color}"/>`,
      );
    }
    const ly = M.top + 14 + i * 18;
    parts.push(
      `<line x1="${W - M.right + 12}" y1="${ly - 4}" x2="${W - M.right + 36}" y2="${ly - 4}" stroke="${color}" stroke-width="1.8"/>`,
      `<text x="${W - M.right + 42}" y="${ly}" font-family="sans-serif" font-size="11">${s.label}</text>`,
    );
  });
  parts.push('</svg>');
  return parts.join('\n') + '\n';
}
