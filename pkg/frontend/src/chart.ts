/** Pure SVG chart builders.
 *
 * Boundaries are drawn as step functions in rate space (lower_t/t, upper_t/t)
 * with the raw counts carried in tooltips; the series values are embedded in
 * data-points attributes so tests can verify the rendered chart is exactly
 * the exported schedule, number for number.
 */

import type { DesignDetail, OcResponse, SessionView } from './types.js';

export interface BoundaryPoint {
  t: number;
  lower: number;
  upper: number;
  lowerCount: number;
  upperCount: number;
}

/** Rate-space boundary series of a calibrated design: t, lower_t/t, upper_t/t. */
export function boundarySeries(design: DesignDetail): BoundaryPoint[] {
  const horizon = design.derived.horizon;
  return design.stages
    .filter((row) => row.t < horizon)
    .map((row) => ({
      t: row.t,
      lower: row.lower / row.t,
      upper: row.upper / row.t,
      lowerCount: row.lower,
      upperCount: row.upper,
    }));
}

export interface PathPoint {
  t: number;
  rate: number;
  count: number;
}

/** Sample-mean path of the current session: t, S_t/t. */
export function sessionPath(view: SessionView): PathPoint[] {
  return view.stages.map((row) => ({ t: row.t, rate: row.s / row.t, count: row.s }));
}

const WIDTH = 720;
const HEIGHT = 360;
const PAD = { left: 46, right: 14, top: 12, bottom: 30 };

export function xScale(t: number, horizon: number): number {
  return PAD.left + ((WIDTH - PAD.left - PAD.right) * t) / horizon;
}

export function yScale(rate: number): number {
  return PAD.top + (HEIGHT - PAD.top - PAD.bottom) * (1 - rate);
}

function stepPath(points: Array<{ t: number; v: number }>, horizon: number): string {
  const parts: string[] = [];
  points.forEach((pt, i) => {
    const x0 = xScale(pt.t, horizon);
    const x1 = xScale(Math.min(pt.t + 1, horizon), horizon);
    const y = yScale(pt.v);
    parts.push(`${i === 0 ? 'M' : 'L'}${x0},${y}`, `L${x1},${y}`);
  });
  return parts.join(' ');
}

function seriesAttr(points: Array<{ t: number; v: number }>): string {
  return points.map((pt) => `${pt.t}:${pt.v}`).join(';');
}

function escapeAttr(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/"/g, '&quot;').replace(/</g, '&lt;');
}

/** Session boundary chart: calibrated bands plus the running sample mean. */
export function renderBoundaryChart(design: DesignDetail, view: SessionView | null): string {
  const horizon = design.derived.horizon;
  const series = boundarySeries(design);
  const cfg = design.config as { r?: number; theta_h?: number; theta_k?: number };
  const parts: string[] = [];
  parts.push(
    `<svg class="boundary-chart" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="stopping boundaries and sample-mean path">`,
  );
  if (cfg.r !== undefined && cfg.theta_h !== undefined && cfg.theta_k !== undefined) {
    const yTop = yScale(cfg.r + cfg.theta_k);
    const yBot = yScale(cfg.r - cfg.theta_h);
    parts.push(
      `<rect class="indifference-band" x="${xScale(0, horizon)}" y="${yTop}" ` +
        `width="${xScale(horizon, horizon) - xScale(0, horizon)}" height="${yBot - yTop}"/>`,
      `<line class="tolerable-rate" x1="${xScale(0, horizon)}" y1="${yScale(cfg.r)}" ` +
        `x2="${xScale(horizon, horizon)}" y2="${yScale(cfg.r)}"/>`,
    );
  }
  for (const frac of [0, 0.25, 0.5, 0.75, 1]) {
    parts.push(
      `<text class="axis-label" x="${PAD.left - 6}" y="${yScale(frac) + 4}" text-anchor="end">${frac}</text>`,
    );
  }
  for (const t of [0, Math.round(horizon / 2), horizon]) {
    parts.push(
      `<text class="axis-label" x="${xScale(t, horizon)}" y="${HEIGHT - 8}" text-anchor="middle">${t}</text>`,
    );
  }
  const upperPts = series.map((pt) => ({ t: pt.t, v: pt.upper }));
  const lowerPts = series.map((pt) => ({ t: pt.t, v: pt.lower }));
  parts.push(
    `<path class="boundary upper" data-points="${escapeAttr(seriesAttr(upperPts))}" d="${stepPath(upperPts, horizon)}" fill="none"/>`,
    `<path class="boundary lower" data-points="${escapeAttr(seriesAttr(lowerPts))}" d="${stepPath(lowerPts, horizon)}" fill="none"/>`,
  );
  if (design.truncation && design.truncation.T < design.config.n) {
    const { T, c_t } = design.truncation;
    parts.push(
      `<circle class="terminal-threshold" cx="${xScale(T, horizon)}" cy="${yScale(c_t / T)}" r="5">` +
        `<title>terminal at t=${T}: accept K above count ${c_t}</title></circle>`,
    );
  }
  if (view) {
    const path = sessionPath(view);
    if (path.length > 0) {
      const pts = path.map((pt) => `${xScale(pt.t, horizon)},${yScale(pt.rate)}`).join(' ');
      parts.push(
        `<polyline class="sample-mean" data-points="${escapeAttr(
          seriesAttr(path.map((pt) => ({ t: pt.t, v: pt.rate }))),
        )}" points="${pts}" fill="none"/>`,
      );
      for (const pt of path) {
        parts.push(
          `<circle class="sample-point" cx="${xScale(pt.t, horizon)}" cy="${yScale(pt.rate)}" r="3">` +
            `<title>t=${pt.t}: ${pt.count} of ${pt.t} deviated</title></circle>`,
        );
      }
    }
  }
  parts.push('</svg>');
  return parts.join('\n');
}

/** Error-probability and expected-stopping-time curves over the rate grid. */
export function renderOcChart(oc: OcResponse, design: DesignDetail): string {
  const cfg = design.config as { n: number; r?: number; theta_h?: number; theta_k?: number };
  const n = cfg.n;
  const maxTau = Math.max(...oc.points.map((pt) => pt.expected_tau), 1);
  const parts: string[] = [];
  parts.push(
    `<svg class="oc-chart" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="operating characteristic">`,
  );
  if (cfg.r !== undefined && cfg.theta_h !== undefined && cfg.theta_k !== undefined) {
    const x0 = xScale((cfg.r - cfg.theta_h) * n, n);
    const x1 = xScale((cfg.r + cfg.theta_k) * n, n);
    parts.push(
      `<rect class="indifference-band" x="${x0}" y="${PAD.top}" width="${x1 - x0}" height="${
        HEIGHT - PAD.top - PAD.bottom
      }"/>`,
    );
  }
  const errPts = oc.points.map((pt) => `${xScale(pt.m, n)},${yScale(pt.error_prob)}`).join(' ');
  const tauPts = oc.points
    .map((pt) => `${xScale(pt.m, n)},${yScale(pt.expected_tau / maxTau)}`)
    .join(' ');
  parts.push(
    `<polyline class="error-curve" data-points="${escapeAttr(
      seriesAttr(oc.points.map((pt) => ({ t: pt.m, v: pt.error_prob }))),
    )}" points="${errPts}" fill="none"/>`,
    `<polyline class="tau-curve" data-points="${escapeAttr(
      seriesAttr(oc.points.map((pt) => ({ t: pt.m, v: pt.expected_tau }))),
    )}" points="${tauPts}" fill="none"/>`,
    `<text class="axis-label" x="${PAD.left}" y="${PAD.top + 10}">error probability (left), expected stopping time / ${Math.ceil(maxTau)} (right)</text>`,
  );
  parts.push('</svg>');
  return parts.join('\n');
}
