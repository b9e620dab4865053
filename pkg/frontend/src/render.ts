/** Pure HTML render functions: the whole screen is a function of the latest
 * service responses, so every state is snapshot-testable without a browser.
 */

import { renderBoundaryChart } from './chart.js';
import type { DesignDetail, ErrorDetail, SessionView } from './types.js';

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export function formatRate(x: number): string {
  return x.toFixed(4).replace(/0+$/, '').replace(/\.$/, '');
}

/** Status banner; data-status always carries the service's status verbatim. */
export function renderBanner(view: SessionView): string {
  let text: string;
  if (view.status === 'continue') {
    text =
      view.t === 0
        ? 'continue — no items inspected yet'
        : `continue — inspected ${view.t} of ${view.design.n}, ${view.count} deviations (p&#770; = ${formatRate(view.p_hat)})`;
  } else {
    text = `${view.status} at t=${view.decided_at} (${view.decision_source})`;
  }
  return `<div class="banner ${view.status}" data-status="${view.status}">${text}</div>`;
}

export function renderEventLog(view: SessionView): string {
  const items = view.stages
    .map((row) => {
      const x = row.s - (view.stages[row.t - 2]?.s ?? 0);
      const band =
        row.lower === null || row.upper === null
          ? 'terminal'
          : `band [${row.lower}, ${row.upper}]`;
      return `<li>t=${row.t}: ${x === 1 ? 'deviation' : 'no deviation'} — S=${row.s}, ${band}</li>`;
    })
    .reverse();
  return `<ol class="event-log" reversed>${items.join('')}</ol>`;
}

function designCaption(view: SessionView): string {
  const d = view.design;
  const extras: string[] = [];
  if (d.min_stage > 1) extras.push(`no stopping before t=${d.min_stage}`);
  if (d.horizon < d.n) extras.push(`truncated at T=${d.horizon}`);
  return (
    `n=${d.n}, r=${formatRate(d.r)}, ` +
    `&theta;<sub>H</sub>=${formatRate(d.theta_h)}, &theta;<sub>K</sub>=${formatRate(d.theta_k)}, ` +
    `&alpha;=${formatRate(d.alpha)}, &beta;=${formatRate(d.beta)}, ${esc(d.variant)}` +
    (extras.length ? ` (${extras.join('; ')})` : '')
  );
}

/** Full session screen: caption, banner, chart, entry buttons, event log. */
export function renderSessionScreen(view: SessionView, design: DesignDetail | null): string {
  const decided = view.status !== 'continue';
  const parts = [
    `<div class="design-caption">${designCaption(view)}</div>`,
    renderBanner(view),
    design ? renderBoundaryChart(design, view) : '<div class="chart-placeholder">loading design&hellip;</div>',
    `<div class="entry-buttons">` +
      `<button id="observe-clean" ${decided ? 'disabled' : ''}>No deviation</button>` +
      `<button id="observe-deviation" ${decided ? 'disabled' : ''}>Deviation</button>` +
      `<button id="undo" class="undo" ${view.t === 0 ? 'disabled' : ''}>Undo</button>` +
      `</div>`,
    renderEventLog(view),
  ];
  return parts.join('\n');
}

/** 422 payloads verbatim, mapped to fields when the server names them. */
export function renderFieldErrors(detail: ErrorDetail): string {
  if (typeof detail === 'string') {
    return `<ul class="field-errors"><li>${esc(detail)}</li></ul>`;
  }
  const items = detail.map((entry) => {
    const field = entry.loc
      .filter((part) => part !== 'body')
      .map(String)
      .join('.');
    return `<li data-field="${esc(field)}"><strong>${esc(field)}</strong>: ${esc(entry.msg)}</li>`;
  });
  return `<ul class="field-errors">${items.join('')}</ul>`;
}

export function renderProgress(progress: number, state: string): string {
  const pct = Math.round(progress * 100);
  return (
    `<div class="calibration-progress" data-state="${esc(state)}">` +
    `calibrating&hellip; ${pct}%<progress max="100" value="${pct}"></progress></div>`
  );
}
