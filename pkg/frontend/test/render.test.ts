import { describe, expect, it } from 'vitest';

import { renderBanner, renderEventLog, renderFieldErrors, renderSessionScreen } from '../src/render.js';
import {
  conflictView,
  designDetail,
  errorConfig422,
  errorType422,
  sessionAcceptedH,
  sessionFinal,
  sessionInitial,
} from './fixtures.js';

function bannerStatus(html: string): string {
  const match = html.match(/data-status="([^"]+)"/);
  if (!match) throw new Error('banner missing data-status');
  return match[1]!;
}

describe('renderBanner', () => {
  it('carries the service status verbatim for every fixture state', () => {
    for (const view of [sessionInitial(), sessionFinal(), sessionAcceptedH(), conflictView()]) {
      expect(bannerStatus(renderBanner(view))).toBe(view.status);
    }
  });

  it('shows tau and decision source once decided', () => {
    const view = sessionAcceptedH();
    const html = renderBanner(view);
    expect(html).toContain(`at t=${view.decided_at}`);
    expect(html).toContain(`(${view.decision_source})`);
  });

  it('shows progress while continuing', () => {
    const view = sessionFinal();
    if (view.status === 'continue' && view.t > 0) {
      expect(renderBanner(view)).toContain(`inspected ${view.t} of ${view.design.n}`);
    }
    expect(renderBanner(sessionInitial())).toContain('no items inspected yet');
  });
});

describe('renderSessionScreen', () => {
  it('disables entry but keeps undo after a decision', () => {
    const html = renderSessionScreen(sessionAcceptedH(), designDetail());
    expect(html).toMatch(/id="observe-clean" disabled/);
    expect(html).toMatch(/id="observe-deviation" disabled/);
    expect(html).toMatch(/id="undo" class="undo" >/);
  });

  it('disables undo on an empty session', () => {
    const html = renderSessionScreen(sessionInitial(), designDetail());
    expect(html).toMatch(/id="undo" class="undo" disabled/);
  });

  it('is a pure function of the fetched view (snapshots)', () => {
    expect(renderSessionScreen(sessionInitial(), designDetail())).toMatchSnapshot('initial');
    expect(renderSessionScreen(sessionFinal(), designDetail())).toMatchSnapshot('mid-session');
    expect(renderSessionScreen(sessionAcceptedH(), designDetail())).toMatchSnapshot('decided');
  });

  it('renders identically for identical views', () => {
    const a = renderSessionScreen(sessionFinal(), designDetail());
    const b = renderSessionScreen(sessionFinal(), designDetail());
    expect(a).toBe(b);
  });
});

describe('renderEventLog', () => {
  it('lists one entry per observed item, newest first', () => {
    const view = sessionFinal();
    const html = renderEventLog(view);
    expect(html.match(/<li>/g) ?? []).toHaveLength(view.t);
    const last = view.stages[view.t - 1]!;
    const firstItem = html.indexOf(`t=${last.t}:`);
    const earliestItem = html.indexOf('t=1:');
    expect(firstItem).toBeGreaterThan(-1);
    expect(firstItem).toBeLessThan(earliestItem);
  });
});

describe('renderFieldErrors', () => {
  it('surfaces a plain-message 422 verbatim', () => {
    const html = renderFieldErrors(errorConfig422().detail);
    expect(html).toContain(errorConfig422().detail);
  });

  it('maps pydantic field errors to their fields', () => {
    const detail = errorType422().detail;
    const html = renderFieldErrors(detail);
    for (const entry of detail) {
      const field = entry.loc.filter((p) => p !== 'body').join('.');
      expect(html).toContain(`data-field="${field}"`);
    }
  });
});
