/** DOM wiring: a thin imperative shell around the pure render functions.
 *
 * All statistical content comes from the service; this layer only re-renders
 * whatever the latest response said. Failed requests keep the previous view.
 */

import { ApiClient, ServiceError } from './api.js';
import { renderOcChart } from './chart.js';
import { renderFieldErrors, renderProgress, renderSessionScreen } from './render.js';
import type { DesignDetail, SessionView } from './types.js';

interface AppState {
  designId: string | null;
  design: DesignDetail | null;
  view: SessionView | null;
  notice: string;
}

const client = new ApiClient('');
const state: AppState = { designId: null, design: null, view: null, notice: '' };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setNotice(text: string): void {
  state.notice = text;
  el('notice').textContent = text;
}

function renderSession(): void {
  if (!state.view) return;
  el('session-screen').innerHTML = renderSessionScreen(state.view, state.design);
  el<HTMLButtonElement>('observe-clean').onclick = () => mutate(0);
  el<HTMLButtonElement>('observe-deviation').onclick = () => mutate(1);
  el<HTMLButtonElement>('undo').onclick = () => mutate(null);
}

async function mutate(x: 0 | 1 | null): Promise<void> {
  if (!state.view) return;
  const { session_id, seq } = state.view;
  try {
    const result =
      x === null ? await client.undo(session_id, seq) : await client.observe(session_id, x, seq);
    state.view = result.view;
    setNotice(
      result.kind === 'conflict'
        ? 'another update happened first; showing the current state — press again to apply'
        : '',
    );
    renderSession();
  } catch (err) {
    // state intentionally untouched: the screen still shows the last
    // confirmed service response
    if (err instanceof ServiceError && err.status === 422) {
      setNotice(`rejected: ${err.message}`);
    } else {
      setNotice(`request failed (${String(err)}); state unchanged — retry`);
    }
  }
}

function formConfig(): Record<string, unknown> {
  const form = el<HTMLFormElement>('design-form');
  const data = new FormData(form);
  const config: Record<string, unknown> = {};
  for (const [key, raw] of data.entries()) {
    const text = String(raw).trim();
    if (text === '') continue;
    if (key === 'variant' || key === 'backend') config[key] = text;
    else config[key] = Number(text);
  }
  return config;
}

async function pollUntilReady(designId: string): Promise<void> {
  for (;;) {
    const status = await client.designStatus(designId);
    if (status.state === 'ready') return;
    if (status.state === 'failed') throw new ServiceError(422, status.error ?? 'calibration failed');
    el('design-status').innerHTML = renderProgress(status.progress, status.state);
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

async function submitDesign(event: Event): Promise<void> {
  event.preventDefault();
  el('design-errors').innerHTML = '';
  try {
    const designId = await client.createDesign(formConfig());
    state.designId = designId;
    await pollUntilReady(designId);
    state.design = await client.designDetail(designId);
    el('design-status').textContent = `design ${designId} ready`;
    el<HTMLButtonElement>('start-session').disabled = false;
    el<HTMLButtonElement>('show-oc').disabled = false;
  } catch (err) {
    if (err instanceof ServiceError) {
      el('design-errors').innerHTML = renderFieldErrors(err.detail);
    } else {
      setNotice(`request failed (${String(err)}); state unchanged — retry`);
    }
  }
}

async function startSession(): Promise<void> {
  if (!state.designId) return;
  try {
    state.view = await client.createSession(state.designId);
    setNotice('');
    renderSession();
  } catch (err) {
    setNotice(`could not start session (${String(err)})`);
  }
}

async function showOc(): Promise<void> {
  if (!state.designId || !state.design) return;
  try {
    const reps = Number(el<HTMLInputElement>('oc-reps').value) || 2000;
    const oc = await client.ocCurve(state.designId, reps, 1);
    el('oc-panel').innerHTML = renderOcChart(oc, state.design);
  } catch (err) {
    setNotice(`operating characteristic failed (${String(err)})`);
  }
}

export function boot(): void {
  el<HTMLFormElement>('design-form').addEventListener('submit', submitDesign);
  el<HTMLButtonElement>('start-session').addEventListener('click', startSession);
  el<HTMLButtonElement>('show-oc').addEventListener('click', showOc);
}

if (typeof document !== 'undefined' && document.getElementById('design-form')) {
  boot();
}
