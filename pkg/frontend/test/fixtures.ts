import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import type { DesignDetail, OcResponse, SessionView } from '../src/types.js';

const here = dirname(fileURLToPath(import.meta.url));

function load<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, 'fixtures', name), 'utf-8')) as T;
}

export interface ScriptEvent {
  action: 'observe' | 'undo';
  x?: number;
  status_code: number;
  response: SessionView;
}

export const designDetail = (): DesignDetail => load('design_detail.json');
export const designTruncated = (): DesignDetail => load('design_truncated.json');
export const ocResponse = (): OcResponse => load('oc_response.json');
export const sessionInitial = (): SessionView => load('session_initial.json');
export const sessionFinal = (): SessionView => load('session_final.json');
export const sessionAcceptedH = (): SessionView => load('session_accepted_h.json');
export const sessionScript = (): ScriptEvent[] => load('session_script.json');
export const conflictView = (): SessionView => load('conflict_409.json');
export const errorConfig422 = (): { detail: string } => load('error_config_422.json');
export const errorType422 = (): { detail: Array<{ loc: (string | number)[]; msg: string }> } =>
  load('error_type_422.json');
