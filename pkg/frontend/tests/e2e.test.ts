// Drives the built UI against a real service process running the offline
// provider, through a scripted browser document. Covers the whole loop:
// seed a session, expand in place, survive a refresh, export.

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { connect } from 'node:net';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { afterAll, beforeAll, describe, expect, it, vi } from 'vitest';

import { WeaverClient } from '../src/api.js';
import { App } from '../src/app.js';

const PORT = 8788;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let workDir = '';
let stderrLog = '';

function portOpen(port: number): Promise<boolean> {
  return new Promise((resolve) => {
    const socket = connect({ port, host: '127.0.0.1' });
    socket.once('connect', () => {
      socket.end();
      resolve(true);
    });
    socket.once('error', () => resolve(false));
  });
}

async function serverReady(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!(await portOpen(PORT))) {
    if (Date.now() > deadline) {
      throw new Error(`service did not come up on ${BASE}\n${stderrLog}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  const response = await fetch(`${BASE}/sessions/warmup-probe/tree`);
  if (response.status !== 404) {
    throw new Error(`unexpected readiness status ${response.status}\n${stderrLog}`);
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), 'weaver-ui-e2e-'));
  server = spawn('python3', [
    '-m', 'weaver.cli', 'serve', '--mock',
    '--port', String(PORT),
    '--data-dir', join(workDir, 'sessions'),
    '--cache-dir', join(workDir, 'cache'),
  ], { stdio: ['ignore', 'ignore', 'pipe'] });
  server.stderr?.on('data', (chunk: Buffer) => {
    stderrLog += chunk.toString();
  });
  await serverReady(60_000);
}, 90_000);

afterAll(async () => {
  const proc = server;
  if (proc !== null) {
    proc.kill('SIGTERM');
    await new Promise<void>((resolve) => {
      if (proc.exitCode !== null) {
        resolve();
        return;
      }
      proc.once('exit', () => resolve());
    });
  }
  if (workDir !== '') {
    rmSync(workDir, { recursive: true, force: true });
  }
});

describe('ui against a live offline-provider service', () => {
  const requests: string[] = [];
  const recordingFetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? 'GET';
    const response = await fetch(input, init);
    requests.push(`${method} ${new URL(input).pathname} ${response.status}`);
    return response;
  };

  let app: App;
  let container: HTMLElement;
  let sessionId = '';
  let firstChildId = '';
  const exports: Array<{ filename: string; text: string }> = [];

  function newPage(): void {
    document.body.innerHTML = '';
    const el = document.createElement('div');
    document.body.appendChild(el);
    app = new App({
      client: new WeaverClient(BASE, recordingFetch),
      container: el,
      storage: window.localStorage,
      saveFile: (filename, text) => exports.push({ filename, text }),
      prefetchBudget: 0,
    });
    container = el;
  }

  function rootChildren(): HTMLElement[] {
    const list = container.querySelector('ul.tree > li > ul.children');
    expect(list).not.toBeNull();
    return [...(list as HTMLElement).children] as HTMLElement[];
  }

  async function serverSelected(nodeId: string): Promise<void> {
    await vi.waitFor(async () => {
      const response = await fetch(`${BASE}/sessions/${sessionId}/tree`);
      const doc = await response.json() as {
        tree: { children: Array<{ id: string; selected: boolean }> };
      };
      const child = doc.tree.children.find((c) => c.id === nodeId);
      expect(child?.selected).toBe(true);
    }, { timeout: 30_000, interval: 250 });
  }

  it('creates a session and renders the seed plus ten recommendations', async () => {
    window.localStorage.clear();
    newPage();
    await app.boot();

    const input = container.querySelector<HTMLInputElement>('.seed-form input');
    expect(input).not.toBeNull();
    input!.value = 'online toxicity';
    container.querySelector('form')!.dispatchEvent(
      new Event('submit', { bubbles: true, cancelable: true }));

    await vi.waitFor(() => {
      expect(container.querySelector('h1')).not.toBeNull();
    }, { timeout: 90_000, interval: 250 });

    expect(container.querySelector('h1')?.textContent).toBe('online toxicity');
    const children = rootChildren();
    expect(children.length).toBe(10);
    for (const item of children) {
      expect(item.querySelector('.label')?.textContent).not.toBe('');
    }
    sessionId = app.state.sessionId as string;
    expect(sessionId.length).toBeGreaterThan(0);
    firstChildId = children[0].dataset.id as string;
  }, 120_000);

  it('expands a concept in place, with no page reload', async () => {
    (window as unknown as Record<string, unknown>).__canary = 'alive';
    const documentBefore = document;

    const button = container.querySelector<HTMLButtonElement>(
      `li[data-id="${firstChildId}"] button[data-action="expand"]`);
    expect(button).not.toBeNull();
    button!.click();

    await vi.waitFor(() => {
      const kids = container.querySelectorAll(
        `li[data-id="${firstChildId}"] ul.children > li`);
      expect(kids.length).toBeGreaterThan(0);
    }, { timeout: 90_000, interval: 250 });

    expect((window as unknown as Record<string, unknown>).__canary).toBe('alive');
    expect(document).toBe(documentBefore);
    expect(container.isConnected).toBe(true);
    expect(requests.filter((line) => line.includes('/tree')).length).toBe(0);
  }, 120_000);

  it('keeps selections across a refresh', async () => {
    const checkbox = container.querySelector<HTMLInputElement>(
      `li[data-id="${firstChildId}"] input[type="checkbox"]`);
    expect(checkbox).not.toBeNull();
    checkbox!.checked = true;
    checkbox!.dispatchEvent(new Event('change', { bubbles: true }));
    await serverSelected(firstChildId);

    newPage();
    await app.boot();

    expect(container.querySelector('h1')?.textContent).toBe('online toxicity');
    expect(app.state.selected.has(firstChildId)).toBe(true);
    const box = container.querySelector<HTMLInputElement>(
      `li[data-id="${firstChildId}"] input[type="checkbox"]`);
    expect(box?.checked).toBe(true);
    const grandchildren = container.querySelectorAll(
      `li[data-id="${firstChildId}"] ul.children > li`);
    expect(grandchildren.length).toBeGreaterThan(0);
  }, 120_000);

  it('downloads exactly what the export endpoint returns', async () => {
    const second = rootChildren()[1];
    const secondId = second.dataset.id as string;
    const box = second.querySelector<HTMLInputElement>('input[type="checkbox"]');
    box!.checked = true;
    box!.dispatchEvent(new Event('change', { bubbles: true }));
    await serverSelected(secondId);

    container.querySelector<HTMLButtonElement>('button[data-action="export-json"]')!.click();
    await vi.waitFor(() => {
      expect(exports.length).toBe(1);
    }, { timeout: 30_000, interval: 100 });
    const directJson = await (await fetch(`${BASE}/sessions/${sessionId}/export?format=json`)).text();
    expect(exports[0].text).toBe(directJson);
    expect(exports[0].filename.endsWith('.json')).toBe(true);
    const parsed = JSON.parse(directJson) as { selected: Array<{ id: string }> };
    const ids = parsed.selected.map((row) => row.id);
    expect(ids).toContain(firstChildId);
    expect(ids).toContain(secondId);

    container.querySelector<HTMLButtonElement>('button[data-action="export-csv"]')!.click();
    await vi.waitFor(() => {
      expect(exports.length).toBe(2);
    }, { timeout: 30_000, interval: 100 });
    const directCsv = await (await fetch(`${BASE}/sessions/${sessionId}/export?format=csv`)).text();
    expect(exports[1].text).toBe(directCsv);
  }, 120_000);

  it('surfaces suggested test inputs and accepts prefetch hints', async () => {
    const button = container.querySelector<HTMLButtonElement>(
      `li[data-id="${firstChildId}"] button[data-action="tests"]`);
    expect(button).not.toBeNull();
    button!.click();
    await vi.waitFor(() => {
      const items = container.querySelectorAll(
        `li[data-id="${firstChildId}"] > ul.suggestions > li`);
      expect(items.length).toBeGreaterThan(0);
    }, { timeout: 90_000, interval: 250 });

    const client = new WeaverClient(BASE);
    const leaf = container.querySelectorAll(
      `li[data-id="${firstChildId}"] ul.children > li`)[0] as HTMLElement;
    const hint = await client.prefetch(sessionId, leaf.dataset.id as string);
    expect(hint.scheduled).toBeGreaterThanOrEqual(0);
  }, 120_000);
});
