import { describe, expect, it, vi, type Mock } from 'vitest';

import { ApiError, type WeaverClient } from '../src/api.js';
import { App } from '../src/app.js';
import { emptyState, saveState } from '../src/state.js';
import { flush, MemoryStorage, node, summaryOf, wire } from './helpers.js';

interface ClientStub {
  createSession: Mock;
  tree: Mock;
  expand: Mock;
  recommendMore: Mock;
  createNode: Mock;
  editLabel: Mock;
  setSelected: Mock;
  deleteNode: Mock;
  suggestTests: Mock;
  prefetch: Mock;
  exportJson: Mock;
  exportCsv: Mock;
}

function stubClient(overrides: Partial<ClientStub> = {}): { client: WeaverClient; stub: ClientStub } {
  const stub: ClientStub = {
    createSession: vi.fn(),
    tree: vi.fn(),
    expand: vi.fn(async () => ({ node_id: '', created: [] })),
    recommendMore: vi.fn(),
    createNode: vi.fn(),
    editLabel: vi.fn(),
    setSelected: vi.fn(async () => ({ node: {} })),
    deleteNode: vi.fn(async () => ({ removed_id: '', removed_count: 1 })),
    suggestTests: vi.fn(async () => ({ node_id: '', tests: [] })),
    prefetch: vi.fn(async () => ({ node_id: '', scheduled: 0 })),
    exportJson: vi.fn(async () => '{}'),
    exportCsv: vi.fn(async () => ''),
    ...overrides,
  };
  return { client: stub as unknown as WeaverClient, stub };
}

/** A created session: root with twelve children, ten of them recommended. */
function sessionFixture() {
  const children = Array.from({ length: 12 }, (_, i) =>
    node(`r${i + 1}`, `concept ${i + 1}`, [], {
      relation: 'TypeOf',
      relation_display: 'a type of',
    }));
  const tree = wire(node('n0', 'online toxicity', children));
  return {
    session_id: 's1',
    seed: 'online toxicity',
    tree,
    recommendations: children.slice(0, 10).map(summaryOf),
    k: 10,
  };
}

interface MakeAppOptions {
  storage?: MemoryStorage;
  prefetchBudget?: number;
  saveFile?: (filename: string, text: string, mime: string) => void;
}

function makeApp(overrides: Partial<ClientStub> = {}, options: MakeAppOptions = {}) {
  const { client, stub } = stubClient(overrides);
  const container = document.createElement('div');
  document.body.appendChild(container);
  const storage = options.storage ?? new MemoryStorage();
  const app = new App({
    client,
    container,
    storage,
    prefetchBudget: options.prefetchBudget ?? 0,
    saveFile: options.saveFile,
  });
  return { app, stub, container, storage };
}

describe('boot', () => {
  it('shows the seed form when nothing is stored', async () => {
    const { app, container } = makeApp();
    await app.boot();
    expect(container.querySelector('form[data-form="seed"]')).not.toBeNull();
  });

  it('restores a stored session and reconciles against the server tree', async () => {
    const storage = new MemoryStorage();
    const persisted = emptyState();
    persisted.sessionId = 's1';
    persisted.seed = 'online toxicity';
    persisted.expanded = new Set(['n0', 'r1', 'ghost']);
    persisted.visible = new Map([['n0', ['r1', 'r2', 'ghost']]]);
    saveState(persisted, storage);

    const fixture = sessionFixture();
    fixture.tree.children[1].selected = true;
    const { app, stub, container } = makeApp({
      tree: vi.fn(async () => ({ session_id: 's1', seed: 'online toxicity', tree: fixture.tree })),
    }, { storage });
    await app.boot();

    expect(stub.tree).toHaveBeenCalledWith('s1');
    expect(app.state.expanded.has('ghost')).toBe(false);
    expect(app.state.visible.get('n0')).toEqual(['r1', 'r2']);
    expect(app.state.selected).toEqual(new Set(['r2']));
    const checkbox = container.querySelector<HTMLInputElement>(
      'li[data-id="r2"] input[type="checkbox"]');
    expect(checkbox?.checked).toBe(true);
  });

  it('falls back to the seed form when the stored session is gone', async () => {
    const storage = new MemoryStorage();
    const persisted = emptyState();
    persisted.sessionId = 'dead';
    saveState(persisted, storage);
    const { app, container } = makeApp({
      tree: vi.fn(async () => {
        throw new ApiError(404, 'not-found', 'no such session');
      }),
    }, { storage });
    await app.boot();
    expect(container.querySelector('form[data-form="seed"]')).not.toBeNull();
    expect(storage.getItem('weaver-ui/v1')).toBeNull();
  });
});

describe('session creation', () => {
  it('creates a session from the seed form and shows the recommendations', async () => {
    const fixture = sessionFixture();
    const { app, stub, container, storage } = makeApp({
      createSession: vi.fn(async () => fixture),
    });
    await app.boot();
    const input = container.querySelector<HTMLInputElement>('.seed-form input');
    expect(input).not.toBeNull();
    input!.value = '  online toxicity  ';
    container.querySelector('form')!.dispatchEvent(
      new Event('submit', { bubbles: true, cancelable: true }));
    await flush();

    expect(stub.createSession).toHaveBeenCalledWith('online toxicity', undefined);
    expect(container.querySelector('h1')?.textContent).toBe('online toxicity');
    expect(container.querySelectorAll('ul.tree li').length).toBe(11);
    expect(container.querySelector('.hidden-count')?.textContent).toBe('+2 hidden');
    expect(storage.getItem('weaver-ui/v1')).toContain('"s1"');
  });
});

describe('expand', () => {
  it('grafts created children onto the cached tree without refetching', async () => {
    const fixture = sessionFixture();
    const created = [
      summaryOf(node('x1', 'slurs', [], {
        relation: 'TypeOf', relation_display: 'a type of', parent_id: 'r1', depth: 2,
      })),
      summaryOf(node('x2', 'veiled threats', [], {
        relation: 'TypeOf', relation_display: 'a type of', parent_id: 'r1', depth: 2,
      })),
    ];
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      expand: vi.fn(async () => ({ node_id: 'r1', created })),
    });
    await app.createSession('online toxicity');
    const before = container.querySelectorAll('li').length;

    await app.onExpand('r1');

    expect(stub.expand).toHaveBeenCalledWith('s1', 'r1');
    expect(stub.tree).not.toHaveBeenCalled();
    expect(container.querySelectorAll('li').length).toBe(before + 2);
    expect(container.querySelector('li[data-id="x1"] .label')?.textContent).toBe('slurs');
    expect(app.state.expanded.has('r1')).toBe(true);
  });

  it('ignores re-entrant expands while one is in flight', async () => {
    const fixture = sessionFixture();
    let release: (value: { node_id: string; created: never[] }) => void = () => undefined;
    const gate = new Promise((resolve) => {
      release = resolve;
    });
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      expand: vi.fn(() => gate),
    });
    await app.createSession('online toxicity');

    const first = app.onExpand('r1');
    expect(app.state.pending.has('r1')).toBe(true);
    const row = container.querySelector<HTMLElement>('li[data-id="r1"] > .row');
    expect(row?.dataset.pending).toBe('true');
    const second = app.onExpand('r1');
    release({ node_id: 'r1', created: [] });
    await Promise.all([first, second]);

    expect(stub.expand).toHaveBeenCalledTimes(1);
    expect(app.state.pending.has('r1')).toBe(false);
    const toast = container.querySelector('.toast span');
    expect(toast?.textContent).toContain('nothing new');
  });
});

describe('recommendations', () => {
  it('widens the visible set in place when more are requested', async () => {
    const fixture = sessionFixture();
    const recommended = fixture.tree.children.map(summaryOf);
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      recommendMore: vi.fn(async () => ({ node_id: 'n0', k: 12, recommended })),
    });
    await app.createSession('online toxicity');
    expect(container.querySelectorAll('ul.tree li').length).toBe(11);

    await app.onMore('n0');

    expect(stub.recommendMore).toHaveBeenCalledWith('s1', 'n0');
    expect(stub.tree).not.toHaveBeenCalled();
    expect(app.state.visible.get('n0')).toHaveLength(12);
    expect(container.querySelectorAll('ul.tree li').length).toBe(13);
    expect(container.querySelector('.hidden-count')).toBeNull();
  });
});

describe('selection', () => {
  it('applies a selection optimistically and confirms it with the server', async () => {
    const fixture = sessionFixture();
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
    });
    await app.createSession('online toxicity');
    const checkbox = container.querySelector<HTMLInputElement>(
      'li[data-id="r2"] input[type="checkbox"]');
    checkbox!.checked = true;
    checkbox!.dispatchEvent(new Event('change', { bubbles: true }));
    await flush();

    expect(stub.setSelected).toHaveBeenCalledWith('s1', 'r2', true);
    expect(app.state.selected.has('r2')).toBe(true);
  });

  it('rolls back a failed selection and offers a retry', async () => {
    const fixture = sessionFixture();
    const setSelected = vi.fn()
      .mockRejectedValueOnce(new ApiError(409, 'conflict', 'edited elsewhere'))
      .mockResolvedValue({ node: summaryOf(sessionFixture().tree.children[0]) });
    const { app, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      setSelected,
    });
    await app.createSession('online toxicity');

    await app.onSelect('r1', true);

    expect(app.state.selected.has('r1')).toBe(false);
    const checkbox = container.querySelector<HTMLInputElement>(
      'li[data-id="r1"] input[type="checkbox"]');
    expect(checkbox?.checked).toBe(false);
    const toast = container.querySelector('.toast');
    expect(toast?.textContent).toContain('edited elsewhere');

    const retry = [...container.querySelectorAll<HTMLButtonElement>('.toast button')]
      .find((b) => b.textContent === 'retry');
    expect(retry).toBeDefined();
    retry!.click();
    await flush();
    expect(setSelected).toHaveBeenCalledTimes(2);
    expect(app.state.selected.has('r1')).toBe(true);
  });
});

describe('editing', () => {
  it('renames through the inline editor', async () => {
    const fixture = sessionFixture();
    const renamed = {
      ...summaryOf(fixture.tree.children[0]),
      label: 'identity attacks',
      provenance: 'edited',
    };
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      editLabel: vi.fn(async () => ({ node: renamed })),
    });
    await app.createSession('online toxicity');

    app.openEditInput('r1');
    const input = container.querySelector<HTMLInputElement>('input[data-inline="edit"]');
    expect(input).not.toBeNull();
    input!.value = ' identity attacks ';
    input!.dispatchEvent(new KeyboardEvent('keydown', { key: 'Enter', bubbles: true }));
    await flush();

    expect(stub.editLabel).toHaveBeenCalledWith('s1', 'r1', 'identity attacks');
    expect(container.querySelector('li[data-id="r1"] .label')?.textContent)
      .toBe('identity attacks');
  });

  it('adds a hand-written child and warns about near duplicates', async () => {
    const fixture = sessionFixture();
    const created = summaryOf(node('x9', 'dogwhistles', [], {
      relation: 'RelatedTo', relation_display: 'related', parent_id: 'n0', depth: 1,
    }));
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      createNode: vi.fn(async () => ({ created, near_duplicates: ['hate speech'] })),
    });
    await app.createSession('online toxicity');

    app.openCreateInput('n0', container);
    const input = container.querySelector<HTMLInputElement>('input[data-inline="create"]');
    expect(input).not.toBeNull();
    input!.value = 'dogwhistles';
    input!.dispatchEvent(new KeyboardEvent('keydown', { key: 'Enter', bubbles: true }));
    await flush();

    expect(stub.createNode).toHaveBeenCalledWith('s1', 'n0', 'dogwhistles', undefined);
    expect(container.querySelector('li[data-id="x9"] .label')?.textContent).toBe('dogwhistles');
    expect(app.state.visible.get('n0')).toContain('x9');
    const toast = container.querySelector('.toast span');
    expect(toast?.textContent).toContain('hate speech');
  });

  it('prunes a removed subtree from the tree and the view state', async () => {
    const fixture = sessionFixture();
    fixture.tree.children[0].children.push(node('x1', 'slurs'));
    wire(fixture.tree);
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      deleteNode: vi.fn(async () => ({ removed_id: 'r1', removed_count: 2 })),
    });
    await app.createSession('online toxicity');
    app.state.expanded.add('r1');
    app.state.selected.add('x1');
    app.suggestions.set('x1', ['anything']);

    await app.onRemove('r1');

    expect(stub.deleteNode).toHaveBeenCalledWith('s1', 'r1');
    expect(container.querySelector('li[data-id="r1"]')).toBeNull();
    expect(app.state.expanded.has('r1')).toBe(false);
    expect(app.state.selected.has('x1')).toBe(false);
    expect(app.suggestions.has('x1')).toBe(false);
    expect(app.state.visible.get('n0')).not.toContain('r1');
    expect(app.state.visible.get('n0')).toHaveLength(9);
  });
});

describe('test suggestions', () => {
  it('renders suggested inputs under a selected node', async () => {
    const fixture = sessionFixture();
    fixture.tree.children[0].selected = true;
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      suggestTests: vi.fn(async () => ({
        node_id: 'r1',
        tests: ['Nobody would miss you.', 'People like you ruin everything.'],
      })),
    });
    await app.createSession('online toxicity');
    const button = container.querySelector<HTMLButtonElement>(
      'li[data-id="r1"] button[data-action="tests"]');
    expect(button).not.toBeNull();

    await app.onSuggestTests('r1');

    expect(stub.suggestTests).toHaveBeenCalledWith('s1', 'r1');
    const items = container.querySelectorAll('li[data-id="r1"] ul.suggestions li');
    expect(items.length).toBe(2);
  });
});

describe('export', () => {
  it('hands the exported text to the save hook', async () => {
    const fixture = sessionFixture();
    const saved: Array<{ filename: string; text: string; mime: string }> = [];
    const { app } = makeApp({
      createSession: vi.fn(async () => fixture),
      exportJson: vi.fn(async () => '{"selected": []}'),
    }, {
      saveFile: (filename, text, mime) => saved.push({ filename, text, mime }),
    });
    await app.createSession('online toxicity');

    await app.onExport('json');

    expect(saved).toHaveLength(1);
    expect(saved[0].filename).toMatch(/\.json$/);
    expect(saved[0].text).toBe('{"selected": []}');
    expect(saved[0].mime).toBe('application/json');
    expect(app.lastExport?.text).toBe('{"selected": []}');
  });

  it('surfaces an export failure with a retry affordance', async () => {
    const fixture = sessionFixture();
    const exportCsv = vi.fn()
      .mockRejectedValueOnce(new ApiError(409, 'conflict', 'busy'))
      .mockResolvedValue('id,label\n');
    const saved: string[] = [];
    const { app, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      exportCsv,
    }, { saveFile: (_f, text) => saved.push(text) });
    await app.createSession('online toxicity');

    await app.onExport('csv');
    expect(saved).toHaveLength(0);
    const retry = [...container.querySelectorAll<HTMLButtonElement>('.toast button')]
      .find((b) => b.textContent === 'retry');
    expect(retry).toBeDefined();
    retry!.click();
    await flush();
    expect(saved).toEqual(['id,label\n']);
  });
});

describe('event delegation', () => {
  it('routes row button clicks to the matching handler', async () => {
    const fixture = sessionFixture();
    const { app, stub, container } = makeApp({
      createSession: vi.fn(async () => fixture),
      expand: vi.fn(async () => ({ node_id: 'r3', created: [] })),
    });
    await app.createSession('online toxicity');
    container.querySelector<HTMLButtonElement>(
      'li[data-id="r3"] button[data-action="expand"]')!.click();
    await flush();
    expect(stub.expand).toHaveBeenCalledWith('s1', 'r3');
  });

  it('collapses and re-opens nodes locally through the twisty', async () => {
    const fixture = sessionFixture();
    fixture.tree.children[0].children.push(node('x1', 'slurs'));
    wire(fixture.tree);
    const { app, container } = makeApp({
      createSession: vi.fn(async () => fixture),
    });
    await app.createSession('online toxicity');

    container.querySelector<HTMLButtonElement>(
      'li[data-id="r1"] button[data-action="toggle"]')!.click();
    expect(app.state.expanded.has('r1')).toBe(true);
    expect(container.querySelector('li[data-id="x1"]')).not.toBeNull();

    container.querySelector<HTMLButtonElement>(
      'li[data-id="r1"] button[data-action="toggle"]')!.click();
    expect(app.state.expanded.has('r1')).toBe(false);
    expect(container.querySelector('li[data-id="x1"]')).toBeNull();
  });
});

describe('prefetch hints', () => {
  it('hints visible leaves once each, within the per-render budget', async () => {
    const fixture = sessionFixture();
    const prefetch = vi.fn(async () => ({ node_id: '', scheduled: 0 }));
    const { app } = makeApp({
      createSession: vi.fn(async () => fixture),
      prefetch,
    }, { prefetchBudget: 3 });
    await app.createSession('online toxicity');
    expect(prefetch).toHaveBeenCalledTimes(3);

    app.render();
    expect(prefetch).toHaveBeenCalledTimes(6);
    app.render();
    app.render();
    app.render();
    expect(prefetch).toHaveBeenCalledTimes(10);

    const hinted = (prefetch.mock.calls as unknown as Array<[string, string]>)
      .map((call) => call[1]);
    expect(new Set(hinted).size).toBe(10);
    expect(hinted).not.toContain('r11');
    expect(hinted).not.toContain('r12');
  });
});
