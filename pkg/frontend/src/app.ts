// The controller: owns the cached server tree and the view state, wires DOM
// events to API calls, and re-renders one container in place. Mutations
// apply the server's minimal response to the cached tree instead of
// refetching everything, so the page never reloads; a full refetch happens
// only on boot and when recovering from an error.

import {
  ApiError,
  WeaverClient,
  type NodeSummary,
  type SessionConfig,
  type TreeNode,
} from './api.js';
import {
  clearState,
  emptyState,
  indexTree,
  loadState,
  reconcile,
  saveState,
  visibleChildren,
  type ViewState,
} from './state.js';
import { renderTree } from './tree.js';

export interface AppOptions {
  client: WeaverClient;
  container: HTMLElement;
  storage?: Storage;
  /** How a finished export reaches the user; default is a download link. */
  saveFile?: (filename: string, text: string, mime: string) => void;
  /** Session settings sent on create; empty means server defaults. */
  sessionConfig?: SessionConfig;
  /** Upper bound on prefetch hints sent after each render. */
  prefetchBudget?: number;
}

function downloadViaAnchor(filename: string, text: string, mime: string): void {
  const blob = new Blob([text], { type: mime });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement('a');
  anchor.href = url;
  anchor.download = filename;
  document.body.appendChild(anchor);
  anchor.click();
  anchor.remove();
  URL.revokeObjectURL(url);
}

function asSummaryNode(summary: NodeSummary): TreeNode {
  return { ...summary, children: [] };
}

export class App {
  readonly client: WeaverClient;
  readonly container: HTMLElement;
  readonly storage: Storage;
  state: ViewState;
  tree: TreeNode | null = null;
  suggestions = new Map<string, string[]>();
  lastExport: { filename: string; text: string } | null = null;

  private readonly saveFile: (filename: string, text: string, mime: string) => void;
  private readonly sessionConfig: SessionConfig | undefined;
  private readonly prefetchBudget: number;
  private toasts: HTMLElement | null = null;

  constructor(options: AppOptions) {
    this.client = options.client;
    this.container = options.container;
    this.storage = options.storage ?? window.localStorage;
    this.saveFile = options.saveFile ?? downloadViaAnchor;
    this.sessionConfig = options.sessionConfig;
    this.prefetchBudget = options.prefetchBudget ?? 4;
    this.state = emptyState();
    this.container.addEventListener('click', (event) => this.onClick(event));
    this.container.addEventListener('change', (event) => this.onChange(event));
    this.container.addEventListener('keydown', (event) => this.onKeydown(event as KeyboardEvent));
  }

  // ------------------------------------------------------------------
  // lifecycle

  async boot(): Promise<void> {
    this.state = loadState(this.storage);
    if (this.state.sessionId === null) {
      this.renderSeedForm();
      return;
    }
    try {
      await this.refresh();
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        clearState(this.storage);
        this.state = emptyState();
        this.renderSeedForm();
        return;
      }
      throw error;
    }
  }

  /** Refetch the whole tree and reconcile the view against it. */
  async refresh(): Promise<void> {
    if (this.state.sessionId === null) {
      return;
    }
    const doc = await this.client.tree(this.state.sessionId);
    this.tree = doc.tree;
    this.state.seed = doc.seed;
    reconcile(this.state, doc.tree);
    saveState(this.state, this.storage);
    this.render();
  }

  async createSession(seed: string): Promise<void> {
    const doc = await this.client.createSession(seed, this.sessionConfig);
    this.state = emptyState();
    this.state.sessionId = doc.session_id;
    this.state.seed = doc.seed;
    this.tree = doc.tree;
    this.state.expanded.add(doc.tree.id);
    this.state.visible.set(doc.tree.id, doc.recommendations.map((r) => r.id));
    reconcileSelection(this.state, doc.tree);
    saveState(this.state, this.storage);
    this.render();
  }

  // ------------------------------------------------------------------
  // rendering

  render(): void {
    if (this.tree === null) {
      this.renderSeedForm();
      return;
    }
    this.container.replaceChildren(
      this.renderHeader(),
      renderTree(this.tree, this.state, { suggestions: this.suggestions }),
      this.ensureToasts(),
    );
    this.sendPrefetchHints();
  }

  private renderHeader(): HTMLElement {
    const header = document.createElement('div');
    header.className = 'session-head';
    const title = document.createElement('h1');
    title.textContent = this.state.seed;
    header.appendChild(title);
    const exportJson = document.createElement('button');
    exportJson.type = 'button';
    exportJson.dataset.action = 'export-json';
    exportJson.textContent = 'export JSON';
    header.appendChild(exportJson);
    const exportCsv = document.createElement('button');
    exportCsv.type = 'button';
    exportCsv.dataset.action = 'export-csv';
    exportCsv.textContent = 'export CSV';
    header.appendChild(exportCsv);
    const reset = document.createElement('button');
    reset.type = 'button';
    reset.dataset.action = 'new-session';
    reset.textContent = 'new session';
    header.appendChild(reset);
    return header;
  }

  private renderSeedForm(): void {
    const form = document.createElement('form');
    form.className = 'seed-form';
    form.dataset.form = 'seed';
    const input = document.createElement('input');
    input.name = 'seed';
    input.placeholder = 'What should the model be tested on? e.g. online toxicity';
    form.appendChild(input);
    const submit = document.createElement('button');
    submit.type = 'submit';
    submit.textContent = 'chart it';
    form.appendChild(submit);
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      const seed = input.value.trim();
      if (seed.length > 0) {
        void this.guarded('create the session', () => this.createSession(seed));
      }
    });
    this.container.replaceChildren(form, this.ensureToasts());
  }

  private ensureToasts(): HTMLElement {
    if (this.toasts === null || this.toasts.parentElement !== this.container) {
      this.toasts = document.createElement('div');
      this.toasts.className = 'toasts';
    }
    return this.toasts;
  }

  toast(message: string, retry?: () => void): void {
    const box = this.ensureToasts();
    const note = document.createElement('div');
    note.className = 'toast';
    const text = document.createElement('span');
    text.textContent = message;
    note.appendChild(text);
    if (retry !== undefined) {
      const again = document.createElement('button');
      again.type = 'button';
      again.textContent = 'retry';
      again.addEventListener('click', () => {
        note.remove();
        retry();
      });
      note.appendChild(again);
    }
    const dismiss = document.createElement('button');
    dismiss.type = 'button';
    dismiss.textContent = '×';
    dismiss.addEventListener('click', () => note.remove());
    note.appendChild(dismiss);
    box.appendChild(note);
  }

  // ------------------------------------------------------------------
  // event plumbing

  private nodeIdFor(target: EventTarget | null): string | null {
    let el = target as HTMLElement | null;
    while (el !== null && el !== this.container) {
      if (el.dataset !== undefined && el.dataset.id !== undefined) {
        return el.dataset.id;
      }
      el = el.parentElement;
    }
    return null;
  }

  private onClick(event: Event): void {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (action === undefined) {
      return;
    }
    if (action === 'export-json') {
      void this.onExport('json');
      return;
    }
    if (action === 'export-csv') {
      void this.onExport('csv');
      return;
    }
    if (action === 'new-session') {
      clearState(this.storage);
      this.state = emptyState();
      this.tree = null;
      this.suggestions.clear();
      this.renderSeedForm();
      return;
    }
    const nodeId = this.nodeIdFor(target);
    if (nodeId === null) {
      return;
    }
    switch (action) {
      case 'toggle':
        this.onToggle(nodeId);
        break;
      case 'expand':
        void this.onExpand(nodeId);
        break;
      case 'more':
        void this.onMore(nodeId);
        break;
      case 'add':
        this.openCreateInput(nodeId, target);
        break;
      case 'edit':
        this.openEditInput(nodeId);
        break;
      case 'remove':
        void this.onRemove(nodeId);
        break;
      case 'tests':
        void this.onSuggestTests(nodeId);
        break;
      default:
        break;
    }
  }

  private onChange(event: Event): void {
    const target = event.target as HTMLInputElement;
    if (target.dataset.action !== 'select') {
      return;
    }
    const nodeId = this.nodeIdFor(target);
    if (nodeId !== null) {
      void this.onSelect(nodeId, target.checked);
    }
  }

  private onKeydown(event: KeyboardEvent): void {
    const target = event.target as HTMLInputElement;
    if (target.dataset === undefined) {
      return;
    }
    const inline = target.dataset.inline;
    if (inline === undefined) {
      return;
    }
    const nodeId = this.nodeIdFor(target);
    if (event.key === 'Escape') {
      this.render();
      return;
    }
    if (event.key !== 'Enter' || nodeId === null) {
      return;
    }
    event.preventDefault();
    const value = target.value.trim();
    if (value.length === 0) {
      this.render();
      return;
    }
    if (inline === 'edit') {
      void this.commitEdit(nodeId, value);
    } else if (inline === 'create') {
      void this.commitCreate(nodeId, value);
    }
  }

  // ------------------------------------------------------------------
  // handlers

  onToggle(nodeId: string): void {
    if (this.state.expanded.has(nodeId)) {
      this.state.expanded.delete(nodeId);
    } else {
      this.state.expanded.add(nodeId);
    }
    saveState(this.state, this.storage);
    this.render();
  }

  async onExpand(nodeId: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null || this.tree === null || this.state.pending.has(nodeId)) {
      return;
    }
    this.state.pending.add(nodeId);
    this.render();
    try {
      const doc = await this.client.expand(sessionId, nodeId);
      const node = indexTree(this.tree).get(nodeId);
      if (node !== undefined) {
        node.children.push(...doc.created.map(asSummaryNode));
      }
      this.state.expanded.add(nodeId);
      if (doc.created.length === 0) {
        this.toast('nothing new: every generated concept was already in the map');
      }
      saveState(this.state, this.storage);
    } catch (error) {
      this.surface(error, 'expand this concept', () => void this.onExpand(nodeId));
    } finally {
      this.state.pending.delete(nodeId);
      this.render();
    }
  }

  async onMore(nodeId: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null || this.state.pending.has(nodeId)) {
      return;
    }
    this.state.pending.add(nodeId);
    this.render();
    try {
      const doc = await this.client.recommendMore(sessionId, nodeId);
      this.state.visible.set(nodeId, doc.recommended.map((r) => r.id));
      this.state.expanded.add(nodeId);
      saveState(this.state, this.storage);
    } catch (error) {
      this.surface(error, 'fetch more recommendations', () => void this.onMore(nodeId));
    } finally {
      this.state.pending.delete(nodeId);
      this.render();
    }
  }

  async onSelect(nodeId: string, selected: boolean): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null || this.tree === null) {
      return;
    }
    const before = this.state.selected.has(nodeId);
    flipSelection(this.state, nodeId, selected);
    const cached = indexTree(this.tree).get(nodeId);
    if (cached !== undefined) {
      cached.selected = selected;
    }
    this.render();
    try {
      await this.client.setSelected(sessionId, nodeId, selected);
    } catch (error) {
      flipSelection(this.state, nodeId, before);
      if (cached !== undefined) {
        cached.selected = before;
      }
      this.render();
      this.surface(error, 'change the selection', () => void this.onSelect(nodeId, selected));
    }
  }

  async commitEdit(nodeId: string, label: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null || this.tree === null || this.state.pending.has(nodeId)) {
      return;
    }
    this.state.pending.add(nodeId);
    try {
      const doc = await this.client.editLabel(sessionId, nodeId, label);
      const cached = indexTree(this.tree).get(nodeId);
      if (cached !== undefined) {
        cached.label = doc.node.label;
        cached.provenance = doc.node.provenance;
      }
      this.warnNearDuplicates(doc.near_duplicates);
    } catch (error) {
      this.surface(error, 'rename the concept', () => void this.commitEdit(nodeId, label));
    } finally {
      this.state.pending.delete(nodeId);
      this.render();
    }
  }

  async commitCreate(parentId: string, label: string, relation?: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null || this.tree === null || this.state.pending.has(parentId)) {
      return;
    }
    this.state.pending.add(parentId);
    try {
      const doc = await this.client.createNode(sessionId, parentId, label, relation);
      const parent = indexTree(this.tree).get(parentId);
      if (parent !== undefined) {
        parent.children.push(asSummaryNode(doc.created));
        const filter = this.state.visible.get(parentId);
        if (filter !== undefined) {
          filter.push(doc.created.id); // hand-made nodes are always shown
        }
      }
      this.state.expanded.add(parentId);
      this.warnNearDuplicates(doc.near_duplicates);
      saveState(this.state, this.storage);
    } catch (error) {
      this.surface(error, 'add the concept', () => void this.commitCreate(parentId, label, relation));
    } finally {
      this.state.pending.delete(parentId);
      this.render();
    }
  }

  async onRemove(nodeId: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null || this.tree === null || this.state.pending.has(nodeId)) {
      return;
    }
    this.state.pending.add(nodeId);
    this.render();
    try {
      await this.client.deleteNode(sessionId, nodeId);
      pruneSubtree(this.tree, nodeId, this.state, this.suggestions);
      saveState(this.state, this.storage);
    } catch (error) {
      this.surface(error, 'remove the concept', () => void this.onRemove(nodeId));
    } finally {
      this.state.pending.delete(nodeId);
      this.render();
    }
  }

  async onSuggestTests(nodeId: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null || this.state.pending.has(nodeId)) {
      return;
    }
    this.state.pending.add(nodeId);
    this.render();
    try {
      const doc = await this.client.suggestTests(sessionId, nodeId);
      this.suggestions.set(nodeId, doc.tests);
    } catch (error) {
      this.surface(error, 'suggest tests', () => void this.onSuggestTests(nodeId));
    } finally {
      this.state.pending.delete(nodeId);
      this.render();
    }
  }

  async onExport(format: 'json' | 'csv'): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) {
      return;
    }
    try {
      const text = format === 'csv'
        ? await this.client.exportCsv(sessionId)
        : await this.client.exportJson(sessionId);
      const filename = `requirements-${sessionId.slice(0, 8)}.${format}`;
      this.lastExport = { filename, text };
      this.saveFile(filename, text, format === 'csv' ? 'text/csv' : 'application/json');
    } catch (error) {
      this.surface(error, 'export the selection', () => void this.onExport(format));
    }
  }

  // ------------------------------------------------------------------
  // inline inputs

  private rowFor(nodeId: string): HTMLElement | null {
    const selector = `li[data-id="${nodeId}"] > .row`;
    return this.container.querySelector(selector);
  }

  openEditInput(nodeId: string): void {
    const row = this.rowFor(nodeId);
    const label = row?.querySelector<HTMLElement>('.label');
    if (row === null || label === null || label === undefined) {
      return;
    }
    const input = document.createElement('input');
    input.dataset.inline = 'edit';
    input.value = label.textContent ?? '';
    label.replaceWith(input);
    input.focus();
  }

  openCreateInput(nodeId: string, near: HTMLElement): void {
    const row = this.rowFor(nodeId) ?? near.parentElement;
    if (row === null) {
      return;
    }
    if (row.querySelector('input[data-inline="create"]') !== null) {
      return;
    }
    const input = document.createElement('input');
    input.dataset.inline = 'create';
    input.placeholder = 'new child concept, Enter to add';
    row.appendChild(input);
    input.focus();
  }

  // ------------------------------------------------------------------
  // helpers

  private async guarded(what: string, run: () => Promise<void>): Promise<void> {
    try {
      await run();
    } catch (error) {
      this.surface(error, what, () => void this.guarded(what, run));
    }
  }

  private warnNearDuplicates(labels: string[] | undefined): void {
    if (labels !== undefined && labels.length > 0) {
      this.toast(`looks a lot like: ${labels.join(', ')}`);
    }
  }

  private surface(error: unknown, what: string, retry: () => void): void {
    if (error instanceof ApiError) {
      this.toast(`could not ${what}: ${error.message}`, retry);
      return;
    }
    this.toast(`could not ${what}: ${String(error)}`, retry);
  }

  private sendPrefetchHints(): void {
    const sessionId = this.state.sessionId;
    if (sessionId === null || this.tree === null) {
      return;
    }
    let budget = this.prefetchBudget;
    const stack: Array<{ node: TreeNode; shown: boolean }> = [{ node: this.tree, shown: true }];
    while (stack.length > 0 && budget > 0) {
      const { node, shown } = stack.pop() as { node: TreeNode; shown: boolean };
      if (!shown) {
        continue;
      }
      if (node.children.length === 0 && !this.state.prefetched.has(node.id)) {
        this.state.prefetched.add(node.id);
        budget -= 1;
        this.client.prefetch(sessionId, node.id).catch(() => {
          // hints are best-effort; a failed one costs nothing
        });
        continue;
      }
      if (this.state.expanded.has(node.id)) {
        const visible = new Set(visibleChildren(this.state, node).map((c) => c.id));
        for (const child of node.children) {
          stack.push({ node: child, shown: visible.has(child.id) });
        }
      }
    }
  }
}

function flipSelection(state: ViewState, nodeId: string, selected: boolean): void {
  if (selected) {
    state.selected.add(nodeId);
  } else {
    state.selected.delete(nodeId);
  }
}

function reconcileSelection(state: ViewState, tree: TreeNode): void {
  state.selected = new Set([...indexTree(tree).values()].filter((n) => n.selected).map((n) => n.id));
}

function pruneSubtree(tree: TreeNode, nodeId: string, state: ViewState,
  suggestions: Map<string, string[]>): void {
  const byId = indexTree(tree);
  const doomed = byId.get(nodeId);
  if (doomed === undefined) {
    return;
  }
  const ids = [...indexTree(doomed).keys()];
  const parent = doomed.parent_id !== null ? byId.get(doomed.parent_id) : undefined;
  if (parent !== undefined) {
    parent.children = parent.children.filter((child) => child.id !== nodeId);
    const filter = state.visible.get(parent.id);
    if (filter !== undefined) {
      state.visible.set(parent.id, filter.filter((id) => id !== nodeId));
    }
  }
  for (const id of ids) {
    state.expanded.delete(id);
    state.visible.delete(id);
    state.selected.delete(id);
    state.pending.delete(id);
    state.prefetched.delete(id);
    suggestions.delete(id);
  }
}
