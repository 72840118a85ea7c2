// View state for the tree: which nodes are expanded, which children are
// visible where a recommendation subset is active, and what is mid-flight.
// Everything that matters for reconstruction survives in localStorage; the
// rest (selection, labels, structure) is re-read from the server tree, so a
// refresh can always rebuild the exact view.

import type { TreeNode } from './api.js';

export interface ViewState {
  sessionId: string | null;
  seed: string;
  /** Nodes whose children are currently rendered. */
  expanded: Set<string>;
  /** nodeId -> subset of child ids shown (recommendation filter). A node
   *  without an entry shows all of its children. */
  visible: Map<string, string[]>;
  /** Nodes with an in-flight mutation; their controls are disabled. */
  pending: Set<string>;
  /** Mirror of the server's selection flags, for rendering only. */
  selected: Set<string>;
  /** Nodes already hinted for prefetch this session. */
  prefetched: Set<string>;
}

export function emptyState(): ViewState {
  return {
    sessionId: null,
    seed: '',
    expanded: new Set(),
    visible: new Map(),
    pending: new Set(),
    selected: new Set(),
    prefetched: new Set(),
  };
}

const STORAGE_KEY = 'weaver-ui/v1';

interface PersistedState {
  sessionId: string;
  seed: string;
  expanded: string[];
  visible: Array<[string, string[]]>;
}

export function saveState(state: ViewState, storage: Storage): void {
  if (state.sessionId === null) {
    storage.removeItem(STORAGE_KEY);
    return;
  }
  const doc: PersistedState = {
    sessionId: state.sessionId,
    seed: state.seed,
    expanded: [...state.expanded],
    visible: [...state.visible.entries()],
  };
  storage.setItem(STORAGE_KEY, JSON.stringify(doc));
}

export function loadState(storage: Storage): ViewState {
  const state = emptyState();
  const raw = storage.getItem(STORAGE_KEY);
  if (raw === null) {
    return state;
  }
  try {
    const doc = JSON.parse(raw) as PersistedState;
    state.sessionId = doc.sessionId;
    state.seed = doc.seed;
    state.expanded = new Set(doc.expanded);
    state.visible = new Map(doc.visible);
  } catch {
    storage.removeItem(STORAGE_KEY);
  }
  return state;
}

export function clearState(storage: Storage): void {
  storage.removeItem(STORAGE_KEY);
}

/** Index a server tree by node id. */
export function indexTree(tree: TreeNode): Map<string, TreeNode> {
  const byId = new Map<string, TreeNode>();
  const stack: TreeNode[] = [tree];
  while (stack.length > 0) {
    const node = stack.pop() as TreeNode;
    byId.set(node.id, node);
    for (const child of node.children) {
      stack.push(child);
    }
  }
  return byId;
}

/**
 * Bring the view state in line with a freshly fetched server tree: drop
 * expansion/visibility entries for nodes that no longer exist, drop visible
 * ids that stopped being children of their node, and rebuild the selection
 * mirror from the server flags.
 */
export function reconcile(state: ViewState, tree: TreeNode): void {
  const byId = indexTree(tree);
  for (const id of [...state.expanded]) {
    if (!byId.has(id)) {
      state.expanded.delete(id);
    }
  }
  const nextVisible = new Map<string, string[]>();
  for (const [id, childIds] of state.visible.entries()) {
    const node = byId.get(id);
    if (node === undefined) {
      continue;
    }
    const actual = new Set(node.children.map((c) => c.id));
    const kept = childIds.filter((cid) => actual.has(cid));
    if (kept.length > 0) {
      nextVisible.set(id, kept);
    }
  }
  state.visible = nextVisible;
  state.selected = new Set([...byId.values()].filter((n) => n.selected).map((n) => n.id));
  state.expanded.add(tree.id); // the root is always open
}

/** The children of a node that the current state actually shows. */
export function visibleChildren(state: ViewState, node: TreeNode): TreeNode[] {
  const filter = state.visible.get(node.id);
  if (filter === undefined) {
    return node.children;
  }
  const allowed = new Set(filter);
  return node.children.filter((child) => allowed.has(child.id));
}
