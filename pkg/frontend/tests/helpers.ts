import type { NodeSummary, TreeNode } from '../src/api.js';

export function node(id: string, label: string, children: TreeNode[] = [],
  extra: Partial<TreeNode> = {}): TreeNode {
  return {
    id,
    label,
    relation: null,
    relation_display: 'related',
    parent_id: null,
    depth: 0,
    selected: false,
    provenance: 'generated',
    child_count: children.length,
    children,
    ...extra,
  };
}

/** Fill in parent ids, depths, and child counts from the tree shape. */
export function wire(tree: TreeNode, parentId: string | null = null, depth = 0): TreeNode {
  tree.parent_id = parentId;
  tree.depth = depth;
  tree.child_count = tree.children.length;
  if (parentId === null) {
    tree.relation = null;
    tree.relation_display = null;
  }
  for (const child of tree.children) {
    wire(child, tree.id, depth + 1);
  }
  return tree;
}

export function summaryOf(n: TreeNode): NodeSummary {
  const { children, ...rest } = n;
  void children;
  return rest;
}

export function fakeResponse(status: number, body: string, statusText = ''): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText,
    json: async () => JSON.parse(body) as unknown,
    text: async () => body,
  } as unknown as Response;
}

export class MemoryStorage implements Storage {
  private items = new Map<string, string>();

  get length(): number {
    return this.items.size;
  }

  clear(): void {
    this.items.clear();
  }

  getItem(key: string): string | null {
    return this.items.get(key) ?? null;
  }

  key(index: number): string | null {
    return [...this.items.keys()][index] ?? null;
  }

  removeItem(key: string): void {
    this.items.delete(key);
  }

  setItem(key: string, value: string): void {
    this.items.set(key, value);
  }
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
