// DOM construction for the concept tree. Pure functions from (server tree,
// view state) to elements; no fetches, no listeners. The app wires behavior
// through event delegation on data-action attributes, so re-rendering never
// rebinds handlers.

import type { TreeNode } from './api.js';
import { visibleChildren, type ViewState } from './state.js';

export interface RenderExtras {
  /** nodeId -> suggested test inputs to show under the row. */
  suggestions: Map<string, string[]>;
}

function button(action: string, text: string, title: string, disabled: boolean): HTMLButtonElement {
  const el = document.createElement('button');
  el.dataset.action = action;
  el.textContent = text;
  el.title = title;
  el.disabled = disabled;
  el.type = 'button';
  return el;
}

function renderRow(node: TreeNode, state: ViewState, isRoot: boolean): HTMLDivElement {
  const row = document.createElement('div');
  row.className = 'row';
  const pending = state.pending.has(node.id);
  if (pending) {
    row.dataset.pending = 'true';
  }

  const expanded = state.expanded.has(node.id);
  if (node.children.length > 0) {
    const twisty = button('toggle', expanded ? '▾' : '▸',
      expanded ? 'collapse' : 'show children', pending);
    twisty.className = 'twisty';
    row.appendChild(twisty);
  } else {
    const spacer = document.createElement('span');
    spacer.className = 'twisty spacer';
    row.appendChild(spacer);
  }

  const checkbox = document.createElement('input');
  checkbox.type = 'checkbox';
  checkbox.dataset.action = 'select';
  checkbox.checked = state.selected.has(node.id);
  checkbox.disabled = pending;
  checkbox.title = 'mark as a concept worth testing';
  row.appendChild(checkbox);

  const label = document.createElement('span');
  label.className = 'label';
  label.textContent = node.label;
  row.appendChild(label);

  if (!isRoot && node.relation_display !== null) {
    const relation = document.createElement('span');
    relation.className = 'relation';
    relation.textContent = node.relation_display;
    relation.title = node.relation ?? '';
    row.appendChild(relation);
  }

  if (!expanded && node.children.length > 0) {
    const badge = document.createElement('span');
    badge.className = 'badge';
    badge.textContent = String(node.children.length);
    badge.title = `${node.children.length} children`;
    row.appendChild(badge);
  }

  const hiddenCount = node.children.length - visibleChildren(state, node).length;
  if (expanded && hiddenCount > 0) {
    const more = document.createElement('span');
    more.className = 'hidden-count';
    more.textContent = `+${hiddenCount} hidden`;
    row.appendChild(more);
  }

  const actions = document.createElement('span');
  actions.className = 'actions';
  actions.appendChild(button('expand', 'expand', 'generate children for this concept', pending));
  actions.appendChild(button('more', 'more', 'recommend more of the existing children', pending));
  actions.appendChild(button('add', 'add', 'add a child concept by hand', pending));
  actions.appendChild(button('edit', 'rename', 'rename this concept', pending));
  if (!isRoot) {
    actions.appendChild(button('remove', 'remove', 'delete this concept and its subtree', pending));
  }
  if (state.selected.has(node.id)) {
    actions.appendChild(button('tests', 'tests', 'suggest test inputs for this concept', pending));
  }
  row.appendChild(actions);
  return row;
}

function renderSuggestions(tests: string[]): HTMLUListElement {
  const list = document.createElement('ul');
  list.className = 'suggestions';
  for (const text of tests) {
    const item = document.createElement('li');
    item.textContent = text;
    list.appendChild(item);
  }
  return list;
}

function renderNode(node: TreeNode, state: ViewState, extras: RenderExtras,
  isRoot: boolean): HTMLLIElement {
  const item = document.createElement('li');
  item.dataset.id = node.id;
  item.appendChild(renderRow(node, state, isRoot));

  const tests = extras.suggestions.get(node.id);
  if (tests !== undefined && tests.length > 0) {
    item.appendChild(renderSuggestions(tests));
  }

  if (state.expanded.has(node.id) && node.children.length > 0) {
    const children = document.createElement('ul');
    children.className = 'children';
    for (const child of visibleChildren(state, node)) {
      children.appendChild(renderNode(child, state, extras, false));
    }
    item.appendChild(children);
  }
  return item;
}

export function renderTree(tree: TreeNode, state: ViewState, extras: RenderExtras): HTMLUListElement {
  const list = document.createElement('ul');
  list.className = 'tree';
  list.appendChild(renderNode(tree, state, extras, true));
  return list;
}
