// Typed client for the concept-mapping service HTTP JSON API.
// Every mutation the UI performs goes through here; nothing else talks to
// the network. The fetch function is injectable so unit tests can stub the
// wire without patching globals.

export interface NodeSummary {
  id: string;
  label: string;
  relation: string | null;
  relation_display: string | null;
  parent_id: string | null;
  depth: number;
  selected: boolean;
  provenance: string;
  child_count: number;
}

export interface TreeNode extends NodeSummary {
  children: TreeNode[];
}

export interface SessionCreated {
  session_id: string;
  seed: string;
  tree: TreeNode;
  recommendations: NodeSummary[];
  k: number;
}

export interface TreeResponse {
  session_id: string;
  seed: string;
  tree: TreeNode;
}

export interface ExpandResponse {
  node_id: string;
  created: NodeSummary[];
}

export interface RecommendMoreResponse {
  node_id: string;
  k: number;
  recommended: NodeSummary[];
}

export interface CreateNodeResponse {
  created: NodeSummary;
  near_duplicates: string[];
}

export interface PatchNodeResponse {
  node: NodeSummary;
  near_duplicates?: string[];
}

export interface DeleteNodeResponse {
  removed_id: string;
  removed_count: number;
}

export interface ExportRow {
  id: string;
  label: string;
  relation: string | null;
  depth: number;
  path: string;
  tests: string[];
}

export interface ExportBundle {
  session_id: string;
  seed: string;
  selected: ExportRow[];
}

export interface SuggestResponse {
  node_id: string;
  tests: string[];
}

export interface SessionConfig {
  n_per_relation?: number;
  relations_layer1?: string[];
  relations_layer2?: string[];
  initial_layers?: number;
  max_kb_size?: number;
  k?: number;
  alpha?: number;
  k_growth?: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly detail: unknown = null,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class WeaverClient {
  constructor(
    public readonly baseUrl: string = 'http://127.0.0.1:8000',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { 'content-type': 'application/json' } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await this.asApiError(response);
    }
    return (await response.json()) as T;
  }

  private async asApiError(response: Response): Promise<ApiError> {
    let code = 'http-error';
    let message = `${response.status} ${response.statusText}`;
    let detail: unknown = null;
    try {
      const body = (await response.json()) as { code?: string; message?: string; detail?: unknown };
      if (typeof body.code === 'string') code = body.code;
      if (typeof body.message === 'string') message = body.message;
      detail = body.detail ?? null;
    } catch {
      // non-JSON error body; keep the status line
    }
    return new ApiError(response.status, code, message, detail);
  }

  createSession(seed: string, config?: SessionConfig): Promise<SessionCreated> {
    return this.request('POST', '/sessions', { seed, config });
  }

  tree(sessionId: string): Promise<TreeResponse> {
    return this.request('GET', `/sessions/${sessionId}/tree`);
  }

  expand(sessionId: string, nodeId: string, relations?: string[], n?: number): Promise<ExpandResponse> {
    return this.request('POST', `/sessions/${sessionId}/nodes/${nodeId}/expand`, {
      relations: relations ?? null,
      n: n ?? null,
    });
  }

  recommendMore(sessionId: string, nodeId: string): Promise<RecommendMoreResponse> {
    return this.request('POST', `/sessions/${sessionId}/nodes/${nodeId}/recommend-more`);
  }

  createNode(sessionId: string, parentId: string, label: string, relation?: string): Promise<CreateNodeResponse> {
    return this.request('POST', `/sessions/${sessionId}/nodes`, {
      parent_id: parentId,
      label,
      relation: relation ?? null,
    });
  }

  editLabel(sessionId: string, nodeId: string, label: string): Promise<PatchNodeResponse> {
    return this.request('PATCH', `/sessions/${sessionId}/nodes/${nodeId}`, { label });
  }

  setSelected(sessionId: string, nodeId: string, selected: boolean): Promise<PatchNodeResponse> {
    return this.request('PATCH', `/sessions/${sessionId}/nodes/${nodeId}`, { selected });
  }

  deleteNode(sessionId: string, nodeId: string): Promise<DeleteNodeResponse> {
    return this.request('DELETE', `/sessions/${sessionId}/nodes/${nodeId}`);
  }

  suggestTests(sessionId: string, nodeId: string, m = 5): Promise<SuggestResponse> {
    return this.request('POST', `/sessions/${sessionId}/nodes/${nodeId}/suggest-tests`, { m });
  }

  prefetch(sessionId: string, nodeId: string): Promise<{ node_id: string; scheduled: number }> {
    return this.request('POST', `/sessions/${sessionId}/nodes/${nodeId}/prefetch`);
  }

  async exportJson(sessionId: string): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/export?format=json`, {
      method: 'GET',
    });
    if (!response.ok) {
      throw await this.asApiError(response);
    }
    return response.text();
  }

  async exportCsv(sessionId: string): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/export?format=csv`, {
      method: 'GET',
    });
    if (!response.ok) {
      throw await this.asApiError(response);
    }
    return response.text();
  }
}
