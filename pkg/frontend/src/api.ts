import type {
  ClassifiedJson,
  GenerateRequest,
  GenerateResponse,
  IterationsPage,
  PromptJson,
  RunHandleJson,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly errorCode: string,
    public readonly detail: string,
  ) {
    super(`${errorCode} (${status}): ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the service; all state lives server-side. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let errorCode = 'http_error';
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string; detail?: string };
        errorCode = body.error ?? errorCode;
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, errorCode, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  startRun(body: {
    reference_b64?: string;
    reference_path?: string;
    config?: Record<string, unknown>;
  }): Promise<{ run_id: string }> {
    return this.post('/runs', body);
  }

  getRun(runId: string): Promise<RunHandleJson> {
    return this.request(`/runs/${encodeURIComponent(runId)}`);
  }

  getIterations(runId: string, since = 0): Promise<IterationsPage> {
    return this.request(`/runs/${encodeURIComponent(runId)}/iterations?since=${since}`);
  }

  stepImageUrl(runId: string, step: number): string {
    return `${this.baseUrl}/runs/${encodeURIComponent(runId)}/images/${step}`;
  }

  referenceImageUrl(runId: string): string {
    return `${this.baseUrl}/runs/${encodeURIComponent(runId)}/reference`;
  }

  classify(fragments: string[], aspectHints?: Record<string, string>): Promise<ClassifiedJson> {
    return this.post('/prompts/classify', { fragments, aspect_hints: aspectHints ?? null });
  }

  modify(fragments: string[], find: string, replace: string): Promise<PromptJson> {
    return this.post('/prompts/modify', { fragments, find, replace });
  }

  fuse(styleSource: ClassifiedJson, contentSource: ClassifiedJson): Promise<PromptJson> {
    return this.post('/prompts/fuse', {
      style_source: { content: styleSource.content, style: styleSource.style },
      content_source: { content: contentSource.content, style: contentSource.style },
    });
  }

  generate(request: GenerateRequest): Promise<GenerateResponse> {
    return this.post('/generate', request);
  }
}
