import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import type { RunHandleJson } from '../src/types.js';
import { fakeFetch, loadFixture } from './helpers.js';

const handle = loadFixture<RunHandleJson>('run_handle_done.json');

describe('ApiClient', () => {
  it('fetches run handles and exposes image URLs', async () => {
    const { fetchFn, calls } = fakeFetch({
      'GET /runs/fixture-run': () => ({ json: handle }),
    });
    const api = new ApiClient('http://service.test', fetchFn);
    const fetched = await api.getRun('fixture-run');
    expect(fetched.status).toBe('done');
    expect(fetched.result?.final_score.raw_cosine).toBeGreaterThanOrEqual(0.95);
    expect(calls[0].key).toBe('GET /runs/fixture-run');
    expect(api.stepImageUrl('fixture-run', 2)).toBe(
      'http://service.test/runs/fixture-run/images/2',
    );
    expect(api.referenceImageUrl('fixture-run')).toBe(
      'http://service.test/runs/fixture-run/reference',
    );
  });

  it('posts run starts with the config payload', async () => {
    const { fetchFn, calls } = fakeFetch({
      'POST /runs': () => ({ status: 202, json: { run_id: 'r9' } }),
    });
    const api = new ApiClient('http://service.test', fetchFn);
    const started = await api.startRun({ reference_b64: 'abc', config: { init_prompt: 'dog' } });
    expect(started.run_id).toBe('r9');
    expect(calls[0].body).toEqual({ reference_b64: 'abc', config: { init_prompt: 'dog' } });
  });

  it('raises ApiError carrying the service error shape', async () => {
    const { fetchFn } = fakeFetch({
      'GET /runs/nope': () => ({ status: 404, json: { error: 'not_found', detail: 'unknown run: nope' } }),
    });
    const api = new ApiClient('http://service.test', fetchFn);
    await expect(api.getRun('nope')).rejects.toThrowError(ApiError);
    try {
      await api.getRun('nope');
    } catch (error) {
      const apiError = error as ApiError;
      expect(apiError.status).toBe(404);
      expect(apiError.errorCode).toBe('not_found');
      expect(apiError.detail).toContain('nope');
    }
  });

  it('paginates iterations with the since cursor', async () => {
    const { fetchFn, calls } = fakeFetch({
      'GET /runs/r1/iterations': ({ query }) => ({
        json: { iterations: [], next_since: Number(query.get('since')), done: true },
      }),
    });
    const api = new ApiClient('http://service.test', fetchFn);
    const page = await api.getIterations('r1', 5);
    expect(page.done).toBe(true);
    expect(calls[0].key).toBe('GET /runs/r1/iterations');
  });
});
