import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, 'fixtures', name), 'utf-8')) as T;
}

export interface FakeRequest {
  body: any;
  query: URLSearchParams;
}

export type FakeHandler = (request: FakeRequest) => { status?: number; json: unknown };

/** Routes `METHOD /path` to a handler and records every request body. */
export function fakeFetch(handlers: Record<string, FakeHandler>) {
  const calls: { key: string; body: any }[] = [];
  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, 'http://service.test');
    const key = `${init?.method ?? 'GET'} ${url.pathname}`;
    const handler = handlers[key];
    if (!handler) {
      return new Response(JSON.stringify({ error: 'not_found', detail: `no route ${key}` }), {
        status: 404,
        headers: { 'Content-Type': 'application/json' },
      });
    }
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ key, body });
    const result = handler({ body, query: url.searchParams });
    return new Response(JSON.stringify(result.json), {
      status: result.status ?? 200,
      headers: { 'Content-Type': 'application/json' },
    });
  };
  return { fetchFn, calls };
}
