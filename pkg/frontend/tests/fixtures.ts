import type { PredictResponse, SchemaResponse } from "../src/types.js";

export const TEN_VARIABLE_SCHEMA: SchemaResponse = {
  variables: [
    { name: "NOI", categories: ["03400", "05300", "14530"] },
    { name: "POB", categories: ["22100", "34000", "34001"] },
    { name: "SOI", categories: ["06400", "11200", "11400"] },
    { name: "TOA", categories: ["02100", "11230", "31500"] },
    { name: "AGE", categories: ["Q1", "Q2", "Q3", "Q4"] },
    { name: "SEX", categories: ["F", "M"] },
    { name: "SIC", categories: ["0617", "4411"] },
    { name: "OCC", categories: ["3115", "8148"] },
    { name: "PAY", categories: ["Q1", "Q2", "Q3", "Q4"] },
    { name: "CPC", categories: ["A1B", "A1C", "B2X"] },
  ],
};

export const PREDICTION_FIXTURE: PredictResponse = {
  curve: {
    times: [0.5, 1.0, 2.5, 4.0, 7.5, 12.0],
    survival: [0.95, 0.85, 0.62, 0.41, 0.18, 0.05],
  },
  mean: 3.6403254814364763,
  median: 3.25,
  q1: 1.75,
  q3: 6.5,
  mean_truncated: true,
  match_count: 75,
  eta: 0.7356328330775262,
  method: "A",
  dropped: [],
};

export const EMPTY_MATCH_BODY = {
  error: "no training records match the partial input",
  diagnostics: {
    most_restrictive: "POB",
    singleton_counts: { POB: 0, SEX: 1200 },
  },
};

type Route = (init?: RequestInit) => { status: number; body: unknown };

/** Minimal fetch stub: route by URL, count calls, capture request bodies. */
export function fakeFetch(routes: Record<string, Route>) {
  const calls: Array<{ url: string; body?: unknown }> = [];
  const fetcher = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const route = routes[url];
    if (!route) throw new TypeError(`network error: no route for ${url}`);
    if (init?.signal?.aborted) {
      throw new DOMException("aborted", "AbortError");
    }
    const parsed = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ url, body: parsed });
    const { status, body } = route(init);
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => body,
    } as Response;
  }) as typeof fetch;
  return { fetcher, calls };
}
