import type { ErrorResponse, PredictRequest, PredictResponse, SchemaResponse } from "./types.js";

/** Service error carrying the HTTP status and the decoded error body. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly body: ErrorResponse,
  ) {
    super(body.error);
  }
}

// the service mounts this client under /ui and the API at the origin root
export async function fetchSchema(fetcher: typeof fetch = fetch): Promise<SchemaResponse> {
  const response = await fetcher("/schema");
  if (!response.ok) throw new ServiceError(response.status, await decodeError(response));
  return (await response.json()) as SchemaResponse;
}

export async function predict(
  request: PredictRequest,
  signal?: AbortSignal,
  fetcher: typeof fetch = fetch,
): Promise<PredictResponse> {
  const response = await fetcher("/predict", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(request),
    signal,
  });
  if (!response.ok) throw new ServiceError(response.status, await decodeError(response));
  return (await response.json()) as PredictResponse;
}

async function decodeError(response: Response): Promise<ErrorResponse> {
  try {
    return (await response.json()) as ErrorResponse;
  } catch {
    return { error: `service returned ${response.status}` };
  }
}
