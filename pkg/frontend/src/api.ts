// Typed client for the classifier's HTTP JSON API. The UI never computes
// scores itself; every number it shows comes from these responses.

export interface Prediction {
  label: string;
  scores: Record<string, number>;
  model_version: string;
  input_hash: string;
}

export interface LabelInfo {
  canonical_name: string;
  display_name: string;
  fallacy_type: string;
  definition: string;
  argument_structure: string | null;
}

export interface TaxonomyPayload {
  version: number;
  labels: LabelInfo[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function errorFrom(response: Response): Promise<ApiError> {
  let code = `HTTP ${response.status}`;
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.error === "string") code = body.error;
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  async labels(): Promise<TaxonomyPayload> {
    const response = await fetch(`${this.baseUrl}/labels`);
    if (!response.ok) throw await errorFrom(response);
    return response.json();
  }

  async predict(text: string): Promise<Prediction> {
    const response = await fetch(`${this.baseUrl}/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
    if (!response.ok) throw await errorFrom(response);
    return response.json();
  }

  async health(): Promise<{ status: string; model_version: string }> {
    const response = await fetch(`${this.baseUrl}/health`);
    if (!response.ok) throw await errorFrom(response);
    return response.json();
  }
}

export function resolveApiBase(): string {
  const fromGlobal = (globalThis as Record<string, unknown>).FLICC_API_BASE;
  if (typeof fromGlobal === "string" && fromGlobal) return fromGlobal;
  if (typeof window !== "undefined") {
    const param = new URL(window.location.href).searchParams.get("api");
    if (param) return param;
  }
  return "http://127.0.0.1:8000";
}
