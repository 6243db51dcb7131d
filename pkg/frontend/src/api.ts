/** Typed client for the scoring service. Every displayed number originates
 * here: the UI never evaluates the model locally. */

export interface ScoreRequest {
  ldh: number;
  lymphocyte_pct: number;
  hs_crp: number;
}

export interface ScoreResponse {
  log_odds: number;
  probability: number;
  predicted_outcome: "death" | "survival";
  threshold: number;
  model_version: string;
}

export interface WhatIfPoint {
  value: number;
  probability: number;
}

export interface ModelDocument {
  feature_set: string;
  members: string[];
  coefficients: number[];
  threshold: number;
}

export type Biomarker = keyof ScoreRequest;

/** Mirrors the service's guard rails so bad input fails before a request. */
export const VALID_RANGES: Record<Biomarker, [number, number]> = {
  ldh: [0, 10000],
  lymphocyte_pct: [0, 100],
  hs_crp: [0, 1000],
};

export interface FieldError {
  field: string;
  message: string;
}

/** Client-side validation; empty list means the request may be submitted. */
export function validateInputs(
  values: Partial<Record<Biomarker, number | null>>,
): FieldError[] {
  const errors: FieldError[] = [];
  for (const field of Object.keys(VALID_RANGES) as Biomarker[]) {
    const v = values[field];
    if (v === undefined || v === null || Number.isNaN(v)) {
      errors.push({ field, message: "enter a value" });
      continue;
    }
    const [lo, hi] = VALID_RANGES[field];
    if (v < lo || v > hi) {
      errors.push({ field, message: `must lie in [${lo}, ${hi}]` });
    }
  }
  return errors;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`service returned ${status}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail: unknown = null;
      try {
        detail = (await resp.json()).detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) throw new ApiError(resp.status, null);
    return (await resp.json()) as T;
  }

  score(req: ScoreRequest): Promise<ScoreResponse> {
    return this.post<ScoreResponse>("/score", req);
  }

  whatIf(
    base: ScoreRequest,
    vary: Biomarker,
    min: number,
    max: number,
    steps: number,
  ): Promise<WhatIfPoint[]> {
    return this.post<WhatIfPoint[]>("/whatif", { base, vary, min, max, steps });
  }

  model(): Promise<ModelDocument> {
    return this.get<ModelDocument>("/model");
  }

  health(): Promise<{ status: string }> {
    return this.get<{ status: string }>("/health");
  }
}
