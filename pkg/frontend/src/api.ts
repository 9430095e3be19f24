/** Typed client for the memomap HTTP API.
 *
 * Every number the UI shows comes from one of these responses; the client
 * never derives tm/gs/cm itself.
 */

export type Metric = "cm" | "tm" | "gs";

export interface Bounds {
  minTm: number;
  maxTm: number;
  minGs: number;
  maxGs: number;
}

export interface MapMeta {
  n: number;
  n_valid: number;
  variant: string;
  k: number;
  corpus_hash: string;
  map_hash: string;
  has_features: boolean;
  has_signals: boolean;
  has_text: boolean;
  tm_mean: number | null;
  gs_mean: number | null;
  cm_mean: number | null;
}

export interface MapPoint {
  id: number;
  tm: number;
  gs: number;
  cm: number;
}

export interface PointsResponse {
  total_in_bounds: number;
  sampled: number;
  seed: number;
  points: MapPoint[];
}

export interface RegionStats {
  count: number;
  tm_mean: number | null;
  gs_mean: number | null;
  cm_mean: number | null;
  cm_histogram: number[];
  feature_means?: Record<string, number | null>;
}

export interface ExampleDetail {
  id: number;
  tm: number | null;
  gs: number | null;
  cm: number | null;
  n_train: number;
  n_heldout: number;
  flags: string;
  source?: string;
  target?: string;
  features?: Record<string, number | null>;
  signals?: Record<string, number | null>;
}

export interface SelectionCreated {
  manifest_id: string;
  count: number;
  total_source_tokens: number;
  met_budget: boolean;
}

export interface SelectionIds {
  manifest_id: string;
  bounds: number[];
  token_budget: number;
  seed: number;
  example_ids: number[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

function boundsQuery(b: Bounds): string {
  return `min_tm=${b.minTm}&max_tm=${b.maxTm}&min_gs=${b.minGs}&max_gs=${b.maxGs}`;
}

export class MemomapApi {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, "network", `API unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status} on ${path}`;
      try {
        const body = (await response.json()) as { detail?: { code?: string; message?: string } };
        if (body.detail?.code) code = body.detail.code;
        if (body.detail?.message) message = body.detail.message;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  meta(): Promise<MapMeta> {
    return this.request<MapMeta>("/api/map/meta");
  }

  points(bounds: Bounds, sample: number, seed: number): Promise<PointsResponse> {
    return this.request<PointsResponse>(
      `/api/map/points?${boundsQuery(bounds)}&sample=${sample}&seed=${seed}`,
    );
  }

  regionStats(bounds: Bounds): Promise<RegionStats> {
    return this.request<RegionStats>(`/api/region/stats?${boundsQuery(bounds)}`);
  }

  example(id: number): Promise<ExampleDetail> {
    return this.request<ExampleDetail>(`/api/example/${id}`);
  }

  createSelection(bounds: Bounds, tokenBudget: number, seed: number): Promise<SelectionCreated> {
    return this.request<SelectionCreated>("/api/selection", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        min_tm: bounds.minTm,
        max_tm: bounds.maxTm,
        min_gs: bounds.minGs,
        max_gs: bounds.maxGs,
        token_budget: tokenBudget,
        seed,
      }),
    });
  }

  selectionIds(manifestId: string): Promise<SelectionIds> {
    return this.request<SelectionIds>(`/api/selection/${manifestId}/ids`);
  }

  /** URL of the line-aligned corpus subset download. */
  exportUrl(manifestId: string): string {
    return `${this.baseUrl}/api/selection/${manifestId}/export`;
  }
}
