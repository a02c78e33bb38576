/** Typed client for the placement service HTTP API (docs/api.md). */

export interface ScenarioSummary {
  id: string;
  width_cells: number;
  cell_size_m: number;
  gain_floor_db: number;
  gain_span_db: number;
  n_aps: number;
  ap_coords: Array<[number, number]>;
  has_obstacle_mask: boolean;
}

export interface MapStats {
  threshold_db: number;
  coverage_fraction_above_threshold: number;
  min_db: number;
  max_db: number;
  mean_db: number;
}

export interface SchemePrediction {
  values_db: number[];
  stats: MapStats;
}

export interface InferResponse {
  env_id: string;
  row: number;
  col: number;
  width_cells: number;
  schemes: Record<string, SchemePrediction>;
}

export interface GainResponse {
  env_id: string;
  ap_index: number;
  row: number;
  col: number;
  width_cells: number;
  values_db: number[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parse<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async listScenarios(): Promise<ScenarioSummary[]> {
    const doc = await parse<{ scenarios: ScenarioSummary[] }>(
      await this.fetchImpl(`${this.base}/api/scenarios`),
    );
    return doc.scenarios;
  }

  async getGain(envId: string, apIndex: number): Promise<GainResponse> {
    return parse(await this.fetchImpl(`${this.base}/api/scenarios/${envId}/aps/${apIndex}/gain`));
  }

  async infer(
    envId: string,
    row: number,
    col: number,
    schemes: string[],
    signal?: AbortSignal,
  ): Promise<InferResponse> {
    return parse(
      await this.fetchImpl(`${this.base}/api/scenarios/${envId}/infer`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ row, col, schemes }),
        signal,
      }),
    );
  }
}
