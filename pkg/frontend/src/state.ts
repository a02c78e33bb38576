/** Client-side view state: candidate placements and their stats.
 *
 * The server stays stateless; every comparison the user builds lives
 * here. Candidates only ever change in response to a successful server
 * payload, so the table can never show stats the server did not send,
 * and any 4xx/network failure leaves the list untouched.
 */

import type { ApiClient, InferResponse, MapStats } from "./api.js";
import { ApiError } from "./api.js";

export interface CandidatePlacement {
  id: number;
  row: number;
  col: number;
  schemes: Record<string, MapStats>;
  pinned: boolean;
}

export interface ViewState {
  scenarioId: string | null;
  activeScheme: string;
  candidates: CandidatePlacement[];
  nextId: number;
  status: "idle" | "loading" | "error";
  errorMessage: string | null;
}

export function initialState(): ViewState {
  return {
    scenarioId: null,
    activeScheme: "model",
    candidates: [],
    nextId: 1,
    status: "idle",
    errorMessage: null,
  };
}

export function candidateFromResponse(id: number, resp: InferResponse): CandidatePlacement {
  const schemes: Record<string, MapStats> = {};
  for (const [name, pred] of Object.entries(resp.schemes)) {
    schemes[name] = pred.stats;
  }
  return { id, row: resp.row, col: resp.col, schemes, pinned: false };
}

/** Append a candidate after a successful inference. */
export function addCandidate(state: ViewState, resp: InferResponse): ViewState {
  return {
    ...state,
    candidates: [...state.candidates, candidateFromResponse(state.nextId, resp)],
    nextId: state.nextId + 1,
    status: "idle",
    errorMessage: null,
  };
}

/** Any failed placement keeps the candidate list exactly as it was. */
export function placementFailed(state: ViewState, err: unknown): ViewState {
  const message =
    err instanceof ApiError ? err.detail : err instanceof Error ? err.message : String(err);
  return { ...state, status: "error", errorMessage: message };
}

export function togglePin(state: ViewState, id: number): ViewState {
  return {
    ...state,
    candidates: state.candidates.map((c) => (c.id === id ? { ...c, pinned: !c.pinned } : c)),
  };
}

export function removeCandidate(state: ViewState, id: number): ViewState {
  return { ...state, candidates: state.candidates.filter((c) => c.id !== id) };
}

/** Issue the inference for a clicked cell and append on success.
 *
 * At most one request is in flight per cell: re-clicking a pending
 * cell aborts and replaces the earlier request.
 */
export class PlacementController {
  private inflight = new Map<string, AbortController>();

  constructor(
    private client: ApiClient,
    private schemes: () => string[],
  ) {}

  async place(state: ViewState, row: number, col: number): Promise<ViewState> {
    if (state.scenarioId === null) {
      return placementFailed(state, new Error("no scenario selected"));
    }
    const key = `${row},${col}`;
    this.inflight.get(key)?.abort();
    const abort = new AbortController();
    this.inflight.set(key, abort);
    try {
      const resp = await this.client.infer(
        state.scenarioId,
        row,
        col,
        this.schemes(),
        abort.signal,
      );
      return addCandidate(state, resp);
    } catch (err) {
      return placementFailed(state, err);
    } finally {
      if (this.inflight.get(key) === abort) {
        this.inflight.delete(key);
      }
    }
  }
}

/** Candidate list round-trips through the URL fragment for replay. */
export function serializeCandidates(candidates: CandidatePlacement[]): string {
  return encodeURIComponent(JSON.stringify(candidates.map((c) => [c.id, c.row, c.col, c.pinned ? 1 : 0])));
}

export function deserializeCandidates(text: string): Array<{ id: number; row: number; col: number; pinned: boolean }> {
  if (!text) return [];
  const raw = JSON.parse(decodeURIComponent(text)) as Array<[number, number, number, number]>;
  return raw.map(([id, row, col, pinned]) => ({ id, row, col, pinned: pinned === 1 }));
}
