/** App wiring: scenario picker, clickable heatmap, candidate table. */

import { ApiClient, ScenarioSummary } from "./api.js";
import { makeScale } from "./colormap.js";
import { renderHeatmap, Marker } from "./heatmap.js";
import {
  PlacementController,
  ViewState,
  deserializeCandidates,
  initialState,
  removeCandidate,
  serializeCandidates,
  togglePin,
} from "./state.js";
import { GridGeometry, pixelToCell } from "./transform.js";

const client = new ApiClient();
let state: ViewState = initialState();
let scenarios: ScenarioSummary[] = [];
let lastMap: { valuesDb: number[]; width: number } | null = null;

const canvas = document.getElementById("map") as HTMLCanvasElement;
const scenarioSelect = document.getElementById("scenario") as HTMLSelectElement;
const schemeSelect = document.getElementById("scheme") as HTMLSelectElement;
const statusLine = document.getElementById("status")!;
const table = document.getElementById("candidates")!;

const controller = new PlacementController(client, () => ["model", "weighted", "pathloss"]);

function currentScenario(): ScenarioSummary | undefined {
  return scenarios.find((s) => s.id === state.scenarioId);
}

function setState(next: ViewState): void {
  state = next;
  render();
}

function render(): void {
  statusLine.textContent =
    state.status === "error" ? `error: ${state.errorMessage}` : state.status;
  statusLine.className = state.status;

  const sc = currentScenario();
  if (sc && lastMap) {
    const scale = makeScale(sc.gain_floor_db, sc.gain_floor_db + sc.gain_span_db);
    const markers: Marker[] = sc.ap_coords.map(([row, col]) => ({ row, col, kind: "ap" }));
    for (const cand of state.candidates) {
      markers.push({ row: cand.row, col: cand.col, kind: "candidate", label: `#${cand.id}` });
    }
    renderHeatmap(canvas, lastMap.valuesDb, lastMap.width, scale, markers);
  }

  const scheme = state.activeScheme;
  const rows = state.candidates
    .map((c) => {
      const stats = c.schemes[scheme];
      if (!stats) return "";
      return `<tr class="${c.pinned ? "pinned" : ""}">
        <td>#${c.id}</td><td>(${c.row}, ${c.col})</td>
        <td>${(100 * stats.coverage_fraction_above_threshold).toFixed(1)}%</td>
        <td>${stats.mean_db.toFixed(1)}</td>
        <td>${stats.max_db.toFixed(1)}</td>
        <td><button data-pin="${c.id}">${c.pinned ? "unpin" : "pin"}</button>
            <button data-del="${c.id}">x</button></td>
      </tr>`;
    })
    .join("");
  table.innerHTML = `<tr><th>id</th><th>cell</th><th>coverage</th><th>mean dB</th><th>max dB</th><th></th></tr>${rows}`;
  history.replaceState(null, "", `#${serializeCandidates(state.candidates)}`);
}

async function selectScenario(id: string): Promise<void> {
  setState({ ...initialState(), scenarioId: id });
  const sc = currentScenario();
  if (!sc) return;
  const gain = await client.getGain(id, 0);
  lastMap = { valuesDb: gain.values_db, width: gain.width_cells };
  render();
}

canvas.addEventListener("click", async (ev) => {
  const sc = currentScenario();
  if (!sc) return;
  const rect = canvas.getBoundingClientRect();
  const geom: GridGeometry = { widthCells: sc.width_cells, canvasSize: rect.width };
  const cell = pixelToCell(geom, ev.clientX - rect.left, ev.clientY - rect.top);
  if (!cell) return;
  setState({ ...state, status: "loading", errorMessage: null });
  const next = await controller.place(state, cell.row, cell.col);
  // show the inferred map for the newest candidate when one was added
  if (next.candidates.length > state.candidates.length) {
    const resp = next.candidates[next.candidates.length - 1];
    const pred = await client
      .infer(sc.id, resp.row, resp.col, [state.activeScheme])
      .catch(() => null);
    if (pred) {
      lastMap = { valuesDb: pred.schemes[state.activeScheme].values_db, width: pred.width_cells };
    }
  }
  setState(next);
});

table.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement;
  const pin = target.getAttribute("data-pin");
  const del = target.getAttribute("data-del");
  if (pin) setState(togglePin(state, Number(pin)));
  if (del) setState(removeCandidate(state, Number(del)));
});

schemeSelect.addEventListener("change", () => {
  setState({ ...state, activeScheme: schemeSelect.value });
});

scenarioSelect.addEventListener("change", () => void selectScenario(scenarioSelect.value));

async function boot(): Promise<void> {
  scenarios = await client.listScenarios();
  scenarioSelect.innerHTML = scenarios
    .map((s) => `<option value="${s.id}">${s.id} (${s.n_aps} APs)</option>`)
    .join("");
  if (scenarios.length) {
    await selectScenario(scenarios[0].id);
  }
  const saved = deserializeCandidates(location.hash.slice(1));
  if (saved.length && state.scenarioId) {
    for (const c of saved) {
      setState(await controller.place(state, c.row, c.col));
    }
  }
}

void boot().catch((err) => {
  statusLine.textContent = `error: ${err}`;
});
