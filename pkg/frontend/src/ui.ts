/** DOM glue: wires form inputs, the score gauge, and the what-if panel to
 * the service client. All arithmetic lives in the service; all presentation
 * shaping lives in viewmodel.ts. */

import {
  ApiClient,
  ApiError,
  Biomarker,
  ScoreRequest,
  VALID_RANGES,
  validateInputs,
} from "./api.js";
import {
  LatestWins,
  debounce,
  formatProbability,
  scoreView,
  whatIfView,
} from "./viewmodel.js";

const DEBOUNCE_MS = 150;
const SWEEP_STEPS = 41;

const client = new ApiClient("");
const scoreGate = new LatestWins();
const whatIfGate = new LatestWins();

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function readInputs(): Partial<Record<Biomarker, number | null>> {
  const out: Partial<Record<Biomarker, number | null>> = {};
  for (const field of Object.keys(VALID_RANGES) as Biomarker[]) {
    const raw = ($(`in-${field}`) as HTMLInputElement).value.trim();
    out[field] = raw === "" ? null : Number(raw);
  }
  return out;
}

function showBanner(text: string | null) {
  const banner = $("banner");
  banner.textContent = text ?? "";
  banner.style.display = text ? "block" : "none";
}

function setStale(stale: boolean) {
  $("results").classList.toggle("stale", stale);
}

async function refreshScore() {
  const values = readInputs();
  const errors = validateInputs(values);
  for (const field of Object.keys(VALID_RANGES)) {
    const hint = $(`hint-${field}`);
    const err = errors.find((e) => e.field === field);
    hint.textContent = err ? err.message : "";
  }
  const button = $("submit") as HTMLButtonElement;
  button.disabled = errors.length > 0;
  if (errors.length > 0) return;

  const req = values as ScoreRequest;
  try {
    const resp = await scoreGate.run(() => client.score(req));
    if (resp === null) return; // superseded by newer input
    const view = scoreView(resp);
    $("gauge-fill").style.width = `${view.gauge.fraction * 100}%`;
    $("gauge-threshold").style.left = `${view.gauge.thresholdFraction * 100}%`;
    $("gauge-text").textContent = view.gauge.text;
    const badge = $("badge");
    badge.textContent = view.badge.label;
    badge.className = `badge ${view.badge.tone}`;
    $("log-odds").textContent = view.logOddsText;
    showBanner(null);
    setStale(false);
    void refreshWhatIf(req);
  } catch (e) {
    if (e instanceof ApiError) {
      showBanner(`service rejected the request (${e.status})`);
    } else {
      showBanner("service unreachable — showing last known results");
      setStale(true);
    }
  }
}

async function refreshWhatIf(base: ScoreRequest) {
  const vary = ($("whatif-biomarker") as HTMLSelectElement).value as Biomarker;
  const [lo, hi] = VALID_RANGES[vary];
  try {
    const result = await whatIfGate.run(() =>
      client.whatIf(base, vary, lo, Math.min(hi, base[vary] * 2 + 100),
        SWEEP_STEPS),
    );
    if (result === null) return;
    const resp = await client.score(base);
    drawCurve(whatIfView(result, base[vary], resp.threshold));
  } catch (e) {
    if (e instanceof ApiError && e.status === 422) {
      showBanner("what-if range rejected; curve unchanged");
    }
  }
}

function drawCurve(view: ReturnType<typeof whatIfView>) {
  const svg = $("curve") as unknown as SVGSVGElement;
  const w = 360;
  const h = 120;
  const xs = view.points.map((p) => p.value);
  const xmin = Math.min(...xs);
  const xmax = Math.max(...xs);
  const x = (v: number) => ((v - xmin) / (xmax - xmin || 1)) * w;
  const y = (p: number) => h - p * h;
  const path = view.points
    .map((p, i) => `${i ? "L" : "M"}${x(p.value).toFixed(1)},${y(p.probability).toFixed(1)}`)
    .join(" ");
  const ty = y(view.thresholdFraction).toFixed(1);
  const marker = view.marker
    ? `<circle cx="${x(view.marker.value).toFixed(1)}" cy="${y(view.marker.probability).toFixed(1)}" r="4" class="marker"/>`
    : "";
  svg.innerHTML =
    `<line x1="0" y1="${ty}" x2="${w}" y2="${ty}" class="threshold"/>` +
    `<path d="${path}" class="curve"/>` +
    marker;
  $("crossing").textContent =
    view.crossing === null
      ? "threshold not crossed in range"
      : `crosses threshold near ${formatProbability(view.crossing)}`;
}

export function boot() {
  const rerun = debounce(() => void refreshScore(), DEBOUNCE_MS);
  for (const field of Object.keys(VALID_RANGES)) {
    $(`in-${field}`).addEventListener("input", rerun);
  }
  $("whatif-biomarker").addEventListener("change", rerun);
  $("submit").addEventListener("click", () => void refreshScore());
}

if (typeof document !== "undefined" && document.getElementById("submit")) {
  boot();
}
