/** DOM shell: wires the studio controls to the rendering service.
 *
 * All server interaction is asynchronous; refocus renders go through a
 * latest-wins scheduler so at most one request is in flight and a stale
 * frame can never land on screen. Slider input debounces 120 ms; clicking
 * the image to pick the focal plane renders immediately.
 */

import { StudioClient, type RenderParams, type TrackedRecord } from "./api.js";
import { debounce } from "./debounce.js";
import { LatestWins } from "./latest.js";
import { initialState, inBounds, sweepIndex, type StudioState, type ViewMode } from "./state.js";
import { parseZip } from "./zip.js";

const SLIDER_DEBOUNCE_MS = 120;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const client = new StudioClient("");
const state: StudioState = initialState();

const viewer = el<HTMLImageElement>("viewer");
const status = el<HTMLElement>("status");
const notice = el<HTMLElement>("notice");
const leftInput = el<HTMLInputElement>("left-file");
const rightInput = el<HTMLInputElement>("right-file");
const openBtn = el<HTMLButtonElement>("open-session");
const apertureSlider = el<HTMLInputElement>("aperture");
const apertureReadout = el<HTMLElement>("aperture-readout");
const focusReadout = el<HTMLElement>("focus-readout");
const modeSelect = el<HTMLSelectElement>("mode");
const viewSelect = el<HTMLSelectElement>("view");
const sweepCount = el<HTMLInputElement>("sweep-count");
const sweepBtn = el<HTMLButtonElement>("sweep-prefetch");
const scrub = el<HTMLInputElement>("sweep-scrub");
const scrubReadout = el<HTMLElement>("scrub-readout");
const trackBtn = el<HTMLButtonElement>("track-run");
const trackTable = el<HTMLElement>("track-table");

let inputUrl: string | null = null;
let refocusedUrl: string | null = null;
let disparityUrl: string | null = null;
let sweepUrls: string[] = [];
let sweepFocals: number[] = [];

function say(text: string): void {
  status.textContent = text;
}

function warn(text: string): void {
  notice.textContent = text;
  notice.classList.add("visible");
  setTimeout(() => notice.classList.remove("visible"), 4000);
}

function swapUrl(previous: string | null, blob: Blob): string {
  if (previous) URL.revokeObjectURL(previous);
  return URL.createObjectURL(blob);
}

function show(view: ViewMode): void {
  state.view = view;
  const url =
    view === "input" ? inputUrl : view === "disparity" ? disparityUrl : refocusedUrl;
  if (url) viewer.src = url;
}

const renderer = new LatestWins<RenderParams, Blob>(
  (params) => {
    if (!state.sessionId) return Promise.reject(new Error("no session"));
    return client.refocus(state.sessionId, params);
  },
  (blob) => {
    refocusedUrl = swapUrl(refocusedUrl, blob);
    state.pending = false;
    show("refocused");
    say(`focus ${state.focus.toFixed(2)} px, aperture ${state.aperture.toFixed(2)}`);
  },
  (error) => {
    state.pending = false;
    warn(`render failed: ${String(error)}`);
  },
);

function requestRender(): void {
  if (!state.sessionId) return;
  state.pending = true;
  say("rendering...");
  renderer.request({ focus: state.focus, aperture: state.aperture, mode: state.mode });
}

const debouncedRender = debounce(requestRender, SLIDER_DEBOUNCE_MS);

openBtn.addEventListener("click", async () => {
  const left = leftInput.files?.[0];
  const right = rightInput.files?.[0];
  if (!left || !right) {
    warn("pick both views first");
    return;
  }
  try {
    say("uploading pair...");
    const sid = await client.createSession(left, right);
    const info = await client.sessionInfo(sid);
    state.sessionId = sid;
    state.width = info.width;
    state.height = info.height;
    inputUrl = swapUrl(inputUrl, left);
    sweepUrls.forEach((u) => URL.revokeObjectURL(u));
    sweepUrls = [];
    sweepFocals = [];
    show("input");
    say(`session ${sid.slice(0, 8)}: ${info.width}x${info.height}, click to focus`);
    void client.disparityPng(sid).then((blob) => {
      disparityUrl = swapUrl(disparityUrl, blob);
    });
  } catch (error) {
    warn(`session failed: ${String(error)}`);
  }
});

viewer.addEventListener("click", async (event) => {
  if (!state.sessionId || viewer.clientWidth === 0) return;
  const rect = viewer.getBoundingClientRect();
  const x = Math.floor(((event.clientX - rect.left) / rect.width) * state.width);
  const y = Math.floor(((event.clientY - rect.top) / rect.height) * state.height);
  if (!inBounds(x, y, state.width, state.height)) return;
  try {
    const disparity = await client.probe(state.sessionId, x, y);
    state.focus = disparity;
    focusReadout.textContent = disparity.toFixed(2);
    requestRender();
  } catch (error) {
    warn(`probe failed: ${String(error)}`);
  }
});

apertureSlider.addEventListener("input", () => {
  state.aperture = Number(apertureSlider.value);
  apertureReadout.textContent = state.aperture.toFixed(2);
  debouncedRender();
});

modeSelect.addEventListener("change", () => {
  state.mode = modeSelect.value === "smooth" ? "smooth" : "hard";
  debouncedRender();
});

viewSelect.addEventListener("change", () => {
  show(viewSelect.value as ViewMode);
});

sweepBtn.addEventListener("click", async () => {
  if (!state.sessionId) {
    warn("open a session first");
    return;
  }
  const count = Math.max(2, Math.min(64, Number(sweepCount.value) || 10));
  state.sweepCount = count;
  try {
    say(`prefetching ${count}-frame sweep...`);
    const zipBytes = await client.sweep(state.sessionId, {
      ...sweepRange(),
      count,
      focus: state.focus,
      aperture: state.aperture,
      mode: state.mode,
    });
    const entries = parseZip(zipBytes);
    const manifest = entries.find((e) => e.name === "sweep.json");
    if (manifest) {
      sweepFocals = (JSON.parse(new TextDecoder().decode(manifest.data)) as { focals: number[] })
        .focals;
    }
    sweepUrls.forEach((u) => URL.revokeObjectURL(u));
    sweepUrls = entries
      .filter((e) => e.name.endsWith(".png"))
      .sort((a, b) => a.name.localeCompare(b.name))
      .map((e) => URL.createObjectURL(new Blob([e.data.slice()], { type: "image/png" })));
    scrub.disabled = sweepUrls.length === 0;
    say(`sweep cached: ${sweepUrls.length} frames, scrub away (no network)`);
  } catch (error) {
    warn(`sweep failed: ${String(error)}`);
  }
});

function sweepRange(): { start: number; stop: number } {
  // Sweep spans a band around the current focus; the server clamps planes
  // to the disparity range via its own parameter validation.
  const halfSpan = Math.max(4, 8 * state.aperture * 10);
  return { start: Math.max(0, state.focus - halfSpan), stop: state.focus + halfSpan };
}

scrub.addEventListener("input", () => {
  if (sweepUrls.length === 0) return;
  const position = Number(scrub.value);
  const index = sweepIndex(position, sweepUrls.length);
  const url = sweepUrls[index];
  if (url) viewer.src = url;
  const focal = sweepFocals[index];
  scrubReadout.textContent =
    focal !== undefined ? `frame ${index}, focus ${focal.toFixed(2)}` : `frame ${index}`;
});

trackBtn.addEventListener("click", async () => {
  const frames = el<HTMLInputElement>("track-frames").value.trim();
  const disparities = el<HTMLInputElement>("track-disparities").value.trim();
  const boxRaw = el<HTMLInputElement>("track-box").value.split(",").map(Number);
  if (!frames || !disparities || boxRaw.length !== 4 || boxRaw.some((v) => !Number.isFinite(v))) {
    warn("tracking needs frame glob, disparity glob, and x,y,w,h");
    return;
  }
  try {
    say("tracking...");
    const records = await client.track({
      frames,
      disparities,
      box: boxRaw as [number, number, number, number],
      aperture: state.aperture,
    });
    renderTrackTable(records);
    say(`tracked ${records.length} frames`);
  } catch (error) {
    warn(`tracking failed: ${String(error)}`);
  }
});

function renderTrackTable(records: TrackedRecord[]): void {
  const rows = records
    .map(
      (r) =>
        `<tr><td>${r.index}</td><td>${r.box.map((v) => v.toFixed(1)).join(", ")}</td>` +
        `<td>${r.focal_plane.toFixed(2)}</td><td>${r.lost ? "lost" : "locked"}</td></tr>`,
    )
    .join("");
  trackTable.innerHTML =
    "<tr><th>frame</th><th>box</th><th>focus</th><th>state</th></tr>" + rows;
}

say("upload a rectified stereo pair to begin");
