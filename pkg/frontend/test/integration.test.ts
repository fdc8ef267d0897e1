import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";

import { StudioClient, type RenderParams } from "../src/api.js";
import { LatestWins } from "../src/latest.js";
import { sweepIndex } from "../src/state.js";
import { parseZip } from "../src/zip.js";
import { decodePng } from "./png.js";
import { constantShiftPair, meanAbsDiff } from "./scene.js";

const PORT = 18744;
const BASE = `http://127.0.0.1:${PORT}`;
const PNG_MAGIC = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

let server: ChildProcess;
let client: StudioClient;
let sessionId: string;
let scene: ReturnType<typeof constantShiftPair>;

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 150; i++) {
    try {
      await fetch(`${BASE}/sessions/${"0".repeat(32)}`);
      return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("server did not come up");
}

async function renderBytes(params: RenderParams): Promise<Uint8Array> {
  const blob = await client.refocus(sessionId, params);
  return new Uint8Array(await blob.arrayBuffer());
}

function sameBytes(a: Uint8Array, b: Uint8Array): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

beforeAll(async () => {
  server = spawn("stereobokeh", ["serve", "--port", String(PORT)], { stdio: "ignore" });
  await waitForServer();
  client = new StudioClient(BASE);
  scene = constantShiftPair(96, 160, 8);
  sessionId = await client.createSession(
    new Blob([scene.leftPng.slice()], { type: "image/png" }),
    new Blob([scene.rightPng.slice()], { type: "image/png" }),
  );
});

afterAll(() => {
  server?.kill();
});

describe("studio against a live service", () => {
  it("reports the uploaded frame geometry", async () => {
    const info = await client.sessionInfo(sessionId);
    expect(info.width).toBe(160);
    expect(info.height).toBe(96);
    expect(info.channels).toBe(3);
  });

  it("click-to-focus keeps the probed neighborhood sharp", async () => {
    const probed = await client.probe(sessionId, 80, 48);
    expect(Math.abs(probed - scene.disparity)).toBeLessThan(0.5);

    const params: RenderParams = { focus: probed, aperture: 0.25, mode: "hard" };
    const focused = decodePng(await renderBytes(params));
    const defocused = decodePng(await renderBytes({ ...params, focus: probed + 12 }));

    const sharpness = meanAbsDiff(focused, scene.left, 16);
    const blur = meanAbsDiff(defocused, scene.left, 16);
    expect(sharpness).toBeLessThanOrEqual(1.0);
    expect(blur).toBeGreaterThanOrEqual(5.0);
  });

  it("rapid parameter changes settle on the newest render, never a stale one", async () => {
    const shown: Uint8Array[] = [];
    const renderer = new LatestWins<RenderParams, Uint8Array>(
      (p) => renderBytes(p),
      (bytes) => shown.push(bytes),
      (err) => {
        throw err;
      },
    );

    const focals = [scene.disparity, scene.disparity + 4, scene.disparity + 8, scene.disparity + 12];
    for (const focus of focals) {
      renderer.request({ focus, aperture: 0.25, mode: "hard" });
    }
    while (renderer.pending) {
      await new Promise((r) => setTimeout(r, 25));
    }

    const newest = await renderBytes({ focus: focals[focals.length - 1]!, aperture: 0.25, mode: "hard" });
    const stale = await renderBytes({ focus: focals[0]!, aperture: 0.25, mode: "hard" });
    expect(sameBytes(newest, stale)).toBe(false);

    expect(shown.length).toBeGreaterThanOrEqual(1);
    expect(shown.length).toBeLessThanOrEqual(2);
    expect(sameBytes(shown[shown.length - 1]!, newest)).toBe(true);
    for (const bytes of shown.slice(0, -1)) {
      expect(sameBytes(bytes, stale)).toBe(false);
    }
  });

  it("prefetches a byte-faithful sweep and scrubs it without the network", async () => {
    const zipBytes = await client.sweep(sessionId, {
      start: 2,
      stop: 8,
      count: 4,
      focus: 0,
      aperture: 0.25,
      mode: "hard",
    });
    const entries = parseZip(zipBytes);
    const manifest = entries.find((e) => e.name === "sweep.json");
    expect(manifest).toBeDefined();
    const focals: number[] = JSON.parse(new TextDecoder().decode(manifest!.data)).focals;
    expect(focals).toEqual([2, 4, 6, 8]);

    const frames = entries
      .filter((e) => e.name.endsWith(".png"))
      .sort((a, b) => a.name.localeCompare(b.name));
    expect(frames.map((f) => f.name)).toEqual([
      "frame_000.png",
      "frame_001.png",
      "frame_002.png",
      "frame_003.png",
    ]);

    const direct = await renderBytes({ focus: 4, aperture: 0.25, mode: "hard" });
    expect(sameBytes(frames[1]!.data, direct)).toBe(true);

    const realFetch = globalThis.fetch;
    let calls = 0;
    globalThis.fetch = ((...args: Parameters<typeof fetch>) => {
      calls += 1;
      return realFetch(...args);
    }) as typeof fetch;
    try {
      const seen = new Set<string>();
      for (let step = 0; step <= 50; step++) {
        const frame = frames[sweepIndex(step / 50, frames.length)]!;
        seen.add(frame.name);
        expect(frame.data.length).toBeGreaterThan(0);
      }
      expect(seen.size).toBe(frames.length);
      expect(calls).toBe(0);
    } finally {
      globalThis.fetch = realFetch;
    }
  });

  it("serves the disparity overlay as a PNG", async () => {
    const blob = await client.disparityPng(sessionId);
    const head = new Uint8Array(await blob.arrayBuffer()).slice(0, 8);
    expect(Array.from(head)).toEqual(PNG_MAGIC);
  });
});
