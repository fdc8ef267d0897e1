/** Typed client over the rendering service's HTTP interface. */

export interface SessionInfo {
  id: string;
  width: number;
  height: number;
  channels: number;
  has_disparity: boolean;
}

export interface RenderParams {
  focus: number;
  aperture: number;
  mode: "hard" | "smooth";
  kernel_cap?: number | null;
}

export interface SweepParams extends RenderParams {
  start: number;
  stop: number;
  count: number;
}

export interface TrackedRecord {
  index: number;
  box: [number, number, number, number];
  focal_plane: number;
  psr: number | null;
  lost: boolean;
}

async function expectOk(res: Response): Promise<Response> {
  if (!res.ok) {
    let detail = `${res.status}`;
    try {
      const body = (await res.json()) as { detail?: unknown };
      if (body.detail !== undefined) detail = `${res.status}: ${JSON.stringify(body.detail)}`;
    } catch {
      // non-JSON error body; status alone is the message
    }
    throw new Error(`request failed (${detail})`);
  }
  return res;
}

export class StudioClient {
  constructor(readonly base: string = "") {}

  async createSession(left: Blob, right: Blob): Promise<string> {
    const form = new FormData();
    form.append("left", left, "left.png");
    form.append("right", right, "right.png");
    const res = await expectOk(await fetch(`${this.base}/sessions`, { method: "POST", body: form }));
    const body = (await res.json()) as { id: string };
    return body.id;
  }

  async sessionInfo(id: string): Promise<SessionInfo> {
    const res = await expectOk(await fetch(`${this.base}/sessions/${id}`));
    return (await res.json()) as SessionInfo;
  }

  async probe(id: string, x: number, y: number): Promise<number> {
    const res = await expectOk(
      await fetch(`${this.base}/sessions/${id}/probe`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ x, y }),
      }),
    );
    const body = (await res.json()) as { disparity: number };
    return body.disparity;
  }

  async refocus(id: string, params: RenderParams): Promise<Blob> {
    const res = await expectOk(
      await fetch(`${this.base}/sessions/${id}/refocus`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(params),
      }),
    );
    return res.blob();
  }

  async sweep(id: string, params: SweepParams): Promise<Uint8Array> {
    const res = await expectOk(
      await fetch(`${this.base}/sessions/${id}/sweep`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(params),
      }),
    );
    return new Uint8Array(await res.arrayBuffer());
  }

  async disparityPng(id: string): Promise<Blob> {
    const res = await expectOk(await fetch(`${this.base}/sessions/${id}/disparity.png`));
    return res.blob();
  }

  async track(body: {
    frames: string;
    disparities?: string;
    rights?: string;
    box: [number, number, number, number];
    aperture: number;
    beta?: number;
    kernel_cap?: number | null;
  }): Promise<TrackedRecord[]> {
    const res = await expectOk(
      await fetch(`${this.base}/videos/track`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
    const payload = (await res.json()) as { frames: TrackedRecord[] };
    return payload.frames;
  }
}
