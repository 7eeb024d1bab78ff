/** Typed client for the prediction service. All numbers come from the
 * service; the UI never computes predictions locally. */

import type {
  CounterfactualSpec,
  PredictResponse,
  SceneRecord,
  SceneSummary,
  SweepResponse,
  WhatIfResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    message: string,
    public readonly status: number,
    public readonly request: unknown,
  ) {
    super(message);
  }
}

export interface FetchLike {
  (url: string, init?: { method?: string; headers?: Record<string, string>; body?: string }): Promise<{
    ok: boolean;
    status: number;
    json(): Promise<unknown>;
  }>;
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!res.ok) {
      const body = (await res.json().catch(() => ({}))) as { detail?: string };
      throw new ServiceError(body.detail ?? `GET ${path} failed`, res.status, { path });
    }
    return (await res.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      const detail = (await res.json().catch(() => ({}))) as { detail?: string };
      throw new ServiceError(detail.detail ?? `POST ${path} failed`, res.status, body);
    }
    return (await res.json()) as T;
  }

  health(): Promise<{ status: string; checkpoint_id: string }> {
    return this.get("/health");
  }

  scenes(): Promise<SceneSummary[]> {
    return this.get("/scenes");
  }

  scene(sceneId: string): Promise<SceneRecord> {
    return this.get(`/scenes/${encodeURIComponent(sceneId)}`);
  }

  predict(req: {
    scene_id: string;
    timestep: number;
    horizon_s: number;
    agent_ids?: string[];
    seed?: number;
  }): Promise<PredictResponse> {
    return this.post("/predict", req);
  }

  whatif(req: {
    scene_id: string;
    timestep: number;
    horizon_s: number;
    spec: CounterfactualSpec;
    seed?: number;
  }): Promise<WhatIfResponse> {
    return this.post("/whatif", req);
  }

  sweep(req: {
    scene_id: string;
    timestep: number;
    horizon_s: number;
    agent_id: string;
    target_probs: number[];
    n_lambdas: number;
    seed?: number;
  }): Promise<SweepResponse> {
    return this.post("/whatif/sweep", req);
  }
}
