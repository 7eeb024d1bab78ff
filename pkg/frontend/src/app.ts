/** Headless application controller: state + service + stale-response guard.
 *
 * The DOM layer only forwards input events here and executes the draw
 * commands emitted through the callbacks, so the full request/render cycle
 * runs (and is tested) without a browser.
 */

import { ServiceClient, ServiceError } from "./api.js";
import { LatestResponseGuard } from "./guard.js";
import { DrawCommand, renderPrediction, renderScene } from "./render.js";
import { renderSweep } from "./sweepChart.js";
import * as state from "./state.js";
import type { SceneRecord, SweepResponse, WhatIfResponse } from "./types.js";

export interface AppCallbacks {
  onScene?(commands: DrawCommand[], scene: SceneRecord): void;
  onOverlays?(baseline: DrawCommand[], counterfactual: DrawCommand[], response: WhatIfResponse, probeId: number): void;
  onSweep?(commands: DrawCommand[], response: SweepResponse, probeId: number): void;
  onError?(message: string, request: unknown): void;
}

export const BASELINE_COLOR = "#8a8a8a";
export const COUNTERFACTUAL_COLOR = "#d4452c";

export class WhatIfApp {
  view = state.initialState();
  scene: SceneRecord | null = null;
  readonly guard = new LatestResponseGuard();
  /** Probe ids that arrived but were dropped as stale, for inspection. */
  droppedProbes: number[] = [];

  constructor(
    private readonly client: ServiceClient,
    private readonly callbacks: AppCallbacks = {},
  ) {}

  async init(): Promise<void> {
    const scenes = await this.client.scenes();
    if (scenes.length === 0) throw new Error("service has no scenes loaded");
    const first = scenes[0];
    const t = first.last_timestep === null ? 0 : Math.max(first.first_timestep ?? 0, first.last_timestep - 15);
    await this.selectScene(first.scene_id, t);
  }

  async selectScene(sceneId: string, timestep: number): Promise<void> {
    const record = await this.client.scene(sceneId);
    this.scene = record;
    this.view = state.loadScene(this.view, record, timestep);
    this.renderSceneLayer();
    await this.refresh();
  }

  renderSceneLayer(): void {
    if (!this.scene) return;
    const cmds = renderScene(this.scene, {
      timestep: this.view.timestep,
      trailSteps: 12,
      selectedAgent: this.view.selectedAgent,
    });
    this.callbacks.onScene?.(cmds, this.scene);
  }

  selectAgent(agentId: string): void {
    this.view = { ...this.view, selectedAgent: agentId };
    this.renderSceneLayer();
  }

  async setSlider(agent: string, index: number, value: number): Promise<void> {
    this.view = state.setSlider(this.view, agent, index, value);
    await this.refresh();
  }

  async setLambda(agent: string, value: number): Promise<void> {
    this.view = state.setLambda(this.view, agent, value);
    await this.refresh();
  }

  async applyPreset(preset: state.Preset, presetClass = 0): Promise<void> {
    this.view = state.applyPreset(this.view, preset, presetClass);
    await this.refresh();
  }

  setOverlay(toggle: keyof state.OverlayToggles, value: boolean): void {
    this.view = { ...this.view, overlays: { ...this.view.overlays, [toggle]: value } };
  }

  currentSpec() {
    if (!this.scene) throw new Error("no scene loaded");
    return state.buildSpec(this.view, this.scene.class_names.length);
  }

  /** Fire a /whatif request; drop the response if a newer one rendered. */
  async refresh(): Promise<number> {
    if (!this.scene || !this.view.sceneId) return 0;
    const probeId = this.guard.issue();
    const request = {
      scene_id: this.view.sceneId,
      timestep: this.view.timestep,
      horizon_s: this.view.horizonS,
      spec: this.currentSpec(),
    };
    try {
      const response = await this.client.whatif(request);
      this.handleWhatIf(response, probeId);
    } catch (err) {
      if (err instanceof ServiceError) {
        this.callbacks.onError?.(`${err.status}: ${err.message}`, err.request);
      } else {
        this.callbacks.onError?.(String(err), request);
      }
    }
    return probeId;
  }

  /** Exposed for tests that need to simulate out-of-order arrivals. */
  handleWhatIf(response: WhatIfResponse, probeId: number): boolean {
    if (!this.guard.accept("whatif", probeId)) {
      this.droppedProbes.push(probeId);
      return false;
    }
    const opts = {
      showMeans: this.view.overlays.means,
      sigma1: this.view.overlays.sigma1,
      sigma2: this.view.overlays.sigma2,
      modeWeightAlpha: this.view.overlays.modeWeights,
    };
    const baseline = response.baseline.agents.flatMap((a) =>
      renderPrediction(a, { ...opts, color: BASELINE_COLOR }),
    );
    const counterfactual = response.counterfactual.agents.flatMap((a) =>
      renderPrediction(a, { ...opts, color: COUNTERFACTUAL_COLOR }),
    );
    this.callbacks.onOverlays?.(baseline, counterfactual, response, probeId);
    return true;
  }

  async runSweep(nLambdas = 11): Promise<number> {
    if (!this.scene || !this.view.selectedAgent) return 0;
    const k = this.scene.class_names.length;
    const probeId = this.guard.issue();
    const request = {
      scene_id: this.scene.scene_id,
      timestep: this.view.timestep,
      horizon_s: this.view.horizonS,
      agent_id: this.view.selectedAgent,
      target_probs: new Array(k).fill(1 / k),
      n_lambdas: nLambdas,
    };
    try {
      const response = await this.client.sweep(request);
      this.handleSweep(response, probeId);
    } catch (err) {
      if (err instanceof ServiceError) {
        this.callbacks.onError?.(`${err.status}: ${err.message}`, err.request);
      } else {
        this.callbacks.onError?.(String(err), request);
      }
    }
    return probeId;
  }

  handleSweep(response: SweepResponse, probeId: number): boolean {
    if (!this.guard.accept("sweep", probeId)) {
      this.droppedProbes.push(probeId);
      return false;
    }
    const cmds = renderSweep(response, { width: 360, height: 160, margin: 24 });
    this.callbacks.onSweep?.(cmds, response, probeId);
    return true;
  }
}
