/** View state and reducers for the what-if exploration panel. */

import { normalize, oneHot, setAndRenormalize, uniform } from "./simplex.js";
import type { AgentOverride, CounterfactualSpec, SceneRecord } from "./types.js";

export type Preset = "keep" | "uniform" | "one_hot";

export interface Camera {
  x: number; // world meters at canvas center
  y: number;
  scale: number; // pixels per meter
}

export interface OverlayToggles {
  means: boolean;
  sigma1: boolean;
  sigma2: boolean;
  modeWeights: boolean;
  diff: boolean; // superimpose baseline + counterfactual instead of side-by-side
}

export interface ViewState {
  sceneId: string | null;
  timestep: number;
  horizonS: number;
  camera: Camera;
  selectedAgent: string | null;
  preset: Preset;
  presetClass: number;
  sliders: Record<string, number[]>; // renormalized simplex per agent
  sliderTouched: Record<string, boolean>;
  lambda: Record<string, number>;
  overlays: OverlayToggles;
}

export function initialState(): ViewState {
  return {
    sceneId: null,
    timestep: 0,
    horizonS: 1.2,
    camera: { x: 0, y: 0, scale: 8 },
    selectedAgent: null,
    preset: "keep",
    presetClass: 0,
    sliders: {},
    sliderTouched: {},
    lambda: {},
    overlays: { means: true, sigma1: true, sigma2: true, modeWeights: true, diff: false },
  };
}

export function loadScene(state: ViewState, scene: SceneRecord, timestep: number): ViewState {
  const sliders: Record<string, number[]> = {};
  const lambda: Record<string, number> = {};
  for (const agent of scene.agents) {
    const step = agent.steps.find((s) => s.t === timestep) ?? agent.steps[agent.steps.length - 1];
    sliders[agent.agent_id] = normalize([...step.probs]);
    lambda[agent.agent_id] = 0;
  }
  return {
    ...state,
    sceneId: scene.scene_id,
    timestep,
    sliders,
    sliderTouched: {},
    lambda,
    selectedAgent: scene.agents[0]?.agent_id ?? null,
  };
}

export function setSlider(state: ViewState, agent: string, index: number, value: number): ViewState {
  const current = state.sliders[agent];
  if (!current) throw new Error(`unknown agent ${agent}`);
  return {
    ...state,
    sliders: { ...state.sliders, [agent]: setAndRenormalize(current, index, value) },
    sliderTouched: { ...state.sliderTouched, [agent]: true },
  };
}

export function setLambda(state: ViewState, agent: string, value: number): ViewState {
  return { ...state, lambda: { ...state.lambda, [agent]: Math.min(1, Math.max(0, value)) } };
}

export function applyPreset(state: ViewState, preset: Preset, presetClass = 0): ViewState {
  return { ...state, preset, presetClass };
}

/** Build the /whatif spec from the current panel state.
 *
 * Preset buttons act on every agent; a touched slider panel overrides its
 * agent; the lambda slider interpolates the selected agent toward uniform.
 */
export function buildSpec(state: ViewState, k: number): CounterfactualSpec {
  const overrides: Record<string, AgentOverride> = {};
  let defaultOverride: AgentOverride | undefined;
  if (state.preset === "uniform") defaultOverride = { mode: "uniform" };
  else if (state.preset === "one_hot") defaultOverride = { mode: "one_hot", class_index: state.presetClass };
  for (const [agent, touched] of Object.entries(state.sliderTouched)) {
    if (touched) overrides[agent] = { mode: "custom", probs: state.sliders[agent] };
  }
  const selected = state.selectedAgent;
  if (selected && (state.lambda[selected] ?? 0) > 0) {
    overrides[selected] = {
      mode: "interpolate",
      target: uniform(k),
      lambda: state.lambda[selected],
    };
  }
  const spec: CounterfactualSpec = { overrides };
  if (defaultOverride) spec.default = defaultOverride;
  return spec;
}

export function presetVector(preset: Preset, k: number, presetClass = 0): number[] {
  if (preset === "uniform") return uniform(k);
  if (preset === "one_hot") return oneHot(k, presetClass);
  throw new Error("keep preset has no vector");
}
