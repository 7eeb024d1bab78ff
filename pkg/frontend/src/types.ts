/** Wire types mirroring the prediction service's JSON payloads. */

export type Vec2 = [number, number];
export type Cov2 = [[number, number], [number, number]];

export interface AgentBlock {
  agent_id: string;
  mode_weights: number[];
  means: Vec2[][]; // [mode][step]
  covariances: Cov2[][]; // [mode][step]
  most_likely: Vec2[];
  mixture_entropy: number;
}

export interface PredictionPayload {
  agents: AgentBlock[];
}

export interface PredictResponse extends PredictionPayload {
  scene_id: string;
  timestep: number;
  horizon_steps: number;
  dt: number;
}

export interface WhatIfResponse {
  scene_id: string;
  timestep: number;
  horizon_steps: number;
  baseline: PredictionPayload;
  counterfactual: PredictionPayload;
}

export interface SweepResponse {
  lambdas: number[];
  divergence: number[];
  uncertainty: number[];
  agent_id: string;
}

export interface SceneStep {
  t: number;
  px: number;
  py: number;
  probs: number[];
}

export interface SceneAgent {
  agent_id: string;
  true_class?: number;
  steps: SceneStep[];
}

export interface SceneRecord {
  scene_id: string;
  dt: number;
  class_names: string[];
  agents: SceneAgent[];
}

export interface SceneSummary {
  scene_id: string;
  n_agents: number;
  first_timestep: number | null;
  last_timestep: number | null;
  class_names: string[];
  dt: number;
}

export type OverrideMode = "keep" | "uniform" | "one_hot" | "custom" | "interpolate";

export interface AgentOverride {
  mode: OverrideMode;
  class_index?: number;
  probs?: number[];
  target?: number[];
  lambda?: number;
}

export interface CounterfactualSpec {
  overrides?: Record<string, AgentOverride>;
  default?: AgentOverride;
}
