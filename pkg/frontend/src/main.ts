/** Browser bootstrap: wires DOM controls to the app controller. */

import { ServiceClient } from "./api.js";
import { WhatIfApp } from "./app.js";
import { execute, Ctx2D } from "./canvas.js";
import type { DrawCommand } from "./render.js";
import { classColor } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function serviceUrl(): string {
  const param = new URLSearchParams(window.location.search).get("service");
  return param ?? "http://127.0.0.1:8000";
}

async function boot(): Promise<void> {
  const sceneCanvas = el<HTMLCanvasElement>("scene-canvas");
  const sweepCanvas = el<HTMLCanvasElement>("sweep-canvas");
  const sceneCtx = sceneCanvas.getContext("2d") as unknown as Ctx2D;
  const sweepCtx = sweepCanvas.getContext("2d") as unknown as Ctx2D;
  const errorBox = el<HTMLDivElement>("error-box");
  const agentPanel = el<HTMLDivElement>("agent-panel");
  const status = el<HTMLSpanElement>("status");

  let sceneCommands: DrawCommand[] = [];
  let baselineCommands: DrawCommand[] = [];
  let counterfactualCommands: DrawCommand[] = [];

  const client = new ServiceClient(serviceUrl());
  const app = new WhatIfApp(client, {
    onScene(cmds) {
      sceneCommands = cmds;
      repaint();
    },
    onOverlays(baseline, counterfactual, response, probeId) {
      baselineCommands = baseline;
      counterfactualCommands = counterfactual;
      status.textContent = `probe ${probeId} rendered (${response.horizon_steps} steps)`;
      repaint();
      rebuildPanel();
    },
    onSweep(cmds) {
      sweepCtx.clearRect(0, 0, sweepCanvas.width, sweepCanvas.height);
      execute(sweepCtx, cmds, app.view.camera, sweepCanvas.width, sweepCanvas.height, false);
    },
    onError(message, request) {
      errorBox.textContent = `${message}\nrequest: ${JSON.stringify(request)}`;
    },
  });

  function repaint(): void {
    sceneCtx.clearRect(0, 0, sceneCanvas.width, sceneCanvas.height);
    const all = app.view.overlays.diff
      ? [...sceneCommands, ...baselineCommands, ...counterfactualCommands]
      : [...sceneCommands, ...counterfactualCommands];
    execute(sceneCtx, all, app.view.camera, sceneCanvas.width, sceneCanvas.height);
  }

  function rebuildPanel(): void {
    if (!app.scene) return;
    agentPanel.innerHTML = "";
    const k = app.scene.class_names.length;
    for (const agent of app.scene.agents) {
      const probs = app.view.sliders[agent.agent_id];
      if (!probs) continue;
      const row = document.createElement("div");
      row.className = "agent-row";
      const label = document.createElement("b");
      label.textContent = agent.agent_id;
      label.style.cursor = "pointer";
      label.onclick = () => app.selectAgent(agent.agent_id);
      row.appendChild(label);
      for (let i = 0; i < k; i++) {
        const slider = document.createElement("input");
        slider.type = "range";
        slider.min = "0";
        slider.max = "1";
        slider.step = "0.01";
        slider.value = String(probs[i]);
        slider.style.accentColor = classColor(i);
        slider.title = `${app.scene.class_names[i]}: ${probs[i].toFixed(2)}`;
        slider.oninput = () => void app.setSlider(agent.agent_id, i, Number(slider.value));
        row.appendChild(slider);
      }
      if (agent.agent_id === app.view.selectedAgent) {
        const lam = document.createElement("input");
        lam.type = "range";
        lam.min = "0";
        lam.max = "1";
        lam.step = "0.1";
        lam.value = String(app.view.lambda[agent.agent_id] ?? 0);
        lam.title = "interpolate toward uniform";
        lam.oninput = () => void app.setLambda(agent.agent_id, Number(lam.value));
        row.appendChild(lam);
      }
      agentPanel.appendChild(row);
    }
  }

  el<HTMLButtonElement>("preset-keep").onclick = () => void app.applyPreset("keep");
  el<HTMLButtonElement>("preset-uniform").onclick = () => void app.applyPreset("uniform");
  el<HTMLButtonElement>("preset-onehot").onclick = () => {
    const cls = Number(el<HTMLSelectElement>("preset-class").value);
    void app.applyPreset("one_hot", cls);
  };
  el<HTMLButtonElement>("run-sweep").onclick = () => void app.runSweep();
  el<HTMLInputElement>("toggle-diff").onchange = (e) => {
    app.setOverlay("diff", (e.target as HTMLInputElement).checked);
    repaint();
  };

  const health = await client.health();
  status.textContent = `checkpoint ${health.checkpoint_id}`;
  await app.init();
  if (app.scene) {
    const sel = el<HTMLSelectElement>("preset-class");
    sel.innerHTML = "";
    app.scene.class_names.forEach((name, i) => {
      const opt = document.createElement("option");
      opt.value = String(i);
      opt.textContent = name;
      sel.appendChild(opt);
    });
  }
  rebuildPanel();
}

boot().catch((err) => {
  const box = document.getElementById("error-box");
  if (box) box.textContent = String(err);
});
