"""Command-line entry point.

Subcommands: generate, analyze, train, eval, predict, whatif, serve,
count-params. Exit codes: 0 success, 1 domain error (one-line diagnostic on
stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .counterfactual import CounterfactualSpec, apply_counterfactual
from .data import (
    GeneratorConfig,
    PerceptionNoiseModel,
    confusion_and_topk,
    dataset_statistics,
    generate_synthetic,
    load_scenes,
    split_scenes,
    write_scenes,
)
from .data.splits import select
from .errors import HaicuError, InvalidParameterError
from .metrics import evaluate
from .model import (
    ModelConfig,
    build_model,
    count_flops,
    count_parameters,
    load_checkpoint,
    save_checkpoint,
    scene_batch,
)
from .model.distribution import predict
from .training import BetaSchedule, TrainingConfig, train


def _load_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise InvalidParameterError(f"file not found: {p}")
    with p.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(path, payload) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _seed_of(args, default=0):
    return default if args.seed is None else args.seed


def cmd_generate(args) -> int:
    spec = _load_json(args.spec)
    if "noise" not in spec:
        raise InvalidParameterError("generator spec must contain a 'noise' section")
    config = GeneratorConfig.from_dict(spec)
    noise = PerceptionNoiseModel.from_dict(spec["noise"])
    scenes = generate_synthetic(config, noise, seed=_seed_of(args))
    write_scenes(scenes, args.out)
    print(f"wrote {len(scenes)} scenes to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    scenes = load_scenes(args.input)
    report = dataset_statistics(scenes).to_dict()
    tracks = [t for s in scenes for t in s.tracks]
    if all(t.true_class is not None for t in tracks):
        confusion, topk = confusion_and_topk(tracks)
        report["confusion_matrix"] = confusion.tolist()
        report["top_k_accuracy"] = {str(k): v for k, v in topk.items()}
    _write_json(args.report, report)
    print(f"analyzed {len(scenes)} scenes -> {args.report}")
    return 0


def _training_from_config(cfg: dict, seed_override=None) -> TrainingConfig:
    t = dict(cfg.get("training", {}))
    beta = BetaSchedule(**t.pop("beta")) if "beta" in t else BetaSchedule()
    if seed_override is not None:
        t["seed"] = seed_override
    return TrainingConfig(beta=beta, **t)


def cmd_train(args) -> int:
    cfg = _load_json(args.config)
    scenes = load_scenes(args.data)
    if "model" not in cfg:
        raise InvalidParameterError("training config must contain a 'model' section")
    model_cfg = ModelConfig.from_dict(
        {**cfg["model"], "num_classes": len(scenes[0].class_names)}
    )
    train_cfg = _training_from_config(cfg, seed_override=args.seed)
    split = split_scenes(scenes, seed=cfg.get("split_seed", train_cfg.seed))
    model = build_model(model_cfg, seed=train_cfg.seed)

    curve_path = Path(args.out).with_suffix(".curve.jsonl")
    curve_path.parent.mkdir(parents=True, exist_ok=True)
    with curve_path.open("w", encoding="utf-8", newline="\n") as fh:

        def log_fn(entry):
            fh.write(json.dumps(entry) + "\n")
            fh.flush()
            if args.verbose:
                print(
                    f"epoch {entry['epoch']}: loss {entry['train_loss']:.4f} "
                    f"val_anll {entry['val_anll']:.4f} val_ade {entry['val_ade']:.4f}"
                )

        result = train(model, scenes, split, train_cfg, log_fn=log_fn)
    save_checkpoint(
        args.out,
        result.model,
        metadata={
            "seed": train_cfg.seed,
            "dataset": str(args.data),
            "best_epoch": result.best_epoch,
            "best_val_anll": result.best_val_anll,
            "split": {"train": split.train, "val": split.val, "test": split.test, "seed": split.seed},
        },
    )
    print(f"checkpoint -> {args.out} (best epoch {result.best_epoch}, val ANLL {result.best_val_anll:.4f})")
    return 0


def cmd_eval(args) -> int:
    scenes = load_scenes(args.data)
    models = {}
    for path in args.ckpt:
        model, meta = load_checkpoint(path)
        models[Path(path).stem] = model
    horizons = [float(h) for h in args.horizons.split(",")]
    report = evaluate(models, scenes, horizons_s=horizons, seed=_seed_of(args))
    _write_json(args.report, report.to_dict())
    for name in models:
        for h in horizons:
            st = report.stat(name, "anll", h)
            print(f"{name} ANLL@{h}s = {st.mean:.4f} +- {st.se:.4f} (n={st.n})")
    return 0


def cmd_predict(args) -> int:
    model, meta = load_checkpoint(args.ckpt)
    scenes = load_scenes(args.data)
    scene = _pick_scene(scenes, args.scene_id)
    timestep = args.timestep if args.timestep is not None else int(scene.timesteps()[-1])
    steps = int(round(args.horizon_s / scene.dt))
    batch = scene_batch(scene, timestep, model.config)
    dists = predict(model, batch, horizon=steps)
    payload = {
        "scene_id": scene.scene_id,
        "timestep": timestep,
        "horizon_steps": steps,
        "agents": [
            {
                "agent_id": aid,
                "mode_weights": d.weights.tolist(),
                "means": d.means.tolist(),
                "covariances": d.covs.tolist(),
                "most_likely": d.most_likely_trajectory().tolist(),
            }
            for aid, d in zip(batch.agent_ids, dists)
        ],
    }
    _write_json(args.out, payload)
    print(f"predictions for {len(dists)} agents -> {args.out}")
    return 0


def _pick_scene(scenes, scene_id):
    if scene_id is None:
        return scenes[0]
    for s in scenes:
        if s.scene_id == scene_id:
            return s
    raise InvalidParameterError(f"scene {scene_id!r} not found")


def cmd_whatif(args) -> int:
    model, meta = load_checkpoint(args.ckpt)
    scenes = load_scenes(args.scene)
    scene = _pick_scene(scenes, args.scene_id)
    timestep = args.timestep if args.timestep is not None else int(scene.timesteps()[-1])
    steps = int(round(args.horizon_s / scene.dt))
    spec = CounterfactualSpec.from_dict(_load_json(args.spec))
    batch = scene_batch(scene, timestep, model.config)
    overridden = apply_counterfactual(batch, spec)

    def block(b):
        return [
            {
                "agent_id": aid,
                "mode_weights": d.weights.tolist(),
                "means": d.means.tolist(),
                "covariances": d.covs.tolist(),
                "most_likely": d.most_likely_trajectory().tolist(),
                "mixture_entropy": d.entropy_estimate(seed=_seed_of(args)),
            }
            for aid, d in zip(b.agent_ids, predict(model, b, horizon=steps))
        ]

    payload = {
        "scene_id": scene.scene_id,
        "timestep": timestep,
        "horizon_steps": steps,
        "baseline": block(batch),
        "counterfactual": block(overridden),
    }
    _write_json(args.out, payload)
    print(f"what-if comparison -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model, meta = load_checkpoint(args.ckpt)
    scenes = load_scenes(args.data)
    app = create_app(model, scenes, checkpoint_id=meta.get("checkpoint_id", "unknown"))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_count_params(args) -> int:
    cfg = ModelConfig(
        num_classes=args.classes,
        variant=args.variant,
        history_steps=args.history,
        prediction_steps=args.horizon,
        node_hidden=args.node_hidden,
        edge_hidden=args.edge_hidden,
        future_hidden=args.future_hidden,
        decoder_hidden=args.decoder_hidden,
        latent_modes=args.latent_modes,
    )
    model = build_model(cfg, seed=0)
    n_params = count_parameters(model)
    print(f"parameters: {n_params}")
    if args.nodes is not None:
        flops = count_flops(cfg, n_nodes=args.nodes, n_edges=args.edges)
        print(f"flops({args.nodes} nodes, {args.edges} edges): {flops:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haicu", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=None,
        help="random seed (default: 0, or the training config's seed for train)",
    )
    common.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("generate", help="generate a synthetic scene file")
    p.add_argument("--spec", required=True, help="generator spec JSON")
    p.add_argument("--out", required=True, help="output scene file (JSONL)")
    p.set_defaults(fn=cmd_generate)

    p = add_parser("analyze", help="dataset uncertainty statistics")
    p.add_argument("--input", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_analyze)

    p = add_parser("train", help="train a model")
    p.add_argument("--config", required=True, help="JSON with 'model' and 'training' sections")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.set_defaults(fn=cmd_train)

    p = add_parser("eval", help="evaluate checkpoints on a scene file")
    p.add_argument("--ckpt", action="append", required=True, help="repeatable")
    p.add_argument("--data", required=True)
    p.add_argument("--horizons", default="1,2,3", help="comma-separated seconds")
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_eval)

    p = add_parser("predict", help="predict all agents in a scene")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scene-id", default=None)
    p.add_argument("--timestep", type=int, default=None)
    p.add_argument("--horizon-s", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_predict)

    p = add_parser("whatif", help="counterfactual prediction for a scene")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--scene", required=True, help="scene file (JSONL)")
    p.add_argument("--scene-id", default=None)
    p.add_argument("--timestep", type=int, default=None)
    p.add_argument("--horizon-s", type=float, default=2.0)
    p.add_argument("--spec", required=True, help="counterfactual spec JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_whatif)

    p = add_parser("serve", help="run the HTTP service")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    p = add_parser("count-params", help="parameter and FLOP accounting")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--variant", default="full_probs")
    p.add_argument("--history", type=int, default=20)
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--node-hidden", type=int, default=32)
    p.add_argument("--edge-hidden", type=int, default=8)
    p.add_argument("--future-hidden", type=int, default=32)
    p.add_argument("--decoder-hidden", type=int, default=128)
    p.add_argument("--latent-modes", type=int, default=25)
    p.add_argument("--nodes", type=int, default=None, help="scene size for FLOP estimate")
    p.add_argument("--edges", type=int, default=0)
    p.set_defaults(fn=cmd_count_params)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except HaicuError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
