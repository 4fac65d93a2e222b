"""Command-line interface.

Subcommands: generate, embed, train-ae, run-al, run-plan, serve.  All
artifacts are plain files (JSONL trajectories, JSON manifests, embedding
records, journals, curve tables) so every step can be scripted and
reproduced.  Failures print a machine-readable JSON error record to stderr
and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .active_learning import SessionConfig, run_session
from .autoencoder import (
    RecurrentAutoencoder,
    TrainConfig,
    embed_pool,
    save_checkpoint,
    train,
)
from .dtw import pairwise_distances, znormalize_pool
from .embedding import save_embedding, save_loss_trace, load_embedding
from .errors import ArtifactError, TrajalError
from .experiments import ExperimentPlan, build_embedding, run_plan
from .journal import Journal
from .trajectories import (
    DESK_COUNTS,
    PAPER_COUNTS,
    DatasetSpec,
    Trajectory,
    TrajectoryStore,
    generate_dataset,
    load_manifest,
    load_trajectories,
    save_manifest,
    save_trajectories,
)
from .tsne import EmbeddingConfig, embed as tsne_embed


def _load_dataset(manifest_path: str):
    path = Path(manifest_path)
    if not path.exists():
        raise ArtifactError(f"manifest not found: {path}")
    spec, traj_file, partition = load_manifest(path)
    traj_path = (path.parent / traj_file) if not Path(traj_file).is_absolute() else Path(traj_file)
    if not traj_path.exists():
        raise ArtifactError(f"trajectory file not found: {traj_path}")
    store = TrajectoryStore(load_trajectories(traj_path))
    return spec, store, partition


def cmd_generate(args) -> int:
    if args.counts:
        counts = tuple(int(c) for c in args.counts.split(","))
        if len(counts) != 3:
            raise TrajalError("--counts needs three comma-separated integers")
    else:
        table = PAPER_COUNTS if args.paper_scale else DESK_COUNTS
        key = int(round(args.alpha))
        if key not in table:
            raise TrajalError(f"no preset counts for alpha={args.alpha}; pass --counts")
        counts = table[key]
    spec = DatasetSpec(alpha=args.alpha, counts=counts, seed=args.seed)
    store, partition = generate_dataset(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trajectories = [store.get(i) for i in store.ids()]
    save_trajectories(trajectories, out / "trajectories.jsonl")
    save_manifest(spec, partition, "trajectories.jsonl", out / "manifest.json")
    print(json.dumps({"out": str(out), "counts": list(counts), "alpha": args.alpha}))
    return 0


def cmd_embed(args) -> int:
    spec, store, partition = _load_dataset(args.manifest)
    pool = [store.get(i) for i in store.ids()]
    if args.method == "mtsne":
        cache = Path(args.cache) if args.cache else None
        D = pairwise_distances(pool, parallelism=args.parallelism, cache_path=cache)
        config = EmbeddingConfig(
            perplexity=args.perplexity, iterations=args.iterations, seed=args.seed
        )
        points, trace = tsne_embed(D, config)
    else:
        plan = ExperimentPlan(
            ae_hidden=args.hidden,
            ae_latent=args.latent,
            ae_epochs=args.epochs,
            parallelism=args.parallelism,
        )
        points = build_embedding(args.method, store, partition, args.seed, plan)
        trace = []
    save_embedding(points, args.out)
    if args.trace and trace:
        save_loss_trace(trace, args.trace)
    print(json.dumps({"out": args.out, "points": len(points), "method": args.method}))
    return 0


def cmd_train_ae(args) -> int:
    spec, store, partition = _load_dataset(args.manifest)
    pool = [store.get(i) for i in store.ids()]
    arrays = znormalize_pool([t.samples for t in pool])
    normed = [Trajectory(t.id, a, t.label, t.variant) for t, a in zip(pool, arrays)]
    model = RecurrentAutoencoder(
        channels=normed[0].channels,
        hidden=args.hidden,
        latent=args.latent,
        variational=args.arch == "vrae",
        seed=args.seed,
    )
    model, trace = train(model, normed, TrainConfig(epochs=args.epochs, seed=args.seed))
    save_checkpoint(model, args.checkpoint)
    if args.embedding_out:
        save_embedding(embed_pool(model, normed), args.embedding_out)
    if args.trace:
        save_loss_trace(trace, args.trace)
    print(json.dumps({"checkpoint": args.checkpoint, "final_loss": trace[-1] if trace else None}))
    return 0


def cmd_run_al(args) -> int:
    spec, store, partition = _load_dataset(args.manifest)
    points = load_embedding(args.embedding)
    label_map = {i: store.label_of(i) for i in store.ids()}
    config = SessionConfig(
        strategy=args.strategy,
        classifier=args.classifier,
        budget=args.budget,
        seed=args.seed,
        mode=args.mode,
        svm_C=args.svm_C,
        svm_gamma=args.svm_gamma,
        nn_epochs=args.nn_epochs,
    )
    journal = Journal(args.journal) if args.journal else None
    session = run_session(
        config, partition, points, label_map, journal=journal, session_id=args.session_id
    )
    if args.metrics_out:
        lines = [f"{k} {v:.9g}" for k, v in enumerate(session.metric_history)]
        Path(args.metrics_out).write_text("\n".join(lines) + "\n")
    print(
        json.dumps(
            {
                "session_id": session.session_id,
                "queries": session.queries_done,
                "final_metric": session.metric_history[-1],
            }
        )
    )
    return 0


def cmd_run_plan(args) -> int:
    if args.plan:
        plan_dict = json.loads(Path(args.plan).read_text())
        plan = ExperimentPlan(**plan_dict)
    else:
        plan = ExperimentPlan(
            embeddings=tuple(args.embeddings.split(",")),
            classifiers=tuple(args.classifiers.split(",")),
            strategies=tuple(args.strategies.split(",")),
            alphas=tuple(float(a) for a in args.alphas.split(",")),
            repetitions=args.repetitions,
            budget=args.budget,
            base_seed=args.seed,
            mode=args.mode,
        )
    summaries, failures = run_plan(plan, out_dir=args.out, workers=args.workers)
    print(json.dumps({"cells": len(summaries), "failures": len(failures), "out": args.out}))
    return 0 if not failures else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(data_dir=args.data_dir, journal_dir=args.journal_dir, ui_dist=args.ui_dist)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajal",
        description="Trajectory embedding and active-learning annotation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"trajal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic dataset")
    g.add_argument("--alpha", type=float, default=10.0, help="cut-in percentage")
    g.add_argument("--counts", help="annotated,unlabeled,test (overrides presets)")
    g.add_argument("--paper-scale", action="store_true", help="use the full-size split table")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("embed", help="embed a dataset into a latent space")
    e.add_argument("--manifest", required=True)
    e.add_argument("--method", choices=("mtsne", "rae", "vrae"), default="mtsne")
    e.add_argument("--out", required=True, help="embedding output file")
    e.add_argument("--trace", help="loss trace output file")
    e.add_argument("--cache", help="DTW distance-matrix cache file")
    e.add_argument("--perplexity", type=float, default=37.5)
    e.add_argument("--iterations", type=int, default=500)
    e.add_argument("--epochs", type=int, default=150, help="autoencoder epochs")
    e.add_argument("--hidden", type=int, default=16)
    e.add_argument("--latent", type=int, default=16)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--parallelism", type=int, default=4)
    e.set_defaults(func=cmd_embed)

    t = sub.add_parser("train-ae", help="train a recurrent autoencoder")
    t.add_argument("--manifest", required=True)
    t.add_argument("--arch", choices=("rae", "vrae"), default="rae")
    t.add_argument("--epochs", type=int, default=150)
    t.add_argument("--hidden", type=int, default=16)
    t.add_argument("--latent", type=int, default=16)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--checkpoint", required=True)
    t.add_argument("--embedding-out")
    t.add_argument("--trace")
    t.set_defaults(func=cmd_train_ae)

    r = sub.add_parser("run-al", help="run a simulated-oracle active-learning session")
    r.add_argument("--manifest", required=True)
    r.add_argument("--embedding", required=True)
    r.add_argument("--strategy", choices=("random", "margin", "entropy"), required=True)
    r.add_argument("--classifier", choices=("svm", "nn"), default="svm")
    r.add_argument("--budget", type=int, default=60)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--mode", choices=("classification", "discovery"), default="classification")
    r.add_argument("--svm-C", dest="svm_C", type=float, default=10.0)
    r.add_argument("--svm-gamma", dest="svm_gamma", type=float, default=0.05)
    r.add_argument("--nn-epochs", type=int, default=150)
    r.add_argument("--journal", help="journal output file")
    r.add_argument("--metrics-out", help="metric history output file")
    r.add_argument("--session-id")
    r.set_defaults(func=cmd_run_al)

    p = sub.add_parser("run-plan", help="run an experiment grid")
    p.add_argument("--plan", help="plan JSON file")
    p.add_argument("--embeddings", default="mtsne")
    p.add_argument("--classifiers", default="svm")
    p.add_argument("--strategies", default="random,margin,entropy")
    p.add_argument("--alphas", default="10")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--budget", type=int, default=60)
    p.add_argument("--seed", type=int, default=2)
    p.add_argument("--mode", choices=("classification", "discovery"), default="classification")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory for curves")
    p.set_defaults(func=cmd_run_plan)

    s = sub.add_parser("serve", help="start the annotation service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--data-dir", required=True, help="directory with dataset/embedding artifacts")
    s.add_argument("--journal-dir", required=True, help="directory for session journals")
    s.add_argument("--ui-dist", help="built UI bundle to serve at /ui")
    s.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrajalError as exc:
        sys.stderr.write(json.dumps(exc.record()) + "\n")
        return 1
    except (ValueError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": "invalid-input", "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
