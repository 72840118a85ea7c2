"""Command-line front door: generate, recommend, evaluate, serve.

Provider settings come from flags, an optional KEY=VALUE config file, and the
WEAVER_API_KEY environment variable. ``--mock`` swaps in the deterministic
offline providers so everything runs without a network. Exit codes: 0 on
success, 1 when providers are missing or misconfigured, 2 for usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .engine import Engine, Settings
from .errors import WeaverError
from .evaluation import (
    ClusteringConfig,
    GroundTruth,
    MatchRule,
    PrecisionSample,
    cluster_concepts,
    compute_precision,
    compute_recall,
    sample_edges_for_precision,
)
from .expansion import generate_kb
from .kb import KnowledgeBase
from .recommend import Recommender, RecommenderConfig


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw_line in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line is not KEY=VALUE: {raw_line!r}")
        key, value = line.split("=", 1)
        values[key.strip().lower()] = value.strip()
    return values


_INT_KEYS = {"parallelism", "n_per_relation", "initial_layers", "max_kb_size",
             "k", "k_growth"}
_FLOAT_KEYS = {"alpha"}
_LIST_KEYS = {"relations_layer1", "relations_layer2"}


def _settings_from(args: argparse.Namespace) -> Settings:
    settings = Settings()
    file_values: dict[str, str] = {}
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
    for key, raw in file_values.items():
        if not hasattr(settings, key):
            raise ValueError(f"unknown config key {key!r}")
        value: Any = raw
        if key in _INT_KEYS:
            value = int(raw)
        elif key in _FLOAT_KEYS:
            value = float(raw)
        elif key in _LIST_KEYS:
            value = [part.strip() for part in raw.split(",") if part.strip()]
        elif key == "mock":
            value = raw.lower() in ("1", "true", "yes")
        setattr(settings, key, value)
    for key in ("base_url", "gen_model", "embed_model", "scoring_model",
                "cache_dir", "parallelism", "n_per_relation", "initial_layers",
                "max_kb_size", "k", "alpha", "k_growth"):
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(settings, key, flag)
    for key in ("relations_layer1", "relations_layer2"):
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(settings, key,
                    [part.strip() for part in flag.split(",") if part.strip()])
    if getattr(args, "mock", False):
        settings.mock = True
    return settings


def _engine_from(args: argparse.Namespace) -> Engine:
    return Engine.from_settings(_settings_from(args))


def _print_json(doc: Any) -> None:
    print(json.dumps(doc, ensure_ascii=False, indent=2))


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mock", action="store_true",
                        help="use deterministic offline providers")
    parser.add_argument("--config", help="KEY=VALUE settings file")
    parser.add_argument("--base-url", dest="base_url")
    parser.add_argument("--gen-model", dest="gen_model")
    parser.add_argument("--embed-model", dest="embed_model")
    parser.add_argument("--scoring-model", dest="scoring_model")
    parser.add_argument("--cache-dir", dest="cache_dir")
    parser.add_argument("--parallelism", type=int, dest="parallelism")


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-per-relation", type=int, dest="n_per_relation")
    parser.add_argument("--relations-layer1", dest="relations_layer1",
                        help="comma-separated relation names")
    parser.add_argument("--relations-layer2", dest="relations_layer2",
                        help="comma-separated relation names")
    parser.add_argument("--initial-layers", type=int, dest="initial_layers")
    parser.add_argument("--max-kb-size", type=int, dest="max_kb_size")
    parser.add_argument("--k", type=int, dest="k")
    parser.add_argument("--alpha", type=float, dest="alpha")
    parser.add_argument("--k-growth", type=int, dest="k_growth")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weaver",
        description="Chart the concept space an ML model should be tested on.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a KB from a seed concept")
    p.add_argument("--seed", required=True)
    p.add_argument("--out", help="write the KB JSON here (default: stdout)")
    p.add_argument("--json", action="store_true",
                   help="print the KB JSON even when --out is given")
    _add_provider_flags(p)
    _add_engine_flags(p)

    p = sub.add_parser("recommend", help="rank a node's children")
    p.add_argument("--kb", required=True)
    p.add_argument("--node-id", default=None,
                   help="node whose children to rank (default: the root)")
    p.add_argument("--json", action="store_true")
    _add_provider_flags(p)
    _add_engine_flags(p)

    p = sub.add_parser("eval-recall", help="score KB coverage of a concept list")
    p.add_argument("--kb", required=True)
    p.add_argument("--truth", required=True, help="one concept per line")
    p.add_argument("--mode", choices=["automatic", "export-for-manual"],
                   default="automatic")
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--json", action="store_true")
    _add_provider_flags(p)

    p = sub.add_parser("sample-precision",
                       help="draw edges for manual validity labeling")
    p.add_argument("--kb")
    p.add_argument("--size", type=int, default=50)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", help="write the sample JSON here (default: stdout)")
    p.add_argument("--compute", metavar="LABELED_JSON",
                   help="score an already labeled sample instead of drawing one")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("cluster", help="group concept labels by embedding")
    p.add_argument("--labels", required=True, help="one label per line")
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--json", action="store_true")
    _add_provider_flags(p)

    p = sub.add_parser("export", help="print a session's export bundle")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--session-id", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", required=True)
    _add_provider_flags(p)
    _add_engine_flags(p)

    return parser


def _cmd_generate(args: argparse.Namespace) -> int:
    engine = _engine_from(args)
    kb = generate_kb(args.seed, config=engine.expansion, lm=engine.lm,
                     recommender=engine.recommender,
                     parallelism=engine.parallelism)
    blob = kb.to_json_bytes()
    if args.out:
        Path(args.out).write_bytes(blob)
        print(f"wrote {kb.size} nodes to {args.out}")
        if args.json:
            sys.stdout.write(blob.decode("utf-8"))
    else:
        sys.stdout.write(blob.decode("utf-8"))
    return 0


def _cmd_recommend(args: argparse.Namespace) -> int:
    engine = _engine_from(args)
    kb = KnowledgeBase.load(args.kb)
    node = kb.node(args.node_id) if args.node_id else kb.root
    recommender = engine.recommender
    nodes = recommender.recommend_nodes(kb, node)
    if args.json:
        _print_json([{"id": n.id, "label": n.concept.label,
                      "relation": n.relation} for n in nodes])
    else:
        for n in nodes:
            print(f"{n.id}\t{n.concept.label}")
    return 0


def _cmd_eval_recall(args: argparse.Namespace) -> int:
    engine = _engine_from(args)
    kb = KnowledgeBase.load(args.kb)
    gt = GroundTruth.load(args.truth)
    rule = MatchRule(top_n=args.top_n, sim_threshold=args.threshold,
                     mode=args.mode)
    report = compute_recall(kb, gt, rule, engine.embedder)
    if args.json:
        _print_json(report.to_dict())
    else:
        print(report.to_text())
    return 0


def _cmd_sample_precision(args: argparse.Namespace) -> int:
    if args.compute:
        sample = PrecisionSample.load(args.compute)
        precision = compute_precision(sample)
        if args.json:
            _print_json({"precision": precision,
                         "sample_size": sample.sample_size})
        else:
            print(f"precision {precision:.3f} over {sample.sample_size} edges")
        return 0
    if not args.kb:
        raise ValueError("--kb is required when drawing a sample")
    kb = KnowledgeBase.load(args.kb)
    sample = sample_edges_for_precision(kb, args.size, args.rng_seed)
    blob = json.dumps(sample.to_dict(), ensure_ascii=False, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(blob, encoding="utf-8")
        print(f"wrote {sample.sample_size} edges to {args.out}")
    else:
        sys.stdout.write(blob)
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    engine = _engine_from(args)
    labels = [line.strip() for line in
              Path(args.labels).read_text(encoding="utf-8").splitlines()
              if line.strip()]
    assignment = cluster_concepts(
        labels, ClusteringConfig(distance_threshold=args.threshold),
        engine.embedder)
    doc = {"cluster_count": assignment.cluster_count,
           "assignments": [{"label": label, "cluster": cid}
                           for label, cid in zip(assignment.labels,
                                                 assignment.cluster_ids)]}
    if args.json:
        _print_json(doc)
    else:
        print(f"{assignment.cluster_count} clusters")
        for row in doc["assignments"]:
            print(f"{row['cluster']}\t{row['label']}")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    from .service.app import export_bundle, export_csv
    from .service.store import SessionStore

    store = SessionStore(args.data_dir)
    session = store.get(args.session_id)
    if args.format == "csv":
        sys.stdout.write(export_csv(session))
    else:
        sys.stdout.write(json.dumps(export_bundle(session),
                                    ensure_ascii=False, indent=2) + "\n")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    engine = _engine_from(args)
    app = create_app(engine, args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "recommend": _cmd_recommend,
    "eval-recall": _cmd_eval_recall,
    "sample-precision": _cmd_sample_precision,
    "cluster": _cmd_cluster,
    "export": _cmd_export,
    "serve": _cmd_serve,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except WeaverError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
