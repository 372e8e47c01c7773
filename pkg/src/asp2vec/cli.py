"""Command line: walk, train, het-train, eval, diag, export."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import diagnostics, evaluation, hetnet, trainer
from .config import ConfigError, TrainerConfig
from .graph import Graph, GraphFormatError, load_edge_list, load_node_types
from .store import EmbeddingStore, init_random, read_word2vec, write_word2vec
from .walks import WalkCorpus, generate_walks, metapath_walks

log = logging.getLogger("asp2vec")

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("trainer config (overrides --config)")
    for f in dataclasses.fields(TrainerConfig):
        name = "lambda" if f.name == "lam" else f.name
        flags = [f"--{name}"] + ([f"--{name.replace('_', '-')}"] if "_" in name else [])
        kind = f.type if isinstance(f.type, str) else f.type.__name__
        if kind == "bool":
            g.add_argument(*flags, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        elif kind.startswith("int"):
            g.add_argument(*flags, dest=f.name, type=int, default=None)
        elif kind.startswith("float"):
            g.add_argument(*flags, dest=f.name, type=float, default=None)
        else:
            g.add_argument(*flags, dest=f.name, default=None)
    p.add_argument("--config", type=Path, help="JSON file with trainer config keys")


def resolve_config(args) -> TrainerConfig:
    data = {}
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file {args.config} not found")
        data = TrainerConfig.from_json(args.config).to_dict()
        data["lam"] = data.pop("lambda")
    for f in dataclasses.fields(TrainerConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            data[f.name] = value
    # asking for several threads means parallel unless --deterministic was given
    if getattr(args, "threads", None) and args.threads > 1 and args.deterministic is None:
        data["deterministic"] = False
    try:
        return TrainerConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _add_graph_flags(p, types=False, required=True):
    p.add_argument("--graph", type=Path, required=required, help="edge list, one 'u v' pair per line")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--extra-columns", choices=("error", "ignore"), default="error",
                   help="what to do with columns after the first two (e.g. weights)")
    if types:
        p.add_argument("--types", type=Path, help="node type file, 'node type' per line")


def _need(path: Path | None, what: str) -> Path:
    if path is None:
        raise ConfigError(f"{what} is required")
    if not path.exists():
        raise ConfigError(f"{what} {path} does not exist")
    return path


def _load_graph(args) -> Graph:
    g = load_edge_list(_need(args.graph, "--graph"), directed=args.directed,
                       extra_columns=args.extra_columns)
    if getattr(args, "types", None) is not None:
        g = load_node_types(g, _need(args.types, "--types"))
    log.info("graph: %d nodes, %d edges (%s)", g.node_count, g.edge_count,
             "directed" if g.directed else "undirected")
    return g


def _out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _header(config: TrainerConfig | None, **extra) -> dict:
    meta = {"created": time.strftime("%Y-%m-%dT%H:%M:%S"), **extra}
    if config is not None:
        meta["config"] = config.to_dict()
        meta["seed"] = config.seed
    return meta


def _write_sidecar(path: Path, meta: dict) -> None:
    path.with_name(path.name + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True,
                                                                   default=str))


def _write_store(out: Path, store: EmbeddingStore, meta: dict) -> None:
    store.meta.update(meta)
    store.save(out / "store.npz")
    files = [("embeddings.txt", "U"), ("P.txt", "P")] + [(f"Q{s}.txt", f"Q{s}") for s in range(1, store.K + 1)]
    for name, which in files:
        write_word2vec(out / name, store.matrix(which), store.labels)
        _write_sidecar(out / name, {**meta, "matrix": which})
    log_rows = store.meta.get("training_log", [])
    tlog = trainer.TrainingLog(log_rows)
    (out / "training_log.csv").write_text("# " + json.dumps(meta, sort_keys=True, default=str) + "\n"
                                          + tlog.to_csv())
    (out / "config.json").write_text(json.dumps(meta.get("config", {}), indent=2, sort_keys=True))
    log.info("wrote %s", out)


def _corpus(args, graph: Graph, config: TrainerConfig) -> WalkCorpus | None:
    if getattr(args, "corpus", None) is None:
        return None
    return WalkCorpus.load(_need(args.corpus, "--corpus"), expect_graph=graph)


def cmd_walk(args) -> int:
    config = resolve_config(args)
    g = _load_graph(args)
    if args.scheme:
        corpus = metapath_walks(g, args.scheme, config.walks_per_node, config.walk_length, config.seed)
    else:
        corpus = generate_walks(g, config.walks_per_node, config.walk_length, config.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    corpus.save(args.out)
    _write_sidecar(args.out, _header(config, command="walk", graph=str(args.graph), schemes=args.scheme))
    log.info("wrote %d walks to %s", len(corpus), args.out)
    return 0


def cmd_train(args) -> int:
    config = resolve_config(args)
    g = _load_graph(args)
    corpus = _corpus(args, g, config)
    if args.method == "deepwalk":
        store = trainer.train_deepwalk(g, config.replace(K=1), corpus)
    else:
        store = trainer.train(g, config, corpus)
    used = config.replace(K=1) if args.method == "deepwalk" else config
    _write_store(_out_dir(args.out), store, _header(used, command="train",
                                                    method=args.method, graph=str(args.graph),
                                                    graph_fingerprint=g.fingerprint()))
    return 0


def _split_types(text: str | None) -> set[str]:
    return {t.strip() for t in text.split(",") if t.strip()} if text else set()


def cmd_het_train(args) -> int:
    config = resolve_config(args)
    if not args.scheme:
        raise ConfigError("at least one --scheme is required")
    g = _load_graph(args)
    if g.node_types is None:
        raise ConfigError("--types is required for het-train")
    asp_ctx = _split_types(args.aspect_context_types) or set(g.type_names)
    features = None
    if args.features is not None:
        features = hetnet.load_features(g, _need(args.features, "--features"), config.d)
    try:
        store = hetnet.train_het(g, config, args.scheme, asp_ctx, _split_types(args.single_aspect_types),
                                 features, _corpus(args, g, config))
    except ValueError as exc:
        if isinstance(exc, GraphFormatError):
            raise
        raise ConfigError(str(exc)) from None
    _write_store(_out_dir(args.out), store, _header(config, command="het-train", graph=str(args.graph),
                                                    schemes=args.scheme,
                                                    aspect_context_types=sorted(asp_ctx),
                                                    single_aspect_types=sorted(_split_types(args.single_aspect_types))))
    return 0


def _load_embeddings(path: Path, graph: Graph) -> np.ndarray:
    """Rows of U reordered to graph node order."""
    if path.suffix == ".npz":
        store = EmbeddingStore.load(path)
        U, labels = store.matrix("U"), store.labels
    else:
        U, labels = read_word2vec(path)
    if len(labels) != graph.node_count:
        raise ConfigError(f"embeddings have {len(labels)} rows, graph has {graph.node_count} nodes")
    row = {lab: k for k, lab in enumerate(labels)}
    try:
        order = np.array([row[graph.label(v)] for v in range(graph.node_count)])
    except KeyError as exc:
        raise ConfigError(f"node {exc} of the graph has no embedding") from None
    return np.asarray(U)[order]


def cmd_eval(args) -> int:
    config = resolve_config(args)
    g = _load_graph(args)
    if args.split is not None and (args.split / "test_pos.edges").exists():
        split = evaluation.EdgeSplit.load(args.split, g)
        log.info("loaded split from %s", args.split)
    else:
        split = evaluation.split_edges(g, args.split_seed, typed_negatives=args.typed_negatives)
        if args.split is not None:
            split.save(args.split)
            log.info("saved split to %s", args.split)
    extra = {}
    if args.embeddings is not None:
        U = _load_embeddings(_need(args.embeddings, "--embeddings"), g)
        extra["embeddings"] = str(args.embeddings)
    elif args.method == "random":
        U = init_random(g.node_count, config.d * config.K, 1, config.seed).P
    else:
        residual = split.residual_graph
        if args.method == "deepwalk":
            store = trainer.train_deepwalk(residual, config.replace(K=1, d=config.d * config.K
                                                                    if args.match_dim else config.d))
        elif args.method == "het":
            if not args.scheme:
                raise ConfigError("--method het needs --scheme")
            store = hetnet.train_het(residual, config, args.scheme,
                                     _split_types(args.aspect_context_types) or set(g.type_names),
                                     _split_types(args.single_aspect_types))
        else:
            store = trainer.train(residual, config)
        U = store.matrix("U")
        extra["trained_on"] = "residual"
    extra["method"] = "embeddings" if args.embeddings is not None else args.method
    report = evaluation.evaluate(U, split, args.operator, args.l2)
    report.extra.update(extra, **_header(config, command="eval", graph=str(args.graph)))
    text = report.to_json()
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text + "\n")
    print(text)
    log.info("AUC %.4f (%s)", report.auc, args.operator)
    return 0


def cmd_diag(args) -> int:
    store = EmbeddingStore.load(_need(args.store, "--store"))
    config = TrainerConfig.from_dict(store.meta["config"]) if "config" in store.meta else resolve_config(args)
    out = _out_dir(args.out)
    meta = "# " + json.dumps(_header(config, command="diag", store=str(args.store)), sort_keys=True) + "\n"
    both = not (args.heatmap or args.variance)
    if args.heatmap or both:
        H = diagnostics.aspect_heatmap(store)
        (out / "heatmap.csv").write_text(meta + diagnostics.heatmap_csv(H))
        log.info("mean off-diagonal |cos| %.4f", diagnostics.mean_offdiag_abs(H))
        print(json.dumps({"mean_offdiag_abs_cos": diagnostics.mean_offdiag_abs(H)}))
    if args.variance or both:
        if args.graph is None and args.corpus is None:
            raise ConfigError("--variance needs --graph or --corpus")
        if args.corpus is not None:
            corpus = WalkCorpus.load(_need(args.corpus, "--corpus"))
        else:
            corpus = generate_walks(_load_graph(args), config.walks_per_node, config.walk_length, config.seed)
        table = diagnostics.aspect_distribution_stats(store, corpus, config)
        (out / "aspect_variance.csv").write_text(meta + diagnostics.stats_csv(table, store.labels))
    return 0


def cmd_export(args) -> int:
    store = EmbeddingStore.load(_need(args.store, "--store"))
    try:
        M = store.matrix(args.matrix)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_word2vec(args.out, M, store.labels)
    _write_sidecar(args.out, {**store.meta, "matrix": args.matrix})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asp2vec", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("walk", help="generate and cache a walk corpus")
    _add_graph_flags(p, types=True)
    p.add_argument("--scheme", action="append", help="meta-path like A,P,A (repeatable)")
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("train", help="train embeddings on a homogeneous graph")
    _add_graph_flags(p)
    p.add_argument("--corpus", type=Path, help="cached walk corpus")
    p.add_argument("--method", choices=("asp2vec", "deepwalk"), default="asp2vec")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("het-train", help="train on a typed graph with meta-path walks")
    _add_graph_flags(p, types=True)
    p.add_argument("--scheme", action="append", help="meta-path like A,P,A (repeatable)")
    p.add_argument("--aspect-context-types", help="comma-separated types used for aspect selection")
    p.add_argument("--single-aspect-types", help="comma-separated single-aspect target types")
    p.add_argument("--features", type=Path, help="fixed vectors, 'node v1 ... vd' per line")
    p.add_argument("--corpus", type=Path, help="cached walk corpus")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_het_train)

    p = sub.add_parser("eval", help="link prediction AUC")
    _add_graph_flags(p, types=True)
    p.add_argument("--embeddings", type=Path, help="store.npz or word2vec file trained on the residual graph")
    p.add_argument("--method", choices=("asp2vec", "deepwalk", "het", "random"), default="asp2vec",
                   help="train on the residual graph when --embeddings is not given")
    p.add_argument("--match-dim", action="store_true", help="deepwalk uses d*K dimensions")
    p.add_argument("--scheme", action="append")
    p.add_argument("--aspect-context-types")
    p.add_argument("--single-aspect-types")
    p.add_argument("--split", type=Path, help="split directory: loaded if present, else written")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--typed-negatives", action="store_true")
    p.add_argument("--operator", choices=evaluation.OPERATORS, default="hadamard")
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--out", type=Path, help="EvalReport JSON path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diag", help="aspect variance table and aspect heatmap as CSV")
    p.add_argument("--store", type=Path, required=True)
    _add_graph_flags(p, required=False)
    p.add_argument("--corpus", type=Path)
    p.add_argument("--heatmap", action="store_true")
    p.add_argument("--variance", action="store_true")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("export", help="write one matrix of a store in word2vec format")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--matrix", default="U", help="U, P or Q1..QK")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        level=logging.DEBUG if args.verbose > 1 else logging.INFO)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"asp2vec: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure
        log.debug("traceback", exc_info=True)
        print(f"asp2vec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
