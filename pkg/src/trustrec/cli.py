"""Command-line pipeline harness: prepare, train, evaluate, report.

The pipeline runs from a flat ``key = value`` config file with dotted section
prefixes (see DEFAULTS for every key).  Each stage writes its artifacts into
a work-directory folder named by a content hash of the stage's config section
plus its upstream artifacts, so reruns reuse finished stages and any config
change recomputes exactly the affected stages.  All stages are seeded and
artifacts carry no timestamps: identical configs produce byte-identical
outputs.

Exit codes: 0 success, 2 usage or input error, 3 numeric failure.
"""

import argparse
import hashlib
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import evaluation
from .autoencoder import AutoencoderConfig
from .data import (
    DataFormatError,
    IdMap,
    SplitSpec,
    load_ratings,
    load_trust,
    save_ratings,
    save_trust,
    split,
    global_mean,
)
from .embed import EmbeddingTable, WalkConfig, node_embeddings
from .graph import (
    CommunityAssignment,
    LeaderTable,
    PropagatedTrust,
    community_leaders,
    louvain,
    propagate_trust,
    symmetrized_adjacency,
)
from .model import HyperParams, TrainingContext, load_params, save_params, train
from .serialize import CheckpointError, load_checkpoint, save_checkpoint


class ConfigError(ValueError):
    """Bad config file: unknown key, unparsable value, or missing path."""


class NumericError(ArithmeticError):
    """Training produced a non-finite value."""


@dataclass
class GraphOptions:
    """Propagation and leader-selection settings."""

    decay: float = 0.8
    max_depth: int = 3
    centrality: str = "pagerank"
    damping: float = 0.85
    louvain_seed: int = 0


@dataclass
class PipelineConfig:
    ratings_path: str
    trust_path: str
    work_dir: str
    scale: tuple
    split: SplitSpec
    autoencoder: AutoencoderConfig
    walks: WalkConfig
    graph: GraphOptions
    model: HyperParams


def _parse_ints(text):
    return tuple(int(part) for part in text.replace(",", " ").split())


# key -> (converter, default); config files may override any subset
DEFAULTS = {
    "paths.ratings": (str, ""),
    "paths.trust": (str, ""),
    "paths.work": (str, "work"),
    "data.scale_min": (float, 1.0),
    "data.scale_max": (float, 5.0),
    "split.train_fraction": (float, 0.8),
    "split.seed": (int, 0),
    "autoencoder.hidden_sizes": (_parse_ints, (128, 64, 32, 10, 32, 64, 128)),
    "autoencoder.learning_rate": (float, 0.001),
    "autoencoder.batch_size": (int, 128),
    "autoencoder.epochs": (int, 20),
    "autoencoder.seed": (int, 0),
    "walks.dimensions": (int, 10),
    "walks.num_walks": (int, 10),
    "walks.walk_length": (int, 80),
    "walks.p": (float, 1.0),
    "walks.q": (float, 1.0),
    "walks.window": (int, 5),
    "walks.negatives": (int, 5),
    "walks.epochs": (int, 1),
    "walks.learning_rate": (float, 0.025),
    "walks.batch_size": (int, 1024),
    "walks.seed": (int, 0),
    "graph.decay": (float, 0.8),
    "graph.max_depth": (int, 3),
    "graph.centrality": (str, "pagerank"),
    "graph.damping": (float, 0.85),
    "graph.louvain_seed": (int, 0),
    "model.k": (int, 10),
    "model.learning_rate": (float, 0.005),
    "model.lam_p": (float, 0.1),
    "model.lam_q": (float, 0.1),
    "model.lam_w": (float, 0.1),
    "model.lam_t": (float, 0.1),
    "model.lam_c": (float, 0.1),
    "model.epochs": (int, 50),
    "model.seed": (int, 0),
}

_SEED_KEYS = ("split.seed", "autoencoder.seed", "walks.seed", "graph.louvain_seed", "model.seed")


def parse_config_file(path):
    """Flat dotted-key mapping from a ``key = value`` file."""
    raw = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    with fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (part.strip() for part in text.split("=", 1))
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            raw[key] = value
    return raw


def build_config(raw, seed_override=None, work_override=None):
    """Typed PipelineConfig from a raw mapping, applying CLI overrides."""
    values = {}
    for key, (convert, default) in DEFAULTS.items():
        if key in raw:
            try:
                values[key] = convert(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        else:
            values[key] = default
    if seed_override is not None:
        for key in _SEED_KEYS:
            values[key] = seed_override
    if work_override is not None:
        values["paths.work"] = work_override

    def section(prefix):
        plen = len(prefix) + 1
        return {k[plen:]: v for k, v in values.items() if k.startswith(prefix + ".")}

    try:
        config = PipelineConfig(
            ratings_path=values["paths.ratings"],
            trust_path=values["paths.trust"],
            work_dir=values["paths.work"],
            scale=(values["data.scale_min"], values["data.scale_max"]),
            split=SplitSpec(values["split.train_fraction"], values["split.seed"]),
            autoencoder=AutoencoderConfig(**section("autoencoder")),
            walks=WalkConfig(**section("walks")),
            graph=GraphOptions(**section("graph")),
            model=HyperParams(
                k=values["model.k"],
                learning_rate=values["model.learning_rate"],
                lam_p=values["model.lam_p"],
                lam_q=values["model.lam_q"],
                lam_w=values["model.lam_w"],
                lam_t=values["model.lam_t"],
                lam_c=values["model.lam_c"],
                epochs=values["model.epochs"],
                seed=values["model.seed"],
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    # the code layer seeds P/Q and the embedding gate is elementwise against
    # P_u, so all three widths have to agree before any stage runs
    if config.autoencoder.code_size != config.model.k:
        raise ConfigError(
            f"autoencoder code width {config.autoencoder.code_size} "
            f"does not match model.k = {config.model.k}"
        )
    if config.walks.dimensions != config.model.k:
        raise ConfigError(
            f"walks.dimensions = {config.walks.dimensions} "
            f"does not match model.k = {config.model.k}"
        )
    return config, values


def _hash_bytes(*chunks):
    digest = hashlib.sha256()
    for chunk in chunks:
        digest.update(chunk if isinstance(chunk, bytes) else str(chunk).encode())
        digest.update(b"\x00")
    return digest.hexdigest()[:12]


def _hash_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _render(values, prefixes):
    """Canonical text of the config keys under the given prefixes."""
    lines = []
    for key in sorted(values):
        if any(key.startswith(p + ".") for p in prefixes):
            lines.append(f"{key} = {values[key]!r}")
    return "\n".join(lines)


def _stage_dir(work, stage, key):
    return os.path.join(work, f"{stage}-{key}")


def _finish_stage(work, stage, key):
    # the pointer file lets downstream stages find the current artifact set
    with open(os.path.join(work, f"{stage}.current"), "w") as fh:
        fh.write(key + "\n")


def _current_stage(work, stage):
    pointer = os.path.join(work, f"{stage}.current")
    if not os.path.exists(pointer):
        raise ConfigError(f"missing {stage} artifacts in {work}; run earlier stages first")
    with open(pointer) as fh:
        return os.path.join(work, f"{stage}-{fh.read().strip()}")


class _WorkLock:
    """One command at a time per work directory."""

    def __init__(self, work):
        self.path = os.path.join(work, ".lock")
        self.fd = None

    def __enter__(self):
        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(f"work directory is locked ({self.path}); is another command running?") from None
        return self

    def __exit__(self, *exc):
        if self.fd is not None:
            os.close(self.fd)
            os.remove(self.path)
        return False


def cmd_prepare(config, values):
    """Split the ratings, share the user index with the trust graph, cache both."""
    for path in (config.ratings_path, config.trust_path):
        if not path or not os.path.exists(path):
            raise ConfigError(f"input file not found: {path!r}")
    key = _hash_bytes(
        _render(values, ("data", "split")),
        _hash_file(config.ratings_path),
        _hash_file(config.trust_path),
    )
    out = _stage_dir(config.work_dir, "prepare", key)
    if not os.path.exists(os.path.join(out, "done")):
        user_map, item_map = IdMap(), IdMap()
        ratings = load_ratings(config.ratings_path, config.scale, user_map, item_map)
        trust = load_trust(config.trust_path, user_map)
        ratings = ratings.with_num_users(len(user_map))
        train_split, test_split = split(ratings, config.split)
        os.makedirs(out, exist_ok=True)
        save_ratings(train_split, os.path.join(out, "train.txt"), user_map, item_map)
        save_ratings(test_split, os.path.join(out, "test.txt"), user_map, item_map)
        user_map.save(os.path.join(out, "user_map.txt"))
        item_map.save(os.path.join(out, "item_map.txt"))
        save_trust(trust, os.path.join(out, "trust.txt"), user_map)
        sym = symmetrized_adjacency(trust).tocoo()
        with open(os.path.join(out, "sym_graph.txt"), "w") as fh:
            for u, v, w in zip(sym.row, sym.col, sym.data):
                fh.write(f"{u},{v},{float(w)!r}\n")
        with open(os.path.join(out, "done"), "w") as fh:
            fh.write(key + "\n")
    _finish_stage(config.work_dir, "prepare", key)
    return out


def _load_prepared(config):
    """Reload cached splits through the saved id maps so indices line up."""
    prep = _current_stage(config.work_dir, "prepare")
    user_map = IdMap.load(os.path.join(prep, "user_map.txt"))
    item_map = IdMap.load(os.path.join(prep, "item_map.txt"))

    def reload(name):
        ratings = load_ratings(os.path.join(prep, name), config.scale, user_map, item_map)
        return ratings.with_num_users(len(user_map))

    train_split = reload("train.txt")
    test_split = reload("test.txt")
    trust = load_trust(os.path.join(prep, "trust.txt"), user_map)
    return prep, train_split, test_split, trust


def _check_finite(name, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values in {name}")


def _autoencoder_stage(config, values, prep_key):
    key = _hash_bytes(_render(values, ("autoencoder",)), values["model.k"], prep_key)
    out = _stage_dir(config.work_dir, "autoencoder", key)
    path = os.path.join(out, "codes.ckpt")
    if not os.path.exists(path):
        _, train_split, _, _ = _load_prepared(config)
        user_cfg = config.autoencoder
        item_cfg = replace(user_cfg, seed=user_cfg.seed + 1)
        init_p, init_q = evaluation.autoencoder_inits(
            train_split, config.model.k, user_cfg, item_cfg
        )
        _check_finite("autoencoder codes", init_p, init_q)
        os.makedirs(out, exist_ok=True)
        save_checkpoint(path, "ae-codes", {"init_P": init_p, "init_Q": init_q})
    _finish_stage(config.work_dir, "autoencoder", key)
    return path


def _graph_stage(config, values, prep_key):
    key = _hash_bytes(_render(values, ("graph",)), prep_key)
    out = _stage_dir(config.work_dir, "graph", key)
    path = os.path.join(out, "graph.ckpt")
    if not os.path.exists(path):
        _, _, _, trust = _load_prepared(config)
        communities = louvain(trust, seed=config.graph.louvain_seed)
        kwargs = {"damping": config.graph.damping} if config.graph.centrality == "pagerank" else {}
        leaders = community_leaders(trust, communities, method=config.graph.centrality, **kwargs)
        propagated = propagate_trust(trust, config.graph.decay, config.graph.max_depth)
        pairs = np.array(list(propagated.pairs()), dtype=np.float64).reshape(-1, 3)
        os.makedirs(out, exist_ok=True)
        save_checkpoint(
            path,
            "graph",
            {
                "labels": communities.labels,
                "modularity": np.array([communities.modularity]),
                "leaders": leaders.leaders,
                "pairs": pairs,
            },
            {"num_communities": communities.num_communities, "num_users": trust.num_users},
        )
    _finish_stage(config.work_dir, "graph", key)
    return path


def _load_graph_stage(path, decay, max_depth):
    _, arrays, meta = load_checkpoint(path, expect_kind="graph")
    labels = arrays["labels"].astype(np.int64)
    communities = CommunityAssignment(labels, meta["num_communities"], float(arrays["modularity"][0]))
    leaders = LeaderTable(arrays["leaders"].astype(np.int64), labels, "stored")
    values = {}
    for u, v, t in arrays["pairs"]:
        values.setdefault(int(u), {})[int(v)] = float(t)
    propagated = PropagatedTrust(values, meta["num_users"], decay, max_depth)
    return communities, leaders, propagated


def _embed_stage(config, values, prep_key):
    key = _hash_bytes(_render(values, ("walks",)), prep_key)
    out = _stage_dir(config.work_dir, "embed", key)
    path = os.path.join(out, "embeddings.ckpt")
    if not os.path.exists(path):
        _, _, _, trust = _load_prepared(config)
        table = node_embeddings(trust, config.walks)
        _check_finite("embeddings", table.vectors)
        os.makedirs(out, exist_ok=True)
        save_checkpoint(path, "embeddings", {"vectors": table.vectors})
    _finish_stage(config.work_dir, "embed", key)
    return path


def cmd_train(config, values):
    """Autoencoders, graph analysis, embeddings, then factor-model SGD."""
    prep = _current_stage(config.work_dir, "prepare")
    prep_key = os.path.basename(prep).split("-", 1)[1]
    ae_path = _autoencoder_stage(config, values, prep_key)
    graph_path = _graph_stage(config, values, prep_key)
    embed_path = _embed_stage(config, values, prep_key)

    key = _hash_bytes(
        _render(values, ("model",)),
        _hash_file(ae_path),
        _hash_file(graph_path),
        _hash_file(embed_path),
    )
    out = _stage_dir(config.work_dir, "train", key)
    ckpt = os.path.join(out, "model.ckpt")
    if not os.path.exists(ckpt):
        _, train_split, _, _ = _load_prepared(config)
        _, arrays, _ = load_checkpoint(ae_path, expect_kind="ae-codes")
        communities, leaders, propagated = _load_graph_stage(
            graph_path, config.graph.decay, config.graph.max_depth
        )
        _, emb_arrays, _ = load_checkpoint(embed_path, expect_kind="embeddings")
        ctx = TrainingContext(
            train_split,
            trust=propagated,
            embeddings=EmbeddingTable(emb_arrays["vectors"]),
            communities=communities,
            leaders=leaders,
        )
        params, history = train(ctx, config.model, arrays["init_P"], arrays["init_Q"])
        if not all(np.isfinite(history)):
            raise NumericError("objective became non-finite during training")
        _check_finite("model parameters", params.P, params.Q, params.W)
        os.makedirs(out, exist_ok=True)
        save_params(params, ckpt)
        with open(os.path.join(out, "objective.log"), "w") as fh:
            for value in history:
                fh.write(f"{value!r}\n")
    _finish_stage(config.work_dir, "train", key)
    return ckpt


def cmd_evaluate(config, values, ablate=False, baseline_mean=False):
    """Score the trained checkpoint on the cached test split; write report.txt."""
    _, train_split, test_split, trust = _load_prepared(config)
    train_dir = _current_stage(config.work_dir, "train")
    ckpt = os.path.join(train_dir, "model.ckpt")
    if not os.path.exists(ckpt):
        raise ConfigError(f"missing checkpoint {ckpt}; run train first")
    params = load_params(ckpt)
    embed_path = os.path.join(_current_stage(config.work_dir, "embed"), "embeddings.ckpt")
    _, emb_arrays, _ = load_checkpoint(embed_path, expect_kind="embeddings")
    embeddings = EmbeddingTable(emb_arrays["vectors"])

    reports = [
        evaluation.evaluate(
            params, embeddings, test_split, model_tag="full", seed=config.model.seed
        )
    ]
    if ablate:
        graph_path = os.path.join(_current_stage(config.work_dir, "graph"), "graph.ckpt")
        communities, leaders, propagated = _load_graph_stage(
            graph_path, config.graph.decay, config.graph.max_depth
        )
        ae_path = os.path.join(_current_stage(config.work_dir, "autoencoder"), "codes.ckpt")
        _, arrays, _ = load_checkpoint(ae_path, expect_kind="ae-codes")
        ctx = TrainingContext(
            train_split,
            trust=propagated,
            embeddings=embeddings,
            communities=communities,
            leaders=leaders,
        )
        reports = evaluation.run_ablations(
            ctx, config.model, test_split, ae_init=(arrays["init_P"], arrays["init_Q"])
        )
    if baseline_mean:
        reports.append(
            evaluation.constant_baseline(global_mean(train_split), test_split, model_tag="mean")
        )
    for report in reports:
        if not np.isfinite(report.rmse):
            raise NumericError(f"non-finite rmse for {report.model_tag}")
    evaluation.write_reports(reports, os.path.join(config.work_dir, "report.txt"))
    for report in reports:
        print(report.line())
    return reports


def cmd_report(work_dir):
    path = os.path.join(work_dir, "report.txt")
    if not os.path.exists(path):
        raise ConfigError(f"no report at {path}; run evaluate first")
    for report in evaluation.read_reports(path):
        print(report.line())


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="trustrec",
        description="Trust-aware factor-model recommender pipeline.",
    )
    parser.add_argument("--config", help="path to the key = value config file")
    parser.add_argument("--seed", type=int, help="override every stage seed")
    parser.add_argument("--work", help="override the work directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("prepare", help="split ratings and cache the trust graph")
    sub.add_parser("train", help="run all pipeline stages and write a checkpoint")
    pe = sub.add_parser("evaluate", help="score the checkpoint on the test split")
    pe.add_argument("--ablate", action="store_true", help="train and score all five ablation variants")
    pe.add_argument("--baseline-mean", action="store_true", help="also report the constant train-mean baseline")
    sub.add_parser("report", help="print the stored evaluation report")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "report":
            work = args.work
            if work is None and args.config:
                _, values = build_config(parse_config_file(args.config), args.seed, args.work)
                work = values["paths.work"]
            if work is None:
                print("report needs --work or --config", file=sys.stderr)
                return 2
            cmd_report(work)
            return 0
        if not args.config:
            print(f"{args.command} needs --config", file=sys.stderr)
            return 2
        config, values = build_config(parse_config_file(args.config), args.seed, args.work)
        os.makedirs(config.work_dir, exist_ok=True)
        with _WorkLock(config.work_dir):
            if args.command == "prepare":
                cmd_prepare(config, values)
            elif args.command == "train":
                cmd_train(config, values)
            elif args.command == "evaluate":
                cmd_evaluate(config, values, ablate=args.ablate, baseline_mean=args.baseline_mean)
    except (ConfigError, DataFormatError, CheckpointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
