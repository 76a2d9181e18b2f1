"""Command-line front end: cohort building, train/eval, causal study, synth.

Every run resolves its configuration (TOML file plus flag overrides),
hashes it, and writes all artifacts into one directory named by that
hash, together with a manifest recording input digests. Reruns with the
same config and seed produce bitwise-identical files.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 statistical degeneracy (for example no propensity overlap).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from . import causal as causal_mod
from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import featurize as feat_mod
from . import models as models_mod
from . import synth as synth_mod

__all__ = ["main", "UsageError", "DataError", "DegeneracyError"]


class UsageError(Exception):
    exit_code = 1


class DataError(Exception):
    exit_code = 2


class DegeneracyError(Exception):
    exit_code = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="TOML study config")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the study seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="base output directory (default: runs)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker threads (default: 1)")

    parser = _Parser(prog="minstress", description=__doc__, parents=[common])
    parser.set_defaults(config=None, seed=None, out="runs", jobs=1)
    sub = parser.add_subparsers(dest="command", metavar="command")

    sub.add_parser("cohort", parents=[common], help="build minority/control cohorts from dumps")
    sub.add_parser("train-eval", parents=[common], help="cross-validated classifier study")

    p_delta = sub.add_parser(
        "importance-delta", parents=[common], help="coefficient rank movement between two models"
    )
    p_delta.add_argument("--model-a", required=True, help="baseline model JSON")
    p_delta.add_argument("--model-b", required=True, help="comparison model JSON")
    p_delta.add_argument("--top", type=int, default=10, help="rows to print (csv has all)")

    sub.add_parser("causal", parents=[common], help="propensity-stratified effect estimation")

    p_synth = sub.add_parser("synth", parents=[common], help="generate a synthetic study bundle")
    p_synth.add_argument("--n-users", type=int, default=argparse.SUPPRESS)
    p_synth.add_argument("--posts-min", type=int, default=argparse.SUPPRESS)
    p_synth.add_argument("--posts-max", type=int, default=argparse.SUPPRESS)
    p_synth.add_argument("--n-labeled-posts", type=int, default=argparse.SUPPRESS)
    p_synth.add_argument("--delta", type=float, default=argparse.SUPPRESS)
    p_synth.add_argument("--category", default=argparse.SUPPRESS)
    p_synth.add_argument("--shift-strength", type=float, default=argparse.SUPPRESS)
    p_synth.add_argument("--confounder-strength", type=float, default=argparse.SUPPRESS)
    return parser


def _load_config(path: str | None) -> tuple[dict, Path | None]:
    if path is None:
        return {}, None
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    try:
        with open(p, "rb") as fh:
            return tomllib.load(fh), p.parent
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config parse error in {p}: {exc}") from exc


def _section(config: dict, name: str) -> dict:
    value = config.get(name, {})
    if not isinstance(value, dict):
        raise UsageError(f"config section [{name}] must be a table")
    return value


def _resolve_path(base: Path | None, value: str) -> Path:
    p = Path(value)
    if not p.is_absolute() and base is not None:
        p = base / p
    return p


def _input_path(config: dict, base: Path | None, key: str) -> Path:
    paths = _section(config, "paths")
    if key not in paths:
        raise UsageError(f"config is missing paths.{key}")
    p = _resolve_path(base, str(paths[key]))
    if not p.is_file():
        raise DataError(f"input file not found: {p}")
    return p


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _run_dir(out_base: str, command: str, resolved: dict) -> tuple[Path, str]:
    config_hash = hashlib.sha256(_canonical(resolved).encode()).hexdigest()[:12]
    run_dir = Path(out_base) / f"{command}-{config_hash}"
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir, config_hash


def _write_manifest(
    run_dir: Path, command: str, config_hash: str, seed: int, resolved: dict, inputs: dict[str, Path]
) -> None:
    artifacts = {}
    for p in sorted(run_dir.iterdir()):
        if p.name == "manifest.json" or not p.is_file():
            continue
        artifacts[p.name] = _sha256(p)
    manifest = {
        "command": command,
        "config_hash": config_hash,
        "seed": seed,
        "config": resolved,
        "inputs": {name: _sha256(path) for name, path in sorted(inputs.items())},
        "artifacts": artifacts,
    }
    with open(run_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parallel_map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _read_lines(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.readlines()


def _ingest(path: Path, reader) -> tuple[list, int]:
    try:
        return reader(_read_lines(path))
    except corpus_mod.MalformedRecordError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _study_seed(args, config: dict) -> int:
    if args.seed is not None:
        return int(args.seed)
    study = _section(config, "study")
    return int(study.get("seed", 0))


def _train_config(config: dict, seed: int) -> models_mod.TrainConfig:
    train = _section(config, "train")
    lr = train.get("learning_rate")
    return models_mod.TrainConfig(
        seed=seed,
        learning_rate=float(lr) if lr else None,
        max_iters=int(train.get("max_iters", 2000)),
        tol=float(train.get("tol", 1e-6)),
        lambda_=float(train.get("lambda", 1e-2)),
        tree_max_depth=int(train.get("tree_max_depth", 10)),
        tree_min_leaf=int(train.get("tree_min_leaf", 5)),
    )


def _parse_window(windows: dict, key: str) -> float:
    if key not in windows:
        raise UsageError(f"config is missing windows.{key}")
    try:
        return corpus_mod.parse_timestamp(windows[key])
    except ValueError as exc:
        raise UsageError(f"windows.{key}: {exc}") from exc


def _load_featurizer_config(config: dict, base: Path | None, inputs: dict) -> feat_mod.FeaturizerConfig:
    lexicon_path = _input_path(config, base, "lexicon")
    embeddings_path = _input_path(config, base, "embeddings")
    positive_path = _input_path(config, base, "positive")
    negative_path = _input_path(config, base, "negative")
    inputs.update(
        lexicon=lexicon_path,
        embeddings=embeddings_path,
        positive=positive_path,
        negative=negative_path,
    )
    try:
        lexicon = feat_mod.load_lexicon(lexicon_path)
        table = feat_mod.load_embeddings(embeddings_path)
        positive = feat_mod.load_wordlist(positive_path)
        negative = feat_mod.load_wordlist(negative_path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    vocab_size = int(_section(config, "train").get("vocab_size", 500))
    return feat_mod.FeaturizerConfig(
        lexicon=lexicon,
        table=table,
        pos_lexicon=positive,
        neg_lexicon=negative,
        vocab_size=vocab_size,
    )


def cmd_cohort(args) -> int:
    config, base = _load_config(args.config)
    if not config:
        raise UsageError("cohort requires --config")
    seed = _study_seed(args, config)
    cohort_cfg = _section(config, "cohort")
    seeds = [str(s) for s in cohort_cfg.get("seed_hashtags", [])]
    if not seeds:
        raise UsageError("config is missing cohort.seed_hashtags")
    inputs: dict[str, Path] = {}
    posts_path = _input_path(config, base, "posts")
    users_path = _input_path(config, base, "users")
    inputs.update(posts=posts_path, users=users_path)

    resolved = {"command": "cohort", "config": config, "seed": seed}
    run_dir, config_hash = _run_dir(args.out, "cohort", resolved)

    posts, skipped_posts = _ingest(posts_path, corpus_mod.ingest_posts)
    users, skipped_users = _ingest(users_path, corpus_mod.ingest_users)

    k = int(cohort_cfg.get("expand_top_k", 10))
    ranked = corpus_mod.top_cooccurring_hashtags(posts, seeds, k)
    tag_set = {s.lower().lstrip("#") for s in seeds} | {t for t, _ in ranked}

    tagged_authors = set()
    for post in posts:
        if any(tag in tag_set for tag in post.hashtags):
            tagged_authors.add(post.author_id)

    patterns = corpus_mod.compile_bio_patterns(
        [str(kw) for kw in cohort_cfg.get("bio_keywords", [])]
    )
    emoji = tuple(str(e) for e in cohort_cfg.get("bio_emoji", []))
    bio_matched = {
        u.user_id for u in users if corpus_mod.match_bio(u.bio, patterns, emoji)
    }

    minority_pool = [u for u in users if u.user_id in bio_matched and u.user_id in tagged_authors]
    control_pool = [u for u in users if u.user_id not in bio_matched]

    max_follow = int(cohort_cfg.get("max_follow", 5000))
    min_tweets = int(cohort_cfg.get("min_tweets", 200))
    max_tweets = int(cohort_cfg.get("max_tweets", 30000))
    minority = corpus_mod.filter_users(minority_pool, max_follow, min_tweets, max_tweets)
    control = corpus_mod.filter_users(control_pool, max_follow, min_tweets, max_tweets)
    if not minority or not control:
        raise DataError(
            f"empty cohort after filtering: minority={len(minority)} control={len(control)}"
        )

    corpus_mod.write_cohort(
        corpus_mod.Cohort(
            label=corpus_mod.CohortLabel.MINORITY,
            user_ids=frozenset(u.user_id for u in minority),
        ),
        run_dir / "minority.txt",
    )
    corpus_mod.write_cohort(
        corpus_mod.Cohort(
            label=corpus_mod.CohortLabel.CONTROL,
            user_ids=frozenset(u.user_id for u in control),
        ),
        run_dir / "control.txt",
    )
    with open(run_dir / "hashtags.csv", "w", encoding="utf-8") as fh:
        fh.write("hashtag,cooccurrence_count\n")
        for tag, count in ranked:
            fh.write(f"{tag},{count}\n")
    audit = {
        "posts_read": len(posts),
        "posts_skipped": skipped_posts,
        "users_read": len(users),
        "users_skipped": skipped_users,
        "expanded_hashtags": sorted(tag_set),
        "tagged_authors": len(tagged_authors),
        "bio_matched": len(bio_matched),
        "minority_before_filter": len(minority_pool),
        "control_before_filter": len(control_pool),
        "minority": len(minority),
        "control": len(control),
    }
    with open(run_dir / "audit.json", "w", encoding="utf-8") as fh:
        json.dump(audit, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(run_dir, "cohort", config_hash, seed, resolved, inputs)
    print(f"cohort: {len(minority)} minority, {len(control)} control users")
    print(f"artifacts in {run_dir}")
    return 0


def _read_labeled(path: Path) -> tuple[list[str], list[str], np.ndarray]:
    ids, texts, labels = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {line_no}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or not {"id", "text", "label"} <= obj.keys():
                raise DataError(f"{path}: line {line_no}: need id, text, label fields")
            if obj["label"] not in (0, 1):
                raise DataError(f"{path}: line {line_no}: label must be 0 or 1")
            ids.append(str(obj["id"]))
            texts.append(str(obj["text"]))
            labels.append(int(obj["label"]))
    if not ids:
        raise DataError(f"{path}: no labeled rows")
    return ids, texts, np.asarray(labels, dtype=np.int64)


def cmd_train_eval(args) -> int:
    config, base = _load_config(args.config)
    if not config:
        raise UsageError("train-eval requires --config")
    seed = _study_seed(args, config)
    inputs: dict[str, Path] = {}
    labeled_path = _input_path(config, base, "labeled")
    inputs["labeled"] = labeled_path
    feat_config = _load_featurizer_config(config, base, inputs)
    resolved = {"command": "train-eval", "config": config, "seed": seed}
    run_dir, config_hash = _run_dir(args.out, "train-eval", resolved)

    _, texts, labels = _read_labeled(labeled_path)
    if labels.min() == labels.max():
        raise DataError("labeled data contains a single class")
    token_lists = _parallel_map(
        lambda t: feat_mod.tokenize(corpus_mod.strip_urls(t)), texts, args.jobs
    )
    folds = int(_section(config, "train").get("folds", 10))
    train_config = _train_config(config, seed)
    try:
        plan = eval_mod.kfold_split(labels, folds, seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    cv = eval_mod.cross_validate_text(
        models_mod.MODEL_KINDS, token_lists, labels, plan, feat_config, train_config
    )
    ab = eval_mod.ablation_text(
        token_lists, labels, plan, feat_config, train_config, kind="logistic"
    )

    metric_rows = [(kind, cv[kind].mean) for kind in models_mod.MODEL_KINDS]
    eval_mod.write_metrics_csv(metric_rows, run_dir / "metrics.csv")
    eval_mod.write_metrics_json(metric_rows, run_dir / "metrics.json")
    ablation_rows = [(name, res.mean) for name, res in ab.items()]
    eval_mod.write_metrics_csv(ablation_rows, run_dir / "ablation.csv")
    eval_mod.write_metrics_json(ablation_rows, run_dir / "ablation.json")

    def _mean_auc(kind):
        a = cv[kind].mean.auc
        return -1.0 if a is None else a

    best = max(models_mod.MODEL_KINDS, key=lambda kind: (_mean_auc(kind), kind))
    eval_mod.write_roc_csv(
        eval_mod.roc_points(labels, cv[best].oof_scores), run_dir / "roc.csv"
    )
    with open(run_dir / "confusion.csv", "w", encoding="utf-8") as fh:
        fh.write("model,tp,fp,tn,fn\n")
        for kind in models_mod.MODEL_KINDS:
            _, cm = eval_mod.evaluate(labels, cv[kind].oof_scores)
            fh.write(f"{kind},{cm.tp},{cm.fp},{cm.tn},{cm.fn}\n")

    featurizer = feat_config.fit(token_lists)
    full_data = models_mod.Dataset(
        featurizer.matrix(token_lists), labels, featurizer.schema
    )
    full_model = models_mod.train_logistic(full_data, train_config)
    models_mod.save_model(full_model, run_dir / "model_logistic.json")
    with open(run_dir / "importance.csv", "w", encoding="utf-8") as fh:
        fh.write("rank,feature,weight\n")
        for rank, (name, weight) in enumerate(models_mod.coefficients(full_model), start=1):
            fh.write(f"{rank},{name},{weight:.8f}\n")

    _write_manifest(run_dir, "train-eval", config_hash, seed, resolved, inputs)
    print("model      precision recall f1     accuracy auc")
    for kind, m in metric_rows:
        auc_s = "-" if m.auc is None else f"{m.auc:.3f}"
        print(
            f"{kind:<10} {m.precision:.3f}     {m.recall:.3f}  {m.f1:.3f}  {m.accuracy:.3f}    {auc_s}"
        )
    print(f"best by auc: {best}")
    print(f"artifacts in {run_dir}")
    return 0


def cmd_importance_delta(args) -> int:
    seed = int(args.seed) if args.seed is not None else 0
    for path in (args.model_a, args.model_b):
        if not Path(path).is_file():
            raise DataError(f"model file not found: {path}")
    try:
        model_a = models_mod.load_model(args.model_a)
        model_b = models_mod.load_model(args.model_b)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"could not load model: {exc}") from exc
    for name, model in (("A", model_a), ("B", model_b)):
        if model.kind != "logistic":
            raise DataError(f"model {name} has no coefficient ranking (kind={model.kind})")
    if model_a.schema != model_b.schema:
        raise DataError("model schemas do not match")
    shifts = eval_mod.rank_delta(
        models_mod.coefficients(model_a), models_mod.coefficients(model_b)
    )
    resolved = {
        "command": "importance-delta",
        "model_a": _sha256(Path(args.model_a)),
        "model_b": _sha256(Path(args.model_b)),
        "seed": seed,
    }
    run_dir, config_hash = _run_dir(args.out, "importance-delta", resolved)
    eval_mod.write_rank_delta_csv(shifts, run_dir / "rank_delta.csv")
    _write_manifest(
        run_dir,
        "importance-delta",
        config_hash,
        seed,
        resolved,
        {"model_a": Path(args.model_a), "model_b": Path(args.model_b)},
    )
    print(f"{'feature':<28} {'A':>6} {'B':>6} {'delta':>6} dir")
    for s in shifts[: max(0, args.top)]:
        print(f"{s.feature:<28} {s.label_a:>6} {s.label_b:>6} {s.delta:>6} {s.direction}")
    print(f"artifacts in {run_dir}")
    return 0


def _score_histogram(scores: np.ndarray, groups: np.ndarray) -> str:
    lines = ["propensity score histogram (m=minority, c=control):"]
    edges = np.linspace(0.0, 1.0, 11)
    for i in range(10):
        lo, hi = edges[i], edges[i + 1]
        in_bin = (scores >= lo) & (scores < hi if i < 9 else scores <= hi)
        n_m = int(np.sum(in_bin & (groups == 1)))
        n_c = int(np.sum(in_bin & (groups == 0)))
        lines.append(f"  [{lo:.1f},{hi:.1f}) m={n_m:<6} c={n_c:<6}")
    return "\n".join(lines)


def cmd_causal(args) -> int:
    config, base = _load_config(args.config)
    if not config:
        raise UsageError("causal requires --config")
    seed = _study_seed(args, config)
    inputs: dict[str, Path] = {}
    posts_path = _input_path(config, base, "posts")
    users_path = _input_path(config, base, "users")
    minority_path = _input_path(config, base, "minority_ids")
    control_path = _input_path(config, base, "control_ids")
    lexicon_path = _input_path(config, base, "lexicon")
    inputs.update(
        posts=posts_path,
        users=users_path,
        minority_ids=minority_path,
        control_ids=control_path,
        lexicon=lexicon_path,
    )
    windows_cfg = _section(config, "windows")
    windows = corpus_mod.StudyWindows(
        study_start=_parse_window(windows_cfg, "study_start"),
        boundary=_parse_window(windows_cfg, "boundary"),
        study_end=_parse_window(windows_cfg, "study_end"),
    )
    causal_cfg = _section(config, "causal")
    resolved = {"command": "causal", "config": config, "seed": seed}
    run_dir, config_hash = _run_dir(args.out, "causal", resolved)

    posts, _ = _ingest(posts_path, corpus_mod.ingest_posts)
    users, _ = _ingest(users_path, corpus_mod.ingest_users)
    try:
        lexicon = feat_mod.load_lexicon(lexicon_path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    minority = corpus_mod.read_cohort(minority_path, corpus_mod.CohortLabel.MINORITY)
    control = corpus_mod.read_cohort(control_path, corpus_mod.CohortLabel.CONTROL)
    overlap = minority.user_ids & control.user_ids
    if overlap:
        raise DataError(f"{len(overlap)} users appear in both cohorts")

    users_by_id = {u.user_id: u for u in users}
    timelines = corpus_mod.build_timelines(posts)
    study_ids = [
        uid
        for uid in sorted(minority.user_ids | control.user_ids)
        if uid in users_by_id
    ]
    missing = len(minority.user_ids | control.user_ids) - len(study_ids)
    if not study_ids:
        raise DataError("no cohort user has a record in the user dump")
    labels = np.array(
        [1 if uid in minority.user_ids else 0 for uid in study_ids], dtype=np.int64
    )
    if labels.min() == labels.max():
        raise DataError("cohorts do not contain both groups after joining user records")

    empty = corpus_mod.Timeline(user_id="", posts=())
    pre_tokens: dict[str, list[str]] = {}
    during_tokens: dict[str, list[str]] = {}
    pre_timelines: dict[str, corpus_mod.Timeline] = {}

    def _prepare(uid: str):
        timeline = timelines.get(uid, corpus_mod.Timeline(user_id=uid, posts=()))
        pre, during = corpus_mod.split_window(timeline, windows)
        toks_pre: list[str] = []
        for post in pre.posts:
            toks_pre.extend(feat_mod.tokenize(corpus_mod.strip_urls(post.text)))
        toks_during: list[str] = []
        for post in during.posts:
            toks_during.extend(feat_mod.tokenize(corpus_mod.strip_urls(post.text)))
        return uid, pre, toks_pre, toks_during

    for uid, pre, toks_pre, toks_during in _parallel_map(_prepare, study_ids, args.jobs):
        pre_timelines[uid] = pre
        pre_tokens[uid] = toks_pre
        during_tokens[uid] = toks_during

    n_top = int(causal_cfg.get("top_unigrams", 500))
    top_unigrams = feat_mod.top_unigrams([pre_tokens[uid] for uid in study_ids], n_top)

    covariates = _parallel_map(
        lambda uid: causal_mod.build_covariates(
            users_by_id[uid], pre_timelines[uid], top_unigrams, lexicon, windows.boundary
        ),
        study_ids,
        args.jobs,
    )
    names = causal_mod.covariate_names(top_unigrams, lexicon.names)
    train_config = _train_config(config, seed)
    # the propensity fit may need stronger shrinkage than the classifier
    if "lambda" in causal_cfg:
        train_config = replace(train_config, lambda_=float(causal_cfg["lambda"]))
    try:
        scores = causal_mod.fit_propensity(covariates, labels, names, train_config)
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    strat_config = causal_mod.StratifyConfig(
        n_strata=int(causal_cfg.get("n_strata", 100)),
        trim_sd=float(causal_cfg.get("trim_sd", 2.0)),
        min_per_group=int(causal_cfg.get("min_per_group", 50)),
    )
    try:
        strat = causal_mod.stratify(scores, labels, strat_config, study_ids)
    except ValueError as exc:
        if "no overlap" in str(exc):
            print(_score_histogram(scores, labels), file=sys.stderr)
            raise DegeneracyError(str(exc)) from exc
        raise DataError(str(exc)) from exc

    x = np.vstack([c.as_array() for c in covariates])
    balance = causal_mod.balance_report(x, names, strat)
    causal_mod.write_balance_csv(balance, run_dir / "balance.csv")
    causal_mod.write_balance_json(balance, run_dir / "balance.json")
    causal_mod.write_audit_csv(strat, run_dir / "audit.csv")

    outcome_names = [str(o) for o in causal_cfg.get("outcomes", [])] or list(lexicon.names)
    unknown = [o for o in outcome_names if o not in lexicon.names]
    if unknown:
        raise UsageError(f"causal.outcomes not in lexicon: {unknown}")
    outcomes = {}
    for name in outcome_names:
        outcomes[name] = [
            causal_mod.OutcomeMeasurement(
                user_id=uid,
                outcome=name,
                s_before=causal_mod.outcome_proportion(pre_tokens[uid], lexicon, name),
                s_during=causal_mod.outcome_proportion(during_tokens[uid], lexicon, name),
            )
            for uid in study_ids
        ]
    study = causal_mod.CausalStudy(stratification=strat, outcomes=outcomes)
    try:
        estimates = causal_mod.effect_report(
            study, weighted=bool(causal_cfg.get("weighted_mean_te", False))
        )
    except ValueError as exc:
        raise DegeneracyError(str(exc)) from exc
    causal_mod.write_effects_csv(estimates, run_dir / "effects.csv")
    causal_mod.write_effects_json(estimates, run_dir / "effects.json")

    _write_manifest(run_dir, "causal", config_hash, seed, resolved, inputs)
    print(
        f"retained {len(strat.retained_strata)} strata, containing "
        f"{strat.retained_count(1)} minority and {strat.retained_count(0)} control users"
        + (f" ({missing} cohort ids lacked user records)" if missing else "")
    )
    print(
        f"balance: max |SMD| {balance.max_abs_before:.3f} before, "
        f"{balance.max_abs_within:.3f} within strata"
    )
    for e in estimates:
        print(
            f"  {e.outcome:<12} mean TE {e.mean_te:+.4f}  d {e.cohens_d:+.3f}  "
            f"p_adj {e.p_bonferroni:.3g} {e.stars}"
        )
    print(f"artifacts in {run_dir}")
    return 0


def cmd_synth(args) -> int:
    config, _ = _load_config(args.config)
    seed = _study_seed(args, config)
    synth_cfg = dict(_section(config, "synth"))
    for key in (
        "n_users",
        "posts_min",
        "posts_max",
        "n_labeled_posts",
        "delta",
        "category",
        "shift_strength",
        "confounder_strength",
    ):
        if getattr(args, key, None) is not None:
            synth_cfg[key] = getattr(args, key)
    allowed = {
        "n_users",
        "posts_min",
        "posts_max",
        "tokens_per_post",
        "n_labeled_posts",
        "shift_strength",
        "delta",
        "category",
        "confounder_strength",
    }
    unknown = set(synth_cfg) - allowed
    if unknown:
        raise UsageError(f"unknown [synth] keys: {sorted(unknown)}")
    try:
        spec = synth_mod.SyntheticSpec(seed=seed, **synth_cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid synth spec: {exc}") from exc
    resolved = {"command": "synth", "config": {"synth": synth_cfg}, "seed": seed}
    run_dir, config_hash = _run_dir(args.out, "synth", resolved)
    ground_truth = synth_mod.generate_study(spec, run_dir)
    _write_study_toml(run_dir, spec, ground_truth)
    _write_manifest(run_dir, "synth", config_hash, seed, resolved, {})
    print(
        f"synthetic study: {2 * spec.n_users} users, {ground_truth['n_posts']} posts, "
        f"{spec.n_labeled_posts} labeled posts, delta {spec.delta} on {spec.category!r}"
    )
    print(f"artifacts in {run_dir} (config: {run_dir / 'study.toml'})")
    return 0


def _toml_str(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _write_study_toml(run_dir: Path, spec, ground_truth: dict) -> None:
    """Config pointing at the generated files so the other commands run as-is.

    Stratification defaults assume thousands of users per group; the
    written config scales the stratum count and per-group minimum down
    to the bundle's actual size so the causal command retains strata.
    """
    root = run_dir.resolve()
    min_per_group = min(50, max(2, spec.n_users // 15))
    n_strata = min(100, max(10, (2 * spec.n_users) // 12))
    top_unigrams = min(500, max(10, spec.n_users // 4))
    keywords = ", ".join(_toml_str(k) for k in ground_truth["bio_keywords"])
    seed_tags = ", ".join(_toml_str(t) for t in ground_truth["seed_hashtags"])
    w = ground_truth["windows"]
    text = f"""[paths]
posts = {_toml_str(str(root / "posts.jsonl"))}
users = {_toml_str(str(root / "users.jsonl"))}
labeled = {_toml_str(str(root / "labeled.jsonl"))}
lexicon = {_toml_str(str(root / "lexicon.tsv"))}
embeddings = {_toml_str(str(root / "embeddings.txt"))}
positive = {_toml_str(str(root / "positive.txt"))}
negative = {_toml_str(str(root / "negative.txt"))}
minority_ids = {_toml_str(str(root / "minority.txt"))}
control_ids = {_toml_str(str(root / "control.txt"))}

[windows]
study_start = {_toml_str(w["study_start"])}
boundary = {_toml_str(w["boundary"])}
study_end = {_toml_str(w["study_end"])}

[cohort]
seed_hashtags = [{seed_tags}]
expand_top_k = 10
bio_keywords = [{keywords}]
max_follow = 5000
min_tweets = 200
max_tweets = 30000

[train]
folds = 10
vocab_size = 500
lambda = 0.01
max_iters = 2000
tree_max_depth = 10
tree_min_leaf = 5

[causal]
n_strata = {n_strata}
trim_sd = 2.0
min_per_group = {min_per_group}
top_unigrams = {top_unigrams}
lambda = 0.5

[study]
seed = {spec.seed}
"""
    with open(run_dir / "study.toml", "w", encoding="utf-8") as fh:
        fh.write(text)


_COMMANDS = {
    "cohort": cmd_cohort,
    "train-eval": cmd_train_eval,
    "importance-delta": cmd_importance_delta,
    "causal": cmd_causal,
    "synth": cmd_synth,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("minstress: a command is required (see --help)")
        if args.jobs < 1:
            raise UsageError("minstress: --jobs must be >= 1")
        return _COMMANDS[args.command](args)
    except (UsageError, DataError, DegeneracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
