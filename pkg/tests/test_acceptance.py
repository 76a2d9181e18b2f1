"""Acceptance gate: nine end-to-end behavioral criteria.

Each test prints one PASS/FAIL line (visible even under capture) with
the measured margin and runtime, then asserts. Tolerances and time
budgets are part of the contract, not implementation details.
"""

import json
import math
import time

import numpy as np
import pytest

from minstress.causal import (
    CausalStudy,
    StratifyConfig,
    balance_report,
    cohens_d,
    covariate_names,
    effect_report,
    fit_propensity,
    mean_te,
    stratify,
    stratum_te,
    welch_t,
)
from minstress.cli import main as cli_main
from minstress.corpus import strip_urls
from minstress.evaluation import (
    ablation_text,
    auc,
    cohen_kappa,
    cross_validate_text,
    evaluate,
    kfold_split,
)
from minstress.featurize import (
    FeaturizerConfig,
    load_embeddings,
    load_lexicon,
    load_wordlist,
    tokenize,
)
from minstress.models import (
    Dataset,
    TrainConfig,
    logistic_gradient,
    logistic_loss,
    train_model,
)
from minstress.causal import OutcomeMeasurement
from minstress.synth import (
    SyntheticSpec,
    generate_confounded_covariates,
    generate_labeled_corpus,
    generate_outcome_study,
    generate_study,
)


def _announce(capsys, number, ok, detail, elapsed):
    status = "PASS" if ok else "FAIL"
    with capsys.disabled():
        print(f"criterion {number}: {status} - {detail} [{elapsed:.1f}s]")
    assert ok, f"criterion {number}: {detail}"


def test_criterion_1_baseline_row(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    y = np.r_[np.ones(461), np.zeros(539)].astype(np.int64)
    rng.shuffle(y)
    data = Dataset(np.zeros((1000, 1)), y, ("f0",))
    model = train_model("dummy", data, TrainConfig())
    scores = np.atleast_1d(model.predict_proba(data.x))
    m, _ = evaluate(y, scores)
    targets = {
        "precision": 0.269,
        "recall": 0.500,
        "f1": 0.350,
        "accuracy": 0.539,
        "auc": 0.500,
    }
    devs = {k: abs(getattr(m, k) - v) for k, v in targets.items()}
    elapsed = time.perf_counter() - start
    ok = max(devs.values()) <= 1e-3 and elapsed < 1.0
    _announce(
        capsys, 1, ok, f"baseline row max deviation {max(devs.values()):.2e}", elapsed
    )


def test_criterion_2_auc_oracle(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    grid = np.array([0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95])
    worst = 0.0
    instances = 0
    while instances < 220:
        n = int(rng.integers(2, 51))
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        if instances % 2 == 0:
            scores = rng.choice(grid, size=n)
        else:
            scores = rng.random(n)
            for _ in range(max(1, n // 4)):
                i, j = rng.integers(0, n, 2)
                scores[i] = scores[j]
        got = auc(y, scores)
        pos = scores[y == 1]
        neg = scores[y == 0]
        wins = 0.0
        for p in pos:
            for q in neg:
                if p > q:
                    wins += 1.0
                elif p == q:
                    wins += 0.5
        want = wins / (pos.size * neg.size)
        worst = max(worst, abs(got - want))
        instances += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 5.0
    _announce(capsys, 2, ok, f"{instances} instances, worst |rank - pairs| {worst:.2e}", elapsed)


def test_criterion_3_gradient_check(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(5, 41))
        p = int(rng.integers(1, 7))
        x = rng.normal(size=(n, p))
        y = rng.integers(0, 2, n).astype(np.float64)
        w = rng.normal(size=p)
        b = float(rng.normal())
        lam = (0.0, 0.01, 1.0)[i % 3]
        gw, gb = logistic_gradient(w, b, x, y, lam)
        numeric = np.empty(p + 1)
        for j in range(p):
            h = 1e-6 * max(1.0, abs(w[j]))
            wp, wm = w.copy(), w.copy()
            wp[j] += h
            wm[j] -= h
            numeric[j] = (logistic_loss(wp, b, x, y, lam) - logistic_loss(wm, b, x, y, lam)) / (2 * h)
        h = 1e-6 * max(1.0, abs(b))
        numeric[p] = (logistic_loss(w, b + h, x, y, lam) - logistic_loss(w, b - h, x, y, lam)) / (2 * h)
        analytic = np.r_[gw, gb]
        rel = float(
            np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
        )
        worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 5.0
    _announce(capsys, 3, ok, f"50 instances, worst relative error {worst:.2e}", elapsed)


def test_criterion_4_classifier_signal(capsys, tmp_path):
    start = time.perf_counter()
    spec = SyntheticSpec(n_users=4, posts_min=2, posts_max=3, n_labeled_posts=10, seed=0)
    generate_study(spec, tmp_path)
    feat_config = FeaturizerConfig(
        lexicon=load_lexicon(tmp_path / "lexicon.tsv"),
        table=load_embeddings(tmp_path / "embeddings.txt"),
        pos_lexicon=load_wordlist(tmp_path / "positive.txt"),
        neg_lexicon=load_wordlist(tmp_path / "negative.txt"),
        vocab_size=500,
    )
    rows = generate_labeled_corpus(2000, seed=0)
    token_lists = [tokenize(strip_urls(text)) for _, text, _ in rows]
    labels = np.array([label for _, _, label in rows], dtype=np.int64)
    plan = kfold_split(labels, 10, seed=0)
    config = TrainConfig(seed=0)
    cv = cross_validate_text(["dummy", "logistic"], token_lists, labels, plan, feat_config, config)
    logistic_auc = cv["logistic"].mean.auc
    dummy_auc = cv["dummy"].mean.auc
    ab = ablation_text(token_lists, labels, plan, feat_config, config, kind="logistic")
    drop = ab["full"].mean.auc - ab["-ngrams"].mean.auc
    elapsed = time.perf_counter() - start
    ok = (
        logistic_auc >= 0.95
        and logistic_auc - dummy_auc >= 0.40
        and drop >= 0.2
        and elapsed < 60.0
    )
    _announce(
        capsys,
        4,
        ok,
        f"logistic auc {logistic_auc:.3f}, dummy gap {logistic_auc - dummy_auc:.3f}, "
        f"ngram ablation drop {drop:.3f}",
        elapsed,
    )


def _naive_group_mean(ids, by_id):
    total = 0.0
    for uid in sorted(ids):
        m = by_id[uid]
        total += m.s_during - m.s_before
    return total / len(ids)


def test_criterion_5_te_accumulation_oracle(capsys):
    start = time.perf_counter()
    te_matches = 0
    mean_matches = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(20, 61))
        ids = [f"{rng.integers(0, 16**6):06x}-{i}" for i in range(n)]
        groups = rng.integers(0, 2, n)
        groups[:2] = [0, 1]
        measurements = []
        for uid in ids:
            before, during = rng.random(2)
            measurements.append(
                OutcomeMeasurement(
                    user_id=uid, outcome="o", s_before=float(before), s_during=float(during)
                )
            )
        by_id = {m.user_id: m for m in measurements}
        minority = [uid for uid, g in zip(ids, groups) if g == 1]
        control = [uid for uid, g in zip(ids, groups) if g == 0]
        want = _naive_group_mean(minority, by_id) - _naive_group_mean(control, by_id)
        if stratum_te(measurements, minority, control) == want:
            te_matches += 1

        scores = rng.random(n)
        config = StratifyConfig(
            n_strata=int(rng.integers(2, 9)), trim_sd=3.0, min_per_group=1
        )
        strat = stratify(scores, groups, config, ids)
        total = 0.0
        for k in strat.retained_strata:
            stratum_minority = [
                ids[i]
                for i in range(n)
                if strat.status[i] == "retained" and strat.strata[i] == k and groups[i] == 1
            ]
            stratum_control = [
                ids[i]
                for i in range(n)
                if strat.status[i] == "retained" and strat.strata[i] == k and groups[i] == 0
            ]
            total += _naive_group_mean(stratum_minority, by_id) - _naive_group_mean(
                stratum_control, by_id
            )
        want_mean = total / len(strat.retained_strata)
        if mean_te(strat, measurements) == want_mean:
            mean_matches += 1
    elapsed = time.perf_counter() - start
    ok = te_matches == 100 and mean_matches == 100 and elapsed < 5.0
    _announce(
        capsys,
        5,
        ok,
        f"bitwise equality on {te_matches}/100 stratum and {mean_matches}/100 mean fixtures",
        elapsed,
    )


def test_criterion_6_balance_property(capsys):
    start = time.perf_counter()
    names = covariate_names([f"w{i}" for i in range(5)], [f"cat{i}" for i in range(3)])
    passes = 0
    worst = 0.0
    for seed in range(20):
        covs, groups, ids = generate_confounded_covariates(
            10000, seed=seed, confounder_strength=0.8
        )
        scores = fit_propensity(covs, groups, names)
        strat = stratify(scores, groups, StratifyConfig(), ids)
        x = np.vstack([c.as_array() for c in covs])
        report = balance_report(x, names, strat)
        value = report.max_abs_within
        worst = max(worst, value)
        if value < 0.2:
            passes += 1
    elapsed = time.perf_counter() - start
    ok = passes >= 19 and elapsed < 120.0
    _announce(
        capsys,
        6,
        ok,
        f"{passes}/20 seeds balanced, worst within-strata max |SMD| {worst:.3f}",
        elapsed,
    )


def test_criterion_7_effect_recovery(capsys):
    start = time.perf_counter()
    nulls = tuple(f"null{i}" for i in range(9))

    def run_study(seed, delta):
        covs, groups, ids, outcomes = generate_outcome_study(
            3000, delta=delta, null_outcomes=nulls, seed=seed, confounder_strength=0.5
        )
        scores = fit_propensity(covs, groups)
        strat = stratify(scores, groups, StratifyConfig(), ids)
        study = CausalStudy(stratification=strat, outcomes=outcomes)
        return effect_report(study)

    recovered = 0
    for seed in range(20):
        report = {e.outcome: e for e in run_study(seed, 0.5)}
        planted = report["stress"]
        others_clean = all(
            report[name].p_bonferroni >= 0.05 for name in nulls
        )
        if (
            planted.p_bonferroni < 0.05
            and abs(planted.mean_te - 0.5) <= 0.1
            and others_clean
        ):
            recovered += 1

    clean = 0
    for seed in range(100, 120):
        report = run_study(seed, 0.0)
        if all(e.p_bonferroni >= 0.05 for e in report):
            clean += 1
    elapsed = time.perf_counter() - start
    ok = recovered >= 18 and clean >= 18 and elapsed < 120.0
    _announce(
        capsys,
        7,
        ok,
        f"planted delta recovered in {recovered}/20 seeds, null studies clean in {clean}/20",
        elapsed,
    )


def test_criterion_8_statistics_oracles(capsys):
    start = time.perf_counter()
    t, df, p = welch_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0, 4.0, 5.0])
    welch_dev = max(
        abs(t - (-1.0954451150103324)),
        abs(df - 5.882352941176469),
        abs(p - 0.3161334219263932),
    )
    kappa_dev = max(
        abs(cohen_kappa([1, 1, 0, 0, 1], [1, 0, 0, 0, 1]) - 8.0 / 13.0),
        abs(cohen_kappa([0, 1, 0, 1], [0, 1, 0, 1]) - 1.0),
        abs(cohen_kappa([0, 0, 1, 1], [1, 1, 0, 0]) - (-1.0)),
    )
    d_dev = abs(cohens_d([1.0, 2.0, 3.0], [0.0, 1.0, 2.0]) - 1.0)
    elapsed = time.perf_counter() - start
    ok = welch_dev < 1e-6 and kappa_dev < 1e-6 and d_dev < 1e-12
    _announce(
        capsys,
        8,
        ok,
        f"welch dev {welch_dev:.1e}, kappa dev {kappa_dev:.1e}, cohens_d dev {d_dev:.1e}",
        elapsed,
    )


def test_criterion_9_cli_determinism(capsys, tmp_path):
    start = time.perf_counter()
    out = tmp_path / "synth"
    rc = cli_main(
        [
            "synth",
            "--out",
            str(out),
            "--n-users",
            "30",
            "--posts-min",
            "8",
            "--posts-max",
            "12",
            "--n-labeled-posts",
            "120",
            "--seed",
            "0",
        ]
    )
    assert rc == 0
    config = next(out.glob("synth-*")) / "study.toml"

    def run_twice(command):
        contents = []
        for rep in ("a", "b"):
            root = tmp_path / f"{command}-{rep}"
            assert cli_main([command, "--config", str(config), "--out", str(root)]) == 0
            run_dir = next(root.glob(f"{command}-*"))
            contents.append(
                {p.name: p.read_bytes() for p in sorted(run_dir.iterdir()) if p.is_file()}
            )
        return contents[0] == contents[1], len(contents[0])

    te_same, te_files = run_twice("train-eval")
    causal_same, causal_files = run_twice("causal")
    elapsed = time.perf_counter() - start
    ok = te_same and causal_same
    _announce(
        capsys,
        9,
        ok,
        f"train-eval ({te_files} files) and causal ({causal_files} files) reruns bitwise identical",
        elapsed,
    )
