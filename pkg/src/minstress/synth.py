"""Synthetic study generators with known planted effects.

Three levels of fidelity, trading realism for speed:

* :func:`generate_study` writes a full corpus bundle to disk (user and
  post dumps, labeled posts, lexicon, embeddings, sentiment lists,
  ground truth) whose token emissions carry the planted effects, so the
  whole pipeline can run end to end.
* :func:`generate_confounded_covariates` emits covariate vectors whose
  distribution differs by group through one latent activity index, for
  balance checks at scale.
* :func:`generate_outcome_study` emits covariates plus per-outcome
  before/during proportions with a planted shift on one outcome, for
  effect-recovery checks.

All generation is deterministic per seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .causal import CovariateVector, OutcomeMeasurement
from .corpus import Cohort, CohortLabel, format_timestamp, write_cohort

__all__ = [
    "SyntheticSpec",
    "SYNTH_WINDOW_START",
    "SYNTH_BOUNDARY",
    "SYNTH_WINDOW_END",
    "DEFAULT_BIO_KEYWORDS",
    "DEFAULT_SEED_HASHTAGS",
    "generate_labeled_corpus",
    "generate_study",
    "generate_confounded_covariates",
    "generate_outcome_study",
]

# study window: six months either side of a Dec 1 boundary (UTC epochs)
SYNTH_WINDOW_START = 1559347200.0  # 2019-06-01T00:00:00Z
SYNTH_BOUNDARY = 1575158400.0  # 2019-12-01T00:00:00Z
SYNTH_WINDOW_END = 1590969600.0  # 2020-06-01T00:00:00Z

DEFAULT_BIO_KEYWORDS = ("lgbtq", "queer", "nonbinary")
DEFAULT_SEED_HASHTAGS = ("pride",)
_MINORITY_TAGS = ("pride", "loveislove", "pridemonth")
_CONTROL_TAGS = ("sports", "weekend", "news")

# kept disjoint from every lexicon category word so category proportions
# track emission probabilities exactly
_COMMON_WORDS = (
    "the and you for that with this just have not was but all out get like "
    "day time good great happy love fun bad sad awful tired week home work "
    "coffee morning night new old really never always maybe today tomorrow "
    "friend people city game music rain sun train lunch dinner book movie "
    "still thanks feel know want need going made back over under little big "
    "best worst year month"
).split()

_POSITIVE_WORDS = ("good", "great", "happy", "love", "fun", "best")
_NEGATIVE_WORDS = ("bad", "sad", "awful", "tired", "worst")

_LEXICON_CATEGORIES: dict[str, tuple[str, ...]] = {
    "stress": ("stress*", "overwhelmed", "anxious", "pressure", "exhausted"),
    "social": ("talk*", "together", "community", "family", "meetup"),
    "cognition": ("think*", "wonder*", "realize", "understand", "certain"),
    "body": ("sleep*", "headache", "breath*", "aching", "fever"),
}
# concrete emission words per category; every one matches its pattern set
_CATEGORY_WORDS: dict[str, tuple[str, ...]] = {
    "stress": ("stress", "stressed", "stressful", "overwhelmed", "anxious", "pressure", "exhausted"),
    "social": ("talk", "talking", "together", "community", "family", "meetup"),
    "cognition": ("think", "thinking", "wondering", "realize", "understand", "certain"),
    "body": ("sleep", "sleeping", "headache", "breathing", "aching", "fever"),
}
_BASE_CATEGORY_PROB = {"stress": 0.05, "social": 0.04, "cognition": 0.03, "body": 0.03}

_SIGNAL_TOKENS = ("vexhollow", "vexworn", "vexlone")
_DECOY_TOKENS = ("zorbright", "zorcalm", "zoreven")

_EMBED_DIM = 16


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for the on-disk study generator.

    delta is the additive during-period emission-probability shift of
    the planted category's words for minority users, so the ground
    truth is directly comparable to a measured proportion change.
    """

    n_users: int = 150
    posts_min: int = 20
    posts_max: int = 40
    tokens_per_post: int = 18
    n_labeled_posts: int = 2000
    shift_tokens: tuple[str, ...] = _SIGNAL_TOKENS
    shift_strength: float = 0.6
    delta: float = 0.3
    category: str = "stress"
    confounder_strength: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 0:
            raise ValueError("n_users must be >= 0")
        if not (0 < self.posts_min <= self.posts_max):
            raise ValueError("posts range must satisfy 0 < min <= max")
        if self.tokens_per_post < 4:
            raise ValueError("tokens_per_post must be >= 4")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if self.category not in _LEXICON_CATEGORIES:
            raise ValueError(f"category must be one of {sorted(_LEXICON_CATEGORIES)}")
        if not (0.0 <= self.shift_strength <= 1.0):
            raise ValueError("shift_strength must lie in [0, 1]")
        base = _BASE_CATEGORY_PROB[self.category]
        if not (0.0 <= base + self.delta <= 0.9):
            raise ValueError("delta pushes category emission outside [0, 0.9]")


def _zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / (np.arange(n) + 2.0)
    return w / w.sum()


_COMMON_CUMWEIGHTS = np.cumsum(_zipf_weights(len(_COMMON_WORDS)))


def _emit_tokens(
    rng: np.random.Generator,
    n_tokens: int,
    category_probs: dict[str, float],
) -> list[str]:
    names = sorted(category_probs)
    edges = np.cumsum([category_probs[c] for c in names])
    tokens = []
    rolls = rng.random((n_tokens, 2))
    for cat_roll, word_roll in rolls:
        slot = int(np.searchsorted(edges, cat_roll, side="right"))
        if slot >= len(names):
            idx = int(np.searchsorted(_COMMON_CUMWEIGHTS, word_roll, side="right"))
            word = _COMMON_WORDS[min(idx, len(_COMMON_WORDS) - 1)]
        else:
            words = _CATEGORY_WORDS[names[slot]]
            word = words[int(word_roll * len(words))]
        tokens.append(word)
    return tokens


def generate_labeled_corpus(
    n_posts: int,
    shift_tokens: Sequence[str] = _SIGNAL_TOKENS,
    decoy_tokens: Sequence[str] = _DECOY_TOKENS,
    shift_strength: float = 0.6,
    tokens_per_post: int = 18,
    seed: int = 0,
) -> list[tuple[str, str, int]]:
    """(post_id, text, label) rows with a vocabulary-only class signal.

    Class 1 posts carry each shift token independently with probability
    shift_strength; class 0 posts carry decoy tokens at the same rate,
    so groups differ in which rare tokens appear but not in length,
    category usage, or sentiment.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_posts):
        label = i % 2
        tokens = _emit_tokens(rng, tokens_per_post, _BASE_CATEGORY_PROB)
        planted = shift_tokens if label == 1 else decoy_tokens
        for tok in planted:
            if rng.random() < shift_strength:
                pos = int(rng.integers(len(tokens)))
                tokens[pos] = tok
        if rng.random() < 0.1:
            tokens.append("https://t.co/" + "".join(rng.choice(list("abcdef0123456789"), 8)))
        rows.append((f"p{i:05d}", " ".join(tokens), label))
    return rows


def _user_metadata(rng: np.random.Generator, minority: bool, confounder: float):
    shift = confounder * 0.6 if minority else 0.0
    n_tweets = int(np.clip(np.exp(rng.normal(7.6 + shift, 0.5)), 10, 80000))
    n_likes = int(np.clip(np.exp(rng.normal(6.5 + shift, 0.8)), 0, 500000))
    n_followers = int(np.clip(np.exp(rng.normal(5.5 + shift, 1.0)), 0, 200000))
    n_followees = int(np.clip(np.exp(rng.normal(5.8 + shift * 0.5, 0.7)), 0, 200000))
    created_at = SYNTH_BOUNDARY - float(rng.uniform(400, 3600)) * 86400.0
    return n_tweets, n_likes, n_followers, n_followees, created_at


def _bio(rng: np.random.Generator, minority: bool) -> str:
    if minority:
        keyword = DEFAULT_BIO_KEYWORDS[int(rng.integers(len(DEFAULT_BIO_KEYWORDS)))]
        tails = ("she/her \U0001f3f3️‍\U0001f308", "they/them", "he/him")
        tail = tails[int(rng.integers(len(tails)))]
        return f"proud {keyword} advocate. {tail}. coffee and rain."
    hobbies = ("hiker", "runner", "gamer", "reader", "baker")
    hobby = hobbies[int(rng.integers(len(hobbies)))]
    return f"weekend {hobby}. coffee enthusiast. opinions mine."


def _post_times(rng: np.random.Generator, n_posts: int) -> list[tuple[float, bool]]:
    out = []
    for _ in range(n_posts):
        if rng.random() < 0.45:
            t = float(rng.uniform(SYNTH_WINDOW_START, SYNTH_BOUNDARY))
            out.append((t, False))
        else:
            t = float(rng.uniform(SYNTH_BOUNDARY, SYNTH_WINDOW_END))
            out.append((t, True))
    return out


def _hashtags(rng: np.random.Generator, minority: bool) -> list[str]:
    # both groups emit both tag families: rates differ but never hit
    # zero, so no single hashtag separates the groups outright and the
    # propensity model keeps common support
    if minority:
        rates = ((_MINORITY_TAGS, (0.25, 0.12, 0.10)), (_CONTROL_TAGS, (0.08, 0.06, 0.04)))
    else:
        rates = ((_MINORITY_TAGS, (0.05, 0.02, 0.02)), (_CONTROL_TAGS, (0.12, 0.08, 0.05)))
    tags = []
    for pool, pool_rates in rates:
        for tag, rate in zip(pool, pool_rates):
            if rng.random() < rate:
                tags.append("#" + tag)
    return tags


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def generate_study(spec: SyntheticSpec, out_dir) -> dict:
    """Write the full synthetic bundle; returns ground truth and paths.

    Files: users.jsonl, posts.jsonl, labeled.jsonl, lexicon.tsv,
    embeddings.txt, positive.txt, negative.txt, minority.txt,
    control.txt, groundtruth.json.
    Minority users' during-window posts emit the planted category's
    words with probability raised by delta; both groups share a small
    background trend so a plain before/after contrast is biased.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    users = []
    posts = []
    post_counter = 0
    shared_trend = 0.01
    for group, prefix in ((1, "m"), (0, "c")):
        for i in range(spec.n_users):
            uid = f"{prefix}{i:05d}"
            minority = group == 1
            n_tweets, n_likes, n_followers, n_followees, created_at = _user_metadata(
                rng, minority, spec.confounder_strength
            )
            # a thin slice of users violates the activity filters on purpose
            if rng.random() < 0.02:
                n_tweets = int(rng.choice([50, 80000]))
            users.append(
                {
                    "id": uid,
                    "bio": _bio(rng, minority),
                    "tweets": n_tweets,
                    "likes": n_likes,
                    "followers": n_followers,
                    "followees": n_followees,
                    "created_at": format_timestamp(created_at),
                }
            )
            n_posts = int(rng.integers(spec.posts_min, spec.posts_max + 1))
            for t, during in _post_times(rng, n_posts):
                probs = dict(_BASE_CATEGORY_PROB)
                if during:
                    probs[spec.category] = probs[spec.category] + shared_trend
                    if minority:
                        probs[spec.category] += spec.delta
                tokens = _emit_tokens(rng, spec.tokens_per_post, probs)
                tokens.extend(_hashtags(rng, minority))
                if rng.random() < 0.08:
                    tokens.append(
                        "https://t.co/" + "".join(rng.choice(list("abcdef0123456789"), 8))
                    )
                posts.append(
                    {
                        "id": f"t{post_counter:07d}",
                        "author_id": uid,
                        "created_at": format_timestamp(t),
                        "text": " ".join(tokens),
                    }
                )
                post_counter += 1

    labeled = generate_labeled_corpus(
        spec.n_labeled_posts,
        spec.shift_tokens,
        _DECOY_TOKENS,
        spec.shift_strength,
        spec.tokens_per_post,
        seed=spec.seed + 1,
    )

    _write_jsonl(out / "users.jsonl", users)
    _write_jsonl(out / "posts.jsonl", posts)
    with open(out / "labeled.jsonl", "w", encoding="utf-8") as fh:
        for post_id, text, label in labeled:
            fh.write(json.dumps({"id": post_id, "text": text, "label": label}, sort_keys=True) + "\n")

    with open(out / "lexicon.tsv", "w", encoding="utf-8") as fh:
        for name in sorted(_LEXICON_CATEGORIES):
            for pattern in _LEXICON_CATEGORIES[name]:
                fh.write(f"{name}\t{pattern}\n")

    emb_rng = np.random.default_rng(spec.seed + 2)
    emb_vocab = sorted(
        set(_COMMON_WORDS) | {w for ws in _CATEGORY_WORDS.values() for w in ws}
    )
    with open(out / "embeddings.txt", "w", encoding="utf-8") as fh:
        for word in emb_vocab:
            vec = emb_rng.normal(0.0, 1.0, _EMBED_DIM)
            fh.write(word + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")

    with open(out / "positive.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(_POSITIVE_WORDS) + "\n")
    with open(out / "negative.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(_NEGATIVE_WORDS) + "\n")

    # ground-truth cohorts, so the causal pipeline can run on the bundle
    # without first rebuilding membership from bios and hashtags
    minority_ids = frozenset(u["id"] for u in users if u["id"].startswith("m"))
    control_ids = frozenset(u["id"] for u in users if u["id"].startswith("c"))
    write_cohort(
        Cohort(label=CohortLabel.MINORITY, user_ids=minority_ids), out / "minority.txt"
    )
    write_cohort(
        Cohort(label=CohortLabel.CONTROL, user_ids=control_ids), out / "control.txt"
    )

    ground_truth = {
        "seed": spec.seed,
        "delta": spec.delta,
        "category": spec.category,
        "shared_trend": shared_trend,
        "shift_tokens": list(spec.shift_tokens),
        "decoy_tokens": list(_DECOY_TOKENS),
        "shift_strength": spec.shift_strength,
        "confounder_strength": spec.confounder_strength,
        "n_users_per_group": spec.n_users,
        "n_posts": post_counter,
        "n_labeled_posts": spec.n_labeled_posts,
        "bio_keywords": list(DEFAULT_BIO_KEYWORDS),
        "seed_hashtags": list(DEFAULT_SEED_HASHTAGS),
        "windows": {
            "study_start": format_timestamp(SYNTH_WINDOW_START),
            "boundary": format_timestamp(SYNTH_BOUNDARY),
            "study_end": format_timestamp(SYNTH_WINDOW_END),
        },
    }
    with open(out / "groundtruth.json", "w", encoding="utf-8") as fh:
        json.dump(ground_truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ground_truth


_N_UNI_COVS = 5
_N_LEX_COVS = 3


def _latent_covariates(rng: np.random.Generator, u: float) -> CovariateVector:
    """Covariates driven by one latent activity index plus noise."""
    social = np.array(
        [
            np.exp(7.5 + 0.5 * u + rng.normal(0.0, 0.35)),
            np.exp(6.4 + 0.6 * u + rng.normal(0.0, 0.45)),
            np.exp(5.5 + 0.7 * u + rng.normal(0.0, 0.5)),
            np.exp(5.8 + 0.4 * u + rng.normal(0.0, 0.4)),
            2000.0 + 300.0 * u + rng.normal(0.0, 150.0),
            np.exp(1.0 + 0.3 * u + rng.normal(0.0, 0.3)),
        ]
    )
    uni = 1.0 / (1.0 + np.exp(-(0.8 * u + rng.normal(0.0, 0.6, _N_UNI_COVS))))
    uni = np.clip(uni * 0.05, 0.0, 1.0)
    lex = 1.0 / (1.0 + np.exp(-(0.6 * u + rng.normal(0.0, 0.7, _N_LEX_COVS))))
    lex = np.clip(lex * 0.08, 0.0, 1.0)
    read = np.array(
        [
            60.0 + 8.0 * u + rng.normal(0.0, 6.0),
            8.0 - 1.5 * u + rng.normal(0.0, 1.2),
            4.2 + 0.3 * u + rng.normal(0.0, 0.25),
            12.0 + 2.0 * u + rng.normal(0.0, 1.5),
        ]
    )
    return CovariateVector(social=social, unigram_dist=uni, lexicon_dist=lex, readability=read)


def generate_confounded_covariates(
    n_users: int, seed: int = 0, confounder_strength: float = 0.8
) -> tuple[list[CovariateVector], np.ndarray, tuple[str, ...]]:
    """Users whose group membership and covariates share a latent index.

    Group is Bernoulli(sigmoid(confounder_strength * u)), so the raw
    populations are imbalanced on every covariate, while stratifying on
    a fitted propensity score balances them.
    """
    if n_users < 4:
        raise ValueError("n_users must be >= 4")
    rng = np.random.default_rng(seed)
    covariates = []
    groups = np.empty(n_users, dtype=np.int64)
    for i in range(n_users):
        u = float(rng.normal())
        p = 1.0 / (1.0 + math.exp(-confounder_strength * u))
        groups[i] = 1 if rng.random() < p else 0
        covariates.append(_latent_covariates(rng, u))
    user_ids = tuple(f"u{i:06d}" for i in range(n_users))
    return covariates, groups, user_ids


def generate_outcome_study(
    n_per_group: int,
    delta: float = 0.5,
    planted_outcome: str = "stress",
    null_outcomes: Sequence[str] = (),
    seed: int = 0,
    confounder_strength: float = 0.5,
) -> tuple[list[CovariateVector], np.ndarray, tuple[str, ...], dict[str, list[OutcomeMeasurement]]]:
    """Covariates plus before/during outcome proportions with one planted shift.

    The planted outcome's during value rises by delta for minority
    users; null outcomes change by pure noise. Baselines depend on the
    same latent index that drives group membership, so unadjusted
    level comparisons are biased while pre/during changes are clean.
    """
    if n_per_group < 2:
        raise ValueError("n_per_group must be >= 2")
    rng = np.random.default_rng(seed)
    n = 2 * n_per_group
    groups = np.array([1] * n_per_group + [0] * n_per_group, dtype=np.int64)
    latent = np.empty(n)
    covariates = []
    for i in range(n):
        # minority users sit higher on the latent index: confounding
        u = float(rng.normal(confounder_strength * (0.5 if groups[i] == 1 else -0.5), 1.0))
        latent[i] = u
        covariates.append(_latent_covariates(rng, u))
    user_ids = tuple(
        (f"m{i:06d}" if groups[i] == 1 else f"c{i:06d}") for i in range(n)
    )
    outcomes: dict[str, list[OutcomeMeasurement]] = {}
    for name in [planted_outcome] + list(null_outcomes):
        planted = name == planted_outcome
        ms = []
        for i in range(n):
            base = 0.15 + 0.04 / (1.0 + math.exp(-latent[i])) + rng.normal(0.0, 0.03)
            base = float(np.clip(base, 0.01, 0.45))
            shift = rng.normal(0.0, 0.03)
            if planted and groups[i] == 1:
                shift += delta
            during = float(np.clip(base + shift, 0.0, 1.0))
            ms.append(
                OutcomeMeasurement(
                    user_id=user_ids[i], outcome=name, s_before=base, s_during=during
                )
            )
        outcomes[name] = ms
    return covariates, groups, user_ids, outcomes
