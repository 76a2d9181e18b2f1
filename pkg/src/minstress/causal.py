"""Stratified propensity-score estimation of pre/during usage shifts.

Pipeline: build pre-period covariates per user, fit a propensity model
for minority-group membership, cut scores into 100 equal-width strata
with trimming and minimum-group-size filtering, check covariate balance
via standardized mean differences, then estimate per-outcome treatment
effects as the between-group difference of mean (during - before)
changes, averaged over retained strata.
"""

from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Timeline, UserRecord
from .featurize import CategoryLexicon, count_lexicon, tokenize
from .models import Dataset, TrainConfig, train_logistic

__all__ = [
    "CovariateVector",
    "covariate_names",
    "build_covariates",
    "readability",
    "count_syllables",
    "fit_propensity",
    "StratifyConfig",
    "Stratification",
    "stratify",
    "smd",
    "BalanceReport",
    "balance_report",
    "OutcomeMeasurement",
    "outcome_proportion",
    "stratum_te",
    "stratum_effects",
    "mean_te",
    "cohens_d",
    "welch_t",
    "bonferroni",
    "significance_stars",
    "EffectEstimate",
    "CausalStudy",
    "effect_report",
    "write_balance_csv",
    "write_balance_json",
    "write_effects_csv",
    "write_effects_json",
    "write_audit_csv",
]

SOCIAL_NAMES = (
    "n_tweets",
    "n_likes",
    "n_followers",
    "n_followees",
    "account_age_days",
    "posting_freq_per_day",
)
READABILITY_NAMES = (
    "flesch_reading_ease",
    "flesch_kincaid_grade",
    "mean_word_chars",
    "mean_sentence_tokens",
)

_WORD_RE = re.compile(r"[a-z0-9']+")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]+")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


@dataclass(frozen=True)
class CovariateVector:
    """Pre-boundary matching covariates for one user.

    Blocks: 6 social-profile numbers, relative frequencies of the
    study-wide top unigrams, per-lexicon-category proportions, and 4
    readability numbers. ``as_array`` concatenates them in that order.
    """

    social: np.ndarray
    unigram_dist: np.ndarray
    lexicon_dist: np.ndarray
    readability: np.ndarray

    def __post_init__(self):
        for name in ("social", "unigram_dist", "lexicon_dist", "readability"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        if self.social.shape != (6,):
            raise ValueError("social block must have 6 entries")
        if self.readability.shape != (4,):
            raise ValueError("readability block must have 4 entries")
        for name in ("unigram_dist", "lexicon_dist"):
            arr = getattr(self, name)
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
                raise ValueError(f"{name} entries must lie in [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [self.social, self.unigram_dist, self.lexicon_dist, self.readability]
        )


def covariate_names(
    top_unigrams: Sequence[str], lexicon_names: Sequence[str]
) -> tuple[str, ...]:
    names = list(SOCIAL_NAMES)
    names += [f"uni:{w}" for w in top_unigrams]
    names += [f"lex:{c}" for c in lexicon_names]
    names += list(READABILITY_NAMES)
    return tuple(names)


def count_syllables(word: str) -> int:
    """Vowel-group count with a silent trailing 'e' dropped, floored at 1."""
    w = word.lower()
    if w.endswith("e"):
        w = w[:-1]
    groups = _VOWEL_GROUP_RE.findall(w)
    return max(1, len(groups))


def readability(text: str) -> tuple[float, float, float, float]:
    """Flesch reading ease, Flesch-Kincaid grade, mean word chars, mean sentence tokens.

    Words are lowercase alphanumeric/apostrophe runs; sentences split on
    runs of ``.!?`` and count only if they contain a word. Empty or
    wordless text returns all zeros by convention.
    """
    words = _WORD_RE.findall(text.lower())
    if not words:
        return (0.0, 0.0, 0.0, 0.0)
    sentences = sum(
        1 for seg in _SENTENCE_SPLIT_RE.split(text.lower()) if _WORD_RE.search(seg)
    )
    sentences = max(1, sentences)
    n_words = len(words)
    syllables = sum(count_syllables(w) for w in words)
    words_per_sentence = n_words / sentences
    syllables_per_word = syllables / n_words
    ease = 206.835 - 1.015 * words_per_sentence - 84.6 * syllables_per_word
    grade = 0.39 * words_per_sentence + 11.8 * syllables_per_word - 15.59
    mean_chars = sum(len(w) for w in words) / n_words
    return (ease, grade, mean_chars, words_per_sentence)


def build_covariates(
    user: UserRecord,
    pre_timeline: Timeline,
    top_unigrams: Sequence[str],
    lexicon: CategoryLexicon,
    boundary: float,
) -> CovariateVector:
    """Matching covariates from profile metadata and pre-boundary posts.

    posting_freq is pre-period post count divided by the first-to-last
    post span in days, floored at one day. An empty pre-timeline zeroes
    every text-derived block and leaves only profile metadata.
    """
    posts = pre_timeline.posts
    if posts:
        span_days = max(1.0, (posts[-1].timestamp - posts[0].timestamp) / 86400.0)
        posting_freq = len(posts) / span_days
    else:
        posting_freq = 0.0
    account_age_days = (boundary - user.created_at) / 86400.0
    social = np.array(
        [
            user.n_tweets,
            user.n_likes,
            user.n_followers,
            user.n_followees,
            account_age_days,
            posting_freq,
        ],
        dtype=np.float64,
    )
    tokens: list[str] = []
    for post in posts:
        tokens.extend(tokenize(post.text))
    if tokens:
        total = len(tokens)
        counts = Counter(tokens)
        unigram_dist = np.array(
            [counts.get(w, 0) / total for w in top_unigrams], dtype=np.float64
        )
        lex = count_lexicon(tokens, lexicon)
        lexicon_dist = np.array([lex[c] for c in lexicon.names], dtype=np.float64)
        joined = "\n".join(post.text for post in posts)
        read = np.array(readability(joined), dtype=np.float64)
    else:
        unigram_dist = np.zeros(len(top_unigrams))
        lexicon_dist = np.zeros(len(lexicon.names))
        read = np.zeros(4)
    return CovariateVector(
        social=social,
        unigram_dist=unigram_dist,
        lexicon_dist=lexicon_dist,
        readability=read,
    )


def fit_propensity(
    covariates: Sequence[CovariateVector],
    group_labels: Sequence[int],
    names: Sequence[str] | None = None,
    config: TrainConfig = TrainConfig(),
) -> np.ndarray:
    """Probability of minority-group membership from matching covariates.

    Trains the in-package logistic model (minority = 1); scores are its
    predicted probabilities on the same users.
    """
    if not covariates:
        raise ValueError("no covariates given")
    x = np.vstack([c.as_array() for c in covariates])
    if names is None:
        names = tuple(f"cov_{i}" for i in range(x.shape[1]))
    data = Dataset(x, np.asarray(group_labels, dtype=np.int64), tuple(names))
    model = train_logistic(data, config)
    return np.atleast_1d(model.predict_proba(x))


@dataclass(frozen=True)
class StratifyConfig:
    n_strata: int = 100
    trim_sd: float = 2.0
    min_per_group: int = 50

    def __post_init__(self):
        if self.n_strata < 1:
            raise ValueError("n_strata must be >= 1")
        if self.trim_sd <= 0:
            raise ValueError("trim_sd must be positive")
        if self.min_per_group < 1:
            raise ValueError("min_per_group must be >= 1")


STATUS_RETAINED = "retained"
STATUS_TRIMMED = "trimmed"
STATUS_DROPPED = "dropped_stratum"


@dataclass(frozen=True)
class Stratification:
    """Per-user stratum assignment plus which strata survived filtering.

    ``status`` is one of retained / trimmed / dropped_stratum per user;
    only retained users feed balance checks and effect estimates.
    """

    user_ids: tuple[str, ...]
    scores: np.ndarray
    groups: np.ndarray
    strata: np.ndarray
    status: tuple[str, ...]
    retained_strata: tuple[int, ...]
    trim_lo: float
    trim_hi: float
    config: StratifyConfig

    @property
    def retained_mask(self) -> np.ndarray:
        return np.asarray([s == STATUS_RETAINED for s in self.status])

    def retained_count(self, group: int) -> int:
        return int(np.sum(self.retained_mask & (self.groups == group)))

    def members(self, stratum: int, group: int) -> np.ndarray:
        """Indices of retained users of one group in one stratum."""
        return np.flatnonzero(
            self.retained_mask & (self.strata == stratum) & (self.groups == group)
        )


def stratify(
    scores: Sequence[float],
    group_labels: Sequence[int],
    config: StratifyConfig = StratifyConfig(),
    user_ids: Sequence[str] | None = None,
) -> Stratification:
    """Equal-width stratification over [0, 1] with trimming and size filtering.

    Users outside mean +/- trim_sd * sd of the pooled scores are trimmed;
    strata keeping fewer than min_per_group users in either group are
    dropped. Raises "no overlap" when nothing survives.
    """
    s = np.asarray(scores, dtype=np.float64)
    g = np.asarray(group_labels, dtype=np.int64)
    if s.ndim != 1 or s.shape != g.shape or s.size == 0:
        raise ValueError("scores and group labels must be matching nonempty 1-d sequences")
    if np.any((s < 0.0) | (s > 1.0)) or not np.all(np.isfinite(s)):
        raise ValueError("scores must lie in [0, 1]")
    if not np.all((g == 0) | (g == 1)):
        raise ValueError("group labels must be 0/1")
    if user_ids is None:
        user_ids = tuple(str(i) for i in range(s.size))
    else:
        user_ids = tuple(user_ids)
        if len(user_ids) != s.size:
            raise ValueError("user_ids length does not match scores")
        if len(set(user_ids)) != len(user_ids):
            raise ValueError("user_ids must be unique")
    mean = float(s.mean())
    sd = float(s.std())
    trim_lo = mean - config.trim_sd * sd
    trim_hi = mean + config.trim_sd * sd
    strata = np.minimum((s * config.n_strata).astype(np.int64), config.n_strata - 1)
    inside = (s >= trim_lo) & (s <= trim_hi)
    retained_strata = []
    for k in sorted(set(strata[inside].tolist())):
        in_k = inside & (strata == k)
        n_minority = int(np.sum(in_k & (g == 1)))
        n_control = int(np.sum(in_k & (g == 0)))
        if n_minority >= config.min_per_group and n_control >= config.min_per_group:
            retained_strata.append(k)
    if not retained_strata:
        raise ValueError("no overlap: every stratum fails the minimum group size")
    retained_set = set(retained_strata)
    status = []
    for i in range(s.size):
        if not inside[i]:
            status.append(STATUS_TRIMMED)
        elif int(strata[i]) in retained_set:
            status.append(STATUS_RETAINED)
        else:
            status.append(STATUS_DROPPED)
    return Stratification(
        user_ids=user_ids,
        scores=s,
        groups=g,
        strata=strata,
        status=tuple(status),
        retained_strata=tuple(retained_strata),
        trim_lo=trim_lo,
        trim_hi=trim_hi,
        config=config,
    )


def smd(values_a: Sequence[float], values_b: Sequence[float]) -> float:
    """Standardized mean difference with the two-group average-variance pooling.

    Zero pooled sd yields 0.0 for equal means and NaN (degenerate)
    otherwise.
    """
    a = np.asarray(values_a, dtype=np.float64)
    b = np.asarray(values_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("smd needs at least 2 values per group")
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    pooled = math.sqrt((var_a + var_b) / 2.0)
    diff = float(a.mean() - b.mean())
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else math.nan
    return diff / pooled


@dataclass(frozen=True)
class BalanceReport:
    """Covariate SMDs before matching and pooled within retained strata.

    Within-strata pooling is the retained-stratum-size weighted mean of
    per-stratum SMDs; strata where a group has fewer than two members
    are skipped for that covariate. NaN entries mark degenerate SMDs.
    """

    names: tuple[str, ...]
    smd_before: np.ndarray
    smd_within: np.ndarray

    def _summary(self, arr: np.ndarray) -> tuple[float, float]:
        finite = arr[np.isfinite(arr)]
        if finite.size == 0:
            return (math.nan, math.nan)
        return (float(np.max(np.abs(finite))), float(np.mean(np.abs(finite))))

    @property
    def max_abs_before(self) -> float:
        return self._summary(self.smd_before)[0]

    @property
    def mean_abs_before(self) -> float:
        return self._summary(self.smd_before)[1]

    @property
    def max_abs_within(self) -> float:
        return self._summary(self.smd_within)[0]

    @property
    def mean_abs_within(self) -> float:
        return self._summary(self.smd_within)[1]

    @property
    def degenerate(self) -> tuple[str, ...]:
        bad = ~np.isfinite(self.smd_before) | ~np.isfinite(self.smd_within)
        return tuple(n for n, flag in zip(self.names, bad) if flag)


def balance_report(
    covariate_matrix: np.ndarray,
    names: Sequence[str],
    strat: Stratification,
) -> BalanceReport:
    """Per-covariate SMD on the full population and within retained strata."""
    x = np.asarray(covariate_matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != strat.scores.size:
        raise ValueError("covariate matrix rows must match stratification users")
    if x.shape[1] != len(names):
        raise ValueError("names length does not match covariate columns")
    minority = strat.groups == 1
    before = np.array(
        [smd(x[minority, j], x[~minority, j]) for j in range(x.shape[1])]
    )
    within = np.empty(x.shape[1])
    for j in range(x.shape[1]):
        weighted = 0.0
        weight_total = 0
        for k in strat.retained_strata:
            idx_m = strat.members(k, 1)
            idx_c = strat.members(k, 0)
            if idx_m.size < 2 or idx_c.size < 2:
                continue
            value = smd(x[idx_m, j], x[idx_c, j])
            w = idx_m.size + idx_c.size
            weighted += w * value
            weight_total += w
        within[j] = weighted / weight_total if weight_total else math.nan
    return BalanceReport(names=tuple(names), smd_before=before, smd_within=within)


@dataclass(frozen=True)
class OutcomeMeasurement:
    """One user's category proportion before and during the study period."""

    user_id: str
    outcome: str
    s_before: float
    s_during: float

    def __post_init__(self):
        for field_name in ("s_before", "s_during"):
            v = getattr(self, field_name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{field_name} must lie in [0, 1], got {v}")

    @property
    def delta(self) -> float:
        return self.s_during - self.s_before


def outcome_proportion(tokens: Sequence[str], lexicon: CategoryLexicon, category: str) -> float:
    """Category token proportion over one window's pooled tokens."""
    if category not in lexicon.names:
        raise ValueError(f"unknown category {category!r}")
    denom = max(1, len(tokens))
    hits = sum(1 for t in tokens if lexicon.matches(t, category))
    return hits / denom


def _mean_delta(ids: Iterable[str], by_id: Mapping[str, OutcomeMeasurement]) -> float:
    ordered = sorted(ids)
    if not ordered:
        raise ValueError("empty group in stratum")
    total = 0.0
    for uid in ordered:
        m = by_id.get(uid)
        if m is None:
            raise ValueError(f"missing outcome measurement for user {uid!r}")
        total += m.s_during - m.s_before
    return total / len(ordered)


def stratum_te(
    measurements: Sequence[OutcomeMeasurement],
    minority_ids: Iterable[str],
    control_ids: Iterable[str],
) -> float:
    """Mean (during - before) change, minority minus control.

    Accumulation is plain-float in user-id sort order so any recomputation
    that follows the same order reproduces the value bit for bit.
    """
    by_id = {m.user_id: m for m in measurements}
    return _mean_delta(minority_ids, by_id) - _mean_delta(control_ids, by_id)


def stratum_effects(
    strat: Stratification, measurements: Sequence[OutcomeMeasurement]
) -> list[tuple[int, float]]:
    """(stratum, TE) for every retained stratum, in stratum order."""
    by_id = {m.user_id: m for m in measurements}
    out = []
    ids = np.asarray(strat.user_ids, dtype=object)
    for k in strat.retained_strata:
        minority = [str(u) for u in ids[strat.members(k, 1)]]
        control = [str(u) for u in ids[strat.members(k, 0)]]
        te = _mean_delta(minority, by_id) - _mean_delta(control, by_id)
        out.append((k, te))
    return out


def mean_te(
    strat: Stratification,
    measurements: Sequence[OutcomeMeasurement],
    weighted: bool = False,
) -> float:
    """Average TE over retained strata; unweighted by default.

    ``weighted`` switches to retained-stratum-size weights, which is not
    the reported estimator but is useful for sensitivity checks.
    """
    effects = stratum_effects(strat, measurements)
    if not effects:
        raise ValueError("no retained strata")
    if not weighted:
        total = 0.0
        for _, te in effects:
            total += te
        return total / len(effects)
    weight_total = 0
    total = 0.0
    for k, te in effects:
        w = strat.members(k, 1).size + strat.members(k, 0).size
        total += w * te
        weight_total += w
    return total / weight_total


def cohens_d(deltas_a: Sequence[float], deltas_b: Sequence[float]) -> float:
    """Effect size with df-weighted pooled sd; NaN when the pool is degenerate."""
    a = np.asarray(deltas_a, dtype=np.float64)
    b = np.asarray(deltas_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("cohens_d needs at least 2 values per group")
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    pooled = math.sqrt(
        ((a.size - 1) * var_a + (b.size - 1) * var_b) / (a.size + b.size - 2)
    )
    diff = float(a.mean() - b.mean())
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else math.nan
    return diff / pooled


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation; terms follow the standard even/odd pattern
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def _reg_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b), abs tol ~1e-10."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        a * math.log(x) + b * math.log(1.0 - x) - _log_beta(a, b)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - math.exp(
        b * math.log(1.0 - x) + a * math.log(x) - _log_beta(b, a)
    ) * _beta_continued_fraction(b, a, 1.0 - x) / b


def _student_t_sf2(t: float, df: float) -> float:
    """Two-sided p for Student's t: P(|T| >= |t|)."""
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return _reg_incomplete_beta(df / 2.0, 0.5, x)


def welch_t(
    deltas_a: Sequence[float], deltas_b: Sequence[float]
) -> tuple[float, float, float]:
    """Welch's unequal-variance t-test: (t, df, two-sided p)."""
    a = np.asarray(deltas_a, dtype=np.float64)
    b = np.asarray(deltas_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("welch_t needs at least 2 values per group")
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    if var_a == 0.0 and var_b == 0.0:
        raise ValueError("welch_t undefined: both samples have zero variance")
    sa = var_a / a.size
    sb = var_b / b.size
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (
        sa**2 / (a.size - 1) + sb**2 / (b.size - 1)
    )
    return (t, df, _student_t_sf2(t, df))


def bonferroni(p_values: Sequence[float], m: int | None = None) -> list[float]:
    """Family-wise adjustment: each p becomes min(1, p * m)."""
    ps = list(p_values)
    for p in ps:
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"p value {p} outside [0, 1]")
    if m is None:
        m = len(ps)
    if m < 1:
        raise ValueError("m must be >= 1")
    return [min(1.0, p * m) for p in ps]


def significance_stars(p_adjusted: float) -> str:
    if p_adjusted < 0.001:
        return "***"
    if p_adjusted < 0.01:
        return "**"
    if p_adjusted < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class EffectEstimate:
    outcome: str
    stratum_tes: tuple[tuple[int, float], ...]
    mean_te: float
    cohens_d: float
    welch_t: float
    welch_df: float
    p_raw: float
    p_bonferroni: float
    stars: str

    def __post_init__(self):
        if self.p_bonferroni < self.p_raw - 1e-15:
            raise ValueError("adjusted p below raw p")


@dataclass(frozen=True)
class CausalStudy:
    """A stratification plus per-outcome measurements for its users."""

    stratification: Stratification
    outcomes: Mapping[str, Sequence[OutcomeMeasurement]]


def effect_report(study: CausalStudy, weighted: bool = False) -> list[EffectEstimate]:
    """One estimate per outcome with Bonferroni-adjusted significance.

    Cohen's d and Welch's t compare pooled retained-user changes between
    groups; the Bonferroni family size is the number of outcomes.
    """
    strat = study.stratification
    names = sorted(study.outcomes)
    if not names:
        return []
    ids = np.asarray(strat.user_ids, dtype=object)
    retained = strat.retained_mask
    minority_ids = sorted(str(u) for u in ids[retained & (strat.groups == 1)])
    control_ids = sorted(str(u) for u in ids[retained & (strat.groups == 0)])
    partial = []
    for name in names:
        measurements = study.outcomes[name]
        by_id = {m.user_id: m for m in measurements}
        deltas_m = [by_id[u].delta if u in by_id else _missing(u) for u in minority_ids]
        deltas_c = [by_id[u].delta if u in by_id else _missing(u) for u in control_ids]
        effects = stratum_effects(strat, measurements)
        mte = mean_te(strat, measurements, weighted=weighted)
        d = cohens_d(deltas_m, deltas_c)
        t, df, p = welch_t(deltas_m, deltas_c)
        partial.append((name, tuple(effects), mte, d, t, df, p))
    adjusted = bonferroni([row[6] for row in partial], m=len(partial))
    out = []
    for (name, effects, mte, d, t, df, p), p_adj in zip(partial, adjusted):
        out.append(
            EffectEstimate(
                outcome=name,
                stratum_tes=effects,
                mean_te=mte,
                cohens_d=d,
                welch_t=t,
                welch_df=df,
                p_raw=p,
                p_bonferroni=p_adj,
                stars=significance_stars(p_adj),
            )
        )
    return out


def _missing(user_id: str):
    raise ValueError(f"missing outcome measurement for user {user_id!r}")


def write_balance_csv(report: BalanceReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["covariate", "smd_before", "smd_within_strata"])
        for name, before, within in zip(report.names, report.smd_before, report.smd_within):
            writer.writerow([name, f"{before:.6f}", f"{within:.6f}"])


def write_balance_json(report: BalanceReport, path) -> None:
    payload = {
        "covariates": {
            name: {"smd_before": _json_float(b), "smd_within_strata": _json_float(w)}
            for name, b, w in zip(report.names, report.smd_before, report.smd_within)
        },
        "summary": {
            "max_abs_before": _json_float(report.max_abs_before),
            "mean_abs_before": _json_float(report.mean_abs_before),
            "max_abs_within": _json_float(report.max_abs_within),
            "mean_abs_within": _json_float(report.mean_abs_within),
            "degenerate": list(report.degenerate),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _json_float(v: float):
    return None if (isinstance(v, float) and not math.isfinite(v)) else v


def write_effects_csv(estimates: Sequence[EffectEstimate], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "outcome",
                "mean_te",
                "cohens_d",
                "welch_t",
                "welch_df",
                "p_raw",
                "p_bonferroni",
                "stars",
                "n_strata",
            ]
        )
        for e in estimates:
            writer.writerow(
                [
                    e.outcome,
                    f"{e.mean_te:.8f}",
                    f"{e.cohens_d:.6f}",
                    f"{e.welch_t:.6f}",
                    f"{e.welch_df:.6f}",
                    f"{e.p_raw:.6g}",
                    f"{e.p_bonferroni:.6g}",
                    e.stars,
                    len(e.stratum_tes),
                ]
            )


def write_effects_json(estimates: Sequence[EffectEstimate], path) -> None:
    payload = {}
    for e in estimates:
        payload[e.outcome] = {
            "mean_te": e.mean_te,
            "cohens_d": _json_float(e.cohens_d),
            "welch_t": e.welch_t,
            "welch_df": e.welch_df,
            "p_raw": e.p_raw,
            "p_bonferroni": e.p_bonferroni,
            "stars": e.stars,
            "stratum_tes": [{"stratum": k, "te": te} for k, te in e.stratum_tes],
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_audit_csv(strat: Stratification, path) -> None:
    """One row per user: id, group, score, stratum, retention status."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "group", "score", "stratum", "status"])
        for uid, group, score, stratum, status in zip(
            strat.user_ids, strat.groups, strat.scores, strat.strata, strat.status
        ):
            writer.writerow(
                [uid, "MINORITY" if group == 1 else "CONTROL", f"{score:.8f}", stratum, status]
            )
