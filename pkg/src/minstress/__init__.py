"""Minority-stress text classification and stratified effect estimation.

The package splits into five layers, each usable on its own:

* :mod:`minstress.corpus`: post/user ingestion, cohort construction,
  study windows, timelines.
* :mod:`minstress.featurize`: tokenization and the embedding / lexicon /
  sentiment / n-gram feature blocks.
* :mod:`minstress.models`: from-scratch logistic regression, Gaussian
  naive Bayes, CART, and a majority-class dummy.
* :mod:`minstress.evaluation`: macro metrics, ROC/AUC, stratified k-fold
  cross-validation, ablation, coefficient rank movement.
* :mod:`minstress.causal`: propensity-score stratification, covariate
  balance, per-stratum treatment effects, Welch tests with Bonferroni
  correction.

:mod:`minstress.synth` generates studies with known planted effects and
:mod:`minstress.cli` wires everything into reproducible command runs.
"""

from .corpus import (
    Cohort,
    CohortLabel,
    Post,
    StudyWindows,
    Timeline,
    UserRecord,
    build_timelines,
    extract_hashtags,
    filter_users,
    ingest_posts,
    ingest_users,
    match_bio,
    parse_timestamp,
    split_window,
    strip_urls,
    top_cooccurring_hashtags,
)
from .featurize import (
    CategoryLexicon,
    EmbeddingTable,
    Featurizer,
    FeaturizerConfig,
    NGramVocabulary,
    build_ngram_vocab,
    count_lexicon,
    embed_mean,
    feature_group,
    load_embeddings,
    load_lexicon,
    load_wordlist,
    score_sentiment,
    tokenize,
    top_unigrams,
)
from .models import (
    MODEL_KINDS,
    Dataset,
    TrainConfig,
    coefficients,
    load_model,
    save_model,
    train_logistic,
    train_model,
)
from .evaluation import (
    ConfusionMatrix,
    Metrics,
    ablation,
    ablation_text,
    auc,
    cohen_kappa,
    cross_validate,
    cross_validate_text,
    evaluate,
    kfold_split,
    rank_delta,
    roc_points,
)
from .causal import (
    BalanceReport,
    CausalStudy,
    CovariateVector,
    EffectEstimate,
    OutcomeMeasurement,
    Stratification,
    StratifyConfig,
    balance_report,
    bonferroni,
    build_covariates,
    cohens_d,
    covariate_names,
    effect_report,
    fit_propensity,
    mean_te,
    outcome_proportion,
    smd,
    stratify,
    stratum_te,
    welch_t,
)
from .synth import SyntheticSpec, generate_labeled_corpus, generate_study

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Cohort",
    "CohortLabel",
    "Post",
    "StudyWindows",
    "Timeline",
    "UserRecord",
    "build_timelines",
    "extract_hashtags",
    "filter_users",
    "ingest_posts",
    "ingest_users",
    "match_bio",
    "parse_timestamp",
    "split_window",
    "strip_urls",
    "top_cooccurring_hashtags",
    "CategoryLexicon",
    "EmbeddingTable",
    "Featurizer",
    "FeaturizerConfig",
    "NGramVocabulary",
    "build_ngram_vocab",
    "count_lexicon",
    "embed_mean",
    "feature_group",
    "load_embeddings",
    "load_lexicon",
    "load_wordlist",
    "score_sentiment",
    "tokenize",
    "top_unigrams",
    "MODEL_KINDS",
    "Dataset",
    "TrainConfig",
    "coefficients",
    "load_model",
    "save_model",
    "train_logistic",
    "train_model",
    "ConfusionMatrix",
    "Metrics",
    "ablation",
    "ablation_text",
    "auc",
    "cohen_kappa",
    "cross_validate",
    "cross_validate_text",
    "evaluate",
    "kfold_split",
    "rank_delta",
    "roc_points",
    "BalanceReport",
    "CausalStudy",
    "CovariateVector",
    "EffectEstimate",
    "OutcomeMeasurement",
    "Stratification",
    "StratifyConfig",
    "balance_report",
    "bonferroni",
    "build_covariates",
    "cohens_d",
    "covariate_names",
    "effect_report",
    "fit_propensity",
    "mean_te",
    "outcome_proportion",
    "smd",
    "stratify",
    "stratum_te",
    "welch_t",
    "SyntheticSpec",
    "generate_labeled_corpus",
    "generate_study",
]
