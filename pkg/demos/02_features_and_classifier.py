"""
Text features and the minority-stress post classifier
=====================================================

Featurizes a labeled post corpus (embeddings, category lexicon,
sentiment, binary n-grams), trains the gradient-descent logistic
model, and inspects the learned coefficients.
"""

import tempfile
from pathlib import Path

import numpy as np

from minstress.corpus import strip_urls
from minstress.evaluation import evaluate
from minstress.featurize import (
    FeaturizerConfig,
    feature_group,
    load_embeddings,
    load_lexicon,
    load_wordlist,
    tokenize,
)
from minstress.models import Dataset, TrainConfig, coefficients, train_model
from minstress.synth import SyntheticSpec, generate_labeled_corpus, generate_study

out = Path(tempfile.mkdtemp(prefix="demo-features-"))

# 1. The study bundle ships the fixed featurizer artifacts: a category
#    lexicon, an embedding table, and two sentiment word lists.
generate_study(SyntheticSpec(n_users=4, posts_min=2, posts_max=3, n_labeled_posts=10), out)
config = FeaturizerConfig(
    lexicon=load_lexicon(out / "lexicon.tsv"),
    table=load_embeddings(out / "embeddings.txt"),
    pos_lexicon=load_wordlist(out / "positive.txt"),
    neg_lexicon=load_wordlist(out / "negative.txt"),
    vocab_size=300,
)

# 2. A labeled corpus with a planted vocabulary signal: positive posts
#    lean on a few marker tokens the classifier should discover.
rows = generate_labeled_corpus(1200, seed=3)
token_lists = [tokenize(strip_urls(text)) for _, text, _ in rows]
labels = np.array([label for _, _, label in rows], dtype=np.int64)
print(f"corpus: {len(rows)} posts, prevalence {labels.mean():.3f}")

# 3. Hold out every fifth post; the n-gram vocabulary is fit on the
#    training split only, so test tokens outside it simply vanish.
test_mask = np.arange(len(rows)) % 5 == 0
train_tokens = [t for t, m in zip(token_lists, test_mask) if not m]
featurizer = config.fit(train_tokens)
print(f"feature schema: {len(featurizer.schema)} columns")
for group in ("embedding", "lexicon", "sentiment", "ngrams"):
    n = sum(1 for g in featurizer.groups if g == group)
    print(f"  {group:<10} {n}")

x = featurizer.matrix(token_lists)
train = Dataset(x[~test_mask], labels[~test_mask], featurizer.schema)
test_x, test_y = x[test_mask], labels[test_mask]

# 4. Train the from-scratch logistic model next to the majority-class
#    dummy so the lift over chance is visible.
train_config = TrainConfig(seed=0, lambda_=0.01)
logistic = train_model("logistic", train, train_config)
dummy = train_model("dummy", train, train_config)

print("\nheld-out metrics:")
for name, model in (("logistic", logistic), ("dummy", dummy)):
    m, cm = evaluate(test_y, np.atleast_1d(model.predict_proba(test_x)))
    auc_str = f"{m.auc:.3f}" if m.auc is not None else "n/a"
    print(
        f"  {name:<9} precision {m.precision:.3f}  recall {m.recall:.3f}  "
        f"f1 {m.f1:.3f}  accuracy {m.accuracy:.3f}  auc {auc_str}"
    )

# 5. The coefficient ranking is the model's own story about what
#    matters; the planted marker tokens should top the list.
ranked = coefficients(logistic)
print("\nstrongest positive features:")
for name, weight in ranked[:8]:
    print(f"  {weight:+.3f}  {name}  [{feature_group(name)}]")
print("strongest negative features:")
for name, weight in ranked[-5:]:
    print(f"  {weight:+.3f}  {name}  [{feature_group(name)}]")
