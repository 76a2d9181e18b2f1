"""
Cohort construction from raw user and post dumps
================================================

Builds the two study groups from scratch: seed-hashtag co-occurrence
ranking, bio keyword matching, activity filtering, and the final
minority/control split written as cohort files.
"""

import json
import tempfile
from pathlib import Path

from minstress.corpus import (
    Cohort,
    CohortLabel,
    build_timelines,
    compile_bio_patterns,
    filter_users,
    ingest_posts,
    ingest_users,
    match_bio,
    read_cohort,
    top_cooccurring_hashtags,
    write_cohort,
)
from minstress.synth import (
    DEFAULT_BIO_KEYWORDS,
    DEFAULT_SEED_HASHTAGS,
    SyntheticSpec,
    generate_study,
)

out = Path(tempfile.mkdtemp(prefix="demo-cohort-"))
print(f"working directory: {out}")

# 1. Generate a raw study bundle: users.jsonl and posts.jsonl are the
#    inputs a real collection pipeline would hand us.
spec = SyntheticSpec(n_users=60, posts_min=10, posts_max=16, n_labeled_posts=40, seed=7)
truth = generate_study(spec, out)

users, skipped_users = ingest_users((out / "users.jsonl").read_text().splitlines())
posts, skipped_posts = ingest_posts((out / "posts.jsonl").read_text().splitlines())
print(f"ingested {len(users)} users ({skipped_users} skipped)")
print(f"ingested {len(posts)} posts ({skipped_posts} skipped)")

# 2. Expand the seed hashtags by co-occurrence. Tags that appear in the
#    same posts as a seed are candidate community markers.
ranked = top_cooccurring_hashtags(posts, DEFAULT_SEED_HASHTAGS, k=10)
print(f"\ntop hashtags co-occurring with {list(DEFAULT_SEED_HASHTAGS)}:")
for tag, count in ranked:
    print(f"  #{tag:<14} {count} posts")

tag_set = {t.lower() for t in DEFAULT_SEED_HASHTAGS} | {t for t, _ in ranked}

# 3. Drop atypical accounts before any group assignment so both cohorts
#    face the same activity screen.
kept = filter_users(users, max_follow=5000, min_tweets=200, max_tweets=30000)
print(f"\nactivity filter kept {len(kept)} of {len(users)} users")

# 4. Minority users must self-identify in the bio AND use a community
#    hashtag; controls show neither bio signal.
patterns = compile_bio_patterns(DEFAULT_BIO_KEYWORDS)
timelines = build_timelines(posts)

minority_ids = set()
control_ids = set()
for user in kept:
    timeline = timelines.get(user.user_id)
    user_tags = set()
    if timeline is not None:
        for post in timeline.posts:
            user_tags.update(post.hashtags)
    if match_bio(user.bio, patterns):
        if user_tags & tag_set:
            minority_ids.add(user.user_id)
    else:
        control_ids.add(user.user_id)

print(f"selected {len(minority_ids)} minority and {len(control_ids)} control users")

# 5. Persist and reload the cohorts; downstream stages only ever see
#    these two id lists.
write_cohort(
    Cohort(label=CohortLabel.MINORITY, user_ids=frozenset(minority_ids)),
    out / "my_minority.txt",
)
write_cohort(
    Cohort(label=CohortLabel.CONTROL, user_ids=frozenset(control_ids)),
    out / "my_control.txt",
)
reloaded = read_cohort(out / "my_minority.txt", CohortLabel.MINORITY)
print(f"round trip: {len(reloaded.user_ids)} minority ids reloaded")

# 6. Compare against the generator's ground-truth membership. Recall is
#    below 1.0 by design: some true members never tag or self-identify.
true_minority = set(read_cohort(out / "minority.txt", CohortLabel.MINORITY).user_ids)
hits = len(minority_ids & true_minority)
false_pos = len(minority_ids - true_minority)
print(f"\nagainst ground truth: {hits}/{len(minority_ids)} selected ids are true members")
print(f"false positives: {false_pos}")
