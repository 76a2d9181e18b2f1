"""Offline ingestion of post/user dumps, cohort construction, and window splits.

Input dumps are line-delimited JSON, one record per line. Posts carry
``id``, ``author_id``, ``created_at`` (RFC 3339 or epoch seconds) and
``text``; user records carry ``id``, ``bio``, ``tweets``, ``likes``,
``followers``, ``followees`` and ``created_at``. All text is URL-stripped
at ingestion time, before anything downstream sees it.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Sequence

__all__ = [
    "Post",
    "UserRecord",
    "Cohort",
    "CohortLabel",
    "StudyWindows",
    "Timeline",
    "IngestPolicy",
    "MalformedRecordError",
    "strip_urls",
    "extract_hashtags",
    "parse_timestamp",
    "ingest_posts",
    "ingest_users",
    "top_cooccurring_hashtags",
    "compile_bio_patterns",
    "match_bio",
    "filter_users",
    "build_timelines",
    "split_window",
    "write_posts_jsonl",
    "write_cohort",
    "read_cohort",
]

# Shortened links dominate the platform; cover scheme-ful URLs plus bare t.co.
_URL_RE = re.compile(r"https?://\S+|\bt\.co/\S+")


class IngestPolicy(Enum):
    SKIP_MALFORMED = "skip_malformed"
    FAIL_FAST = "fail_fast"


class MalformedRecordError(ValueError):
    """A dump line that cannot be parsed into a record.

    Carries the 1-based line number so fail-fast ingestion points at the
    offending line.
    """

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


def strip_urls(text: str) -> str:
    """Remove URLs from text and normalize whitespace.

    Idempotent; URLs are replaced by a space so surrounding tokens never
    merge into each other.
    """
    return " ".join(_URL_RE.sub(" ", text).split())


def extract_hashtags(text: str) -> list[str]:
    """Hashtags of a (URL-stripped) text: lowercased, ``#`` removed, deduplicated.

    A hashtag is any whitespace token beginning with ``#``; first occurrence
    order is kept.
    """
    seen: dict[str, None] = {}
    for token in text.split():
        if token.startswith("#") and len(token) > 1:
            seen.setdefault(token[1:].lower(), None)
    return list(seen)


def parse_timestamp(value: object) -> float:
    """Parse an RFC 3339 string or epoch-second number into UTC seconds.

    Raises ValueError on anything unparseable or non-finite.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a timestamp: {value!r}")
    if isinstance(value, (int, float)):
        ts = float(value)
        if not math.isfinite(ts):
            raise ValueError(f"non-finite timestamp: {value!r}")
        return ts
    if isinstance(value, str):
        raw = value.strip()
        if raw.endswith(("Z", "z")):
            raw = raw[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(raw)
        except ValueError as exc:
            raise ValueError(f"unparseable timestamp: {value!r}") from exc
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValueError(f"not a timestamp: {value!r}")


def format_timestamp(ts: float) -> str:
    """UTC seconds back to RFC 3339 with a Z suffix."""
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Post:
    post_id: str
    author_id: str
    timestamp: float  # UTC seconds
    text: str  # URL-stripped
    hashtags: tuple[str, ...] = ()


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    bio: str
    n_tweets: int
    n_likes: int
    n_followers: int
    n_followees: int
    created_at: float  # UTC seconds


class CohortLabel(Enum):
    MINORITY = "MINORITY"
    CONTROL = "CONTROL"


@dataclass(frozen=True)
class Cohort:
    label: CohortLabel
    user_ids: frozenset[str]

    def __len__(self) -> int:
        return len(self.user_ids)


@dataclass(frozen=True)
class StudyWindows:
    """Half-open study windows: pre = [study_start, boundary), during = [boundary, study_end)."""

    study_start: float
    boundary: float
    study_end: float

    def __post_init__(self):
        if not (self.study_start < self.boundary < self.study_end):
            raise ValueError(
                "require study_start < boundary < study_end, got "
                f"({self.study_start}, {self.boundary}, {self.study_end})"
            )


@dataclass(frozen=True)
class Timeline:
    """One user's posts, strictly ordered by (timestamp, post_id)."""

    user_id: str
    posts: tuple[Post, ...]


def _parse_post(obj: object) -> Post:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for key in ("id", "author_id", "created_at", "text"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    text = obj["text"]
    if not isinstance(text, str):
        raise ValueError("text is not a string")
    post_id, author_id = obj["id"], obj["author_id"]
    if not isinstance(post_id, str) or not isinstance(author_id, str):
        raise ValueError("id/author_id must be strings")
    ts = parse_timestamp(obj["created_at"])
    clean = strip_urls(text)
    return Post(
        post_id=post_id,
        author_id=author_id,
        timestamp=ts,
        text=clean,
        hashtags=tuple(extract_hashtags(clean)),
    )


def _parse_user(obj: object) -> UserRecord:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for key in ("id", "bio", "tweets", "likes", "followers", "followees", "created_at"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    user_id = obj["id"]
    bio = obj["bio"]
    if not isinstance(user_id, str) or not isinstance(bio, str):
        raise ValueError("id/bio must be strings")
    counts = {}
    for key in ("tweets", "likes", "followers", "followees"):
        val = obj[key]
        if isinstance(val, bool) or not isinstance(val, int) or val < 0:
            raise ValueError(f"{key} must be a non-negative integer")
        counts[key] = val
    return UserRecord(
        user_id=user_id,
        bio=bio,
        n_tweets=counts["tweets"],
        n_likes=counts["likes"],
        n_followers=counts["followers"],
        n_followees=counts["followees"],
        created_at=parse_timestamp(obj["created_at"]),
    )


def _ingest(lines, parse, policy):
    policy = IngestPolicy(policy)
    records = []
    skipped = 0
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(parse(obj))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            if policy is IngestPolicy.FAIL_FAST:
                raise MalformedRecordError(line_no, str(exc)) from exc
            skipped += 1
    return records, skipped


def ingest_posts(
    lines: Iterable[str],
    policy: IngestPolicy | str = IngestPolicy.SKIP_MALFORMED,
) -> tuple[list[Post], int]:
    """Parse a line-delimited post dump.

    Returns (posts, skipped_line_count). Under FAIL_FAST the first
    malformed line raises MalformedRecordError instead.
    """
    return _ingest(lines, _parse_post, policy)


def ingest_users(
    lines: Iterable[str],
    policy: IngestPolicy | str = IngestPolicy.SKIP_MALFORMED,
) -> tuple[list[UserRecord], int]:
    """Parse a line-delimited user dump. Same contract as ingest_posts."""
    return _ingest(lines, _parse_user, policy)


def top_cooccurring_hashtags(
    posts: Sequence[Post], seeds: Iterable[str], k: int
) -> list[tuple[str, int]]:
    """Hashtags ranked by how many posts contain them alongside a seed hashtag.

    Seeds themselves are excluded. Ranked by count descending, ties broken
    lexicographically ascending; at most k results.
    """
    seed_set = {s.lower().lstrip("#") for s in seeds}
    if not seed_set:
        raise ValueError("seeds must be nonempty")
    if k <= 0:
        return []
    counts: Counter[str] = Counter()
    for post in posts:
        tags = set(post.hashtags)
        if tags & seed_set:
            for tag in tags - seed_set:
                counts[tag] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def compile_bio_patterns(keywords: Iterable[str]) -> list[re.Pattern]:
    """Compile keywords into case-insensitive word-boundary patterns."""
    return [re.compile(rf"\b{re.escape(k)}\b", re.IGNORECASE) for k in keywords]


def match_bio(
    bio: str,
    keyword_patterns: Sequence[re.Pattern | str],
    emoji_set: Iterable[str] = (),
) -> bool:
    """True iff any keyword matches at a word boundary or any emoji sequence occurs.

    String entries in keyword_patterns are compiled on the fly with
    compile_bio_patterns semantics. Emoji matching is exact codepoint-sequence
    containment, so multi-codepoint flag sequences match as written.
    """
    if not bio:
        return False
    for pat in keyword_patterns:
        if isinstance(pat, str):
            pat = re.compile(rf"\b{re.escape(pat)}\b", re.IGNORECASE)
        if pat.search(bio):
            return True
    return any(emoji and emoji in bio for emoji in emoji_set)


def filter_users(
    users: Sequence[UserRecord],
    max_follow: int = 5000,
    min_tweets: int = 200,
    max_tweets: int = 30000,
) -> list[UserRecord]:
    """Drop atypical accounts; order preserved, thresholds inclusive on retention.

    Removes users with more than max_follow followers or followees, or with
    fewer than min_tweets or more than max_tweets posts.
    """
    if min(max_follow, min_tweets, max_tweets) <= 0:
        raise ValueError("thresholds must be positive")
    return [
        u
        for u in users
        if u.n_followers <= max_follow
        and u.n_followees <= max_follow
        and min_tweets <= u.n_tweets <= max_tweets
    ]


def build_timelines(posts: Iterable[Post]) -> dict[str, Timeline]:
    """Group posts by author into (timestamp, post_id)-ordered timelines.

    Exact duplicate post_ids within a user are dropped (first kept).
    """
    by_user: dict[str, dict[str, Post]] = {}
    for post in posts:
        by_user.setdefault(post.author_id, {}).setdefault(post.post_id, post)
    timelines = {}
    for user_id, id_map in by_user.items():
        ordered = tuple(sorted(id_map.values(), key=lambda p: (p.timestamp, p.post_id)))
        timelines[user_id] = Timeline(user_id=user_id, posts=ordered)
    return timelines


def split_window(timeline: Timeline, windows: StudyWindows) -> tuple[Timeline, Timeline]:
    """Split a timeline into pre/during windows (half-open; out-of-study posts dropped)."""
    pre = tuple(
        p for p in timeline.posts if windows.study_start <= p.timestamp < windows.boundary
    )
    during = tuple(
        p for p in timeline.posts if windows.boundary <= p.timestamp < windows.study_end
    )
    return (
        Timeline(user_id=timeline.user_id, posts=pre),
        Timeline(user_id=timeline.user_id, posts=during),
    )


def write_posts_jsonl(posts: Iterable[Post], path) -> None:
    """Write posts back out as line-delimited JSON with stripped text."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in posts:
            fh.write(
                json.dumps(
                    {
                        "id": p.post_id,
                        "author_id": p.author_id,
                        "created_at": format_timestamp(p.timestamp),
                        "text": p.text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_cohort(cohort: Cohort, path) -> None:
    """One user id per line, sorted for reproducibility."""
    with open(path, "w", encoding="utf-8") as fh:
        for user_id in sorted(cohort.user_ids):
            fh.write(user_id + "\n")


def read_cohort(path, label: CohortLabel) -> Cohort:
    with open(path, encoding="utf-8") as fh:
        ids = frozenset(line.strip() for line in fh if line.strip())
    return Cohort(label=label, user_ids=ids)
