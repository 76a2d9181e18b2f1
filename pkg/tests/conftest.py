import json

import numpy as np
import pytest

from minstress.corpus import Post, StudyWindows, Timeline
from minstress.featurize import CategoryLexicon, EmbeddingTable


def make_post(post_id="p1", author="u1", ts=0.0, text="", hashtags=()):
    return Post(
        post_id=post_id,
        author_id=author,
        timestamp=float(ts),
        text=text,
        hashtags=tuple(hashtags),
    )


def make_timeline(author, specs):
    """specs: iterable of (post_id, timestamp, text)."""
    posts = tuple(
        make_post(post_id=pid, author=author, ts=ts, text=text) for pid, ts, text in specs
    )
    return Timeline(user_id=author, posts=posts)


@pytest.fixture
def windows():
    return StudyWindows(study_start=0.0, boundary=100.0, study_end=200.0)


@pytest.fixture
def tiny_lexicon():
    return CategoryLexicon({"anger": ["hate", "kill*"], "calm": ["rest", "ease"]})


@pytest.fixture
def tiny_table():
    return EmbeddingTable(
        dimension=2,
        vectors={
            "hello": np.array([1.0, 2.0]),
            "world": np.array([3.0, 4.0]),
        },
    )


def post_line(post_id="1", author="u1", created="2019-01-01T00:00:00Z", text="hi"):
    return (
        json.dumps(
            {"id": post_id, "author_id": author, "created_at": created, "text": text}
        )
        + "\n"
    )


def user_line(
    user_id="u1",
    bio="",
    tweets=500,
    likes=10,
    followers=100,
    followees=100,
    created="2015-06-01T00:00:00Z",
):
    return (
        json.dumps(
            {
                "id": user_id,
                "bio": bio,
                "tweets": tweets,
                "likes": likes,
                "followers": followers,
                "followees": followees,
                "created_at": created,
            }
        )
        + "\n"
    )
