import json

import pytest

from editlift.corpus import Corpus, PairedRecord


def make_record(rid="r1", outlet="wire", headline="Budget vote passes",
                body_text="The committee approved the annual budget today.",
                post_text="Budget vote passes", created_at="2018-06-15T13:00:00Z",
                replies=1, retweets=2, likes=3, section=None) -> PairedRecord:
    return PairedRecord(
        id=rid, outlet=outlet, headline=headline, body_text=body_text,
        post_text=post_text, created_at=created_at, replies=replies,
        retweets=retweets, likes=likes, section=section,
    )


def make_corpus(records, source="test://corpus") -> Corpus:
    return Corpus(records=tuple(records), source_path=source)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


def record_row(rid="r1", **overrides):
    row = {
        "id": rid,
        "outlet": "wire",
        "headline": "Budget vote passes",
        "body_text": "The committee approved the annual budget today.",
        "post_text": "Budget vote passes",
        "created_at": "2018-06-15T13:00:00Z",
        "replies": 1,
        "retweets": 2,
        "likes": 3,
    }
    row.update(overrides)
    return row


@pytest.fixture
def tiny_vectors(tmp_path):
    """Small deterministic word-vector file shared by embedding tests."""
    lines = ["12 4"]
    words = {
        "budget": (1.0, 0.0, 0.0, 0.0),
        "vote": (0.9, 0.1, 0.0, 0.0),
        "passes": (0.8, 0.2, 0.0, 0.0),
        "committee": (0.7, 0.3, 0.1, 0.0),
        "annual": (0.6, 0.2, 0.2, 0.0),
        "today": (0.5, 0.5, 0.0, 0.1),
        "wow": (0.0, 0.0, 1.0, 0.0),
        "shocking": (0.0, 0.1, 0.9, 0.0),
        "story": (0.0, 0.0, 0.8, 0.2),
        "weather": (0.0, 1.0, 0.0, 0.5),
        "storm": (0.1, 0.9, 0.0, 0.4),
        "alert": (0.0, 0.8, 0.1, 0.3),
    }
    for word, vec in words.items():
        lines.append(word + " " + " ".join(str(v) for v in vec))
    path = tmp_path / "vectors.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
