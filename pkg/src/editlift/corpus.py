"""Paired-record corpus: data model, file ingestion, normalization, mirroring.

A corpus is a list of (headline, body, post, engagement) records tied to a
media outlet. JSONL is the canonical on-disk format; CSV is a convenience
importer with identical field names.
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

ENGAGEMENT_METRICS = ("replies", "retweets", "likes")

REQUIRED_KEYS = ("id", "outlet", "headline", "body_text", "post_text",
                 "created_at", "replies", "retweets", "likes")

_WS_RUN = re.compile(r"\s+")


class CorpusError(Exception):
    """Fatal problem with a corpus file (unreadable, duplicate ids, nothing valid)."""


@dataclass(frozen=True)
class PairedRecord:
    """One news article paired with the social post that shared it."""

    id: str
    outlet: str
    headline: str
    body_text: str
    post_text: str
    created_at: str  # ISO-8601 UTC instant, e.g. "2018-06-15T13:00:00Z"
    replies: int
    retweets: int
    likes: int
    section: str | None = None

    def engagement(self, metric: str) -> int:
        if metric not in ENGAGEMENT_METRICS:
            raise ValueError(f"unknown engagement metric: {metric!r}")
        return getattr(self, metric)


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    reason: str


@dataclass(frozen=True)
class Corpus:
    records: tuple[PairedRecord, ...]
    source_path: str
    rejects: tuple[RejectedLine, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def outlets(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.outlet, None)
        return list(seen)

    def by_outlet(self, outlet: str) -> list[PairedRecord]:
        hits = [r for r in self.records if r.outlet == outlet]
        if not hits:
            raise CorpusError(f"outlet {outlet!r} not present in corpus")
        return hits


def normalize(text: str) -> str:
    """Canonical text normalization: NFC compose, trim, collapse whitespace runs.

    Idempotent: normalize(normalize(x)) == normalize(x).
    """
    return _WS_RUN.sub(" ", unicodedata.normalize("NFC", text)).strip()


def is_mirrored(record: PairedRecord) -> bool:
    """True when the post text equals the headline after normalization.

    Comparison is exact and case-sensitive; only whitespace and Unicode
    composition differences are forgiven.
    """
    return normalize(record.headline) == normalize(record.post_text)


def mirroring_fraction(corpus: Corpus, outlet: str) -> float:
    """Fraction of the outlet's records whose post mirrors the headline."""
    records = corpus.by_outlet(outlet)
    return sum(1 for r in records if is_mirrored(r)) / len(records)


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant into an aware UTC datetime."""
    try:
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValueError(f"invalid created_at timestamp {value!r}: {exc}") from None
    if dt.tzinfo is None:
        raise ValueError(f"created_at {value!r} has no UTC offset")
    return dt.astimezone(timezone.utc)


# Posting-time blocks on a fixed UTC-4 clock (eastern daylight offset,
# applied year-round for determinism).
TIME_BLOCKS = ("B1", "B2", "B3")
_EASTERN_OFFSET = timedelta(hours=-4)


def assign_time_block(record: PairedRecord) -> str:
    """Map the record's posting instant to one of three local-time blocks.

    B1 = [00:00, 09:00), B2 = [09:00, 17:00), B3 = [17:00, 24:00), measured
    on a fixed UTC-4 clock.
    """
    local = parse_timestamp(record.created_at) + _EASTERN_OFFSET
    if local.hour < 9:
        return "B1"
    if local.hour < 17:
        return "B2"
    return "B3"


def _coerce_record(obj: dict, line_no: int) -> PairedRecord:
    """Validate one raw mapping into a PairedRecord; raises ValueError."""
    missing = [k for k in REQUIRED_KEYS if k not in obj or obj[k] is None]
    if missing:
        raise ValueError(f"missing required field(s): {', '.join(missing)}")

    rid = str(obj["id"]).strip()
    if not rid:
        raise ValueError("empty id")

    counts = {}
    for metric in ENGAGEMENT_METRICS:
        raw = obj[metric]
        try:
            n = int(raw)
        except (TypeError, ValueError):
            raise ValueError(f"{metric} is not an integer: {raw!r}") from None
        if n < 0:
            raise ValueError(f"{metric} is negative: {n}")
        counts[metric] = n

    headline = str(obj["headline"])
    post_text = str(obj["post_text"])
    if not normalize(headline):
        raise ValueError("headline empty after normalization")
    if not normalize(post_text):
        raise ValueError("post_text empty after normalization")

    created_at = str(obj["created_at"])
    parse_timestamp(created_at)  # validation only; stored verbatim

    section = obj.get("section")
    if section is not None:
        section = str(section) or None

    return PairedRecord(
        id=rid,
        outlet=str(obj["outlet"]),
        headline=headline,
        body_text=str(obj["body_text"]),
        post_text=post_text,
        created_at=created_at,
        replies=counts["replies"],
        retweets=counts["retweets"],
        likes=counts["likes"],
        section=section,
    )


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield line_no, None, f"invalid JSON: {exc.msg}"
                continue
            if not isinstance(obj, dict):
                yield line_no, None, "line is not a JSON object"
                continue
            yield line_no, obj, None


def _iter_csv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        for line_no, row in enumerate(reader, start=2):  # header is line 1
            obj = {k: v for k, v in row.items() if v not in (None, "")}
            yield line_no, obj, None


def load_corpus(path: str | Path, fmt: str = "jsonl") -> Corpus:
    """Load and validate a paired corpus.

    Malformed lines are skipped and reported in Corpus.rejects with their
    line numbers. Duplicate ids and an empty result are fatal.
    """
    path = Path(path)
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown corpus format {fmt!r} (expected jsonl or csv)")
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")

    rows = _iter_jsonl(path) if fmt == "jsonl" else _iter_csv(path)
    records: list[PairedRecord] = []
    rejects: list[RejectedLine] = []
    seen_ids: dict[str, int] = {}
    for line_no, obj, err in rows:
        if err is not None:
            rejects.append(RejectedLine(line_no, err))
            continue
        try:
            record = _coerce_record(obj, line_no)
        except ValueError as exc:
            rejects.append(RejectedLine(line_no, str(exc)))
            continue
        if record.id in seen_ids:
            raise CorpusError(
                f"{path}:{line_no}: duplicate id {record.id!r} "
                f"(first seen on line {seen_ids[record.id]})"
            )
        seen_ids[record.id] = line_no
        records.append(record)

    if not records:
        raise CorpusError(f"{path}: no valid records ({len(rejects)} rejected)")
    return Corpus(records=tuple(records), source_path=str(path), rejects=tuple(rejects))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write records back out as canonical JSONL (round-trips with load_corpus)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for r in corpus.records:
            obj = {
                "id": r.id,
                "outlet": r.outlet,
                "headline": r.headline,
                "body_text": r.body_text,
                "post_text": r.post_text,
                "created_at": r.created_at,
                "replies": r.replies,
                "retweets": r.retweets,
                "likes": r.likes,
            }
            if r.section is not None:
                obj["section"] = r.section
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
