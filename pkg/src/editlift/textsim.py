"""Headline-to-post similarity profiling and distribution comparison tests.

Two axes describe how far a post drifted from its headline: normalized
Levenshtein distance (lexical change) and embedding cosine similarity
(semantic preservation). Outlet-level distributions are compared with the
Mann-Whitney U test; clickbait score shifts with Welch's t.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as _sps

from .corpus import Corpus, is_mirrored, normalize
from .embedding import EmbeddingTable, cosine, embed_text

PROFILE_COLUMNS = (
    "record_id",
    "edit_distance",
    "embedding_similarity",
    "mirrored",
    "cluster",
    "headline_clickbait",
    "post_clickbait",
)


def normalized_edit_distance(a: str, b: str) -> float:
    """Levenshtein distance over Unicode scalar values, divided by max length.

    Unit-cost insert/delete/substitute. Returns 0.0 for two empty strings.
    """
    if a == b:
        return 0.0
    if not a or not b:
        return 1.0
    # keep the inner loop over the shorter string
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1] / len(a)


@dataclass(frozen=True)
class EditProfile:
    record_id: str
    edit_distance: float
    embedding_similarity: float
    mirrored: bool
    cluster: int | None = None
    headline_clickbait: float | None = None
    post_clickbait: float | None = None
    zero_hit: bool = False  # one of the two texts had no in-vocabulary tokens


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str


def profile(corpus: Corpus, table: EmbeddingTable) -> list[EditProfile]:
    """One EditProfile per record, in corpus order.

    Distances are computed on normalized texts; similarity is the cosine of
    the two bag-of-words document vectors. Cluster and clickbait fields stay
    unset here.
    """
    out = []
    for record in corpus:
        headline = normalize(record.headline)
        post = normalize(record.post_text)
        hvec = embed_text(table, headline)
        pvec = embed_text(table, post)
        out.append(
            EditProfile(
                record_id=record.id,
                edit_distance=normalized_edit_distance(headline, post),
                embedding_similarity=cosine(hvec, pvec),
                mirrored=is_mirrored(record),
                zero_hit=hvec.is_zero_hit or pvec.is_zero_hit,
            )
        )
    return out


def profiles_to_csv(profiles, path: str | Path) -> None:
    """Fixed-column CSV export; optional fields are left blank."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROFILE_COLUMNS)
        for p in profiles:
            writer.writerow([
                p.record_id,
                repr(p.edit_distance),
                repr(p.embedding_similarity),
                "true" if p.mirrored else "false",
                "" if p.cluster is None else p.cluster,
                "" if p.headline_clickbait is None else repr(p.headline_clickbait),
                "" if p.post_clickbait is None else repr(p.post_clickbait),
            ])


def profiles_from_csv(path: str | Path) -> list[EditProfile]:
    profiles = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(PROFILE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"profile CSV missing columns: {sorted(missing)}")
        for row in reader:
            profiles.append(
                EditProfile(
                    record_id=row["record_id"],
                    edit_distance=float(row["edit_distance"]),
                    embedding_similarity=float(row["embedding_similarity"]),
                    mirrored=row["mirrored"] == "true",
                    cluster=int(row["cluster"]) if row["cluster"] != "" else None,
                    headline_clickbait=(
                        float(row["headline_clickbait"]) if row["headline_clickbait"] != "" else None
                    ),
                    post_clickbait=(
                        float(row["post_clickbait"]) if row["post_clickbait"] != "" else None
                    ),
                )
            )
    return profiles


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_u_pvalue(ranks: np.ndarray, nx: int, u_obs: float) -> float:
    """Two-sided exact p under the permutation null.

    Counts the assignments of nx ranks (out of all midranks) whose U deviates
    from nx*ny/2 at least as much as the observed U. Doubled midranks are
    integers, so the count-per-rank-sum table is exact.
    """
    n = len(ranks)
    ny = n - nx
    doubled = np.rint(ranks * 2).astype(np.int64)
    total = doubled.sum()
    # ways[j][s] = number of size-j subsets with doubled-rank sum s
    ways = [dict() for _ in range(nx + 1)]
    ways[0][0] = 1
    for d in doubled:
        for j in range(nx - 1, -1, -1):
            if not ways[j]:
                continue
            nxt = ways[j + 1]
            for s, c in ways[j].items():
                nxt[s + d] = nxt.get(s + d, 0) + c
    mu2 = nx * ny  # on the doubled scale: U2 = 2R - nx(nx+1), E[U2] = nx*ny
    dev_obs = abs(2 * u_obs - mu2)
    hits = 0
    total_combos = 0
    for s, c in ways[nx].items():
        u2 = s - nx * (nx + 1)
        total_combos += c
        if abs(u2 - mu2) >= dev_obs - 1e-9:
            hits += c
    return hits / total_combos


def mann_whitney_u(x, y, exact_max_n: int = 20) -> TestResult:
    """Two-sided Mann-Whitney U test with midrank tie handling.

    The statistic is the x-side U (count of (x, y) pairs with x > y, ties
    counting one half). p-values come from exact enumeration when the
    combined sample size is at most `exact_max_n`, otherwise from the
    tie-corrected normal approximation with continuity correction.
    """
    x = np.asarray(list(x), dtype=np.float64)
    y = np.asarray(list(y), dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise ValueError("mann_whitney_u requires non-empty samples")
    nx, ny = int(x.size), int(y.size)
    combined = np.concatenate([x, y])
    ranks = _midranks(combined)
    rx = float(ranks[:nx].sum())
    u = rx - nx * (nx + 1) / 2.0

    n = nx + ny
    if n <= exact_max_n:
        p = _exact_u_pvalue(ranks, nx, u)
        return TestResult(statistic=u, p_value=min(1.0, p), method="mann_whitney_u")

    mu = nx * ny / 2.0
    _, counts = np.unique(combined, return_counts=True)
    tie_term = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    sigma2 = nx * ny / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma2 <= 0:  # every value identical
        return TestResult(statistic=u, p_value=1.0, method="mann_whitney_u")
    # continuity correction toward the mean
    dev = max(abs(u - mu) - 0.5, 0.0)
    p = math.erfc(dev / math.sqrt(2.0 * sigma2))
    return TestResult(statistic=u, p_value=min(1.0, p), method="mann_whitney_u")


def welch_t(x, y) -> TestResult:
    """Two-sided Welch unequal-variance t test."""
    x = np.asarray(list(x), dtype=np.float64)
    y = np.asarray(list(y), dtype=np.float64)
    if x.size < 2 or y.size < 2:
        raise ValueError("welch_t requires at least 2 observations per sample")
    vx = float(np.var(x, ddof=1))
    vy = float(np.var(y, ddof=1))
    if vx == 0.0 and vy == 0.0:
        if float(np.mean(x)) == float(np.mean(y)):
            return TestResult(statistic=0.0, p_value=1.0, method="welch_t")
        raise ValueError("welch_t undefined: zero variance in both samples")
    sx = vx / x.size
    sy = vy / y.size
    t = (float(np.mean(x)) - float(np.mean(y))) / math.sqrt(sx + sy)
    dof = (sx + sy) ** 2 / (
        (sx ** 2 / (x.size - 1)) + (sy ** 2 / (y.size - 1))
    )
    p = 2.0 * float(_sps.t.sf(abs(t), dof))
    return TestResult(statistic=t, p_value=min(1.0, p), method="welch_t")
