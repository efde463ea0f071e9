"""Semantic category formation: discretize word embeddings into clusters.

The semantic slot-constraint inventory is built by k-means over a word
embedding table. Lloyd's algorithm with k-means++ initialization, fully
deterministic for a fixed seed:

* assignment step breaks distance ties by keeping a point's current cluster
  (then lowest cluster index), which prevents oscillation on duplicates;
* clusters left empty after assignment are re-seeded from the point farthest
  from its own centroid, so every cluster ends non-empty;
* centroid updates sum points in fixed index order.

Distance is plain Euclidean on the raw vectors; within-cluster sum of
squares never increases from one iteration to the next.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import OOV
from .errors import ParseError

DEFAULT_K = 1000
DEFAULT_MAX_WORDS = 100_000

_ASSIGN_CHUNK = 8192


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SemanticLexicon:
    k: int
    assignment: dict[str, int]
    centroids: np.ndarray
    inertia_history: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        bad = [w for w, c in self.assignment.items() if not 0 <= c < self.k]
        if bad:
            raise ValueError(f"cluster index out of range for {bad[0]!r}")


def read_embedding_table(path: str | Path, max_words: int = DEFAULT_MAX_WORDS) -> EmbeddingTable:
    """Read a textual vector file: header ``<count> <dim>``, then one word per row.

    At most `max_words` rows are read, in file order (these files are
    conventionally sorted by corpus frequency). Duplicate words keep their
    first (most frequent) vector.
    """
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline()
        parts = header.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ParseError("expected header '<count> <dim>'", str(path), 1)
        dim = int(parts[1])
        for lineno, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            if len(entries) >= max_words:
                break
            fields = line.rstrip("\n").split(" ")
            if len(fields) != dim + 1:
                raise ParseError(
                    f"expected {dim + 1} fields, got {len(fields)}",
                    str(path), lineno,
                )
            word = fields[0]
            try:
                vector = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"non-numeric vector component: {exc}",
                                 str(path), lineno) from exc
            if word not in entries:
                entries[word] = vector
    return EmbeddingTable(dim, entries)


def _sq_dist_to(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    diff = points - center
    return np.einsum("ij,ij->i", diff, diff)


def _assignment_distances(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared distance of every point to every centroid, chunked to bound memory."""
    n = points.shape[0]
    best = np.empty(n, dtype=np.int64)
    full = np.empty((n, centroids.shape[0]), dtype=np.float64)
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    for start in range(0, n, _ASSIGN_CHUNK):
        chunk = points[start:start + _ASSIGN_CHUNK]
        d = (
            np.einsum("ij,ij->i", chunk, chunk)[:, None]
            - 2.0 * chunk @ centroids.T
            + c_sq[None, :]
        )
        np.maximum(d, 0.0, out=d)
        full[start:start + _ASSIGN_CHUNK] = d
        best[start:start + _ASSIGN_CHUNK] = np.argmin(d, axis=1)
    return full, best


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    min_sq = _sq_dist_to(points, centers[0])
    for j in range(1, k):
        total = float(min_sq.sum())
        if total <= 0.0:
            # All remaining mass sits on existing centers; fall back to uniform.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=min_sq / total))
        centers[j] = points[idx]
        np.minimum(min_sq, _sq_dist_to(points, centers[j]), out=min_sq)
    return centers


def kmeans(table: EmbeddingTable, k: int, seed: int, max_iter: int = 100) -> SemanticLexicon:
    """Cluster the embedding table into `k` semantic categories.

    Converges when no assignment changes or `max_iter` is reached. The
    returned lexicon records the within-cluster sum of squares after each
    iteration in ``inertia_history``.
    """
    n = len(table.entries)
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of embedding entries ({n})")
    words = list(table.entries)
    points = np.stack([table.entries[w] for w in words])

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(points, k, rng)
    distances, assign = _assignment_distances(points, centroids)
    assign = _fix_empty_clusters(distances, assign, k)

    history: list[float] = []
    for _ in range(max_iter):
        centroids = _update_centroids(points, assign, centroids, k)
        distances, nearest = _assignment_distances(points, centroids)
        # Sticky ties: a point only moves if a strictly closer centroid exists.
        rows = np.arange(points.shape[0])
        stay = distances[rows, assign] <= distances[rows, nearest]
        new_assign = np.where(stay, assign, nearest)
        new_assign = _fix_empty_clusters(distances, new_assign, k)
        history.append(float(distances[rows, new_assign].sum()))
        if np.array_equal(new_assign, assign):
            assign = new_assign
            break
        assign = new_assign

    centroids = _update_centroids(points, assign, centroids, k)
    assignment = {w: int(c) for w, c in zip(words, assign)}
    return SemanticLexicon(k, assignment, centroids, tuple(history))


def _update_centroids(points: np.ndarray, assign: np.ndarray,
                      previous: np.ndarray, k: int) -> np.ndarray:
    centroids = previous.copy()
    for j in range(k):
        members = points[assign == j]
        if len(members):
            centroids[j] = members.mean(axis=0)
    return centroids


def _fix_empty_clusters(distances: np.ndarray, assign: np.ndarray, k: int) -> np.ndarray:
    """Re-seed each empty cluster with the point farthest from its centroid."""
    assign = assign.copy()
    counts = np.bincount(assign, minlength=k)
    stolen: set[int] = set()
    for j in range(k):
        if counts[j] > 0:
            continue
        rows = np.arange(len(assign))
        own = distances[rows, assign].copy()
        for s in stolen:
            own[s] = -1.0
        # Points that are their cluster's only member cannot be stolen.
        for idx in np.argsort(-own, kind="stable"):
            idx = int(idx)
            if idx in stolen or counts[assign[idx]] <= 1:
                continue
            counts[assign[idx]] -= 1
            assign[idx] = j
            counts[j] += 1
            stolen.add(idx)
            break
    return assign


def lookup(lexicon: SemanticLexicon, form: str) -> int:
    """Cluster index for `form`, or ``OOV``. No nearest-centroid fallback."""
    return lexicon.assignment.get(form, OOV)


def write_lexicon(lexicon: SemanticLexicon, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for form, cluster in lexicon.assignment.items():
            handle.write(f"{form}\t{cluster}\n")


def read_lexicon(path: str | Path) -> SemanticLexicon:
    """Read a ``form<TAB>cluster`` TSV written by :func:`write_lexicon`.

    Centroids are not serialized; the loaded lexicon supports lookup only.
    """
    path = Path(path)
    assignment: dict[str, int] = {}
    top = -1
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 2:
                raise ParseError(f"expected 2 fields, got {len(fields)}", str(path), lineno)
            try:
                cluster = int(fields[1])
            except ValueError as exc:
                raise ParseError(f"non-integer cluster index {fields[1]!r}",
                                 str(path), lineno) from exc
            if cluster < 0 or cluster == OOV:
                raise ParseError(f"invalid cluster index {cluster}", str(path), lineno)
            assignment[fields[0]] = cluster
            top = max(top, cluster)
    return SemanticLexicon(top + 1 if top >= 0 else 1, assignment, np.zeros((0, 0)))
