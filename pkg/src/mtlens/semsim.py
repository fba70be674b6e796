"""Ratio margin-based similarity over ingested sentence embeddings.

For aligned embedding sets X (reference-or-source side) and Y
(hypothesis side), each pair scores cos(x_i, y_i) divided by the
margin term: half the mean cosine from x_i to its k nearest
neighbors in Y plus half the mean cosine from y_i to its k nearest
neighbors in X. Neighbor pools are the full opposing set, so the
paired sentence may be its own neighbor. Scores are high when a pair
is closer than its neighborhoods.

Embedding files are text: a "count dim" header line, then one row of
space-separated decimals per vector. Embedding extraction itself
happens upstream; this module only ingests (or mean-pools) vectors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class EmbeddingSet:
    vectors: np.ndarray  # (count, dim) float64

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def _as_set(vectors) -> EmbeddingSet:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"embeddings must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr).all(axis=1))[0][0])
        raise DataError(f"non-finite embedding component at row {bad}")
    return EmbeddingSet(vectors=arr)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DataError("cosine undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


def pool_tokens(token_vectors) -> np.ndarray:
    """Componentwise arithmetic mean of a non-empty vector list."""
    arr = np.asarray(token_vectors, dtype=np.float64)
    if arr.size == 0:
        raise DataError("cannot pool an empty vector list")
    if arr.ndim != 2:
        raise DataError("token vectors must share one dimension")
    return arr.mean(axis=0)


@dataclass(frozen=True)
class RmssResult:
    per_sentence: tuple  # float per pair, None where the margin degenerated
    mean: float
    k: int
    skipped: int


def rmss(x_set: EmbeddingSet, y_set: EmbeddingSet, k: int) -> RmssResult:
    if x_set.count != y_set.count:
        raise DataError(
            f"embedding counts differ: {x_set.count} vs {y_set.count}"
        )
    if x_set.dim != y_set.dim:
        raise DataError(f"embedding dims differ: {x_set.dim} vs {y_set.dim}")
    n = x_set.count
    if not 1 <= k <= n:
        raise DataError(f"k must be in [1, {n}], got {k}")

    x = x_set.vectors
    y = y_set.vectors
    x_norm = np.linalg.norm(x, axis=1)
    y_norm = np.linalg.norm(y, axis=1)
    if np.any(x_norm == 0.0) or np.any(y_norm == 0.0):
        raise DataError("cosine undefined for a zero vector")
    xn = x / x_norm[:, None]
    yn = y / y_norm[:, None]
    cos = xn @ yn.T  # cos[i, j] = cos(x_i, y_j)

    per = []
    skipped = 0
    for i in range(n):
        # nearest = largest cosine; summing the k largest values makes
        # index tie-breaking irrelevant to the result
        x_side = np.sort(cos[i, :])[::-1][:k].sum() / (2.0 * k)
        y_side = np.sort(cos[:, i])[::-1][:k].sum() / (2.0 * k)
        denom = x_side + y_side
        if denom <= 0.0:
            per.append(None)
            skipped += 1
        else:
            per.append(float(cos[i, i] / denom))
    scored = [v for v in per if v is not None]
    mean = sum(scored) / len(scored) if scored else float("nan")
    return RmssResult(per_sentence=tuple(per), mean=mean, k=k, skipped=skipped)


def load_embeddings(path) -> EmbeddingSet:
    """Parse "count dim" header plus one vector row per line."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: header must be 'count dim'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise DataError(f"{path}: bad header {header!r}") from exc
        if count < 0 or dim < 1:
            raise DataError(f"{path}: bad header counts {count} {dim}")
        rows = []
        for idx in range(count):
            line = fh.readline()
            if not line:
                raise DataError(
                    f"{path}: header promises {count} rows, file has {idx}"
                )
            try:
                row = [float(v) for v in line.split()]
            except ValueError as exc:
                raise DataError(f"{path}: row {idx}: bad number") from exc
            if len(row) != dim:
                raise DataError(
                    f"{path}: row {idx}: expected {dim} values, got {len(row)}"
                )
            rows.append(row)
        if fh.readline().strip():
            raise DataError(f"{path}: more rows than the header's {count}")
    arr = np.array(rows, dtype=np.float64).reshape(count, dim)
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr).all(axis=1))[0][0])
        raise DataError(f"{path}: non-finite value at row {bad}")
    return EmbeddingSet(vectors=arr)


def save_embeddings(emb: EmbeddingSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{emb.count} {emb.dim}\n")
        for row in emb.vectors:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def embedding_set(vectors) -> EmbeddingSet:
    """Validate and wrap raw vectors (used by tests and callers)."""
    return _as_set(vectors)
