"""Word-order monotonicity metrics: fuzzy reordering score and translation edit rate.

FRS = 1 - (C-1)/(M-1), where C counts chunks of contiguously aligned
hypothesis tokens and M is the other-side length; 1 means the
hypothesis reads in the other side's order, 0 means every adjacent
pair breaks. TER = E / L_ref with E a word-level edit count; the
optional shift mode adds Snover-style greedy block shifts at cost 1
each before counting remaining insert/delete/substitute edits.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .align import Alignment, train_model1, viterbi_align
from .corpus import AnalysisRun, Sentence
from .errors import DataError
from .series import MetricSeries, SeriesPoint


@dataclass(frozen=True)
class ReorderingResult:
    frs: float
    chunks: int
    ref_len: int


@dataclass(frozen=True)
class TerResult:
    edits: int
    ref_len: int
    ter: float


def _projection(alignment: Alignment, hyp: Sentence) -> list[int]:
    """Other-side index per aligned hypothesis token, in hypothesis order.

    Multi-linked tokens project to their smallest linked index;
    unaligned tokens are dropped.
    """
    by_i: dict[int, int] = {}
    for i, j in alignment.links:
        if i not in by_i or j < by_i[i]:
            by_i[i] = j
    return [by_i[i] for i in range(len(hyp.tokens)) if i in by_i]


def frs(alignment: Alignment, hyp: Sentence, other: Sentence) -> ReorderingResult:
    m = len(other.tokens)
    if m == 0:
        raise DataError("FRS undefined against an empty sentence")
    for i, j in alignment.links:
        if not (0 <= i < len(hyp.tokens) and 0 <= j < m):
            raise DataError(f"alignment link ({i},{j}) out of range")
    projected = _projection(alignment, hyp)
    chunks = 1 + sum(
        1 for a, b in zip(projected, projected[1:]) if b != a + 1
    )
    if m <= 1:
        score = 1.0
    else:
        score = 1.0 - (chunks - 1) / (m - 1)
    return ReorderingResult(frs=min(1.0, max(0.0, score)), chunks=chunks, ref_len=m)


def levenshtein(a, b) -> int:
    """Word-level edit distance with unit insert/delete/substitute costs."""
    a, b = list(a), list(b)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i]
        for j, tok_b in enumerate(b, start=1):
            cur.append(
                min(
                    prev[j] + 1,
                    cur[j - 1] + 1,
                    prev[j - 1] + (tok_a != tok_b),
                )
            )
        prev = cur
    return prev[len(b)]


def _best_shift(hyp_tokens: list, ref_tokens: list, base: int):
    """Single block shift that most reduces edit distance, or None.

    Candidate moves take a contiguous hypothesis span that matches a
    reference span exactly and reinsert it at the matching reference
    position. Ties resolve to the first candidate in (start, length,
    ref position) order, keeping the greedy loop deterministic.
    """
    best = None  # (new_dist, new_tokens)
    n = len(hyp_tokens)
    for start in range(n):
        for length in range(1, n - start + 1):
            span = hyp_tokens[start : start + length]
            remaining = hyp_tokens[:start] + hyp_tokens[start + length :]
            for rpos in range(len(ref_tokens) - length + 1):
                if ref_tokens[rpos : rpos + length] != span:
                    continue
                dest = min(rpos, len(remaining))
                if dest == start:
                    continue  # no movement
                candidate = remaining[:dest] + span + remaining[dest:]
                dist = levenshtein(candidate, ref_tokens)
                if dist < base and (best is None or dist < best[0]):
                    best = (dist, candidate)
    return best


def ter(hyp: Sentence, ref: Sentence, shifts: bool = False) -> TerResult:
    if len(ref.tokens) == 0:
        raise DataError("TER undefined for an empty reference")
    hyp_tokens = list(hyp.tokens)
    ref_tokens = list(ref.tokens)
    num_shifts = 0
    dist = levenshtein(hyp_tokens, ref_tokens)
    if shifts:
        while dist > 0:
            found = _best_shift(hyp_tokens, ref_tokens, dist)
            if found is None:
                break
            dist, hyp_tokens = found
            num_shifts += 1
    edits = num_shifts + dist
    return TerResult(edits=edits, ref_len=len(ref_tokens), ter=edits / len(ref_tokens))


def _mean(values) -> float | None:
    return sum(values) / len(values) if values else None


def corpus_wordorder(
    run: AnalysisRun,
    versus: str = "reference",
    iterations: int = 10,
    shifts: bool = False,
    threads: int = 1,
) -> tuple[MetricSeries, MetricSeries]:
    """Per-checkpoint mean FRS and mean TER series.

    versus selects the comparison side ("reference" or "source").
    Sentences where a metric is undefined (empty other side) are
    skipped and counted in the series point.
    """
    if versus not in ("reference", "source"):
        raise DataError(f"versus must be 'reference' or 'source', got {versus!r}")
    other = run.reference if versus == "reference" else run.source
    frs_points = []
    ter_points = []
    for ckpt in run.checkpoints:
        hyp = ckpt.hypotheses
        try:
            table = train_model1(hyp, other, iterations=iterations)
        except DataError:
            # degenerate checkpoint (no trainable pair): whole point undefined
            frs_points.append(SeriesPoint(ckpt.checkpoint_id, None, len(hyp)))
            ter_points.append(SeriesPoint(ckpt.checkpoint_id, None, len(hyp)))
            continue

        def one(pair):
            h, o = pair
            if len(o.tokens) == 0:
                return None
            aln = viterbi_align(table, h, o)
            return (frs(aln, h, o).frs, ter(h, o, shifts=shifts).ter)

        pairs = list(zip(hyp, other))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, pairs))
        else:
            results = [one(p) for p in pairs]
        kept = [r for r in results if r is not None]
        skipped = len(results) - len(kept)
        frs_points.append(
            SeriesPoint(ckpt.checkpoint_id, _mean([r[0] for r in kept]), skipped)
        )
        ter_points.append(
            SeriesPoint(ckpt.checkpoint_id, _mean([r[1] for r in kept]), skipped)
        )
    suffix = "ref" if versus == "reference" else "src"
    return (
        MetricSeries(metric_name=f"frs-vs-{suffix}", points=tuple(frs_points)),
        MetricSeries(metric_name=f"ter-vs-{suffix}", points=tuple(ter_points)),
    )
