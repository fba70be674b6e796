"""Corpus- and sentence-level BLEU-4 (single reference).

Corpus mode pools clipped n-gram counts over the whole corpus and is
unsmoothed: any zero pooled precision gives score 0. Sentence mode
adds one to numerator and denominator for n >= 2 so short identical
pairs still score, leaving unigram precision untouched.
"""

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import Corpus, Sentence
from .errors import DataError

MAX_ORDER = 4


@dataclass(frozen=True)
class BleuScore:
    score: float  # 0..100
    precisions: tuple[float, ...]  # fractions, n = 1..4
    brevity_penalty: float
    hyp_len: int
    ref_len: int


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _pair_stats(hyp_tokens, ref_tokens, matched, total):
    for n in range(1, MAX_ORDER + 1):
        hyp_counts = _ngrams(hyp_tokens, n)
        if not hyp_counts:
            continue
        ref_counts = _ngrams(ref_tokens, n)
        total[n - 1] += sum(hyp_counts.values())
        matched[n - 1] += sum(
            min(count, ref_counts[gram]) for gram, count in hyp_counts.items()
        )


def _brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len == 0:
        return 0.0
    if hyp_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len)


def _corpus_score(matched, total, bp: float) -> float:
    # orders with no n-grams anywhere (corpus shorter than n) do not
    # enter the geometric mean; an order that exists but has zero
    # matches keeps the unsmoothed score at 0
    orders = [n for n in range(MAX_ORDER) if total[n] > 0]
    if not orders:
        return 0.0
    if any(matched[n] == 0 for n in orders):
        return 0.0
    log_sum = math.fsum(math.log(matched[n] / total[n]) for n in orders)
    return 100.0 * bp * math.exp(log_sum / len(orders))


def corpus_bleu(hyp: Corpus, ref: Corpus, lowercase: bool = False) -> BleuScore:
    if len(hyp) != len(ref):
        raise DataError(
            f"corpus length mismatch: {len(hyp)} hypotheses vs {len(ref)} references"
        )
    if sum(len(s) for s in ref) == 0:
        raise DataError("reference corpus has no tokens")
    matched = [0] * MAX_ORDER
    total = [0] * MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for h, r in zip(hyp, ref):
        h_toks = [t.lower() for t in h.tokens] if lowercase else list(h.tokens)
        r_toks = [t.lower() for t in r.tokens] if lowercase else list(r.tokens)
        hyp_len += len(h_toks)
        ref_len += len(r_toks)
        _pair_stats(h_toks, r_toks, matched, total)
    precisions = tuple(
        matched[n] / total[n] if total[n] > 0 else 0.0 for n in range(MAX_ORDER)
    )
    bp = _brevity_penalty(hyp_len, ref_len)
    return BleuScore(
        score=_corpus_score(matched, total, bp),
        precisions=precisions,
        brevity_penalty=bp,
        hyp_len=hyp_len,
        ref_len=ref_len,
    )


def sentence_bleu(hyp: Sentence, ref: Sentence) -> BleuScore:
    """Lin-Och add-one smoothing for n >= 2; unigrams unsmoothed."""
    if len(ref) == 0:
        raise DataError("empty reference sentence")
    matched = [0] * MAX_ORDER
    total = [0] * MAX_ORDER
    _pair_stats(list(hyp.tokens), list(ref.tokens), matched, total)
    precisions = []
    for n in range(MAX_ORDER):
        if n == 0:
            precisions.append(matched[0] / total[0] if total[0] > 0 else 0.0)
        else:
            precisions.append((matched[n] + 1) / (total[n] + 1))
    bp = _brevity_penalty(len(hyp), len(ref))
    if precisions[0] <= 0.0:
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(
            math.fsum(math.log(p) for p in precisions) / MAX_ORDER
        )
    return BleuScore(
        score=score,
        precisions=tuple(precisions),
        brevity_penalty=bp,
        hyp_len=len(hyp),
        ref_len=len(ref),
    )
