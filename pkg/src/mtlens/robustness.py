"""Robustness and consistency of outputs under input perturbation.

Translation quality TQ is corpus BLEU throughout. Robustness is the
ratio TQ(perturbed-input hypotheses, reference) / TQ(clean
hypotheses, reference), clamped into [0,1]; the raw ratio is kept for
diagnostics. Consistency is the harmonic mean of the two cross-BLEU
directions between clean and perturbed hypotheses, reported on the
0-100 BLEU scale.
"""

from dataclasses import dataclass

from .corpus import AnalysisRun, Corpus
from .errors import DataError
from .perturb import PerturbationSpec
from .quality import BleuScore, corpus_bleu


@dataclass(frozen=True)
class RobustnessReport:
    checkpoint_id: str
    kind: str
    tq_clean: BleuScore
    tq_perturbed: BleuScore
    robustness: float  # clamped to [0,1]
    raw_ratio: float
    clamped: bool
    consistency: float  # 0..100
    perturbation: PerturbationSpec | None = None


def _safe_bleu(hyp: Corpus, ref: Corpus) -> float:
    """BLEU that treats an untokenized reference side as score 0."""
    try:
        return corpus_bleu(hyp, ref).score
    except DataError:
        return 0.0


def robustness(hyp_clean: Corpus, hyp_perturbed: Corpus, ref: Corpus) -> float:
    clean = corpus_bleu(hyp_clean, ref)
    perturbed = corpus_bleu(hyp_perturbed, ref)
    if clean.score == 0.0:
        raise DataError("robustness undefined: clean BLEU is zero")
    return min(1.0, perturbed.score / clean.score)


def harmonic_mean(a: float, b: float) -> float:
    if a + b == 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def consistency(hyp_clean: Corpus, hyp_perturbed: Corpus) -> float:
    if len(hyp_clean) != len(hyp_perturbed):
        raise DataError(
            f"corpus length mismatch: {len(hyp_clean)} vs {len(hyp_perturbed)}"
        )
    return harmonic_mean(
        _safe_bleu(hyp_clean, hyp_perturbed), _safe_bleu(hyp_perturbed, hyp_clean)
    )


def robustness_report(
    checkpoint_id: str,
    kind: str,
    hyp_clean: Corpus,
    hyp_perturbed: Corpus,
    ref: Corpus,
    perturbation: PerturbationSpec | None = None,
) -> RobustnessReport:
    tq_clean = corpus_bleu(hyp_clean, ref)
    tq_perturbed = corpus_bleu(hyp_perturbed, ref)
    if tq_clean.score == 0.0:
        raise DataError(
            f"checkpoint {checkpoint_id}: robustness undefined, clean BLEU is zero"
        )
    raw = tq_perturbed.score / tq_clean.score
    return RobustnessReport(
        checkpoint_id=checkpoint_id,
        kind=kind,
        tq_clean=tq_clean,
        tq_perturbed=tq_perturbed,
        robustness=min(1.0, raw),
        raw_ratio=raw,
        clamped=raw > 1.0,
        consistency=consistency(hyp_clean, hyp_perturbed),
        perturbation=perturbation,
    )


def robustness_suite(
    run: AnalysisRun,
    perturbed_runs: dict,
    specs: dict | None = None,
) -> list[RobustnessReport]:
    """One report per checkpoint x perturbation kind.

    perturbed_runs maps kind -> AnalysisRun whose checkpoints carry
    the hypotheses decoded from the perturbed test set; checkpoint ids
    must pair with the clean run's.
    """
    specs = specs or {}
    clean_by_id = {c.checkpoint_id: c for c in run.checkpoints}
    reports = []
    for kind in sorted(perturbed_runs):
        pert_run = perturbed_runs[kind]
        pert_by_id = {c.checkpoint_id: c for c in pert_run.checkpoints}
        missing = sorted(set(clean_by_id) ^ set(pert_by_id))
        if missing:
            raise DataError(
                f"perturbation {kind!r}: unpaired checkpoint ids {missing}"
            )
        for ckpt in run.checkpoints:
            reports.append(
                robustness_report(
                    ckpt.checkpoint_id,
                    kind,
                    ckpt.hypotheses,
                    pert_by_id[ckpt.checkpoint_id].hypotheses,
                    run.reference,
                    perturbation=specs.get(kind),
                )
            )
    return reports
