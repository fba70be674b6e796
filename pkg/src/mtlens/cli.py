"""Command-line front end.

One binary, subcommand style. Machine-readable results go to stdout
(or --out); diagnostics go to stderr. Exit codes: 0 success, 1 usage
error, 2 data/contract error, 3 numeric failure. Every randomized
path takes an explicit --seed; nothing is seeded from the clock.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import align as align_mod
from . import report as report_mod
from .corpus import load_corpus, load_run, save_corpus
from .errors import DataError, NumericError, UsageError
from .lrp import contribution_stats, contributions
from .perturb import PerturbationKind, PerturbationSpec, perturb_corpus
from .quality import corpus_bleu
from .robustness import robustness_suite
from .semsim import load_embeddings, rmss
from .transformer import load_model, load_vocab
from .wordorder import frs as frs_op
from .wordorder import ter as ter_op


@dataclass(frozen=True)
class GlobalConfig:
    seed: int | None = None
    threads: int = 1
    output_format: str = "json"  # json, csv or text, per subcommand

    def __post_init__(self):
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")

    @staticmethod
    def from_args(args) -> "GlobalConfig":
        return GlobalConfig(
            seed=getattr(args, "seed", None),
            threads=getattr(args, "threads", 1),
            output_format=getattr(args, "format", "json"),
        )


def _write_out(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, out_path) -> None:
    _write_out(json.dumps(obj, indent=2) + "\n", out_path)


def _emit_scalar(payload: dict, headline_key: str, args) -> None:
    """JSON by default; --format text prints just the headline value."""
    if getattr(args, "format", "json") == "text":
        _write_out(f"{payload[headline_key]}\n", args.out)
    else:
        _emit_json(payload, args.out)


# ---------------------------------------------------------------------------
# subcommands


def cmd_bleu(args) -> int:
    hyp = load_corpus(args.hyp)
    ref = load_corpus(args.ref)
    score = corpus_bleu(hyp, ref, lowercase=args.lc)
    _emit_scalar(
        {
            "score": score.score,
            "precisions": list(score.precisions),
            "bp": score.brevity_penalty,
            "hyp_len": score.hyp_len,
            "ref_len": score.ref_len,
        },
        "score",
        args,
    )
    return 0


def cmd_ter(args) -> int:
    hyp = load_corpus(args.hyp)
    ref = load_corpus(args.ref)
    if len(hyp) != len(ref):
        raise DataError(f"corpus length mismatch: {len(hyp)} vs {len(ref)}")
    results = []
    skipped = 0
    for h, r in zip(hyp, ref):
        if len(r.tokens) == 0:
            skipped += 1
            continue
        results.append(ter_op(h, r, shifts=args.shifts))
    payload = {
        "mean_ter": sum(r.ter for r in results) / len(results) if results else None,
        "count": len(results),
        "skipped": skipped,
        "shifts": bool(args.shifts),
    }
    if args.per_sentence:
        payload["sentences"] = [
            {"edits": r.edits, "ref_len": r.ref_len, "ter": r.ter} for r in results
        ]
    _emit_scalar(payload, "mean_ter", args)
    return 0


def cmd_frs(args) -> int:
    hyp = load_corpus(args.hyp)
    other = load_corpus(args.other)
    if len(hyp) != len(other):
        raise DataError(f"corpus length mismatch: {len(hyp)} vs {len(other)}")
    if args.align:
        alignments = align_mod.read_pharaoh(args.align)
        if len(alignments) != len(hyp):
            raise DataError(
                f"{args.align}: {len(alignments)} alignment lines for {len(hyp)} sentences"
            )
    else:
        alignments = align_mod.align_corpora(hyp, other, iterations=args.iters)
    results = []
    skipped = 0
    for aln, h, o in zip(alignments, hyp, other):
        if len(o.tokens) == 0:
            skipped += 1
            continue
        results.append(frs_op(aln, h, o))
    payload = {
        "mean_frs": sum(r.frs for r in results) / len(results) if results else None,
        "count": len(results),
        "skipped": skipped,
    }
    if args.per_sentence:
        payload["sentences"] = [
            {"frs": r.frs, "chunks": r.chunks, "ref_len": r.ref_len} for r in results
        ]
    _emit_scalar(payload, "mean_frs", args)
    return 0


def cmd_align(args) -> int:
    hyp = load_corpus(args.hyp)
    other = load_corpus(args.other)
    alignments = align_mod.align_corpora(hyp, other, iterations=args.iters)
    lines = "".join(
        " ".join(f"{i}-{j}" for i, j in aln.sorted_links()) + "\n" for aln in alignments
    )
    _write_out(lines, args.out)
    return 0


_KINDS = {
    "misspelling": PerturbationKind.MISSPELLING,
    "case": PerturbationKind.CASE_CHANGING,
    "case_changing": PerturbationKind.CASE_CHANGING,
}


def cmd_perturb(args) -> int:
    spec = PerturbationSpec(
        kind=_KINDS[args.kind], probability=args.prob, seed=args.seed
    )
    corpus = load_corpus(args.infile)
    save_corpus(perturb_corpus(corpus, spec), args.outfile)
    return 0


def cmd_robust(args) -> int:
    run = load_run(args.clean)
    if args.ref:
        ref = load_corpus(args.ref, name="ref")
        run = type(run)(source=run.source, reference=ref, checkpoints=run.checkpoints)
    perturbed = {}
    for item in args.perturbed:
        if "=" in item:
            kind, path = item.split("=", 1)
        else:
            kind, path = os.path.basename(os.path.normpath(item)), item
        perturbed[kind] = load_run(path)
    reports = robustness_suite(run, perturbed)
    lines = ["checkpoint,kind,bleu_clean,bleu_pert,R,R_raw,C"]
    for rep in reports:
        lines.append(
            f"{rep.checkpoint_id},{rep.kind},{rep.tq_clean.score:.12g},"
            f"{rep.tq_perturbed.score:.12g},{rep.robustness:.12g},"
            f"{rep.raw_ratio:.12g},{rep.consistency:.12g}"
        )
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def cmd_rmss(args) -> int:
    x_set = load_embeddings(args.x_emb)
    y_set = load_embeddings(args.y_emb)
    result = rmss(x_set, y_set, args.k)
    per_path = args.per_sentence
    if per_path:
        with open(per_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(list(result.per_sentence), fh)
            fh.write("\n")
    _emit_scalar(
        {
            "mean": None if result.skipped == x_set.count else result.mean,
            "k": result.k,
            "count": x_set.count,
            "skipped": result.skipped,
            "per_sentence": per_path or None,
        },
        "mean",
        args,
    )
    return 0


def cmd_lrp(args) -> int:
    model = load_model(args.model)
    vocab = load_vocab(args.vocab)
    src = load_corpus(args.src)
    tgt = load_corpus(args.tgt)
    if len(src) != len(tgt):
        raise DataError(f"corpus length mismatch: {len(src)} vs {len(tgt)}")
    out_lines = []
    all_records = []
    skipped = 0
    for idx, (s, t) in enumerate(zip(src, tgt)):
        if not s.tokens or not t.tokens:
            skipped += 1
            continue
        for rec in contributions(model, s, t, vocab):
            all_records.append(rec)
            out_lines.append(
                json.dumps(
                    {
                        "sentence": idx,
                        "step": rec.step,
                        "r_source": rec.r_source,
                        "r_target": rec.r_target,
                        "source_rel": [float(v) for v in rec.source_rel],
                        "target_rel": [float(v) for v in rec.target_rel],
                        "predicted_id": rec.predicted_id,
                    }
                )
            )
    if all_records:
        stats = contribution_stats(all_records)
        summary = {
            "summary": {
                "avg_source_contribution": stats.avg_source_contribution,
                "source_entropy": stats.source_entropy,
                "target_entropy": stats.target_entropy,
                "steps": stats.steps,
                "target_steps": stats.target_steps,
                "skipped_sentences": skipped,
            }
        }
    else:
        summary = {"summary": None, "skipped_sentences": skipped}
    out_lines.append(json.dumps(summary))
    _write_out("\n".join(out_lines) + "\n", args.out)
    return 0


def _load_report_embeddings(emb_dir, run):
    emb = {}
    for side in ("ref", "src"):
        path = os.path.join(emb_dir, f"{side}.emb")
        if os.path.isfile(path):
            emb[side] = load_embeddings(path)
    ckpts = {}
    for ckpt in run.checkpoints:
        path = os.path.join(emb_dir, "checkpoints", ckpt.checkpoint_id, "hyp.emb")
        if os.path.isfile(path):
            ckpts[ckpt.checkpoint_id] = load_embeddings(path)
    emb["checkpoints"] = ckpts
    return emb


def cmd_report(args) -> int:
    run = load_run(args.run_dir)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if not metrics:
        raise UsageError("--metrics needs at least one metric name")
    inputs = report_mod.ReportInputs(
        align_iterations=args.iters,
        rmss_k=args.k,
        lowercase=args.lc,
        threads=args.threads,
    )
    if args.embeddings:
        inputs.embeddings = _load_report_embeddings(args.embeddings, run)
    if args.model and args.vocab:
        inputs.model = load_model(args.model)
        inputs.vocab = load_vocab(args.vocab)
    series, notes = report_mod.collect(run, metrics, inputs)
    outputs = {"csv": None, "svg": None, "series": [s.metric_name for s in series], "notes": notes}
    if args.csv:
        report_mod.emit_csv(series, args.csv)
        outputs["csv"] = args.csv
    if args.svg:
        report_mod.emit_svg(series, args.svg)
        outputs["svg"] = args.svg
    for note in notes:
        print(note, file=sys.stderr)
    _emit_json(outputs, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtlens",
        description="Analysis toolkit for machine-translation outputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", help="write results to this file instead of stdout")

    def add_scalar_out(p):
        add_out(p)
        p.add_argument(
            "--format", choices=("json", "text"), default="json",
            help="json record or bare headline value",
        )

    p = sub.add_parser("bleu", help="corpus BLEU-4")
    p.add_argument("hyp")
    p.add_argument("ref")
    p.add_argument("--lc", action="store_true", help="lowercase before scoring")
    add_scalar_out(p)
    p.set_defaults(func=cmd_bleu)

    p = sub.add_parser("ter", help="translation edit rate")
    p.add_argument("hyp")
    p.add_argument("ref")
    p.add_argument("--shifts", action="store_true", help="enable greedy block shifts")
    p.add_argument("--per-sentence", action="store_true")
    add_scalar_out(p)
    p.set_defaults(func=cmd_ter)

    p = sub.add_parser("frs", help="fuzzy reordering score")
    p.add_argument("hyp")
    p.add_argument("other", help="reference or source corpus")
    p.add_argument("--align", help="Pharaoh alignment file (default: train IBM-1)")
    p.add_argument("--iters", type=int, default=10, help="EM iterations")
    p.add_argument("--per-sentence", action="store_true")
    add_scalar_out(p)
    p.set_defaults(func=cmd_frs)

    p = sub.add_parser("align", help="IBM Model 1 word alignment (Pharaoh output)")
    p.add_argument("hyp", help="side whose token indexes own the links")
    p.add_argument("other", help="conditioning side (gets the NULL token)")
    p.add_argument("--iters", type=int, default=10)
    add_out(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("perturb", help="misspell or case-change a corpus")
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--prob", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("infile")
    p.add_argument("outfile")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("robust", help="robustness/consistency table (CSV)")
    p.add_argument("--clean", required=True, help="clean run directory")
    p.add_argument(
        "--perturbed",
        action="append",
        required=True,
        metavar="[KIND=]DIR",
        help="perturbed run directory; repeatable",
    )
    p.add_argument("--ref", help="override reference corpus")
    add_out(p)
    p.set_defaults(func=cmd_robust)

    p = sub.add_parser("rmss", help="ratio margin-based similarity score")
    p.add_argument("--k", type=int, default=4, help="neighborhood size")
    p.add_argument("x_emb", help="reference-or-source embeddings")
    p.add_argument("y_emb", help="hypothesis embeddings")
    p.add_argument("--per-sentence", metavar="FILE", help="write per-pair scores here")
    add_scalar_out(p)
    p.set_defaults(func=cmd_rmss)

    p = sub.add_parser("lrp", help="relevance propagation records (JSON lines)")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("src")
    p.add_argument("tgt")
    add_out(p)
    p.set_defaults(func=cmd_lrp)

    p = sub.add_parser("report", help="metric series over checkpoints (CSV/SVG)")
    p.add_argument("run_dir")
    p.add_argument(
        "--metrics",
        default="bleu,frs-vs-ref,ter-vs-ref",
        help="comma-separated metric names",
    )
    p.add_argument("--csv", help="CSV output path")
    p.add_argument("--svg", help="SVG output path")
    p.add_argument("--embeddings", help="embedding dir (ref.emb, src.emb, checkpoints/<id>/hyp.emb)")
    p.add_argument("--model", help="transformer weight file for relevance metrics")
    p.add_argument("--vocab", help="vocab file for relevance metrics")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--lc", action="store_true")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    add_out(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        GlobalConfig.from_args(args)  # validates shared flags
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
