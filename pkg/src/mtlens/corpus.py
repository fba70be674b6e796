"""Sentence corpora and checkpoint-run layouts.

File contract: plain-text UTF-8, one sentence per line, LF endings.
A run directory holds src.txt, ref.txt and checkpoints/<id>/hyp.txt.
Tokenization is whitespace splitting after Unicode NFC normalization;
empty lines become zero-token sentences so line pairing across files
is preserved.
"""

import os
import unicodedata
from dataclasses import dataclass

from .errors import DataError


@dataclass(frozen=True)
class Sentence:
    raw: str
    tokens: tuple[str, ...]

    @staticmethod
    def from_line(line: str) -> "Sentence":
        norm = unicodedata.normalize("NFC", line).strip()
        return Sentence(raw=norm, tokens=tuple(norm.split()))

    @staticmethod
    def from_tokens(tokens) -> "Sentence":
        tokens = tuple(tokens)
        return Sentence(raw=" ".join(tokens), tokens=tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Corpus:
    name: str
    sentences: tuple[Sentence, ...]

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]


def load_corpus(path, name: str | None = None) -> Corpus:
    """Read one sentence per line; decode failures name the line."""
    if name is None:
        name = os.path.basename(str(path))
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read corpus {path}: {exc}") from exc
    sentences = []
    if data:
        raw_lines = data.split(b"\n")
        if raw_lines and raw_lines[-1] == b"":
            raw_lines.pop()  # trailing newline, not an extra sentence
        for lineno, raw in enumerate(raw_lines, start=1):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DataError(
                    f"{path}: line {lineno}: invalid UTF-8 ({exc.reason})"
                ) from exc
            sentences.append(Sentence.from_line(text))
    return Corpus(name=name, sentences=tuple(sentences))


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sent in corpus:
            fh.write(sent.raw)
            fh.write("\n")


@dataclass(frozen=True)
class CheckpointRun:
    checkpoint_id: str
    hypotheses: Corpus


@dataclass(frozen=True)
class AnalysisRun:
    source: Corpus
    reference: Corpus
    checkpoints: tuple[CheckpointRun, ...]


def load_run(run_dir) -> AnalysisRun:
    """Load src.txt, ref.txt and every checkpoints/<id>/hyp.txt.

    Checkpoints are sorted by id; every corpus must have the same
    sentence count as src.txt.
    """
    run_dir = str(run_dir)
    src_path = os.path.join(run_dir, "src.txt")
    ref_path = os.path.join(run_dir, "ref.txt")
    for p in (src_path, ref_path):
        if not os.path.isfile(p):
            raise DataError(f"run layout incomplete: missing {p}")
    source = load_corpus(src_path, name="src")
    reference = load_corpus(ref_path, name="ref")
    if len(reference) != len(source):
        raise DataError(
            f"ref.txt has {len(reference)} sentences but src.txt has {len(source)}"
        )

    ckpt_root = os.path.join(run_dir, "checkpoints")
    if not os.path.isdir(ckpt_root):
        raise DataError(f"run layout incomplete: missing directory {ckpt_root}")
    checkpoints = []
    for ckpt_id in sorted(os.listdir(ckpt_root)):
        sub = os.path.join(ckpt_root, ckpt_id)
        if not os.path.isdir(sub):
            continue
        hyp_path = os.path.join(sub, "hyp.txt")
        if not os.path.isfile(hyp_path):
            raise DataError(f"checkpoint {ckpt_id}: missing {hyp_path}")
        hyp = load_corpus(hyp_path, name=f"hyp@{ckpt_id}")
        if len(hyp) != len(source):
            raise DataError(
                f"checkpoint {ckpt_id}: {len(hyp)} hypotheses for {len(source)} sources"
            )
        checkpoints.append(CheckpointRun(checkpoint_id=ckpt_id, hypotheses=hyp))
    return AnalysisRun(source=source, reference=reference, checkpoints=tuple(checkpoints))
