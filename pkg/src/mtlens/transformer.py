"""Desk-scale transformer encoder-decoder: weights, vocab, forward pass.

Post-norm architecture (sublayer -> residual add -> LayerNorm), ReLU
feed-forward, sinusoidal position encodings, shared source/target
embedding table, untied output projection. The forward pass runs one
decoding step: given the source ids and a non-empty target prefix it
returns next-token logits for the last prefix position, together with
a cache of every linear input/output, attention probability matrix
and layer-norm statistic that relevance propagation needs.

Weight files are self-describing text: a header with the
configuration, then named arrays with explicit shapes. Vocab files
hold one token per line, the line number being the id; ids 0..3 are
reserved for BOS, EOS, UNK and PAD.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError
from .rng import SplitMix64

BOS_ID = 0
EOS_ID = 1
UNK_ID = 2
PAD_ID = 3
RESERVED = ("<bos>", "<eos>", "<unk>", "<pad>")

LN_EPS = 1e-5


# ---------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]
    index: dict = field(repr=False, default_factory=dict)

    @staticmethod
    def from_tokens(tokens) -> "Vocab":
        tokens = tuple(tokens)
        if len(tokens) < len(RESERVED):
            raise DataError("vocab needs at least the 4 reserved entries")
        index = {}
        for i, tok in enumerate(tokens):
            index.setdefault(tok, i)
        return Vocab(tokens=tokens, index=index)

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def encode(self, tokens) -> list[int]:
        return [self.id_of(t) for t in tokens]


def build_vocab(corpora, limit: int = 512) -> Vocab:
    """Reserved symbols plus the corpora's sorted unique tokens."""
    seen = set()
    for corpus in corpora:
        for sent in corpus:
            seen.update(sent.tokens)
    words = sorted(seen)[: max(0, limit - len(RESERVED))]
    return Vocab.from_tokens(RESERVED + tuple(words))


def load_vocab(path) -> Vocab:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh]
    return Vocab.from_tokens(tokens)


def save_vocab(vocab: Vocab, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tok in vocab.tokens:
            fh.write(tok)
            fh.write("\n")


# ---------------------------------------------------------------------------
# model


def _attn_names(prefix):
    for part in ("wq", "wk", "wv", "wo"):
        yield f"{prefix}_{part}"
    for part in ("bq", "bk", "bv", "bo"):
        yield f"{prefix}_{part}"


def _layer_names(layers: int):
    for i in range(layers):
        yield from _attn_names(f"enc{i}_attn")
        yield from (
            f"enc{i}_ffn_w1", f"enc{i}_ffn_b1", f"enc{i}_ffn_w2", f"enc{i}_ffn_b2",
            f"enc{i}_ln1_g", f"enc{i}_ln1_b", f"enc{i}_ln2_g", f"enc{i}_ln2_b",
        )
    for i in range(layers):
        yield from _attn_names(f"dec{i}_self")
        yield from _attn_names(f"dec{i}_cross")
        yield from (
            f"dec{i}_ffn_w1", f"dec{i}_ffn_b1", f"dec{i}_ffn_w2", f"dec{i}_ffn_b2",
            f"dec{i}_ln1_g", f"dec{i}_ln1_b", f"dec{i}_ln2_g", f"dec{i}_ln2_b",
            f"dec{i}_ln3_g", f"dec{i}_ln3_b",
        )


def _expected_shapes(layers, heads, dim, ffn, vocab_size) -> dict:
    shapes = {"embedding": (vocab_size, dim), "out_w": (dim, vocab_size), "out_b": (vocab_size,)}
    for name in _layer_names(layers):
        if name.endswith(("_wq", "_wk", "_wv", "_wo")):
            shapes[name] = (dim, dim)
        elif name.endswith(("_bq", "_bk", "_bv", "_bo")):
            shapes[name] = (dim,)
        elif name.endswith("_w1"):
            shapes[name] = (dim, ffn)
        elif name.endswith("_b1"):
            shapes[name] = (ffn,)
        elif name.endswith("_w2"):
            shapes[name] = (ffn, dim)
        else:  # _b2, ln gains/biases
            shapes[name] = (dim,)
    return shapes


@dataclass
class TransformerModel:
    layers: int
    heads: int
    dim: int
    ffn: int
    vocab_size: int
    weights: dict

    def __post_init__(self):
        if self.dim % self.heads != 0:
            raise DataError(f"dim {self.dim} not divisible by heads {self.heads}")
        if self.dim % 2 != 0:
            raise DataError("dim must be even for sinusoidal positions")
        expected = _expected_shapes(
            self.layers, self.heads, self.dim, self.ffn, self.vocab_size
        )
        for name, shape in expected.items():
            if name not in self.weights:
                raise DataError(f"missing weight array {name!r}")
            got = self.weights[name].shape
            if got != shape:
                raise DataError(f"weight {name!r} has shape {got}, expected {shape}")
            if not np.all(np.isfinite(self.weights[name])):
                raise DataError(f"weight {name!r} contains non-finite values")
        extra = set(self.weights) - set(expected)
        if extra:
            raise DataError(f"unexpected weight arrays: {sorted(extra)}")


def init_model(
    layers: int = 2,
    heads: int = 2,
    dim: int = 16,
    ffn: int = 32,
    vocab_size: int = 32,
    seed: int = 0,
) -> TransformerModel:
    """Seeded deterministic initialization for fixtures and tests."""
    rng = SplitMix64(seed)
    scale = 1.0 / math.sqrt(dim)

    def uniform(shape):
        flat = np.array(
            [(rng.random() * 2.0 - 1.0) * scale for _ in range(int(np.prod(shape)))]
        )
        return flat.reshape(shape)

    weights = {}
    for name, shape in _expected_shapes(layers, heads, dim, ffn, vocab_size).items():
        if name.endswith("_g"):
            weights[name] = np.ones(shape)
        elif name.endswith(("_b", "_b1", "_b2", "_bq", "_bk", "_bv", "_bo")):
            weights[name] = np.zeros(shape)
        else:
            weights[name] = uniform(shape)
    return TransformerModel(
        layers=layers, heads=heads, dim=dim, ffn=ffn, vocab_size=vocab_size, weights=weights
    )


def save_model(model: TransformerModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("mtlens-weights 1\n")
        fh.write(f"layers {model.layers}\n")
        fh.write(f"heads {model.heads}\n")
        fh.write(f"dim {model.dim}\n")
        fh.write(f"ffn {model.ffn}\n")
        fh.write(f"vocab {model.vocab_size}\n")
        for name in sorted(model.weights):
            arr = model.weights[name]
            dims = " ".join(str(d) for d in arr.shape)
            fh.write(f"array {name} {dims}\n")
            rows = arr.reshape(1, -1) if arr.ndim == 1 else arr
            for row in rows:
                fh.write(" ".join(f"{v:.17g}" for v in row))
                fh.write("\n")


def load_model(path) -> TransformerModel:
    config = {}
    weights = {}
    with open(path, "r", encoding="utf-8") as fh:
        magic = fh.readline().split()
        if magic[:1] != ["mtlens-weights"]:
            raise DataError(f"{path}: not a weight file")
        line = fh.readline()
        while line:
            parts = line.split()
            if not parts:
                line = fh.readline()
                continue
            if parts[0] == "array":
                name = parts[1]
                shape = tuple(int(d) for d in parts[2:])
                n_rows = 1 if len(shape) == 1 else shape[0]
                rows = []
                for _ in range(n_rows):
                    rows.append([float(v) for v in fh.readline().split()])
                try:
                    weights[name] = np.array(rows, dtype=np.float64).reshape(shape)
                except ValueError as exc:
                    raise DataError(f"{path}: array {name} malformed: {exc}") from exc
            elif len(parts) == 2:
                config[parts[0]] = int(parts[1])
            else:
                raise DataError(f"{path}: unparseable line {line!r}")
            line = fh.readline()
    try:
        return TransformerModel(
            layers=config["layers"],
            heads=config["heads"],
            dim=config["dim"],
            ffn=config["ffn"],
            vocab_size=config["vocab"],
            weights=weights,
        )
    except KeyError as exc:
        raise DataError(f"{path}: missing config key {exc}") from exc


# ---------------------------------------------------------------------------
# forward pass


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    i = np.arange(dim // 2)[None, :]
    angles = pos / np.power(10000.0, 2.0 * i / dim)
    pe = np.zeros((length, dim))
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles)
    return pe


def _layer_norm(x, gain, bias):
    mean = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    std = np.sqrt(var + LN_EPS)
    out = gain * (x - mean) / std + bias
    return out, {"x": x, "mean": mean, "std": std, "gain": gain, "out": out}


def _softmax(scores):
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _heads(x, heads):
    t, d = x.shape
    return x.reshape(t, heads, d // heads).transpose(1, 0, 2)  # (H, T, dh)


def _unheads(x):
    h, t, dh = x.shape
    return x.transpose(1, 0, 2).reshape(t, h * dh)


def _attention(model, prefix, q_in, kv_in, causal):
    w = model.weights
    q = q_in @ w[f"{prefix}_wq"] + w[f"{prefix}_bq"]
    k = kv_in @ w[f"{prefix}_wk"] + w[f"{prefix}_bk"]
    v = kv_in @ w[f"{prefix}_wv"] + w[f"{prefix}_bv"]
    qh, kh, vh = (_heads(a, model.heads) for a in (q, k, v))
    dh = model.dim // model.heads
    scores = qh @ kh.transpose(0, 2, 1) / math.sqrt(dh)  # (H, Tq, Tk)
    if causal:
        tq = q_in.shape[0]
        mask = np.triu(np.ones((tq, tq), dtype=bool), k=1)
        scores = np.where(mask[None, :, :], -1e30, scores)
    probs = _softmax(scores)
    ctx_h = probs @ vh  # (H, Tq, dh)
    ctx = _unheads(ctx_h)
    out = ctx @ w[f"{prefix}_wo"] + w[f"{prefix}_bo"]
    cache = {"q_in": q_in, "kv_in": kv_in, "v": v, "probs": probs, "ctx": ctx, "out": out}
    return out, cache


def _ffn(model, prefix, x):
    w = model.weights
    z1 = x @ w[f"{prefix}_w1"] + w[f"{prefix}_b1"]
    relu = np.maximum(z1, 0.0)
    z2 = relu @ w[f"{prefix}_w2"] + w[f"{prefix}_b2"]
    cache = {"x": x, "z1": z1, "relu": relu, "z2": z2}
    return z2, cache


def _encoder_layer(model, i, x):
    attn_out, attn_cache = _attention(model, f"enc{i}_attn", x, x, causal=False)
    sum1 = x + attn_out
    h1, ln1_cache = _layer_norm(sum1, model.weights[f"enc{i}_ln1_g"], model.weights[f"enc{i}_ln1_b"])
    ffn_out, ffn_cache = _ffn(model, f"enc{i}_ffn", h1)
    sum2 = h1 + ffn_out
    h2, ln2_cache = _layer_norm(sum2, model.weights[f"enc{i}_ln2_g"], model.weights[f"enc{i}_ln2_b"])
    cache = {
        "x": x, "attn": attn_cache, "sum1": sum1, "ln1": ln1_cache,
        "h1": h1, "ffn": ffn_cache, "sum2": sum2, "ln2": ln2_cache, "h2": h2,
    }
    return h2, cache


def _decoder_layer(model, i, y, enc_out):
    self_out, self_cache = _attention(model, f"dec{i}_self", y, y, causal=True)
    sum1 = y + self_out
    h1, ln1_cache = _layer_norm(sum1, model.weights[f"dec{i}_ln1_g"], model.weights[f"dec{i}_ln1_b"])
    cross_out, cross_cache = _attention(model, f"dec{i}_cross", h1, enc_out, causal=False)
    sum2 = h1 + cross_out
    h2, ln2_cache = _layer_norm(sum2, model.weights[f"dec{i}_ln2_g"], model.weights[f"dec{i}_ln2_b"])
    ffn_out, ffn_cache = _ffn(model, f"dec{i}_ffn", h2)
    sum3 = h2 + ffn_out
    h3, ln3_cache = _layer_norm(sum3, model.weights[f"dec{i}_ln3_g"], model.weights[f"dec{i}_ln3_b"])
    cache = {
        "y": y, "self": self_cache, "sum1": sum1, "ln1": ln1_cache, "h1": h1,
        "cross": cross_cache, "sum2": sum2, "ln2": ln2_cache, "h2": h2,
        "ffn": ffn_cache, "sum3": sum3, "ln3": ln3_cache, "h3": h3,
    }
    return h3, cache


def forward(model: TransformerModel, src_ids, tgt_prefix_ids):
    """One decoding step; returns (logits over vocab, activation cache)."""
    src_ids = list(src_ids)
    tgt_prefix_ids = list(tgt_prefix_ids)
    if not src_ids:
        raise DataError("source must contain at least one token id")
    if not tgt_prefix_ids:
        raise DataError("target prefix must contain at least the BOS id")
    for ids in (src_ids, tgt_prefix_ids):
        for t in ids:
            if not 0 <= t < model.vocab_size:
                raise DataError(f"token id {t} out of range [0,{model.vocab_size})")

    emb = model.weights["embedding"]
    src_embed = emb[src_ids] + sinusoidal_positions(len(src_ids), model.dim)
    enc_layers = []
    h = src_embed
    for i in range(model.layers):
        h, cache = _encoder_layer(model, i, h)
        enc_layers.append(cache)
    enc_out = h
    if not np.all(np.isfinite(enc_out)):
        raise NumericError("non-finite activation in encoder")

    tgt_embed = emb[tgt_prefix_ids] + sinusoidal_positions(len(tgt_prefix_ids), model.dim)
    dec_layers = []
    h = tgt_embed
    for i in range(model.layers):
        h, cache = _decoder_layer(model, i, h, enc_out)
        dec_layers.append(cache)
    dec_out = h
    if not np.all(np.isfinite(dec_out)):
        raise NumericError("non-finite activation in decoder")

    last = dec_out[-1]
    logits = last @ model.weights["out_w"] + model.weights["out_b"]
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in forward pass")

    cache = {
        "src_ids": src_ids,
        "tgt_prefix_ids": tgt_prefix_ids,
        "src_embed": src_embed,
        "tgt_embed": tgt_embed,
        "enc_layers": enc_layers,
        "enc_out": enc_out,
        "dec_layers": dec_layers,
        "dec_out": dec_out,
        "logits": logits,
    }
    return logits, cache
