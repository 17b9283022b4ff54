"""
Encoder-decoder transformer with a language-modeling (policy) head and a scalar
value head, pre-layer-norm residual blocks and learned absolute positions.

The forward functions optionally record their intermediates on a :class:`Tape`;
:func:`backward` replays the tape in reverse and returns exact gradients for
every parameter given upstream gradients on the logits and values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from rltc.ingestion.tokenizer import PAD
from rltc.model import layers as L
from rltc.model.params import GradientStore, ModelParams

logger = logging.getLogger(__name__)

LN2 = float(np.log(2.0))


class ShapeMismatch(ValueError):
    pass


class EmptyTarget(ValueError):
    pass


@dataclass
class Tape:
    """Intermediates of one encoder and/or decoder pass, consumed by :func:`backward`."""

    enc_embed: Optional[tuple] = None
    enc_blocks: List[dict] = field(default_factory=list)
    enc_final: Optional[tuple] = None
    dec_embed: Optional[tuple] = None
    dec_blocks: List[dict] = field(default_factory=list)
    dec_final: Optional[tuple] = None
    dec_hidden: Optional[np.ndarray] = None
    enc_out: Optional[np.ndarray] = None


def _as_batch(tokens, valid_len) -> Tuple[np.ndarray, np.ndarray, bool]:
    ids = np.asarray(tokens, dtype=np.int64)
    single = ids.ndim == 1
    if single:
        ids = ids[None, :]
    if valid_len is None:
        valid = np.full(ids.shape[0], ids.shape[1], dtype=np.int64)
    else:
        valid = np.atleast_1d(np.asarray(valid_len, dtype=np.int64))
    return ids, valid, single


def _check_ids(params: ModelParams, ids: np.ndarray, what: str) -> None:
    cfg = params.config
    if ids.shape[-1] > cfg.max_pos:
        raise ShapeMismatch(f"{what} length {ids.shape[-1]} exceeds max_pos {cfg.max_pos}")
    if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab):
        raise ShapeMismatch(f"{what} contains ids outside vocab of {cfg.vocab}")


def forward_encoder(params: ModelParams, tokens, valid_len=None, tape: Optional[Tape] = None) -> np.ndarray:
    """
    Fully visible encoder pass.

    Args:
        params: Network weights.
        tokens: (S,) or (B, S) token ids.
        valid_len: Scalar or (B,) count of non-PAD positions; keys past it are masked.
        tape: Record intermediates for :func:`backward` when given.

    Returns:
        Hidden states shaped (S, D) or (B, S, D) to match ``tokens``.
    """
    cfg = params.config
    ids, valid, single = _as_batch(tokens, valid_len)
    _check_ids(params, ids, "encoder input")
    # a row with nothing visible would attend uniformly to PAD; keep position 0
    valid = np.maximum(valid, 1)
    batch, seq = ids.shape
    allowed = L.padding_allowed(valid, seq, seq)

    x, embed_cache = L.embed_forward(params["tok_emb"], params["pos_emb"], ids)
    blocks = []
    for i in range(cfg.n_layers_enc):
        p = f"enc.{i}"
        xn, ln1 = L.layer_norm_forward(x, params[f"{p}.ln1.g"], params[f"{p}.ln1.b"])
        a, attn = L.attention_forward(
            xn, xn,
            params[f"{p}.self_attn.wq"], params[f"{p}.self_attn.wk"],
            params[f"{p}.self_attn.wv"], params[f"{p}.self_attn.wo"],
            allowed, cfg.n_heads,
        )
        x1 = x + a
        x1n, ln2 = L.layer_norm_forward(x1, params[f"{p}.ln2.g"], params[f"{p}.ln2.b"])
        f, ffn = L.ffn_forward(
            x1n, params[f"{p}.ffn.w1"], params[f"{p}.ffn.b1"],
            params[f"{p}.ffn.w2"], params[f"{p}.ffn.b2"], cfg.activation,
        )
        x = x1 + f
        blocks.append({"ln1": ln1, "attn": attn, "ln2": ln2, "ffn": ffn})
    out, final = L.layer_norm_forward(x, params["enc.ln_f.g"], params["enc.ln_f.b"])

    if tape is not None:
        tape.enc_embed, tape.enc_blocks, tape.enc_final = embed_cache, blocks, final
        tape.enc_out = out
    return out[0] if single else out


def forward_decoder(
    params: ModelParams,
    enc: np.ndarray,
    dec_ids,
    enc_valid_len=None,
    tape: Optional[Tape] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Causal decoder pass with cross-attention to ``enc``.

    Args:
        params: Network weights.
        enc: (S, D) or (B, S, D) encoder states.
        dec_ids: (T,) or (B, T) decoder inputs, conventionally starting with BOS.
        enc_valid_len: Encoder positions visible to cross-attention.
        tape: Record intermediates for :func:`backward` when given.

    Returns:
        ``(logits, values)`` shaped (T, V)/(T,) or (B, T, V)/(B, T).
    """
    cfg = params.config
    ids, enc_valid, single = _as_batch(dec_ids, enc_valid_len)
    memory = enc[None] if enc.ndim == 2 else enc
    _check_ids(params, ids, "decoder input")
    if enc_valid_len is None:
        enc_valid = np.full(ids.shape[0], memory.shape[1], dtype=np.int64)
    enc_valid = np.maximum(enc_valid, 1)
    batch, steps = ids.shape
    self_allowed = L.causal_allowed(batch, steps)
    cross_allowed = L.padding_allowed(enc_valid, steps, memory.shape[1])

    y, embed_cache = L.embed_forward(params["tok_emb"], params["pos_emb"], ids)
    blocks = []
    for i in range(cfg.n_layers_dec):
        p = f"dec.{i}"
        yn, ln1 = L.layer_norm_forward(y, params[f"{p}.ln1.g"], params[f"{p}.ln1.b"])
        a, self_attn = L.attention_forward(
            yn, yn,
            params[f"{p}.self_attn.wq"], params[f"{p}.self_attn.wk"],
            params[f"{p}.self_attn.wv"], params[f"{p}.self_attn.wo"],
            self_allowed, cfg.n_heads,
        )
        y1 = y + a
        y1n, ln2 = L.layer_norm_forward(y1, params[f"{p}.ln2.g"], params[f"{p}.ln2.b"])
        c, cross_attn = L.attention_forward(
            y1n, memory,
            params[f"{p}.cross_attn.wq"], params[f"{p}.cross_attn.wk"],
            params[f"{p}.cross_attn.wv"], params[f"{p}.cross_attn.wo"],
            cross_allowed, cfg.n_heads,
        )
        y2 = y1 + c
        y2n, ln3 = L.layer_norm_forward(y2, params[f"{p}.ln3.g"], params[f"{p}.ln3.b"])
        f, ffn = L.ffn_forward(
            y2n, params[f"{p}.ffn.w1"], params[f"{p}.ffn.b1"],
            params[f"{p}.ffn.w2"], params[f"{p}.ffn.b2"], cfg.activation,
        )
        y = y2 + f
        blocks.append({"ln1": ln1, "self_attn": self_attn, "ln2": ln2, "cross_attn": cross_attn, "ln3": ln3, "ffn": ffn})
    h, final = L.layer_norm_forward(y, params["dec.ln_f.g"], params["dec.ln_f.b"])
    logits = h @ params["lm_head"]
    values = (h @ params["value_head"])[..., 0] + params["value_head.b"][0]

    if tape is not None:
        tape.dec_embed, tape.dec_blocks, tape.dec_final = embed_cache, blocks, final
        tape.dec_hidden = h
    if single:
        return logits[0], values[0]
    return logits, values


def backward(
    params: ModelParams,
    tape: Tape,
    dlogits: Optional[np.ndarray] = None,
    dvalues: Optional[np.ndarray] = None,
) -> GradientStore:
    """
    Reverse-mode pass over a recorded encoder+decoder forward.

    Args:
        params: The weights the forward pass used.
        tape: Tape filled by :func:`forward_encoder` and :func:`forward_decoder`.
        dlogits: d(objective)/d(logits), shaped like the logits (or None).
        dvalues: d(objective)/d(values), shaped like the values (or None).

    Returns:
        Gradients of the scalar objective for every parameter.
    """
    cfg = params.config
    grads = GradientStore.zeros_like(params)
    h = tape.dec_hidden
    if h is None or tape.enc_out is None:
        raise ValueError("tape holds no decoder pass")
    if dlogits is None:
        dlogits = np.zeros(h.shape[:-1] + (cfg.vocab,))
    if dvalues is None:
        dvalues = np.zeros(h.shape[:-1])
    if dlogits.ndim == 2:
        dlogits = dlogits[None]
    if dvalues.ndim == 1:
        dvalues = dvalues[None]

    grads.accumulate("lm_head", L.linear_weight_grad(h, dlogits))
    grads.accumulate("value_head", L.linear_weight_grad(h, dvalues[..., None]))
    grads.accumulate("value_head.b", np.array([dvalues.sum()]))
    dh = dlogits @ params["lm_head"].T + dvalues[..., None] * params["value_head"][:, 0]

    dy, dg, db = L.layer_norm_backward(dh, tape.dec_final)
    grads.accumulate("dec.ln_f.g", dg)
    grads.accumulate("dec.ln_f.b", db)

    d_memory = np.zeros_like(tape.enc_out)
    for i in reversed(range(cfg.n_layers_dec)):
        p, block = f"dec.{i}", tape.dec_blocks[i]
        # y = y2 + ffn(ln3(y2))
        dy2n, dw1, db1, dw2, db2 = L.ffn_backward(dy, block["ffn"], params[f"{p}.ffn.w1"], params[f"{p}.ffn.w2"])
        for name, g in (("w1", dw1), ("b1", db1), ("w2", dw2), ("b2", db2)):
            grads.accumulate(f"{p}.ffn.{name}", g)
        dx, dg, db = L.layer_norm_backward(dy2n, block["ln3"])
        grads.accumulate(f"{p}.ln3.g", dg)
        grads.accumulate(f"{p}.ln3.b", db)
        dy2 = dy + dx
        # y2 = y1 + cross(ln2(y1), memory)
        dq, dmem, *w = L.attention_backward(
            dy2, block["cross_attn"],
            params[f"{p}.cross_attn.wq"], params[f"{p}.cross_attn.wk"],
            params[f"{p}.cross_attn.wv"], params[f"{p}.cross_attn.wo"],
        )
        for name, g in zip(("wq", "wk", "wv", "wo"), w):
            grads.accumulate(f"{p}.cross_attn.{name}", g)
        d_memory += dmem
        dx, dg, db = L.layer_norm_backward(dq, block["ln2"])
        grads.accumulate(f"{p}.ln2.g", dg)
        grads.accumulate(f"{p}.ln2.b", db)
        dy1 = dy2 + dx
        # y1 = y + self(ln1(y))
        dq, dkv, *w = L.attention_backward(
            dy1, block["self_attn"],
            params[f"{p}.self_attn.wq"], params[f"{p}.self_attn.wk"],
            params[f"{p}.self_attn.wv"], params[f"{p}.self_attn.wo"],
        )
        for name, g in zip(("wq", "wk", "wv", "wo"), w):
            grads.accumulate(f"{p}.self_attn.{name}", g)
        dx, dg, db = L.layer_norm_backward(dq + dkv, block["ln1"])
        grads.accumulate(f"{p}.ln1.g", dg)
        grads.accumulate(f"{p}.ln1.b", db)
        dy = dy1 + dx

    d_tok, d_pos = L.embed_backward(dy, tape.dec_embed, cfg.vocab, cfg.max_pos, cfg.d_model)
    grads.accumulate("tok_emb", d_tok)
    grads.accumulate("pos_emb", d_pos)

    dx, dg, db = L.layer_norm_backward(d_memory, tape.enc_final)
    grads.accumulate("enc.ln_f.g", dg)
    grads.accumulate("enc.ln_f.b", db)
    for i in reversed(range(cfg.n_layers_enc)):
        p, block = f"enc.{i}", tape.enc_blocks[i]
        dx1n, dw1, db1, dw2, db2 = L.ffn_backward(dx, block["ffn"], params[f"{p}.ffn.w1"], params[f"{p}.ffn.w2"])
        for name, g in (("w1", dw1), ("b1", db1), ("w2", dw2), ("b2", db2)):
            grads.accumulate(f"{p}.ffn.{name}", g)
        d_ln, dg, db = L.layer_norm_backward(dx1n, block["ln2"])
        grads.accumulate(f"{p}.ln2.g", dg)
        grads.accumulate(f"{p}.ln2.b", db)
        dx1 = dx + d_ln
        dq, dkv, *w = L.attention_backward(
            dx1, block["attn"],
            params[f"{p}.self_attn.wq"], params[f"{p}.self_attn.wk"],
            params[f"{p}.self_attn.wv"], params[f"{p}.self_attn.wo"],
        )
        for name, g in zip(("wq", "wk", "wv", "wo"), w):
            grads.accumulate(f"{p}.self_attn.{name}", g)
        d_ln, dg, db = L.layer_norm_backward(dq + dkv, block["ln1"])
        grads.accumulate(f"{p}.ln1.g", dg)
        grads.accumulate(f"{p}.ln1.b", db)
        dx = dx1 + d_ln

    d_tok, d_pos = L.embed_backward(dx, tape.enc_embed, cfg.vocab, cfg.max_pos, cfg.d_model)
    grads.accumulate("tok_emb", d_tok)
    grads.accumulate("pos_emb", d_pos)
    return grads


# -------------------------- losses --------------------------


def token_cross_entropy(logits: np.ndarray, targets, ignore_index: int = PAD) -> Tuple[np.ndarray, np.ndarray]:
    """Per-position cross-entropy in nats and the mask of counted positions."""
    t = np.asarray(targets, dtype=np.int64)
    logp = L.log_softmax(logits)
    mask = t != ignore_index
    safe = np.where(mask, t, 0)
    ce = -np.take_along_axis(logp, safe[..., None], axis=-1)[..., 0]
    return np.where(mask, ce, 0.0), mask


def lm_loss(logits: np.ndarray, targets, ignore_index: int = PAD) -> float:
    """Mean token-level cross-entropy (nats) over non-ignored targets."""
    value, _ = lm_loss_and_grad(logits, targets, ignore_index)
    return value


def lm_loss_and_grad(logits: np.ndarray, targets, ignore_index: int = PAD) -> Tuple[float, np.ndarray]:
    t = np.asarray(targets, dtype=np.int64)
    if t.shape != logits.shape[:-1]:
        raise ShapeMismatch(f"targets shape {t.shape} does not match logits {logits.shape[:-1]}")
    ce, mask = token_cross_entropy(logits, t, ignore_index)
    count = int(mask.sum())
    if count == 0:
        raise EmptyTarget("every target position is ignored")
    dlogits = L.softmax(logits)
    onehot_rows = np.nonzero(mask)
    dlogits[onehot_rows + (t[onehot_rows],)] -= 1.0
    dlogits *= mask[..., None] / count
    return float(ce.sum() / count), dlogits


def sequence_cost_bits(logits: np.ndarray, targets, ignore_index: int = PAD) -> np.ndarray:
    """Summed cross-entropy of each sequence converted to bits, shape (B,)."""
    ce, _ = token_cross_entropy(logits, targets, ignore_index)
    return ce.sum(axis=-1) / LN2


# -------------------------- incremental decoding --------------------------


class IncrementalDecoder:
    """
    Key/value-cached decoder for autoregressive generation.

    Produces the same logits and values as :func:`forward_decoder` on the
    growing prefix, one position per :meth:`step`.
    """

    def __init__(self, params: ModelParams, enc: np.ndarray, enc_valid_len):
        self.params = params
        cfg = params.config
        self.memory = enc[None] if enc.ndim == 2 else enc
        batch, seq, _ = self.memory.shape
        valid = np.maximum(np.atleast_1d(np.asarray(enc_valid_len, dtype=np.int64)), 1)
        self.cross_allowed = L.padding_allowed(valid, 1, seq)
        self.position = 0
        self.self_k: List[np.ndarray] = []
        self.self_v: List[np.ndarray] = []
        self.cross_kv = []
        for i in range(cfg.n_layers_dec):
            p = f"dec.{i}"
            k = L.split_heads(self.memory @ params[f"{p}.cross_attn.wk"], cfg.n_heads)
            v = L.split_heads(self.memory @ params[f"{p}.cross_attn.wv"], cfg.n_heads)
            self.cross_kv.append((k, v))
            self.self_k.append(np.zeros((batch, cfg.n_heads, 0, cfg.head_dim)))
            self.self_v.append(np.zeros((batch, cfg.n_heads, 0, cfg.head_dim)))

    def step(self, token_ids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Feed one token per row; returns ``(logits (B, V), values (B,))`` for that position."""
        params, cfg = self.params, self.params.config
        ids = np.asarray(token_ids, dtype=np.int64).reshape(-1, 1)
        if self.position >= cfg.max_pos:
            raise ShapeMismatch(f"decoder position {self.position} exceeds max_pos {cfg.max_pos}")
        y, _ = L.embed_forward(params["tok_emb"], params["pos_emb"], ids, start=self.position)
        batch = ids.shape[0]
        for i in range(cfg.n_layers_dec):
            p = f"dec.{i}"
            yn, _ = L.layer_norm_forward(y, params[f"{p}.ln1.g"], params[f"{p}.ln1.b"])
            q = L.split_heads(yn @ params[f"{p}.self_attn.wq"], cfg.n_heads)
            k = L.split_heads(yn @ params[f"{p}.self_attn.wk"], cfg.n_heads)
            v = L.split_heads(yn @ params[f"{p}.self_attn.wv"], cfg.n_heads)
            self.self_k[i] = np.concatenate([self.self_k[i], k], axis=2)
            self.self_v[i] = np.concatenate([self.self_v[i], v], axis=2)
            allowed = np.ones((batch, 1, self.position + 1), dtype=bool)
            o, _ = L.attend(q, self.self_k[i], self.self_v[i], allowed)
            y = y + L.merge_heads(o) @ params[f"{p}.self_attn.wo"]

            yn, _ = L.layer_norm_forward(y, params[f"{p}.ln2.g"], params[f"{p}.ln2.b"])
            q = L.split_heads(yn @ params[f"{p}.cross_attn.wq"], cfg.n_heads)
            ck, cv = self.cross_kv[i]
            o, _ = L.attend(q, ck, cv, self.cross_allowed)
            y = y + L.merge_heads(o) @ params[f"{p}.cross_attn.wo"]

            yn, _ = L.layer_norm_forward(y, params[f"{p}.ln3.g"], params[f"{p}.ln3.b"])
            f, _ = L.ffn_forward(
                yn, params[f"{p}.ffn.w1"], params[f"{p}.ffn.b1"],
                params[f"{p}.ffn.w2"], params[f"{p}.ffn.b2"], cfg.activation,
            )
            y = y + f
        h, _ = L.layer_norm_forward(y, params["dec.ln_f.g"], params["dec.ln_f.b"])
        self.position += 1
        logits = (h @ params["lm_head"])[:, 0, :]
        values = (h @ params["value_head"])[:, 0, 0] + params["value_head.b"][0]
        return logits, values
