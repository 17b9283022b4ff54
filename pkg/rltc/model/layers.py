"""
Forward/backward primitives for the encoder-decoder.

Every ``*_forward`` returns ``(output, cache)`` and the matching ``*_backward``
takes the upstream gradient plus that cache. Arrays carry a leading batch axis:
activations are (B, T, D), attention probabilities (B, h, Tq, Tk).
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

# Masked scores are replaced (not offset) so exp() underflows to exactly 0.0.
MASKED_SCORE = -1e30
LN_EPS = 1e-5
_GELU_K = math.sqrt(2.0 / math.pi)
_GELU_C = 0.044715


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


# -------------------------- embeddings --------------------------


def embed_forward(tok_emb: np.ndarray, pos_emb: np.ndarray, ids: np.ndarray, start: int = 0):
    positions = np.arange(start, start + ids.shape[-1])
    x = tok_emb[ids] + pos_emb[positions]
    return x, (ids, positions)


def embed_backward(dx: np.ndarray, cache, vocab: int, max_pos: int, d_model: int):
    ids, positions = cache
    d_tok = np.zeros((vocab, d_model))
    np.add.at(d_tok, ids.reshape(-1), dx.reshape(-1, d_model))
    d_pos = np.zeros((max_pos, d_model))
    d_pos[positions] += dx.reshape(-1, positions.size, d_model).sum(axis=0)
    return d_tok, d_pos


# -------------------------- layer norm --------------------------


def layer_norm_forward(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    inv_sigma = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv_sigma
    return xhat * g + b, (xhat, inv_sigma, g)


def layer_norm_backward(dy: np.ndarray, cache):
    xhat, inv_sigma, g = cache
    ghat = dy * g
    m1 = ghat.mean(axis=-1, keepdims=True)
    m2 = (ghat * xhat).mean(axis=-1, keepdims=True)
    dx = (ghat - m1 - xhat * m2) * inv_sigma
    axes = tuple(range(dy.ndim - 1))
    return dx, (dy * xhat).sum(axis=axes), dy.sum(axis=axes)


# -------------------------- linear --------------------------


def linear_weight_grad(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])


# -------------------------- activations --------------------------


def activation_forward(u: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(u, 0.0)
    if kind == "gelu":
        return 0.5 * u * (1.0 + np.tanh(_GELU_K * (u + _GELU_C * u**3)))
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(u: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (u > 0.0).astype(u.dtype)
    if kind == "gelu":
        t = np.tanh(_GELU_K * (u + _GELU_C * u**3))
        return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * _GELU_K * (1.0 + 3.0 * _GELU_C * u * u)
    raise ValueError(f"unknown activation {kind!r}")


# -------------------------- feed-forward --------------------------


def ffn_forward(x, w1, b1, w2, b2, kind: str):
    u = x @ w1 + b1
    h = activation_forward(u, kind)
    return h @ w2 + b2, (x, u, h, kind)


def ffn_backward(dy, cache, w1, w2):
    x, u, h, kind = cache
    dw2 = linear_weight_grad(h, dy)
    db2 = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    du = (dy @ w2.T) * activation_grad(u, kind)
    dw1 = linear_weight_grad(x, du)
    db1 = du.reshape(-1, du.shape[-1]).sum(axis=0)
    return du @ w1.T, dw1, db1, dw2, db2


# -------------------------- multi-head attention --------------------------


def split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    """(B, T, D) -> (B, h, T, D/h)."""
    b, t, d = x.shape
    return x.reshape(b, t, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def merge_heads(x: np.ndarray) -> np.ndarray:
    """(B, h, T, d) -> (B, T, h*d)."""
    b, h, t, d = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * d)


def attend(q: np.ndarray, k: np.ndarray, v: np.ndarray, allowed: np.ndarray):
    """Scaled dot-product attention on split heads; ``allowed`` is (B, Tq, Tk)."""
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale
    scores = np.where(allowed[:, None, :, :], scores, MASKED_SCORE)
    p = softmax(scores)
    return p @ v, p


def attention_forward(xq, xkv, wq, wk, wv, wo, allowed: np.ndarray, n_heads: int):
    q = split_heads(xq @ wq, n_heads)
    k = split_heads(xkv @ wk, n_heads)
    v = split_heads(xkv @ wv, n_heads)
    o, p = attend(q, k, v, allowed)
    merged = merge_heads(o)
    return merged @ wo, (xq, xkv, q, k, v, p, merged)


def attention_backward(dy, cache, wq, wk, wv, wo) -> Tuple[np.ndarray, ...]:
    """Returns ``(dxq, dxkv, dwq, dwk, dwv, dwo)``; self-attention callers add dxq + dxkv."""
    xq, xkv, q, k, v, p, merged = cache
    n_heads = q.shape[1]
    scale = 1.0 / math.sqrt(q.shape[-1])

    dwo = linear_weight_grad(merged, dy)
    do = split_heads(dy @ wo.T, n_heads)

    dv = p.transpose(0, 1, 3, 2) @ do
    dp = do @ v.transpose(0, 1, 3, 2)
    ds = p * (dp - (dp * p).sum(axis=-1, keepdims=True)) * scale
    dq = ds @ k
    dk = ds.transpose(0, 1, 3, 2) @ q

    dq_m, dk_m, dv_m = merge_heads(dq), merge_heads(dk), merge_heads(dv)
    dwq = linear_weight_grad(xq, dq_m)
    dwk = linear_weight_grad(xkv, dk_m)
    dwv = linear_weight_grad(xkv, dv_m)
    dxq = dq_m @ wq.T
    dxkv = dk_m @ wk.T + dv_m @ wv.T
    return dxq, dxkv, dwq, dwk, dwv, dwo


# -------------------------- masks --------------------------


def padding_allowed(valid_len: np.ndarray, t_q: int, t_k: int) -> np.ndarray:
    """(B, Tq, Tk): keys at or past ``valid_len`` are hidden from every query."""
    keys = np.arange(t_k)[None, None, :] < np.asarray(valid_len)[:, None, None]
    return np.broadcast_to(keys, (keys.shape[0], t_q, t_k))


def causal_allowed(batch: int, t: int) -> np.ndarray:
    i = np.arange(t)
    return np.broadcast_to(i[None, :] <= i[:, None], (batch, t, t))
