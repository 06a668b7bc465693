"""Character embeddings, single-layer LSTM, and the affine projection from
features to per-label scores. Gradients are hand-derived and verified against
finite differences in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .numerics import Rng, uniform_init

# Positional-token suffixes: a character-positional embedding for char X at
# word position B/I/E/S is stored under token "X0"/"X1"/"X2"/"X3".
POSITION_SUFFIX = {"B": "0", "I": "1", "E": "2", "S": "3"}

UNK_TOKEN = "<UNK>"


class EmbeddingTable:
    """Token -> vector table with a guaranteed UNK row.

    Lookup fallback chain: positional token ("X" + suffix), bare token "X",
    then UNK, so every character maps to some vector.
    """

    def __init__(self, tokens: list[str], vectors: np.ndarray,
                 unk_token: str = UNK_TOKEN,
                 position_suffix: Optional[dict] = None):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError(
                f"vectors {vectors.shape} do not match {len(tokens)} tokens")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in embedding table")
        if unk_token not in tokens:
            tokens = list(tokens) + [unk_token]
            vectors = np.vstack([vectors, np.zeros((1, vectors.shape[1]))])
        self.tokens = list(tokens)
        self.vectors = np.ascontiguousarray(vectors)
        self.unk_token = unk_token
        self.index = {t: i for i, t in enumerate(self.tokens)}
        self.position_suffix = dict(position_suffix or POSITION_SUFFIX)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def lookup_index(self, char: str, pos_hint: Optional[str] = None) -> int:
        if pos_hint is not None:
            tok = char + self.position_suffix[pos_hint]
            i = self.index.get(tok)
            if i is not None:
                return i
        i = self.index.get(char)
        if i is not None:
            return i
        return self.index[self.unk_token]

    def lookup(self, char: str, pos_hint: Optional[str] = None) -> np.ndarray:
        return self.vectors[self.lookup_index(char, pos_hint)]


def load_embeddings(path, expected_dim: Optional[int] = None) -> EmbeddingTable:
    """Load a word2vec text file: header "count dim", then "token v1 .. v_dim"."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValueError(f"{path}: invalid UTF-8: {exc}") from None
    lines = [ln for ln in text.split("\n")]
    header = lines[0].split() if lines else []
    if len(header) != 2:
        raise ValueError(f"{path}: line 1: expected header 'count dim'")
    count, dim = int(header[0]), int(header[1])
    if expected_dim is not None and dim != expected_dim:
        raise ValueError(
            f"{path}: embedding dim {dim} does not match configured "
            f"{expected_dim}")
    tokens: list[str] = []
    rows = np.empty((count, dim))
    n = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.rstrip().split(" ")
        if len(parts) != dim + 1:
            raise ValueError(
                f"{path}: line {lineno}: expected token + {dim} floats, "
                f"got {len(parts) - 1}")
        if n >= count:
            raise ValueError(
                f"{path}: line {lineno}: more rows than header count {count}")
        tokens.append(parts[0])
        rows[n] = [float(v) for v in parts[1:]]
        n += 1
    if n != count:
        raise ValueError(f"{path}: header declares {count} rows, found {n}")
    return EmbeddingTable(tokens, rows)


def build_embedding_table(chars, dim: int, rng: Rng) -> EmbeddingTable:
    """Randomly initialized table over a character vocabulary."""
    tokens = sorted(set(chars))
    vecs = uniform_init((len(tokens) + 1, dim), rng)
    return EmbeddingTable(tokens + [UNK_TOKEN], vecs)


@dataclass
class LstmParams:
    """Gate weights stacked in i, f, o, g order: wx [4H, d], wh [4H, H], b [4H]."""
    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.wx.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.wx.shape[1]


def init_lstm(input_dim: int, hidden: int, rng: Rng) -> LstmParams:
    return LstmParams(
        wx=uniform_init((4 * hidden, input_dim), rng),
        wh=uniform_init((4 * hidden, hidden), rng),
        b=uniform_init((4 * hidden,), rng),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmCache:
    x: np.ndarray        # [T, d]
    gates: np.ndarray    # [T, 4H] post-activation (i, f, o, g)
    c: np.ndarray        # [T, H]
    tanh_c: np.ndarray   # [T, H]
    h: np.ndarray        # [T, H] pre-dropout
    mask: Optional[np.ndarray]
    params_id: int = field(default=0)


def lstm_forward(inputs: np.ndarray, params: LstmParams,
                 mask: Optional[np.ndarray] = None):
    """Run the recurrence with zero initial state.

    Returns (h_out [T, H], cache). The dropout mask, when given, multiplies
    the hidden states handed downstream only; the recurrent connection uses
    the raw hidden state.
    """
    x = np.asarray(inputs, dtype=np.float64)
    H = params.hidden_size
    if x.ndim != 2 or x.shape[1] != params.input_size:
        raise ValueError(
            f"inputs {x.shape} do not match LSTM input size "
            f"{params.input_size}")
    if mask is not None and mask.shape != (H,):
        raise ValueError(f"dropout mask shape {mask.shape} != ({H},)")
    T = x.shape[0]
    gates = np.empty((T, 4 * H))
    c = np.empty((T, H))
    tanh_c = np.empty((T, H))
    h = np.empty((T, H))
    h_prev = np.zeros(H)
    c_prev = np.zeros(H)
    for t in range(T):
        a = params.wx @ x[t] + params.wh @ h_prev + params.b
        i = _sigmoid(a[:H])
        f = _sigmoid(a[H:2 * H])
        o = _sigmoid(a[2 * H:3 * H])
        g = np.tanh(a[3 * H:])
        c[t] = f * c_prev + i * g
        tanh_c[t] = np.tanh(c[t])
        h[t] = o * tanh_c[t]
        gates[t, :H] = i
        gates[t, H:2 * H] = f
        gates[t, 2 * H:3 * H] = o
        gates[t, 3 * H:] = g
        h_prev = h[t]
        c_prev = c[t]
    h_out = h if mask is None else h * mask[None, :]
    cache = LstmCache(x=x, gates=gates, c=c, tanh_c=tanh_c, h=h,
                      mask=None if mask is None else mask.copy(),
                      params_id=id(params))
    return h_out, cache


@dataclass
class LstmGrads:
    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray


def lstm_backward(d_hout: np.ndarray, cache: LstmCache, params: LstmParams):
    """Backprop through the recurrence. Returns (LstmGrads, d_inputs [T, d])."""
    if cache.params_id != id(params):
        raise ValueError("LSTM cache does not belong to these parameters")
    T, H = cache.h.shape
    d_hout = np.asarray(d_hout, dtype=np.float64)
    if d_hout.shape != (T, H):
        raise ValueError(f"upstream gradient {d_hout.shape} != {(T, H)}")
    d_wx = np.zeros_like(params.wx)
    d_wh = np.zeros_like(params.wh)
    d_b = np.zeros_like(params.b)
    d_x = np.empty_like(cache.x)
    dh_rec = np.zeros(H)
    dc_rec = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i = cache.gates[t, :H]
        f = cache.gates[t, H:2 * H]
        o = cache.gates[t, 2 * H:3 * H]
        g = cache.gates[t, 3 * H:]
        dh = d_hout[t] * (cache.mask if cache.mask is not None else 1.0) + dh_rec
        do = dh * cache.tanh_c[t]
        dc = dh * o * (1.0 - cache.tanh_c[t] ** 2) + dc_rec
        di = dc * g
        dg = dc * i
        c_prev = cache.c[t - 1] if t > 0 else np.zeros(H)
        df = dc * c_prev
        dc_rec = dc * f
        da = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            do * o * (1.0 - o),
            dg * (1.0 - g ** 2),
        ])
        h_prev = cache.h[t - 1] if t > 0 else np.zeros(H)
        d_wx += np.outer(da, cache.x[t])
        d_wh += np.outer(da, h_prev)
        d_b += da
        d_x[t] = params.wx.T @ da
        dh_rec = params.wh.T @ da
    return LstmGrads(wx=d_wx, wh=d_wh, b=d_b), d_x


@dataclass
class Projection:
    w: np.ndarray  # [L, F]
    b: np.ndarray  # [L]


def init_projection(num_labels: int, num_features: int, rng: Rng) -> Projection:
    return Projection(w=uniform_init((num_labels, num_features), rng),
                      b=uniform_init((num_labels,), rng))


def project(features: np.ndarray, proj: Projection) -> np.ndarray:
    """Row-wise affine map [T, F] -> score matrix [T, L]."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != proj.w.shape[1]:
        raise ValueError(
            f"features {x.shape} do not match projection {proj.w.shape}")
    return x @ proj.w.T + proj.b


def project_backward(d_scores: np.ndarray, features: np.ndarray,
                     proj: Projection):
    """Returns (dW, db, d_features)."""
    d_scores = np.asarray(d_scores, dtype=np.float64)
    return d_scores.T @ features, d_scores.sum(axis=0), d_scores @ proj.w
