"""Deterministic numerics shared by every other module.

All training math is 64-bit. The RNG is a fixed xorshift64* generator
(Marsaglia xorshift with the 2685821657736338717 multiplier) seeded through
one splitmix64 scramble, so identical seeds give bit-identical streams on
every platform. Test vectors live in tests/test_numerics.py.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_XORSHIFT_MULT = 0x2545F4914F6CDD1D


def _splitmix64(x: int) -> int:
    z = (x + _SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Rng:
    """xorshift64* stream; single-owner, not safe to share across tasks.

    Parallel code derives independent child streams via spawn(k) instead of
    sharing one instance.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        # splitmix64 scramble avoids the all-zero state xorshift cannot leave
        self._state = _splitmix64(self.seed) or _SPLITMIX_GAMMA

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _XORSHIFT_MULT) & _MASK64

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n). Plain modulo; the bias at n << 2^64 is
        far below anything observable here and keeps the stream portable."""
        if n <= 0:
            raise ValueError(f"randbelow requires n >= 1, got {n}")
        return self.next_u64() % n

    def uniform_array(self, shape, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        size = int(np.prod(shape))
        flat = np.fromiter((self.uniform() for _ in range(size)),
                           dtype=np.float64, count=size)
        return (low + (high - low) * flat).reshape(shape)

    def spawn(self, k: int) -> "Rng":
        """Deterministic child stream k; independent of this stream's position."""
        return Rng(_splitmix64(self.seed ^ ((k + 1) * _SPLITMIX_GAMMA & _MASK64)))


def affine(w: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """w @ x + b with explicit shape checking."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if w.ndim != 2 or x.ndim != 1 or b.ndim != 1 \
            or w.shape[1] != x.shape[0] or w.shape[0] != b.shape[0]:
        raise ValueError(
            f"affine shape mismatch: w{w.shape} x{x.shape} b{b.shape}")
    return w @ x + b


def logsumexp(v: np.ndarray) -> float:
    """Overflow-safe log(sum(exp(v))) via max shift."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ValueError("logsumexp of empty vector")
    m = float(v.max())
    return m + float(np.log(np.exp(v - m).sum()))


def dropout_mask(n: int, rate: float, rng: Rng) -> np.ndarray:
    """Inverted-dropout mask: entries are 0 w.p. rate, else 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    keep = 1.0 / (1.0 - rate)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = 0.0 if rng.uniform() < rate else keep
    return out


def sgd_step(param: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if param.shape != grad.shape:
        raise ValueError(
            f"sgd_step shape mismatch: param{param.shape} grad{grad.shape}")
    return param - lr * grad


def grad_check(f, analytic_grad: np.ndarray, params: np.ndarray,
               eps: float = 1e-5) -> float:
    """Max relative error between analytic_grad and central finite differences.

    Relative error per coordinate is |g - g_fd| / max(1, |g|, |g_fd|).
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    params = np.asarray(params, dtype=np.float64)
    analytic_grad = np.asarray(analytic_grad, dtype=np.float64)
    if params.shape != analytic_grad.shape:
        raise ValueError(
            f"grad_check shape mismatch: params{params.shape} "
            f"grad{analytic_grad.shape}")
    worst = 0.0
    for i in range(params.size):
        p = params.copy()
        p.flat[i] += eps
        fp = float(f(p))
        p.flat[i] -= 2 * eps
        fm = float(f(p))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite loss at coordinate {i}")
        fd = (fp - fm) / (2 * eps)
        g = analytic_grad.flat[i]
        err = abs(g - fd) / max(1.0, abs(g), abs(fd))
        worst = max(worst, err)
    return worst


def uniform_init(shape, rng: Rng, scale: float = 0.05) -> np.ndarray:
    """Parameter init: uniform in [-scale, scale) from the seeded stream."""
    return rng.uniform_array(shape, -scale, scale)
