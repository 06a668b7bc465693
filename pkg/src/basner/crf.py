"""Linear-chain CRF: path scoring, exact log-partition, Viterbi decoding,
marginals, and negative log-likelihood with analytic gradients.

Transitions, start and stop scores are unnormalized reals; normalization is
global (the log-partition over all label paths). Shared by the segmentation
head (L=4) and the NER head (L=17).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .numerics import Rng, uniform_init


@dataclass
class CrfParams:
    trans: np.ndarray  # [L, L]; trans[i, j] scores label j following label i
    start: np.ndarray  # [L]
    stop: np.ndarray   # [L]

    @property
    def num_labels(self) -> int:
        return self.start.shape[0]


def init_crf(num_labels: int, rng: Rng) -> CrfParams:
    return CrfParams(
        trans=uniform_init((num_labels, num_labels), rng),
        start=uniform_init((num_labels,), rng),
        stop=uniform_init((num_labels,), rng),
    )


def _check(em: np.ndarray, crf: CrfParams) -> tuple[np.ndarray, int, int]:
    em = np.ascontiguousarray(em, dtype=np.float64)
    if em.ndim != 2 or em.shape[0] < 1:
        raise ValueError(f"emission matrix must be [T>=1, L], got {em.shape}")
    T, L = em.shape
    if crf.trans.shape != (L, L) or crf.start.shape != (L,) or crf.stop.shape != (L,):
        raise ValueError(
            f"CRF parameter shapes {crf.trans.shape}/{crf.start.shape}/"
            f"{crf.stop.shape} do not match emissions with L={L}")
    return em, T, L


def score_path(em: np.ndarray, crf: CrfParams, labels) -> float:
    """Unnormalized score of one label path.

    Summation order matches the Viterbi kernel: start + em[0], then per step
    (+trans) then (+em), finally +stop.
    """
    em, T, L = _check(em, crf)
    labels = list(labels)
    if len(labels) != T:
        raise ValueError(f"path length {len(labels)} != T={T}")
    for y in labels:
        if not 0 <= y < L:
            raise ValueError(f"label {y} out of range [0, {L})")
    s = float(crf.start[labels[0]]) + float(em[0, labels[0]])
    for t in range(1, T):
        s = s + float(crf.trans[labels[t - 1], labels[t]])
        s = s + float(em[t, labels[t]])
    return s + float(crf.stop[labels[-1]])


def log_partition(em: np.ndarray, crf: CrfParams) -> float:
    em, _, _ = _check(em, crf)
    logz, _, _ = kernels.forward_backward(em, crf.trans, crf.start, crf.stop)
    return float(logz)


def viterbi(em: np.ndarray, crf: CrfParams) -> tuple[np.ndarray, float]:
    """Best path and its score; ties go to the lowest label index at each
    backtracking decision."""
    em, _, _ = _check(em, crf)
    path, score = kernels.viterbi(em, crf.trans, crf.start, crf.stop)
    return np.asarray(path), float(score)


def marginals(em: np.ndarray, crf: CrfParams) -> np.ndarray:
    """Per-position label probabilities [T, L]; each row sums to 1."""
    em, _, _ = _check(em, crf)
    logz, alpha, beta = kernels.forward_backward(
        em, crf.trans, crf.start, crf.stop)
    return np.exp(np.asarray(alpha) + np.asarray(beta) - logz)


def nll_and_grad(em: np.ndarray, crf: CrfParams, gold):
    """Negative log-likelihood of the gold path plus gradients.

    Returns (loss, d_em, CrfParams gradient). Gradients are expected minus
    observed feature counts, so d_em[t] = marginal[t] - onehot(gold[t]).
    """
    em, T, L = _check(em, crf)
    gold = list(gold)
    gold_score = score_path(em, crf, gold)  # validates gold
    logz, alpha, beta = kernels.forward_backward(
        em, crf.trans, crf.start, crf.stop)
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)
    loss = float(logz) - gold_score

    marg = np.exp(alpha + beta - logz)
    d_em = marg.copy()
    d_em[np.arange(T), gold] -= 1.0

    d_trans = np.zeros((L, L))
    for t in range(1, T):
        d_trans += np.exp(alpha[t - 1][:, None] + crf.trans
                          + (em[t] + beta[t])[None, :] - logz)
        d_trans[gold[t - 1], gold[t]] -= 1.0
    d_start = marg[0].copy()
    d_start[gold[0]] -= 1.0
    d_stop = marg[T - 1].copy()
    d_stop[gold[-1]] -= 1.0
    return loss, d_em, CrfParams(trans=d_trans, start=d_start, stop=d_stop)
