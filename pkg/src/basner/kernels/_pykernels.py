"""numpy fallback for the CRF dynamic-programming kernels.

Both backends follow the same floating-point order so Viterbi path scores
reproduce a brute-force sum exactly:

    score = start[y0] + em[0, y0]
    for t >= 1: score = (score + trans[y_{t-1}, y_t]) + em[t, y_t]
    score = score + stop[y_T]
"""
import numpy as np


def forward_backward(em, trans, start, stop):
    """Returns (log_partition, alpha[T,L], beta[T,L]).

    alpha[t, l] includes em[t, l]; beta[t, l] excludes it, so the node
    marginal is exp(alpha + beta - logZ).
    """
    T, L = em.shape
    alpha = np.empty((T, L))
    beta = np.empty((T, L))
    alpha[0] = start + em[0]
    for t in range(1, T):
        m = alpha[t - 1][:, None] + trans
        mx = m.max(axis=0)
        alpha[t] = em[t] + (mx + np.log(np.exp(m - mx).sum(axis=0)))
    beta[T - 1] = stop
    for t in range(T - 2, -1, -1):
        m = trans + (em[t + 1] + beta[t + 1])[None, :]
        mx = m.max(axis=1)
        beta[t] = mx + np.log(np.exp(m - mx[:, None]).sum(axis=1))
    v = alpha[T - 1] + stop
    mx = float(v.max())
    logz = mx + float(np.log(np.exp(v - mx).sum()))
    return logz, alpha, beta


def viterbi(em, trans, start, stop):
    """Max-score path; ties broken toward the lowest label index at every
    backtracking decision. Returns (path int array[T], score)."""
    T, L = em.shape
    delta = start + em[0]
    back = np.zeros((T, L), dtype=np.intp)
    for t in range(1, T):
        cand = delta[:, None] + trans
        best = cand.argmax(axis=0)  # argmax keeps the lowest index on ties
        delta = cand[best, np.arange(L)] + em[t]
        back[t] = best
    final = delta + stop
    y = int(final.argmax())
    score = float(final[y])
    path = np.empty(T, dtype=np.intp)
    path[T - 1] = y
    for t in range(T - 1, 0, -1):
        y = int(back[t, y])
        path[t - 1] = y
    return path, score
