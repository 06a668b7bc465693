"""Full-model gradient verification.

Builds a tiny randomized instance (2-dim embeddings, 3 hidden units, up to
5 characters), runs the composed loss (embedding -> LSTM -> projection ->
CRF NLL) for either head, and compares every analytic parameter gradient
against central finite differences. Boundary one-hot features and
positional hints are frozen per instance: they come from non-differentiable
decodes and are constants with respect to the parameters being checked.
"""
from __future__ import annotations

import numpy as np

from .boundary import load_lexicon
from .corpus import LabeledSequence, NER_TAGS, encode_bies
from .model import lstm_forward
from .numerics import Rng, dropout_mask, grad_check
from .pipeline import (TrainConfig, _boundary_onehot, _embed,
                       cws_loss_and_grads, init_tagger, ner_loss_and_grads,
                       segmentation_hints)

ALPHABET = "abcdef"
TOLERANCE = 1e-4
EPS = 1e-5


def _tiny_config(seed: int) -> TrainConfig:
    return TrainConfig(embedding_dim=2, hidden=3, seed=seed,
                       cws_subsample=1, ner_subsample=1)


def _random_sentence(rng: Rng, max_len: int = 5) -> str:
    n = 1 + rng.randbelow(max_len)
    return "".join(ALPHABET[rng.randbelow(len(ALPHABET))] for _ in range(n))


def _random_seg(rng: Rng, n: int) -> str:
    lengths = []
    left = n
    while left > 0:
        k = 1 + rng.randbelow(min(3, left))
        lengths.append(k)
        left -= k
    return encode_bies(lengths)


def _groups(tagger, head: str) -> dict[str, np.ndarray]:
    proj = tagger.proj_cws if head == "cws" else tagger.proj_ner
    crf = tagger.crf_cws if head == "cws" else tagger.crf_ner
    return {
        "embeddings": tagger.embeddings.vectors,
        "lstm.wx": tagger.lstm.wx,
        "lstm.wh": tagger.lstm.wh,
        "lstm.b": tagger.lstm.b,
        "proj.w": proj.w,
        "proj.b": proj.b,
        "crf.trans": crf.trans,
        "crf.start": crf.start,
        "crf.stop": crf.stop,
    }


def check_instance(seed: int, head: str, eps: float = EPS,
                   corrupt: bool = False) -> dict[str, float]:
    """Max relative gradient error per parameter group on one seeded
    instance. corrupt=True doubles one analytic gradient as a negative
    control (the check must then fail)."""
    if head not in ("cws", "ner"):
        raise ValueError(f"unknown head {head!r}")
    rng = Rng(seed)
    cfg = _tiny_config(seed)
    lexicon = load_lexicon("ab\nac\nba\nde\n")
    tagger = init_tagger(cfg, ALPHABET, lexicon=lexicon)
    chars = _random_sentence(rng)
    mask = dropout_mask(cfg.hidden, 0.1, rng)

    if head == "cws":
        sent = LabeledSequence(chars, gold_seg=_random_seg(rng, len(chars)))
        x, _ = _embed(tagger, chars, None)
        hout, _ = lstm_forward(x, tagger.lstm, mask)
        fixed = _boundary_onehot(tagger, chars, hout)

        def loss_and_grads():
            return cws_loss_and_grads(tagger, sent, mask=mask,
                                      fixed_boundary=fixed)
    else:
        tags = [NER_TAGS[rng.randbelow(len(NER_TAGS))] for _ in chars]
        sent = LabeledSequence(chars, gold_ner=tags)
        hints = segmentation_hints(tagger, chars)

        def loss_and_grads():
            return ner_loss_and_grads(tagger, sent, mask=mask,
                                      fixed_hints=hints)

    _, grads = loss_and_grads()
    emb_grad = np.zeros_like(tagger.embeddings.vectors)
    for i, g in grads.emb.items():
        emb_grad[i] = g
    analytic = {
        "embeddings": emb_grad,
        "lstm.wx": grads.lstm.wx,
        "lstm.wh": grads.lstm.wh,
        "lstm.b": grads.lstm.b,
        "proj.w": grads.proj_w,
        "proj.b": grads.proj_b,
        "crf.trans": grads.crf.trans,
        "crf.start": grads.crf.start,
        "crf.stop": grads.crf.stop,
    }
    if corrupt:
        analytic["lstm.wx"] = 2.0 * analytic["lstm.wx"]

    results = {}
    for name, arr in _groups(tagger, head).items():
        def f(flat, arr=arr):
            saved = arr.copy()
            arr.flat[:] = flat
            try:
                return loss_and_grads()[0]
            finally:
                arr.flat[:] = saved.ravel()

        results[name] = grad_check(f, analytic[name].ravel(),
                                   arr.ravel().copy(), eps)
    return results


def run_suite(seed: int = 0, instances: int = 20, eps: float = EPS,
              corrupt: bool = False) -> dict[str, float]:
    """Worst error per group over `instances` seeded instances of each head."""
    worst: dict[str, float] = {}
    for k in range(instances):
        head = "cws" if k % 2 == 0 else "ner"
        for name, err in check_instance(seed * 1000 + k, head,
                                        eps=eps, corrupt=corrupt).items():
            key = f"{head}.{name}"
            worst[key] = max(worst.get(key, 0.0), err)
    return worst
