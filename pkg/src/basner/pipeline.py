"""Two-stage alternating trainer and end-to-end prediction.

Each epoch trains the shared LSTM twice: first on segmentation (BIES labels,
4-label CRF head, with boundary-assembled labels optionally fed back as
emission features), then on NER (17-label CRF head over the concatenation of
LSTM hidden state, character embedding, and lexical noun-position features).
Early stopping watches entity-level F1 on the NER dev set.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import crf as crf_mod
from .boundary import (Lexicon, assemble, backward_boundary_decode,
                       lexical_features, relabel)
from .corpus import (LabeledSequence, NER_INDEX, NER_TAGS, SEG_INDEX,
                     SEG_LABELS, decode_bies, subsample)
from .metrics import EvalReport, Prf, score_mentions, score_spans
from .model import (EmbeddingTable, LstmParams, Projection,
                    build_embedding_table, init_lstm, init_projection,
                    lstm_backward, lstm_forward, project, project_backward)
from .numerics import Rng, dropout_mask, sgd_step

NUM_SEG_LABELS = len(SEG_LABELS)
NUM_NER_LABELS = len(NER_TAGS)


@dataclass
class TrainConfig:
    """Defaults follow the published training regime: lr 0.05, dropout 0.1,
    up to 30 epochs, per-epoch subsamples of 13,500 (CWS) and 1,350 (NER),
    150 hidden units, 100-dim embeddings."""
    learning_rate: float = 0.05
    dropout: float = 0.1
    max_epochs: int = 30
    cws_subsample: int = 13500
    ner_subsample: int = 1350
    hidden: int = 150
    embedding_dim: int = 100
    seed: int = 1
    patience: int = 5
    boundary_features: bool = True
    chain_merge: bool = True
    finetune_embeddings: bool = True
    lexicon_positions: int = 4

    def __post_init__(self):
        for name in ("learning_rate", "max_epochs", "cws_subsample",
                     "ner_subsample", "hidden", "embedding_dim",
                     "lexicon_positions"):
            if getattr(self, name) <= 0:
                raise ValueError(f"config field {name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class Tagger:
    config: TrainConfig
    embeddings: EmbeddingTable
    lstm: LstmParams
    proj_cws: Projection
    proj_ner: Projection
    crf_cws: crf_mod.CrfParams
    crf_ner: crf_mod.CrfParams
    lexicon: Lexicon = field(default_factory=Lexicon)

    @property
    def max_run(self) -> Optional[int]:
        return None if self.config.chain_merge else 2


def cws_feature_size(cfg: TrainConfig) -> int:
    return cfg.hidden + (NUM_SEG_LABELS if cfg.boundary_features else 0)


def ner_feature_size(cfg: TrainConfig) -> int:
    return cfg.hidden + cfg.embedding_dim + cfg.lexicon_positions


def init_tagger(cfg: TrainConfig, vocab_chars="",
                embeddings: Optional[EmbeddingTable] = None,
                lexicon: Optional[Lexicon] = None) -> Tagger:
    rng = Rng(cfg.seed)
    if embeddings is None:
        embeddings = build_embedding_table(vocab_chars, cfg.embedding_dim,
                                           rng.spawn(0))
    elif embeddings.dim != cfg.embedding_dim:
        raise ValueError(
            f"embedding table dim {embeddings.dim} != configured "
            f"{cfg.embedding_dim}")
    init = rng.spawn(1)
    return Tagger(
        config=cfg,
        embeddings=embeddings,
        lstm=init_lstm(cfg.embedding_dim, cfg.hidden, init),
        proj_cws=init_projection(NUM_SEG_LABELS, cws_feature_size(cfg), init),
        proj_ner=init_projection(NUM_NER_LABELS, ner_feature_size(cfg), init),
        crf_cws=crf_mod.init_crf(NUM_SEG_LABELS, init),
        crf_ner=crf_mod.init_crf(NUM_NER_LABELS, init),
        lexicon=lexicon if lexicon is not None
        else Lexicon(positions=cfg.lexicon_positions),
    )


@dataclass
class Grads:
    lstm: object
    proj_w: np.ndarray
    proj_b: np.ndarray
    crf: crf_mod.CrfParams
    emb: dict  # embedding row index -> gradient vector


def _embed(tagger: Tagger, chars: str, hints: Optional[str]):
    idx = [tagger.embeddings.lookup_index(
        ch, None if hints is None else hints[t])
        for t, ch in enumerate(chars)]
    return np.array([tagger.embeddings.vectors[i] for i in idx]), idx


def _boundary_onehot(tagger: Tagger, chars: str, hout: np.ndarray) -> np.ndarray:
    """Decode preliminary BIES scores (boundary feature block zeroed),
    assemble, relabel, and one-hot encode the result."""
    T = len(chars)
    zeros = np.zeros((T, NUM_SEG_LABELS))
    em_pre = project(np.hstack([hout, zeros]), tagger.proj_cws)
    spans = assemble(backward_boundary_decode(em_pre), chars, tagger.lexicon,
                     max_run=tagger.max_run)
    labels = relabel(spans)
    onehot = np.zeros((T, NUM_SEG_LABELS))
    for t, lab in enumerate(labels):
        onehot[t, SEG_INDEX[lab]] = 1.0
    return onehot


def cws_loss_and_grads(tagger: Tagger, sent: LabeledSequence,
                       mask: Optional[np.ndarray] = None,
                       fixed_boundary: Optional[np.ndarray] = None):
    """One segmentation training example: loss plus gradients for every
    parameter group. Boundary features, when enabled, are treated as
    constants (the decode is not differentiable)."""
    if sent.gold_seg is None:
        raise ValueError("sentence has no gold segmentation")
    cfg = tagger.config
    x, emb_idx = _embed(tagger, sent.chars, None)
    hout, cache = lstm_forward(x, tagger.lstm, mask)
    if cfg.boundary_features:
        onehot = fixed_boundary if fixed_boundary is not None \
            else _boundary_onehot(tagger, sent.chars, hout)
        feats = np.hstack([hout, onehot])
    else:
        feats = hout
    em = project(feats, tagger.proj_cws)
    gold = [SEG_INDEX[c] for c in sent.gold_seg]
    loss, d_em, d_crf = crf_mod.nll_and_grad(em, tagger.crf_cws, gold)
    d_w, d_b, d_feats = project_backward(d_em, feats, tagger.proj_cws)
    d_h = d_feats[:, :cfg.hidden]
    lstm_grads, d_x = lstm_backward(d_h, cache, tagger.lstm)
    emb_grads: dict = {}
    for t, i in enumerate(emb_idx):
        g = emb_grads.get(i)
        emb_grads[i] = d_x[t].copy() if g is None else g + d_x[t]
    return loss, Grads(lstm=lstm_grads, proj_w=d_w, proj_b=d_b, crf=d_crf,
                       emb=emb_grads)


def ner_loss_and_grads(tagger: Tagger, sent: LabeledSequence,
                       mask: Optional[np.ndarray] = None,
                       fixed_hints: Optional[str] = None):
    """One NER training example. Embedding gradients accumulate both the
    LSTM-input path and the direct emission-feature path."""
    if sent.gold_ner is None:
        raise ValueError("sentence has no gold NER tags")
    cfg = tagger.config
    hints = fixed_hints if fixed_hints is not None \
        else segmentation_hints(tagger, sent.chars)
    x, emb_idx = _embed(tagger, sent.chars, hints)
    hout, cache = lstm_forward(x, tagger.lstm, mask)
    lex = lexical_features(sent.chars, tagger.lexicon)
    feats = np.hstack([hout, x, lex])
    em = project(feats, tagger.proj_ner)
    gold = [NER_INDEX[t] for t in sent.gold_ner]
    loss, d_em, d_crf = crf_mod.nll_and_grad(em, tagger.crf_ner, gold)
    d_w, d_b, d_feats = project_backward(d_em, feats, tagger.proj_ner)
    H, d = cfg.hidden, cfg.embedding_dim
    lstm_grads, d_x = lstm_backward(d_feats[:, :H], cache, tagger.lstm)
    d_x = d_x + d_feats[:, H:H + d]
    emb_grads: dict = {}
    for t, i in enumerate(emb_idx):
        g = emb_grads.get(i)
        emb_grads[i] = d_x[t].copy() if g is None else g + d_x[t]
    return loss, Grads(lstm=lstm_grads, proj_w=d_w, proj_b=d_b, crf=d_crf,
                       emb=emb_grads)


def apply_grads(tagger: Tagger, head: str, grads: Grads, lr: float):
    """Per-sentence SGD update (single-writer)."""
    lstm = tagger.lstm
    lstm.wx = sgd_step(lstm.wx, grads.lstm.wx, lr)
    lstm.wh = sgd_step(lstm.wh, grads.lstm.wh, lr)
    lstm.b = sgd_step(lstm.b, grads.lstm.b, lr)
    proj = tagger.proj_cws if head == "cws" else tagger.proj_ner
    proj.w = sgd_step(proj.w, grads.proj_w, lr)
    proj.b = sgd_step(proj.b, grads.proj_b, lr)
    crf = tagger.crf_cws if head == "cws" else tagger.crf_ner
    crf.trans = sgd_step(crf.trans, grads.crf.trans, lr)
    crf.start = sgd_step(crf.start, grads.crf.start, lr)
    crf.stop = sgd_step(crf.stop, grads.crf.stop, lr)
    if tagger.config.finetune_embeddings:
        vecs = tagger.embeddings.vectors
        for i, g in grads.emb.items():
            vecs[i] = sgd_step(vecs[i], g, lr)


def _epoch(tagger, corpus, n_target, cfg, rng, loss_fn, head) -> float:
    if not corpus:
        raise ValueError("empty training corpus")
    n = min(n_target, len(corpus))
    batch = subsample(corpus, n, rng)
    total = 0.0
    for sent in batch:
        mask = dropout_mask(cfg.hidden, cfg.dropout, rng) \
            if cfg.dropout > 0 else None
        loss, grads = loss_fn(tagger, sent, mask=mask)
        apply_grads(tagger, head, grads, cfg.learning_rate)
        total += loss
    return total / n


def train_epoch_cws(tagger: Tagger, corpus, cfg: TrainConfig, rng: Rng) -> float:
    return _epoch(tagger, corpus, cfg.cws_subsample, cfg, rng,
                  cws_loss_and_grads, "cws")


def train_epoch_ner(tagger: Tagger, corpus, cfg: TrainConfig, rng: Rng) -> float:
    return _epoch(tagger, corpus, cfg.ner_subsample, cfg, rng,
                  ner_loss_and_grads, "ner")


def predict_segmentation(tagger: Tagger, chars: str,
                         use_boundary: bool = True) -> list:
    """Segment one sentence: CRF Viterbi over the CWS emissions, then
    boundary assembling. use_boundary=False bypasses the boundary module
    entirely (no assembled features, no final assembling)."""
    x, _ = _embed(tagger, chars, None)
    hout, _ = lstm_forward(x, tagger.lstm)
    cfg = tagger.config
    if cfg.boundary_features:
        onehot = _boundary_onehot(tagger, chars, hout) if use_boundary \
            else np.zeros((len(chars), NUM_SEG_LABELS))
        feats = np.hstack([hout, onehot])
    else:
        feats = hout
    em = project(feats, tagger.proj_cws)
    path, _ = crf_mod.viterbi(em, tagger.crf_cws)
    spans = decode_bies(SEG_LABELS[i] for i in path)
    if use_boundary:
        spans = assemble(spans, chars, tagger.lexicon, max_run=tagger.max_run)
    return spans


def segmentation_hints(tagger: Tagger, chars: str) -> str:
    """Predicted BIES labels used as positional hints for embedding lookup."""
    return relabel(predict_segmentation(tagger, chars))


def predict_ner(tagger: Tagger, chars: str) -> list[str]:
    hints = segmentation_hints(tagger, chars)
    x, _ = _embed(tagger, chars, hints)
    hout, _ = lstm_forward(x, tagger.lstm)
    lex = lexical_features(chars, tagger.lexicon)
    em = project(np.hstack([hout, x, lex]), tagger.proj_ner)
    path, _ = crf_mod.viterbi(em, tagger.crf_ner)
    return [NER_TAGS[i] for i in path]


def evaluate_ner(tagger: Tagger, corpus) -> EvalReport:
    golds, preds = [], []
    for sent in corpus:
        if sent.gold_ner is None:
            raise ValueError("sentence has no gold NER tags")
        golds.append(sent.gold_ner)
        preds.append(predict_ner(tagger, sent.chars))
    return score_mentions(golds, preds)


def evaluate_seg(tagger: Tagger, corpus) -> Prf:
    golds, preds = [], []
    for sent in corpus:
        if sent.gold_seg is None:
            raise ValueError("sentence has no gold segmentation")
        golds.append(decode_bies(sent.gold_seg))
        preds.append(predict_segmentation(tagger, sent.chars))
    return score_spans(golds, preds)


@dataclass
class EpochRecord:
    epoch: int
    cws_loss: float
    ner_loss: float
    dev_f1: float


def train(cws_corpus, ner_train, ner_dev, cfg: TrainConfig,
          embeddings: Optional[EmbeddingTable] = None,
          lexicon: Optional[Lexicon] = None,
          log=None):
    """Alternating two-stage training with early stopping on dev F1.

    Returns (best Tagger, best epoch, best dev F1, history). Deterministic
    given seed, corpora, and config.
    """
    if not cws_corpus or not ner_train or not ner_dev:
        raise ValueError("all three corpora must be non-empty")
    vocab = "".join(s.chars for s in list(cws_corpus) + list(ner_train))
    tagger = init_tagger(cfg, vocab, embeddings=embeddings, lexicon=lexicon)
    rng = Rng(cfg.seed).spawn(2)
    history: list[EpochRecord] = []
    best: Optional[Tagger] = None
    best_f1 = -1.0
    best_epoch = 0
    bad = 0
    for epoch in range(1, cfg.max_epochs + 1):
        cws_loss = train_epoch_cws(tagger, cws_corpus, cfg, rng)
        ner_loss = train_epoch_ner(tagger, ner_train, cfg, rng)
        f1 = evaluate_ner(tagger, ner_dev).overall.f1
        history.append(EpochRecord(epoch, cws_loss, ner_loss, f1))
        if log is not None:
            log(f"epoch {epoch}: cws_loss={cws_loss:.4f} "
                f"ner_loss={ner_loss:.4f} dev_f1={f1:.4f}")
        if f1 > best_f1:
            best_f1 = f1
            best = copy.deepcopy(tagger)
            best_epoch = epoch
            bad = 0
        else:
            bad += 1
            if bad > cfg.patience:
                break
    return best, best_epoch, best_f1, history
