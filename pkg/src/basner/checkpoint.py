"""Versioned text checkpoints.

A checkpoint is one JSON document: format version, training config, the
embedding vocabulary and every parameter tensor, the lexicon, the epoch it
was taken at, and the best dev F1 so far. Floats are serialized as their
shortest round-trip decimal form, so save -> load reproduces bit-identical
64-bit parameters; the dump is key-sorted, so identical states produce
byte-identical files.
"""
from __future__ import annotations

import json

import numpy as np

from .boundary import Lexicon
from .crf import CrfParams
from .model import EmbeddingTable, LstmParams, Projection
from .pipeline import Tagger, TrainConfig

FORMAT_VERSION = 1

_REQUIRED = ["format_version", "config", "embeddings", "lstm", "proj_cws",
             "proj_ner", "crf_cws", "crf_ner", "lexicon", "epoch", "best_f1"]


def _arr(a: np.ndarray):
    return np.asarray(a, dtype=np.float64).tolist()


def save_checkpoint(path, tagger: Tagger, epoch: int = 0,
                    best_f1: float = 0.0):
    lex = tagger.lexicon
    doc = {
        "format_version": FORMAT_VERSION,
        "config": tagger.config.as_dict(),
        "embeddings": {
            "tokens": tagger.embeddings.tokens,
            "unk_token": tagger.embeddings.unk_token,
            "vectors": _arr(tagger.embeddings.vectors),
        },
        "lstm": {"wx": _arr(tagger.lstm.wx), "wh": _arr(tagger.lstm.wh),
                 "b": _arr(tagger.lstm.b)},
        "proj_cws": {"w": _arr(tagger.proj_cws.w), "b": _arr(tagger.proj_cws.b)},
        "proj_ner": {"w": _arr(tagger.proj_ner.w), "b": _arr(tagger.proj_ner.b)},
        "crf_cws": {"trans": _arr(tagger.crf_cws.trans),
                    "start": _arr(tagger.crf_cws.start),
                    "stop": _arr(tagger.crf_cws.stop)},
        "crf_ner": {"trans": _arr(tagger.crf_ner.trans),
                    "start": _arr(tagger.crf_ner.start),
                    "stop": _arr(tagger.crf_ner.stop)},
        "lexicon": {
            "nouns": sorted(lex.nouns),
            "positions": lex.positions,
            "pos_counts": [dict(sorted(c.items())) for c in lex.pos_counts],
            "pos_totals": list(lex.pos_totals),
        },
        "epoch": epoch,
        "best_f1": best_f1,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, sort_keys=True, indent=1)
        fh.write("\n")


def _field(doc: dict, name: str):
    if name not in doc:
        raise ValueError(f"checkpoint missing field {name!r}")
    return doc[name]


def _tensor(section: dict, name: str, shape) -> np.ndarray:
    a = np.asarray(_field(section, name), dtype=np.float64)
    if a.shape != tuple(shape):
        raise ValueError(
            f"checkpoint field {name!r} has shape {a.shape}, expected "
            f"{tuple(shape)}")
    return a


def load_checkpoint(path):
    """Returns (Tagger, epoch, best_f1); hard error naming any bad field."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not a valid checkpoint: {exc}") from None
    version = _field(doc, "format_version")
    if version != FORMAT_VERSION:
        raise ValueError(
            f"checkpoint format_version {version!r} unsupported "
            f"(expected {FORMAT_VERSION})")
    for name in _REQUIRED:
        _field(doc, name)
    cfg = TrainConfig.from_dict(doc["config"])
    H, d = cfg.hidden, cfg.embedding_dim

    emb_doc = doc["embeddings"]
    tokens = _field(emb_doc, "tokens")
    vectors = _tensor(emb_doc, "vectors", (len(tokens), d))
    embeddings = EmbeddingTable(tokens, vectors,
                                unk_token=_field(emb_doc, "unk_token"))

    from .pipeline import cws_feature_size, ner_feature_size, \
        NUM_SEG_LABELS, NUM_NER_LABELS
    lstm = LstmParams(
        wx=_tensor(doc["lstm"], "wx", (4 * H, d)),
        wh=_tensor(doc["lstm"], "wh", (4 * H, H)),
        b=_tensor(doc["lstm"], "b", (4 * H,)),
    )
    fc, fn = cws_feature_size(cfg), ner_feature_size(cfg)
    proj_cws = Projection(w=_tensor(doc["proj_cws"], "w", (NUM_SEG_LABELS, fc)),
                          b=_tensor(doc["proj_cws"], "b", (NUM_SEG_LABELS,)))
    proj_ner = Projection(w=_tensor(doc["proj_ner"], "w", (NUM_NER_LABELS, fn)),
                          b=_tensor(doc["proj_ner"], "b", (NUM_NER_LABELS,)))
    crf_cws = CrfParams(
        trans=_tensor(doc["crf_cws"], "trans", (NUM_SEG_LABELS, NUM_SEG_LABELS)),
        start=_tensor(doc["crf_cws"], "start", (NUM_SEG_LABELS,)),
        stop=_tensor(doc["crf_cws"], "stop", (NUM_SEG_LABELS,)))
    crf_ner = CrfParams(
        trans=_tensor(doc["crf_ner"], "trans", (NUM_NER_LABELS, NUM_NER_LABELS)),
        start=_tensor(doc["crf_ner"], "start", (NUM_NER_LABELS,)),
        stop=_tensor(doc["crf_ner"], "stop", (NUM_NER_LABELS,)))

    lex_doc = doc["lexicon"]
    lexicon = Lexicon(
        nouns=set(_field(lex_doc, "nouns")),
        positions=int(_field(lex_doc, "positions")),
        pos_counts=[dict(c) for c in _field(lex_doc, "pos_counts")],
        pos_totals=[float(v) for v in _field(lex_doc, "pos_totals")],
    )
    tagger = Tagger(config=cfg, embeddings=embeddings, lstm=lstm,
                    proj_cws=proj_cws, proj_ner=proj_ner,
                    crf_cws=crf_cws, crf_ner=crf_ner, lexicon=lexicon)
    return tagger, int(doc["epoch"]), float(doc["best_f1"])
