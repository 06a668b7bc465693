"""Entity-level and word-level evaluation.

Mentions are maximal (type, kind, span) chunks read off BIO tags; a
prediction counts as correct only when span, entity type, and mention kind
all match a gold mention exactly. Named entities (.NAM) and nominal
mentions (.NOM) are scored separately; the overall score pools both.
"""
from __future__ import annotations

from dataclasses import dataclass, field

Mention = tuple[int, int, str, str]  # (start, end, entity type, kind)


@dataclass
class Prf:
    correct: int = 0
    predicted: int = 0
    gold: int = 0

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def add(self, correct: int, predicted: int, gold: int):
        self.correct += correct
        self.predicted += predicted
        self.gold += gold


@dataclass
class EvalReport:
    named: Prf = field(default_factory=Prf)     # .NAM mentions
    nominal: Prf = field(default_factory=Prf)   # .NOM mentions
    overall: Prf = field(default_factory=Prf)   # union of both kinds
    token_correct: int = 0
    token_total: int = 0

    @property
    def token_accuracy(self) -> float:
        return self.token_correct / self.token_total if self.token_total else 0.0

    def as_dict(self) -> dict:
        out = {}
        for name, prf in (("named", self.named), ("nominal", self.nominal),
                          ("overall", self.overall)):
            out[f"{name}.precision"] = prf.precision
            out[f"{name}.recall"] = prf.recall
            out[f"{name}.f1"] = prf.f1
            out[f"{name}.correct"] = prf.correct
            out[f"{name}.predicted"] = prf.predicted
            out[f"{name}.gold"] = prf.gold
        out["token_accuracy"] = self.token_accuracy
        return out

    def format_table(self) -> str:
        rows = [f"{'':12s} {'Prec':>8s} {'Recall':>8s} {'F1':>8s} "
                f"{'corr':>6s} {'pred':>6s} {'gold':>6s}"]
        for name, prf in (("named", self.named), ("nominal", self.nominal),
                          ("overall", self.overall)):
            rows.append(
                f"{name:12s} {prf.precision:8.4f} {prf.recall:8.4f} "
                f"{prf.f1:8.4f} {prf.correct:6d} {prf.predicted:6d} "
                f"{prf.gold:6d}")
        if self.token_total:
            rows.append(f"token accuracy: {self.token_accuracy:.4f} "
                        f"({self.token_correct}/{self.token_total})")
        return "\n".join(rows)


def extract_mentions(tags) -> set[Mention]:
    """BIO tags -> mention set, with conlleval-style repair: an I-x following
    O or a differently-labeled tag opens a new mention."""
    mentions: set[Mention] = set()
    start = None
    cur = None  # (etype, kind)
    for t, tag in enumerate(tags):
        if tag == "O":
            if cur is not None:
                mentions.add((start, t, cur[0], cur[1]))
                cur = None
            continue
        pos, rest = tag.split("-", 1)
        etype, kind = rest.split(".", 1)
        if pos == "B" or cur != (etype, kind):
            if cur is not None:
                mentions.add((start, t, cur[0], cur[1]))
            start = t
            cur = (etype, kind)
    if cur is not None:
        mentions.add((start, len(list(tags)), cur[0], cur[1]))
    return mentions


def score_mentions(gold_tag_seqs, pred_tag_seqs) -> EvalReport:
    """Entity-level report over parallel lists of tag sequences."""
    if len(gold_tag_seqs) != len(pred_tag_seqs):
        raise ValueError("gold/prediction sentence counts differ")
    report = EvalReport()
    for gold_tags, pred_tags in zip(gold_tag_seqs, pred_tag_seqs):
        gold_tags = list(gold_tags)
        pred_tags = list(pred_tags)
        if len(gold_tags) != len(pred_tags):
            raise ValueError("gold/prediction tag lengths differ")
        gold = extract_mentions(gold_tags)
        pred = extract_mentions(pred_tags)
        for kind, bucket in (("NAM", report.named), ("NOM", report.nominal)):
            g = {m for m in gold if m[3] == kind}
            p = {m for m in pred if m[3] == kind}
            bucket.add(len(g & p), len(p), len(g))
        report.overall.add(len(gold & pred), len(pred), len(gold))
        report.token_total += len(gold_tags)
        report.token_correct += sum(
            1 for a, b in zip(gold_tags, pred_tags) if a == b)
    return report


def score_spans(gold_seg_seqs, pred_seg_seqs) -> Prf:
    """Word-level segmentation P/R/F1 over exact span matches."""
    if len(gold_seg_seqs) != len(pred_seg_seqs):
        raise ValueError("gold/prediction sentence counts differ")
    prf = Prf()
    for gold, pred in zip(gold_seg_seqs, pred_seg_seqs):
        g, p = set(gold), set(pred)
        prf.add(len(g & p), len(p), len(g))
    return prf
