"""Boundary detection and assembling.

A backward greedy scan over per-character BIES scores places word cuts where
End/Singleton evidence wins, trusting End evidence over Begin. Adjacent
words that are both dictionary nouns are then assembled into one longer word
candidate, recovering long entity mentions. The same dictionary drives
per-position lexical features for the NER head.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import SEG_INDEX, Span, encode_bies

DEFAULT_POSITIONS = 4


@dataclass
class Lexicon:
    """Noun set plus per-position character counts.

    pos_counts[k][ch] counts ch at word position k (0-based, capped at
    `positions`); pos_totals[k] is the column sum.
    """
    nouns: set = field(default_factory=set)
    positions: int = DEFAULT_POSITIONS
    pos_counts: list = field(default_factory=list)
    pos_totals: list = field(default_factory=list)

    def __post_init__(self):
        if not self.pos_counts:
            self.pos_counts = [{} for _ in range(self.positions)]
        if not self.pos_totals:
            self.pos_totals = [0.0] * self.positions


def load_lexicon(data, positions: int = DEFAULT_POSITIONS) -> Lexicon:
    """Parse a noun list (str or UTF-8 bytes): one noun per line, optional
    "word<TAB>count" weighting. Duplicates accumulate counts."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ValueError(f"lexicon: invalid UTF-8: {exc}") from None
    lex = Lexicon(positions=positions)
    for line in data.split("\n"):
        line = line.strip()
        if not line:
            continue
        if "\t" in line:
            word, count_str = line.split("\t", 1)
            weight = float(count_str)
        else:
            word, weight = line, 1.0
        lex.nouns.add(word)
        for k, ch in enumerate(word[:positions]):
            lex.pos_counts[k][ch] = lex.pos_counts[k].get(ch, 0.0) + weight
            lex.pos_totals[k] += weight
    return lex


def load_lexicon_file(path, positions: int = DEFAULT_POSITIONS) -> Lexicon:
    with open(path, "rb") as fh:
        return load_lexicon(fh.read(), positions=positions)


def is_noun(word: str, lex: Lexicon) -> bool:
    return word in lex.nouns


def backward_boundary_decode(scores: np.ndarray) -> list[Span]:
    """Word spans from BIES score rows via a backward greedy scan.

    Walking from the last position to the first, a cut is placed after every
    position whose argmax label is E or S; the final position is always a
    cut. Always returns a full partition.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[1] != 4 or scores.shape[0] < 1:
        raise ValueError(f"expected [T>=1, 4] score matrix, got {scores.shape}")
    T = scores.shape[0]
    labels = scores.argmax(axis=1)
    e_idx, s_idx = SEG_INDEX["E"], SEG_INDEX["S"]
    cut_after = [False] * T
    cut_after[T - 1] = True
    for t in range(T - 2, -1, -1):
        if labels[t] in (e_idx, s_idx):
            cut_after[t] = True
    spans: list[Span] = []
    start = 0
    for t in range(T):
        if cut_after[t]:
            spans.append((start, t + 1))
            start = t + 1
    return spans


def assemble(seg: list[Span], sentence: str, lex: Lexicon,
             max_run: int | None = None) -> list[Span]:
    """Merge adjacent dictionary nouns into one word, scanning right to left.

    Runs of consecutive nouns collapse into a single word (chain merging);
    max_run=2 restricts merges to pairs for ablation. A merged compound is a
    noun again only if the compound itself is in the lexicon, so a second
    pass leaves the output unchanged.
    """
    _check_partition(seg, len(sentence))
    words = [sentence[a:b] for a, b in seg]
    noun = [is_noun(w, lex) for w in words]
    merged: list[Span] = []
    i = len(words) - 1
    while i >= 0:
        end = seg[i][1]
        start = seg[i][0]
        run = 1
        while (i > 0 and noun[i] and noun[i - 1]
               and (max_run is None or run < max_run)):
            i -= 1
            run += 1
            start = seg[i][0]
        if run == 1:
            start = seg[i][0]
        merged.append((start, end))
        i -= 1
    merged.reverse()
    return merged


def relabel(seg: list[Span]) -> str:
    """Spans -> BIES labels."""
    if not seg:
        raise ValueError("empty segmentation")
    _check_partition(seg, seg[-1][1])
    return encode_bies(b - a for a, b in seg)


def lexical_features(sentence: str, lex: Lexicon) -> np.ndarray:
    """[T, K] matrix: relative frequency of each character at noun position k."""
    T = len(sentence)
    K = lex.positions
    out = np.zeros((T, K))
    for t, ch in enumerate(sentence):
        for k in range(K):
            total = lex.pos_totals[k]
            if total > 0:
                out[t, k] = lex.pos_counts[k].get(ch, 0.0) / total
    return out


def _check_partition(seg: list[Span], length: int):
    if not seg:
        raise ValueError("empty segmentation")
    prev = 0
    for a, b in seg:
        if a != prev or b <= a:
            raise ValueError(f"spans do not partition [0, {length}): {seg}")
        prev = b
    if prev != length:
        raise ValueError(f"spans cover [0, {prev}), expected [0, {length})")
