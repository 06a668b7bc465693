"""Corpus formats and label codecs.

Two on-disk formats:

* Segmentation corpus: UTF-8, one sentence per line, words separated by
  ASCII spaces or U+3000. Characters get BIES labels (Begin, Inside, End,
  Singleton).
* NER corpus: UTF-8, two whitespace-separated columns "char tag" per line,
  blank line between sentences. Tags are the 17-member inventory
  O | {B,I}-{PER,ORG,LOC,GPE}.{NAM,NOM}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .numerics import Rng

SEG_LABELS = "BIES"
SEG_INDEX = {c: i for i, c in enumerate(SEG_LABELS)}

_ENTITY_TYPES = ("PER", "ORG", "LOC", "GPE")
_ENTITY_KINDS = ("NAM", "NOM")

# index 0 is O; the 16 entity tags follow in a fixed order
NER_TAGS = ["O"] + [
    f"{pos}-{etype}.{kind}"
    for pos in ("B", "I")
    for etype in _ENTITY_TYPES
    for kind in _ENTITY_KINDS
]
NER_INDEX = {t: i for i, t in enumerate(NER_TAGS)}

Span = tuple[int, int]


@dataclass
class LabeledSequence:
    chars: str
    gold_seg: Optional[str] = None        # BIES string, len == len(chars)
    gold_ner: Optional[list[str]] = None  # NER tag strings, one per char

    def __post_init__(self):
        if not self.chars:
            raise ValueError("empty sentence")
        if self.gold_seg is not None and len(self.gold_seg) != len(self.chars):
            raise ValueError("gold_seg length mismatch")
        if self.gold_ner is not None and len(self.gold_ner) != len(self.chars):
            raise ValueError("gold_ner length mismatch")


def encode_bies(word_lengths) -> str:
    """Word lengths -> BIES label string (1 -> S, k -> B I^{k-2} E)."""
    out = []
    for n in word_lengths:
        if n < 1:
            raise ValueError(f"word length must be >= 1, got {n}")
        if n == 1:
            out.append("S")
        else:
            out.append("B" + "I" * (n - 2) + "E")
    return "".join(out)


def decode_bies(labels) -> list[Span]:
    """BIES labels -> word spans; total on invalid input.

    Repair policy for invalid sequences, scanning left to right: an I or E
    with no open word acts as if preceded by B; a B or S closes any open
    word; a trailing open word is closed at sentence end.
    """
    labels = "".join(labels)
    if not labels:
        raise ValueError("empty label sequence")
    spans: list[Span] = []
    open_start: Optional[int] = None
    for t, lab in enumerate(labels):
        if lab == "B":
            if open_start is not None:
                spans.append((open_start, t))
            open_start = t
        elif lab == "S":
            if open_start is not None:
                spans.append((open_start, t))
                open_start = None
            spans.append((t, t + 1))
        elif lab == "I":
            if open_start is None:
                open_start = t
        elif lab == "E":
            if open_start is None:
                open_start = t
            spans.append((open_start, t + 1))
            open_start = None
        else:
            raise ValueError(f"unknown segmentation label {lab!r}")
    if open_start is not None:
        spans.append((open_start, len(labels)))
    return spans


def segmentation_to_words(chars: str, spans) -> list[str]:
    return [chars[a:b] for a, b in spans]


def _decode_lines(data, what: str) -> list[str]:
    """Accept str or bytes; decode per line so errors carry a line number."""
    if isinstance(data, str):
        return data.split("\n")
    lines = []
    for i, raw in enumerate(data.split(b"\n"), start=1):
        try:
            lines.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise ValueError(f"{what}: invalid UTF-8 on line {i}: {exc}") from None
    return lines


def parse_sighan(text) -> list[LabeledSequence]:
    """Parse a space-delimited segmentation document (str or UTF-8 bytes)."""
    out = []
    for line in _decode_lines(text, "segmentation corpus"):
        words = [w for w in line.replace("　", " ").split(" ") if w]
        if not words:
            continue
        chars = "".join(words)
        out.append(LabeledSequence(
            chars=chars, gold_seg=encode_bies(len(w) for w in words)))
    return out


def parse_ner_conll(text) -> list[LabeledSequence]:
    """Parse a two-column char/tag document (str or UTF-8 bytes)."""
    out = []
    chars: list[str] = []
    tags: list[str] = []

    def flush():
        if chars:
            out.append(LabeledSequence(chars="".join(chars), gold_ner=list(tags)))
            chars.clear()
            tags.clear()

    for lineno, line in enumerate(_decode_lines(text, "NER corpus"), start=1):
        if not line.strip():
            flush()
            continue
        cols = line.split()
        if len(cols) != 2:
            raise ValueError(
                f"NER corpus line {lineno}: expected 'char tag', got {line!r}")
        ch, tag = cols
        if len(ch) != 1:
            raise ValueError(
                f"NER corpus line {lineno}: first column must be a single "
                f"character, got {ch!r}")
        if tag not in NER_INDEX:
            raise ValueError(
                f"NER corpus line {lineno}: unknown tag {tag!r}")
        chars.append(ch)
        tags.append(tag)
    flush()
    return out


def subsample(corpus, n: int, rng: Rng) -> list:
    """Draw n distinct items uniformly without replacement (partial
    Fisher-Yates over indices; deterministic per seed)."""
    size = len(corpus)
    if n > size:
        raise ValueError(f"cannot subsample {n} from corpus of size {size}")
    idx = list(range(size))
    for i in range(n):
        j = i + rng.randbelow(size - i)
        idx[i], idx[j] = idx[j], idx[i]
    return [corpus[i] for i in idx[:n]]
