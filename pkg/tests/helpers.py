"""Shared test utilities: brute-force CRF oracles and the synthetic
overfit corpus. The oracles enumerate every label path explicitly and stay
independent of the dynamic programs they check."""
import itertools

import numpy as np

from basner.boundary import Lexicon, load_lexicon
from basner.corpus import LabeledSequence, encode_bies
from basner.numerics import Rng


def all_path_scores(em, trans, start, stop):
    """Every path and its score, added in the documented order:
    start + em[0], then (+trans)(+em) per step, then +stop."""
    T, L = em.shape
    paths = np.array(list(itertools.product(range(L), repeat=T)),
                     dtype=np.intp).reshape(-1, T)
    s = start[paths[:, 0]] + em[0, paths[:, 0]]
    for t in range(1, T):
        s = s + trans[paths[:, t - 1], paths[:, t]]
        s = s + em[t, paths[:, t]]
    s = s + stop[paths[:, -1]]
    return paths, s


def brute_log_partition(em, trans, start, stop):
    _, s = all_path_scores(em, trans, start, stop)
    m = s.max()
    return m + np.log(np.exp(s - m).sum())


def brute_viterbi(em, trans, start, stop):
    """Max-score path; among exact ties, the path minimizing
    (y_T, y_{T-1}, ..., y_1) — the lowest-index backtracking tie-break."""
    paths, s = all_path_scores(em, trans, start, stop)
    mx = s.max()
    cand = paths[s == mx]
    order = np.lexsort(tuple(cand[:, t] for t in range(cand.shape[1])))
    return cand[order[0]], float(mx)


def brute_marginals(em, trans, start, stop):
    paths, s = all_path_scores(em, trans, start, stop)
    logz = brute_log_partition(em, trans, start, stop)
    probs = np.exp(s - logz)
    T, L = em.shape
    out = np.zeros((T, L))
    for t in range(T):
        np.add.at(out[t], paths[:, t], probs)
    return out


def random_crf_instance(rng: Rng, max_t=6, max_l=5, lo=-3.0, hi=3.0):
    T = 1 + rng.randbelow(max_t)
    L = 1 + rng.randbelow(max_l)
    em = rng.uniform_array((T, L), lo, hi)
    trans = rng.uniform_array((L, L), lo, hi)
    start = rng.uniform_array((L,), lo, hi)
    stop = rng.uniform_array((L,), lo, hi)
    return em, trans, start, stop


# --- synthetic overfit corpus ---------------------------------------------

# entity surface forms use chars a..l, filler words use m..t, so the
# 20-character alphabet splits cleanly and every sentence is learnable
ENTITY_WORDS = {
    "ab": ("PER", "NAM"),
    "cde": ("LOC", "NAM"),
    "fg": ("ORG", "NOM"),
    "hij": ("GPE", "NAM"),
    "kl": ("PER", "NOM"),
}
FILLER_ALPHABET = "mnopqrst"


def synthetic_corpus(n_sentences=50, seed=7):
    """Random 3-8 word sentences with planted entities; returns
    (sentences, lexicon). Sentences carry both gold segmentations and gold
    NER tags."""
    rng = Rng(seed)
    entity_items = sorted(ENTITY_WORDS.items())
    sents = []
    for _ in range(n_sentences):
        n_words = 3 + rng.randbelow(6)
        words, tags = [], []
        for _ in range(n_words):
            if rng.randbelow(100) < 40:
                word, (etype, kind) = entity_items[
                    rng.randbelow(len(entity_items))]
                tags.append(f"B-{etype}.{kind}")
                tags.extend(f"I-{etype}.{kind}" for _ in word[1:])
            else:
                wlen = 1 + rng.randbelow(3)
                word = "".join(FILLER_ALPHABET[
                    rng.randbelow(len(FILLER_ALPHABET))] for _ in range(wlen))
                tags.extend("O" for _ in word)
            words.append(word)
        sents.append(LabeledSequence(
            chars="".join(words),
            gold_seg=encode_bies(len(w) for w in words),
            gold_ner=tags))
    lexicon = load_lexicon("\n".join(sorted(ENTITY_WORDS)))
    return sents, lexicon
