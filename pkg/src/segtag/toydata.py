"""Synthetic corpus over a 12-character alphabet with a fixed word inventory.

Every alphabet character belongs to exactly one inventory word, so the
mapping from character to joint tag is unambiguous and a capable model can
reach perfect F1; useful for learnability checks and demos without any
licensed corpus.
"""
from __future__ import annotations

import numpy as np

from .corpus import Sentence, expand_word

# (word, POS): 7 words covering the alphabet a..l exactly once
WORD_INVENTORY = (
    ("ab", "NN"),
    ("cde", "NN"),
    ("f", "NN"),
    ("gh", "VV"),
    ("ij", "VV"),
    ("k", "PU"),
    ("l", "PU"),
)

ALPHABET = "".join(sorted("".join(w for w, _ in WORD_INVENTORY)))


def toy_corpus(n_sentences=50, seed=0, min_words=3, max_words=8):
    """Random word sequences from the fixed inventory, gold-tagged."""
    rng = np.random.default_rng(seed)
    sentences = []
    for _ in range(n_sentences):
        k = int(rng.integers(min_words, max_words + 1))
        chars, tags = [], []
        for w in rng.integers(0, len(WORD_INVENTORY), size=k):
            word, pos = WORD_INVENTORY[w]
            chars.extend(word)
            tags.extend(expand_word(word, pos))
        sentences.append(Sentence(chars, tags))
    return sentences
