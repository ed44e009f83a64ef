"""Tag lattices: path scores, Viterbi, margins, and the brute-force oracle.

A lattice is one emission score per (position, tag) plus a shared
transition matrix; a path scores the sum of its emissions and transition
arcs. Viterbi finds the exact argmax; for max-margin training the same
decoder runs over emissions inflated by a per-position hamming penalty.
"""
import numpy as np

from segtag import lattice as lt
from segtag.autograd import Parameter

rng = np.random.default_rng(3)
n, n_tags = 5, 4

emissions = rng.uniform(-1, 1, size=(n, n_tags))
trans = lt.TransitionMatrix(Parameter(rng.uniform(-1, 1, size=(n_tags, n_tags))))
lattice = lt.TagScoreLattice(emissions, trans)

path, score = lt.viterbi(lattice)
print("viterbi path: ", path, f" score {score:.4f}")
print("score equals path_score:", score == lt.path_score(lattice, path))

# The brute-force oracle enumerates all |T|^n sequences with the same
# tie-breaking; on any small instance the two must agree exactly.
b_path, b_score = lt.brute_force_decode(lattice)
print("brute force:  ", b_path, f" score {b_score:.4f}  (agree: {path == b_path})")

# Loss-augmented decoding adds eta per position that disagrees with gold,
# which is how training finds the most violating competitor.
gold = rng.integers(0, n_tags, size=n)
aug_path, aug_score = lt.loss_augmented_viterbi(lattice, gold, eta=0.2)
print("\ngold:          ", gold.tolist())
print("worst violator:", aug_path, f" augmented score {aug_score:.4f}")
print("hinge loss:    ", f"{aug_score - lt.path_score(lattice, gold):.4f}")

# A hard BMES-validity mask is available (off by default): forbidden
# transitions score a large negative sentinel and are never decoded.
mask = np.zeros((n_tags, n_tags), dtype=bool)
mask[0, 0] = True
constrained = lt.TagScoreLattice(emissions, lt.TransitionMatrix(trans.a, mask))
c_path, _ = lt.viterbi(constrained)
print("\nwith arc 0->0 forbidden:", c_path,
      " (uses it:", any(a == 0 and b == 0 for a, b in zip(c_path, c_path[1:])), ")")
