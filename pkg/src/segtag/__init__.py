"""Joint character-level word segmentation and POS tagging.

A from-scratch numpy implementation: embeddings feed n-gram convolutions,
k-max pooling, a highway layer and a (bi)directional LSTM; per-position tag
scores plus a learned transition matrix form a lattice decoded with Viterbi
and trained with a max-margin criterion.
"""

__version__ = "0.1.0"
