"""The full joint model: vocabulary, tag set, encoder stack, tag projection
and transition matrix, with deterministic seeded initialization."""
from __future__ import annotations

import numpy as np

from . import encoder as enc
from . import lattice as lt
from .autograd import Parameter


class Model:
    """Everything needed to score and decode one sentence.

    Parameter allocation order is fixed (embeddings, conv filters, highway,
    LSTM directions, MLP, projection, transitions) so that equal seeds give
    bit-identical models and serialization has a stable manifest.
    """

    def __init__(self, cfg, vocab, tagset, seed=1, dtype=np.float32,
                 constrain_transitions=False):
        self.cfg = cfg
        self.vocab = vocab
        self.tagset = tagset
        self.constrained = bool(constrain_transitions)
        self.train_cfg = None   # optional TrainConfig snapshot, kept for serialization
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.encoder = enc.init_encoder_params(
            cfg, vocab.n_chars, vocab.n_bigrams if cfg.use_bigram else 0, rng, self.dtype)
        n_tags = len(tagset)
        self.proj = lt.ProjectionParams(
            w=Parameter(enc.glorot(rng, cfg.d_out, n_tags, self.dtype), name="proj.w"),
            b=Parameter(np.zeros(n_tags, dtype=self.dtype), name="proj.b"),
        )
        mask = lt.bmes_transition_mask(tagset) if constrain_transitions else None
        self.trans = lt.TransitionMatrix(
            Parameter(enc.glorot(rng, n_tags, n_tags, self.dtype), name="trans.a"), mask)

    @property
    def n_tags(self):
        return len(self.tagset)

    def parameters(self):
        """Ordered (name, Parameter) pairs covering every trainable tensor."""
        return self.encoder.parameters() + [
            ("proj.w", self.proj.w),
            ("proj.b", self.proj.b),
            ("trans.a", self.trans.a),
        ]

    def zero_grads(self):
        for _, p in self.parameters():
            p.zero_grad()

    def hidden(self, ids):
        """Encoder output tensor, attached to the autograd tape."""
        return enc.encode(ids, self.encoder, self.cfg)

    def emissions(self, ids):
        """Per-position tag score tensor, still attached to the autograd tape."""
        return lt.emission_scores(self.hidden(ids), self.proj)

    def lattice(self, ids):
        """Decoding-ready lattice (detached view) plus the emission tensor."""
        p = self.emissions(ids)
        return lt.TagScoreLattice(p.data, self.trans), p

    def tag_ids(self, chars):
        """Viterbi-decode one raw character sequence into tag indices."""
        ids = self.vocab.encode(chars, self.cfg.use_bigram)
        lat, _ = self.lattice(ids)
        path, _ = lt.viterbi(lat)
        return path

    def tag_chars(self, chars):
        return [self.tagset.tag(i) for i in self.tag_ids(chars)]

    def snapshot(self):
        return [p.data.copy() for _, p in self.parameters()]

    def load_state(self, state):
        params = self.parameters()
        if len(state) != len(params):
            raise ValueError(f"snapshot holds {len(state)} tensors, model has {len(params)}")
        for (name, p), value in zip(params, state):
            if p.data.shape != value.shape:
                raise ValueError(f"{name}: snapshot shape {value.shape} != {p.data.shape}")
            p.data[...] = value
