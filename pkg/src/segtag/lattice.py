"""Tag score lattices and exact decoding.

A lattice holds one emission score per (position, tag) plus a shared
transition matrix. A path scores the sum of its emissions and the
transition scores between consecutive tags; Viterbi finds the exact argmax,
optionally over hamming-margin-augmented emissions for max-margin training.
A brute-force enumerator with identical tie-breaking serves as the oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import Parameter, Tensor, _accum, affine

# Finite stand-in for minus infinity; keeps masked-transition arithmetic NaN-free.
NEG_INF = -1e30
_INFEASIBLE = -1e29


class InfeasibleLatticeError(ValueError):
    """Every path through the lattice crosses a forbidden transition."""


class GuardError(ValueError):
    """Brute-force enumeration would exceed the instance-size guard."""


@dataclass
class ProjectionParams:
    """Per-position linear map from encoder output to tag scores."""

    w: Parameter    # d_out x |T|
    b: Parameter    # |T|


class TransitionMatrix:
    """Learned tag-to-tag scores with an optional hard-constraint mask.

    mask[i, j] = True forbids the transition i -> j: it scores NEG_INF when
    decoding and its entry never receives gradient.
    """

    def __init__(self, a, mask=None):
        self.a = a
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != a.shape:
                raise ValueError(f"mask shape {mask.shape} != transition shape {a.shape}")
        self.mask = mask

    @property
    def n_tags(self):
        return self.a.shape[0]

    def scores(self):
        """Transition score matrix with forbidden entries pinned to NEG_INF."""
        if self.mask is None:
            return self.a.data
        s = self.a.data.copy()
        s[self.mask] = NEG_INF
        return s


class TagScoreLattice:
    """Emission scores for one sentence plus a reference to the transitions."""

    def __init__(self, emissions, trans):
        emissions = np.asarray(emissions)
        if emissions.ndim != 2 or emissions.shape[0] < 1:
            raise ValueError(f"emissions must be n x |T| with n >= 1, got {emissions.shape}")
        if emissions.shape[1] != trans.n_tags:
            raise ValueError(
                f"emissions have {emissions.shape[1]} tags, transitions {trans.n_tags}"
            )
        if not np.all(np.isfinite(emissions)):
            raise ValueError("emissions must be finite")
        self.emissions = emissions
        self.trans = trans

    @property
    def n(self):
        return self.emissions.shape[0]

    @property
    def n_tags(self):
        return self.emissions.shape[1]


def emission_scores(h, proj):
    """Tag scores per position: plain affine map, no nonlinearity."""
    return affine(h, proj.w, proj.b)


def _check_tags(lat, tags):
    tags = np.asarray(tags, dtype=np.intp)
    if tags.ndim != 1 or len(tags) != lat.n:
        raise ValueError(f"tag sequence length {len(tags)} != lattice length {lat.n}")
    if len(tags) and (tags.min() < 0 or tags.max() >= lat.n_tags):
        raise ValueError(f"tag index out of range for |T| = {lat.n_tags}")
    return tags


def path_score(lat, tags):
    """Sum of transition scores plus emission scores along one tag path."""
    tags = _check_tags(lat, tags)
    n = lat.n
    score = lat.emissions[np.arange(n), tags].sum()
    if n > 1:
        score += lat.trans.scores()[tags[:-1], tags[1:]].sum()
    return float(score)


def _margin_row(n, n_tags, gold, eta, dtype):
    """Per-position hamming penalty: eta everywhere except the gold tag."""
    aug = np.full((n, n_tags), eta, dtype=dtype)
    aug[np.arange(n), gold] = 0.0
    return aug


def viterbi(lat):
    """Exact argmax tag path and its score.

    Ties resolve to the smaller tag index, compared from the last position
    backwards (the traceback order), so the result is reproducible and
    matches brute_force_decode exactly. The returned score is recomputed
    with path_score on the returned path.
    """
    path = _viterbi_path(lat.emissions, lat.trans.scores())
    return path, path_score(lat, path)


def _viterbi_path(emissions, a):
    n, n_tags = emissions.shape
    delta = emissions[0].copy()
    backptr = np.zeros((n, n_tags), dtype=np.intp)
    for t in range(1, n):
        cand = delta[:, None] + a            # cand[i, j]: best arriving at j via i
        backptr[t] = np.argmax(cand, axis=0)  # first max = smallest previous tag
        delta = cand[backptr[t], np.arange(n_tags)] + emissions[t]
    last = int(np.argmax(delta))
    if delta[last] <= _INFEASIBLE:
        raise InfeasibleLatticeError("all paths cross forbidden transitions")
    path = [last]
    for t in range(n - 1, 0, -1):
        path.append(int(backptr[t, path[-1]]))
    path.reverse()
    return path


def loss_augmented_viterbi(lat, gold, eta):
    """Decode with emissions inflated by the hamming margin against gold.

    Returns the augmented argmax path and its augmented score, which equals
    path_score(path) + eta * (positions differing from gold); on the gold
    path itself the augmented score is exactly the plain score.
    """
    gold = _check_tags(lat, gold)
    aug = lat.emissions + _margin_row(lat.n, lat.n_tags, gold, eta, lat.emissions.dtype)
    path = _viterbi_path(aug, lat.trans.scores())
    mismatches = int(np.sum(np.asarray(path) != gold))
    return path, path_score(lat, path) + eta * mismatches


def brute_force_decode(lat, gold=None, eta=0.0):
    """Exhaustive argmax over all |T|^n tag sequences (test oracle).

    Applies the same hamming augmentation as loss_augmented_viterbi when
    gold is given, and the same tie-break as viterbi: among equal-scoring
    sequences the one whose reversed tag tuple is lexicographically
    smallest wins. Guarded to |T|^n <= 10^6.
    """
    n, n_tags = lat.n, lat.n_tags
    total = n_tags ** n
    if total > 10 ** 6:
        raise GuardError(f"|T|^n = {n_tags}^{n} = {total} exceeds the 10^6 guard")
    if gold is not None:
        gold = _check_tags(lat, gold)

    # all sequences in lexicographic order, row s = base-|T| digits of s
    powers = n_tags ** np.arange(n - 1, -1, -1, dtype=np.int64)
    seqs = (np.arange(total, dtype=np.int64)[:, None] // powers) % n_tags
    scores = lat.emissions[np.arange(n), seqs].sum(axis=1)
    if n > 1:
        scores = scores + lat.trans.scores()[seqs[:, :-1], seqs[:, 1:]].sum(axis=1)
    if gold is not None:
        scores = scores + eta * (seqs != gold).sum(axis=1)

    best = scores.max()
    if best <= _INFEASIBLE:
        raise InfeasibleLatticeError("all paths cross forbidden transitions")
    candidates = seqs[np.flatnonzero(scores == best)]
    path = min((tuple(row) for row in candidates), key=lambda r: r[::-1])
    path = list(path)
    score = path_score(lat, path)
    if gold is not None:
        score += eta * int(np.sum(np.asarray(path) != gold))
    return path, score


def gather_path_score(emissions_t, a_param, trans, tags):
    """Differentiable path score over the emission tensor and transition parameter.

    emissions_t is the n x |T| emission Tensor still attached to the encoder
    graph; a_param is the transition Parameter. Masked transitions contribute
    their sentinel score but receive no gradient.
    """
    tags = np.asarray(tags, dtype=np.intp)
    n = emissions_t.shape[0]
    rows = np.arange(n)
    value = emissions_t.data[rows, tags].sum()
    prev = (emissions_t,)
    arcs = None
    if n > 1:
        arcs = (tags[:-1], tags[1:])
        value = value + trans.scores()[arcs].sum()
        prev = (emissions_t, a_param)
    out = Tensor(value, prev)

    def _back():
        g = np.zeros_like(emissions_t.data)
        g[rows, tags] = out.grad
        _accum(emissions_t, g)
        if arcs is not None:
            ga = np.zeros_like(a_param.data)
            np.add.at(ga, arcs, out.grad)
            if trans.mask is not None:
                ga[trans.mask] = 0.0
            _accum(a_param, ga)

    out._backward = _back
    return out


def path_emission_diff(scores_t, path, gold):
    """Differentiable sum_i scores[i, path_i] - scores[i, gold_i].

    The subtraction happens per position before summation, so positions
    where the sequences agree cancel bitwise: they contribute exactly zero
    to the value and the gradient, and perturbing parameters that only feed
    such positions cannot move the result. scores_t is the per-position tag
    score tensor without the bias row (the bias is handled by
    tag_count_diff, whose cancellation is exact in integer counts).
    """
    path = np.asarray(path, dtype=np.intp)
    gold = np.asarray(gold, dtype=np.intp)
    rows = np.arange(scores_t.shape[0])
    out = Tensor((scores_t.data[rows, path] - scores_t.data[rows, gold]).sum(),
                 (scores_t,))

    def _back():
        g = np.zeros_like(scores_t.data)
        np.add.at(g, (rows, path), out.grad)
        np.add.at(g, (rows, gold), -out.grad)
        _accum(scores_t, g)

    out._backward = _back
    return out


def tag_count_diff(b_param, path, gold):
    """Differentiable sum_t (uses in path - uses in gold) * b[t].

    Tags used equally often by both sequences drop out entirely, so the
    value and gradient are bitwise independent of their bias entries.
    """
    n_tags = b_param.shape[0]
    counts = (np.bincount(np.asarray(path, dtype=np.intp), minlength=n_tags)
              - np.bincount(np.asarray(gold, dtype=np.intp), minlength=n_tags))
    idx = np.flatnonzero(counts)
    weights = counts[idx].astype(b_param.data.dtype)
    out = Tensor((b_param.data[idx] * weights).sum(), (b_param,))

    def _back():
        if b_param.grad is None:
            b_param.grad = np.zeros_like(b_param.data)
        b_param.grad[idx] += weights * out.grad

    out._backward = _back
    return out


def arc_count_diff(a_param, trans, path, gold):
    """Differentiable sum over arcs of (uses in path - uses in gold) * A[arc].

    Arc counts are integers, so arcs crossed equally often cancel exactly;
    masked arcs contribute nothing and receive no gradient.
    """
    n_tags = a_param.shape[0]
    counts = np.zeros((n_tags, n_tags), dtype=np.int64)
    path = np.asarray(path, dtype=np.intp)
    gold = np.asarray(gold, dtype=np.intp)
    if len(path) > 1:
        np.add.at(counts, (path[:-1], path[1:]), 1)
        np.add.at(counts, (gold[:-1], gold[1:]), -1)
    if trans.mask is not None:
        counts[trans.mask] = 0   # decoding never crosses masked arcs anyway
    idx = np.nonzero(counts)
    weights = counts[idx].astype(a_param.data.dtype)
    out = Tensor((a_param.data[idx] * weights).sum(), (a_param,))

    def _back():
        if a_param.grad is None:
            a_param.grad = np.zeros_like(a_param.data)
        a_param.grad[idx] += weights * out.grad

    out._backward = _back
    return out


def bmes_transition_mask(tagset):
    """Hard segmentation-validity constraints as a forbidden-transition mask.

    B-x and M-x may only be followed by M-x or E-x (same POS); E-x and S-x
    may only be followed by B-y or S-y. Off by default: the transition
    matrix normally learns these regularities itself.
    """
    n = len(tagset)
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        seg_i, pos_i = tagset.tag(i).seg, tagset.tag(i).pos
        for j in range(n):
            seg_j, pos_j = tagset.tag(j).seg, tagset.tag(j).pos
            if seg_i in ("B", "M"):
                ok = seg_j in ("M", "E") and pos_j == pos_i
            else:
                ok = seg_j in ("B", "S")
            mask[i, j] = not ok
    return mask
