"""Corpus ingestion for joint segmentation and tagging.

Reads one sentence per line of whitespace-separated "word/POS" tokens,
expands each word into per-character position tags (B/M/E/S crossed with
the POS label), and builds the character vocabulary and joint tag set.
Also loads pre-trained character embeddings in the word2vec text format.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .autograd import Parameter
from .encoder import CharIds, EmbeddingTable

log = logging.getLogger(__name__)

SEG_LABELS = ("B", "M", "E", "S")

# sentence-boundary marker used inside bigram keys; never occurs in text
BOUNDARY = "\x00"

# full-width ASCII variants to their half-width forms (U+FF01..U+FF5E)
_FULLWIDTH = {chr(c): chr(c - 0xFEE0) for c in range(0xFF01, 0xFF5F)}


def fold_width(text):
    """Map full-width ASCII variants to half-width; other characters pass."""
    return "".join(_FULLWIDTH.get(c, c) for c in text)


class CorpusFormatError(ValueError):
    """A corpus line does not parse; the message cites the line number."""


class EmbeddingFormatError(ValueError):
    """A pre-trained embedding file does not parse or has the wrong width."""


@dataclass(frozen=True)
class JointTag:
    """One character's label: word-position tag crossed with a POS label."""

    seg: str
    pos: str

    def __post_init__(self):
        if self.seg not in SEG_LABELS:
            raise ValueError(f"segment tag must be one of {SEG_LABELS}, got {self.seg!r}")

    def __str__(self):
        return f"{self.seg}-{self.pos}"

    @classmethod
    def parse(cls, text):
        seg, _, pos = text.partition("-")
        if not pos:
            raise ValueError(f"cannot parse joint tag {text!r}")
        return cls(seg, pos)


@dataclass
class Sentence:
    """A character sequence, optionally with gold joint tags."""

    chars: list
    tags: list = None

    def __post_init__(self):
        if self.tags is not None and len(self.tags) != len(self.chars):
            raise ValueError(
                f"{len(self.tags)} tags for {len(self.chars)} characters"
            )

    def __len__(self):
        return len(self.chars)


def expand_word(word, pos):
    """Per-character tags for one word: S alone, B..E, or B M.. E."""
    if len(word) == 0:
        raise ValueError("cannot expand an empty word")
    if len(word) == 1:
        return [JointTag("S", pos)]
    return ([JointTag("B", pos)]
            + [JointTag("M", pos)] * (len(word) - 2)
            + [JointTag("E", pos)])


def parse_tagged_corpus(lines, sep="/", strict=True, normalize_width=False):
    """Parse "word/POS" lines into Sentences.

    The separator is split at its last occurrence so words containing the
    separator survive. Malformed tokens raise CorpusFormatError in strict
    mode; in lenient mode they are skipped and counted in a single warning.
    normalize_width folds full-width ASCII variants in words (not POS
    labels) to half-width; off by default since it changes gold alignment.
    """
    sentences = []
    malformed = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        chars, tags = [], []
        for token in line.split():
            cut = token.rfind(sep)
            if cut <= 0 or cut == len(token) - 1:
                if strict:
                    raise CorpusFormatError(
                        f"line {lineno}: token {token!r} is not word{sep}POS"
                    )
                malformed += 1
                continue
            word, pos = token[:cut], token[cut + 1:]
            if normalize_width:
                word = fold_width(word)
            chars.extend(word)
            tags.extend(expand_word(word, pos))
        if chars:
            sentences.append(Sentence(chars, tags))
    if malformed:
        log.warning("skipped %d malformed tokens", malformed)
    return sentences


def format_sentence(sentence, sep="/"):
    """Render a gold-tagged sentence back to one "word/POS ..." line."""
    if sentence.tags is None:
        raise ValueError("sentence has no tags to serialize")
    tokens = []
    start = 0
    for i, tag in enumerate(sentence.tags):
        if tag.seg in ("E", "S"):
            tokens.append("".join(sentence.chars[start:i + 1]) + sep + tag.pos)
            start = i + 1
    if start < len(sentence.chars):  # defensively close a dangling word
        tokens.append("".join(sentence.chars[start:]) + sep + sentence.tags[-1].pos)
    return " ".join(tokens)


def serialize_corpus(sentences, sep="/"):
    return "\n".join(format_sentence(s, sep) for s in sentences) + "\n"


class Vocab:
    """Character and bigram index maps with unk at 0 and pad at 1."""

    UNK, PAD = 0, 1

    def __init__(self, chars, bigrams=None, char_freq=None):
        self.char_to_id = {c: i + 2 for i, c in enumerate(chars)}
        self.bigram_to_id = {b: i + 2 for i, b in enumerate(bigrams or [])}
        self.char_freq = dict(char_freq or {})
        self.unk_index = self.UNK
        self.pad_index = self.PAD

    @property
    def chars(self):
        return list(self.char_to_id)

    @property
    def bigrams(self):
        return list(self.bigram_to_id)

    @property
    def n_chars(self):
        """Embedding rows needed for characters, reserved slots included."""
        return len(self.char_to_id) + 2

    @property
    def n_bigrams(self):
        return len(self.bigram_to_id) + 2

    def char_id(self, c):
        return self.char_to_id.get(c, self.UNK)

    def bigram_id(self, a, b):
        return self.bigram_to_id.get((a, b), self.UNK)

    def encode(self, chars, use_bigram=False):
        """Index one sentence; boundary bigrams use the padding marker."""
        n = len(chars)
        uni = np.fromiter((self.char_id(c) for c in chars), dtype=np.intp, count=n)
        if not use_bigram:
            return CharIds(uni=uni)
        left = np.fromiter(
            (self.bigram_id(chars[i - 1] if i > 0 else BOUNDARY, chars[i]) for i in range(n)),
            dtype=np.intp, count=n)
        right = np.fromiter(
            (self.bigram_id(chars[i], chars[i + 1] if i < n - 1 else BOUNDARY) for i in range(n)),
            dtype=np.intp, count=n)
        return CharIds(uni=uni, bi_left=left, bi_right=right)


class TagSet:
    """Ordered joint tag alphabet with a stable POS-major, seg-minor layout."""

    def __init__(self, tags, pos_labels):
        self._tags = list(tags)
        self.pos_labels = list(pos_labels)
        self._index = {t: i for i, t in enumerate(self._tags)}

    @classmethod
    def cross_product(cls, pos_labels):
        labels = sorted(set(pos_labels))
        tags = [JointTag(seg, pos) for pos in labels for seg in SEG_LABELS]
        return cls(tags, labels)

    @classmethod
    def observed_only(cls, tag_counts):
        labels = sorted({t.pos for t in tag_counts})
        seg_rank = {s: i for i, s in enumerate(SEG_LABELS)}
        tags = sorted(tag_counts, key=lambda t: (t.pos, seg_rank[t.seg]))
        return cls(tags, labels)

    def index(self, tag):
        try:
            return self._index[tag]
        except KeyError:
            raise ValueError(f"tag {tag} not in tag set") from None

    def tag(self, i):
        return self._tags[i]

    def __len__(self):
        return len(self._tags)

    def __iter__(self):
        return iter(self._tags)

    def encode(self, tags):
        return np.fromiter((self.index(t) for t in tags), dtype=np.intp, count=len(tags))


def build_vocab_and_tagset(sentences, min_count=1, bigram_min_count=2,
                           use_bigram=False, observed_tags_only=False):
    """Character/bigram maps plus the joint tag set from a gold corpus.

    Characters (and bigrams) below their frequency cutoffs map to unk at
    embedding time. The tag set is the full {B,M,E,S} x POS cross product
    unless observed_tags_only restricts it to combinations seen in training.
    """
    sentences = list(sentences)
    if not sentences:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    char_freq = Counter()
    bigram_freq = Counter()
    tag_counts = Counter()
    for s in sentences:
        char_freq.update(s.chars)
        if use_bigram:
            padded = [BOUNDARY] + list(s.chars) + [BOUNDARY]
            bigram_freq.update(zip(padded, padded[1:]))
        if s.tags:
            tag_counts.update(s.tags)
    chars = sorted(c for c, f in char_freq.items() if f >= min_count)
    bigrams = sorted(b for b, f in bigram_freq.items() if f >= bigram_min_count)
    vocab = Vocab(chars, bigrams, char_freq)
    if not tag_counts:
        raise ValueError("corpus has no gold tags to build a tag set from")
    if observed_tags_only:
        tagset = TagSet.observed_only(tag_counts)
    else:
        tagset = TagSet.cross_product({t.pos for t in tag_counts})
    return vocab, tagset


@dataclass
class EmbeddingLoadStats:
    loaded: int
    skipped: int
    coverage: float   # loaded / |C|, over the real character vocabulary

    def __str__(self):
        return f"loaded {self.loaded} rows, skipped {self.skipped}, coverage {self.coverage:.1%}"


def load_pretrained_embeddings(path, vocab, d, rng=None, use_bigram=False,
                               dtype=np.float32, table=None):
    """Initialize an embedding table from a word2vec-format text file.

    The file starts with a "<count> <dim>" header; each following line is a
    token and dim whitespace-separated reals. Rows for in-vocabulary
    characters are copied; everything else keeps its random initialization
    and is counted as skipped. Pass an existing table to fill it in place.
    """
    if table is None:
        rng = rng or np.random.default_rng(0)
        uni = Parameter(rng.uniform(-0.01, 0.01, size=(vocab.n_chars, d)).astype(dtype),
                        name="embed.unigram")
        bi = None
        if use_bigram:
            bi = Parameter(rng.uniform(-0.01, 0.01, size=(vocab.n_bigrams, d)).astype(dtype),
                           name="embed.bigram")
        table = EmbeddingTable(uni, bi)
    if table.d != d:
        raise EmbeddingFormatError(f"table width {table.d} != requested d {d}")

    loaded = skipped = 0
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError("missing '<count> <dim>' header line")
        try:
            _, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingFormatError(f"bad header {' '.join(header)!r}") from None
        if dim != d:
            raise EmbeddingFormatError(f"file dimension {dim} != model dimension {d}")
        for lineno, line in enumerate(f, start=2):
            fields = line.rstrip("\n").split()
            if not fields:
                continue
            if len(fields) != dim + 1:
                raise EmbeddingFormatError(
                    f"line {lineno}: expected token + {dim} values, got {len(fields) - 1}"
                )
            token = fields[0]
            try:
                vec = np.array([float(v) for v in fields[1:]], dtype=table.unigram.dtype)
            except ValueError:
                raise EmbeddingFormatError(f"line {lineno}: malformed float") from None
            row = vocab.char_to_id.get(token)
            if row is None:
                skipped += 1
                continue
            table.unigram.data[row] = vec
            loaded += 1
    denom = max(len(vocab.char_to_id), 1)
    return table, EmbeddingLoadStats(loaded, skipped, loaded / denom)
