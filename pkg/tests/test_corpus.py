import io

import numpy as np
import pytest

from segtag import corpus as cp
from segtag.corpus import JointTag


class TestExpandWord:
    def test_two_char_word(self):
        assert cp.expand_word("AB", "NR") == [JointTag("B", "NR"), JointTag("E", "NR")]

    def test_single_char_word(self):
        assert cp.expand_word("X", "AS") == [JointTag("S", "AS")]

    def test_four_char_word(self):
        assert cp.expand_word("WXYZ", "NN") == [
            JointTag("B", "NN"), JointTag("M", "NN"), JointTag("M", "NN"), JointTag("E", "NN")
        ]

    def test_empty_word_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            cp.expand_word("", "NN")


class TestParse:
    def test_basic_line(self):
        sents = cp.parse_tagged_corpus(["AB/NR C/VV"])
        assert len(sents) == 1
        s = sents[0]
        assert s.chars == ["A", "B", "C"]
        assert s.tags == [JointTag("B", "NR"), JointTag("E", "NR"), JointTag("S", "VV")]

    def test_blank_lines_skipped(self):
        sents = cp.parse_tagged_corpus(["", "   ", "A/NN", ""])
        assert len(sents) == 1

    def test_strict_mode_cites_line(self):
        with pytest.raises(cp.CorpusFormatError, match="line 2.*XYZ"):
            cp.parse_tagged_corpus(["A/NN", "XYZ B/NN"])

    def test_lenient_mode_skips(self):
        sents = cp.parse_tagged_corpus(["XYZ A/NN"], strict=False)
        assert sents[0].chars == ["A"]

    def test_separator_splits_at_last_occurrence(self):
        sents = cp.parse_tagged_corpus(["a/b/PU"])
        assert sents[0].chars == ["a", "/", "b"]
        assert [t.pos for t in sents[0].tags] == ["PU"] * 3

    def test_missing_pos_rejected(self):
        with pytest.raises(cp.CorpusFormatError):
            cp.parse_tagged_corpus(["AB/"])

    def test_stream_input(self):
        sents = cp.parse_tagged_corpus(io.StringIO("A/NN B/VV\nCD/NR\n"))
        assert len(sents) == 2

    def test_width_normalization_off_by_default(self):
        fullwidth_ab = "ＡＢ"  # full-width A, B
        plain = cp.parse_tagged_corpus([f"{fullwidth_ab}/NN"])
        assert plain[0].chars == ["Ａ", "Ｂ"]
        folded = cp.parse_tagged_corpus([f"{fullwidth_ab}/NN"], normalize_width=True)
        assert folded[0].chars == ["A", "B"]
        # POS labels are never folded
        folded_pos = cp.parse_tagged_corpus(["A/ＮＮ"], normalize_width=True)
        assert folded_pos[0].tags[0].pos == "ＮＮ"

    def test_round_trip(self):
        lines = ["AB/NR C/VV", "X/AS WXYZ/NN"]
        sents = cp.parse_tagged_corpus(lines)
        text = cp.serialize_corpus(sents)
        again = cp.parse_tagged_corpus(text.splitlines())
        assert [s.chars for s in again] == [s.chars for s in sents]
        assert [s.tags for s in again] == [s.tags for s in sents]
        assert cp.serialize_corpus(again) == text


class TestVocabAndTagSet:
    def corpus(self):
        return cp.parse_tagged_corpus(["AB/NR C/VV", "CA/VV B/NR"])

    def test_tagset_is_full_cross_product(self):
        _, tagset = cp.build_vocab_and_tagset(self.corpus())
        assert len(tagset) == 8  # 4 seg labels x 2 POS labels
        assert tagset.pos_labels == ["NR", "VV"]
        # POS-major, seg-minor order
        assert str(tagset.tag(0)) == "B-NR"
        assert str(tagset.tag(3)) == "S-NR"
        assert str(tagset.tag(4)) == "B-VV"

    def test_observed_only_tagset(self):
        _, tagset = cp.build_vocab_and_tagset(self.corpus(), observed_tags_only=True)
        # corpus never shows an M tag
        assert all(t.seg != "M" for t in tagset)
        assert len(tagset) < 8

    def test_min_count_maps_rare_chars_to_unk(self):
        vocab, _ = cp.build_vocab_and_tagset(self.corpus(), min_count=2)
        # A, B, C all appear twice; add a singleton
        vocab2, _ = cp.build_vocab_and_tagset(
            self.corpus() + cp.parse_tagged_corpus(["Q/NR"]), min_count=2)
        assert vocab2.char_id("Q") == vocab2.unk_index
        assert vocab.char_id("A") != vocab.unk_index

    def test_deterministic_index_maps(self):
        v1, t1 = cp.build_vocab_and_tagset(self.corpus(), use_bigram=True, bigram_min_count=1)
        v2, t2 = cp.build_vocab_and_tagset(self.corpus(), use_bigram=True, bigram_min_count=1)
        assert v1.char_to_id == v2.char_to_id
        assert v1.bigram_to_id == v2.bigram_to_id
        assert [str(t) for t in t1] == [str(t) for t in t2]

    def test_every_gold_tag_is_in_tagset(self):
        sents = self.corpus()
        _, tagset = cp.build_vocab_and_tagset(sents)
        for s in sents:
            for tag in s.tags:
                tagset.index(tag)  # must not raise

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            cp.build_vocab_and_tagset([])

    def test_encode_boundary_bigrams_use_padding_marker(self):
        vocab, _ = cp.build_vocab_and_tagset(self.corpus(), use_bigram=True, bigram_min_count=1)
        ids = vocab.encode(["A", "B"], use_bigram=True)
        assert ids.bi_left[0] == vocab.bigram_id(cp.BOUNDARY, "A")
        assert ids.bi_right[1] == vocab.bigram_id("B", cp.BOUNDARY)
        assert ids.bi_left[1] == vocab.bigram_id("A", "B")

    def test_unseen_char_encodes_to_unk(self):
        vocab, _ = cp.build_vocab_and_tagset(self.corpus())
        ids = vocab.encode(["A", "?"])
        assert ids.uni[1] == vocab.unk_index
        assert ids.uni[0] == vocab.char_id("A")


class TestEmbeddingLoader:
    def write_file(self, tmp_path, chars, d, header_dim=None, junk=None):
        rows = [f"{len(chars)} {header_dim or d}"]
        vecs = {}
        for i, c in enumerate(chars):
            vec = [round(0.1 * (i + 1) + 0.01 * j, 4) for j in range(d)]
            vecs[c] = vec
            rows.append(c + " " + " ".join(str(v) for v in vec))
        if junk is not None:
            rows.append(junk)
        path = tmp_path / "emb.txt"
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        return path, vecs

    def vocab(self):
        sents = cp.parse_tagged_corpus(["AB/NR C/VV", "DE/NN"])
        return cp.build_vocab_and_tagset(sents)[0]

    def test_matching_rows_replaced_and_coverage_counted(self, tmp_path):
        vocab = self.vocab()
        path, vecs = self.write_file(tmp_path, ["A", "C"], d=3)
        table, stats = cp.load_pretrained_embeddings(path, vocab, d=3)
        assert stats.loaded == 2 and stats.skipped == 0
        assert stats.coverage == pytest.approx(2 / len(vocab.chars))
        assert np.allclose(table.unigram.data[vocab.char_id("A")], vecs["A"])
        assert np.allclose(table.unigram.data[vocab.char_id("C")], vecs["C"])

    def test_dimension_mismatch_rejected(self, tmp_path):
        vocab = self.vocab()
        path, _ = self.write_file(tmp_path, ["A"], d=100, header_dim=100)
        with pytest.raises(cp.EmbeddingFormatError, match="100.*50"):
            cp.load_pretrained_embeddings(path, vocab, d=50)

    def test_unknown_tokens_skipped(self, tmp_path):
        vocab = self.vocab()
        path, _ = self.write_file(tmp_path, ["A", "zz"], d=3)
        _, stats = cp.load_pretrained_embeddings(path, vocab, d=3)
        assert stats.loaded == 1 and stats.skipped == 1

    def test_malformed_float_cites_line(self, tmp_path):
        vocab = self.vocab()
        path, _ = self.write_file(tmp_path, ["A"], d=3, junk="B 0.1 oops 0.3")
        with pytest.raises(cp.EmbeddingFormatError, match="line 3"):
            cp.load_pretrained_embeddings(path, vocab, d=3)

    def test_fills_existing_table_in_place(self, tmp_path):
        vocab = self.vocab()
        path, vecs = self.write_file(tmp_path, ["B"], d=4)
        rng = np.random.default_rng(0)
        table, _ = cp.load_pretrained_embeddings(path, vocab, d=4, rng=rng)
        table2, stats = cp.load_pretrained_embeddings(path, vocab, d=4, table=table)
        assert table2 is table
        assert stats.loaded == 1
        assert np.allclose(table.unigram.data[vocab.char_id("B")], vecs["B"])
