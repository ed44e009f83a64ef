import subprocess
import sys

import pytest

from segtag import cli
from segtag import corpus as cp
from segtag import modelfile as mf
from segtag.toydata import toy_corpus


@pytest.fixture()
def toy_files(tmp_path):
    sents = toy_corpus(16, seed=5)
    corpus = tmp_path / "train.txt"
    corpus.write_text(cp.serialize_corpus(sents), encoding="utf-8")
    config = tmp_path / "small.cfg"
    config.write_text(
        "# tiny widths so tests stay fast\n"
        "d = 8\n"
        "h = 8\n"
        "feature_map_sets = 2\n"
        "feature_map_size = 8\n"
        "epochs = 2\n"
        "batch = 8\n",
        encoding="utf-8")
    return corpus, config, tmp_path


def run_cli(*argv):
    return cli.main(list(argv))


class TestSettings:
    def test_published_defaults(self):
        args = cli.build_parser().parse_args(["train"])
        s = cli.resolve_settings(args)
        assert (s["d"], s["h"]) == (50, 100)
        assert (s["feature_map_sets"], s["feature_map_size"]) == (5, 100)
        assert (s["lr"], s["margin"], s["l2"], s["batch"]) == (0.2, 0.2, 1e-4, 20)
        assert s["window"] == 1
        cfg = cli.encoder_config_from(s)
        assert cfg.use_conv and cfg.use_pooling and cfg.use_highway
        assert cfg.recurrent == "blstm"

    def test_flags_override_file_overrides_defaults(self, tmp_path):
        config = tmp_path / "c.cfg"
        config.write_text("epochs = 7\nlr = 0.05\n", encoding="utf-8")
        args = cli.build_parser().parse_args(
            ["train", "--config", str(config), "--epochs", "3"])
        s = cli.resolve_settings(args)
        assert s["epochs"] == 3       # flag beats file
        assert s["lr"] == 0.05        # file beats default
        assert s["batch"] == 20       # default survives

    def test_unknown_config_key_named(self, tmp_path):
        config = tmp_path / "c.cfg"
        config.write_text("learning_rate = 0.1\n", encoding="utf-8")
        with pytest.raises(cli.CliError, match="learning_rate"):
            cli.parse_config_file(config)

    def test_comments_and_blanks_ignored(self, tmp_path):
        config = tmp_path / "c.cfg"
        config.write_text("\n# comment\nepochs = 4  # trailing\n\n", encoding="utf-8")
        assert cli.parse_config_file(config) == {"epochs": 4}

    def test_mlp_topology_switch(self):
        args = cli.build_parser().parse_args(
            ["train", "--encoder", "mlp", "--window", "5"])
        cfg = cli.encoder_config_from(cli.resolve_settings(args))
        assert cfg.mlp_baseline and cfg.window == 5
        assert cfg.recurrent == "none" and not cfg.use_conv

    def test_no_conv_cascades(self):
        args = cli.build_parser().parse_args(["train", "--no-conv"])
        cfg = cli.encoder_config_from(cli.resolve_settings(args))
        assert not (cfg.use_conv or cfg.use_pooling or cfg.use_highway)


class TestTrainCommand:
    def test_trains_and_saves(self, toy_files, capsys):
        corpus, config, tmp = toy_files
        model_path = tmp / "m.model"
        rc = run_cli("train", "--config", str(config), "--corpus", str(corpus),
                     "--model", str(model_path), "--seed", "3")
        assert rc == 0
        assert model_path.exists()
        out = capsys.readouterr()
        assert out.out == ""                       # data stream untouched
        assert len([l for l in out.err.splitlines() if l and l[0].isdigit()]) == 2

    def test_deterministic_reruns_are_byte_identical(self, toy_files):
        corpus, config, tmp = toy_files
        paths = [tmp / "a.model", tmp / "b.model"]
        for p in paths:
            rc = run_cli("train", "--config", str(config), "--corpus", str(corpus),
                         "--model", str(p), "--seed", "7", "--deterministic")
            assert rc == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_missing_corpus_flag(self, toy_files, capsys):
        _, config, tmp = toy_files
        rc = run_cli("train", "--config", str(config), "--model", str(tmp / "m.model"))
        assert rc == 1
        assert "--corpus" in capsys.readouterr().err

    def test_pretrained_embeddings_are_loaded(self, toy_files, caplog):
        corpus, config, tmp = toy_files
        emb = tmp / "emb.txt"
        emb.write_text("2 8\n" + "a " + " ".join(["0.5"] * 8) + "\n"
                       + "b " + " ".join(["-0.5"] * 8) + "\n", encoding="utf-8")
        model_path = tmp / "m.model"
        with caplog.at_level("INFO"):
            rc = run_cli("train", "--config", str(config), "--corpus", str(corpus),
                         "--model", str(model_path), "--embeddings", str(emb))
        assert rc == 0
        assert "coverage" in caplog.text
        model = mf.load(model_path)
        # training updates the rows, but they must have started from the file;
        # with 2 epochs on a tiny corpus they stay near the seeded values
        row = model.encoder.table.unigram.data[model.vocab.char_id("a")]
        assert abs(float(row.mean()) - 0.5) < 0.45


class TestTagCommand:
    @pytest.fixture()
    def trained(self, toy_files):
        corpus, config, tmp = toy_files
        model_path = tmp / "m.model"
        assert run_cli("train", "--config", str(config), "--corpus", str(corpus),
                       "--model", str(model_path)) == 0
        return model_path, tmp

    def test_empty_input_empty_output(self, trained, tmp_path):
        model_path, _ = trained
        fin = tmp_path / "in.txt"
        fout = tmp_path / "out.txt"
        fin.write_text("", encoding="utf-8")
        rc = run_cli("tag", "--model", str(model_path), str(fin), str(fout))
        assert rc == 0
        assert fout.read_text(encoding="utf-8") == ""

    def test_blank_line_round_trips(self, trained, tmp_path):
        model_path, _ = trained
        fin = tmp_path / "in.txt"
        fout = tmp_path / "out.txt"
        fin.write_text("ab\n\ncde\n", encoding="utf-8")
        rc = run_cli("tag", "--model", str(model_path), str(fin), str(fout))
        assert rc == 0
        lines = fout.read_text(encoding="utf-8").split("\n")
        assert lines[1] == ""
        assert all("/" in l for l in (lines[0], lines[2]))

    def test_deterministic_output(self, trained, tmp_path):
        model_path, _ = trained
        fin = tmp_path / "in.txt"
        fin.write_text("abcdegh\nijkl\n", encoding="utf-8")
        outs = []
        for name in ("o1.txt", "o2.txt"):
            fout = tmp_path / name
            assert run_cli("tag", "--model", str(model_path), str(fin), str(fout)) == 0
            outs.append(fout.read_text(encoding="utf-8"))
        assert outs[0] == outs[1]

    def test_unseen_characters_never_crash(self, trained, tmp_path):
        model_path, _ = trained
        fin = tmp_path / "in.txt"
        fout = tmp_path / "out.txt"
        fin.write_text("xyz!?\n", encoding="utf-8")
        rc = run_cli("tag", "--model", str(model_path), str(fin), str(fout))
        assert rc == 0
        line = fout.read_text(encoding="utf-8").strip()
        assert line.count("/") >= 1
        assert "".join(tok.rsplit("/", 1)[0] for tok in line.split()) == "xyz!?"


class TestEvalCommand:
    def test_report_modes(self, toy_files, capsys):
        corpus, config, tmp = toy_files
        model_path = tmp / "m.model"
        assert run_cli("train", "--config", str(config), "--corpus", str(corpus),
                       "--model", str(model_path)) == 0
        capsys.readouterr()
        rc = run_cli("eval", "--model", str(model_path), "--corpus", str(corpus))
        assert rc == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0].startswith("joint\t") and lines[1].startswith("seg\t")

        rc = run_cli("eval", "--model", str(model_path), "--corpus", str(corpus),
                     "--mode", "seg")
        assert rc == 0
        out = capsys.readouterr().out
        assert out.startswith("seg\t") and "joint" not in out

    def test_overfit_toy_training_set_scores_high(self, tmp_path, capsys):
        # end-to-end: train on the toy corpus, then eval on the same file
        sents = toy_corpus(50, seed=0)
        corpus = tmp_path / "train.txt"
        corpus.write_text(cp.serialize_corpus(sents), encoding="utf-8")
        config = tmp_path / "toy.cfg"
        config.write_text("d = 16\nh = 16\nfeature_map_sets = 3\n"
                          "feature_map_size = 16\nepochs = 10\n", encoding="utf-8")
        model_path = tmp_path / "m.model"
        assert run_cli("train", "--config", str(config), "--corpus", str(corpus),
                       "--model", str(model_path), "--seed", "1") == 0
        capsys.readouterr()
        assert run_cli("eval", "--model", str(model_path), "--corpus", str(corpus),
                       "--mode", "joint") == 0
        line = capsys.readouterr().out.strip().splitlines()[0]
        f1 = float(line.split("\t")[3])
        assert f1 >= 0.99, line

    def test_malformed_gold_in_strict_mode_prints_no_report(self, toy_files, capsys):
        corpus, config, tmp = toy_files
        model_path = tmp / "m.model"
        assert run_cli("train", "--config", str(config), "--corpus", str(corpus),
                       "--model", str(model_path)) == 0
        bad = tmp / "bad.txt"
        bad.write_text("ab/NN\nbroken line\n", encoding="utf-8")
        capsys.readouterr()
        rc = run_cli("eval", "--model", str(model_path), "--corpus", str(bad))
        assert rc == 1
        out = capsys.readouterr()
        assert out.out == ""
        assert "line 2" in out.err


def test_console_entry_point(toy_files):
    corpus, config, tmp = toy_files
    model_path = tmp / "m.model"
    cmd = [sys.executable, "-m", "segtag.cli", "train", "--config", str(config),
           "--corpus", str(corpus), "--model", str(model_path)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert model_path.exists()
