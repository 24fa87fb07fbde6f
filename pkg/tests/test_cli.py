import json

import numpy as np
import pytest

from paat import cli
from paat.checkpoint import save_checkpoint
from paat.data import Vocab, read_dataset, token_string
from paat.model import PaatConfig, PaatModel

TINY_GEN = ["--num-labels", "3", "--vocab-size", "120", "--signature-per-label", "6", "--doc-len", "48",
            "--labels-per-doc-min", "1", "--labels-per-doc-max", "2", "--num-docs", "40"]
TINY_MODEL = ["--num-labels", "3", "--embed-dim", "6", "--hidden", "4", "--attn-dim", "5", "--n-enc", "2",
              "--n-att", "2", "--dropout", "0"]


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus") / "data"
    assert run("gen-data", "--out", out, "--seed", 3, *TINY_GEN) == 0
    return out


@pytest.fixture(scope="module")
def trained(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert run("train", "--data", corpus, "--out", out, "--epochs", 2, *TINY_MODEL) == 0
    return out


# -- configuration ------------------------------------------------------------------


def test_precedence_defaults_preset_file_flags(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("preset=dispersed\nhidden=9\nlr=0.01\n", encoding="utf-8")
    args = cli.build_parser().parse_args(["train", "--data", "d", "--out", "o", "--config", str(conf), "--lr", "0.02"])
    cfg = cli.resolve(args)
    assert cfg["signature_per_label"] == cli.PRESETS["dispersed"]["signature_per_label"]  # preset over default
    assert cfg["hidden"] == 9  # file over preset
    assert cfg["lr"] == 0.02  # flag over file
    assert cfg["beta2"] == 0.999  # untouched default


def test_doc_len_sets_both_bounds():
    args = cli.build_parser().parse_args(["gen-data", "--out", "o", "--doc-len", "77"])
    cfg = cli.resolve(args)
    assert cfg["doc_len_min"] == cfg["doc_len_max"] == 77


def test_unknown_key_in_config_file(tmp_path, capsys):
    conf = tmp_path / "bad.cfg"
    conf.write_text("colour=red\n", encoding="utf-8")
    assert run("gen-data", "--out", tmp_path / "o", "--config", conf) == 2
    assert "colour" in capsys.readouterr().err


def test_bad_values_exit_2(tmp_path):
    assert run("gen-data", "--out", tmp_path / "o", "--num-docs", "many") == 2
    assert run("gen-data", "--out", tmp_path / "o", "--split", "0.5,0.5") == 2
    with pytest.raises(SystemExit) as exc:
        run("train", "--data", "x")  # argparse usage error
    assert exc.value.code == 2


# -- gen-data --------------------------------------------------------------------


def test_gen_data_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run("gen-data", "--out", tmp_path / name, "--seed", 7, *TINY_GEN) == 0
    for f in ("train.tsv", "valid.tsv", "test.tsv", "audit.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_gen_data_writes_splits_and_audit(corpus):
    sizes = [len(read_dataset(corpus / f"{n}.tsv", 3)) for n in ("train", "valid", "test")]
    assert sizes == [32, 4, 4]
    audit = json.loads((corpus / "audit.json").read_text())
    assert audit["stray_signature_tokens"] == 0 and audit["min_regions_covered"] >= 6


def test_concentrated_preset_audit(tmp_path, capsys):
    assert run("gen-data", "--preset", "concentrated", "--num-docs", 20, "--out", tmp_path / "c") == 0
    audit = json.loads(capsys.readouterr().out)
    assert audit["dispersion"] == 1


def test_infeasible_spec_exits_nonzero(tmp_path, capsys):
    assert run("gen-data", "--out", tmp_path / "x", "--doc-len", 10, "--signature-per-label", 50) == 2
    assert "signature volume" in capsys.readouterr().err


def test_config_is_logged_before_work(tmp_path):
    out = tmp_path / "g"
    run("gen-data", "--out", out, "--doc-len", 10, "--signature-per-label", 50)
    log = (out / "run.log").read_text()
    assert "signature_per_label=50" in log and "doc_len_min=10" in log


# -- train -----------------------------------------------------------------------


def test_train_outputs(trained):
    for name in ("model.ckpt", "epochs.tsv", "config.txt", "run.log", "summary.json"):
        assert (trained / name).exists()
    lines = (trained / "epochs.tsv").read_text().splitlines()
    assert lines[0] == "epoch\ttrain_bce\tvalid_micro_f1" and len(lines) == 3
    assert json.loads((trained / "summary.json").read_text())["best_epoch"] in (1, 2)


def test_resolved_config_reproduces_the_run(trained, corpus, tmp_path):
    out = tmp_path / "again"
    assert run("train", "--data", corpus, "--out", out, "--config", trained / "config.txt") == 0
    assert (out / "epochs.tsv").read_bytes() == (trained / "epochs.tsv").read_bytes()
    assert (out / "model.ckpt").read_bytes() == (trained / "model.ckpt").read_bytes()


def test_pea_equals_single_partition_paat(corpus, tmp_path):
    a, b = tmp_path / "pea", tmp_path / "one"
    assert run("train", "--data", corpus, "--out", a, "--epochs", 2, *TINY_MODEL, "--variant", "paat-pea") == 0
    assert run("train", "--data", corpus, "--out", b, "--epochs", 2, *TINY_MODEL, "--n-enc", 1, "--n-att", 1) == 0
    assert (a / "epochs.tsv").read_bytes() == (b / "epochs.tsv").read_bytes()


def test_zero_lr_keeps_valid_f1_constant(corpus, tmp_path):
    assert run("train", "--data", corpus, "--out", tmp_path, "--epochs", 3, "--lr", 0, *TINY_MODEL) == 0
    rows = [line.split("\t") for line in (tmp_path / "epochs.tsv").read_text().splitlines()[1:]]
    assert len({r[2] for r in rows}) == 1


def test_train_without_data_exits_2(tmp_path):
    assert run("train", "--data", tmp_path / "missing", "--out", tmp_path / "o") == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_a_runtime_failure(corpus, tmp_path, capsys):
    assert run("train", "--data", corpus, "--out", tmp_path, "--epochs", 1, "--lr", "1e308", *TINY_MODEL) == 1
    assert "failed" in capsys.readouterr().err


# -- eval ------------------------------------------------------------------------


def test_eval_is_deterministic_and_self_compare_is_empty(trained, corpus, tmp_path):
    ckpt = trained / "model.ckpt"
    for name in ("a.json", "b.json"):
        assert run("eval", "--checkpoint", ckpt, "--data", corpus / "test.tsv", "--out", tmp_path / name,
                   "--compare", ckpt, "--k", "1,3") == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    rep = json.loads((tmp_path / "a.json").read_text())
    assert rep["disagreement"]["cells"] == 0
    assert set(rep["p_at_k"]) == {"1", "3"}


def test_eval_memorized_training_set(corpus, tmp_path):
    out = tmp_path / "mem"
    assert run("train", "--data", corpus, "--out", out, "--epochs", 40, "--lr", 0.01, "--patience", 0,
               "--num-labels", 3, "--embed-dim", 8, "--hidden", 8, "--attn-dim", 8, "--dropout", 0,
               "--n-enc", 2, "--n-att", 2) == 0
    assert run("eval", "--checkpoint", out / "model.ckpt", "--data", corpus / "train.tsv",
               "--out", tmp_path / "r.json") == 0
    assert json.loads((tmp_path / "r.json").read_text())["micro_f1"] >= 0.95


def test_eval_label_mismatch_is_config_error(trained, tmp_path):
    path = tmp_path / "wide.tsv"
    path.write_text("d1\tw0001\tC07\n", encoding="utf-8")
    assert run("eval", "--checkpoint", trained / "model.ckpt", "--data", path, "--out", tmp_path / "r.json") == 2


def test_eval_bad_checkpoint_is_runtime_error(corpus, tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    assert run("eval", "--checkpoint", bad, "--data", corpus / "test.tsv", "--out", tmp_path / "r.json") == 1


# -- explain ---------------------------------------------------------------------


def toy_checkpoint(path, n_att=2, zero=True):
    vocab = Vocab([token_string(i) for i in range(10)])
    cfg = PaatConfig(vocab_size=len(vocab), num_labels=2, embed_dim=4, hidden=3, attn_dim=3,
                     n_enc=2, n_att=n_att, dropout=0.0, seed=1)
    model = PaatModel(cfg)
    if zero:
        for name in ("attn.W", "head.w", "head.b"):
            model.params[name][...] = 0.0
    save_checkpoint(model, path, vocab)
    return path


def toy_doc(path):
    path.write_text("d1\t" + " ".join(token_string(i) for i in (3, 1, 4, 1, 5, 9, 2, 6)) + "\tC01\n", encoding="utf-8")
    return path


def test_explain_untrained_zero_model_is_uniform(tmp_path):
    ckpt, data = toy_checkpoint(tmp_path / "m.ckpt"), toy_doc(tmp_path / "d.tsv")
    assert run("explain", "--checkpoint", ckpt, "--data", data, "--doc-id", "d1", "--out", tmp_path / "ex") == 0
    payload = json.loads((tmp_path / "ex.json").read_text())
    (entry,) = payload["labels"]
    assert entry["label"] == "C01" and entry["probability"] == 0.5
    assert all(abs(r["weight"] - 1 / 8) <= 1e-15 for r in entry["conventional"] + entry["partition"])
    assert entry["segment_weights"] == pytest.approx([0.5, 0.5], abs=1e-15)
    text = (tmp_path / "ex.txt").read_text()
    body = [line for line in text.splitlines() if line.strip()[:1].isdigit()]
    assert len(body) == 8 and all("····  ····" in line for line in body)


def test_explain_single_partition_maps_coincide(tmp_path):
    ckpt = toy_checkpoint(tmp_path / "m.ckpt", n_att=1, zero=False)
    data = toy_doc(tmp_path / "d.tsv")
    assert run("explain", "--checkpoint", ckpt, "--data", data, "--doc-id", "d1", "--labels", "C00,C01",
               "--out", tmp_path / "ex") == 0
    for entry in json.loads((tmp_path / "ex.json").read_text())["labels"]:
        conv = [(r["position"], r["weight"]) for r in entry["conventional"]]
        part = [(r["position"], r["weight"]) for r in entry["partition"]]
        assert [p for p, _ in conv] == [p for p, _ in part]
        assert max(abs(a[1] - b[1]) for a, b in zip(conv, part)) <= 1e-12


@pytest.mark.parametrize("extra", [["--doc-id", "nope"], ["--doc-id", "d1", "--labels", "C09"],
                                   ["--doc-id", "d1", "--labels", "X1"]])
def test_explain_input_errors(tmp_path, extra):
    ckpt, data = toy_checkpoint(tmp_path / "m.ckpt"), toy_doc(tmp_path / "d.tsv")
    assert run("explain", "--checkpoint", ckpt, "--data", data, "--out", tmp_path / "ex", *extra) == 2


def test_shade_buckets_follow_quantiles():
    assert cli.shade_buckets([0.2] * 5) == [0] * 5
    assert cli.shade_buckets([0.0, 0.1, 0.2, 0.3, 0.4]) == [0, 1, 2, 3, 4]
    assert cli.shade_buckets(np.arange(10.0)) == [0, 0, 1, 1, 2, 2, 3, 3, 4, 4]


def test_regions_hit():
    ranked = [(0, "a", 0.5), (5, "b", 0.3), (6, "c", 0.2)]
    assert cli.regions_hit(ranked, [(0, 4), (4, 8)]) == 2
    assert cli.regions_hit(ranked, [(0, 4), (4, 8)], top=1) == 1


# -- ablate ----------------------------------------------------------------------


def test_ablate_variants_by_seeds(corpus, tmp_path, capsys):
    assert run("ablate", "--data", corpus, "--out", tmp_path, "--variants", "paat,paat-pea", "--seeds", 2,
               "--epochs", 1, *TINY_MODEL) == 0
    table = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in table[1:]] == ["paat", "paat-pea"]
    res = json.loads((tmp_path / "results.json").read_text())
    assert len(res["cells"]) == 4 and all(e["runs"] == 2 for e in res["table"])
    assert set(res["disagreement"]["paat vs paat-pea"]) == {"0", "1"}


def test_ablate_partition_sweep_rows(corpus, tmp_path):
    cfg = cli.resolve(cli.build_parser().parse_args(["ablate", "--data", "x", "--out", "y", "--epochs", "1", *TINY_MODEL]))
    summary = cli.run_ablation(cfg, corpus, tmp_path, [], [1, 2, 6], [0])
    assert [e["row"] for e in summary["table"]] == ["partitions=1", "partitions=2", "partitions=6"]
    assert "partitions=1" in (tmp_path / "table.txt").read_text()


def test_ablate_marks_failed_cells_and_continues(corpus, tmp_path, capsys):
    code = run("ablate", "--data", corpus, "--out", tmp_path, "--partitions", "0,2", "--seeds", 1, "--epochs", 1, *TINY_MODEL)
    assert code == 1
    res = json.loads((tmp_path / "results.json").read_text())
    bad, good = res["table"]
    assert bad["runs"] == 0 and bad["failed"] and good["runs"] == 1
    assert "failed: 1" in capsys.readouterr().out


def test_ablate_parallel_matches_serial(corpus, tmp_path):
    cfg = cli.resolve(cli.build_parser().parse_args(["ablate", "--data", "x", "--out", "y", "--epochs", "1", *TINY_MODEL]))
    a = cli.run_ablation(cfg, corpus, tmp_path / "a", ["paat", "paat-pea"], [], [0, 1], jobs=1)
    b = cli.run_ablation(cfg, corpus, tmp_path / "b", ["paat", "paat-pea"], [], [0, 1], jobs=2)
    assert (tmp_path / "a" / "table.txt").read_bytes() == (tmp_path / "b" / "table.txt").read_bytes()
    assert [c["row"] for c in a["cells"]] == [c["row"] for c in b["cells"]]


def test_ablate_needs_a_sweep(corpus, tmp_path):
    assert run("ablate", "--data", corpus, "--out", tmp_path) == 2
