import json

import numpy as np
import pytest

from asp2vec.cli import main, resolve_config, build_parser
from asp2vec.store import EmbeddingStore
from asp2vec.synthetic import author_paper_graph, planted_partition

SMALL = ["--d", "4", "--K", "2", "--walks-per-node", "3", "--walk-length", "12", "--epochs", "1"]


@pytest.fixture
def graph_file(tmp_path):
    g, _ = planted_partition(3, 15, 0.4, 0.02, seed=0)
    p = tmp_path / "g.edges"
    p.write_text(g.to_edge_list())
    return p


def test_train_outputs(tmp_path, graph_file):
    out = tmp_path / "run"
    assert main(["train", "--graph", str(graph_file), "--out", str(out)] + SMALL) == 0
    head = (out / "embeddings.txt").read_text().splitlines()[0]
    assert head == "45 4"
    for name in ("embeddings.txt", "P.txt", "Q1.txt", "Q2.txt"):
        meta = json.loads((out / f"{name}.meta.json").read_text())
        assert meta["config"]["K"] == 2 and "seed" in meta
    assert (out / "training_log.csv").read_text().startswith("# {")
    s = EmbeddingStore.load(out / "store.npz")
    assert s.K == 2 and s.d == 4


def test_deepwalk_method(tmp_path, graph_file):
    out = tmp_path / "dw"
    assert main(["train", "--graph", str(graph_file), "--method", "deepwalk", "--out", str(out)] + SMALL) == 0
    assert EmbeddingStore.load(out / "store.npz").K == 1


def test_config_error_exit_code(tmp_path, graph_file, capsys):
    rc = main(["train", "--graph", str(graph_file), "--out", str(tmp_path / "x"), "--tau", "0"])
    assert rc == 2
    assert "config error" in capsys.readouterr().err
    assert main(["train", "--graph", str(tmp_path / "missing"), "--out", str(tmp_path / "x")]) == 2


def test_runtime_error_exit_code(tmp_path):
    bad = tmp_path / "bad.edges"
    bad.write_text("0 1\n1\n")
    assert main(["train", "--graph", str(bad), "--out", str(tmp_path / "x")] + SMALL) == 1


def test_flags_override_config_json(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"d": 8, "K": 3, "lambda": 0.5}))
    args = build_parser().parse_args(["train", "--graph", "g", "--out", "o", "--config", str(cfg),
                                      "--d", "6", "--no-warmup"])
    c = resolve_config(args)
    assert (c.d, c.K, c.lam, c.warmup) == (6, 3, 0.5, False)
    args = build_parser().parse_args(["train", "--graph", "g", "--out", "o", "--threads", "2"])
    assert resolve_config(args).deterministic is False


def test_eval_random_near_half(tmp_path, capsys):
    g, _ = planted_partition(4, 60, 0.1, 0.01, seed=1)
    p = tmp_path / "g.edges"
    p.write_text(g.to_edge_list())
    split = tmp_path / "split"
    report = tmp_path / "r.json"
    assert main(["eval", "--graph", str(p), "--method", "random", "--d", "50", "--K", "2",
                 "--split", str(split), "--out", str(report)]) == 0
    r = json.loads(report.read_text())
    assert abs(r["auc"] - 0.5) < 0.07
    assert (split / "test_pos.edges").exists()
    # the saved split is reused
    assert main(["eval", "--graph", str(p), "--method", "random", "--d", "50", "--K", "2",
                 "--split", str(split), "--out", str(report)]) == 0
    assert json.loads(report.read_text())["counts"] == r["counts"]


def test_eval_trains_on_residual(tmp_path, graph_file):
    report = tmp_path / "r.json"
    assert main(["eval", "--graph", str(graph_file), "--out", str(report)] + SMALL) == 0
    r = json.loads(report.read_text())
    assert r["extra"]["trained_on"] == "residual" and 0 <= r["auc"] <= 1


def test_diag_and_export(tmp_path, graph_file, capsys):
    out = tmp_path / "run"
    main(["train", "--graph", str(graph_file), "--out", str(out)] + SMALL)
    capsys.readouterr()
    d = tmp_path / "diag"
    assert main(["diag", "--store", str(out / "store.npz"), "--graph", str(graph_file), "--out", str(d)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert 0 <= printed["mean_offdiag_abs_cos"] <= 1
    heat = (d / "heatmap.csv").read_text().splitlines()
    assert heat[0].startswith("# {") and heat[1] == "aspect,a0,a1"
    var = (d / "aspect_variance.csv").read_text().splitlines()
    assert var[1] == "node,frequency,variance" and len(var) == 2 + 45
    e = tmp_path / "q2.txt"
    assert main(["export", "--store", str(out / "store.npz"), "--matrix", "Q2", "--out", str(e)]) == 0
    assert e.read_text().splitlines()[0] == "45 4"
    assert main(["export", "--store", str(out / "store.npz"), "--matrix", "Q9", "--out", str(e)]) == 2


def test_walk_and_het_train(tmp_path):
    g, _ = author_paper_graph(n_authors=20, n_papers=60, seed=0)
    gp = tmp_path / "ap.edges"
    gp.write_text(g.to_edge_list())
    tp = tmp_path / "ap.types"
    tp.write_text("".join(f"{g.label(i)} {g.type_of(i)}\n" for i in range(g.node_count)))
    corpus = tmp_path / "walks.npz"
    assert main(["walk", "--graph", str(gp), "--types", str(tp), "--scheme", "A,P,A",
                 "--out", str(corpus)] + SMALL) == 0
    out = tmp_path / "het"
    assert main(["het-train", "--graph", str(gp), "--types", str(tp), "--scheme", "A,P,A",
                 "--scheme", "P,A,P", "--aspect-context-types", "P", "--out", str(out)] + SMALL) == 0
    s = EmbeddingStore.load(out / "store.npz")
    assert s.meta["mode"] == "asp2vec-het" and np.isfinite(s.U).all()
    assert main(["het-train", "--graph", str(gp), "--types", str(tp), "--scheme", "A,X,A",
                 "--aspect-context-types", "P", "--out", str(out)] + SMALL) != 0
