"""Command-line workflow: synth, build, query, align, eval."""

import json

import pytest

from cte.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    rc = main([
        "synth", "--clips", "5", "--seed", "17", "--out", str(data),
        "--master-len", "500", "--d", "12", "--min-len", "100", "--max-len", "200",
    ])
    assert rc == 0
    return root, data


def test_synth_outputs(workspace):
    root, data = workspace
    assert len(list(data.glob("*.cted"))) == 5
    assert (data / "ground_truth.json").exists()


def test_build_and_query(workspace, capsys):
    root, data = workspace
    idx = root / "idx.ctei"
    rc = main(["build", str(data), "--out", str(idx), "--beta", "1/4",
               "--pq", "4", "--pq-k", "32", "--pq-samples", "1024", "--pq-iters", "4"])
    assert rc == 0 and idx.exists()
    capsys.readouterr()

    out_json = root / "query.json"
    rc = main(["query", str(idx), str(data / "clip000.cted"), "--topk", "3",
               "--refine", "--json-out", str(out_json)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "clip000" in printed
    rows = json.loads(out_json.read_text())
    assert rows and rows[0]["db_id"] == "clip000"


def test_full_beta_flag(workspace):
    root, data = workspace
    idx = root / "full.ctei"
    assert main(["build", str(data), "--out", str(idx), "--beta", "full"]) == 0


def test_align_and_eval(workspace, capsys):
    root, data = workspace
    idx = root / "align.ctei"
    main(["build", str(data), "--out", str(idx), "--beta", "1/4"])
    out = root / "alignment.json"
    rc = main(["align", str(idx), "--tau", "0.5", "--min-score", "1.0", "--out", str(out)])
    assert rc == 0
    body = json.loads(out.read_text())
    assert "components" in body
    capsys.readouterr()

    rc = main(["eval", "pas", str(data / "ground_truth.json"), str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "pas" in printed


def test_eval_map(workspace, tmp_path, capsys):
    rankings = tmp_path / "rankings.json"
    relevance = tmp_path / "relevance.json"
    rankings.write_text(json.dumps({"q": ["a", "b"]}))
    relevance.write_text(json.dumps({"q": ["a"]}))
    assert main(["eval", "map", str(rankings), str(relevance)]) == 0
    assert "1.0000" in capsys.readouterr().out


def test_error_reported_cleanly(tmp_path, capsys):
    missing = tmp_path / "nope.ctei"
    rc = main(["query", str(missing), str(missing)])
    assert rc != 0
