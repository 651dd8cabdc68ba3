import json

import pytest

from nswatermark import __version__
from nswatermark.barcode_set import BarcodeSet
from nswatermark.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from nswatermark.seqio import read


@pytest.fixture(scope="module")
def set_file(tmp_path_factory, l24_set):
    p = tmp_path_factory.mktemp("cli") / "set.tsv"
    l24_set.save(p)
    return p


def echoed_config(err: str) -> dict:
    line = next(x for x in err.splitlines() if x.startswith("effective config: "))
    return json.loads(line.split(": ", 1)[1])


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


def test_no_command_is_usage_error(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["demux", "--set", "x"]) == EXIT_USAGE
    assert "missing required option(s): --reads" in capsys.readouterr().err


def test_build_and_reload(tmp_path, capsys):
    out = tmp_path / "s.tsv"
    code = main(["build", "--l", "24", "--k", "2", "--budget", "0", "--no-cross-pairs", "--seed", "5",
                 "--out", str(out), "--trace", str(tmp_path / "t.tsv")])
    assert code == EXIT_OK
    printed = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    bs = BarcodeSet.load(out)
    assert int(printed["B"]) == bs.B and bs.l == 24
    assert "# built_by: nswatermark" in out.read_text()


@pytest.mark.parametrize("argv", [
    ["build", "--out", "x"],
    ["build", "--l", "25", "--out", "x"],
    ["build", "--l", "24", "--n", "5", "--out", "x"],
    ["build", "--l", "24", "--watermark", "ACG", "--out", "x"],
    ["build", "--l", "24", "--gc-min", "0.9", "--gc-max", "0.1", "--out", "x"],
])
def test_build_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert "nswatermark: error:" in capsys.readouterr().err


def test_missing_set_file_is_failure(tmp_path, capsys):
    assert main(["eval", "--set", str(tmp_path / "nope.tsv")]) == EXIT_FAILURE
    assert "error" in capsys.readouterr().err


def test_simulate_demux_pipeline(set_file, tmp_path, l24_set, capsys):
    reads = tmp_path / "r.fq"
    assert main(["simulate", "--set", str(set_file), "--n", "200", "--seed", "4", "--out", str(reads)]) == EXIT_OK
    recs = list(read(reads))
    assert len(recs) == 200 and recs[0].qual is not None
    assert "seed=4" in recs[0].description
    out, summ = tmp_path / "a.tsv", tmp_path / "s.json"
    assert main(["demux", "--set", str(set_file), "--reads", str(reads), "--threads", "2",
                 "--out", str(out), "--summary", str(summ)]) == EXIT_OK
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 200
    truth = {r.id: r.description.split()[0].split("=")[1] for r in recs}
    right = sum(row.split("\t")[2] == truth[row.split("\t")[0]] for row in rows)
    assert right >= 190
    assert json.loads(summ.read_text())["reads"] == 200


def test_simulate_from_fasta_is_reproducible(tmp_path):
    src = tmp_path / "in.fa"
    src.write_text(">a\nACGTACGTACGTACGTACGT\n>b\nGGGGCCCCAAAATTTT\n")
    a, b = tmp_path / "a.fa", tmp_path / "b.fa"
    for p in (a, b):
        assert main(["simulate", "--input", str(src), "--seed", "9", "--pi", "0.1", "--out", str(p)]) == EXIT_OK
    assert a.read_text() == b.read_text()
    assert [r.id for r in read(a)] == ["a", "b"]


def test_config_precedence(set_file, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 3, "pd": 0.02, "eval": {"n": 50, "seed": 4}}))
    assert main(["--config", str(cfg), "eval", "--set", str(set_file), "--seed", "5",
                 "--out", str(tmp_path / "e.txt")]) == EXIT_OK
    o = echoed_config(capsys.readouterr().err)
    assert o["seed"] == 5 and o["n"] == 50 and o["pd"] == 0.02 and o["pi"] == 0.055


def test_config_errors(set_file, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad), "eval", "--set", str(set_file)]) == EXIT_USAGE
    bad.write_text(json.dumps({"eval": {"bogus": 1}}))
    assert main(["--config", str(bad), "eval", "--set", str(set_file)]) == EXIT_USAGE
    assert "bogus" in capsys.readouterr().err


def test_rerun_from_echoed_config(set_file, tmp_path, capsys):
    first = tmp_path / "e1.txt"
    assert main(["eval", "--set", str(set_file), "--n", "300", "--seed", "8", "--out", str(first)]) == EXIT_OK
    cfg = echoed_config(capsys.readouterr().err)
    cfg["out"] = str(tmp_path / "e2.txt")
    path = tmp_path / "echo.json"
    path.write_text(json.dumps({"eval": {k: v for k, v in cfg.items() if k != "command"}}))
    assert main(["--config", str(path), "eval"]) == EXIT_OK
    assert (tmp_path / "e2.txt").read_text() == first.read_text()


def test_eval_sweep(set_file, tmp_path):
    out = tmp_path / "sw.tsv"
    assert main(["eval", "--set", str(set_file), "--n", "100", "--sweep", "pmut:0.03:0.09:2",
                 "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("p_mut\t") and len(lines) == 3
    assert main(["eval", "--set", str(set_file), "--sweep", "pmut:0.1"]) == EXIT_USAGE


def test_filter_command(tmp_path, capsys):
    src = tmp_path / "c.fa"
    src.write_text(">good\nTGGCCAAAATGTGGTG\n>gc\nGGGGCCGCGGCCGCGG\n>homo\nAAAAAAAACGTGCTGA\n")
    out, rep = tmp_path / "o.fa", tmp_path / "r.tsv"
    assert main(["filter", "--input", str(src), "--no-cross-pairs", "--out", str(out),
                 "--report", str(rep)]) == EXIT_OK
    assert [r.id for r in read(out)] == ["good"]
    report = rep.read_text()
    assert "gc\t" in report and "homo\t" in report
    src.write_text(">a\nACGT\n>b\nACG\n")
    assert main(["filter", "--input", str(src)]) == EXIT_FAILURE
