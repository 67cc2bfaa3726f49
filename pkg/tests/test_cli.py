import csv

import numpy as np
import pytest

from strangecp.evalbench.cli import main, parse_grid, parse_synthetic

SYN = "heteroscedastic,n=400"


def test_parse_grid():
    assert parse_grid("10:100:10") == tuple(range(10, 101, 10))
    assert parse_grid("5,7") == (5, 7)
    assert parse_synthetic("homoscedastic,n=50,noise=2").noise_scale == 2.0


def test_run_writes_all_formats(tmp_path, capsys):
    code = main(["run", "--synthetic", SYN, "--k-grid", "10,20", "--seeds", "0,1",
                 "--confidence", "0.9", "--out", str(tmp_path)])
    assert code == 0
    for name in ("results.csv", "results.md", "plot_data.csv"):
        assert (tmp_path / name).exists()
    with (tmp_path / "results.csv").open() as fh:
        assert len(list(csv.DictReader(fh))) == 4
    out = capsys.readouterr().out
    assert "selected" in out or "no configuration" in out


def test_report_subcommand(tmp_path):
    assert main(["run", "--synthetic", SYN, "--seeds", "0", "--out", str(tmp_path)]) == 0
    dest = tmp_path / "rep"
    assert main(["report", "--in", str(tmp_path / "results.csv"), "--format", "plot-data",
                 "--out", str(dest)]) == 0
    assert (dest / "plot_data.csv").exists()


def test_config_file_with_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# grid\nsynthetic = {SYN}\nk-grid = 10,20,30\nseeds = 0\n"
                   "confidence = 0.9\nmode = plain\n")
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--k-grid", "15", "--mode", "norm",
                 "--out", str(out)]) == 0
    with (out / "results.csv").open() as fh:
        recs = list(csv.DictReader(fh))
    assert [(r["k"], r["mode"]) for r in recs] == [("15", "norm")]


def test_csv_inputs(tmp_path, rng):
    paths = {}
    for name, n in (("train", 120), ("cal", 60), ("test", 60)):
        x = rng.uniform(0, 5, n)
        y = x * np.sin(x) + rng.normal(0, 0.3, n)
        p = tmp_path / f"{name}.csv"
        p.write_text("x,y,y_hat\n" + "".join(f"{a},{b},{a * np.sin(a)}\n" for a, b in zip(x, y)))
        paths[name] = str(p)
    code = main(["run", "--train", paths["train"], "--cal", paths["cal"], "--test",
                 paths["test"], "--seeds", "0", "--out", str(tmp_path / "o")])
    assert code == 0


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(l.startswith("PASS") for l in lines)


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["run", "--mode", "bogus", "--synthetic", SYN],
    ["run"],
    ["run", "--synthetic", SYN, "--data", "x.csv"],
    ["run", "--synthetic", SYN, "--confidence", "1.5"],
    ["run", "--synthetic", "wiggly"],
    ["run", "--config"],
    ["run", "--config", "/nonexistent/cfg"],
])
def test_usage_errors_exit_1(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[:1] == ["run"] else argv) == 1


def test_data_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y,y_hat\n1,2,2\n")
    assert main(["run", "--data", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["run", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2
    assert main(["run", "--synthetic", SYN, "--k-grid", "5000", "--out", str(tmp_path)]) == 2
    assert main(["report", "--in", str(tmp_path / "missing.csv")]) == 2
