import json

import numpy as np
import pytest

from banmf.cli import EXIT_BUDGET, EXIT_DATA, EXIT_USAGE, main
from banmf.matrix import read_csv, write_csv


def test_synth_writes_instance(tmp_path):
    out = tmp_path / "inst"
    assert main(["synth", "--rows", "12", "--cols", "10", "--rank", "3", "--density", "0.4",
                 "--noise", "0.02", "--seed", "5", "--out", str(out)]) == 0
    x, w, h = (read_csv(out / f) for f in ("x.csv", "w_true.csv", "h_true.csv"))
    assert x.shape == (12, 10) and w.shape == (12, 3) and h.shape == (3, 10)
    meta = json.loads((out / "meta.json").read_text())
    assert meta["rank"] == 3 and meta["rank_lower_bound_gap"] == meta["real_rank"] - 3


def test_factorize_round_trip(tmp_path, capsys):
    write_csv(tmp_path / "x.csv", np.ones((4, 4), np.uint8))
    assert main(["factorize", str(tmp_path / "x.csv"), "--rank", "1", "--out",
                 str(tmp_path / "o") + "/"]) == 0
    assert "hamming=0" in capsys.readouterr().out
    assert read_csv(tmp_path / "o" / "W.csv").tolist() == [[1]] * 4


def test_factorize_header_flag(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n1,1\n1,1\n")
    assert main(["factorize", str(tmp_path / "x.csv"), "--rank", "1", "--header",
                 "--out", str(tmp_path) + "/"]) == 0
    assert main(["factorize", str(tmp_path / "x.csv"), "--rank", "1",
                 "--out", str(tmp_path) + "/"]) == EXIT_DATA


def test_factorize_data_error(tmp_path, capsys):
    (tmp_path / "x.csv").write_text("0,0,0,0,0\n0,0,0,0,0\n0,0,0,0,2\n")
    assert main(["factorize", str(tmp_path / "x.csv"), "--rank", "1"]) == EXIT_DATA
    assert "(3,5)" in capsys.readouterr().err


def test_factorize_empty_support(tmp_path):
    write_csv(tmp_path / "x.csv", np.zeros((3, 3), np.uint8))
    assert main(["factorize", str(tmp_path / "x.csv"), "--rank", "1",
                 "--out", str(tmp_path) + "/"]) == EXIT_DATA


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["factorize"])
    assert info.value.code == EXIT_USAGE
    assert main(["bench", "density", "--method", "asso"]) == EXIT_USAGE
    assert main(["bench", "density", "--trials", "x"]) == EXIT_USAGE


def test_oracle_command(tmp_path, capsys):
    write_csv(tmp_path / "x.csv", np.eye(2, dtype=np.uint8))
    assert main(["oracle", str(tmp_path / "x.csv"), "--rank", "1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("min_hamming=1")
    assert "# W" in out and "# H" in out


def test_oracle_budget_exit(tmp_path):
    write_csv(tmp_path / "x.csv", np.ones((6, 6), np.uint8))
    assert main(["oracle", str(tmp_path / "x.csv"), "--rank", "3"]) == EXIT_BUDGET


def test_bench_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# desk run\ntrials = 4\nsizes = 10\nrank = 2\niters = 30\nmethod = banmf,nmf\n")
    out = tmp_path / "r.csv"
    assert main(["bench", "density", "--config", str(cfg), "--trials", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 2 * 3 * 2
    assert (tmp_path / "r_summary.csv").exists()
    used = json.loads((tmp_path / "r_config.json").read_text())
    assert used["trials"] == 2 and used["iters"] == 30


def test_bench_unknown_config_key(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("bogus = 1\n")
    assert main(["bench", "density", "--config", str(cfg)]) == EXIT_USAGE


def test_bench_stdout_without_out(capsys):
    assert main(["bench", "noise", "--trials", "1", "--sizes", "8", "--rank", "2",
                 "--iters", "10", "--method", "banmf"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("experiment,method,N,M,k")
    assert len(lines) == 1 + 3


def test_bench_time_with_traces(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["bench", "time", "--sizes", "10,20", "--trials", "1", "--rank", "2",
                 "--method", "banmf", "--trace-every", "500", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 2
    assert all(r.split(",")[13] == "1000" for r in rows)
    traces = json.loads((tmp_path / "t_traces.json").read_text())
    assert len(traces) == 2
