import subprocess
import sys

import pytest

from mfpo import cli
from mfpo.errors import ParseError
from mfpo.harness import (
    CSV_COLUMNS,
    RunConfig,
    compare_report,
    format_csv,
    parse_config,
    read_csv,
    run,
    write_csv,
)
from mfpo.metrics import MetricsRecord

CHAIN = """\
# small chain run
env = chain
hidden_units = 4
N = 2
K = 2
D = 3
T = 4
eval_episodes = 3
"""


def rec(round_, ret, inter):
    return MetricsRecord(round_, 10 * round_, inter, round_, ret, 0.0, None, 1)


def test_minimal_config_defaults():
    cfg = parse_config("env = cartpole\n")
    assert cfg.gamma == 0.99 and cfg.eval_episodes == 20
    assert cfg.build_params().D_tilde == cfg.D * cfg.K
    assert cfg.build_arch().input_dim == 4


@pytest.mark.parametrize(
    "text,line,key",
    [
        ("K = 3\nT = 10\n", 1, "K"),
        ("D = -2\n", 1, "D"),
        ("env = chain\nfoo = 1\n", 2, "foo"),
        ("N = two\n", 1, "N"),
        ("N = 2\nN = 3\n", 2, "N"),
        ("just text\n", 1, None),
        ("env = mujoco\n", 1, "env"),
    ],
)
def test_parse_errors(text, line, key):
    with pytest.raises(ParseError) as err:
        parse_config(text)
    assert err.value.line == line and err.value.key == key
    assert f"line {line}" in str(err.value)


def test_config_comments_and_optional_values():
    cfg = parse_config("weight_clip =   # unset\nmomentum = 0.5\nsweep_N = 1, 2,5\n")
    assert cfg.weight_clip is None and cfg.momentum == 0.5 and cfg.sweep_N == (1, 2, 5)


def test_csv_round_trip(tmp_path):
    rows = [MetricsRecord(1, 10, 100, 1, 9.5, 1.25, 0.1, 7), rec(2, 20.0, 200)]
    path = tmp_path / "m.csv"
    write_csv(path, rows)
    raw = path.read_bytes()
    assert raw.startswith(b"round,step,env_interactions,comm_rounds,eval_return_mean,eval_return_std,grad_norm_sq,wall_ms\n")
    assert b"\r" not in raw
    assert read_csv(path) == rows
    assert format_csv(rows).splitlines()[0].split(",") == list(CSV_COLUMNS)


def test_single_round_run_writes_one_row(tmp_path, capsys):
    cfg = parse_config(CHAIN.replace("T = 4", "T = 2"))
    assert run(cfg, out=tmp_path / "one.csv") == 0
    rows = read_csv(tmp_path / "one.csv")
    assert len(rows) == 1 and rows[0].grad_norm_sq is not None
    assert "final_return=" in capsys.readouterr().out


def strip_wall(text):
    return [line.rsplit(",", 1)[0] for line in text.splitlines()]


def test_run_is_deterministic(tmp_path):
    cfg = parse_config(CHAIN)
    run(cfg, out=tmp_path / "a.csv")
    run(cfg, out=tmp_path / "b.csv")
    assert strip_wall((tmp_path / "a.csv").read_text()) == strip_wall((tmp_path / "b.csv").read_text())


def test_sweep_writes_suffixed_files(tmp_path):
    cfg = parse_config(CHAIN + "sweep_N = 1,2,5\n")
    assert run(cfg, out=tmp_path / "m.csv") == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["m_N1.csv", "m_N2.csv", "m_N5.csv"]


def test_run_reports_divergence(tmp_path, capsys):
    cfg = parse_config(CHAIN + "alpha0 = 1e308\ndecay = 1.0\n")
    assert run(cfg, out=tmp_path / "x.csv") == 1
    assert "error" in capsys.readouterr().err


def test_fedpg_config(tmp_path):
    cfg = parse_config(CHAIN + "algorithm = fedpg\n")
    assert run(cfg, out=tmp_path / "f.csv") == 0
    with pytest.raises(ParseError):
        parse_config("algorithm = fedpg\nschedule = theory\n")


def test_compare_report_threshold_and_medians(tmp_path):
    runs = {
        "a_seed0.csv": [rec(r, float(r), 100 * r) for r in range(1, 11)],
        "a_seed1.csv": [rec(r, 0.0, 100 * r) for r in range(1, 11)],
        "b_seed0.csv": [rec(r, 2.0 * r, 100 * r) for r in range(1, 11)],
        "b_seed1.csv": [rec(r, 3.0 * r, 100 * r) for r in range(1, 11)],
    }
    rep = compare_report(list(runs), 7.0, runs=runs)
    by = {r.path: r for r in rep.runs}
    assert by["a_seed0.csv"].rounds_to_threshold == 7 and by["a_seed0.csv"].interactions_to_threshold == 700
    assert not by["a_seed1.csv"].reached and by["a_seed1.csv"].rounds_to_threshold is None
    assert rep.groups["a"]["median_rounds"] == 7 and rep.groups["a"]["reached"] == 1
    assert rep.groups["b"]["median_rounds"] == 3.5
    assert rep.groups["b"]["speedup"] == pytest.approx(700 / 350)
    assert "a_seed1.csv" in rep.format()
    with pytest.raises(ValueError):
        compare_report(["only.csv"], 1.0)


def test_cli_run_and_report(tmp_path, capsys):
    conf = tmp_path / "c.txt"
    conf.write_text(CHAIN)
    assert cli.main(["run", str(conf), "--seed", "1", "--out", str(tmp_path / "s1.csv"), "-N", "1"]) == 0
    assert cli.main(["run", str(conf), "--seed", "2", "--out", str(tmp_path / "s2.csv"), "--agents", "3", "--local-steps", "1", "--batch", "2"]) == 0
    capsys.readouterr()
    assert cli.main(["report", str(tmp_path / "s1.csv"), str(tmp_path / "s2.csv"), "--threshold", "-100"]) == 0
    out = capsys.readouterr().out
    assert "s1" in out and "s2" in out
    bad = tmp_path / "bad.txt"
    bad.write_text("oops = 1\n")
    assert cli.main(["run", str(bad)]) == 2


def test_module_entry_point(tmp_path):
    conf = tmp_path / "c.txt"
    conf.write_text(CHAIN)
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "mfpo", "run", str(conf), "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()


def test_replace_revalidates():
    cfg = RunConfig()
    with pytest.raises(ValueError):
        cfg.replace(K=7)
    assert cfg.replace(seed=None).seed == 0
