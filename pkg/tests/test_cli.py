import csv
import json

import pytest

from sketchvar import cli
from sketchvar.svg import line_chart


def run(tmp_path, *argv):
    return cli.run([*argv, "--out", str(tmp_path / "out")])


def read_report(tmp_path):
    with open(tmp_path / "out" / "report.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_v2_point_toy(tmp_path, capsys):
    cfg = write_json(tmp_path, {"K": [[1]], "lambda": 1, "sigma": 1, "k_x": [1], "sketch": "identity"})
    assert run(tmp_path, "v2-point", "--config", cfg) == 0
    out = capsys.readouterr().out
    assert "V1=0.25" in out.splitlines() and "V2=0.25" in out.splitlines()


def test_v2_point_random_sketch(tmp_path):
    cfg = write_json(tmp_path, {"K": [[0.5, 0.1], [0.1, 0.4]], "k_x": [1, 0.5], "lambda": 0.1,
                                "sketch": {"distribution": "rademacher", "seed": 3, "m": 1}})
    assert run(tmp_path, "v2-point", "--config", cfg) == 0
    row = read_report(tmp_path)[0]
    assert float(row["V2"]) >= float(row["V1"])


def test_gap_sigma_single_sigma(tmp_path):
    assert run(tmp_path, "gap-sigma", "--n", "80", "--sigma-list", "1", "--seed", "0", "--grid-size", "20") == 0
    rows = read_report(tmp_path)
    assert len(rows) == 1 and float(rows[0]["ratio"]) == 1.0


def test_outputs_written(tmp_path):
    assert run(tmp_path, "gap-n", "--n-list", "40,60", "--seed", "0,1", "--grid-size", "20") == 0
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == ["chart.svg", "config.echo.json", "report.csv"]
    assert (out / "chart.svg").read_text().startswith("<svg")
    assert list(read_report(tmp_path)[0]) == ["n", "m", "sigma", "lam", "kernel", "seed", "sup_gap", "mean_gap",
                                              "grid_size", "exact_time", "sketched_time"]


def test_echo_reproduces_report_bit_exactly(tmp_path):
    assert cli.run(["gap-m", "--n", "120", "--c-list", "0.5,1.5", "--seed", "0,1", "--no-timing",
                    "--grid-size", "30", "--out", str(tmp_path / "a")]) == 0
    echo = str(tmp_path / "a" / "config.echo.json")
    assert cli.run(["gap-m", "--config", echo, "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_preset_expansion(tmp_path):
    cfg = cli.parse_config(["gap-n", "--preset", "fig1b", "--config", write_json(tmp_path, {})])
    for key, value in cli.PRESETS["fig1b"].items():
        if key != "subcommand":
            assert cfg[key] == value
    assert cfg["preset"] == "fig1b"


def test_flag_beats_file(tmp_path):
    cfg = write_json(tmp_path, {"n": 300, "n_list": [40], "grid_size": 10})
    assert run(tmp_path, "gap-sigma", "--config", cfg, "--n", "90", "--seed", "0") == 0
    echo = json.loads((tmp_path / "out" / "config.echo.json").read_text())
    assert echo["n"] == 90 and echo["grid_size"] == 10
    assert read_report(tmp_path)[0]["n"] == "90"


def test_file_beats_preset(tmp_path):
    cfg = cli.parse_config(["gap-n", "--preset", "fig1a", "--config", write_json(tmp_path, {"sigma": 2.5})])
    assert cfg["sigma"] == 2.5 and cfg["kernel"] == {"family": "sobolev_cubic"}


def test_malformed_numeric_names_key(tmp_path, capsys):
    cfg = write_json(tmp_path, {"grid_size": "many"})
    assert run(tmp_path, "gap-n", "--config", cfg) == 1
    assert "grid_size" in capsys.readouterr().err


def test_nested_key_path(tmp_path, capsys):
    cfg = write_json(tmp_path, {"kernel": {"family": "gaussian", "bandwidth": -1}})
    assert run(tmp_path, "gap-n", "--config", cfg) == 1
    assert "kernel/bandwidth" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [["gap-n", "--bogus"], ["frobnicate"], ["gap-n", "--n-list", "a,b"], ["gap-n", "--preset", "sim1"],
     ["gap-n", "--config", "/nonexistent.json"], ["v2-point"]],
)
def test_config_errors_exit_1(tmp_path, argv, capsys):
    assert run(tmp_path, *argv) == 1
    assert "configuration error" in capsys.readouterr().err


def test_invalid_json_exit_1(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    assert run(tmp_path, "gap-n", "--config", str(p)) == 1


def test_numerical_failure_exit_2(tmp_path, capsys):
    cfg = write_json(tmp_path, {"K": [[1, 0], [0, -3]], "k_x": [1, 1], "lambda": 1})
    assert run(tmp_path, "v2-point", "--config", cfg) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("SKETCHVAR_THREADS", "3")
    assert cli.parse_config(["gap-n"])["threads"] == 3
    assert cli.parse_config(["gap-n", "--threads", "2"])["threads"] == 2
    monkeypatch.setenv("SKETCHVAR_THREADS", "x")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(["gap-n"])


def test_active_learn_small(tmp_path):
    assert run(tmp_path, "active-learn", "--pool-size", "250", "--test-size", "50", "--iterations", "2",
               "--seed", "0", "--strategies", "rsKRR+V2,KRR+V1") == 0
    rows = read_report(tmp_path)
    assert len(rows) == 6 and {r["acquisition_mode"] for r in rows} == {"rsKRR+V2", "KRR+V1"}


def test_assumption_check(tmp_path, capsys):
    assert run(tmp_path, "assumption-check", "--kernel", "sobolev_cubic", "--n", "150", "--seed", "0,1") == 0
    assert "passed" in capsys.readouterr().out
    assert len(read_report(tmp_path)) == 2


def test_bench(tmp_path):
    assert run(tmp_path, "bench", "--n", "300", "--seed", "0") == 0
    assert float(read_report(tmp_path)[0]["speedup"]) > 0


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "f.txt"
    cli.atomic_write(str(target), "abc")
    assert target.read_text() == "abc" and [p.name for p in tmp_path.iterdir()] == ["f.txt"]


def test_svg_chart_handles_log_scale_and_nonpositive():
    svg = line_chart([("a", [1, 2, 3], [1e-3, 0.0, 1e-5], [1e-4, 0.0, 0.0])], title="t<1>", log_y=True)
    assert svg.count("<circle") == 2 and "t&lt;1&gt;" in svg
    assert "<svg" in line_chart([])


def test_fig1b_preset_gap_decreasing(tmp_path):
    assert run(tmp_path, "gap-n", "--preset", "fig1b") == 0
    by_n = {}
    for row in read_report(tmp_path):
        by_n.setdefault(int(row["n"]), []).append(float(row["sup_gap"]))
    means = [sum(v) / len(v) for _, v in sorted(by_n.items())]
    assert all(b < a for a, b in zip(means, means[1:])), means


def test_mixture_interpretation_recorded(tmp_path):
    assert run(tmp_path, "gap-n", "--n-list", "40", "--seed", "0", "--generator", "gaussian_mixture",
               "--grid-size", "10") == 0
    echo = json.loads((tmp_path / "out" / "config.echo.json").read_text())
    assert echo["notes"] == [cli.MIXTURE_NOTE]
    assert cli.run(["gap-n", "--config", str(tmp_path / "out" / "config.echo.json"),
                    "--out", str(tmp_path / "again")]) == 0
