import json
import math

import pytest

from asymlin import ConfigError, proptest
from asymlin.cli import main
from asymlin.config import parse_config
from asymlin.report import SchemaError, dumps, load_report

SMALL_1D = """
[domain]
dim = 1
lengths = pi
n_interior = 127

[nonlinearity]
family = smooth_saturation
eta = {eta}

[sampling]
seed = 3
random_starts = 2
tau_samples = 2
proptest_trials = 50
"""


def _cfg(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(tmp_path, cmd, text, *extra, out="out"):
    cfg = _cfg(tmp_path, text)
    code = main([cmd, "--config", cfg, "--out", str(tmp_path / out), "--quiet", *extra])
    return code, tmp_path / out


def _strip_wall_time(text):
    return "\n".join(line for line in text.splitlines() if '"wall_time_s"' not in line)


def test_parse_defaults_and_pi():
    cfg = parse_config("[domain]\ndim = 2\nlengths = pi, 2*pi\nn_interior = 7\n"
                       "[nonlinearity]\neta = 3 + x1\n")
    assert cfg.domain.lengths == (math.pi, 2 * math.pi)
    assert cfg.domain.n_interior == (7, 7)
    assert cfg.nonlinearity.eta == "3 + x1"
    assert cfg.solver.tol == 1e-8


@pytest.mark.parametrize("text", [
    "[nonlinearity]\n",
    "[domain]\ndim = 4\n[nonlinearity]\n",
    "[domain]\nlengths = -1\n[nonlinearity]\n",
    "[domain]\n[nonlinearity]\nfamily = cubic\n",
    "[domain]\n[nonlinearity]\neta = import os\n",
    "[domain]\n[nonlinearity]\n[solver]\ntol = 0\n",
    "[domain]\n[nonlinearity]\n[solver]\ntolerance = 1e-8\n",
    "[domain]\n[nonlinearity]\n[sampling]\nseed = 18446744073709551616\n",
    "[domain]\n[nonlinearity]\n[extra]\n",
    "no sections at all",
])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_digest_ignores_output_location():
    a = parse_config("[domain]\n[nonlinearity]\n[output]\ndir = a\n")
    b = parse_config("[domain]\n[nonlinearity]\n[output]\ndir = b\n")
    c = parse_config("[domain]\n[nonlinearity]\neta = 3\n")
    assert a.digest() == b.digest() != c.digest()


def test_report_encoding_roundtrip(tmp_path):
    body = {"schema_version": "1.0", "x": 0.1, "n": 3, "inf": math.inf, "two": 2.0,
            "list": [1.0, 2.5], "nested": {"flag": True, "none": None}}
    text = dumps(body)
    assert '"x": 0.10000000000000001' in text
    assert '"two": 2.0' in text
    (tmp_path / "r.json").write_text(text)
    back = load_report(tmp_path / "r.json")
    assert back["inf"] == math.inf and back["x"] == 0.1 and back["nested"]["flag"] is True


def test_report_rejects_unknown_major(tmp_path):
    (tmp_path / "r.json").write_text('{"schema_version": "2.0"}')
    with pytest.raises(SchemaError):
        load_report(tmp_path / "r.json")


def test_solve_report_and_csv(tmp_path):
    code, out = _run(tmp_path, "solve", SMALL_1D.format(eta=2))
    assert code == 0
    rep = load_report(out / "report.json")
    assert list(rep)[:6] == ["schema_version", "subcommand", "package_version",
                             "config_digest", "seed", "config"]
    assert list(rep)[-1] == "wall_time_s"
    s = rep["results"]["solve"]
    assert s["residual"] <= 1e-8 and s["sign_verdict"] in ("positive", "negative")
    assert rep["results"]["f1"]["status"] == "pass"
    lines = (out / "solution.csv").read_text().splitlines()
    assert lines[0] == "x,value" and len(lines) == 128


def test_solve_deterministic(tmp_path):
    text = SMALL_1D.format(eta=2)
    _run(tmp_path, "solve", text, out="a")
    _run(tmp_path, "solve", text, out="b")
    a = (tmp_path / "a" / "report.json").read_text()
    b = (tmp_path / "b" / "report.json").read_text()
    assert _strip_wall_time(a) == _strip_wall_time(b)


def test_seed_flag_overrides(tmp_path):
    _, out = _run(tmp_path, "solve", SMALL_1D.format(eta=2), "--seed", "99")
    assert load_report(out / "report.json")["seed"] == 99


def test_solve_f2_failure_exit_1(tmp_path):
    code, out = _run(tmp_path, "solve", SMALL_1D.format(eta=0.5))
    assert code == 1
    assert load_report(out / "report.json")["results"]["f2"]["verdict"] == "fails"


def test_solve_max_iter_exit_2(tmp_path):
    text = SMALL_1D.format(eta=2) + "[solver]\nmax_iter = 1\npolish = false\n"
    code, out = _run(tmp_path, "solve", text)
    assert code == 2
    rep = load_report(out / "report.json")
    assert rep["results"]["solve"]["converged"] is False


def test_check_exit_codes(tmp_path):
    assert _run(tmp_path, "check", SMALL_1D.format(eta=2), out="a")[0] == 0
    assert _run(tmp_path, "check", SMALL_1D.format(eta=0.5), out="b")[0] == 1
    finite = SMALL_1D.format(eta=2).replace("smooth_saturation", "strong_resonance") \
        .replace("eta = 2", "eta = 2\nc = 2")
    code, out = _run(tmp_path, "check", finite, out="c")
    assert code == 3
    cond = load_report(out / "report.json")["results"]["conditions"]
    assert cond["verdict_beta"] == "not-applicable"


def test_multi_threads_match_serial(tmp_path, monkeypatch):
    text = SMALL_1D.format(eta=5)
    _run(tmp_path, "multi", text, out="serial")
    monkeypatch.setenv("NEHARI_THREADS", "2")
    _run(tmp_path, "multi", text, out="threaded")
    a = (tmp_path / "serial" / "report.json").read_text()
    b = (tmp_path / "threaded" / "report.json").read_text()
    assert _strip_wall_time(a) == _strip_wall_time(b)
    rep = json.loads(a)["results"]["multi"]
    assert rep["distinct_count"] >= 2 and rep["target_s_m"] == 2
    assert (tmp_path / "serial" / "solution_1.csv").exists()


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("NEHARI_THREADS", "zero")
    assert _run(tmp_path, "multi", SMALL_1D.format(eta=5))[0] == 64


def test_spectrum_subcommand(tmp_path):
    code, out = _run(tmp_path, "spectrum", SMALL_1D.format(eta=2))
    assert code == 0
    lams = load_report(out / "report.json")["results"]["spectrum"]["lambdas"]
    assert lams[:3] == pytest.approx([0.5, 2.0, 4.5], rel=1e-3)
    assert (out / "eigen_1.csv").exists()


def test_usage_errors(tmp_path, capsys):
    assert main(["solve"]) == 64
    assert _run(tmp_path, "solve", "[domain]\ndim = 9\n[nonlinearity]\n")[0] == 64
    assert main(["solve", "--config", str(tmp_path / "missing.ini")]) == 64
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 64


def test_proptest_passes(tmp_path):
    code, out = _run(tmp_path, "proptest", SMALL_1D.format(eta=2))
    assert code == 0
    props = load_report(out / "report.json")["results"]["properties"]
    assert {p["name"] for p in props} == set(proptest.SUITES)
    assert all(p["trials"] == 50 for p in props)


def test_proptest_names_failing_property(tmp_path, monkeypatch, capsys):
    def broken(trials, seed):
        res = proptest.PropertyResult("level_bound", trials)
        res.failures = 1
        res.first_failure = {"trial": 0}
        return res

    monkeypatch.setitem(proptest._RUNNERS, "level_bound", broken)
    code = main(["proptest", "--out", str(tmp_path), "--quiet"])
    assert code == 1
    assert "property failed: level_bound" in capsys.readouterr().err
