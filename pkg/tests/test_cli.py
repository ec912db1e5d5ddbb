import json

import numpy as np
import pytest

from qmlab.cli import main
from qmlab.errors import ConfigInvalid
from qmlab.report import CheckRecord, VerificationReport, load_report, numeric_fields
from qmlab.suites import RunConfig, run_suite, task_rng


@pytest.fixture(autouse=True)
def _no_env(monkeypatch):
    monkeypatch.delenv("QMLAB_OUT", raising=False)


def test_ccr_suite_passes(tmp_path, capsys):
    assert main(["ccr", "--seed", "5", "--out", str(tmp_path)]) == 0
    rep = load_report(tmp_path / "report.json")
    assert rep.suite == "ccr" and rep.seed == 5 and rep.all_passed
    assert (tmp_path / "series" / "ccr_grid_states.csv").exists()
    out = capsys.readouterr().out
    assert "PASS  ccr.matrix_n12" in out and "checks passed" in out


def test_symmetry_report_shape(tmp_path):
    assert main(["symmetry", "--out", str(tmp_path), "-q"]) == 0
    d = json.loads((tmp_path / "report.json").read_text())
    assert d["schema_version"] == 1
    ids = [c["check_id"] for c in d["checks"]]
    assert ids == sorted(ids)
    for c in d["checks"]:
        assert set(c) == {"check_id", "anchor", "measured", "tolerance", "sense", "passed",
                          "runtime_s", "detail"}


def test_invalid_config_writes_nothing(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dt": 0.0}))
    out = tmp_path / "out"
    assert main(["dynamics", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert "ConfigInvalid" in capsys.readouterr().err


@pytest.mark.parametrize("payload", ['{"bogus": 1}', "[1, 2]", "not json", '{"seed": -1}'])
def test_bad_config_files(tmp_path, payload):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(payload)
    assert main(["symmetry", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("argv", [["nosuch"], [], ["ccr", "--seed", "abc"], ["ccr", "--seed", str(2**64)],
                                  ["hybrid-theta-sweep", "--theta-over-hbar", "1,x"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_env_overrides_out(tmp_path, monkeypatch):
    env_out = tmp_path / "env"
    monkeypatch.setenv("QMLAB_OUT", str(env_out))
    assert main(["symmetry", "--out", str(tmp_path / "flag"), "-q"]) == 0
    assert (env_out / "report.json").exists()
    assert not (tmp_path / "flag").exists()


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["symmetry", "--out", str(blocker / "sub")]) == 2


def test_failed_check_exits_one(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tolerances": {"symmetry.unitarity": 0.0}}))
    assert main(["symmetry", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == 1


def test_tolerance_scale_applies_to_upper_checks_only(tmp_path):
    rep = run_suite(RunConfig("continuity", tolerance_scale=10.0), tmp_path)
    by_id = {c.check_id: c for c in rep.checks}
    assert by_id["continuity.free_dt"].tolerance == pytest.approx(1e-5)
    assert by_id["continuity.broken_floor"].tolerance == 100.0


def test_diff_identical_and_regressed(tmp_path, capsys):
    assert main(["symmetry", "--out", str(tmp_path / "a"), "-q"]) == 0
    a = tmp_path / "a" / "report.json"
    assert main(["diff", str(a), str(a)]) == 0
    assert "0 regression(s)" in capsys.readouterr().out

    def rep(measured):
        return VerificationReport("x", 0, {}, [CheckRecord("r", "anchor", measured, 1e-6, "upper", True)])

    base, worse = tmp_path / "base.json", tmp_path / "worse.json"
    rep(1e-8).write(base)
    rep(3e-8).write(worse)
    assert main(["diff", str(base), str(worse)]) == 1
    assert "REGRESSION" in capsys.readouterr().out
    assert main(["diff", str(base), str(worse), "--factor", "5"]) == 0


def test_diff_schema_mismatch(tmp_path):
    good = tmp_path / "good.json"
    VerificationReport("x", 0, {}, []).write(good)
    bad = tmp_path / "bad.json"
    d = json.loads(good.read_text())
    d["schema_version"] = 2
    bad.write_text(json.dumps(d))
    assert main(["diff", str(good), str(bad)]) == 2
    assert main(["diff", str(good), str(tmp_path / "missing.json")]) == 2


def test_same_seed_is_deterministic(tmp_path):
    for tag in ("a", "b"):
        assert main(["ccr", "--seed", "42", "--out", str(tmp_path / tag), "-q"]) == 0
    a, b = (numeric_fields(load_report(tmp_path / t / "report.json")) for t in ("a", "b"))
    assert a == b
    sa = (tmp_path / "a" / "series" / "ccr_grid_states.csv").read_bytes()
    assert sa == (tmp_path / "b" / "series" / "ccr_grid_states.csv").read_bytes()


def test_task_streams_are_independent():
    a = task_rng(7, "ccr.grid_states").random(4)
    assert np.array_equal(a, task_rng(7, "ccr.grid_states").random(4))
    assert not np.array_equal(a, task_rng(7, "continuity.identities").random(4))
    assert not np.array_equal(a, task_rng(8, "ccr.grid_states").random(4))


def test_run_config_rejects_unknown_suite():
    with pytest.raises(ConfigInvalid):
        RunConfig("plots")
