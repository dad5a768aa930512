"""Tests for cascadelab.cli — argument parsing, outputs and exit statuses."""

import json

import pytest

from cascadelab import cli
from cascadelab import log as _log


@pytest.fixture(autouse=True)
def _isolated(tmp_path, monkeypatch):
    # No user or project config leaks into the runs.
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))
    monkeypatch.delenv("CASCADELAB_VERBOSE", raising=False)
    monkeypatch.setenv("CASCADELAB_THREADS", "2")


def _run(monkeypatch, capsys, *argv):
    monkeypatch.setattr("sys.argv", ["cascadelab", *argv])
    cli.main()
    return capsys.readouterr()


def _run_failing(monkeypatch, capsys, *argv):
    monkeypatch.setattr("sys.argv", ["cascadelab", *argv])
    with pytest.raises(SystemExit) as exc:
        cli.main()
    return exc.value.code, capsys.readouterr()


# -- classify -----------------------------------------------------------------


class TestClassify:

    def test_identity(self, capsys, monkeypatch):
        doc = json.loads(_run(monkeypatch, capsys, "classify", "--spec", "identity").out)
        assert doc["regime"] == "ConvergentLp"
        assert doc["beta"] == 1.0
        assert doc["p0"] == float("inf")
        assert len(doc["phi_table"]) == 33

    def test_spec_by_path(self, capsys, monkeypatch):
        path = cli.SPEC_DIR / "clt.json"
        doc = json.loads(_run(monkeypatch, capsys, "classify", "--spec", str(path)).out)
        assert doc["regime"] == "TightCLT"
        assert doc["sigma"] == pytest.approx(3 ** 0.5)

    def test_missing_spec_flag(self, monkeypatch):
        monkeypatch.setattr("sys.argv", ["cascadelab", "classify"])
        with pytest.raises(SystemExit):
            cli.main()


# -- simulate -----------------------------------------------------------------


class TestSimulate:

    def test_levy_c_path(self, capsys, monkeypatch):
        out = _run(monkeypatch, capsys, "simulate", "--spec", "levy-c",
                   "--depth", "12").out
        lines = out.splitlines()
        assert lines[0] == "t,re,im"
        assert len(lines) == 1 + 2 ** 12 + 1
        assert lines[1] == "0,0,0"
        t, re, im = (float(x) for x in lines[-1].split(","))
        assert (t, re, im) == pytest.approx((1.0, 1.0, 0.0))

    def test_level_flag(self, capsys, monkeypatch):
        out = _run(monkeypatch, capsys, "simulate", "--spec", "identity",
                   "--depth", "6", "--level", "2").out
        assert out.splitlines()[1:] == ["0,0,0", "0.25,0.25,0", "0.5,0.5,0",
                                        "0.75,0.75,0", "1,1,0"]

    def test_repeat_runs_are_byte_identical(self, tmp_path, capsys, monkeypatch):
        for name in ("a.csv", "b.csv"):
            _run(monkeypatch, capsys, "simulate", "--spec", "sign", "--depth", "8",
                 "--seed", "7", "--out", str(tmp_path / name))
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_config_supplies_depth(self, tmp_path, capsys, monkeypatch):
        (tmp_path / "cascadelab.toml").write_text("[simulate]\ndepth = 3\n")
        out = _run(monkeypatch, capsys, "simulate", "--spec", "identity").out
        assert len(out.splitlines()) == 1 + 2 ** 3 + 1

    def test_flag_beats_config(self, tmp_path, capsys, monkeypatch):
        (tmp_path / "cascadelab.toml").write_text("[simulate]\ndepth = 3\n")
        out = _run(monkeypatch, capsys, "simulate", "--spec", "identity",
                   "--depth", "2").out
        assert len(out.splitlines()) == 1 + 2 ** 2 + 1


# -- ensemble / clt -------------------------------------------------------------


class TestEnsemble:

    def test_zn_column(self, capsys, monkeypatch):
        out = _run(monkeypatch, capsys, "ensemble", "--spec", "sign", "--depth", "4",
                   "--count", "20", "--seed", "1").out
        lines = out.splitlines()
        assert lines[0] == "value"
        assert len(lines) == 21

    def test_same_output_for_any_thread_count(self, capsys, monkeypatch):
        args = ("ensemble", "--spec", "clt", "--depth", "5", "--count", "30")
        one = _run(monkeypatch, capsys, *args, "--threads", "1").out
        four = _run(monkeypatch, capsys, *args, "--threads", "4").out
        assert one == four

    def test_wrong_regime_exit_3(self, capsys, monkeypatch):
        code, captured = _run_failing(monkeypatch, capsys, "ensemble", "--spec",
                                      "convergent", "--depth", "4", "--count", "10")
        assert code == 3
        err = json.loads(captured.err.strip().splitlines()[-1])
        assert err["error"] == "WrongRegime"
        assert err["exit_code"] == 3

    def test_force_runs_anyway(self, capsys, monkeypatch):
        out = _run(monkeypatch, capsys, "ensemble", "--spec", "degenerate", "--depth",
                   "3", "--count", "5", "--force").out
        assert len(out.splitlines()) == 6


class TestClt:

    def test_report_and_dump(self, tmp_path, capsys, monkeypatch):
        dump = tmp_path / "z.csv"
        out = _run(monkeypatch, capsys, "clt", "--spec", "sign", "--depth", "4",
                   "--count", "50", "--dump", str(dump)).out
        doc = json.loads(out)
        assert 0.0 <= doc["ks_statistic"] <= 1.0
        assert len(doc["moments"]) == 4
        assert len(dump.read_text().splitlines()) == 51

    def test_residual_kind(self, capsys, monkeypatch):
        out = _run(monkeypatch, capsys, "clt", "--spec", "convergent", "--kind", "rn",
                   "--depth", "2", "--tail", "3", "--count", "30").out
        doc = json.loads(out)
        assert doc["ks_statistic"] is None
        assert any(n.startswith("truncation") for n in doc["notes"])


# -- moments / tau / timechange ---------------------------------------------------


class TestMoments:

    def test_clt_fourth_moment(self, capsys, monkeypatch):
        doc = json.loads(_run(monkeypatch, capsys, "moments", "--spec", "clt",
                              "--order", "4").out)
        entry = next(e for e in doc["entries"]
                     if e["method"] == "eq45" and e["q"] == 4)
        assert entry["n"] == "limit"
        assert entry["value"] == pytest.approx(6.521739, abs=1e-6)

    def test_brute_flag(self, capsys, monkeypatch):
        doc = json.loads(_run(monkeypatch, capsys, "moments", "--spec", "convergent",
                              "--order", "2", "--depth", "2", "--brute").out)
        brute = [e for e in doc["entries"] if e["method"] == "brute_force"]
        assert [e["q"] for e in brute] == [1, 2]


class TestTau:

    def test_identity(self, capsys, monkeypatch):
        doc = json.loads(_run(monkeypatch, capsys, "tau", "--spec", "identity",
                              "--depth", "10").out)
        assert doc["q"] == [1.0, 2.0, 4.0]
        assert doc["level_lo"] == 0 and doc["level_hi"] == 2
        assert doc["tau_hat"] == pytest.approx([0.0, 1.0, 3.0], abs=1e-9)

    def test_window_follows_sample_margin(self, capsys, monkeypatch):
        doc = json.loads(_run(monkeypatch, capsys, "tau", "--spec", "levy-c",
                              "--depth", "16").out)
        assert (doc["level_lo"], doc["level_hi"]) == (0, 8)
        assert doc["tau_hat"] == pytest.approx([-0.5, 0.0, 1.0], abs=0.1)

    def test_normalized(self, capsys, monkeypatch):
        doc = json.loads(_run(monkeypatch, capsys, "tau", "--spec", "sign", "--depth", "12",
                              "--normalized", "--level-hi", "11").out)
        assert (doc["level_lo"], doc["level_hi"]) == (3, 11)
        assert len(doc["tau_hat"]) == 3

    def test_bad_q_list(self, capsys, monkeypatch):
        code, _ = _run_failing(monkeypatch, capsys, "tau", "--spec", "identity",
                               "--depth", "8", "--q", "1,two")
        assert code == 2


class TestTimechange:

    def test_levy_c_with_report(self, tmp_path, capsys, monkeypatch):
        report = tmp_path / "holder.json"
        out = _run(monkeypatch, capsys, "timechange", "--spec", "levy-c",
                   "--depth", "10", "--report", str(report)).out
        lines = out.splitlines()
        assert lines[0] == "g,re,im"
        assert len(lines) == 1 + 2 ** 10 + 1
        doc = json.loads(report.read_text())
        assert doc["beta"] == pytest.approx(2.0, abs=1e-9)
        assert doc["inverse_beta"] == pytest.approx(0.5, abs=1e-9)
        assert doc["exponent"] == pytest.approx(0.5, abs=0.1)

    def test_no_root_exit_3(self, capsys, monkeypatch):
        code, captured = _run_failing(monkeypatch, capsys, "timechange", "--spec",
                                      "clt", "--depth", "4")
        assert code == 3
        assert "NonFinitePhi" in captured.err


# -- errors / specs ----------------------------------------------------------------


class TestErrors:

    def test_unknown_spec_exit_2(self, capsys, monkeypatch):
        code, captured = _run_failing(monkeypatch, capsys, "classify", "--spec", "nosuch")
        assert code == 2
        err = json.loads(captured.err.strip().splitlines()[-1])
        assert err == {"error": "BadSpecFile", "message": "Spec file not found: nosuch",
                       "exit_code": 2}

    def test_invalid_spec_file_exit_2(self, tmp_path, capsys, monkeypatch):
        bad = tmp_path / "bad.json"
        bad.write_text('{"b": 2, "weights": {"kind": "deterministic", "values": [0.5, 0.6]}}')
        code, captured = _run_failing(monkeypatch, capsys, "classify", "--spec", str(bad))
        assert code == 2
        assert "MeanNotOne" in captured.err

    def test_depth_guard_exit_4(self, capsys, monkeypatch):
        code, captured = _run_failing(monkeypatch, capsys, "simulate", "--spec",
                                      "identity", "--depth", "30")
        assert code == 4
        assert "DepthTooLarge" in captured.err

    def test_depth_zero_exit_2(self, capsys, monkeypatch):
        code, _ = _run_failing(monkeypatch, capsys, "simulate", "--spec", "identity",
                               "--depth", "0")
        assert code == 2

    def test_errors_shown_when_quiet(self, capsys, monkeypatch):
        monkeypatch.setenv("CASCADELAB_VERBOSE", "0")
        code, captured = _run_failing(monkeypatch, capsys, "classify", "--spec", "nosuch")
        assert code == 2
        assert "BadSpecFile" in captured.err
        _log.configure(verbose=1)


class TestSpecs:

    def test_lists_bundled_specs(self, capsys, monkeypatch):
        out = _run(monkeypatch, capsys, "specs").out
        names = [line.split()[0] for line in out.splitlines()]
        assert "levy-c" in names
        assert "clt" in names

    def test_invalid_file_is_marked(self, tmp_path, capsys, monkeypatch):
        d = tmp_path / "specs"
        d.mkdir()
        (d / "broken.json").write_text("{")
        out = _run(monkeypatch, capsys, "specs", "--dir", str(d)).out
        assert "broken" in out and "(invalid:" in out

    def test_missing_dir_exit_2(self, tmp_path, capsys, monkeypatch):
        code, _ = _run_failing(monkeypatch, capsys, "specs", "--dir",
                               str(tmp_path / "none"))
        assert code == 2
