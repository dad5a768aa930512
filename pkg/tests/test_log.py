"""Tests for cascadelab.log — stderr output with verbosity control."""

import json

from cascadelab import log as _log
from cascadelab.errors import WrongRegime


class TestLogging:

    def test_error_always_shown(self, capsys):
        _log.configure(verbose=0)
        _log.error("bad spec")
        assert "bad spec" in capsys.readouterr().err

    def test_warn_hidden_at_verbose_0(self, capsys):
        _log.configure(verbose=0)
        _log.warn("coarse cells")
        assert "coarse cells" not in capsys.readouterr().err

    def test_warn_shown_at_verbose_1(self, capsys):
        _log.configure(verbose=1)
        _log.warn("coarse cells")
        assert "coarse cells" in capsys.readouterr().err

    def test_progress_only_at_verbose_2(self, capsys):
        _log.configure(verbose=1)
        _log.progress("level 20 done")
        assert "level 20 done" not in capsys.readouterr().err
        _log.configure(verbose=2)
        _log.progress("level 20 done")
        assert "level 20 done" in capsys.readouterr().err

    def test_configure_reads_env(self, monkeypatch, capsys):
        monkeypatch.setenv("CASCADELAB_VERBOSE", "0")
        _log.configure()
        _log.warn("should be hidden")
        assert "should be hidden" not in capsys.readouterr().err

    def test_bad_env_falls_back_to_1(self, monkeypatch, capsys):
        monkeypatch.setenv("CASCADELAB_VERBOSE", "loud")
        _log.configure()
        _log.warn("shown")
        _log.progress("hidden")
        err = capsys.readouterr().err
        assert "shown" in err
        assert "hidden" not in err

    def test_configure_clamps_high_values(self, capsys):
        _log.configure(verbose=99)
        _log.progress("replica 10/100")
        assert "replica 10/100" in capsys.readouterr().err

    def test_messages_are_unprefixed(self, capsys):
        _log.configure(verbose=1)
        _log.warn("plain")
        assert capsys.readouterr().err == "plain\n"

    def test_failure_is_one_json_line(self, capsys):
        _log.configure(verbose=0)
        _log.failure(WrongRegime("no σ-normalization"), 3)
        err = capsys.readouterr().err
        assert err.count("\n") == 1
        assert json.loads(err) == {"error": "WrongRegime",
                                   "message": "no σ-normalization", "exit_code": 3}
        _log.configure(verbose=1)


class TestTimed:

    def test_reports_label_at_progress_level(self, capsys):
        _log.configure(verbose=2)
        with _log.timed("level 21: 2097152 nodes"):
            pass
        err = capsys.readouterr().err
        assert err.startswith("  level 21: 2097152 nodes in ")
        assert err.rstrip().endswith("s")
        _log.configure(verbose=1)

    def test_disabled_is_silent(self, capsys):
        _log.configure(verbose=2)
        with _log.timed("level 3: 8 nodes", enabled=False):
            pass
        assert capsys.readouterr().err == ""
        _log.configure(verbose=1)

    def test_hidden_at_default_verbosity(self, capsys):
        _log.configure(verbose=1)
        with _log.timed("level 21"):
            pass
        assert capsys.readouterr().err == ""
