import csv
import io
import json
import math
import subprocess
import sys

import pytest

from multireset.analytics import ModelParams
from multireset.cli import UsageError, main, parse, read_config


def rows(text):
    return list(csv.reader(io.StringIO(text)))


class TestParse:
    def test_defaults(self):
        c = parse(["figure"])
        assert c.params == ModelParams(r=0.03, delta=0.04, sigma=0.4, T=1.0, K=1.0)
        assert (c.rights, c.grid_steps, c.output_format) == (4, 400, "csv")

    def test_negative_volatility_names_flag(self):
        with pytest.raises(UsageError, match="--vol.*sigma"):
            parse(["price", "--sigma", "-0.1"])

    def test_flag_beats_config(self):
        assert parse(["price", "--rights", "2"], config_text="rights=3\n").rights == 2
        assert parse(["price"], config_text="rights=3\n").rights == 3

    def test_config_aliases_and_comments(self):
        c = parse(["price"], config_text="# model\nsigma = 0.25  # vol\nr=0.05\ngrid_steps=50\n")
        assert c.params.sigma == 0.25 and c.params.r == 0.05 and c.grid_steps == 50

    def test_unknown_config_key(self):
        with pytest.raises(UsageError, match="unknown key"):
            read_config("volatility=0.3\n")

    def test_config_bad_line(self):
        with pytest.raises(UsageError, match="line 2"):
            read_config("rights=2\nnonsense\n")

    def test_config_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("command=boundary\nrights=1\n")
        c = parse(["--config", str(path)])
        assert c.command == "boundary" and c.rights == 1

    def test_command_required(self):
        with pytest.raises(UsageError):
            parse(["--rights", "1"])

    @pytest.mark.parametrize(
        "args, flag",
        [
            (["price", "--rights", "-1"], "--rights"),
            (["price", "--grid-steps", "1"], "--grid-steps"),
            (["price", "--output", "xml"], "--output"),
            (["price", "--x-min", "0"], "--x-min"),
            (["price", "--maturity", "0"], "--maturity"),
            (["price", "--dividend", "-0.01"], "--dividend"),
        ],
    )
    def test_validation_names_flag(self, args, flag):
        with pytest.raises(UsageError, match=flag):
            parse(args)


class TestMain:
    def test_usage_error_exit_code(self, capsys):
        assert main(["price", "--sigma", "-0.1"]) == 2
        assert "sigma" in capsys.readouterr().err

    def test_unknown_flag_exit_code(self, capsys):
        assert main(["price", "--colour", "red"]) == 2

    def test_boundary_csv(self, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["boundary", "--rights", "2", "--grid-steps", "40", "--out-file", str(out)]) == 0
        text = out.read_bytes().decode()
        assert "\r" not in text
        table = rows(text)
        assert table[0] == ["t", "b_1", "b_2"]
        assert table[-1] == ["1", "1", "1"]
        assert len(table) == 42

    def test_figure_last_row_pins_strike(self, tmp_path, capsys):
        assert main(["figure", "--grid-steps", "100", "--out-file", str(tmp_path)]) == 0
        fig2 = rows((tmp_path / "figure2_boundaries.csv").read_text())
        assert fig2[0] == ["t", "b_1", "b_2", "b_3", "b_4"]
        assert [float(v) for v in fig2[-1]] == [1.0] * 5
        fig1 = rows((tmp_path / "figure1_prices.csv").read_text())
        assert fig1[0] == ["x", "V_e", "V_1", "V_2", "V_3", "V_4"]
        assert len(fig1) == 17
        assert [float(v) for v in fig1[6]][0] == pytest.approx(1.0)
        assert "figure1_prices.csv" in capsys.readouterr().out

    def test_verify_mc_without_rights(self, capsys):
        assert main(["verify-mc", "--rights", "0", "--paths", "50000", "--output", "json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pass"] is True and report["rights"] == 0

    def test_verify_lattice(self, capsys):
        assert main(["verify-lattice", "--rights", "1", "--output", "json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pass"] is True
        assert report["abs_diff"] <= report["tolerance"] == pytest.approx(5e-3)

    def test_verify_failure_exit_code(self, capsys):
        # two time steps miss the three-right lattice price by just over 5e-3
        assert main(["verify-lattice", "--rights", "3", "--grid-steps", "2"]) == 1
        rec = dict(zip(*rows(capsys.readouterr().out)))
        assert rec["pass"] == "false" and float(rec["abs_diff"]) > 5e-3

    def test_parity_record(self, capsys):
        assert main(["parity", "--rights", "1", "--grid-steps", "50", "--output", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["reset_put"] - doc["shout_call"] == pytest.approx(math.exp(-0.03) - math.exp(-0.04), abs=1e-15)
        assert doc["put_side"] == "requires reset_call input"
        assert main(["parity", "--rights", "1", "--grid-steps", "50", "--reset-call", "0.1"]) == 0
        table = rows(capsys.readouterr().out)
        rec = dict(zip(table[0], table[1]))
        assert float(rec["shout_put"]) == pytest.approx(0.1 + math.exp(-0.03) - math.exp(-0.04), abs=1e-15)

    def test_json_keys_sorted(self, capsys):
        main(["parity", "--rights", "1", "--grid-steps", "20", "--output", "json"])
        doc = capsys.readouterr().out
        keys = list(json.loads(doc).keys())
        assert keys == sorted(keys)

    def test_cache_reuse_gives_identical_bytes(self, tmp_path):
        cache = tmp_path / "ladder.json"
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["price", "--rights", "4", "--grid-steps", "60", "--cache", str(cache)]
        assert main(base + ["--out-file", str(first)]) == 0
        assert cache.exists()
        stamp = cache.stat().st_mtime_ns
        assert main(base + ["--out-file", str(second)]) == 0
        assert cache.stat().st_mtime_ns == stamp
        assert first.read_bytes() == second.read_bytes()
        # a smaller request is served from the same cache
        assert main(["price", "--rights", "2", "--grid-steps", "60", "--cache", str(cache), "--out-file", str(second)]) == 0
        assert cache.stat().st_mtime_ns == stamp

    def test_cache_invalidated_by_params(self, tmp_path):
        cache = tmp_path / "ladder.json"
        assert main(["boundary", "--rights", "1", "--grid-steps", "30", "--cache", str(cache), "--out-file", str(tmp_path / "x")]) == 0
        before = cache.read_text()
        assert main(["boundary", "--rights", "1", "--grid-steps", "30", "--vol", "0.3", "--cache", str(cache), "--out-file", str(tmp_path / "y")]) == 0
        assert json.loads(cache.read_text())["params"]["sigma"] == 0.3
        assert cache.read_text() != before


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "multireset", "price", "--vol", "-1"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "--vol" in proc.stderr
