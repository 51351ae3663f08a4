import csv
import io
import math
import shutil
import subprocess
import sys

import pytest

from opporelay import cli
from opporelay.genie import GenieBudgetExceeded

FIG2_COLUMNS = ["m", "r1_all_mean", "r1_all_se", "r1_distinct_mean", "r1_distinct_se",
                "lb_fixed_s", "lb_opt_s", "s_opt"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def table(text):
    return list(csv.DictReader(io.StringIO("\n".join(body(text)))))


def comments(text):
    return [ln[2:] for ln in text.splitlines() if ln.startswith("# ")]


class TestFig2:
    def test_header_and_single_row(self, capsys):
        code, out, _ = run(capsys, "fig2", "--m-range", "1:1", "--trials", "50")
        assert code == 0
        lines = body(out)
        assert lines[0].split(",") == FIG2_COLUMNS
        assert len(lines) == 2

    def test_orderings(self, capsys, tmp_path):
        path = tmp_path / "fig2.csv"
        code, _, _ = run(capsys, "fig2", "--trials", "500", "--m-range", "2:10", "--out", str(path))
        assert code == 0
        for row in table(path.read_text()):
            se = float(row["r1_distinct_se"]) + 1e-12
            assert float(row["r1_all_mean"]) >= float(row["r1_distinct_mean"])
            assert float(row["r1_distinct_mean"]) >= float(row["lb_opt_s"]) - 3 * se
            assert float(row["lb_opt_s"]) >= float(row["lb_fixed_s"])

    def test_comment_header(self, capsys):
        _, out, _ = run(capsys, "fig2", "--m-range", "1:2", "--trials", "10", "--seed", "77")
        meta = comments(out)
        assert meta[0] == "opporelay fig2"
        assert any(c.startswith("build: ") for c in meta)
        assert "seed: 77" in meta
        cfg = next(c for c in meta if c.startswith("config: "))
        assert "n=1200" in cfg and "rho_db=10.0" in cfg and "trials=10" in cfg and "m_range=1:2" in cfg

    def test_full_precision(self, capsys):
        _, out, _ = run(capsys, "fig2", "--m-range", "4:4", "--trials", "20")
        (row,) = table(out)
        assert float(repr(float(row["lb_fixed_s"]))) == float(row["lb_fixed_s"])
        assert len(row["lb_fixed_s"].replace(".", "").lstrip("0")) >= 15


class TestOtherFigures:
    def test_fig3_half_r1(self, capsys):
        code, out, _ = run(capsys, "fig3", "--trials", "400")
        assert code == 0
        rows = table(out)
        assert [int(r["m"]) for r in rows] == list(range(1, 13))
        for r in rows:
            assert abs(float(r["R"]) - 0.5 * float(r["R1"])) <= float(r["R_se"]) + 1e-12
            assert r["binding"] == "phase1" or float(r["R1"]) == float(r["R2"])

    def test_fig4_bracketed(self, capsys):
        code, out, _ = run(capsys, "fig4", "--trials", "400")
        assert code == 0
        rows = table(out)
        assert [int(r["n"]) for r in rows] == [100, 300, 1000, 3000]
        for r in rows:
            n = int(r["n"])
            assert float(r["lower"]) == pytest.approx(0.25 * math.log(n))
            assert float(r["genie_upper"]) == pytest.approx(math.log(n) / (4 * math.log(2)) + 1)
            assert float(r["lower"]) <= float(r["system"]) <= float(r["genie_upper"])

    def test_fig5_columns(self, capsys):
        code, out, _ = run(capsys, "fig5", "--trials", "200", "--n-grid", "100,1000")
        rows = table(out)
        assert code == 0 and list(rows[0]) == ["n", "optimal_m", "reference"]
        for r in rows:
            assert abs(int(r["optimal_m"]) - float(r["reference"])) <= 2

    def test_fig6_four_blocks(self, capsys):
        code, out, _ = run(capsys, "fig6", "--trials", "5000", "--bins", "10")
        assert code == 0
        panels = [c for c in comments(out) if c.startswith("panel ")]
        assert [p.split()[1] for p in panels] == ["n=10", "n=20", "n=40", "n=100"]
        rows = table(out)
        assert len(rows) == 40
        assert {int(r["n"]) for r in rows} == {10, 20, 40, 100}

    def test_fig6_chi_square_panel(self, capsys):
        code, out, _ = run(capsys, "fig6", "--m", "6", "--n", "40", "--trials", "2000", "--bins", "5")
        assert code == 0
        assert "chi-square with 10 degrees of freedom" in out
        assert len(table(out)) == 5

    def test_fig6_needs_interferer(self, capsys):
        code, _, err = run(capsys, "fig6", "--m", "1")
        assert code == 2 and "m:" in err


class TestAnalytic:
    def test_reference_values(self, capsys):
        code, out, _ = run(capsys, "analytic", "--n-grid", "1200,100000000", "--m-range", "1:6")
        assert code == 0
        rows = {(int(r["n"]), int(r["m"])): r for r in table(out)}
        assert float(rows[1200, 6]["r2_exact"]) == pytest.approx(6.0, abs=1e-12)
        assert abs(float(rows[10**8, 6]["tw_required"]) - 53.7) <= 0.1
        assert float(rows[1200, 1]["chi2_factor_fixed"]) == 1.0
        assert int(rows[1200, 6]["phase1_bits"]) == 66
        assert float(rows[1200, 6]["tw_radio_example"]) == pytest.approx(5e4)
        assert rows[10**8, 6]["overhead_negligible"] == "1"

    def test_domain_error_names_parameter(self, capsys):
        code, _, err = run(capsys, "analytic", "--n", "10", "--m", "2")
        assert code == 2
        assert "n=10" in err


class TestGenie:
    def test_rows_and_bounds(self, capsys):
        code, out, _ = run(capsys, "genie", "--n-grid", "8,12", "--m-range", "2:3", "--trials", "1000")
        assert code == 0
        rows = table(out)
        assert list(rows[0])[:8] == ["n", "m", "prob_full", "prob_full_se", "prob_grouped",
                                     "prob_grouped_se", "markov_bound", "status"]
        for r in rows:
            assert r["status"] == "ok"
            full, se = float(r["prob_full"]), float(r["prob_full_se"])
            assert full <= float(r["markov_bound"]) + 3 * se
            sig = math.hypot(se, float(r["prob_grouped_se"]))
            assert full >= float(r["prob_grouped"]) - 3 * sig

    def test_heavy_noise(self, capsys):
        code, out, _ = run(capsys, "genie", "--n", "8", "--m", "6", "--rho-db", "-20", "--trials", "300")
        (row,) = table(out)
        assert code == 0 and float(row["prob_full"]) == 0.0

    def test_budget_rows_skipped(self, capsys):
        code, out, _ = run(capsys, "genie", "--n-grid", "8,16", "--m-range", "4:4",
                           "--trials", "20", "--budget", "2000")
        assert code == 0
        rows = table(out)
        assert rows[0]["status"] == "ok"
        assert rows[1]["status"].startswith("skipped") and "43680" in rows[1]["status"]
        assert rows[1]["prob_full"] == ""


class TestConfig:
    def test_flags_override_file(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('n = 300\ntrials = 40\nm_range = "1:3"\nseed = 5\n')
        _, out, _ = run(capsys, "fig3", "--config", str(cfg), "--seed", "9")
        meta = " ".join(comments(out))
        assert "n=300" in meta and "trials=40" in meta and "seed: 9" in meta
        assert len(table(out)) == 3

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("n = 300\nbogus = 1\n")
        code, _, err = run(capsys, "fig3", "--config", str(cfg))
        assert code == 2 and "c.toml:2" in err and "bogus" in err

    def test_syntax_error(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("n = = 3\n")
        code, _, err = run(capsys, "fig3", "--config", str(cfg))
        assert code == 2 and "line 1" in err

    def test_nested_table_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("[sweep]\nn = 3\n")
        code, _, err = run(capsys, "fig3", "--config", str(cfg))
        assert code == 2 and "flat" in err

    @pytest.mark.parametrize("argv, key", [
        (["--trials", "0"], "trials"),
        (["--m-range", "5:2"], "m_range"),
        (["--m-range", "x"], "m_range"),
        (["--n-grid", "300,100"], "n_grid"),
        (["--epsilon", "1.5"], "epsilon"),
        (["--out", "/nonexistent/dir/f.csv"], "out"),
    ])
    def test_validation_errors(self, capsys, argv, key):
        code, _, err = run(capsys, "fig3", *argv)
        assert code == 2 and key in err

    def test_budget_exit_code(self, capsys, monkeypatch):
        def boom(cfg, w):
            raise GenieBudgetExceeded("too big", 10**9)

        monkeypatch.setitem(cli.HANDLERS, "fig5", boom)
        code, _, err = run(capsys, "fig5")
        assert code == 3 and "budget" in err


class TestReproducibility:
    def test_rerun_from_embedded_config(self, capsys, tmp_path):
        _, first, _ = run(capsys, "fig3", "--n", "150", "--m-range", "2:5", "--trials", "60", "--seed", "31")
        echo = next(c for c in comments(first) if c.startswith("config: "))[len("config: "):]
        cfg = tmp_path / "again.toml"
        cfg.write_text("".join(f'{k} = "{v}"\n' for k, v in (p.split("=", 1) for p in echo.split())
                               if v != "None"))
        _, second, _ = run(capsys, "fig3", "--config", str(cfg))
        assert second == first

    def test_thread_count_does_not_change_bytes(self, capsys, monkeypatch):
        outs = []
        for threads in ("1", "4"):
            monkeypatch.setenv("OPPORELAY_THREADS", threads)
            outs.append(run(capsys, "fig3", "--n", "90", "--trials", "80")[1])
        assert outs[0] == outs[1]


@pytest.mark.skipif(shutil.which("opporelay") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["opporelay", "analytic"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("# opporelay analytic")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "opporelay.cli", "fig2", "--bogus"], capture_output=True, text=True)
    assert res.returncode == 2
