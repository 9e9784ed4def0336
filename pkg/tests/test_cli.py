"""CLI tests: parsing, subcommand outputs, exit codes, config files."""

import json

import pytest

from alleletest.cli import CountsFileError, main, parse_counts_file, SCAN_COLUMNS

VALID_FILE = """\
# marker counts for the worked example
marker_id\tcase_m1\tcase_m2\tctrl_m1\tctrl_m2
rs1\t290\t1710\t184\t1816
# mid-table comment
rs2\t500\t1500\t510\t1490
rs3\t0\t2000\t0\t2000
rs4\t0\t2000\t5\t1995
"""


@pytest.fixture
def counts_file(tmp_path):
    path = tmp_path / "counts.tsv"
    path.write_text(VALID_FILE)
    return str(path)


class TestParseCountsFile:
    def test_valid_file(self, counts_file):
        rows = parse_counts_file(counts_file)
        assert [marker for marker, _ in rows] == ["rs1", "rs2", "rs3", "rs4"]
        assert rows[0][1].r1 == 290 and rows[0][1].s2 == 1816

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("rs1\t290\t1710\t184\t1816\n")
        with pytest.raises(CountsFileError, match="header"):
            parse_counts_file(str(path))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("")
        with pytest.raises(CountsFileError, match="empty"):
            parse_counts_file(str(path))

    def test_header_only(self, tmp_path):
        path = tmp_path / "headeronly.tsv"
        path.write_text("marker_id\tcase_m1\tcase_m2\tctrl_m1\tctrl_m2\n")
        with pytest.raises(CountsFileError, match="no marker rows"):
            parse_counts_file(str(path))

    def test_wrong_field_count_names_line(self, tmp_path):
        path = tmp_path / "short.tsv"
        path.write_text(
            "marker_id\tcase_m1\tcase_m2\tctrl_m1\tctrl_m2\nrs1\t290\t1710\t184\n"
        )
        with pytest.raises(CountsFileError, match="line 2"):
            parse_counts_file(str(path))

    def test_duplicate_marker(self, tmp_path):
        path = tmp_path / "dup.tsv"
        path.write_text(
            "marker_id\tcase_m1\tcase_m2\tctrl_m1\tctrl_m2\n"
            "rs1\t2\t2\t2\t2\nrs1\t4\t4\t4\t4\n"
        )
        with pytest.raises(CountsFileError, match="rs1"):
            parse_counts_file(str(path))

    def test_negative_count(self, tmp_path):
        path = tmp_path / "neg.tsv"
        path.write_text(
            "marker_id\tcase_m1\tcase_m2\tctrl_m1\tctrl_m2\nrs1\t-1\t5\t2\t2\n"
        )
        with pytest.raises(CountsFileError, match="line 2"):
            parse_counts_file(str(path))

    def test_odd_total(self, tmp_path):
        path = tmp_path / "odd.tsv"
        path.write_text(
            "marker_id\tcase_m1\tcase_m2\tctrl_m1\tctrl_m2\nrs1\t2\t3\t2\t2\n"
        )
        with pytest.raises(CountsFileError, match="even"):
            parse_counts_file(str(path))

    def test_non_integer(self, tmp_path):
        path = tmp_path / "float.tsv"
        path.write_text(
            "marker_id\tcase_m1\tcase_m2\tctrl_m1\tctrl_m2\nrs1\t2.5\t1.5\t2\t2\n"
        )
        with pytest.raises(CountsFileError, match="non-integer"):
            parse_counts_file(str(path))


class TestScanCommand:
    def test_row_count_and_columns(self, counts_file, capsys):
        code = main(["scan", "--counts", counts_file, "--pi-hat", "0.15"])
        captured = capsys.readouterr()
        assert code == 0
        lines = captured.out.strip().split("\n")
        assert lines[0].split("\t") == list(SCAN_COLUMNS)
        assert len(lines) == 1 + 4  # header + one row per marker
        assert "rank markers only locally" in captured.err

    def test_worked_example_row(self, counts_file, capsys):
        main(["scan", "--counts", counts_file, "--pi-hat", "0.15"])
        row = capsys.readouterr().out.strip().split("\n")[1].split("\t")
        record = dict(zip(SCAN_COLUMNS, row))
        assert record["marker_id"] == "rs1"
        assert float(record["t"]) == pytest.approx(-5.203197438693516, rel=1e-12)
        assert float(record["w"]) == pytest.approx(-5.587932511376181, rel=1e-12)
        assert float(record["q_hat"]) == pytest.approx(0.9311489407040255, rel=1e-12)
        assert float(record["u"]) == float(record["w"])  # q_hat < 1
        assert record["flags"] == "ok"
        assert record["w_abs_rank"] == "1"
        # full-precision output: printed text round-trips to the exact double
        from alleletest.stats import AlleleCounts, w_statistic

        assert float(record["w"]) == w_statistic(AlleleCounts(290, 1710, 184, 1816), 0.15)

    def test_monomorphic_and_degenerate_rows(self, counts_file, capsys):
        main(["scan", "--counts", counts_file, "--pi-hat", "0.15"])
        lines = capsys.readouterr().out.strip().split("\n")
        rs3 = dict(zip(SCAN_COLUMNS, lines[3].split("\t")))
        rs4 = dict(zip(SCAN_COLUMNS, lines[4].split("\t")))
        assert rs3["flags"] == "monomorphic"
        assert rs3["t"] == "" and rs3["p_t"] == "" and rs3["w_abs_rank"] == ""
        assert rs4["flags"] == "degenerate;undefined_ratio"
        assert rs4["p_t"] == "1" and rs4["t"] == ""

    def test_idempotent_output(self, counts_file, tmp_path):
        out1 = tmp_path / "a.tsv"
        out2 = tmp_path / "b.tsv"
        assert main(["scan", "--counts", counts_file, "--pi-hat", "0.15", "--out", str(out1)]) == 0
        assert main(["scan", "--counts", counts_file, "--pi-hat", "0.15", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_warn_note_can_be_silenced(self, counts_file, capsys):
        main(["scan", "--counts", counts_file, "--pi-hat", "0.15", "--no-warn-locality"])
        assert "locally" not in capsys.readouterr().err

    def test_missing_file_is_io_error(self, tmp_path, capsys):
        code = main(["scan", "--counts", str(tmp_path / "nope.tsv"), "--pi-hat", "0.15"])
        assert code == 2

    def test_malformed_file_is_validation_error(self, tmp_path, capsys):
        path = tmp_path / "bad.tsv"
        path.write_text("marker_id\tcase_m1\tcase_m2\tctrl_m1\tctrl_m2\nrs1\t1\t2\t3\n")
        code = main(["scan", "--counts", str(path), "--pi-hat", "0.15"])
        assert code == 1
        assert "line 2" in capsys.readouterr().err

    def test_missing_pi_hat_is_usage_error(self, counts_file, capsys):
        assert main(["scan", "--counts", counts_file]) == 1


class TestModelCommand:
    def test_reports_population_quantities(self, capsys):
        code = main(["model", "--p1", "0.10", "--pen", "0.60,0.35,0.10",
                     "--q1", "0.10", "--delta", "0.3"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["prevalence"] == pytest.approx(0.15, abs=1e-15)
        assert payload["q1_case"] == pytest.approx(0.145, rel=1e-12)
        assert payload["b"] == pytest.approx(-0.588235294117647, rel=1e-12)
        assert payload["delta_bounds"][0] < 0 < payload["delta_bounds"][1]
        assert sum(payload["haplotypes"].values()) == pytest.approx(1.0, abs=1e-12)

    def test_no_ld_gives_unit_ratio(self, capsys):
        main(["model", "--p1", "0.10", "--pen", "0.60,0.35,0.10", "--q1", "0.25"])
        payload = json.loads(capsys.readouterr().out)
        assert payload["q"] == pytest.approx(1.0, abs=1e-12)

    def test_infeasible_exit_code_and_bounds_in_message(self, capsys):
        code = main(["model", "--p1", "0.25", "--pen", "0.60,0.35,0.10",
                     "--q1", "0.05", "--delta", "-0.5"])
        assert code == 3
        err = capsys.readouterr().err
        assert "-0.132" in err  # admissible bound quoted

    def test_degenerate_prevalence_exit_code(self, capsys):
        code = main(["model", "--p1", "0.25", "--pen", "0,0,0", "--q1", "0.05"])
        assert code == 3

    def test_bad_pen_is_usage_error(self, capsys):
        assert main(["model", "--p1", "0.1", "--pen", "0.6,0.35", "--q1", "0.1"]) == 1


class TestPowerCommand:
    def test_explicit_values_csv(self, capsys):
        code = main(["power", "--p1", "0.05", "--pen", "0.60,0.35,0.10",
                     "--delta", "0.3", "--r", "1000", "--s", "1000",
                     "--alpha", "1e-8", "--axis", "q1", "--values", "0.05,0.15"])
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "axis,test,variant,power,feasible"
        assert len(lines) == 1 + 2 * 4  # two points, four tests each
        first = lines[1].split(",")
        assert first[1] == "T" and first[4] == "1"

    def test_infeasible_points_flagged(self, capsys):
        main(["power", "--p1", "0.05", "--pen", "0.60,0.35,0.10", "--delta", "0.3",
              "--r", "1000", "--s", "1000", "--alpha", "1e-8",
              "--axis", "q1", "--values", "0.5"])
        lines = capsys.readouterr().out.strip().split("\n")[1:]
        assert all(line.endswith(",0") for line in lines)
        assert all(line.split(",")[3] == "" for line in lines)

    def test_default_grid_covers_axis(self, capsys):
        code = main(["power", "--p1", "0.05", "--pen", "0.60,0.35,0.10",
                     "--delta", "0.3", "--r", "1000", "--s", "1000",
                     "--alpha", "1e-8", "--axis", "q1"])
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert len(lines) == 1 + 99 * 4

    def test_delta_weight_axis_checks_fixed_marker(self, capsys):
        code = main(["power", "--p1", "0.05", "--pen", "0.60,0.35,0.10",
                     "--q1", "0.5", "--delta", "0.3", "--r", "1000", "--s", "1000",
                     "--alpha", "1e-8", "--axis", "delta_weight"])
        assert code == 3

    def test_pi_hat_variants(self, capsys):
        main(["power", "--p1", "0.05", "--pen", "0.60,0.35,0.10", "--delta", "0.3",
              "--r", "1000", "--s", "1000", "--alpha", "1e-8", "--axis", "q1",
              "--values", "0.1", "--pi-hats", "0.075,0.125,0.2"])
        lines = capsys.readouterr().out.strip().split("\n")[1:]
        w_rows = [line for line in lines if line.split(",")[1] == "W"]
        variants = {row.split(",")[2] for row in w_rows}
        assert len(variants) == 3

    def test_sweep_spec(self, capsys):
        code = main(["power", "--p1", "0.05", "--pen", "0.60,0.35,0.10",
                     "--q1", "0.1", "--r", "1000", "--s", "1000", "--alpha", "1e-8",
                     "--axis", "delta", "--sweep", "0:0.3:4"])
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert len(lines) == 1 + 4 * 4


class TestSimulateCommand:
    BASE = ["simulate", "--p1", "0.10", "--pen", "0.60,0.35,0.10", "--q1", "0.10",
            "--r", "500", "--s", "500", "--pi-hat", "0.15", "--reps", "20000",
            "--seed", "7", "--alphas", "1e-2,1e-3"]

    def test_json_deterministic_modulo_wall_time(self, capsys):
        assert main(self.BASE) == 0
        first = json.loads(capsys.readouterr().out)
        assert main(self.BASE) == 0
        second = json.loads(capsys.readouterr().out)
        first.pop("wall_time_s")
        second.pop("wall_time_s")
        assert first == second

    def test_outputs_written(self, tmp_path, capsys):
        out_json = tmp_path / "r.json"
        out_tsv = tmp_path / "r.tsv"
        code = main(self.BASE + ["--out-json", str(out_json), "--out-tsv", str(out_tsv)])
        assert code == 0
        payload = json.loads(out_json.read_text())
        assert payload["replications"] == 20000
        header = out_tsv.read_text().split("\n")[0]
        assert header == "test\talpha\tfraction\tse\treplications"

    def test_delta_weights_expand_tests(self, capsys):
        assert main(self.BASE + ["--deltas", "0.3,0.4"]) == 0
        payload = json.loads(capsys.readouterr().out)
        tests = {(c["test"], c["delta_weight"]) for c in payload["cells"]}
        assert ("W_delta", 0.3) in tests and ("W_cor_delta", 0.4) in tests

    def test_zero_reps_rejected(self, capsys):
        code = main([*self.BASE[:-5], "--reps", "0", "--alphas", "1e-3"])
        assert code == 1

    def test_type1_with_ld_rejected(self, capsys):
        code = main(self.BASE + ["--delta", "0.3"])
        assert code == 1
        assert "delta=0" in capsys.readouterr().err

    def test_power_mode_with_ld(self, capsys):
        code = main(self.BASE + ["--delta", "0.3", "--power"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["kind"] == "power"
        w_cell = [c for c in payload["cells"] if c["test"] == "W" and c["alpha"] == 1e-3]
        assert w_cell[0]["fraction"] > 0.5  # strong LD at this design


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "p1": 0.10, "pen": "0.60,0.35,0.10", "q1": 0.10, "delta": 0.3,
            "r": 1, "s": 1,
        }))
        code = main(["model", "--config", str(cfg)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["q1_case"] == pytest.approx(0.145, rel=1e-12)

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"p1": 0.10, "pen": "0.60,0.35,0.10", "q1": 0.10}))
        code = main(["model", "--config", str(cfg), "--q1", "0.25"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["q1"] == 0.25


class TestExitCodes:
    def test_success(self, capsys):
        assert main(["model", "--p1", "0.1", "--pen", "0.6,0.35,0.1", "--q1", "0.1"]) == 0

    def test_usage(self, capsys):
        assert main(["model", "--p1", "0.1"]) == 1

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "simulate" in capsys.readouterr().out
