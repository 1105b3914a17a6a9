import json

import numpy as np
import pandas as pd
import pytest
from scipy.integrate import trapezoid

from betakde.bandwidth import normal_reference, published_nr_beta2
from betakde.cli import FAITHFUL_ANCHORS, ingest_csv, main, oracle_report
from betakde.config import FAITHFUL_PATH
from betakde.errors import IngestError


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def count_peaks(y):
    """Strict local maxima above 10% of the global maximum."""
    peaks = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]) & (y[1:-1] > 0.1 * y.max())
    return int(peaks.sum())


class TestIngest:
    def test_header_is_detected(self, tmp_path):
        sample = ingest_csv(write(tmp_path / "x.csv", "x\n1.0\n2.0\n3.0\n"))
        assert sample.n == 3
        np.testing.assert_array_equal(sample.values, [1.0, 2.0, 3.0])

    def test_bundled_faithful_data(self):
        sample = ingest_csv(FAITHFUL_PATH)
        assert sample.n == 107
        assert 1.5 < sample.lo < sample.hi < 5.5

    def test_bad_row_is_named(self, tmp_path):
        with pytest.raises(IngestError) as info:
            ingest_csv(write(tmp_path / "bad.csv", "1.0\nabc\n2.0\n"))
        assert info.value.row == 2
        assert "Row 2" in str(info.value)

    def test_blank_lines_are_skipped(self, tmp_path):
        assert ingest_csv(write(tmp_path / "gaps.csv", "1.0\n\n2.0\n3.5\n")).n == 3

    @pytest.mark.parametrize("text", ["", "x\n", "x\n1.0\n"])
    def test_too_few_values(self, tmp_path, text):
        with pytest.raises(IngestError):
            ingest_csv(write(tmp_path / "short.csv", text))

    def test_non_finite_value(self, tmp_path):
        with pytest.raises(IngestError) as info:
            ingest_csv(write(tmp_path / "inf.csv", "1.0\n2.0\ninf\n"))
        assert info.value.row == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError):
            ingest_csv(tmp_path / "nope.csv")

    def test_column_from_wide_file(self, tmp_path):
        path = write(tmp_path / "wide.csv", "country,co2\nA,1.5\nB,\nC,2.5\nD,4.0\n")
        sample = ingest_csv(path, column="co2")
        np.testing.assert_array_equal(sample.values, [1.5, 2.5, 4.0])
        with pytest.raises(IngestError):
            ingest_csv(path)
        with pytest.raises(IngestError):
            ingest_csv(path, column="gdp")

    def test_excel_workbook(self, tmp_path):
        path = tmp_path / "data.xlsx"
        pd.DataFrame({"value": [3.0, 1.0, 2.0]}).to_excel(path, index=False)
        assert ingest_csv(path).n == 3
        assert ingest_csv(path, column="value").n == 3


class TestSelect:
    def test_normal_reference_report(self, tmp_path):
        out = tmp_path / "nr.json"
        assert main(["select", "--selector", "nr", "--beta", "2", "--output", str(out)]) == 0
        report = json.loads(out.read_text())
        assert set(report) == {"selector", "beta", "bandwidth", "n", "sigmaHat", "boundaryHit", "searchBounds"}
        assert report["selector"] == "NR(2)"
        assert report["n"] == 107
        assert report["bandwidth"] > 0
        # The displayed beta=2 rule lands near the reported value; quadrature sits about 1.31 times above it.
        display = published_nr_beta2(report["sigmaHat"], report["n"])
        assert display == pytest.approx(FAITHFUL_ANCHORS["NR(2)"], rel=0.25)
        assert 1.25 <= report["bandwidth"] / display <= 1.35

    def test_cross_validation_stays_in_bounds(self, tmp_path):
        for beta in ("1.1", "1.9"):
            out = tmp_path / f"cv{beta}.json"
            assert main(["select", "--selector", "cv", "--beta", beta, "--output", str(out)]) == 0
            report = json.loads(out.read_text())
            lo, hi = report["searchBounds"]
            assert lo <= report["bandwidth"] <= hi

    def test_scaled_data_scales_bandwidth(self, tmp_path):
        values = ingest_csv(FAITHFUL_PATH).values
        write(tmp_path / "scaled.csv", "\n".join(f"{10 * v:.17g}" for v in values) + "\n")
        scaled = ingest_csv(tmp_path / "scaled.csv")
        assert normal_reference(scaled) == pytest.approx(10 * normal_reference(ingest_csv(FAITHFUL_PATH)), rel=1e-9)

    def test_published_weight_flag(self, tmp_path):
        out = tmp_path / "cv.json"
        assert main(["select", "--selector", "cv", "--published-loo-weight", "--output", str(out)]) == 0
        assert json.loads(out.read_text())["selector"] == "CV(2,w2)"

    def test_report_to_stdout(self, capsys):
        assert main(["select"]) == 0
        assert json.loads(capsys.readouterr().out)["selector"] == "NR(2)"

    def test_reproducible(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["select", "--selector", "cv", "--output", str(a)])
        main(["select", "--selector", "cv", "--output", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestEstimate:
    def run(self, tmp_path, *extra):
        out = tmp_path / "curve.tsv"
        assert main(["estimate", "--output", str(out), *extra]) == 0
        return out, pd.read_csv(out, sep="\t")

    def test_row_count_and_header(self, tmp_path):
        out, curve = self.run(tmp_path, "--grid-count", "300")
        lines = out.read_text().splitlines()
        assert lines[0] == "x\tdensity"
        assert len(lines) == 301
        assert (curve["density"] >= 0).all()

    def test_cross_validated_faithful_curve_separates_two_clusters(self, tmp_path):
        _, curve = self.run(tmp_path, "--selector", "cv", "--beta", "1.1")
        x = curve["x"].to_numpy()
        y = curve["density"].to_numpy()
        short, gap, long = y[x < 2.5], y[(x > 2.5) & (x < 3.4)], y[x > 3.4]
        # The tied, rounded durations leave several small bumps inside each cluster.
        assert count_peaks(y) >= 2
        assert short.max() >= 0.5 * y.max() and long.max() >= 0.5 * y.max()
        assert gap.min() < 0.1 * y.max()

    def test_reported_bandwidth_gives_two_modes(self, tmp_path):
        _, curve = self.run(tmp_path, "--bandwidth", str(FAITHFUL_ANCHORS["CV(1.1)"]))
        assert count_peaks(curve["density"].to_numpy()) == 2

    def test_plain_curve_holds_all_mass(self, tmp_path):
        _, curve = self.run(tmp_path, "--bandwidth", "0.3", "--mode", "plain")
        total = trapezoid(curve["density"], curve["x"])
        assert 0.98 <= total <= 1.0 + 1e-9


class TestSimulate:
    ARGS = ["--reps", "1", "--mise-reps", "2", "--cells", "0,1,20", "--selectors", "nr:2", "--threads", "1"]

    def test_tables_have_one_row(self, tmp_path):
        out = tmp_path / "tables"
        assert main(["simulate", "--output", str(out), *self.ARGS]) == 0
        for name in ("table1_re.csv", "table2_meanh.csv", "table3_relerr.csv"):
            table = pd.read_csv(out / name)
            assert list(table.columns) == ["mu", "sigma", "n", "selector", "value"]
            assert len(table) == 1
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 42 and manifest["reps"] == 1
        assert len(pd.read_csv(out / "trials.csv")) == 1
        assert len(pd.read_csv(out / "hmise.csv")) == 1

    def test_identical_seeds_give_identical_files(self, tmp_path):
        for name in ("a", "b"):
            assert main(["simulate", "--output", str(tmp_path / name), *self.ARGS]) == 0
        for name in ("table1_re.csv", "table2_meanh.csv", "table3_relerr.csv", "trials.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_failure_leaves_no_tables(self, tmp_path, monkeypatch):
        import betakde.cli as cli

        def explode(_config):
            raise cli.BetaKdeError("boom")

        monkeypatch.setattr(cli, "run_simulation", explode)
        out = tmp_path / "tables"
        assert main(["simulate", "--output", str(out), *self.ARGS]) == 1
        assert not out.exists()
        assert list(tmp_path.iterdir()) == []


class TestOracle:
    def test_report_readings(self):
        report = oracle_report(2.0, 1.0)
        readings = report["readings"]
        assert readings["quadrature"]["i1"] == pytest.approx(1.0)
        assert readings["published-270"]["i1"] == pytest.approx(1.0)
        assert readings["published-270"]["polynomial"] == 861
        assert readings["published-27"]["polynomial"] == 375
        assert readings["exact"]["matchesQuadrature"]
        assert not readings["published-270"]["matchesQuadrature"]
        assert not readings["published-27"]["matchesQuadrature"]

    def test_printed_report(self, capsys):
        assert main(["oracle", "--beta", "2", "--sigma", "1"]) == 0
        out = capsys.readouterr().out
        assert "I1=1 " in out
        assert "poly=861" in out and "poly=375" in out
        assert "matches quadrature" in out


class TestExitCodes:
    def test_invalid_beta_is_a_usage_error(self):
        assert main(["select", "--beta", "0.5"]) == 2

    def test_unknown_option(self):
        with pytest.raises(SystemExit) as info:
            main(["select", "--no-such-flag"])
        assert info.value.code == 2

    def test_missing_input_is_a_usage_error(self, tmp_path):
        assert main(["select", "--input", str(tmp_path / "missing.csv")]) == 2

    def test_degenerate_data_fails_cleanly(self, tmp_path, capsys):
        path = write(tmp_path / "const.csv", "5\n5\n5\n5\n")
        assert main(["select", "--input", str(path)]) == 1
        assert "Technical details" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "extra",
        [
            ["--selectors", "foo:2"],
            ["--cells", "0,1,5"],
            ["--cells", "0,1"],
            ["--seed", "-1"],
            ["--reps", "0"],
        ],
    )
    def test_bad_simulation_options_are_usage_errors(self, tmp_path, capsys, extra):
        out = tmp_path / "tables"
        assert main(["simulate", "--output", str(out), *extra]) == 2
        assert "Technical details" in capsys.readouterr().err
        assert not out.exists()

    def test_negative_seed_rejected_for_select(self):
        assert main(["select", "--seed", "-1"]) == 2
