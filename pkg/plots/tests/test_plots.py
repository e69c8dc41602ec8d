"""Plot-contract tests against the committed golden CSVs.

The extracted annotations (regime crossings, lambda argmax, demo bars, phase
curves) must match values recomputed directly from the CSV cells, exactly;
the two regime goldens must classify as Case 1 and Case 2.
"""

import csv
import json
import math
from pathlib import Path

import pytest

from mixridge_plots import SchemaMismatch, plot_demo, plot_lambda, plot_phase, plot_regimes
from mixridge_plots.figures import lambda_argmax, regime_crossings
from mixridge_plots.schema import columns_for, read_rows

GOLDEN = Path(__file__).parent / "golden"


def cells(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    return header, rows[1:]


def col(header, rows, name, cast=float):
    i = header.index(name)
    return [cast(r[i]) if r[i] != "" else None for r in rows]


class TestRegimes:
    def test_case1_crossing_order(self, tmp_path):
        annotations = plot_regimes(GOLDEN / "regimes_case1.csv", tmp_path / "case1.svg")
        info = annotations["inputs"][0]
        assert info["case"] == 1
        assert info["linear_up_const"] is not None and info["quad_up_linear"] is not None
        assert info["linear_up_const"] < info["quad_up_linear"]

    def test_case2_linear_never_leads(self, tmp_path):
        annotations = plot_regimes(GOLDEN / "regimes_case2.csv", tmp_path / "case2.svg")
        info = annotations["inputs"][0]
        assert info["case"] == 2

    def test_crossings_match_csv_exactly(self, tmp_path):
        for name in ("regimes_case1.csv", "regimes_case2.csv"):
            annotations = plot_regimes(GOLDEN / name, tmp_path / "fig.svg")
            info = annotations["inputs"][0]
            header, rows = cells(GOLDEN / name)
            scales = col(header, rows, "mu_scale")
            vs = col(header, rows, "V")
            diamonds = col(header, rows, "diamond_term")
            ns = col(header, rows, "N")
            expect_lin = None
            expect_quad = None
            for m, v, d, n_val in sorted(zip(scales, vs, diamonds, ns)):
                if expect_lin is None and d >= math.sqrt(v):
                    expect_lin = m
                if expect_quad is None and n_val * math.sqrt(v) >= d:
                    expect_quad = m
            assert info["linear_up_const"] == expect_lin
            assert info["quad_up_linear"] == expect_quad

    def test_two_panel_figure(self, tmp_path):
        out = tmp_path / "both.svg"
        annotations = plot_regimes(
            [GOLDEN / "regimes_case1.csv", GOLDEN / "regimes_case2.csv"], out
        )
        assert [i["case"] for i in annotations["inputs"]] == [1, 2]
        assert out.exists() and Path(str(out) + ".json").exists()


class TestLambda:
    def test_argmax_matches_csv_exactly_and_is_negative(self, tmp_path):
        annotations = plot_lambda(GOLDEN / "lambda_geo.csv", tmp_path / "lam.svg")
        info = annotations["inputs"][0]
        header, rows = cells(GOLDEN / "lambda_geo.csv")
        lams = col(header, rows, "lambda")
        ratios = col(header, rows, "ratio")
        pairs = [(l, r) for l, r in zip(lams, ratios) if r is not None]
        expect = max(pairs, key=lambda t: t[1])
        assert info["argmax_lambda"] == expect[0]
        assert info["argmax_ratio"] == expect[1]
        assert info["argmax_lambda"] < 0.0  # left of the lambda=0 line

    def test_argmax_helper_consistency(self):
        rows = read_rows(GOLDEN / "lambda_geo.csv", "lambda")
        best = lambda_argmax(rows)
        assert best is not None and best[0] < 0


class TestPhase:
    def test_curves_match_csv_and_guides(self, tmp_path):
        annotations = plot_phase(GOLDEN / "phase.csv", tmp_path / "phase.svg")
        assert annotations["guides"] == [
            math.sqrt(2 / math.pi),
            1 / math.sqrt(2 * math.pi),
            0.0,
        ]
        header, rows = cells(GOLDEN / "phase.csv")
        qs = col(header, rows, "q")
        ns = col(header, rows, "n")
        ratios = col(header, rows, "ratio")
        curves = annotations["inputs"][0]["curves"]
        for q, n, ratio in zip(qs, ns, ratios):
            assert [q, ratio] in [list(p) for p in curves[str(int(n))]]

    def test_larger_n_closer_to_guides(self, tmp_path):
        # curves approach the limit levels as n grows
        annotations = plot_phase(GOLDEN / "phase.csv", tmp_path / "phase2.svg")
        curves = annotations["inputs"][0]["curves"]
        sub, crit = math.sqrt(2 / math.pi), 1 / math.sqrt(2 * math.pi)
        ns = sorted(int(k) for k in curves)
        for target, q in ((sub, 0.5), (0.0, 0.95)):
            gaps = []
            for n in ns:
                val = dict((p[0], p[1]) for p in curves[str(n)])[q]
                gaps.append(abs(val - target))
            assert gaps[0] >= gaps[-1]


class TestDemo:
    def test_bars_match_csv(self, tmp_path):
        annotations = plot_demo(GOLDEN / "demo.csv", tmp_path / "demo.svg")
        info = annotations["inputs"][0]
        header, rows = cells(GOLDEN / "demo.csv")
        assert info["train_residual_med"] == col(header, rows, "train_residual_med")[0]
        assert info["test_error_med"] == col(header, rows, "test_error_med")[0]
        assert info["eta"] == col(header, rows, "eta")[0]
        # the committed demo run sits at/below the eta + 0.05 guide
        assert info["test_error_med"] <= info["eta"] + 0.05


class TestContract:
    def test_empty_csv_rejected(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        with pytest.raises(SchemaMismatch):
            plot_regimes(bad, tmp_path / "x.svg")

    def test_header_only_rejected(self, tmp_path):
        bad = tmp_path / "headers.csv"
        bad.write_text(",".join(columns_for("mu")) + "\n")
        with pytest.raises(SchemaMismatch):
            plot_regimes(bad, tmp_path / "x.svg")

    def test_wrong_kind_rejected(self, tmp_path):
        with pytest.raises(SchemaMismatch):
            plot_lambda(GOLDEN / "regimes_case1.csv", tmp_path / "x.svg")

    def test_inputs_not_mutated(self, tmp_path):
        before = (GOLDEN / "phase.csv").read_bytes()
        plot_phase(GOLDEN / "phase.csv", tmp_path / "p.svg")
        assert (GOLDEN / "phase.csv").read_bytes() == before

    def test_svg_deterministic(self, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        plot_phase(GOLDEN / "phase.csv", a)
        plot_phase(GOLDEN / "phase.csv", b)
        assert a.read_bytes().replace(b"a.svg", b"") == b.read_bytes().replace(b"b.svg", b"")

    def test_png_supported(self, tmp_path):
        out = tmp_path / "demo.png"
        plot_demo(GOLDEN / "demo.csv", out)
        assert out.exists() and out.stat().st_size > 0


def test_cli_end_to_end(tmp_path):
    from mixridge_plots.cli import main

    out = tmp_path / "fig.svg"
    code = main(["lambda", "--in", str(GOLDEN / "lambda_geo.csv"), "--out", str(out)])
    assert code == 0
    assert out.exists()
    annotations = json.loads(Path(str(out) + ".json").read_text())
    assert annotations["kind"] == "lambda"
    bad = tmp_path / "nope.csv"
    bad.write_text("x\n1\n")
    assert main(["phase", "--in", str(bad), "--out", str(tmp_path / "y.svg")]) == 2
