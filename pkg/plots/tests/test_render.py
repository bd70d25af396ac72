import subprocess
import sys

import pytest

from figplots import SchemaError, build_figure_spec, read_curve, render


def write_curve(path, *, stderr=False, rows=None):
    header = "L,t_numerator,t_denominator,s" + (",stderr_s" if stderr else "")
    if rows is None:
        rows = [
            (0.4, 0.11, 0.10, 1.1) + ((0.01,) if stderr else ()),
            (0.1, 0.80, 0.65, 1.23) + ((0.012,) if stderr else ()),
            (0.01, 1.94, 1.50, 1.29) + ((0.02,) if stderr else ()),
        ]
    lines = [header] + [",".join(repr(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestReadCurve:
    def test_reads_required_columns(self, tmp_path):
        p = write_curve(tmp_path / "fig1_0.8_0.csv")
        curve = read_curve(str(p))
        assert curve["L"] == [0.4, 0.1, 0.01]
        assert curve["stderr_s"] is None
        assert curve["eta"] == 0.8

    def test_reads_stderr_when_present(self, tmp_path):
        p = write_curve(tmp_path / "fig2_1_0.csv", stderr=True)
        curve = read_curve(str(p))
        assert curve["stderr_s"] == [0.01, 0.012, 0.02]
        assert curve["eta"] == 1.0

    def test_eta_override_beats_filename(self, tmp_path):
        p = write_curve(tmp_path / "fig1_0.8_0.csv")
        assert read_curve(str(p), eta=0.5)["eta"] == 0.5

    def test_missing_column_names_it(self, tmp_path):
        p = tmp_path / "fig1_1_0.csv"
        p.write_text("L,t_numerator,s\n0.1,1.0,1.1\n", encoding="utf-8")
        with pytest.raises(SchemaError, match="t_denominator"):
            read_curve(str(p))

    def test_non_numeric_value_names_column(self, tmp_path):
        p = tmp_path / "fig1_1_0.csv"
        p.write_text("L,t_numerator,t_denominator,s\n0.1,x,1.0,1.1\n", encoding="utf-8")
        with pytest.raises(SchemaError, match="t_numerator"):
            read_curve(str(p))

    def test_censored_rows_dropped(self, tmp_path):
        p = write_curve(tmp_path / "fig3_0.95_0.csv", stderr=True,
                        rows=[(0.4, 0.1, 0.09, 1.1, 0.01),
                              (0.01, 1.9, float("nan"), float("nan"), float("nan"))])
        curve = read_curve(str(p))
        assert curve["L"] == [0.4]


class TestFigureSpec:
    def test_styles_follow_efficiency(self, tmp_path):
        curves = [
            read_curve(str(write_curve(tmp_path / "fig1_1_0.csv"))),
            read_curve(str(write_curve(tmp_path / "fig1_0.8_0.csv"))),
            read_curve(str(write_curve(tmp_path / "fig1_0.5_0.csv"))),
        ]
        spec = build_figure_spec(1, curves)
        assert [c["style"] for c in spec["curves"]] == ["-", "--", "-."]
        assert [c["label"] for c in spec["curves"]] == [
            "$\\eta$ = 1", "$\\eta$ = 0.8", "$\\eta$ = 0.5"]

    def test_dashed_at_0_95(self, tmp_path):
        curves = [
            read_curve(str(write_curve(tmp_path / "fig3_1_0.csv"))),
            read_curve(str(write_curve(tmp_path / "fig3_0.95_0.csv", stderr=True))),
        ]
        spec = build_figure_spec(3, curves)
        assert [c["style"] for c in spec["curves"]] == ["-", "--"]
        assert spec["curves"][0]["stderr_s"] is None
        assert spec["curves"][1]["stderr_s"] is not None

    def test_spec_is_deterministic(self, tmp_path):
        p = write_curve(tmp_path / "fig1_1_0.csv")
        a = build_figure_spec(1, [read_curve(str(p))])
        b = build_figure_spec(1, [read_curve(str(p))])
        assert a == b

    def test_rejects_unknown_figure(self, tmp_path):
        p = write_curve(tmp_path / "fig1_1_0.csv")
        with pytest.raises(ValueError):
            build_figure_spec(4, [read_curve(str(p))])


class TestRender:
    def test_writes_image(self, tmp_path):
        curve = read_curve(str(write_curve(tmp_path / "fig2_1_0.csv", stderr=True)))
        out = tmp_path / "fig2.png"
        render(build_figure_spec(2, [curve]), str(out))
        assert out.exists() and out.stat().st_size > 1000


class TestCli:
    @staticmethod
    def run_cli(args, cwd):
        return subprocess.run([sys.executable, "-m", "figplots.cli", *args],
                              cwd=cwd, capture_output=True, text=True)

    def test_three_curve_figure(self, tmp_path):
        for eta in ("1", "0.8", "0.5"):
            write_curve(tmp_path / f"fig1_{eta}_0.csv")
        res = self.run_cli(
            ["1", "--csv", "fig1_1_0.csv", "--csv", "fig1_0.8_0.csv",
             "--csv", "fig1_0.5_0.csv", "--out", "fig1.png"], tmp_path)
        assert res.returncode == 0, res.stderr
        assert (tmp_path / "fig1.png").stat().st_size > 1000

    def test_two_curve_fig3(self, tmp_path):
        write_curve(tmp_path / "fig3_1_0.csv")
        write_curve(tmp_path / "fig3_0.95_0.csv", stderr=True)
        res = self.run_cli(["3", "--csv", "fig3_1_0.csv", "--csv", "fig3_0.95_0.csv",
                            "--out", "fig3.pdf"], tmp_path)
        assert res.returncode == 0, res.stderr
        assert (tmp_path / "fig3.pdf").exists()

    def test_schema_mismatch_exits_nonzero_naming_column(self, tmp_path):
        bad = tmp_path / "fig2_1_0.csv"
        bad.write_text("L,t_numerator,s\n0.1,1.0,1.1\n", encoding="utf-8")
        res = self.run_cli(["2", "--csv", "fig2_1_0.csv", "--out", "x.png"], tmp_path)
        assert res.returncode == 2
        assert "t_denominator" in res.stderr

    def test_eta_count_mismatch_rejected(self, tmp_path):
        write_curve(tmp_path / "fig1_1_0.csv")
        res = self.run_cli(["1", "--csv", "fig1_1_0.csv", "--eta", "1",
                            "--eta", "0.8", "--out", "x.png"], tmp_path)
        assert res.returncode == 2
