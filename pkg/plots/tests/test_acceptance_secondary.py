"""Criterion 10: render all three figures from real simulator CSVs.

Generates the curve data through the rapidpurify CLI (reduced trajectory
counts where Monte Carlo is involved; the schemas and styles are what is
under test), renders each figure with the caption-specified line styles,
and checks the clean schema-mismatch failure mode.
"""

import subprocess
import sys

import pytest

from figplots import build_figure_spec, read_curve


def sim(args, cwd):
    res = subprocess.run([sys.executable, "-m", "rapidpurify", *args],
                         cwd=cwd, capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    return res


def draw(args, cwd):
    return subprocess.run([sys.executable, "-m", "figplots.cli", *args],
                          cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="module")
def csv_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("curves")
    grid = "--l-grid=0.005:0.45:12"
    for eta in ("1", "0.8", "0.5"):
        sim(["fig1", "--eta", eta, grid], d)
    small = ["--n-traj", "400", "--horizon", "6", "--threads", "2"]
    for eta in ("1", "0.8"):
        sim(["fig2", "--eta", eta, grid, *small], d)
    sim(["fig3", "--eta", "1"], d)
    sim(["fig3", "--eta", "0.95", "--l-grid=0.1:0.4:5", "--n-traj", "200",
         "--horizon", "20", "--threads", "2"], d)
    return d


def test_criterion_10_fig1_three_styled_curves(csv_dir):
    res = draw(["1", "--csv", "fig1_1_0.csv", "--csv", "fig1_0.8_0.csv",
                "--csv", "fig1_0.5_0.csv", "--out", "fig1.png"], csv_dir)
    assert res.returncode == 0, res.stderr
    assert (csv_dir / "fig1.png").stat().st_size > 1000
    curves = [read_curve(str(csv_dir / f"fig1_{e}_0.csv")) for e in ("1", "0.8", "0.5")]
    spec = build_figure_spec(1, curves)
    assert [c["style"] for c in spec["curves"]] == ["-", "--", "-."]
    assert all(c["stderr_s"] is None for c in spec["curves"])  # analytic curves
    print("[criterion 10] fig1 PASS: solid/dashed/dash-dot, no error bars")


def test_criterion_10_fig2_error_bars(csv_dir):
    res = draw(["2", "--csv", "fig2_1_0.csv", "--csv", "fig2_0.8_0.csv",
                "--out", "fig2.png"], csv_dir)
    assert res.returncode == 0, res.stderr
    assert (csv_dir / "fig2.png").stat().st_size > 1000
    curves = [read_curve(str(csv_dir / f"fig2_{e}_0.csv")) for e in ("1", "0.8")]
    spec = build_figure_spec(2, curves)
    assert all(c["stderr_s"] is not None for c in spec["curves"])  # MC curves
    print("[criterion 10] fig2 PASS: Monte-Carlo curves carry error bars")


def test_criterion_10_fig3_two_curves(csv_dir):
    res = draw(["3", "--csv", "fig3_1_0.csv", "--csv", "fig3_0.95_0.csv",
                "--out", "fig3.png"], csv_dir)
    assert res.returncode == 0, res.stderr
    assert (csv_dir / "fig3.png").stat().st_size > 1000
    curves = [read_curve(str(csv_dir / "fig3_1_0.csv")),
              read_curve(str(csv_dir / "fig3_0.95_0.csv"))]
    spec = build_figure_spec(3, curves)
    assert [c["style"] for c in spec["curves"]] == ["-", "--"]
    assert spec["curves"][0]["stderr_s"] is None      # closed form
    assert spec["curves"][1]["stderr_s"] is not None  # Monte Carlo
    print("[criterion 10] fig3 PASS: solid eta=1, dashed eta=0.95")


def test_criterion_10_schema_mismatch_fails_cleanly(csv_dir, tmp_path):
    broken = tmp_path / "fig1_1_0.csv"
    lines = (csv_dir / "fig1_1_0.csv").read_text(encoding="utf-8").splitlines()
    lines[0] = lines[0].replace("t_denominator", "wrong_name")
    broken.write_text("\n".join(lines) + "\n", encoding="utf-8")
    res = draw(["1", "--csv", str(broken), "--out", "x.png"], tmp_path)
    assert res.returncode != 0
    assert "t_denominator" in res.stderr or "wrong_name" in res.stderr
    print("[criterion 10] schema mismatch PASS: nonzero exit naming the column")
