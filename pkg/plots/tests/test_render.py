"""Rendering tests against the golden CSV fixtures, including the
secondary acceptance check: all four figure kinds render, and the
heatmap peaks sit on the demo scene's delay-Doppler triples."""

import pathlib

import pytest

from cipsac_plots import FigureSpec, SchemaError, heatmap_peaks, render
from cipsac_plots.cli import main as cli_main
from cipsac_plots.figures import read_csv_columns

GOLDEN = pathlib.Path(__file__).resolve().parent.parent / "golden"

KIND_TO_CSV = {
    "per-vs-snr": GOLDEN / "per_vs_snr.csv",
    "mse-vs-iter": GOLDEN / "mse_vs_iter.csv",
    "psr-bars": GOLDEN / "psr.csv",
    "sensing-heatmap": GOLDEN / "sensing_heatmap.csv",
}


@pytest.mark.parametrize("kind", sorted(KIND_TO_CSV))
def test_all_kinds_render(kind, tmp_path):
    out = tmp_path / f"{kind}.png"
    plotted = render(FigureSpec(kind=kind, csv_path=str(KIND_TO_CSV[kind]),
                                out_path=str(out)))
    assert out.exists() and out.stat().st_size > 1000
    assert plotted
    print(f"[PASS] rendered {kind} -> {out.name}")


def test_heatmap_peaks_match_demo_scene():
    rows = read_csv_columns(str(KIND_TO_CSV["sensing-heatmap"]),
                            ["branch", "theta_deg", "delay_bin", "doppler_bin",
                             "magnitude"])
    peaks = heatmap_peaks(rows)
    by_angle = sorted(peaks.values(), key=lambda p: p["theta_deg"])
    cells = [p["cell"] for p in by_angle]
    assert cells == [(4, 10), (5, 11), (3, 1)]
    for peak, ref in zip(by_angle, (70.0, 90.0, 110.0)):
        assert abs(peak["theta_deg"] - ref) <= 1.0
    print("[PASS] heatmap peaks match the demo-scene triples")


def test_per_curve_echoes_csv_values():
    rows = read_csv_columns(str(KIND_TO_CSV["per-vs-snr"]),
                            ["snr_d_db", "n_iter", "per"])
    plotted = render(FigureSpec(kind="per-vs-snr",
                                csv_path=str(KIND_TO_CSV["per-vs-snr"]),
                                out_path="/dev/null"))
    for label, (x, y) in plotted.items():
        n_iter = label.split(",")[1].split()[0]
        want = sorted((float(r["snr_d_db"]), float(r["per"]))
                      for r in rows if r["n_iter"] == n_iter)
        assert x == [w[0] for w in want]
        for got, (_, val) in zip(y, want):
            assert got == val or (val == 0.0 and got > 0)  # log-axis floor


def test_rendering_is_deterministic(tmp_path):
    spec1 = FigureSpec(kind="mse-vs-iter",
                       csv_path=str(KIND_TO_CSV["mse-vs-iter"]),
                       out_path=str(tmp_path / "a.png"))
    spec2 = FigureSpec(kind="mse-vs-iter",
                       csv_path=str(KIND_TO_CSV["mse-vs-iter"]),
                       out_path=str(tmp_path / "b.png"))
    assert render(spec1) == render(spec2)


def test_missing_column_names_the_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("scenario,per\nmobile-siso,0.1\n")
    with pytest.raises(SchemaError) as err:
        render(FigureSpec(kind="per-vs-snr", csv_path=str(bad),
                          out_path=str(tmp_path / "x.png")))
    assert "snr_d_db" in str(err.value)


def test_cli(tmp_path):
    out = tmp_path / "psr.png"
    rc = cli_main(["--kind", "psr-bars", "--in", str(KIND_TO_CSV["psr-bars"]),
                   "--out", str(out)])
    assert rc == 0 and out.exists()
    rc = cli_main(["--kind", "per-vs-snr", "--in", str(KIND_TO_CSV["psr-bars"]),
                   "--out", str(out)])
    assert rc == 1
