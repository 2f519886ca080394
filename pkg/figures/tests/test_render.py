"""Renderer fidelity: bands, contours, schema checks, read-only inputs."""

import math
import os

import numpy as np
import pytest

from olgfig.cli import main as cli_main
from olgfig.render import (
    FAN_PERCENTILES,
    SPAGHETTI_CAP,
    FigureSpec,
    cobb_douglas_boundary,
    render,
)
from olgfig.tables import SchemaError, read_table


def write_rollover_paths(path, matrix):
    n_path, n_gen = matrix.shape
    lines = ["# olgdebt: 0.1.0", "# table: rollover_paths",
             '# config: {"branch":"cobb_douglas"}',
             "path\tgeneration\tdebt_share\tdebt_due_share\t"
             "welfare_change_pct\tfailed"]
    for p in range(n_path):
        for g in range(n_gen):
            v = repr(float(matrix[p, g]))
            lines.append(f"{p}\t{g}\t{v}\t{v}\t0\tfalse")
    path.write_text("\n".join(lines) + "\n")


def write_grid(path, safe_axis, risky_axis, welfare_fn, branch="cobb_douglas"):
    lines = ["# olgdebt: 0.1.0", "# table: transfer_grid",
             f"# branch: {branch}", "# transfer_fraction: 0.05",
             "safe_annual\trisky_annual\twelfare_change_pct\tstatus"]
    for r in risky_axis:
        for s in safe_axis:
            if s <= r:
                lines.append(f"{float(s)!r}\t{float(r)!r}\t{float(welfare_fn(s, r))!r}\tok")
    path.write_text("\n".join(lines) + "\n")


def quantile_type7(values, p):
    xs = sorted(values)
    n = len(xs)
    h = (n - 1) * (p / 100.0)
    i = int(math.floor(h))
    f = h - i
    if i + 1 >= n:
        return xs[-1]
    return xs[i] + f * (xs[i + 1] - xs[i])


def test_fan_bands_match_independent_recomputation(tmp_path):
    rng = np.random.default_rng(7)
    matrix = 0.15 * np.exp(np.cumsum(rng.normal(-0.05, 0.2, (400, 6)), axis=1))
    table_path = tmp_path / "rollover_paths.tsv"
    write_rollover_paths(table_path, matrix)
    out = tmp_path / "fan.png"
    result = render(FigureSpec(input_path=str(table_path),
                               output_path=str(out), kind="path-fan"))
    assert out.exists()
    for p in FAN_PERCENTILES:
        drawn = result.drawn["percentiles"][p]
        for g in range(matrix.shape[1]):
            want = quantile_type7(matrix[:, g].tolist(), p)
            assert abs(drawn[g] - want) < 1e-9


def test_fan_spaghetti_sample_is_capped_and_deterministic(tmp_path):
    matrix = np.tile(np.linspace(0.15, 0.05, 6), (500, 1))
    table_path = tmp_path / "rollover_paths.tsv"
    write_rollover_paths(table_path, matrix)
    spec = FigureSpec(input_path=str(table_path),
                      output_path=str(tmp_path / "fan.png"),
                      kind="path-fan", spaghetti=True)
    r1 = render(spec)
    r2 = render(spec)
    assert len(r1.drawn["sampled_paths"]) <= SPAGHETTI_CAP
    assert r1.drawn["sampled_paths"] == r2.drawn["sampled_paths"]


def test_grid_zero_contour_tracks_analytic_boundary(tmp_path):
    safe_axis = [round(-3.0 + 0.5 * i, 10) for i in range(11)]
    risky_axis = [round(1.0 + 0.5 * i, 10) for i in range(9)]

    def welfare(s, r):
        return s - cobb_douglas_boundary(np.array([r]))[0]

    table_path = tmp_path / "transfer_grid.tsv"
    write_grid(table_path, safe_axis, risky_axis, welfare)
    out = tmp_path / "grid.png"
    result = render(FigureSpec(input_path=str(table_path),
                               output_path=str(out), kind="grid-heatmap"))
    assert out.exists()
    contour = result.drawn["zero_contour"]
    assert contour.shape[0] > 0
    # every drawn contour vertex within one grid cell of the Eq boundary
    for risky, safe in contour:
        assert abs(safe - cobb_douglas_boundary(np.array([risky]))[0]) <= 0.5


def test_grid_without_sign_change_draws_no_contour(tmp_path):
    table_path = tmp_path / "transfer_grid.tsv"
    write_grid(table_path, [-2.0, -1.5], [1.0, 2.0], lambda s, r: 1.0,
               branch="linear")
    result = render(FigureSpec(input_path=str(table_path),
                               output_path=str(tmp_path / "g.png"),
                               kind="grid-heatmap"))
    assert result.drawn["zero_contour"].shape[0] == 0


def test_empty_table_is_an_error_and_writes_nothing(tmp_path):
    table_path = tmp_path / "transfer_grid.tsv"
    table_path.write_text("# table: transfer_grid\n"
                          "safe_annual\trisky_annual\twelfare_change_pct\n")
    out = tmp_path / "never.png"
    with pytest.raises(SchemaError, match="empty"):
        render(FigureSpec(input_path=str(table_path), output_path=str(out)))
    assert not out.exists()


def test_kind_mismatch_is_schema_error(tmp_path):
    table_path = tmp_path / "transfer_grid.tsv"
    write_grid(table_path, [-1.0], [1.0], lambda s, r: 0.5)
    with pytest.raises(SchemaError, match="does not match"):
        render(FigureSpec(input_path=str(table_path),
                          output_path=str(tmp_path / "x.png"),
                          kind="path-fan"))


def test_rendering_is_read_only(tmp_path):
    table_path = tmp_path / "rollover_paths.tsv"
    write_rollover_paths(table_path, np.full((10, 4), 0.15))
    before = table_path.read_bytes()
    render(FigureSpec(input_path=str(table_path),
                      output_path=str(tmp_path / "fan.png")))
    assert table_path.read_bytes() == before


def test_trajectory_figure(tmp_path):
    lines = ["# table: rollover_summary",
             "generation\tmean_welfare_all\tmean_welfare_success"
             "\tmean_welfare_failure",
             "0\t8.7\t8.8\t8.1", "1\t0.2\t0.3\t-1.0", "2\t0.1\t0.2\t-2.5"]
    table_path = tmp_path / "rollover_summary.tsv"
    table_path.write_text("\n".join(lines) + "\n")
    out = tmp_path / "traj.png"
    result = render(FigureSpec(input_path=str(table_path),
                               output_path=str(out)))
    assert out.exists()
    assert result.kind == "welfare-trajectory"
    np.testing.assert_array_equal(result.drawn["mean_welfare_all"],
                                  [8.7, 0.2, 0.1])


def test_cli_flags_and_spec_file(tmp_path):
    table_path = tmp_path / "rollover_paths.tsv"
    write_rollover_paths(table_path, np.full((20, 5), 0.1))
    out1 = tmp_path / "a.png"
    assert cli_main(["--input", str(table_path), "--output", str(out1)]) == 0
    assert out1.exists()

    spec_file = tmp_path / "figs.toml"
    out2 = tmp_path / "b.png"
    spec_file.write_text(
        "[[figure]]\n"
        f"input = {str(table_path)!r}\n"
        f"output = {str(out2)!r}\n"
        "kind = \"path-fan\"\n"
        "spaghetti = true\n")
    assert cli_main(["--spec", str(spec_file)]) == 0
    assert out2.exists()

    assert cli_main(["--input", str(tmp_path / "missing.tsv"),
                     "--output", str(tmp_path / "c.png")]) == 2
