"""Command-line interface: formats, determinism, exit codes."""

import json

import numpy as np
import pytest

from gauss_eot.cli import FORMAT_LINE, main, parse_sweep
from gauss_eot.errors import ConfigError


@pytest.fixture
def files(tmp_path):
    def write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    return {
        "g0": write("g0.json", {"mean": [-2.0], "cov": [[0.1]]}),
        "g1": write("g1.json", {"mean": [2.0], "cov": [[0.5]]}),
        "pop": write(
            "pop.json",
            {
                "members": [
                    {"mean": [0.0], "cov": [[1.0]]},
                    {"mean": [1.0], "cov": [[4.0]]},
                ]
            },
        ),
        "corners": write(
            "corners.json",
            {
                "members": [
                    {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
                    {"mean": [1.0, 0.0], "cov": [[2.0, 0.3], [0.3, 0.5]]},
                    {"mean": [0.0, 1.0], "cov": [[0.5, -0.2], [-0.2, 1.5]]},
                    {"mean": [1.0, 1.0], "cov": [[1.0, 0.4], [0.4, 2.0]]},
                ]
            },
        ),
        "dir": tmp_path,
        "write": write,
    }


def rows_of(output: str):
    lines = [l for l in output.strip().split("\n") if not l.startswith("#")]
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


# ------------------------------------------------------------ distance


def test_distance_emits_versioned_csv(files, capsys):
    code = main(["distance", files["g0"], files["g1"], "--epsilon-list", "1,2"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith(FORMAT_LINE + "\n")
    header, rows = rows_of(out)
    assert header == ["epsilon", "w2_sq", "ot_eps", "sinkhorn_div"]
    assert len(rows) == 2
    assert float(rows[0][0]) == 1.0


def test_distance_accepts_zero_epsilon_as_the_unregularized_case(files, capsys):
    code = main(["distance", files["g0"], files["g1"], "--epsilon", "0"])
    out = capsys.readouterr().out
    assert code == 0
    _, rows = rows_of(out)
    assert rows[0][1] == rows[0][2] == rows[0][3]


def test_distance_output_is_byte_deterministic(files):
    a = files["dir"] / "a.csv"
    b = files["dir"] / "b.csv"
    args = ["distance", files["g0"], files["g1"], "--epsilon-sweep", "0.1:10:5:log"]
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_distance_json_mirror(files, capsys):
    code = main(
        ["distance", files["g0"], files["g1"], "--epsilon", "2", "--format", "json"]
    )
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["format"] == "gauss-eot v1"
    assert payload["command"] == "distance"
    assert payload["columns"] == ["epsilon", "w2_sq", "ot_eps", "sinkhorn_div"]
    assert payload["rows"][0]["epsilon"] == 2.0


def test_distance_identical_inputs_zero_the_divergence_column(files, capsys):
    code = main(["distance", files["g0"], files["g0"], "--epsilon-list", "0.5,2,8"])
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    div = header.index("sinkhorn_div")
    assert [row[div] for row in rows] == ["0.0", "0.0", "0.0"]


def test_epsilon_options_are_mutually_exclusive(files, capsys):
    code = main(
        ["distance", files["g0"], files["g1"], "--epsilon", "1", "--epsilon-list", "2"]
    )
    assert code == 2
    assert "exactly one" in capsys.readouterr().err


def test_missing_input_file_is_a_config_error(files, capsys):
    code = main(["distance", files["g0"], "nope.json", "--epsilon", "1"])
    assert code == 2
    assert "nope.json" in capsys.readouterr().err


def test_invalid_covariance_is_a_config_error(files, capsys):
    bad = files["write"]("bad.json", {"mean": [0.0], "cov": [[-1.0]]})
    assert main(["distance", files["g0"], bad, "--epsilon", "1"]) == 2


def test_sweep_parsing():
    assert np.allclose(parse_sweep("0:1:3"), [0.0, 0.5, 1.0])
    assert np.allclose(parse_sweep("0.01:100:5:log"), np.geomspace(0.01, 100, 5))
    for bad in ("1:0:5", "0:1:1", "0:1:5:exp", "x:1:5", "-1:1:3:log"):
        with pytest.raises(ConfigError):
            parse_sweep(bad)


# ------------------------------------------------------------ interpolate


def test_interpolate_endpoints_round_trip_the_inputs(files, capsys):
    code = main(
        ["interpolate", files["g0"], files["g1"], "--epsilon", "20", "--t-grid", "5"]
    )
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert header == ["epsilon", "t", "mean_0", "cov_0_0"]
    assert rows[0][2:] == ["-2.0", "0.1"]
    assert rows[-1][2:] == ["2.0", "0.5"]
    ts = [float(r[1]) for r in rows]
    assert ts == sorted(ts)


def test_interpolate_two_point_t_grid_is_exactly_the_endpoints(files, capsys):
    code = main(
        ["interpolate", files["g0"], files["g1"], "--epsilon", "2", "--t-grid", "2"]
    )
    out = capsys.readouterr().out
    assert code == 0
    _, rows = rows_of(out)
    assert len(rows) == 2
    assert [rows[0][1], rows[1][1]] == ["0.0", "1.0"]
    assert rows[0][2:] == ["-2.0", "0.1"]
    assert rows[1][2:] == ["2.0", "0.5"]


def test_interpolate_density_grid_for_one_dimension(files, capsys):
    code = main(
        [
            "interpolate",
            files["g0"],
            files["g1"],
            "--epsilon",
            "2",
            "--t-grid",
            "3",
            "--density-grid=-4:4:17",
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "# density_x:" in out
    header, rows = rows_of(out)
    assert header[-1] == "density_16"
    densities = np.array([float(x) for x in rows[1][4:]])
    assert densities.max() > 0.0


def test_interpolate_density_grid_rejects_two_dimensions(files, capsys):
    g2a = files["write"](
        "g2a.json", {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}
    )
    g2b = files["write"](
        "g2b.json", {"mean": [1.0, 1.0], "cov": [[2.0, 0.0], [0.0, 2.0]]}
    )
    code = main(["interpolate", g2a, g2b, "--epsilon", "2", "--density-grid=-4:4:9"])
    assert code == 2


# ------------------------------------------------------------ barycenter


def test_barycenter_reports_convergence_columns(files, capsys):
    code = main(
        ["barycenter", files["pop"], "--kind", "entropic", "--epsilon", "0.5"]
    )
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert header[:5] == ["kind", "epsilon", "converged", "iterations", "residual"]
    assert rows[0][0] == "entropic"
    assert rows[0][2] == "true"
    assert float(rows[0][4]) <= 1e-10


def test_barycenter_single_member_sinkhorn_returns_the_member(files, capsys):
    solo = files["write"](
        "solo.json", {"members": [{"mean": [0.3], "cov": [[1.7]]}]}
    )
    code = main(["barycenter", solo, "--kind", "sinkhorn", "--epsilon", "2"])
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert float(rows[0][header.index("mean_0")]) == pytest.approx(0.3, abs=1e-9)
    assert float(rows[0][header.index("cov_0_0")]) == pytest.approx(1.7, abs=1e-9)


def test_barycenter_w2_needs_no_epsilon(files, capsys):
    assert main(["barycenter", files["pop"], "--kind", "w2"]) == 0
    _, rows = rows_of(capsys.readouterr().out)
    assert rows[0][1] == ""


def test_barycenter_entropic_requires_epsilon(files, capsys):
    code = main(["barycenter", files["pop"], "--kind", "entropic"])
    assert code == 2
    assert "epsilon" in capsys.readouterr().err


def test_barycenter_nonconvergence_exits_one(files, capsys):
    code = main(
        [
            "barycenter",
            files["pop"],
            "--kind",
            "w2",
            "--max-iters",
            "2",
            "--tol",
            "1e-14",
        ]
    )
    assert code == 1
    assert "did not reach" in capsys.readouterr().err


# ------------------------------------------------------------ span


def test_span_emits_a_full_sheet(files, capsys):
    code = main(
        ["span", files["corners"], "--kind", "w2", "--span-grid", "3"]
    )
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert len(rows) == 9
    assert "error" in header
    assert all(row[header.index("converged")] == "true" for row in rows)


def test_span_identical_corners_fill_identical_cells(files, capsys):
    same = {"mean": [0.5, -0.5], "cov": [[1.2, 0.3], [0.3, 0.8]]}
    quad = files["write"]("quad.json", {"members": [same] * 4})
    code = main(["span", quad, "--kind", "w2", "--span-grid", "4"])
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert len(rows) == 16
    assert all(row[header.index("converged")] == "true" for row in rows)
    # identical up to the one rounding the bilinear weight average commits
    cells = np.array(
        [[float(x) for x in row[header.index("mean_0"):]] for row in rows]
    )
    assert np.allclose(cells, cells[0], rtol=0.0, atol=1e-12)


def test_span_flags_collapsed_cells_and_still_completes(files, capsys):
    """Cells whose regularization bias collapses the covariance are reported
    in place (converged=false plus an error message) without aborting the
    sweep or the exit code."""
    code = main(
        [
            "span",
            files["corners"],
            "--kind",
            "entropic",
            "--epsilon",
            "10",
            "--span-grid",
            "2",
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert len(rows) == 4
    err = header.index("error")
    assert all(row[header.index("converged")] == "false" for row in rows)
    assert all("collapsed" in row[err] for row in rows)
    # failed cells leave the result columns empty rather than inventing values
    assert all(row[header.index("mean_0")] == "" for row in rows)


def test_span_needs_four_corners(files, capsys):
    short = files["write"](
        "short.json", {"members": [{"mean": [0.0], "cov": [[1.0]]}] * 3}
    )
    assert main(["span", short, "--kind", "w2"]) == 2


# ------------------------------------------------------------ limits


def test_limits_header_is_pinned(files, capsys):
    code = main(
        ["limits", files["g0"], files["g1"], "--epsilon-list", "0.001,1,1000"]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert out.split("\n")[1] == "epsilon,ot_eps,gap_w2,gap_sinkhorn_mmd,gap_ot_mmd"


def test_limits_gap_threshold_gates_the_exit_code(files, capsys):
    args = ["limits", files["g0"], files["g1"], "--epsilon", "0.001"]
    assert main(args + ["--gap-threshold", "1.0"]) == 0
    capsys.readouterr()
    assert main(args + ["--gap-threshold", "1e-9"]) == 1
    assert "above the threshold" in capsys.readouterr().err


def test_limits_rejects_zero_epsilon(files, capsys):
    assert main(["limits", files["g0"], files["g1"], "--epsilon", "0"]) == 2


# ------------------------------------------------------------ sinkhorn


def test_sinkhorn_closes_the_gap_on_one_pair(files, capsys):
    code = main(
        ["sinkhorn", files["g0"], files["g1"], "--epsilon", "2", "--grid", "128"]
    )
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    rel_gap = float(rows[0][header.index("rel_gap")])
    assert rel_gap < 0.02
    assert rows[0][header.index("converged")] == "true"


def test_sinkhorn_rejects_high_dimensions_and_big_2d_grids(files, capsys):
    g3 = files["write"](
        "g3.json", {"mean": [0.0] * 3, "cov": np.eye(3).tolist()}
    )
    assert main(["sinkhorn", g3, g3, "--epsilon", "1"]) == 2
    g2 = files["write"](
        "g2.json", {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}
    )
    assert main(["sinkhorn", g2, g2, "--epsilon", "1", "--grid", "256"]) == 2


# ------------------------------------------------------------ validate


def test_validate_battery_passes(files, capsys):
    code = main(["validate", "--grid", "128"])
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert header == ["check", "passed", "observed", "tolerance", "detail"]
    assert all(row[1] == "true" for row in rows)
    names = {row[0] for row in rows}
    assert {"duality_strong", "riccati_residual", "sinkhorn_self"} <= names


def test_validate_accepts_custom_fixtures(files, capsys):
    fixtures = files["write"](
        "fixtures.json",
        {
            "pairs": [
                {
                    "g0": {"mean": [0.0], "cov": [[1.0]]},
                    "g1": {"mean": [0.0], "cov": [[1.0]]},
                    "epsilon": 2.0,
                }
            ]
        },
    )
    code = main(["validate", "--grid", "128", "--fixtures", fixtures])
    out = capsys.readouterr().out
    assert code == 0
    assert "oracle_pair_0" in out
    assert "oracle_pair_1" not in out


def test_validate_rejects_corrupt_fixtures(files, capsys):
    bad = files["write"]("badfix.json", {"pairs": [{"g0": {}}]})
    assert main(["validate", "--fixtures", bad]) == 2
    nolist = files["write"]("nolist.json", {"wrong": True})
    assert main(["validate", "--fixtures", nolist]) == 2


# ------------------------------------------------------------ misc


def test_unknown_command_is_a_usage_error(capsys):
    with pytest.raises(SystemExit):
        main(["frobnicate"])
