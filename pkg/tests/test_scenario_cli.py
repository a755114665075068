import csv
import math

import numpy as np
import pytest

from gvfpath import EllipsePath, IdentityMap, Region
from gvfpath.cli import (
    basin_sweep,
    compare_controllers,
    export_field_grid,
    first_touch_index,
    main,
    run_scenario,
    write_critical_report,
)
from gvfpath.scenario import (
    ConfigError,
    bundled_config_text,
    bundled_scenario,
    parse_scenario,
    serialize_scenario,
)

BUNDLED = ["ellipse_experiment.cfg", "cassini_experiment.cfg", "comparison_experiment.cfg"]

SMALL_SCENARIO = """
[scenario]
name = smoke
controller = gvf
u_r = 50.0
dt = 0.01
t_max = 4.0

[path]
kind = ellipse
x0 = 600.0
y0 = 350.0
R = 400.0
p = 1.0
q = 0.5
k_s = 1e-05

[error_map]
kind = identity

[controller.gvf]
k_n = 3.0
k_delta = 2.0

[initial_poses]
a = 980.0 350.0 -1.4
"""


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_round_trip(name):
    text = bundled_config_text(name)
    scn = parse_scenario(text)
    assert serialize_scenario(scn) == text          # canonical byte form
    assert parse_scenario(serialize_scenario(scn)) == scn


def test_bundled_experiment_parameters():
    scn = bundled_scenario("ellipse_experiment.cfg")
    assert scn.path == EllipsePath(x0=600.0, y0=350.0, R=400.0, p=1.0, q=0.5,
                                   k_s=1e-5)
    assert scn.errmap == IdentityMap()
    assert scn.gvf.k_n == 3.0 and scn.gvf.k_delta == 2.0 and scn.u_r == 50.0
    assert scn.dt == 0.005 and scn.t_max == 120.0
    assert [label for label, _ in scn.poses] == ["a", "b", "c", "d"]
    assert scn.poses[0][1].x == 472.0

    cmp_scn = bundled_scenario("comparison_experiment.cfg")
    assert cmp_scn.los.lookahead == 70.0 and cmp_scn.los.k_los == 2.0
    assert cmp_scn.ngl.radius == 40.0 and cmp_scn.ngl.k_r == 2.0
    start = cmp_scn.poses[0][1]
    assert (start.x, start.y, start.alpha) == (200.0, 450.0, 0.0278)


@pytest.mark.parametrize("mutation,needle", [
    ("[scenario]", "section headers"),       # configparser points at the line
    ("[initial_poses]\na = 980.0 350.0 -1.4", "initial_poses"),
    ("[error_map]\nkind = identity", "error_map"),
    ("kind = ellipse", "path"),
])
def test_parse_errors_name_the_offender(mutation, needle):
    broken = SMALL_SCENARIO.replace(mutation, "")
    with pytest.raises(ConfigError) as err:
        parse_scenario(broken)
    assert needle in str(err.value)


def test_parse_rejects_bad_values():
    with pytest.raises(ConfigError, match="u_r"):
        parse_scenario(SMALL_SCENARIO.replace("u_r = 50.0", "u_r = fast"))
    with pytest.raises(ConfigError, match="initial_poses"):
        parse_scenario(SMALL_SCENARIO.replace("980.0 350.0 -1.4", "980.0 350.0"))
    with pytest.raises(ConfigError, match="controller"):
        parse_scenario(SMALL_SCENARIO.replace("controller = gvf",
                                              "controller = pid"))
    with pytest.raises(ConfigError, match="negative|R"):
        parse_scenario(SMALL_SCENARIO.replace("R = 400.0", "R = -400.0"))


def test_run_scenario_outputs_are_deterministic(tmp_path):
    scn = parse_scenario(SMALL_SCENARIO)
    a, b = tmp_path / "a", tmp_path / "b"
    run_scenario(scn, a)
    run_scenario(scn, b)
    for name in ("smoke_a.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    header = (a / "smoke_a.csv").read_text().splitlines()[0]
    assert header == "t,x,y,alpha,e,delta,omega_d,omega,dist_path"


def test_run_scenario_with_los_controller(tmp_path):
    text = (SMALL_SCENARIO
            .replace("controller = gvf", "controller = los")
            .replace("t_max = 4.0", "t_max = 2.0")
            + "\n[controller.los]\nlookahead = 70.0\nk_los = 2.0\n")
    scn = parse_scenario(text)
    summaries = run_scenario(scn, tmp_path)
    assert len(summaries) == 1
    assert (tmp_path / "smoke_a.csv").exists()


def test_error_map_with_power_round_trips():
    text = SMALL_SCENARIO.replace("kind = identity",
                                  "kind = arctan_power\np = 2.0")
    scn = parse_scenario(text)
    from gvfpath import ArctanPower
    assert scn.errmap == ArctanPower(2.0)
    assert parse_scenario(serialize_scenario(scn)) == scn


def test_compare_same_controller_twice_identical(tmp_path):
    text = SMALL_SCENARIO + "\n[compare]\ncontrollers = gvf gvf\n"
    scn = parse_scenario(text)
    rows = compare_controllers(scn, tmp_path)
    assert len(rows) == 2
    assert rows[0] == rows[1]
    gvf_bytes = (tmp_path / "compare_gvf.csv").read_bytes()
    assert len(gvf_bytes) > 0


def test_field_grid_ellipse_flags_center(tmp_path, ellipse, identity):
    out = tmp_path / "grid.csv"
    flagged = export_field_grid(ellipse, identity, 3.0,
                                Region(0.0, 1280.0, 0.0, 720.0), 40, 40, out)
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 1600
    assert flagged == 1
    bad = [r for r in rows if r["regular"] == "0"]
    assert len(bad) == 1
    assert math.hypot(float(bad[0]["x"]) - 600.0, float(bad[0]["y"]) - 350.0) < 20.0
    good = [r for r in rows if r["regular"] == "1"]
    norms = [math.hypot(float(r["m_d_x"]), float(r["m_d_y"])) for r in good]
    assert max(abs(n - 1.0) for n in norms) < 1e-9


def _clusters(points, radius):
    points = [tuple(p) for p in points]
    seen, groups = set(), 0
    for p in points:
        if p in seen:
            continue
        groups += 1
        stack = [p]
        while stack:
            q = stack.pop()
            if q in seen:
                continue
            seen.add(q)
            stack.extend(r for r in points
                         if r not in seen
                         and math.hypot(r[0] - q[0], r[1] - q[1]) <= radius)
    return groups


def test_field_grid_cassini_three_neighborhoods(tmp_path, cassini, identity):
    out = tmp_path / "grid.csv"
    export_field_grid(cassini, identity, 3.0, Region(0.0, 1280.0, 0.0, 720.0),
                      100, 100, out)
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 10000
    bad = [(float(r["x"]), float(r["y"])) for r in rows if r["regular"] == "0"]
    # Flagged nodes cluster into one neighborhood per critical point.
    assert _clusters(bad, radius=20.0) == 3


def test_field_grid_line_all_regular(tmp_path, line_y0, identity):
    out = tmp_path / "grid.csv"
    flagged = export_field_grid(line_y0, identity, 3.0,
                                Region(-100.0, 100.0, -100.0, 100.0), 10, 10, out)
    assert flagged == 0
    rows = list(csv.DictReader(open(out)))
    assert all(r["regular"] == "1" for r in rows)


def test_first_touch_index_logic():
    e = np.array([0.5, 0.2, -0.1, -0.2])
    d = np.array([9.0, 9.0, 9.0, 9.0])
    assert first_touch_index(e, d) == 2
    assert first_touch_index(np.array([1.0, 0.5]), np.array([3.0, 0.3])) == 1
    assert first_touch_index(np.array([1.0, 0.5]), np.array([3.0, 3.0])) is None


def test_basin_sweep_small_grid(tmp_path):
    text = SMALL_SCENARIO + (
        "\n[basin]\nnx = 5\nny = 5\nheadings = 2\nt_max = 200.0\n"
        "region = 200.0 1000.0 100.0 600.0\n")
    scn = parse_scenario(text)
    rep = basin_sweep(scn, tmp_path / "basin.csv")
    # The 5x5 grid puts one node on the critical point itself; it is excluded
    # from the sweep for both headings.
    assert rep.total == 48
    assert set(rep.fractions) <= {"converged_to_path", "reached_critical_set"}
    assert rep.fractions.get("converged_to_path", 0.0) > 0.9
    lines = (tmp_path / "basin.csv").read_text().splitlines()
    assert len(lines) == rep.total + 1


def test_basin_sweep_grid_inside_critical_ball_is_empty(tmp_path):
    # Starts inside the critical-set neighborhood are excluded up front, so a
    # grid entirely within it yields an empty sweep.
    text = SMALL_SCENARIO + (
        "\n[basin]\nnx = 3\nny = 3\nheadings = 1\nt_max = 10.0\n"
        "region = 599.7 600.3 349.7 350.3\n")
    rep = basin_sweep(parse_scenario(text), tmp_path / "basin.csv")
    assert rep.total == 0
    assert rep.fractions == {}


def test_critical_report_file(tmp_path):
    scn = parse_scenario(SMALL_SCENARIO)
    points = write_critical_report(scn, tmp_path / "crit.txt")
    text = (tmp_path / "crit.txt").read_text()
    assert len(points) == 1
    assert "classification = repulsive" in text
    assert "e_c = 1.6" in text


def test_cli_main_happy_and_error_paths(tmp_path, capsys):
    cfg = tmp_path / "smoke.cfg"
    cfg.write_text(SMALL_SCENARIO)
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "run")]) == 0
    assert (tmp_path / "run" / "summary.csv").exists()

    assert main(["simulate", str(tmp_path / "missing.cfg")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text(SMALL_SCENARIO.replace("kind = ellipse", "kind = moebius"))
    assert main(["simulate", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "error:" in err

    grid_cfg = tmp_path / "nogrid.cfg"
    grid_cfg.write_text(SMALL_SCENARIO)
    assert main(["field", str(grid_cfg), "-o", str(tmp_path / "fg")]) == 2


def test_cli_check_passes():
    assert main(["check"]) == 0
