import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shuffle_sgd_lab import bench
from shuffle_sgd_lab.bench import (
    AssumptionRefusal,
    CoverageError,
    SweepSpec,
    check_gap_properties,
    default_grid,
    default_upper_instance,
    lower_bound_check,
    parse_gap_csv,
    parse_trajectory_csv,
    rate_fit,
    reproduce_fig_trajectory,
    uncovered_intervals,
    upper_bound_check,
)
from shuffle_sgd_lab.constructions import ConstructionSpec, build, rotation
from shuffle_sgd_lab.shufflers import ShuffleStrategy

SMALL = ConstructionSpec("small-lb-idhess", 4, 20.0, 5)


# ---------------------------------------------------------------- grids


def test_default_grid_covers_every_interval():
    intervals = build(SMALL).regime_intervals
    grid = default_grid(intervals)
    assert uncovered_intervals(grid, intervals) == []
    assert all(b > a for a, b in zip(grid, grid[1:]))


def test_sparse_grid_is_refused():
    with pytest.raises(CoverageError) as err:
        lower_bound_check("small-lb-idhess", SMALL, SweepSpec((1e-3, 1e-2, 1e-1)))
    assert len(err.value.uncovered) == 3


def test_empty_interval_is_skipped():
    assert default_grid([(1.0, 0.5), (1.0, 2.0)], per_interval=4) == tuple(np.geomspace(1.0, 2.0, 5).tolist())


@pytest.mark.parametrize("grid", [(), (0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (1.0, math.inf)])
def test_sweep_spec_validation(grid):
    with pytest.raises(ValueError):
        SweepSpec(grid)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-6, 1e3), min_size=2, max_size=30, unique=True))
def test_densified_grid_is_superset(pts):
    sweep = SweepSpec(tuple(sorted(pts)))
    dense = sweep.densified()
    assert set(sweep.eta_grid) <= set(dense.eta_grid)
    assert len(dense.eta_grid) == 2 * len(sweep.eta_grid) - 1


def test_densifying_never_raises_the_minimum():
    base = SweepSpec(default_grid(build(SMALL).regime_intervals), (SMALL.K,))
    a = lower_bound_check("small-lb-idhess", SMALL, base)
    b = lower_bound_check("small-lb-idhess", SMALL, base.densified())
    assert b.measured_inf_gap <= a.measured_inf_gap * (1 + 1e-12)


def test_parallel_matches_serial(monkeypatch):
    serial = lower_bound_check("small-lb-idhess", SMALL).to_json()
    monkeypatch.setenv(bench.THREADS_ENV, "2")
    parallel = lower_bound_check("small-lb-idhess", SMALL).to_json()
    assert serial == parallel


# ---------------------------------------------------------------- reports


def test_lower_report_schema():
    rep = lower_bound_check("small-lb-idhess", SMALL)
    d = json.loads(rep.to_json())
    assert d["schema"] == bench.REPORT_SCHEMA
    assert d["kind"] == "lower" and d["pass"] is True
    assert d["margin"] == pytest.approx(d["measured_inf_gap"] / d["analytic_bound"])
    assert set(d["constants"]) == {"small", "moderate", "large"}
    assert rep.to_csv().splitlines()[0] == "eta,gap,diverged"
    assert len(rep.to_csv().splitlines()) == len(d["per_eta_table"]) + 1


# ---------------------------------------------------------------- upper bounds


@pytest.mark.parametrize("tid", bench.EXPLICIT_UPPER)
def test_upper_bounds_hold_on_quick_instances(tid):
    inst = default_upper_instance(tid, quick=True)
    rep = upper_bound_check(tid, inst.problem, inst.strategy, {"K": inst.K, "x0": inst.x0})
    assert rep.passed and rep.margin >= 1.0


def test_refuses_average_theorem():
    inst = default_upper_instance("small-ub-idhess")
    with pytest.raises(AssumptionRefusal) as err:
        upper_bound_check("large-ub-avg", inst.problem, inst.strategy, {"K": 10, "x0": [0.0]})
    assert err.value.assumption == "explicit constants"


def test_refuses_with_replacement():
    inst = default_upper_instance("small-ub-idhess")
    with pytest.raises(AssumptionRefusal, match="permutation"):
        upper_bound_check("small-ub-idhess", inst.problem, ShuffleStrategy.with_replacement(0), {"K": 500, "x0": [5.0]})


def test_refuses_non_identical_hessians():
    b = build(ConstructionSpec("small-lb-sc", 20, 400.0, 5))
    with pytest.raises(AssumptionRefusal) as err:
        upper_bound_check("small-ub-idhess", b.problem, ShuffleStrategy.igd(), {"K": 5, "x0": b.x0})
    assert err.value.assumption == "one-dimensional"


def test_refuses_concave_components_for_scvx():
    b = build(ConstructionSpec("small-lb-concave", 8, 64.0, 4, D=4.0))
    with pytest.raises(AssumptionRefusal, match="strongly convex components"):
        upper_bound_check("small-ub-scvx", b.problem, ShuffleStrategy.igd(), {"K": 1000, "x0": b.x0})


def test_refuses_short_runs():
    inst = default_upper_instance("large-ub-generalizedgrad", quick=True)
    with pytest.raises(AssumptionRefusal, match="epoch condition"):
        upper_bound_check("large-ub-generalizedgrad", inst.problem, inst.strategy, {"K": 10, "x0": inst.x0})


# ---------------------------------------------------------------- rate fits


def test_rate_fit_exact_power_laws():
    K = [10, 20, 40, 80]
    assert rate_fit(K, [3.0 / k for k in K]).log_log_slope == pytest.approx(-1.0, abs=1e-12)
    fit = rate_fit(K, [5.0 / k**2 for k in K])
    assert fit.log_log_slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(5.0), abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0)


def test_rate_fit_errors():
    with pytest.raises(ValueError):
        rate_fit([1, 2], [1.0, 0.5])
    with pytest.raises(ValueError):
        rate_fit([1, 2, 3], [1.0, 0.0, 0.5])
    with pytest.raises(ValueError):
        rate_fit([1, 2, 3], [1.0, 0.5])


def test_sc_gaps_stay_above_bound_across_K():
    # one-sided: the measured IGD gap must dominate the lower bound at each K
    for K in (5, 10, 15):
        rep = lower_bound_check("small-lb-sc", ConstructionSpec("small-lb-sc", 20, 1e3, K))
        assert rep.measured_inf_gap >= rep.analytic_bound


# ---------------------------------------------------------------- figures


@pytest.fixture(scope="module")
def small_traj_spec():
    return ConstructionSpec("small-lb-sc", 500, 1e4, 20)


def test_trajectory_from_origin_drifts_out(small_traj_spec):
    out = parse_trajectory_csv(reproduce_fig_trajectory(small_traj_spec))
    pts = out["points"]
    assert pts.shape == (500 * 20 + 1, 2)
    assert np.all(pts[0] == 0.0)
    assert out["final_radius"] > 0 and out["radius_nondecreasing"]


def test_trajectory_polygon_start_rotates(small_traj_spec):
    pts = parse_trajectory_csv(reproduce_fig_trajectory(small_traj_spec, start="polygon"))["points"]
    R = rotation(2 * math.pi / 500)
    r = np.linalg.norm(pts[0])
    assert np.abs(np.linalg.norm(pts, axis=1) - r).max() <= 1e-9 * r
    np.testing.assert_allclose(pts[1:500], (R @ pts[:499].T).T, atol=1e-9 * r)


def test_trajectory_is_byte_identical(small_traj_spec):
    assert reproduce_fig_trajectory(small_traj_spec) == reproduce_fig_trajectory(small_traj_spec)
    with pytest.raises(ValueError):
        reproduce_fig_trajectory(small_traj_spec, start="corner")
    with pytest.raises(ValueError, match="2/L"):
        reproduce_fig_trajectory(ConstructionSpec("small-lb-sc", 100, 1e4, 20))


def test_gap_csv_round_trip_and_properties():
    rows = bench.gap_comparison_table([75, 200], seeds=4)
    text = bench.gap_table_to_csv(rows, {"n": 100})
    assert text.startswith("# n=100\n")
    assert parse_gap_csv(text) == rows
    props = check_gap_properties(rows)
    assert props.igd_blowup_ok and props.herding_ok


def test_gap_property_checker_on_synthetic_rows():
    rows = [
        (1, "IGD", 100.0, 100.0, 100.0),
        (1, "RR", 2.0, 1.0, 3.0),
        (1, "WR", 2.5, 1.5, 3.5),
        (1, "Herding", 1.0, 1.0, 1.0),
        (2, "IGD", 1.0, 1.0, 1.0),
        (2, "RR", 1.0, 0.9, 1.1),
        (2, "WR", 5.0, 4.0, 6.0),
        (2, "Herding", 2.0, 2.0, 2.0),
    ]
    p = check_gap_properties(rows)
    assert p.igd_blowup == 50.0 and p.igd_blowup_ok
    assert p.rr_wr_band_failures == (2,) and p.herding_failures == (2,)
