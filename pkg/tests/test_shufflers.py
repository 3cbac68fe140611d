import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shuffle_sgd_lab.constructions import concave_pair_block, twotype_block
from shuffle_sgd_lab.oracles import OracleParams, closed_form_threetype, closed_form_twotype
from shuffle_sgd_lab.quadratic import FiniteSumProblem, QuadraticComponent
from shuffle_sgd_lab.shufflers import (
    Kind,
    RunConfig,
    ShuffleStrategy,
    epoch_order,
    exhaustive_prefix_bounds,
    herding_at_opt_strategy,
    herding_order,
    prefix_bound,
    recommended_step_size,
    run,
    schedule_log_term,
)


def test_strategy_validation():
    with pytest.raises(ValueError):
        ShuffleStrategy(Kind.FIXED_PERMUTATION)
    with pytest.raises(ValueError):
        ShuffleStrategy.fixed([0, 0, 1])
    with pytest.raises(ValueError):
        ShuffleStrategy(Kind.IGD, sigma=(0, 1))
    assert not ShuffleStrategy.with_replacement(1).is_permutation
    assert ShuffleStrategy.random_reshuffle(4).label() == "rr:4"


def test_epoch_orders():
    n = 7
    assert epoch_order(ShuffleStrategy.igd(), 3, n).tolist() == list(range(n))
    rr = ShuffleStrategy.random_reshuffle(5)
    a, b = epoch_order(rr, 1, n), epoch_order(rr, 2, n)
    assert sorted(a.tolist()) == list(range(n)) and a.tolist() != b.tolist()
    ss = ShuffleStrategy.single_shuffle(5)
    assert epoch_order(ss, 1, n).tolist() == epoch_order(ss, 9, n).tolist()
    wr = epoch_order(ShuffleStrategy.with_replacement(5), 1, 1000)
    assert len(set(wr.tolist())) < 1000  # repeats are expected
    with pytest.raises(ValueError):
        epoch_order(ShuffleStrategy.fixed([1, 0]), 1, 3)


def test_run_matches_twotype_closed_form():
    p = twotype_block(2.0, 1.0, 10, 1.0, 4.0)
    rec = run(p, ShuffleStrategy.igd(), RunConfig(0.03, 15, [0.7]))
    ref = closed_form_twotype(OracleParams(2.0, 1.0, 10, 0.03, 15, 0.7))
    assert rec.final[0] == pytest.approx(ref, rel=1e-12)
    assert rec.epoch_starts.shape == (16, 1)
    assert not rec.diverged and rec.status == "ok"


def test_run_matches_threetype_closed_form():
    p = twotype_block(2.0, 1.0, 9, 1.0, 4.0)
    rec = run(p, ShuffleStrategy.igd(), RunConfig(0.03, 6, [0.2]))
    assert rec.final[0] == pytest.approx(closed_form_threetype(OracleParams(2.0, 1.0, 9, 0.03, 6, 0.2)), rel=1e-12)


def test_scalar_fast_path_equals_matrix_path():
    p = twotype_block(2.0, 1.0, 8, 1.0, 4.0)
    cfg = RunConfig(0.05, 5, [0.3])
    fast = run(p, ShuffleStrategy.random_reshuffle(2), cfg)
    slow = run(p, ShuffleStrategy.random_reshuffle(2), RunConfig(0.05, 5, [0.3], record_every_iterate=True))
    np.testing.assert_allclose(fast.epoch_starts, slow.epoch_starts, rtol=1e-14)
    assert slow.full_trace.shape == (41, 1)  # x0 plus every step


def test_run_is_deterministic():
    p = concave_pair_block(100.0, 1.0, 10, 1.0, 100.0)
    cfg = RunConfig(0.001, 20, [0.0])
    a = run(p, ShuffleStrategy.with_replacement(11), cfg)
    b = run(p, ShuffleStrategy.with_replacement(11), cfg)
    assert a.to_csv() == b.to_csv()


def test_divergence_keeps_last_finite_iterate():
    p = concave_pair_block(1e4, 1.0, 100, 1.0, 1e4)
    rec = run(p, ShuffleStrategy.igd(), RunConfig(1e-2, 50, [0.0]))
    assert rec.diverged and rec.status == "diverged"
    assert np.all(np.isfinite(rec.final))
    assert len(rec.epoch_starts) < 51


def test_run_csv_layout():
    p = twotype_block(1.0, 1.0, 4, 1.0, 2.0)
    text = run(p, ShuffleStrategy.igd(), RunConfig(0.1, 2, [0.0])).to_csv()
    lines = text.splitlines()
    assert lines[0] == "epoch,gap,x_1"
    assert lines[1] == "0,0.0,0.0"
    assert lines[-1].startswith("final,")
    assert len(lines) == 5


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(-0.1, 3, [0.0])
    with pytest.raises(ValueError):
        RunConfig(0.1, -1, [0.0])
    p = twotype_block(1.0, 1.0, 4, 1.0, 2.0)
    with pytest.raises(ValueError):
        run(p, ShuffleStrategy.igd(), RunConfig(0.1, 1, [0.0, 0.0]))


# ---------------------------------------------------------------- herding


def test_herding_alternates_plus_minus():
    v = np.array([[1.0]] * 3 + [[-1.0]] * 3)
    sigma, H = herding_order(v)
    assert sigma == (0, 3, 1, 4, 2, 5)
    assert H == pytest.approx(1.0)


def test_herding_preconditions():
    with pytest.raises(ValueError):
        herding_order(np.array([[2.0], [-2.0]]))
    with pytest.raises(ValueError):
        herding_order(np.array([[1.0], [0.5]]))


def test_exhaustive_bounds_small_case():
    v = np.array([[1.0], [1.0], [-1.0], [-1.0]])
    best, worst = exhaustive_prefix_bounds(v)
    assert best == pytest.approx(1.0)
    assert worst == pytest.approx(2.0)
    assert prefix_bound(v, (0, 1, 2, 3)) == pytest.approx(2.0)


def random_zero_sum(rng, n, d):
    z = rng.normal(size=(n, d))
    z -= z.mean(axis=0)
    return z / np.linalg.norm(z, axis=1).max()


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_herding_between_best_and_worst(n, d, seed):
    z = random_zero_sum(np.random.default_rng(seed), n, d)
    sigma, H = herding_order(z)
    best, worst = exhaustive_prefix_bounds(z)
    assert sorted(sigma) == list(range(n))
    assert best - 1e-12 <= H <= worst + 1e-12
    assert H == pytest.approx(prefix_bound(z, sigma))


def test_herding_at_opt_uses_gradients_at_minimizer():
    p = twotype_block(1.0, 2.0, 6, 1.0, 1.0)
    s = herding_at_opt_strategy(p)
    assert s.kind == Kind.HERDING_AT_OPTIMUM
    assert s.sigma == (0, 3, 1, 4, 2, 5)
    # identical Hessians: gradients at any x0 minus the mean give the same order
    s2 = herding_at_opt_strategy(p, use_initial_point=True, x0=[4.0])
    assert s2.sigma == s.sigma


def test_herding_zero_gradients_gives_identity():
    comps = [QuadraticComponent(np.array([[1.0]]), np.array([0.0]))] * 3
    s = herding_at_opt_strategy(FiniteSumProblem.from_components(comps))
    assert s.sigma == (0, 1, 2) and s.h_achieved == 0.0


# ---------------------------------------------------------------- schedules


def test_lower_bound_step_is_boundary():
    assert recommended_step_size("small-lb-sc", {"mu": 2.0, "n": 5, "K": 10}) == pytest.approx(0.01)


def test_upper_bound_schedules():
    base = {"mu": 1.0, "L": 100.0, "n": 10, "K": 50, "G": 1.0, "dist": 3.0, "gap0": 2.0, "H": 1.0}
    # small-ub-idhess: l = max(log(L |x0 - x*|/G*), 1) = log 300
    assert schedule_log_term("small-ub-idhess", base) == pytest.approx(math.log(300.0))
    assert recommended_step_size("small-ub-idhess", base) == pytest.approx(math.log(300.0) / 500)
    # small-ub-scvx: l = log(D mu K/(sqrt(kappa) G*)) = log 15, step doubled
    assert recommended_step_size("small-ub-scvx", base) == pytest.approx(2 * math.log(15.0) / 500)
    assert schedule_log_term("herding-at-opt", base) == pytest.approx(math.log(150.0))
    assert schedule_log_term("large-ub-generalizedgrad", base) == pytest.approx(max(math.log(2 * 2500 / 1e4), 1.0))
    with pytest.raises(KeyError):
        recommended_step_size("no-such-theorem", base)


def test_log_term_floor_is_one():
    p = {"mu": 1.0, "L": 1.0, "n": 1, "K": 1, "G": 1.0, "dist": 1e-9}
    assert schedule_log_term("small-ub-idhess", p) == 1.0
