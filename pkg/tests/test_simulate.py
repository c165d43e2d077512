"""Monte Carlo engine: seeding, accounting, summaries, paired comparison."""

import pytest

from aoi_sched.model import ModelParams, fresh_state, new_state
from aoi_sched.policies import make_policy
from aoi_sched.simulate import (
    compare_policies,
    improvement_pct,
    run_episode,
    run_experiment,
)


def test_horizon_one_is_the_initial_cost():
    params = ModelParams(2, 1, 0.9, (0.5, 0.5), 1)
    x0 = new_state((0, 2), (4, 3))
    r = run_episode(make_policy("delta", params), params, x0, seed=0)
    assert r.total_cost == 7
    assert r.aaoi_per_source == (4.0, 3.0)


def test_deterministic_instance_total():
    # p=q=1 pins every transition; two slots at h=1 each
    params = ModelParams(1, 1, 1.0, (1.0,), 2)
    r = run_episode(make_policy("delta", params), params, fresh_state(1), seed=5)
    assert r.total_cost == 2


def test_zero_success_probability_closed_form():
    """With no deliveries every destination age climbs arithmetically."""
    params = ModelParams(3, 1, 0.0, (0.3, 0.7, 0.9), 10)
    x0 = fresh_state(3)
    expect = 3 * 10 + 3 * 10 * 9 // 2
    for name in ("delta", "pi", "rr", "rr-strict"):
        for seed in range(5):
            r = run_episode(make_policy(name, params), params, x0, seed=seed)
            assert r.total_cost == expect


def test_same_seed_reproduces_bitwise():
    params = ModelParams(2, 1, 0.6, (0.5, 0.5), 6)
    pol = make_policy("delta", params)
    a = run_episode(pol, params, fresh_state(2), seed=123)
    b = run_episode(pol, params, fresh_state(2), seed=123)
    assert a == b


def test_known_seed_regression():
    # frozen stream anchor; a draw-order change must trip this
    params = ModelParams(2, 1, 0.6, (0.5, 0.5), 6)
    r = run_episode(make_policy("delta", params), params, fresh_state(2), seed=123)
    assert r.total_cost == 34


def test_aaoi_consistent_with_total():
    params = ModelParams(2, 1, 0.6, (0.5, 0.5), 6)
    r = run_episode(make_policy("pi", params), params, fresh_state(2), seed=9)
    assert sum(r.aaoi_per_source) * params.horizon == pytest.approx(r.total_cost)


def test_experiment_requires_replications():
    params = ModelParams(2, 1, 0.6, (0.5, 0.5), 6)
    with pytest.raises(ValueError):
        run_experiment(make_policy("delta", params), params, fresh_state(2), 1, 0)


def test_stderr_shrinks_with_replications():
    params = ModelParams(2, 1, 0.6, (0.5, 0.5), 20)
    pol = make_policy("delta", params)
    x0 = fresh_state(2)
    s1 = run_experiment(pol, params, x0, 200, 0)
    s2 = run_experiment(pol, params, x0, 800, 0)
    # quadrupling replications should halve the standard error, loosely
    ratio = s1.stderr_total_cost / s2.stderr_total_cost
    assert 2.0 * 0.7 <= ratio <= 2.0 * 1.3


def test_improvement_pct_convention():
    assert improvement_pct(90.0, 100.0) == pytest.approx(10.0)
    assert improvement_pct(100.0, 90.0) == pytest.approx(-100.0 / 9.0)
    assert improvement_pct(1.0, 0.0) == 0.0


def test_comparison_shares_episode_seeds():
    params = ModelParams(2, 1, 0.6, (0.5, 0.5), 6)
    pols = [make_policy("delta", params), make_policy("delta", params)]
    comp = compare_policies(pols, params, fresh_state(2), 50, 11)
    assert comp.improvements_vs_first == (0.0, 0.0)
    assert comp.summaries[0].mean_total_cost == comp.summaries[1].mean_total_cost


def test_comparison_needs_two_policies():
    params = ModelParams(2, 1, 0.6, (0.5, 0.5), 6)
    with pytest.raises(ValueError):
        compare_policies([make_policy("delta", params)], params, fresh_state(2), 10, 0)
