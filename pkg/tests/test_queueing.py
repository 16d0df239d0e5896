"""Queueing: Erlang C closed forms, simulation physics, sweep plumbing."""

import math

import numpy as np
import pytest

from redisco.errors import ConfigError, UnstableQueueError
from redisco.queueing import (
    EmpiricalArrivals,
    ExponentialArrivals,
    QueueResult,
    QueueScenario,
    SimConfig,
    SweepRow,
    erlang_c,
    gmk_simulate,
    m7_expected_wait,
    mmk_wq,
    staffing_sweep,
    sweep_to_csv,
)

FAST = SimConfig(n_events=4000, n_reps=6, seed=11)


# ---------------------------------------------------------------------------
# analytic route
# ---------------------------------------------------------------------------

def test_erlang_c_single_server_is_rho():
    rng = np.random.default_rng(1)
    for _ in range(25):
        mu = float(rng.uniform(0.5, 300.0))
        rho = float(rng.uniform(0.01, 0.99))
        lam = rho * mu
        assert erlang_c(lam, mu, 1) == pytest.approx(rho, rel=1e-12)


def test_erlang_c_two_servers_closed_form():
    # M/M/2: C = 2 rho^2 / (1 + rho)
    rng = np.random.default_rng(2)
    for _ in range(25):
        mu = float(rng.uniform(0.5, 300.0))
        rho = float(rng.uniform(0.01, 0.99))
        lam = 2.0 * rho * mu
        assert erlang_c(lam, mu, 2) == pytest.approx(
            2.0 * rho * rho / (1.0 + rho), rel=1e-12
        )


def test_erlang_c_validation():
    with pytest.raises(UnstableQueueError):
        erlang_c(10.0, 1.0, 10)
    with pytest.raises(ConfigError):
        erlang_c(0.0, 1.0, 1)
    with pytest.raises(ConfigError):
        erlang_c(1.0, 0.0, 2)
    with pytest.raises(ConfigError):
        erlang_c(1.0, 1.0, 0)


def test_mmk_wq_single_server_closed_form():
    # M/M/1: W_q = rho / (mu - lam), converted to working days
    rng = np.random.default_rng(3)
    for _ in range(25):
        mu = float(rng.uniform(1.0, 500.0))
        rho = float(rng.uniform(0.05, 0.95))
        lam = rho * mu
        want = rho / (mu - lam) * 250.0
        assert mmk_wq(lam, mu, 1).wq_days == pytest.approx(want, rel=1e-12)
    # the half-load unit case: exactly one year of queueing delay
    assert mmk_wq(0.5, 1.0, 1).wq_days == pytest.approx(250.0, rel=1e-12)


def test_mmk_wq_result_structure():
    r = mmk_wq(100.0, 30.0, 5)
    assert r.method == "analytic_mmk"
    assert r.ci_half_width_days == 0.0
    assert r.replication_means_days == ()
    assert math.isnan(r.little_ratio)
    assert r.busy_percent == pytest.approx(100.0 * 100.0 / 150.0)
    assert r.m7_days == pytest.approx(r.wq_days + 250.0 / 30.0)


def test_mmk_wq_decreases_in_k():
    waits = [mmk_wq(90.0, 20.0, k).wq_days for k in range(5, 12)]
    assert all(a > b for a, b in zip(waits, waits[1:]))
    assert all(w >= 0.0 for w in waits)


def test_m7_accepts_result_or_days():
    r = mmk_wq(50.0, 125.0, 2)
    assert m7_expected_wait(r, 125.0) == pytest.approx(r.wq_days + 2.0)
    assert m7_expected_wait(1.0, 125.0) == pytest.approx(3.0)
    assert m7_expected_wait(0.0, 250.0) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        m7_expected_wait(-1.0, 125.0)
    with pytest.raises(ConfigError):
        m7_expected_wait(math.inf, 125.0)
    with pytest.raises(ConfigError):
        m7_expected_wait(1.0, 0.0)


def test_queue_result_validates_method():
    with pytest.raises(ConfigError, match="unknown queue method"):
        QueueResult(1.0, 0.0, 3.0, 50.0, math.nan, (), "guesswork")


# ---------------------------------------------------------------------------
# arrival processes and config validation
# ---------------------------------------------------------------------------

def test_arrival_process_validation():
    with pytest.raises(ConfigError):
        ExponentialArrivals(0.0)
    with pytest.raises(ConfigError):
        EmpiricalArrivals(())
    with pytest.raises(ConfigError):
        EmpiricalArrivals((0.5, 0.0))


def test_empirical_rate_is_inverse_mean_gap():
    arr = EmpiricalArrivals((0.5, 0.25, 0.25))
    assert arr.rate == pytest.approx(3.0)
    rng = np.random.default_rng(0)
    draws = arr.draw_gaps(rng, 1000)
    assert set(np.unique(draws)) <= {0.25, 0.5}


def test_sim_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(n_events=50)
    with pytest.raises(ConfigError):
        SimConfig(n_reps=1)
    with pytest.raises(ConfigError):
        SimConfig(warmup_fraction=0.95)
    with pytest.raises(ConfigError):
        SimConfig(working_days_per_year=0.0)
    with pytest.raises(ConfigError):
        QueueScenario(ExponentialArrivals(10.0), mu=0.0, k=2)
    with pytest.raises(ConfigError):
        QueueScenario(ExponentialArrivals(10.0), mu=1.0, k=0)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def test_gmk_deterministic_given_seed():
    scenario = QueueScenario(ExponentialArrivals(8.0), mu=2.0, k=6)
    a = gmk_simulate(scenario, FAST)
    b = gmk_simulate(scenario, FAST)
    assert a == b  # bit-identical, including every replication mean
    c = gmk_simulate(scenario, SimConfig(n_events=4000, n_reps=6, seed=12))
    assert c.wq_days != a.wq_days


def test_gmk_result_structure():
    scenario = QueueScenario(ExponentialArrivals(8.0), mu=2.0, k=6)
    r = gmk_simulate(scenario, FAST)
    assert r.method == "simulated_gmk"
    assert len(r.replication_means_days) == FAST.n_reps
    assert r.wq_days == pytest.approx(float(np.mean(r.replication_means_days)))
    assert r.ci_half_width_days > 0.0
    assert r.m7_days == pytest.approx(r.wq_days + 250.0 / 2.0)
    assert r.busy_percent == pytest.approx(100.0 * 8.0 / 12.0)


def test_gmk_exponential_matches_analytic():
    scenario = QueueScenario(ExponentialArrivals(8.0), mu=2.0, k=6)
    config = SimConfig(n_events=40_000, n_reps=10, seed=5)
    sim = gmk_simulate(scenario, config)
    analytic = mmk_wq(8.0, 2.0, 6)
    assert abs(sim.wq_days - analytic.wq_days) <= sim.ci_half_width_days
    assert 0.95 <= sim.little_ratio <= 1.05


def test_gmk_near_empty_queue_bound():
    # utilization 0.1: waits far below half a service time
    scenario = QueueScenario(ExponentialArrivals(1.0), mu=10.0, k=1)
    r = gmk_simulate(scenario, FAST)
    assert r.wq_days < 0.5 / 10.0 * 250.0


def test_gmk_instant_service_degenerate(recwarn):
    scenario = QueueScenario(ExponentialArrivals(10.0), mu=1e7, k=2)
    r = gmk_simulate(scenario, FAST)
    assert r.wq_days == pytest.approx(0.0, abs=1e-3)
    assert math.isnan(r.little_ratio)
    assert not recwarn.list  # an empty queue is not a quality problem


def test_gmk_unstable_raises():
    with pytest.raises(UnstableQueueError, match="no steady state"):
        gmk_simulate(QueueScenario(ExponentialArrivals(10.0), mu=2.0, k=5), FAST)
    with pytest.raises(UnstableQueueError):
        gmk_simulate(QueueScenario(EmpiricalArrivals((0.01,)), mu=2.0, k=5), FAST)


def test_gmk_deterministic_arrivals_wait_less_than_poisson():
    # D/M/k: zero arrival variability cuts the queueing delay well below M/M/k
    gap = 1.0 / 8.0
    scenario = QueueScenario(EmpiricalArrivals((gap,)), mu=2.0, k=6)
    sim = gmk_simulate(scenario, FAST)
    analytic = mmk_wq(8.0, 2.0, 6)
    assert sim.wq_days + sim.ci_half_width_days < analytic.wq_days


# ---------------------------------------------------------------------------
# staffing sweep
# ---------------------------------------------------------------------------

def test_staffing_sweep_rows_and_csv():
    arrivals = ExponentialArrivals(8.0)
    rows = staffing_sweep(arrivals, 2.0, [7, 5, 4, 5, 3], config=FAST)
    assert [r.k for r in rows] == [3, 4, 5, 7]  # sorted, deduplicated
    unstable = rows[0]
    assert unstable.wq_gmk_days is None
    assert unstable.wq_mmk_days is None
    assert unstable.busy_percent == pytest.approx(100.0 * 8.0 / 6.0)
    stable = rows[2]
    assert stable.wq_gmk_days is not None
    assert stable.wq_mmk_days == pytest.approx(mmk_wq(8.0, 2.0, 5).wq_days)

    csv_text = sweep_to_csv(rows)
    lines = csv_text.strip().split("\n")
    assert lines[0] == "k,wq_gmk_days,wq_gmk_ci,wq_mmk_days,busy_percent"
    assert lines[1].startswith("3,,,,")  # empty cells for the unstable row
    cells = lines[3].split(",")
    assert float(cells[1]) == stable.wq_gmk_days  # repr round-trips


def test_staffing_sweep_per_k_seeds_independent_of_range():
    arrivals = ExponentialArrivals(8.0)
    full = staffing_sweep(arrivals, 2.0, [5, 6], config=FAST)
    solo = staffing_sweep(arrivals, 2.0, [6], config=FAST)
    assert full[1] == solo[0]


def test_staffing_sweep_validation():
    with pytest.raises(ConfigError):
        staffing_sweep(ExponentialArrivals(8.0), 2.0, [], config=FAST)
    with pytest.raises(ConfigError):
        staffing_sweep(ExponentialArrivals(8.0), 2.0, [0, 3], config=FAST)
