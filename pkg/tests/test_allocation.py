import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from vcselnet import allocation
from vcselnet.allocation import SolverConfig
from vcselnet.bia import LinkRates


def make_link(full_rates=None, partial_rates=None):
    fr = np.zeros((0, 2)) if full_rates is None else np.asarray(full_rates, float)
    pr = np.zeros((0, fr.shape[1])) if partial_rates is None else np.asarray(partial_rates, float)
    L = max(fr.shape[1], pr.shape[1])
    fr = fr.reshape(-1, L)
    pr = pr.reshape(-1, L)
    Kf, Kp = len(fr), len(pr)
    return LinkRates(
        num_users=Kf + Kp,
        num_vcsels=L,
        full=np.arange(Kf),
        partial=np.arange(Kf, Kf + Kp),
        outage=np.zeros(0, dtype=np.int64),
        full_rates=fr,
        partial_rates=pr,
        full_capacity=fr.sum(axis=1),
        beta=0.5,
    )


# -- utility --------------------------------------------------------------------


def test_utility_examples():
    assert allocation.utility([[math.e]], [[1.0]], [[1.0]]) == pytest.approx(1.0)
    r = np.array([[1.0, 2.0], [0.5, 3.0]])
    nu = np.full((2, 2), 0.5)
    base = allocation.utility(r, nu, 1.0)
    assert allocation.utility(3.0 * r, nu, 1.0) == pytest.approx(base + 2 * math.log(3.0))
    with pytest.raises(allocation.UserStarved):
        allocation.utility(r, np.array([[0.5, 0.5], [0.0, 0.0]]), 1.0)


# -- full-connectivity share problem ------------------------------------------


def test_symmetric_users_split_equally():
    r = np.tile([1.0, 2.0, 0.5], (4, 1))
    res = allocation.solve_full_inner(r)
    assert np.allclose(res.shares, 0.25, atol=1e-6)
    assert res.utility == pytest.approx(4 * math.log(3.5 / 4), rel=1e-9)


def test_single_user_takes_everything():
    res = allocation.solve_full_inner(np.array([[1.0, 0.3, 2.0]]))
    assert np.allclose(res.shares, 1.0)
    assert res.converged


def test_two_user_pattern_matches_oracle():
    r = np.array([[2.0, 1.0], [1.0, 2.0]])
    res = allocation.solve_full_inner(r)
    _, ref = oracles.pg_full_inner(r)
    assert abs(res.utility - ref) <= 1e-4 * abs(ref) + 1e-12
    assert np.allclose(res.shares, np.eye(2), atol=1e-4)


def test_full_inner_matches_projected_gradient():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        K, L = rng.integers(1, 6), rng.integers(1, 5)
        r = rng.uniform(0.05, 3.0, size=(K, L))
        res = allocation.solve_full_inner(r)
        _, ref = oracles.pg_full_inner(r)
        worst = max(worst, abs(res.utility - ref) / max(abs(ref), 1e-12))
    assert worst <= 1e-4


def test_dual_value_never_rises(rng):
    for _ in range(20):
        r = rng.uniform(0.05, 3.0, size=(rng.integers(2, 6), 4))
        res = allocation.solve_full_inner(r, max_iter=60)
        d = np.diff(res.dual_trace)
        assert np.all(d <= 1e-8 * np.maximum(1.0, np.abs(res.dual_trace[:-1])))


def test_full_inner_feasible(rng):
    r = rng.uniform(0.05, 3.0, size=(5, 4))
    res = allocation.solve_full_inner(r)
    assert np.all(res.shares >= -1e-12)
    assert np.all(res.shares.sum(axis=0) <= 1 + 1e-6)
    assert np.all(res.prices >= 0)


def test_full_inner_rejects_zero_rates():
    with pytest.raises(allocation.UserStarved):
        allocation.solve_full_inner(np.array([[1.0, 0.0]]))


# -- partial-connectivity market ---------------------------------------------


def test_assign_user_side():
    r = np.array([[1.0, 2.0, 0.5], [3.0, 1.0, 1.0], [1.0, 1.0, 0.2]])
    choice, demand = allocation.assign_user_side(r, np.zeros(3))
    assert list(choice) == [1, 0, 0]  # last row ties: lowest index wins
    assert list(demand) == [2, 1, 0]
    choice, _ = allocation.assign_user_side(r, np.array([0.0, 1e9, 0.0]))
    assert 1 not in choice


def test_supply_values():
    assert allocation.supply_vcsel_side(1.0) == 1.0
    assert allocation.supply_vcsel_side(1 + math.log(4)) == pytest.approx(4.0)
    assert allocation.supply_vcsel_side(0.0) == pytest.approx(0.3679, abs=1e-4)


def test_update_eta_examples():
    eta = np.array([0.2, 1.0, 3.0])
    assert np.array_equal(allocation.update_eta(eta, [1, 2, 3], [1, 2, 3], 0.5), eta)
    up = allocation.update_eta(eta, [1, 1, 1], [3, 1, 1], 0.5)
    assert up[0] > eta[0] and up[1] == eta[1]
    assert np.all(allocation.update_eta(eta, [10, 10, 10], [0, 0, 0], 5.0) == 0.0)
    with pytest.raises(ValueError):
        allocation.update_eta(eta, eta, eta, 0.0)


@settings(max_examples=100)
@given(
    st.lists(st.floats(0, 10), min_size=3, max_size=3),
    st.lists(st.floats(0, 50), min_size=3, max_size=3),
    st.lists(st.integers(0, 8), min_size=3, max_size=3),
    st.floats(1e-3, 10),
)
def test_update_eta_nonnegative(eta, supply, demand, kappa):
    assert np.all(allocation.update_eta(eta, supply, demand, kappa) >= 0)


def test_partial_utility_equal_split():
    r = np.array([[2.0, 1.0], [4.0, 1.0], [1.0, 3.0]])
    u = allocation.partial_utility(r, np.array([0, 0, 1]))
    assert u == pytest.approx(math.log(1.0) + math.log(2.0) + math.log(3.0))


# -- solvers --------------------------------------------------------------------


def test_decentralized_without_partial_is_full_inner(rng):
    r = rng.uniform(0.1, 2.0, size=(3, 4))
    res = allocation.decentralized_solve(make_link(full_rates=r))
    ref = allocation.solve_full_inner(r)
    assert res.total_utility == pytest.approx(ref.utility, rel=1e-12)
    assert np.allclose(res.shares[:, :3], ref.shares.T)


def test_centralized_single_partial_user():
    res = allocation.centralized_solve(make_link(partial_rates=[[0.3, 0.9]]))
    assert res.assignment[:, 0].tolist() == [0.0, 1.0]


def test_centralized_matches_brute_force(rng):
    for _ in range(30):
        rp = rng.uniform(0.05, 2.0, size=(3, 2))
        link = make_link(partial_rates=rp)
        _, best = oracles.brute_force_partial(rp)
        assert allocation.centralized_solve(link, prune=False).total_utility == pytest.approx(best, abs=1e-12)
        assert allocation.centralized_solve(link).total_utility == pytest.approx(best, abs=1e-12)


def test_pruned_centralized_matches_brute_force_at_l4(rng):
    for _ in range(10):
        rp = rng.uniform(0.05, 2.0, size=(5, 4))
        _, best = oracles.brute_force_partial(rp)
        got = allocation.centralized_solve(make_link(partial_rates=rp), SolverConfig(candidates=4))
        assert got.total_utility == pytest.approx(best, abs=1e-12)


def test_enumeration_cap():
    link = make_link(partial_rates=np.ones((20, 4)))
    with pytest.raises(allocation.EnumerationTooLarge, match="reduce"):
        allocation.centralized_solve(link, SolverConfig(max_enum=1000))


def test_desk_solutions_feasible_and_ordered(desk_links):
    for _, _, link in desk_links[:40]:
        d = allocation.decentralized_solve(link)
        c = allocation.centralized_solve(link)
        assert d.constraint_violation() <= 1e-6
        assert c.constraint_violation() <= 1e-6
        assert c.total_utility >= d.total_utility - 1e-7 * abs(c.total_utility)
        assert np.all(d.partial_prices >= 0) and np.all(d.full_prices >= 0)


def test_decentralized_trace_monotone_after_burn_in(desk_links):
    for _, _, link in desk_links:
        tr = np.array(allocation.decentralized_solve(link).trace)
        assert np.all(np.diff(tr[2:]) >= -1e-12)


def test_final_trace_value_is_returned_utility(desk_links):
    for _, _, link in desk_links[:20]:
        d = allocation.decentralized_solve(link)
        assert d.trace[-1] == pytest.approx(d.total_utility, rel=1e-12, abs=1e-12)
        assert len(d.raw_trace) == len(d.trace)


def test_random_snapshot_oracle_gap(rng):
    rp = rng.uniform(0.05, 2.0, size=(6, 4))
    link = make_link(partial_rates=rp)
    d = allocation.decentralized_solve(link)
    _, best = oracles.brute_force_partial(rp)
    assert abs(d.total_utility - best) <= 0.05 * abs(best)


def test_trace_csv(tmp_path, desk_links):
    d = allocation.decentralized_solve(desk_links[0][2])
    p = tmp_path / "trace.csv"
    d.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "iteration,utility,residual_1,residual_2,residual_3,residual_4"
    assert len(lines) == len(d.trace) + 1
