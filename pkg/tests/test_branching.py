"""Bounding branching processes: rates, mean matrix, criticality, simulation."""
import math

import numpy as np
import pytest
from scipy.linalg import expm

from partnermodel import (
    BranchingParams,
    BranchingState,
    DomainError,
    Params,
    lbp_rates,
    mean_matrix,
    r0,
    rate_matrix,
    simulate_branching,
    spectral_abscissa,
    subcritical_delta,
    supercritical_delta,
    ubp_rates,
    y_star,
)
from partnermodel.branching import (
    LBP,
    UBP,
    disease_free_transpose_check,
    summarize,
)
from partnermodel.rng import replica_seed

P_SUB = Params(lam=1.0, r_plus=3.0, r_minus=1.0)
P_SUP = Params(lam=20.0, r_plus=20.0, r_minus=2.0)


def test_params_validation():
    ys = y_star(P_SUB)
    with pytest.raises(DomainError):
        BranchingParams(P_SUB, ys + 0.01, UBP)
    with pytest.raises(DomainError):
        BranchingParams(P_SUB, -0.01, LBP)
    with pytest.raises(DomainError):
        BranchingParams(P_SUB, 0.1, "other")
    with pytest.raises(DomainError):
        BranchingState(-1, 0, 0)


def test_rates_kind_mismatch():
    bp = BranchingParams(P_SUB, 0.1, UBP)
    with pytest.raises(DomainError):
        lbp_rates(BranchingState(1, 0, 0), bp)
    with pytest.raises(DomainError):
        ubp_rates(BranchingState(1, 0, 0), BranchingParams(P_SUB, 0.1, LBP))


def test_rates_hand_computed():
    p = Params(lam=2.0, r_plus=4.0, r_minus=1.0)
    ys = 2.0 / (1.0 + math.sqrt(17.0))
    st = BranchingState(1, 1, 1)
    wu = ubp_rates(st, BranchingParams(p, 0.1, UBP))
    assert wu == pytest.approx(
        [1.0, 4.0 * (ys - 0.1), 0.8, 0.4, 1.0, 1.0, 2.0, 2.0, 1.0], abs=1e-14)
    wl = lbp_rates(st, BranchingParams(p, 0.1, LBP))
    assert wl == pytest.approx(
        [1.8, 4.0 * (ys - 0.1), 0.4, 1.0, 1.0, 2.0, 2.0, 1.0], abs=1e-14)


def test_rates_absorbing_origin():
    st = BranchingState(0, 0, 0)
    assert np.all(ubp_rates(st, BranchingParams(P_SUB, 0.1, UBP)) == 0.0)
    assert np.all(lbp_rates(st, BranchingParams(P_SUB, 0.1, LBP)) == 0.0)


def test_zero_slack_processes_coincide():
    st = BranchingState(3, 2, 1)
    wu = ubp_rates(st, BranchingParams(P_SUB, 0.0, UBP))
    wl = lbp_rates(st, BranchingParams(P_SUB, 0.0, LBP))
    # UBP channels 2 and 3 (slack births) vanish, LBP channel 2 (slack pair
    # removal) vanishes; the remaining channels match one-to-one
    assert wu[2] == wu[3] == wl[2] == 0.0
    assert np.array_equal(wu[[0, 1, 4, 5, 6, 7, 8]], wl[[0, 1, 3, 4, 5, 6, 7]])
    A_u = rate_matrix(BranchingParams(P_SUB, 0.0, UBP))
    A_l = rate_matrix(BranchingParams(P_SUB, 0.0, LBP))
    assert np.array_equal(A_u, A_l)


def test_rate_matrix_structure():
    ys = y_star(P_SUB)
    A0 = rate_matrix(BranchingParams(P_SUB, 0.0, UBP))
    assert A0[0] == pytest.approx([-(1.0 + 3.0 * ys), 3.0 * ys, 0.0], abs=0.0)
    assert np.all(A0 - np.diag(np.diag(A0)) >= 0.0)
    # the zero-slack matrix is the transpose of the disease-free linearization
    A, A3T = disease_free_transpose_check(P_SUB)
    assert np.array_equal(A, A3T)
    # entries are affine in the slack
    A_eps = rate_matrix(BranchingParams(P_SUB, 1e-9, UBP))
    assert np.abs(A_eps - A0).max() <= 3.0 * P_SUB.r_plus * 1e-9 + 1e-18


def test_rate_matrix_offdiagonals_nonnegative():
    rng = np.random.default_rng(33)
    for _ in range(30):
        p = Params(*np.exp(rng.uniform(np.log(0.1), np.log(8.0), 3)))
        d = float(rng.uniform(0.0, y_star(p)))
        for kind in (UBP, LBP):
            A = rate_matrix(BranchingParams(p, d, kind))
            off = A - np.diag(np.diag(A))
            assert np.all(off >= 0.0)


def test_rate_matrix_consistent_with_rate_vectors():
    # row j of A = sum over channels of rate * count-change, per type-j particle
    for p, kind in ((P_SUB, UBP), (P_SUP, LBP)):
        bp = BranchingParams(p, 0.07, kind)
        A = rate_matrix(bp)
        updates_u = [(-1, 0, 0), (-1, 1, 0), (0, 1, 0), (0, 0, 1), (0, -1, 0),
                     (1, -1, 0), (0, -1, 1), (0, 1, -1), (2, 0, -1)]
        updates_l = [(-1, 0, 0), (-1, 1, 0), (-2, 0, 0), (0, -1, 0),
                     (1, -1, 0), (0, -1, 1), (0, 1, -1), (2, 0, -1)]
        updates = updates_u if kind == UBP else updates_l
        for j, unit in enumerate(np.eye(3, dtype=int)):
            st = BranchingState(*unit)
            w = ubp_rates(st, bp) if kind == UBP else lbp_rates(st, bp)
            row = np.zeros(3)
            for rate, du in zip(w, updates):
                row += rate * np.array(du)
            assert row == pytest.approx(list(A[j]), abs=1e-13)


def test_mean_matrix_basics():
    A = rate_matrix(BranchingParams(P_SUB, 0.05, UBP))
    assert np.array_equal(mean_matrix(A, 0.0), np.eye(3))
    h = 1e-7
    assert np.abs((mean_matrix(A, h) - np.eye(3)) / h - A).max() < 1e-5
    with pytest.raises(DomainError):
        mean_matrix(A, -1.0)


def test_mean_matrix_against_eigendecomposition():
    # scaling-and-squaring accuracy contract: 1e-9 relative on small matrices
    A = rate_matrix(BranchingParams(P_SUP, 0.01, LBP))
    evals, V = np.linalg.eig(A)
    for t in (0.5, 2.0, 10.0):
        direct = (V @ np.diag(np.exp(evals * t)) @ np.linalg.inv(V)).real
        M = mean_matrix(A, t)
        assert np.abs(M - direct).max() / max(1.0, np.abs(M).max()) < 1e-9


def test_spectral_abscissa_sign_matches_r0():
    for lam in (4.0, 5.5, 6.5, 7.5, 8.5, 10.0):
        p = Params(lam=lam, r_plus=6.0, r_minus=2.0)
        mu = spectral_abscissa(rate_matrix(BranchingParams(p, 0.0, UBP)))
        assert (mu > 0.0) == (r0(p) > 1.0)


def test_delta_thresholds():
    d = subcritical_delta(P_SUB)
    ys = y_star(P_SUB)
    assert 0.0 < d <= ys
    mu_mid = spectral_abscissa(rate_matrix(BranchingParams(P_SUB, d / 2, UBP)))
    assert mu_mid < 0.0
    if d < ys - 1e-4:
        mu_past = spectral_abscissa(rate_matrix(BranchingParams(P_SUB, d + 1e-4, UBP)))
        assert mu_past > 0.0
    d2 = supercritical_delta(P_SUP)
    assert 0.0 < d2 <= y_star(P_SUP)
    mu2 = spectral_abscissa(rate_matrix(BranchingParams(P_SUP, d2 / 2, LBP)))
    assert mu2 > 0.0
    with pytest.raises(DomainError):
        subcritical_delta(P_SUP)
    with pytest.raises(DomainError):
        supercritical_delta(P_SUB)


def test_simulation_extinction_subcritical():
    bp = BranchingParams(P_SUB, subcritical_delta(P_SUB) / 2, UBP)
    extinct = 0
    for r in range(200):
        res = simulate_branching(BranchingState(2, 1, 1), bp, 200.0,
                                 replica_seed(2468, r), sample_dt=10.0)
        extinct += res.extinct
    assert extinct >= 195


def test_simulation_censors_supercritical_growth():
    bp = BranchingParams(P_SUP, 0.0, LBP)
    censored = 0
    for r in range(20):
        res = simulate_branching(BranchingState(20, 0, 0), bp, 1000.0,
                                 replica_seed(1357, r), sample_dt=10.0, cap=500)
        if res.censored:
            censored += 1
            assert not res.extinct
            assert res.final_state.total > 500
    assert censored >= 15


def test_lower_bound_pair_removal_clamps_at_zero():
    # a pair-removal mark on a lone particle empties the population
    p = Params(lam=0.5, r_plus=50.0, r_minus=0.5)
    bp = BranchingParams(p, y_star(p) * 0.9, LBP)
    for seed in range(10):
        res = simulate_branching(BranchingState(1, 0, 0), bp, 100.0, seed)
        assert np.all(res.states >= 0)
        assert res.extinct or res.censored


def test_branching_property_means_scale_linearly():
    bp = BranchingParams(P_SUB, 0.05, UBP)
    t = 2.0

    def mean_at(init, n, base):
        acc = np.zeros(3)
        sq = np.zeros(3)
        for r in range(n):
            res = simulate_branching(init, bp, t, replica_seed(base, r),
                                     sample_dt=1.0)
            idx = int(round(t / 1.0))
            v = (res.states[idx].astype(float) if idx < len(res.states)
                 else np.zeros(3))
            acc += v
            sq += v * v
        mean = acc / n
        var = sq / n - mean**2
        return mean, np.sqrt(var / n)

    m1, se1 = mean_at(BranchingState(1, 0, 0), 4000, 11)
    m2, se2 = mean_at(BranchingState(2, 0, 0), 4000, 12)
    se = np.sqrt((2.0 * se1) ** 2 + se2**2)
    assert np.all(np.abs(m2 - 2.0 * m1) <= 4.0 * se + 1e-12)


def test_empirical_mean_matches_mean_matrix():
    bp = BranchingParams(P_SUB, subcritical_delta(P_SUB) / 2, UBP)
    A = rate_matrix(bp)
    n = 4000
    for t in (1.0, 2.0):
        acc = np.zeros(3)
        sq = np.zeros(3)
        for r in range(n):
            res = simulate_branching(BranchingState(1, 1, 1), bp, t,
                                     replica_seed(int(t * 1000), r), sample_dt=t)
            v = (res.states[1].astype(float) if len(res.states) > 1
                 else np.zeros(3))
            acc += v
            sq += v * v
        mean = acc / n
        se = np.sqrt((sq / n - mean**2) / n)
        exact = np.ones(3) @ expm(A * t)
        assert np.all(np.abs(mean - exact) <= 3.0 * se + 1e-9), (t, mean, exact)


def test_summary_shape():
    bp = BranchingParams(P_SUB, 0.02, UBP)
    res = simulate_branching(BranchingState(1, 0, 0), bp, 50.0, seed=5)
    s = summarize(res)
    assert set(s) == {"kind", "delta", "seed", "extinct", "extinction_time",
                      "censored", "final_counts"}
    assert s["kind"] == UBP and s["seed"] == 5
    if s["extinct"]:
        assert s["extinction_time"] is not None
        assert s["final_counts"] == [0, 0, 0]
