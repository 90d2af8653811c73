"""Site-level construction: update rules, aggregation, distributional equivalence."""
import numpy as np
import pytest

from partnermodel import DomainError, MicroState, Params, coupled_pair, simulate_micro
from partnermodel.macro import rates_array
from partnermodel.micro import (
    _BREAKUP,
    _FORMATION,
    _RECOVERY,
    _TRANSMISSION,
    _apply,
    expected_channel_proportions,
    frozen_channel_counts,
)

P = Params(lam=1.5, r_plus=5.0, r_minus=1.0)


def rich_state() -> MicroState:
    # N=50 with every aggregate class populated:
    # SS pairs (0,1)..(6,7); SI pairs (8,12)..(11,15); II pairs (16,17)..(22,23);
    # infectious singles 24..35; susceptible singles 36..49.
    return MicroState.build(
        50,
        infected_sites=list(range(12, 24)) + list(range(24, 36)),
        pairs=[(0, 1), (2, 3), (4, 5), (6, 7),
               (8, 12), (9, 13), (10, 14), (11, 15),
               (16, 17), (18, 19), (20, 21), (22, 23)],
    )


def test_build_and_aggregate():
    st = rich_state()
    agg = st.aggregate()
    assert (agg.S, agg.I, agg.SS, agg.SI, agg.II) == (14, 12, 4, 4, 4)
    assert agg.N == 50
    assert len(st.matching) == 12


def test_matching_validation():
    with pytest.raises(DomainError):
        MicroState.build(10, pairs=[(0, 1), (1, 2)])  # site 1 in two pairs
    with pytest.raises(DomainError):
        MicroState.build(10, pairs=[(3, 3)])
    with pytest.raises(DomainError):
        MicroState.build(300)  # beyond the quadratic-cost limit
    with pytest.raises(DomainError):
        MicroState(infected=np.zeros(4, dtype=bool),
                   partner=np.array([1, -1, -1, -1]))  # not an involution


def test_update_rules_ignore_void_marks():
    st = rich_state()
    infected = [bool(v) for v in st.infected]
    partner = [int(v) for v in st.partner]
    counts = list(st.aggregate().as_tuple())
    before = (list(infected), list(partner), list(counts))

    # formation mark on a pair with a partnered endpoint does nothing
    assert _apply(_FORMATION, 0, 40, infected, partner, counts) == -1
    # transmission mark on a closed edge, or a concordant open edge, is void
    assert _apply(_TRANSMISSION, 24, 36, infected, partner, counts) == -1
    assert _apply(_TRANSMISSION, 16, 17, infected, partner, counts) == -1
    # recovery mark on a susceptible site is void
    assert _apply(_RECOVERY, 36, -1, infected, partner, counts) == -1
    # breakup mark on a closed edge is void
    assert _apply(_BREAKUP, 24, 25, infected, partner, counts) == -1
    assert (infected, partner, counts) == before


def test_update_rules_apply_and_classify():
    st = rich_state()
    infected = [bool(v) for v in st.infected]
    partner = [int(v) for v in st.partner]
    counts = list(st.aggregate().as_tuple())

    assert _apply(_RECOVERY, 24, -1, infected, partner, counts) == 0
    assert not infected[24]
    assert _apply(_FORMATION, 36, 37, infected, partner, counts) == 1
    assert partner[36] == 37
    assert _apply(_TRANSMISSION, 8, 12, infected, partner, counts) == 6
    assert infected[8]
    assert _apply(_BREAKUP, 16, 17, infected, partner, counts) == 9
    assert partner[16] == -1
    agg = MicroState(infected=np.array(infected),
                     partner=np.array(partner, dtype=np.int64)).aggregate()
    assert list(agg.as_tuple()) == counts


def test_simulated_path_conserves_sites_and_orders_events():
    st = rich_state()
    res = simulate_micro(st, P, 30.0, seed=8, record_events=True)
    total = res.states[:, 0] + res.states[:, 1] + 2 * res.states[:, 2:].sum(axis=1)
    assert np.all(total == 50)
    assert np.all(np.diff(res.event_times) > 0.0)
    assert res.event_channels.min() >= 0 and res.event_channels.max() <= 9
    assert res.n_events == len(res.event_times)
    res.final.aggregate()  # validates the matching invariant at the end


def test_frozen_state_channel_frequencies():
    # distributional equivalence with the aggregate rates at a frozen
    # configuration: 1e5 next-transitions, binomial 3-sigma bounds
    st = rich_state()
    n = 100_000
    counts = frozen_channel_counts(st, P, n, seed=909090)
    prob = expected_channel_proportions(st, P)
    assert counts.sum() == n
    z = (counts - n * prob) / np.sqrt(n * prob * (1.0 - prob))
    assert np.abs(z).max() < 3.0, z


def test_running_path_channel_frequencies():
    # along a moving path the conditional channel law is the aggregate-rate
    # proportion at the pre-event state; counts against accumulated
    # probabilities, 4 sigma where the expected count is informative
    st = rich_state()
    res = simulate_micro(st, P, 500.0, seed=31, record_events=True)
    assert res.n_events > 5000
    w = rates_array(res.event_pre_states, 50, P)
    prob = w / w.sum(axis=1, keepdims=True)
    expected = prob.sum(axis=0)
    var = (prob * (1.0 - prob)).sum(axis=0)
    counts = np.bincount(res.event_channels, minlength=10)
    for j in range(10):
        if expected[j] >= 25.0:
            assert abs(counts[j] - expected[j]) < 4.0 * np.sqrt(var[j]), j
        else:
            assert abs(counts[j] - expected[j]) < max(4.0 * np.sqrt(var[j]), 10.0), j


def test_coupled_pair_preserves_containment_and_edges():
    pairs = [(40 + 2 * k, 41 + 2 * k) for k in range(5)]
    for seed in (1, 2, 3):
        a = MicroState.build(50, infected_sites=range(3), pairs=pairs)
        b = MicroState.build(50, infected_sites=range(12), pairs=pairs)
        res = coupled_pair(a, b, Params(lam=2.0, r_plus=5.0, r_minus=1.0),
                           15.0, seed=seed)
        assert res.containment_violations == 0
        assert res.edge_mismatches == 0
        # aggregates of A stay below B in (I, SI+II, II)
        ia = res.states_a[:, 1]
        ib = res.states_b[:, 1]
        assert np.all(ia <= ib)
        ipa = res.states_a[:, 3] + res.states_a[:, 4]
        ipb = res.states_b[:, 3] + res.states_b[:, 4]
        assert np.all(ipa <= ipb)
        assert np.all(res.states_a[:, 4] <= res.states_b[:, 4])


def test_coupled_pair_validates_inputs():
    a = MicroState.build(20, infected_sites=range(5))
    b = MicroState.build(20, infected_sites=range(3))
    with pytest.raises(DomainError):
        coupled_pair(a, b, P, 1.0, seed=1)  # A not contained in B
    c = MicroState.build(20, infected_sites=range(5), pairs=[(10, 11)])
    with pytest.raises(DomainError):
        coupled_pair(a, c, P, 1.0, seed=1)  # different matchings
