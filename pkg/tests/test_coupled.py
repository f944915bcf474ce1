import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgksim.coupled import (
    CHECK_TOL,
    DivergenceRecord,
    InvalidXError,
    JointState,
    ParamSet,
    Phase,
    Scenario,
    check_dominance,
    check_pln,
    check_zigzag,
    classify_scenario,
    derive_parameters,
    neg_part,
    pad_states,
    pos_part,
    records_to_csv,
    run_coupled,
    sek_smod_select,
    smod_select,
)
from mgksim.workload import parse_dist


def joint(bA, bB, **kw):
    d = sum(1 for v in bA if v == 0.0) + sum(1 for v in bB if v == 0.0)
    return JointState(bA=list(bA), bB=list(bB), d=d, **kw)


class TestDeriveParameters:
    def test_worked_example(self):
        """lam=0.5, Exp(1), k=2, x=1, recomputed independently:
        rho_<=2 = 0.5(1 - 3e^-2); c1 = 2k lam; c2, c3, c4 and eps per the
        parameterization formulas."""
        p = derive_parameters(0.5, "exp:rate=1", 2, 1.0)
        rho = 0.5 * (1 - 3 * math.exp(-2))
        band = math.exp(-1) - math.exp(-2)
        c2 = 2 * (0.5 * (3 * 2 + 2 / 6) / (1 - rho) + 4)
        c3 = (0.5 * 2 / 3) ** 2 * math.exp(-1.0 * (2 + 8 / 3)) / 2 * band**2
        assert p.c1 == 2.0
        assert p.c2 == pytest.approx(c2, rel=1e-12)
        assert p.c2 == pytest.approx(17.00897, abs=1e-5)
        assert p.c3 == pytest.approx(c3, rel=1e-12)
        assert p.c3 == pytest.approx(2.8251e-05, abs=1e-9)
        assert p.c4 == 1.0
        assert p.eps == pytest.approx(min(1 / 6, c3 / (4 * c2)), rel=1e-12)
        assert p.eps == pytest.approx(4.1523e-07, abs=1e-10)
        assert p.epsp == p.eps / 2
        assert p.y == 2.0
        assert p.rho_le_y == pytest.approx(rho, rel=1e-14)
        assert p.improvement_lower_bound > 0

    def test_zero_band_mass_rejected(self):
        with pytest.raises(InvalidXError):
            derive_parameters(0.5, "uniform:lo=0,hi=2", 2, 3.0)

    def test_c1_linear_in_lambda(self):
        a = derive_parameters(0.25, "exp:rate=1", 2, 1.0)
        b = derive_parameters(0.5, "exp:rate=1", 2, 1.0)
        assert b.c1 == pytest.approx(2 * a.c1)

    def test_practical_eps_respects_x_over_six(self):
        p = derive_parameters(0.5, "exp:rate=1", 2, 1.0, eps=1 / 6)
        assert p.eps == pytest.approx(1 / 6)
        with pytest.raises(ValueError):
            derive_parameters(0.5, "exp:rate=1", 2, 1.0, eps=0.2)

    def test_k_below_two_rejected(self):
        with pytest.raises(ValueError):
            derive_parameters(0.5, "exp:rate=1", 1, 1.0)


class TestPadStates:
    def test_table_example(self):
        bA, bB, d = pad_states([1, 2, 4, 5, 5], [1, 1, 3])
        assert bA == [1, 2, 4, 5, 5]
        assert bB == [0, 0, 1, 1, 3]
        assert d == 2

    def test_equal_lengths_unchanged(self):
        bA, bB, d = pad_states([2, 3], [2, 3])
        assert (bA, bB, d) == ([2, 3], [2, 3], 0)

    def test_symmetric_case(self):
        bA, bB, d = pad_states([2], [1, 3, 7])
        assert (bA, bB, d) == ([0, 0, 2], [1, 3, 7], 2)

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError):
            pad_states([2, 1], [1])

    @given(
        a=st.lists(st.floats(0.01, 50), max_size=8),
        b=st.lists(st.floats(0.01, 50), max_size=8),
    )
    @settings(max_examples=100, deadline=None)
    def test_padding_preserves_work_and_length(self, a, b):
        a, b = sorted(a), sorted(b)
        bA, bB, d = pad_states(a, b)
        assert len(bA) == len(bB) == max(len(a), len(b))
        assert sum(bA) == pytest.approx(sum(a))
        assert sum(bB) == pytest.approx(sum(b))
        assert d == abs(len(a) - len(b))
        # padding zeros only at the front of the shorter vector
        assert all(bA[i] <= bA[i + 1] for i in range(len(bA) - 1))
        assert all(bB[i] <= bB[i + 1] for i in range(len(bB) - 1))


class TestPartsAndChecks:
    def test_table_state_parts(self):
        j = joint([0, 0, 1, 1, 3], [1, 2, 4, 5, 5])
        assert pos_part(j) == 0.0
        assert neg_part(j) == pytest.approx(12.0)
        assert check_dominance(j)
        assert check_zigzag(j)
        assert check_pln(j)

    def test_merged_state(self):
        j = joint([1, 2], [1, 2])
        assert pos_part(j) == neg_part(j) == 0.0
        assert check_dominance(j) and check_zigzag(j) and check_pln(j)

    def test_mixed_parts(self):
        j = joint([2, 5], [1, 7])
        assert pos_part(j) == pytest.approx(1.0)
        assert neg_part(j) == pytest.approx(2.0)
        assert pos_part(j) - neg_part(j) == pytest.approx(
            j.work_a - j.work_b
        )

    def test_pln_failure_pattern(self):
        j = joint([1, 5], [2, 4])
        assert not check_dominance(j)
        assert not check_pln(j)
        assert check_zigzag(j)


class TestSmodSelect:
    def test_all_nonnegative_diffs(self):
        # bA=(1,2,5), bB=(0,1,4): all diffs nonnegative, serve two smallest
        j = joint([1, 2, 5], [0, 1, 4], phase=Phase.SMOD)
        assert smod_select(j, 2) == {0, 1}

    def test_exactly_k_nonnegative(self):
        j = joint([1, 2, 5], [0, 2, 6], phase=Phase.SMOD)
        assert smod_select(j, 2) == {0, 1}

    def test_fill_from_negative_diffs(self):
        j = joint([1, 2, 5], [0, 3, 6], phase=Phase.SMOD)
        # only index 0 nonnegative; fill with the least-remaining negative
        assert smod_select(j, 2) == {0, 1}

    def test_matches_srpt_when_not_ahead(self):
        j = joint([0, 1, 2], [0.5, 1, 3], phase=Phase.SMOD)
        assert smod_select(j, 2) == {0, 1}

    def test_omits_largest_negative_when_filling(self):
        # diffs: (+1, -2, -1): nonneg {0}; fill with least-remaining negative
        j = joint([1, 2, 5], [0, 4, 6], phase=Phase.SMOD)
        assert smod_select(j, 2) == {0, 1}
        # k=1: only the nonneg index is served
        assert smod_select(j, 1) == {0}


class TestSekSmodSelect:
    P = ParamSet(x=1.0, y=2.0, eps=1 / 6, epsp=1 / 12, c1=1, c2=1, c3=1,
                 c4=1, rho_le_y=0.3)

    def test_merged_non_divergence_state_is_srpt(self):
        j = joint([0.5, 0.7, 1.5], [0.5, 0.7, 1.5])
        assert sek_smod_select(j, 2, self.P) == {0, 1}

    def test_divergence_starting_state_swaps(self):
        j = joint([0.09, 0.12, 1.5], [0.09, 0.12, 1.5])
        assert sek_smod_select(j, 2, self.P) == {0, 2}

    def test_smod_phase_uses_smod(self):
        j = joint([1, 2, 5], [0, 3, 6], phase=Phase.SMOD)
        assert sek_smod_select(j, 2, self.P) == smod_select(j, 2)


class TestClassifyScenario:
    P = ParamSet(x=1.0, y=2.0, eps=0.1, epsp=0.05, c1=1, c2=1, c3=1, c4=1,
                 rho_le_y=0.3)

    def test_bad_within_two_k_eps(self):
        s = classify_scenario(0.0, 1.5, self.P, 2, np.array([0.3]),
                              np.array([1.0]))
        assert s is Scenario.BAD

    def test_good_window_arithmetic(self):
        times = np.array([1.9, 2.1])
        sizes = np.array([1.2, 1.8])
        s = classify_scenario(0.0, 1.5, self.P, 2, times, sizes)
        assert s is Scenario.GOOD

    def test_no_arrivals_is_neutral(self):
        s = classify_scenario(0.0, 1.5, self.P, 2, np.array([]), np.array([]))
        assert s is Scenario.NEUTRAL

    def test_wrong_size_in_window_is_neutral(self):
        times = np.array([1.9, 2.1])
        sizes = np.array([1.2, 2.5])  # second job too large
        s = classify_scenario(0.0, 1.5, self.P, 2, times, sizes)
        assert s is Scenario.NEUTRAL

    def test_extra_arrival_before_horizon_is_neutral(self):
        times = np.array([1.9, 2.1, 5.0])
        sizes = np.array([1.2, 1.8, 1.0])
        s = classify_scenario(0.0, 1.5, self.P, 2, times, sizes)
        assert s is Scenario.NEUTRAL


def practical(lam, x=1.0, k=2, dist="exp:rate=1", eps=None):
    return derive_parameters(lam, dist, k, x, eps=x / 6 if eps is None else eps)


class TestHandTraces:
    """Episode traces mirroring the worst-case lemma proofs."""

    def test_neutral_no_arrival_episode(self):
        p = practical(0.5)
        res = run_coupled("exp:rate=1", 0.5, 2, p, 0, 0,
                          arrivals=(np.array([]), np.array([])),
                          initial_jobs=[0.09, 0.12, 1.5], warn_unstable=False)
        assert not res.violations
        assert res.num_divergences == 1
        r = res.records[0]
        assert r.scenario is Scenario.NEUTRAL
        # net IND is exactly zero: -k*b1 over the small-job window, +k*b1 after
        assert r.delta == pytest.approx(0.0, abs=1e-9)
        # dominance once both small jobs are done: k*(b1+b2)
        assert r.t_dom == pytest.approx(2 * (0.09 + 0.12), abs=1e-9)
        # merge at the jointly empty instant: k*b1 + k*b3
        assert r.t_merge == pytest.approx(2 * 0.09 + 2 * 1.5, abs=1e-9)

    def test_good_episode_gains_k_b1(self):
        p = practical(0.5)
        times = np.array([1.9, 2.1])
        sizes = np.array([1.2, 1.8])
        res = run_coupled("exp:rate=1", 0.5, 2, p, 0, 0,
                          arrivals=(times, sizes),
                          initial_jobs=[0.09, 0.12, 1.5], warn_unstable=False)
        assert not res.violations
        r = res.records[0]
        assert r.scenario is Scenario.GOOD
        assert r.delta == pytest.approx(2 * 0.09, abs=1e-9)

    def test_bad_episode_within_ind_bound(self):
        p = practical(0.5)
        res = run_coupled("exp:rate=1", 0.5, 2, p, 0, 0,
                          arrivals=(np.array([0.3]), np.array([0.5])),
                          initial_jobs=[0.09, 0.12, 1.5], warn_unstable=False)
        assert not res.violations
        r = res.records[0]
        assert r.scenario is Scenario.BAD
        assert r.delta >= -2 * p.eps * (2 + 2 + r.arrivals_before_dom) - CHECK_TOL

    def test_proof_regime_run_never_diverges(self):
        p = derive_parameters(0.5, "exp:rate=1", 2, 1.0)  # eps ~ 4e-7
        res = run_coupled("exp:rate=1", 0.5, 2, p, 20_000, 1)
        assert res.num_divergences == 0
        assert not res.violations
        assert res.stats_a.mean_t == res.stats_b.mean_t

    def test_records_csv_schema(self, tmp_path):
        p = practical(0.5)
        res = run_coupled("exp:rate=1", 0.5, 2, p, 50_000, 1)
        path = tmp_path / "ledger.csv"
        records_to_csv(res.records, 2, path)
        lines = path.read_text().splitlines()
        assert lines[0] == ("t_div,b1,b2,b3,scenario,delta,t_dom_minus_t_div,"
                            "t_merge_minus_t_div,arrivals_before_dom")
        assert len(lines) == res.num_divergences + 1


class TestPracticalRuns:
    @pytest.mark.parametrize("k,rho,dist", [
        (2, 0.8, "exp:rate=1"),
        (2, 0.5, "exp:rate=1"),
        (3, 0.6, "exp:rate=1"),
        (2, 0.7, "uniform:lo=0,hi=2"),
        (2, 0.7, "hyperexp:csq=10,rho_high=0.5,mean=1"),
    ])
    def test_full_assert_level_clean(self, k, rho, dist):
        p = derive_parameters(rho, dist, k, 1.0, eps=1 / 6)
        res = run_coupled(dist, rho, k, p, 100_000, 1, assert_level="full")
        assert not res.violations, res.violations[0].to_json()
        assert res.stats_a.job_count == res.stats_b.job_count == 100_000
        assert res.num_divergences > 0

    def test_every_record_obeys_pathwise_bounds(self):
        p = practical(0.6)
        res = run_coupled("exp:rate=1", 0.6, 2, p, 200_000, 2)
        assert not res.violations
        for r in res.records:
            assert r.t_div < r.t_merge
            assert r.t_dom <= r.t_merge + 1e-12
            assert math.isfinite(r.delta)
            assert len(r.snapshot) == 3
            assert r.snapshot[-1] >= p.x - 1e-9
            if r.scenario in (Scenario.GOOD, Scenario.NEUTRAL):
                assert r.delta >= -CHECK_TOL
            assert r.delta >= -2 * p.eps * (4 + r.arrivals_before_dom) - CHECK_TOL

    def test_deterministic_records(self):
        p = practical(0.8)
        a = run_coupled("exp:rate=1", 0.8, 2, p, 30_000, 7)
        b = run_coupled("exp:rate=1", 0.8, 2, p, 30_000, 7)
        assert [r.t_div for r in a.records] == [r.t_div for r in b.records]
        assert [r.delta for r in a.records] == [r.delta for r in b.records]
        assert a.stats_a.mean_t == b.stats_a.mean_t


@st.composite
def coupled_instance(draw):
    k = draw(st.integers(2, 3))
    # divergence-friendly initial state plus an arbitrary arrival pattern
    smalls = draw(st.lists(st.floats(1 / 12, 1 / 6), min_size=k, max_size=k))
    big = draw(st.floats(1.0, 2.0))
    n_arr = draw(st.integers(0, 12))
    gaps = draw(st.lists(st.floats(0.001, 3.0), min_size=n_arr, max_size=n_arr))
    sizes = draw(st.lists(st.floats(0.01, 3.0), min_size=n_arr, max_size=n_arr))
    return k, sorted(smalls) + [big], np.cumsum(gaps), np.array(sizes)


class TestAdversarialFuzz:
    @given(coupled_instance())
    @settings(max_examples=150, deadline=None)
    def test_lemma_suite_on_adversarial_arrivals(self, inst):
        """The worst-case properties hold on arbitrary arrival sequences, not
        just Poisson ones."""
        k, initial, times, sizes = inst
        p = derive_parameters(0.5, "exp:rate=1", k, 1.0, eps=1 / 6)
        res = run_coupled("exp:rate=1", 0.5, k, p, 0, 0,
                          arrivals=(times, sizes), initial_jobs=initial,
                          warn_unstable=False)
        assert not res.violations, res.violations[0].to_json()
        for r in res.records:
            assert r.delta >= -k * p.eps * (k + 2 + r.arrivals_before_dom) - CHECK_TOL
