import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgksim.policies import (
    ConfigurationError,
    JobView,
    PolicySpec,
    parse_policy,
    select_estimate,
    select_full_sek,
    select_practical_sek,
    select_psjf_k,
    select_rs_k,
    select_sek_n,
    select_srpt_k,
)


def jobs(*remainings, sizes=None, ests=None, ids=None):
    out = []
    for i, r in enumerate(remainings):
        out.append(
            JobView(
                id=ids[i] if ids else i,
                size=sizes[i] if sizes else r,
                remaining=r,
                est_remaining=ests[i] if ests else None,
            )
        )
    return out


class TestSrpt:
    def test_two_smallest_served(self):
        served = select_srpt_k(jobs(1, 2, 4, 5, 5), 2)
        assert served == {0, 1}

    def test_single_job(self):
        assert select_srpt_k(jobs(3.0), 2) == {0}

    def test_tie_broken_by_id(self):
        js = jobs(2, 2, 2, 9, ids=[4, 7, 9, 1])
        assert select_srpt_k(js, 3) == {4, 7, 9}


class TestPsjfRs:
    def test_psjf_ignores_remaining(self):
        js = jobs(0.1, 1, 2, sizes=[3, 1, 2])
        assert select_psjf_k(js, 2) == {1, 2}

    def test_rs_product_order(self):
        js = jobs(1, 2.5, sizes=[4, 2])
        assert select_rs_k(js, 1) == {0}  # 4*1 < 2*2.5

    @given(st.lists(st.floats(0.01, 50.0), min_size=1, max_size=10))
    @settings(max_examples=100, deadline=None)
    def test_rs_equals_psjf_on_fresh_jobs(self, sizes):
        js = jobs(*sizes)  # remaining == size
        assert select_rs_k(js, 3) == select_psjf_k(js, 3)


class TestPracticalSek:
    def test_swap_state(self):
        assert select_practical_sek(jobs(0.3, 0.5, 7), 2, eps=1) == {0, 2}

    def test_four_jobs_fall_back_to_srpt(self):
        assert select_practical_sek(jobs(0.3, 0.5, 0.7, 7), 2, eps=1) == {0, 1}

    def test_one_small_job_falls_back(self):
        assert select_practical_sek(jobs(0.3, 1.4, 7), 2, eps=1) == {0, 1}

    @given(
        rems=st.lists(st.floats(0.01, 8.0), min_size=1, max_size=7),
        eps=st.floats(0.1, 2.0),
        k=st.integers(1, 4),
    )
    @settings(max_examples=300, deadline=None)
    def test_differs_from_srpt_exactly_by_the_swap(self, rems, eps, k):
        js = jobs(*rems)
        sek = select_practical_sek(js, k, eps)
        srpt = select_srpt_k(js, k)
        if sek != srpt:
            order = sorted(js, key=lambda j: (j.remaining, j.id))
            assert len(js) == k + 1
            assert sum(1 for j in order if j.remaining < eps + 1e-9) == k
            assert order[-1].remaining > eps
            assert sek == srpt - {order[k - 1].id} | {order[-1].id}


class TestSekN:
    def test_three_server_example(self):
        js = jobs(0.2, 0.4, 0.9, 3, 8)
        assert select_sek_n(js, 3, eps=1, n=2) == {0, 1, 3}

    def test_count_clause(self):
        js = jobs(0.2, 0.4, 0.9, 3, 8, 9)
        assert select_sek_n(js, 3, eps=1, n=2) == {0, 1, 2}

    @given(
        rems=st.lists(st.floats(0.01, 8.0), min_size=1, max_size=6),
        eps=st.floats(0.1, 2.0),
        k=st.integers(1, 4),
    )
    @settings(max_examples=300, deadline=None)
    def test_n_one_is_practical_sek(self, rems, eps, k):
        js = jobs(*rems)
        assert select_sek_n(js, k, eps, 1) == select_practical_sek(js, k, eps)


class TestFullSek:
    PARAMS = dict(epsp=0.05, eps=0.1, x=1.0, y=2.0)

    def test_all_clauses_hold(self):
        assert select_full_sek(jobs(0.06, 0.09, 1.5), 2, **self.PARAMS) == {0, 2}

    def test_largest_above_y(self):
        assert select_full_sek(jobs(0.06, 0.09, 2.5), 2, **self.PARAMS) == {0, 1}

    def test_small_job_below_eps_prime(self):
        assert select_full_sek(jobs(0.01, 0.09, 1.5), 2, **self.PARAMS) == {0, 1}

    def test_parameter_ordering_enforced(self):
        with pytest.raises(ValueError):
            select_full_sek(jobs(1.0), 2, epsp=0.2, eps=0.1, x=1, y=2)


class TestEstimatePolicies:
    def test_exact_estimates_match_true_policies(self):
        js = jobs(0.3, 0.5, 7, ests=[0.3, 0.5, 7])
        assert select_estimate(js, 2, "srpt") == select_srpt_k(js, 2)
        assert select_estimate(js, 2, "sek", eps=1) == select_practical_sek(js, 2, 1)

    def test_key_is_the_estimate(self):
        js = jobs(1, 2, ests=[3, 0.5])
        assert select_estimate(js, 1, "srpt") == {1}

    def test_zero_estimate_has_top_priority(self):
        js = jobs(1.0, 0.4, ests=[0.0, 0.4])
        assert select_estimate(js, 1, "srpt") == {0}

    def test_missing_estimate_is_configuration_error(self):
        with pytest.raises(ConfigurationError):
            select_estimate(jobs(1.0), 1, "srpt")


@given(
    rems=st.lists(st.floats(0.01, 9.0), min_size=1, max_size=8),
    k=st.integers(1, 5),
)
@settings(max_examples=200, deadline=None)
def test_selectors_serve_min_k_n_and_are_pure(rems, k):
    js = jobs(*rems)
    for select in (
        lambda: select_srpt_k(js, k),
        lambda: select_psjf_k(js, k),
        lambda: select_rs_k(js, k),
        lambda: select_practical_sek(js, k, 0.5),
        lambda: select_sek_n(js, k, 0.5, 2),
        lambda: select_full_sek(js, k, 0.04, 0.08, 0.5, 1.0),
    ):
        served = select()
        assert len(served) == min(k, len(js))
        assert served <= {j.id for j in js}
        assert select() == served


class TestPolicySpec:
    def test_parse_round_trip(self):
        for s in ("srpt", "psjf", "rs", "sek:eps=1", "sekn:eps=1,n=2",
                  "fullsek:epsp=0.05,eps=0.1,x=1,y=2", "srpt-est",
                  "sek-est:eps=2"):
            spec = parse_policy(s)
            assert parse_policy(spec.spec_str()) == spec

    def test_parameter_validation(self):
        with pytest.raises(ConfigurationError):
            parse_policy("sek:eps=-1")
        with pytest.raises(ConfigurationError):
            parse_policy("fullsek:epsp=0.2,eps=0.1,x=1,y=2")
        with pytest.raises(ConfigurationError):
            parse_policy("sekn:eps=1,n=0")
        with pytest.raises(ConfigurationError):
            parse_policy("fifo")

    def test_select_dispatch_matches_functions(self):
        js = jobs(0.3, 0.5, 7)
        assert parse_policy("sek:eps=1").select(js, 2) == {0, 2}
        assert parse_policy("srpt").select(js, 2) == {0, 1}
        assert PolicySpec(kind="rs").select(js, 1) == select_rs_k(js, 1)
