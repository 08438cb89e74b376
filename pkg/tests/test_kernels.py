import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poolqueue import kernels, service
from poolqueue.errors import RateCollision, UnsupportedTransform

LAWS = [
    service.Exponential(1.3),
    service.Erlang(2, 2.0),
    service.HyperExponential((0.4, 0.6), (1.0, 3.0)),
    service.Deterministic(0.8),
]


def plans(m):
    return [
        kernels.Constant(0.7, m),
        kernels.Proportional(0.5, m),
        kernels.General(tuple(0.5 + 0.6 * j for j in range(m))),
    ]


class TestRatePlans:
    def test_rates_vector(self):
        assert np.allclose(kernels.plan_rates(kernels.Constant(2.0, 3)), [2, 2, 2])
        assert np.allclose(kernels.plan_rates(kernels.Proportional(0.5, 3)), [0.5, 1, 1.5])
        assert np.allclose(kernels.plan_rates(kernels.General((1.0, 2.0))), [1, 2])

    def test_general_rejects_equal_rates(self):
        with pytest.raises(RateCollision):
            kernels.General((1.0, 1.0 + 1e-10))

    def test_rate_lookup(self):
        assert kernels.rate(kernels.Proportional(0.5, 4), 3) == pytest.approx(1.5)
        with pytest.raises(IndexError):
            kernels.rate(kernels.Constant(1.0, 2), 3)


class TestArrivalCountMixture:
    @pytest.mark.parametrize("plan", plans(3))
    def test_no_remaining_customers(self, plan):
        h = kernels.arrival_count_mixture(plan, 0, 0)
        assert h(0.0) == pytest.approx(1.0)
        assert h(7.3) == pytest.approx(1.0)

    def test_constant_poisson_term(self):
        # exactly one of two arrivals by t: t e^{-t} for lam = 1
        h = kernels.arrival_count_mixture(kernels.Constant(1.0, 2), 2, 1)
        for t in (0.0, 0.5, 2.0):
            assert h(t) == pytest.approx(t * math.exp(-t), abs=1e-14)

    def test_proportional_single_cdf(self):
        h = kernels.arrival_count_mixture(kernels.Proportional(1.0, 1), 1, 1)
        for t in (0.0, 0.5, 2.0):
            assert h(t) == pytest.approx(1.0 - math.exp(-t), abs=1e-14)

    @pytest.mark.parametrize("plan", plans(5))
    def test_value_at_zero(self, plan):
        for n in range(6):
            for i in range(n + 1):
                h = kernels.arrival_count_mixture(plan, n, i)
                assert h(0.0) == pytest.approx(1.0 if i == 0 else 0.0, abs=1e-12)

    @pytest.mark.parametrize("plan", plans(5))
    def test_rows_form_distribution(self, plan):
        for n in range(6):
            for t in (0.1, 0.9, 3.0):
                total = 0.0
                for i in range(n + 1):
                    val = kernels.arrival_count_mixture(plan, n, i)(t)
                    assert -1e-10 <= val <= 1 + 1e-10
                    total += val
                assert total == pytest.approx(1.0, abs=1e-10)

    def test_index_bounds(self):
        with pytest.raises(IndexError):
            kernels.arrival_count_mixture(kernels.Constant(1.0, 2), 3, 0)
        with pytest.raises(IndexError):
            kernels.arrival_count_mixture(kernels.Constant(1.0, 2), 1, 2)


class TestKernelTables:
    def test_remark_one_values(self):
        # lam = gamma = mu = 1, proportional plan: hand-computed entries
        tables = kernels.build_tables(
            kernels.Proportional(1.0, 1), service.Exponential(1.0), 1.0
        )
        assert tables.u[1][0] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert tables.v[1][0] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert tables.u[1][1] == pytest.approx(1.0 / 6.0, abs=1e-12)
        assert tables.v[1][1] == pytest.approx(1.0 / 6.0, abs=1e-12)
        assert tables.u[1].sum() == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("law", LAWS)
    def test_empty_pool_entries(self, law):
        tables = kernels.build_tables(kernels.Constant(1.0, 0), law, 0.9)
        beta = service.lst(law, 0.9)
        assert tables.u[0][0] == pytest.approx(beta, abs=1e-14)
        assert tables.v[0][0] == pytest.approx(1.0 - beta, abs=1e-14)

    @pytest.mark.parametrize("law", LAWS)
    @pytest.mark.parametrize("gamma", [0.3, 1.0, 3.0])
    def test_row_sum_identities(self, law, gamma):
        for plan in plans(8):
            tables = kernels.build_tables(plan, law, gamma)
            beta = service.lst(law, gamma)
            for n in range(9):
                assert abs(tables.u[n].sum() - beta) < 1e-10
                assert abs(tables.v[n].sum() - (1.0 - beta)) < 1e-10
                assert abs(tables.w[n].sum() - 1.0) < 1e-10
                assert np.all(tables.u[n] >= -1e-12)
                assert np.all(tables.v[n] >= -1e-12)
                assert np.all(tables.w[n] <= 1 + 1e-12)

    @pytest.mark.parametrize("plan", plans(5))
    @pytest.mark.parametrize("gamma", [0.4, 2.0])
    def test_exponential_proportionality(self, plan, gamma):
        # gamma * u = mu * v entrywise under exponential service
        mu = 1.7
        tables = kernels.build_tables(plan, service.Exponential(mu), gamma)
        for n in range(6):
            assert np.allclose(gamma * tables.u[n], mu * tables.v[n], atol=1e-12)

    def test_remark_one_product_formula(self):
        # u_{ni} = mu * (1/(lam_{n-i}+xi')) * prod_{j>n-i} lam_j/(lam_j+xi')
        # with xi' = gamma + mu, from the min(B, T) ~ Exp(gamma + mu) race
        mu, gamma = 1.3, 0.6
        plan = kernels.General((0.8, 1.5, 2.4))
        lams = kernels.plan_rates(plan)
        tables = kernels.build_tables(plan, service.Exponential(mu), gamma)
        gm = gamma + mu
        for n in range(1, 4):
            for i in range(n):
                expected = mu / (lams[n - i - 1] + gm)
                for j in range(n - i, n):
                    expected *= lams[j] / (lams[j] + gm)
                assert tables.u[n][i] == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("law", LAWS)
    def test_w_is_small_gamma_limit(self, law):
        plan = kernels.Proportional(0.8, 4)
        small = kernels.build_tables(plan, law, 1e-8)
        ref = kernels.build_tables(plan, law, 1.0)
        for n in range(5):
            assert np.allclose(small.u[n], ref.w[n], atol=1e-6)

    def test_gamma_zero_convention(self):
        tables = kernels.build_tables(
            kernels.Constant(1.0, 3), service.Exponential(1.0), 0.0
        )
        for n in range(4):
            assert np.allclose(tables.v[n], 0.0)
            assert np.allclose(tables.u[n], tables.w[n])

    def test_constant_general_continuity(self):
        lam = 1.0
        delta = 1e-4 * lam
        base = kernels.build_tables(
            kernels.Constant(lam, 4), service.Erlang(2, 2.0), 1.0
        )
        close = kernels.build_tables(
            kernels.General(tuple(lam + j * delta for j in range(4))),
            service.Erlang(2, 2.0),
            1.0,
        )
        for n in range(5):
            assert np.allclose(base.u[n], close.u[n], atol=1e-3)
            assert np.allclose(base.v[n], close.v[n], atol=1e-3)

    def test_complex_gamma_supported(self):
        gamma = 1.0 + 2.0j
        tables = kernels.build_tables(
            kernels.Constant(1.0, 3), service.Erlang(2, 2.0), gamma
        )
        beta = service.lst(service.Erlang(2, 2.0), gamma)
        for n in range(4):
            assert abs(tables.u[n].sum() - beta) < 1e-10

    def test_pareto_rejected(self):
        with pytest.raises(UnsupportedTransform):
            kernels.build_tables(
                kernels.Constant(1.0, 2), service.Pareto(1.5, 1.0), 1.0
            )

    def test_large_pool_stays_finite(self):
        tables = kernels.build_tables(
            kernels.Constant(1.0, 250), service.Exponential(1.0), 1.0
        )
        beta = service.lst(service.Exponential(1.0), 1.0)
        assert np.isfinite(tables.u[250]).all()
        assert abs(tables.u[250].sum() - beta) < 1e-10


class TestWorkloadKernel:
    def test_alpha_zero_reduces_to_v(self):
        tables = kernels.build_tables(
            kernels.Proportional(0.9, 3), service.Erlang(2, 2.0), 1.1
        )
        for n in range(4):
            for i in range(n + 1):
                assert tables.v_alpha(n, i, 0.0) == pytest.approx(
                    tables.v[n][i], abs=1e-12
                )

    def test_exponential_memoryless_factorization(self):
        # v00(alpha) = (gamma/(gamma+mu)) * (mu/(mu+alpha)): the residual of
        # B past T is again Exp(mu)
        mu, gamma, alpha = 1.4, 0.8, 1.9
        tables = kernels.build_tables(
            kernels.Constant(1.0, 0), service.Exponential(mu), gamma
        )
        expected = gamma / (gamma + mu) * mu / (mu + alpha)
        assert tables.v_alpha(0, 0, alpha) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("law", LAWS)
    def test_monte_carlo_check(self, law):
        # E[e^{-alpha(B-T)}; i arrivals by T, T <= B] estimated directly
        rng = np.random.default_rng(99)
        gamma, alpha, lam, n = 1.0, 0.7, 0.9, 2
        reps = 400_000
        plan = kernels.Constant(lam, n)
        tables = kernels.build_tables(plan, law, gamma)
        b = service.sample(law, rng, size=reps)
        t = rng.exponential(1.0 / gamma, size=reps)
        counts = rng.poisson(lam * t)
        inside = t <= b
        for i in range(n):
            hit = inside & (counts == i)
            vals = np.where(hit, np.exp(-alpha * np.maximum(b - t, 0.0)), 0.0)
            se = vals.std(ddof=1) / math.sqrt(reps)
            assert abs(vals.mean() - tables.v_alpha(n, i, alpha)) <= 4 * se


class TestMonteCarloKernels:
    @pytest.mark.parametrize(
        "plan",
        [
            kernels.Constant(0.8, 3),
            kernels.Proportional(0.6, 3),
            kernels.General((0.5, 1.1, 1.9)),
        ],
    )
    def test_u_frequencies(self, plan):
        # i arrivals during B jointly with T > B, starting from n = 3
        rng = np.random.default_rng(2024)
        gamma, n, reps = 0.9, 3, 1_000_000
        law = service.Erlang(2, 2.0)
        tables = kernels.build_tables(plan, law, gamma)
        b = service.sample(law, rng, size=reps)
        t = rng.exponential(1.0 / gamma, size=reps)
        rates = kernels.plan_rates(plan)
        gaps = rng.exponential(1.0 / rates[::-1][: n], size=(reps, n))
        arrivals = np.cumsum(gaps, axis=1)
        counts = (arrivals <= b[:, None]).sum(axis=1)
        survive = t > b
        for i in range(n + 1):
            freq = (survive & (counts == i)).astype(float)
            se = freq.std(ddof=1) / math.sqrt(reps)
            assert abs(freq.mean() - tables.u[n][i]) <= 4 * max(se, 1e-12)


@settings(max_examples=40, deadline=None)
@given(
    t=st.floats(min_value=0.0, max_value=20.0),
    n=st.integers(min_value=0, max_value=6),
    lam=st.floats(min_value=0.1, max_value=4.0),
)
def test_mixture_probability_bounds(t, n, lam):
    plan = kernels.Proportional(lam, 6)
    for i in range(n + 1):
        val = kernels.arrival_count_mixture(plan, n, i)(t)
        assert -1e-10 <= val <= 1 + 1e-10
