"""Distribution algebra: closed-form transforms, moments, samplers, busy periods."""

import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from pollcalc.distributions import (
    BusyPeriod,
    Deterministic,
    Erlang,
    Exponential,
    HyperExponential,
    Mixture,
    TruncatedExponential,
    distribution_from_config,
    mixture_of,
    truncate_exponential,
)
from pollcalc.errors import DomainError, EmptyBandError
from pollcalc.numerics import TransformFn, derivative_at_zero

ALL_FAMILIES = [
    Deterministic(2.0),
    Exponential(1.0),
    Erlang(3, 2.0),
    HyperExponential((0.3, 0.7), (0.5, 2.0)),
    Mixture(((0.5, Exponential(1.0)), (0.5, Deterministic(2.0)))),
    TruncatedExponential(1.0, 0.5, 2.0),
    TruncatedExponential(1.0, 1.0, math.inf),
]


def test_lst_closed_forms():
    assert Exponential(1.0).lst(1.0) == pytest.approx(0.5, abs=1e-15)
    assert Deterministic(2.0).lst(0.5) == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert Erlang(2, 1.0).lst(1.0) == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("dist", ALL_FAMILIES)
def test_lst_normalized_and_bounded(dist):
    assert dist.lst(0.0) == pytest.approx(1.0, abs=1e-14)
    rng = np.random.default_rng(7)
    for _ in range(25):
        w = complex(rng.uniform(0, 5), rng.uniform(-5, 5))
        assert abs(dist.lst(w)) <= 1.0 + 1e-12


def test_lst_rejects_negative_real_part():
    with pytest.raises(DomainError):
        Exponential(1.0).lst(-0.1)


def test_moments_closed_forms():
    assert Exponential(1.0).moment(2) == pytest.approx(2.0)
    assert Deterministic(2.0).moment(2) == pytest.approx(4.0)
    mix = Mixture(((0.5, Exponential(1.0)), (0.5, Deterministic(2.0))))
    assert mix.moment(1) == pytest.approx(1.5)
    assert Erlang(3, 2.0).moment(1) == pytest.approx(1.5)
    assert Erlang(3, 2.0).moment(2) == pytest.approx(3.0)
    hyp = HyperExponential((0.3, 0.7), (0.5, 2.0))
    assert hyp.moment(1) == pytest.approx(0.3 / 0.5 + 0.7 / 2.0)
    assert hyp.moment(2) == pytest.approx(2 * 0.3 / 0.25 + 2 * 0.7 / 4.0)


@pytest.mark.parametrize("dist", ALL_FAMILIES)
def test_derivative_of_lst_matches_moments(dist):
    f = TransformFn.lst(dist.lst, scale=max(dist.mean(), 0.1))
    assert derivative_at_zero(f, 1) == pytest.approx(dist.moment(1), rel=1e-7)
    assert derivative_at_zero(f, 2) == pytest.approx(dist.moment(2), rel=1e-7)


class TestBusyPeriod:
    def test_value_at_zero_and_zero_rate(self):
        bp = BusyPeriod(Exponential(1.0), 0.5)
        assert bp.lst(0.0) == pytest.approx(1.0)
        free = BusyPeriod(Deterministic(2.0), 0.0)
        assert free.lst(1.3) == pytest.approx(Deterministic(2.0).lst(1.3))

    def test_mm1_quadratic_root(self):
        # M/M/1 busy period solves lam*p^2 - (lam+mu+w)*p + mu = 0
        lam, mu, w = 0.5, 1.0, 1.0
        expected = ((lam + mu + w) - math.sqrt((lam + mu + w) ** 2 - 4 * lam * mu)) / (2 * lam)
        bp = BusyPeriod(Exponential(mu), lam)
        assert bp.lst(w) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.4384472, abs=1e-7)

    @pytest.mark.parametrize("dist,lam", [(Exponential(1.0), 0.5), (Erlang(2, 4.0), 0.9), (Deterministic(0.5), 1.2)])
    def test_defining_equation_on_complex_grid(self, dist, lam):
        bp = BusyPeriod(dist, lam)
        rng = np.random.default_rng(3)
        for _ in range(20):
            w = complex(rng.uniform(0, 4), rng.uniform(-4, 4))
            p = bp.lst(w)
            assert abs(p - dist.lst(w + lam * (1 - p))) < 1e-12

    def test_mean_busy_period(self):
        bp = BusyPeriod(Erlang(2, 4.0), 0.8)
        rho = 0.8 * 0.5
        f = TransformFn.lst(bp.lst, scale=bp.mean())
        assert derivative_at_zero(f, 1) == pytest.approx(0.5 / (1 - rho), rel=1e-7)


class TestTruncatedExponential:
    def test_identity_band(self):
        dist, prob = truncate_exponential(1.0, 0.0, math.inf)
        assert prob == 1.0
        assert dist.lst(0.7) == pytest.approx(Exponential(1.0).lst(0.7))

    def test_band_probability_is_cdf_difference(self):
        for t in (0.3, 1.0, 4.0):
            _, prob = truncate_exponential(1.0, 0.0, t)
            assert prob == pytest.approx(1.0 - math.exp(-t), rel=1e-14)

    def test_moments_against_quadrature(self):
        dist = TruncatedExponential(1.0, 0.0, 1.0)
        norm = 1.0 - math.exp(-1.0)
        mean, _ = integrate.quad(lambda x: x * math.exp(-x) / norm, 0.0, 1.0)
        second, _ = integrate.quad(lambda x: x * x * math.exp(-x) / norm, 0.0, 1.0)
        assert dist.mean() == pytest.approx(mean, rel=1e-10)
        assert dist.second_moment() == pytest.approx(second, rel=1e-10)
        assert dist.mean() == pytest.approx(0.4180, abs=5e-5)

    def test_lst_against_quadrature(self):
        dist = TruncatedExponential(2.0, 0.5, 3.0)
        norm = math.exp(-1.0) - math.exp(-6.0)
        for w in (0.3, 1.0, 2.5):
            expected, _ = integrate.quad(lambda x: math.exp(-w * x) * 2 * math.exp(-2 * x) / norm, 0.5, 3.0)
            assert dist.lst(w) == pytest.approx(expected, rel=1e-10)

    def test_empty_band_rejected(self):
        with pytest.raises(EmptyBandError):
            truncate_exponential(1.0, 50.0, 50.001)

    def test_partition_recombines_to_parent(self):
        cuts = [0.0, 0.4, 1.1, 2.5, math.inf]
        parts = [truncate_exponential(1.3, a, b) for a, b in zip(cuts[:-1], cuts[1:])]
        assert sum(p for _, p in parts) == pytest.approx(1.0, abs=1e-14)
        rng = np.random.default_rng(11)
        for _ in range(20):
            w = complex(rng.uniform(0, 5), rng.uniform(-5, 5))
            combined = sum(p * d.lst(w) for d, p in parts)
            assert abs(combined - Exponential(1.3).lst(w)) < 1e-12


class TestSampling:
    def test_deterministic(self):
        rng = np.random.default_rng(0)
        assert Deterministic(2.0).sample(rng) == 2.0

    def test_exponential_law_of_large_numbers(self):
        rng = np.random.default_rng(42)
        draws = Exponential(1.0).sample(rng, 1_000_000)
        assert abs(draws.mean() - 1.0) < 0.01

    def test_degenerate_mixture_weight(self):
        mix = Mixture(((1.0, Deterministic(3.0)), (0.0, Exponential(1.0))))
        rng = np.random.default_rng(1)
        assert np.all(mix.sample(rng, 50) == 3.0)

    @pytest.mark.parametrize("dist", ALL_FAMILIES)
    def test_sample_mean_matches_moment(self, dist):
        rng = np.random.default_rng(5)
        draws = dist.sample(rng, 200_000)
        tol = 4 * math.sqrt(max(dist.variance(), 1e-12) / 200_000)
        assert abs(draws.mean() - dist.mean()) < max(tol, 1e-9)

    def test_truncated_sample_stays_in_band(self):
        dist = TruncatedExponential(1.0, 0.5, 2.0)
        rng = np.random.default_rng(9)
        draws = dist.sample(rng, 10_000)
        assert draws.min() >= 0.5 and draws.max() < 2.0

    def test_reproducible_given_seed(self):
        a = Erlang(2, 1.0).sample(np.random.default_rng(123), 10)
        b = Erlang(2, 1.0).sample(np.random.default_rng(123), 10)
        assert np.array_equal(a, b)


class TestConfig:
    def test_all_families_parse(self):
        cases = [
            ({"family": "exponential", "rate": 2.0}, Exponential(2.0)),
            ({"family": "deterministic", "value": 1.5}, Deterministic(1.5)),
            ({"family": "erlang", "shape": 2, "rate": 3.0}, Erlang(2, 3.0)),
            (
                {"family": "hyperexponential", "weights": [0.4, 0.6], "rates": [1.0, 2.0]},
                HyperExponential((0.4, 0.6), (1.0, 2.0)),
            ),
            (
                {
                    "family": "mixture",
                    "components": [
                        {"weight": 0.5, "dist": {"family": "exponential", "rate": 1.0}},
                        {"weight": 0.5, "dist": {"family": "deterministic", "value": 2.0}},
                    ],
                },
                Mixture(((0.5, Exponential(1.0)), (0.5, Deterministic(2.0)))),
            ),
            (
                {"family": "truncated_exponential", "rate": 1.0, "lower": 0.0, "upper": 1.0},
                TruncatedExponential(1.0, 0.0, 1.0),
            ),
            (
                {"family": "truncated_exponential", "rate": 1.0, "lower": 1.0, "upper": None},
                TruncatedExponential(1.0, 1.0, math.inf),
            ),
        ]
        for cfg, expected in cases:
            assert distribution_from_config(cfg) == expected

    def test_unknown_family_and_missing_params(self):
        with pytest.raises(ValueError):
            distribution_from_config({"family": "pareto", "alpha": 2})
        with pytest.raises(ValueError):
            distribution_from_config({"family": "exponential"})


def test_mixture_of_collapses_singleton():
    assert mixture_of([(1.0, Exponential(2.0))]) == Exponential(2.0)
    mix = mixture_of([(0.2, Exponential(1.0)), (0.6, Deterministic(1.0))])
    assert isinstance(mix, Mixture)
    assert mix.components[0][0] == pytest.approx(0.25)
