"""Distribution algebra for nonnegative random variables.

Every family carries a closed-form Laplace-Stieltjes transform (valid for
complex arguments with nonnegative real part), closed-form first and second
moments, and an exact sampler.  The busy-period transform is the fixed point
of the standard M/G/1 branching equation and is evaluated by successive
substitution.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyBandError, NoConvergenceError

# Slack below the imaginary axis tolerated before raising DOMAIN, so that
# rounding in composed arguments (which are >= 0 in exact arithmetic) passes.
_RE_SLACK = 1e-9


def _check_domain(w: complex) -> complex:
    w = complex(w)
    if w.real < -_RE_SLACK:
        raise DomainError(f"transform argument must have Re >= 0, got {w}")
    return w


def _cexpm1(w: complex) -> complex:
    """exp(w) - 1 without cancellation for small |w|."""
    if abs(w) < 1e-4:
        # 4-term Horner series, relative error < 1e-20 at |w| = 1e-4
        return w * (1.0 + w / 2.0 * (1.0 + w / 3.0 * (1.0 + w / 4.0)))
    return cmath.exp(w) - 1.0


class Distribution:
    """Base class; subclasses are immutable value objects."""

    def lst(self, w: complex) -> complex:
        """E[exp(-w X)] for Re w >= 0."""
        raise NotImplementedError

    def moment(self, k: int) -> float:
        """Exact k-th raw moment, k in {1, 2}."""
        if k == 1:
            return self.mean()
        if k == 2:
            return self.second_moment()
        raise ValueError(f"only first and second moments are supported, got k={k}")

    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        m = self.mean()
        return self.second_moment() - m * m

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw from the distribution; returns a scalar or an ndarray."""
        raise NotImplementedError


@dataclass(frozen=True)
class Deterministic(Distribution):
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("deterministic value must be >= 0")

    def lst(self, w):
        w = _check_domain(w)
        return cmath.exp(-w * self.value)

    def mean(self):
        return self.value

    def second_moment(self):
        return self.value * self.value

    def sample(self, rng, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("exponential rate must be > 0")

    def lst(self, w):
        w = _check_domain(w)
        return self.rate / (self.rate + w)

    def mean(self):
        return 1.0 / self.rate

    def second_moment(self):
        return 2.0 / (self.rate * self.rate)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)


@dataclass(frozen=True)
class Erlang(Distribution):
    shape: int
    rate: float

    def __post_init__(self):
        if self.shape < 1 or self.shape != int(self.shape):
            raise ValueError("erlang shape must be a positive integer")
        if self.rate <= 0:
            raise ValueError("erlang rate must be > 0")

    def lst(self, w):
        w = _check_domain(w)
        return (self.rate / (self.rate + w)) ** self.shape

    def mean(self):
        return self.shape / self.rate

    def second_moment(self):
        return self.shape * (self.shape + 1) / (self.rate * self.rate)

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)


@dataclass(frozen=True)
class HyperExponential(Distribution):
    weights: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.rates) or not self.weights:
            raise ValueError("weights and rates must be equally long and nonempty")
        if any(p < 0 for p in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        if any(r <= 0 for r in self.rates):
            raise ValueError("rates must be > 0")

    def lst(self, w):
        w = _check_domain(w)
        return sum(p * r / (r + w) for p, r in zip(self.weights, self.rates))

    def mean(self):
        return sum(p / r for p, r in zip(self.weights, self.rates))

    def second_moment(self):
        return sum(2.0 * p / (r * r) for p, r in zip(self.weights, self.rates))

    def sample(self, rng, size=None):
        idx = rng.choice(len(self.rates), size=size, p=self.weights)
        draws = rng.exponential(1.0, size)
        rates = np.asarray(self.rates)
        if size is None:
            return draws / rates[idx]
        return draws / rates[idx]


@dataclass(frozen=True)
class Mixture(Distribution):
    components: tuple[tuple[float, Distribution], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixture needs at least one component")
        total = sum(wgt for wgt, _ in self.components)
        if any(wgt < 0 for wgt, _ in self.components) or abs(total - 1.0) > 1e-9:
            raise ValueError("mixture weights must be nonnegative and sum to 1")

    def lst(self, w):
        w = _check_domain(w)
        return sum(wgt * dist.lst(w) for wgt, dist in self.components)

    def mean(self):
        return sum(wgt * dist.mean() for wgt, dist in self.components)

    def second_moment(self):
        return sum(wgt * dist.second_moment() for wgt, dist in self.components)

    def sample(self, rng, size=None):
        weights = [wgt for wgt, _ in self.components]
        if size is None:
            idx = rng.choice(len(self.components), p=weights)
            return self.components[idx][1].sample(rng)
        idx = rng.choice(len(self.components), size=size, p=weights)
        out = np.empty(size, dtype=float)
        for j, (_, dist) in enumerate(self.components):
            mask = idx == j
            n = int(mask.sum())
            if n:
                out[mask] = dist.sample(rng, n)
        return out


@dataclass(frozen=True)
class TruncatedExponential(Distribution):
    """Exponential(rate) conditioned on lower <= X < upper (upper may be inf)."""

    rate: float
    lower: float
    upper: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be > 0")
        if self.lower < 0 or not self.lower < self.upper:
            raise ValueError("band must satisfy 0 <= lower < upper")
        if self.band_probability() < 1e-12:
            raise EmptyBandError(
                f"band [{self.lower}, {self.upper}) of Exp({self.rate}) has "
                f"probability {self.band_probability():.3e}"
            )

    def band_probability(self) -> float:
        # P(lower <= X < upper) = exp(-r*lower) - exp(-r*upper)
        r = self.rate
        if math.isinf(self.upper):
            return math.exp(-r * self.lower)
        return -math.exp(-r * self.lower) * math.expm1(-r * (self.upper - self.lower))

    def lst(self, w):
        w = _check_domain(w)
        r, a, b = self.rate, self.lower, self.upper
        if w == -r:  # removable only in the limit; never hit for Re w >= 0
            raise DomainError("argument coincides with the negated rate")
        if math.isinf(b):
            return r / (r + w) * cmath.exp(-w * a)
        width = b - a
        num = -cmath.exp(-(r + w) * a) * _cexpm1(-(r + w) * width)
        den = -math.exp(-r * a) * math.expm1(-r * width)
        return r / (r + w) * num / den

    def _partial_moments(self):
        # integrals of x and x^2 against the untruncated density over the band
        r, a, b = self.rate, self.lower, self.upper
        ea = math.exp(-r * a)
        if math.isinf(b):
            m1 = a * ea + ea / r
            m2 = a * a * ea + 2.0 * a * ea / r + 2.0 * ea / (r * r)
        else:
            eb = math.exp(-r * b)
            m1 = (a * ea - b * eb) + (ea - eb) / r
            m2 = (a * a * ea - b * b * eb) + 2.0 * (a * ea - b * eb) / r + 2.0 * (ea - eb) / (r * r)
        return m1, m2

    def mean(self):
        return self._partial_moments()[0] / self.band_probability()

    def second_moment(self):
        return self._partial_moments()[1] / self.band_probability()

    def sample(self, rng, size=None):
        # inverse CDF: X = -log(exp(-r a) - U * band_probability) / r
        r = self.rate
        u = rng.random(size)
        ea = math.exp(-r * self.lower)
        return -np.log(ea - u * self.band_probability()) / r


def truncate_exponential(rate: float, lower: float, upper: float) -> tuple[TruncatedExponential, float]:
    """Condition Exp(rate) on the band [lower, upper); returns (distribution, band probability)."""
    if math.isinf(upper) and lower == 0.0:
        # identity band; keep the plain family for cheaper evaluation
        dist = Exponential(rate)
        return dist, 1.0
    dist = TruncatedExponential(rate, lower, upper)
    return dist, dist.band_probability()


def mixture_of(pairs: list[tuple[float, Distribution]]) -> Distribution:
    """Probability mixture; collapses the degenerate single-component case."""
    pairs = [(w, d) for w, d in pairs if w > 0.0]
    if not pairs:
        raise ValueError("mixture needs at least one component with positive weight")
    total = sum(w for w, _ in pairs)
    pairs = [(w / total, d) for w, d in pairs]
    if len(pairs) == 1:
        return pairs[0][1]
    return Mixture(tuple(pairs))


class BusyPeriod:
    """Busy-period transform of an M/G/1 queue with service `base` and arrival rate `rate`.

    The value at w is the fixed point p = base.lst(w + rate*(1 - p)), unique in
    the closed unit disk for Re w >= 0 when rate*E(base) < 1.  Successive
    substitution contracts with ratio rate*E(base); the previous solution is
    kept as the next starting point, and after the tolerance is met a few
    polishing steps push the residual toward machine precision (second
    derivatives of downstream transforms are sensitive to this floor).
    """

    TOL = 1e-13
    MAX_ITER = 100_000
    POLISH = 4

    def __init__(self, base: Distribution, rate: float):
        if rate < 0:
            raise ValueError("arrival rate must be >= 0")
        if rate * base.mean() >= 1.0:
            raise ValueError("busy period requires rate * E(service) < 1")
        self.base = base
        self.rate = rate
        self._warm: complex = 1.0 + 0.0j

    def mean(self) -> float:
        return self.base.mean() / (1.0 - self.rate * self.base.mean())

    def lst(self, w: complex) -> complex:
        w = _check_domain(w)
        if self.rate == 0.0:
            return self.base.lst(w)
        if w == 0.0:
            return 1.0 + 0.0j
        lam, base_lst = self.rate, self.base.lst
        p = self._warm
        if abs(p) > 1.0:
            p = p / abs(p)
        for _ in range(self.MAX_ITER):
            nxt = base_lst(w + lam * (1.0 - p))
            if abs(nxt - p) < self.TOL:
                p = nxt
                for _ in range(self.POLISH):
                    p = base_lst(w + lam * (1.0 - p))
                self._warm = p
                return p
            p = nxt
        raise NoConvergenceError(
            f"busy-period fixed point did not converge in {self.MAX_ITER} iterations "
            f"(load {self.rate * self.base.mean():.6f})"
        )


_FAMILIES = {
    "deterministic",
    "exponential",
    "erlang",
    "hyperexponential",
    "mixture",
    "truncated_exponential",
}


def distribution_from_config(obj: dict) -> Distribution:
    """Build a distribution from its JSON-style description.

    Schema: {"family": <name>, <parameter keys>}; families and keys:
    exponential{rate}, deterministic{value}, erlang{shape, rate},
    hyperexponential{weights, rates}, mixture{components} where each
    component is {"weight": w, "dist": {...}}, and
    truncated_exponential{rate, lower, upper} (upper may be null for +inf).
    """
    if not isinstance(obj, dict) or "family" not in obj:
        raise ValueError(f"distribution config must be an object with a 'family' key, got {obj!r}")
    family = obj["family"]
    if family not in _FAMILIES:
        raise ValueError(f"unknown distribution family {family!r}")
    try:
        if family == "deterministic":
            return Deterministic(float(obj["value"]))
        if family == "exponential":
            return Exponential(float(obj["rate"]))
        if family == "erlang":
            return Erlang(int(obj["shape"]), float(obj["rate"]))
        if family == "hyperexponential":
            return HyperExponential(
                tuple(float(p) for p in obj["weights"]),
                tuple(float(r) for r in obj["rates"]),
            )
        if family == "mixture":
            comps = tuple(
                (float(c["weight"]), distribution_from_config(c["dist"]))
                for c in obj["components"]
            )
            return Mixture(comps)
        upper = obj.get("upper")
        upper = math.inf if upper is None else float(upper)
        return TruncatedExponential(float(obj["rate"]), float(obj["lower"]), upper)
    except KeyError as exc:
        raise ValueError(f"distribution family {family!r} is missing parameter {exc}") from exc
