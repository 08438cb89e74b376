"""Service-time laws and their transform-side functionals.

Every law is a small frozen dataclass.  The transform-capable families
(Exponential, Erlang, HyperExponential, Deterministic) expose the
Laplace-Stieltjes transform of the service time, its derivatives of any
order, the transform of the survival function, and the "killed survival"
functional E[e^{-a B} 1{B >= t}] -- all in closed form, valid at complex
arguments.  Pareto is simulation-only (tail, mean, sample).
"""

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .errors import DomainError, UnsupportedTransform

__all__ = [
    "Exponential",
    "Erlang",
    "HyperExponential",
    "Deterministic",
    "Pareto",
    "ServiceLaw",
    "lst",
    "lst_derivative",
    "lst_derivative_scaled",
    "survival_transform_derivative",
    "survival_transform_derivative_scaled",
    "killed_survival",
    "killed_survival_terms",
    "tail",
    "mean",
    "sample",
    "is_transform_capable",
]

# Minimum relative gap between hyperexponential rates; closer rates cause
# catastrophic cancellation in the partial fractions used downstream.
_RATE_GAP = 1e-8


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")


@dataclass(frozen=True)
class Erlang:
    shape: int
    rate: float

    def __post_init__(self):
        if self.shape < 1 or int(self.shape) != self.shape:
            raise ValueError("shape must be a positive integer")
        if self.rate <= 0:
            raise ValueError("rate must be positive")


@dataclass(frozen=True)
class HyperExponential:
    weights: tuple
    rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(q) for q in self.weights))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if len(self.weights) != len(self.rates) or not self.weights:
            raise ValueError("weights and rates must be nonempty and equal length")
        if any(q <= 0 for q in self.weights):
            raise ValueError("weights must be positive")
        if any(r <= 0 for r in self.rates):
            raise ValueError("rates must be positive")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        rs = self.rates
        for a in range(len(rs)):
            for b in range(a + 1, len(rs)):
                if abs(rs[a] - rs[b]) < _RATE_GAP * max(rs[a], rs[b]):
                    raise ValueError(
                        "hyperexponential rates are too close; merge the "
                        "branches into an Erlang mixture instead"
                    )


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("value must be positive")


@dataclass(frozen=True)
class Pareto:
    """Classical Pareto on [scale, inf) with tail (t/scale)^(-index).

    Simulation-only: it has no rational transform, so every transform-side
    operation raises UnsupportedTransform.
    """

    index: float
    scale: float

    def __post_init__(self):
        if self.index <= 1:
            raise ValueError("tail index must exceed 1 (finite mean)")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


ServiceLaw = Exponential | Erlang | HyperExponential | Deterministic | Pareto


def is_transform_capable(law):
    return not isinstance(law, Pareto)


def _require_transform(law):
    if isinstance(law, Pareto):
        raise UnsupportedTransform("Pareto is simulation-only; no transform available")


def lst(law, s):
    """Laplace-Stieltjes transform E[e^{-s B}] at Re s >= 0."""
    _require_transform(law)
    if s.real < 0 and s.imag == 0:
        # Complex off-axis arguments are allowed: the inversion contours
        # evaluate the analytic continuation in the left half-plane.
        raise DomainError("lst requires Re s >= 0")
    if isinstance(law, Exponential):
        return law.rate / (law.rate + s)
    if isinstance(law, Erlang):
        return (law.rate / (law.rate + s)) ** law.shape
    if isinstance(law, HyperExponential):
        return sum(q * r / (r + s) for q, r in zip(law.weights, law.rates))
    return np.exp(-s * law.value)


def lst_derivative(law, order, s):
    """Exact j-th derivative of the LST, from the family's closed form."""
    _require_transform(law)
    if order < 0:
        raise DomainError("derivative order must be nonnegative")
    if s.real < 0 and s.imag == 0:
        raise DomainError("lst_derivative requires Re s >= 0")
    j = order
    if isinstance(law, Exponential):
        return (-1) ** j * factorial(j) * law.rate / (law.rate + s) ** (j + 1)
    if isinstance(law, Erlang):
        c, r = law.shape, law.rate
        coef = factorial(c + j - 1) // factorial(c - 1)
        return (-1) ** j * coef * r**c / (r + s) ** (c + j)
    if isinstance(law, HyperExponential):
        return sum(
            (-1) ** j * factorial(j) * q * r / (r + s) ** (j + 1)
            for q, r in zip(law.weights, law.rates)
        )
    return (-law.value) ** j * np.exp(-s * law.value)


def _log_power_over_factorial(base, j):
    """base^j / j! for base > 0, stable for large j."""
    if j == 0:
        return 1.0
    from scipy.special import gammaln

    return float(np.exp(j * np.log(base) - gammaln(j + 1)))


def lst_derivative_scaled(law, order, s):
    """beta^(j)(s) / j!, stable for large j.

    The plain derivative carries a factorial that overflows beyond j ~ 170;
    callers that pair it with a 1/j! coefficient use this form instead.
    """
    _require_transform(law)
    if order < 0:
        raise DomainError("derivative order must be nonnegative")
    if s.real < 0 and s.imag == 0:
        raise DomainError("lst_derivative_scaled requires Re s >= 0")
    j = order
    if isinstance(law, Exponential):
        return (-1) ** j * law.rate / (law.rate + s) ** (j + 1)
    if isinstance(law, Erlang):
        c, r = law.shape, law.rate
        return (-1) ** j * comb(c + j - 1, j) * r**c / (r + s) ** (c + j)
    if isinstance(law, HyperExponential):
        return sum(
            (-1) ** j * q * r / (r + s) ** (j + 1)
            for q, r in zip(law.weights, law.rates)
        )
    d = law.value
    return (-1) ** j * _log_power_over_factorial(d, j) * np.exp(-s * d)


def survival_transform_derivative_scaled(law, order, s):
    """sigma^(j)(s) / j! where sigma(s) = (1 - beta(s)) / s."""
    _require_transform(law)
    if order < 0:
        raise DomainError("derivative order must be nonnegative")
    if s == 0:
        raise DomainError("survival transform derivatives require s != 0")
    if s.real < 0 and s.imag == 0:
        raise DomainError("survival_transform_derivative_scaled requires Re s >= 0")
    j = order
    if isinstance(law, Exponential):
        return (-1) ** j / (law.rate + s) ** (j + 1)
    if isinstance(law, Erlang):
        r = law.rate
        return sum(
            r**i * (-1) ** j * comb(i + j, i) / (r + s) ** (i + j + 1)
            for i in range(law.shape)
        )
    if isinstance(law, HyperExponential):
        return sum(
            (-1) ** j * q / (r + s) ** (j + 1)
            for q, r in zip(law.weights, law.rates)
        )
    d = law.value
    total = (-1) ** j / s ** (j + 1)
    for i in range(j + 1):
        total -= (
            _log_power_over_factorial(d, i)
            * (-1) ** i
            * np.exp(-s * d)
            * (-1) ** (j - i)
            / s ** (j - i + 1)
        )
    return total


def survival_transform_derivative(law, order, s):
    """j-th derivative of s |-> integral_0^inf e^{-s t} P(B > t) dt.

    The zeroth derivative is (1 - lst(s)) / s; each family admits a
    cancellation-free closed form used here.
    """
    _require_transform(law)
    if order < 0:
        raise DomainError("derivative order must be nonnegative")
    if s == 0:
        raise DomainError("survival transform derivatives require s != 0")
    if s.real < 0 and s.imag == 0:
        raise DomainError("survival_transform_derivative requires Re s >= 0")
    j = order
    if isinstance(law, Exponential):
        return (-1) ** j * factorial(j) / (law.rate + s) ** (j + 1)
    if isinstance(law, Erlang):
        # P(B > t) = sum_{i<c} e^{-rt}(rt)^i/i!, so the transform is a sum
        # of simple poles at -r.
        r = law.rate
        return sum(
            r**i * (-1) ** j * (factorial(i + j) // factorial(i)) / (r + s) ** (i + j + 1)
            for i in range(law.shape)
        )
    if isinstance(law, HyperExponential):
        return sum(
            (-1) ** j * factorial(j) * q / (r + s) ** (j + 1)
            for q, r in zip(law.weights, law.rates)
        )
    # Deterministic: (1 - e^{-s d}) / s by the Leibniz rule.
    d = law.value
    total = (-1) ** j * factorial(j) / s ** (j + 1)
    for i in range(j + 1):
        total -= (
            comb(j, i)
            * (-d) ** i
            * np.exp(-s * d)
            * (-1) ** (j - i)
            * factorial(j - i)
            / s ** (j - i + 1)
        )
    return total


def killed_survival(law, alpha, t):
    """E[e^{-alpha B} 1{B >= t}] for a transform-capable law.

    At alpha=0 this is the survival function; at t=0 it is the LST.  The
    Deterministic atom at d is counted when t == d (closed endpoint).
    """
    _require_transform(law)
    if t < 0:
        raise DomainError("t must be nonnegative")
    if isinstance(law, Exponential):
        r = law.rate
        return r / (r + alpha) * np.exp(-(r + alpha) * t)
    if isinstance(law, Erlang):
        c, r = law.shape, law.rate
        x = (r + alpha) * t
        part = sum(x**i / factorial(i) for i in range(c))
        return (r / (r + alpha)) ** c * np.exp(-x) * part
    if isinstance(law, HyperExponential):
        return sum(
            q * r / (r + alpha) * np.exp(-(r + alpha) * t)
            for q, r in zip(law.weights, law.rates)
        )
    d = law.value
    return np.exp(-alpha * d) if t <= d else 0.0


def killed_survival_terms(law, alpha):
    """Exponential-polynomial form of t |-> killed_survival(law, alpha, t).

    Returns a list of (coef, power, rate) triples meaning
    sum coef * t^power * e^{-rate t}.  Only phase-type families have such a
    form; Deterministic callers must integrate over [0, d] instead.
    """
    _require_transform(law)
    if isinstance(law, Exponential):
        r = law.rate
        return [(r / (r + alpha), 0, r + alpha)]
    if isinstance(law, Erlang):
        c, r = law.shape, law.rate
        return [
            ((r / (r + alpha)) ** c * (r + alpha) ** i / factorial(i), i, r + alpha)
            for i in range(c)
        ]
    if isinstance(law, HyperExponential):
        return [
            (q * r / (r + alpha), 0, r + alpha)
            for q, r in zip(law.weights, law.rates)
        ]
    raise UnsupportedTransform(
        "Deterministic has no exponential-polynomial killed survival"
    )


def tail(law, t):
    """P(B > t)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if isinstance(law, Exponential):
        return float(np.exp(-law.rate * t))
    if isinstance(law, Erlang):
        x = law.rate * t
        return float(np.exp(-x) * sum(x**i / factorial(i) for i in range(law.shape)))
    if isinstance(law, HyperExponential):
        return float(
            sum(q * np.exp(-r * t) for q, r in zip(law.weights, law.rates))
        )
    if isinstance(law, Deterministic):
        return 1.0 if t < law.value else 0.0
    return 1.0 if t <= law.scale else float((t / law.scale) ** (-law.index))


def mean(law):
    """E[B]; finite for every supported law."""
    if isinstance(law, Exponential):
        return 1.0 / law.rate
    if isinstance(law, Erlang):
        return law.shape / law.rate
    if isinstance(law, HyperExponential):
        return sum(q / r for q, r in zip(law.weights, law.rates))
    if isinstance(law, Deterministic):
        return law.value
    return law.index * law.scale / (law.index - 1.0)


def sample(law, rng, size=None):
    """Draw from the law using the supplied numpy Generator."""
    if isinstance(law, Exponential):
        return rng.exponential(1.0 / law.rate, size=size)
    if isinstance(law, Erlang):
        return rng.gamma(law.shape, 1.0 / law.rate, size=size)
    if isinstance(law, HyperExponential):
        idx = rng.choice(len(law.rates), size=size, p=law.weights)
        scales = 1.0 / np.asarray(law.rates)
        return rng.exponential(scales[idx])
    if isinstance(law, Deterministic):
        if size is None:
            return law.value
        return np.full(size, law.value)
    u = 1.0 - rng.random(size)
    return law.scale * u ** (-1.0 / law.index)
