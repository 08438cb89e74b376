"""Waiting times under FIFO: transforms, means, and heavy-tail asymptotics.

Customers are numbered 1..k+m in service order: the k initially present
(waiting measured from time zero) followed by the m arrivals.  The waiting
time of an arriving customer satisfies a Lindley recursion against the
memoryless interarrival times, which telescopes into a closed-form
transform involving only the probabilities that each arriving customer
finds the system empty.  Those emptiness probabilities come from exact
forward propagation of the embedded departure chain.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, service
from .errors import DomainError
from .service import Pareto

__all__ = [
    "DepartureChainState",
    "initial_chain_state",
    "chain_step",
    "emptiness_probs",
    "waiting_lst",
    "waiting_mean",
    "tail_asymptote",
]

_POLE_REL_TOL = 1e-6
_POLE_CIRCLE = 1e-4


@dataclass(frozen=True)
class DepartureChainState:
    """Distribution over (customers present, yet to arrive) after `step` departures."""

    probs: np.ndarray
    step: int


def initial_chain_state(k, m):
    probs = np.zeros((k + m + 1, m + 1))
    probs[k, m] = 1.0
    return DepartureChainState(probs=probs, step=0)


def _w_tables(plan, law):
    return kernels.build_tables(plan, law, 0.0).w


def chain_step(state, plan, law, w=None):
    """One departure: propagate the chain distribution forward.

    From (l, n) with l >= 1 a service starts at once and i of the n
    outstanding customers arrive during it; from (0, n) with n >= 1 the
    service only starts when the next customer shows up, so i of the
    remaining n-1 arrive during it.  (0, 0) is absorbing.
    """
    if w is None:
        w = _w_tables(plan, law)
    probs = state.probs
    top, cols = probs.shape
    out = np.zeros_like(probs)
    out[0, 0] = probs[0, 0]
    for n1 in range(cols):
        for ell1 in range(1, top):
            p = probs[ell1, n1]
            if p == 0.0:
                continue
            for i in range(n1 + 1):
                out[ell1 + i - 1, n1 - i] += p * w[n1][i]
        if n1 >= 1:
            p = probs[0, n1]
            if p != 0.0:
                for i in range(n1):
                    out[i, n1 - 1 - i] += p * w[n1 - 1][i]
    return DepartureChainState(probs=out, step=state.step + 1)


def emptiness_probs(k, m, plan, law):
    """P(customer h finds the system empty), for h = k+1 .. k+m.

    Equals the probability that nobody is present just after departure h-1.
    """
    if m == 0:
        return np.zeros(0)
    w = _w_tables(plan, law)
    state = initial_chain_state(k, m)
    out = np.zeros(m)
    for h in range(k + 1, k + m + 1):
        while state.step < h - 1:
            state = chain_step(state, plan, law, w=w)
        out[h - k - 1] = state.probs[0, :].sum()
    return out


def _eqw3(j, alpha, k, m, lams, law, rhos):
    beta = service.lst(law, alpha)
    total = beta ** (j - 1)
    for i in range(j - k):
        lam = lams[m - i - 1]
        total *= lam / (lam - alpha)
    for h in range(k + 1, j + 1):
        lam_h = lams[m - h + k]  # lambda_{m-h+k+1}
        term = rhos[h - k - 1] * beta ** (j - h) * alpha / (lam_h - alpha)
        for w_idx in range(j - h):
            lam = lams[m + k - h - w_idx - 1]
            term *= lam / (lam - alpha)
        total -= term
    return total


def waiting_lst(j, alpha, k, m, plan, law, rhos=None):
    """E[e^{-alpha W_j}] for customer j in service order.

    The expression for arriving customers has removable singularities at
    the plan rates; real alpha within relative distance 1e-6 of a rate is
    evaluated as the average over four nearby complex points instead.
    """
    if not 1 <= j <= k + m:
        raise DomainError("customer index out of range")
    if alpha.real < 0:
        raise DomainError("alpha must have nonnegative real part")
    if j <= k:
        return service.lst(law, alpha) ** (j - 1)
    if rhos is None:
        rhos = emptiness_probs(k, m, plan, law)
    lams = kernels.plan_rates(plan)
    used = lams[m - (j - k) : m]
    near_pole = (
        np.imag(alpha) == 0
        and alpha != 0
        and np.min(np.abs(used - alpha.real) / used) < _POLE_REL_TOL
    )
    if not near_pole:
        value = _eqw3(j, alpha, k, m, lams, law, rhos)
    else:
        radius = _POLE_CIRCLE * abs(alpha)
        angles = np.pi / 4 + np.pi / 2 * np.arange(4)
        value = np.mean(
            [
                _eqw3(j, alpha + radius * np.exp(1j * a), k, m, lams, law, rhos)
                for a in angles
            ]
        )
    if np.imag(alpha) == 0:
        return float(np.real(value))
    return value


def waiting_mean(j, k, m, plan, law, rhos=None):
    """E[W_j]: (j-1) E[B] corrected by the interarrival gaps actually waited out."""
    if not 1 <= j <= k + m:
        raise DomainError("customer index out of range")
    mb = service.mean(law)
    if j <= k:
        return (j - 1) * mb
    if rhos is None:
        rhos = emptiness_probs(k, m, plan, law)
    lams = kernels.plan_rates(plan)
    total = (j - 1) * mb
    for i in range(j - k):
        total -= 1.0 / lams[m - i - 1]
    for h in range(k + 1, j + 1):
        total += rhos[h - k - 1] / lams[m - h + k]
    return total


def tail_asymptote(j, t, law):
    """Leading-order P(W_j > t) for large t under a regularly varying service law.

    A long wait for customer j is driven by one huge service among the j-1
    predecessors, giving (j-1) * P(B > t).  Asymptotic equivalent only.
    """
    if not isinstance(law, Pareto) or not 1.0 < law.index < 2.0:
        raise DomainError("tail asymptote requires a Pareto law with index in (1, 2)")
    return (j - 1) * service.tail(law, t)
