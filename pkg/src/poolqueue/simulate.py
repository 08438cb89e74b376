"""Independent oracles: Monte Carlo simulation and exact CTMC computations.

The Monte Carlo path replays the model directly -- draw the interarrival
chain and all service times, run the FIFO single-server recursion -- and
therefore shares no code with the transform pipeline it validates.  For
exponential service the model is a finite continuous-time Markov chain on
(customers present, customers yet to arrive); its distribution at an
exponential deadline (resolvent) or a fixed time (uniformization) gives
exact reference values.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels, service
from .errors import UnsupportedOracle
from .service import Exponential

__all__ = ["SimConfig", "SimReport", "simulate", "ctmc_resolvent", "ctmc_at_time"]

_CHUNK = 200_000


@dataclass(frozen=True)
class SimConfig:
    k: int
    m: int
    plan: object
    law: object
    gamma: float | None = None
    times: tuple = ()
    z_grid: tuple = ()
    alpha_grid: tuple = ()
    tail_points: tuple = ()  # (j, t) pairs for empirical P(W_j > t)
    replications: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.k < 0 or self.m < 0:
            raise ValueError("k and m must be nonnegative")


@dataclass
class Estimate:
    value: float
    stderr: float

    def as_tuple(self):
        return (self.value, self.stderr)


@dataclass
class SimReport:
    config: SimConfig
    kill_pmf: list = field(default_factory=list)  # Estimate per level at T
    time_pmf: dict = field(default_factory=dict)  # t -> list of Estimate
    pgf_values: dict = field(default_factory=dict)  # z -> Estimate of E[z^Z(T)]
    workload_lst: dict = field(default_factory=dict)  # alpha -> Estimate
    waiting_means: list = field(default_factory=list)  # Estimate per customer j
    waiting_tail: dict = field(default_factory=dict)  # (j, t) -> Estimate

    def to_dict(self):
        cfg = self.config
        return {
            "config": {
                "k": cfg.k,
                "m": cfg.m,
                "gamma": cfg.gamma,
                "replications": cfg.replications,
                "seed": cfg.seed,
            },
            "kill_pmf": [e.as_tuple() for e in self.kill_pmf],
            "time_pmf": {str(t): [e.as_tuple() for e in es] for t, es in self.time_pmf.items()},
            "pgf_values": {str(z): e.as_tuple() for z, e in self.pgf_values.items()},
            "workload_lst": {str(a): e.as_tuple() for a, e in self.workload_lst.items()},
            "waiting_means": [e.as_tuple() for e in self.waiting_means],
            "waiting_tail": {f"{j},{t}": e.as_tuple() for (j, t), e in self.waiting_tail.items()},
        }


class _Acc:
    """Streaming mean/variance accumulator (deterministic reduction order)."""

    def __init__(self, dim):
        self.n = 0
        self.s = np.zeros(dim)
        self.s2 = np.zeros(dim)

    def add(self, block):
        self.n += block.shape[0]
        self.s += block.sum(axis=0)
        self.s2 += (block * block).sum(axis=0)

    def estimates(self):
        mean = self.s / self.n
        var = np.maximum(self.s2 / self.n - mean**2, 0.0)
        se = np.sqrt(var / self.n)
        return [Estimate(float(mu), float(e)) for mu, e in zip(mean, se)]


def _chunk_rng(seed, chunk_index):
    # Counter-based substreams: one disjoint Philox block per chunk, so the
    # aggregate is independent of execution order.
    bits = np.random.Philox(key=seed)
    bits.advance(chunk_index * (1 << 64))
    return np.random.Generator(bits)


def _replay(config, rng, n_rep):
    """One vectorized batch of FIFO sample paths.

    Returns (arrival, start, depart) arrays of shape (n_rep, k+m); the
    first k columns are the customers already present at time zero.
    """
    k, m = config.k, config.m
    total = k + m
    arrivals = np.zeros((n_rep, total))
    if m:
        rates = kernels.plan_rates(config.plan)  # lambda_1..lambda_m
        gaps = rng.exponential(1.0 / rates[::-1], size=(n_rep, m))
        arrivals[:, k:] = np.cumsum(gaps, axis=1)
    services = service.sample(config.law, rng, size=(n_rep, total))
    start = np.zeros((n_rep, total))
    depart = np.zeros((n_rep, total))
    prev_depart = np.zeros(n_rep)
    for j in range(total):
        start[:, j] = np.maximum(arrivals[:, j], prev_depart)
        prev_depart = start[:, j] + services[:, j]
        depart[:, j] = prev_depart
    return arrivals, start, depart


def _count_at(arrivals, depart, t):
    """Z(t) per replication; t is a column vector or scalar.

    The k initial customers occupy the first k columns with arrival time
    zero, so counting arrivals covers them."""
    arrived = (arrivals <= t).sum(axis=1)
    departed = (depart <= t).sum(axis=1)
    return arrived - departed


def _workload_at(arrivals, start, depart, t):
    services = depart - start
    present = (arrivals <= t) * services
    busy = np.clip(np.minimum(depart, t) - np.minimum(start, t), 0.0, None)
    return present.sum(axis=1) - busy.sum(axis=1)


def simulate(config):
    """Run the Monte Carlo study described by config and collect estimates."""
    k, m = config.k, config.m
    total = k + m
    levels = total + 1
    acc_kill = _Acc(levels) if config.gamma is not None else None
    acc_time = {t: _Acc(levels) for t in config.times}
    acc_pgf = {z: _Acc(1) for z in config.z_grid}
    acc_work = {a: _Acc(1) for a in config.alpha_grid}
    acc_wait = _Acc(total) if total else None
    acc_tail = {jt: _Acc(1) for jt in config.tail_points}

    remaining = config.replications
    chunk_index = 0
    while remaining > 0:
        n_rep = min(_CHUNK, remaining)
        rng = _chunk_rng(config.seed, chunk_index)
        arrivals, start, depart = _replay(config, rng, n_rep)
        if total:
            acc_wait.add(start - arrivals)
        for (j, t), acc in acc_tail.items():
            w = start[:, j - 1] - arrivals[:, j - 1]
            acc.add((w > t).astype(float)[:, None])
        if config.gamma is not None:
            kill = rng.exponential(1.0 / config.gamma, size=n_rep)[:, None]
            z_at_kill = _count_at(arrivals, depart, kill)
            ind = z_at_kill[:, None] == np.arange(levels)[None, :]
            acc_kill.add(ind.astype(float))
            for z, acc in acc_pgf.items():
                acc.add((float(z) ** z_at_kill)[:, None])
            if acc_work:
                wl = _workload_at(arrivals, start, depart, kill)
                for a, acc in acc_work.items():
                    acc.add(np.exp(-float(a) * wl)[:, None])
        for t, acc in acc_time.items():
            z_at_t = _count_at(arrivals, depart, float(t))
            ind = z_at_t[:, None] == np.arange(levels)[None, :]
            acc.add(ind.astype(float))
        remaining -= n_rep
        chunk_index += 1

    report = SimReport(config=config)
    if acc_kill is not None:
        report.kill_pmf = acc_kill.estimates()
    report.time_pmf = {t: acc.estimates() for t, acc in acc_time.items()}
    report.pgf_values = {z: acc.estimates()[0] for z, acc in acc_pgf.items()}
    report.workload_lst = {a: acc.estimates()[0] for a, acc in acc_work.items()}
    if acc_wait is not None:
        report.waiting_means = acc_wait.estimates()
    report.waiting_tail = {jt: acc.estimates()[0] for jt, acc in acc_tail.items()}
    return report


def _state_index(ell, n, m):
    return ell * (m + 1) + n


def _generator(k, m, plan, law):
    if not isinstance(law, Exponential):
        raise UnsupportedOracle("exact CTMC oracles require exponential service")
    mu = law.rate
    size = (k + m + 1) * (m + 1)
    if size > 10_000:
        raise ValueError("CTMC state space too large")
    rates = kernels.plan_rates(plan)
    Q = np.zeros((size, size))
    for ell in range(k + m + 1):
        for n in range(m + 1):
            if ell + n > k + m:
                continue  # unreachable: more customers than the pool holds
            s = _state_index(ell, n, m)
            if n >= 1:
                lam = rates[n - 1]
                Q[s, _state_index(ell + 1, n - 1, m)] += lam
                Q[s, s] -= lam
            if ell >= 1:
                Q[s, _state_index(ell - 1, n, m)] += mu
                Q[s, s] -= mu
    return Q, size


def ctmc_resolvent(k, m, plan, law, gamma):
    """Exact distribution of (Z, still-to-arrive) at an Exp(gamma) deadline.

    Returns an array P[ell, n]; the marginal over n matches the pgf
    coefficients from the transform recursion.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    Q, size = _generator(k, m, plan, law)
    e = np.zeros(size)
    e[_state_index(k, m, m)] = gamma
    dist = np.linalg.solve((gamma * np.eye(size) - Q).T, e)
    return dist.reshape(k + m + 1, m + 1)


def ctmc_at_time(k, m, plan, law, t):
    """Exact distribution of (Z, still-to-arrive) at time t, by uniformization."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    Q, size = _generator(k, m, plan, law)
    q = float(np.max(-np.diag(Q)))
    init = np.zeros(size)
    init[_state_index(k, m, m)] = 1.0
    if q == 0.0 or t == 0.0:
        return init.reshape(k + m + 1, m + 1)
    if q * t > 200.0:
        # Poisson weights underflow; fall back to a direct matrix exponential.
        from scipy.linalg import expm

        out = init @ expm(Q * t)
        return out.reshape(k + m + 1, m + 1)
    P = np.eye(size) + Q / q
    out = np.zeros(size)
    vec = init
    weight = np.exp(-q * t)
    cumulative = weight
    out += weight * vec
    j = 0
    while cumulative < 1.0 - 1e-12:
        j += 1
        vec = vec @ P
        weight *= q * t / j
        out += weight * vec
        cumulative += weight
        if j > 10_000:
            break
    return out.reshape(k + m + 1, m + 1)
