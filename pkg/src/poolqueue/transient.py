"""Queue-length transform at an exponential deadline, as an exact polynomial.

The distribution of the number of customers present at an independent
Exp(gamma) time, starting from k present and m yet to arrive, has a
probability generating function that satisfies a triangular recursion in
(customers present, customers yet to arrive).  Working with coefficient
arrays instead of pointwise values makes the PMF and the factorial moments
exact by-products and keeps normalization testable.

The same recursion, with the v-kernel replaced by its workload-extended
version, yields the joint transform E[z^{Z} e^{-alpha W}] of queue length
and remaining work at the deadline.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from . import kernels, service

__all__ = [
    "PgfPolynomial",
    "JointTransformValue",
    "pgf",
    "joint_transform",
    "workload_lst",
    "pmf",
    "factorial_moments",
]


@dataclass(frozen=True)
class PgfPolynomial:
    """Coefficient view of E[z^{Z(T)}]: coeffs[l] = P(Z(T) = l)."""

    coeffs: np.ndarray

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coeffs)


@dataclass(frozen=True)
class JointTransformValue:
    """z-polynomial coefficients of E[z^{Z(T)} e^{-alpha W(T)}] at fixed alpha."""

    alpha: complex
    coeffs: np.ndarray

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coeffs)


def _recurse(k, m, tables, v_rows, row_factors, dtype):
    """Run the coefficient recursion and return the target row's coefficients.

    v_rows[n][i] is the weight added at column l+i of row l (already
    including any per-i factor); row_factors[l] scales that weight per row.
    Levels are dense 2-D arrays: level n holds rows l = 0..k+(m-n), each a
    coefficient vector of the polynomial for state (l, n).
    """
    width = k + m + 1
    top = k + m
    gamma = tables.gamma
    # Level 0: first-order recurrence in l with a monomial source term.
    u00 = tables.u[0][0]
    level = np.zeros((top + 1, width), dtype=dtype)
    level[0, 0] = 1.0
    for ell in range(1, top + 1):
        level[ell] = u00 * level[ell - 1]
        level[ell, ell] += row_factors[ell] * v_rows[0][0]
    levels = [level]
    for n in range(1, m + 1):
        rows = k + m - n
        lam_n = kernels.rate(tables.plan, n)
        cur = np.zeros((rows + 1, width), dtype=dtype)
        cur[0] = (lam_n / (gamma + lam_n)) * levels[n - 1][1]
        cur[0, 0] += gamma / (gamma + lam_n)
        if rows >= 1:
            # Contributions from earlier levels (i >= 1 arrivals during the
            # service) land on rows 1..rows in one shifted slice per i.
            for i in range(1, n + 1):
                cur[1:] += tables.u[n][i] * levels[n - i][i : rows + i]
            ell_idx = np.arange(1, rows + 1)
            for i in range(n + 1):
                cur[ell_idx, ell_idx + i] += row_factors[1 : rows + 1] * v_rows[n][i]
            # The i = 0 term couples row l to row l-1 of the same level.
            u_n0 = tables.u[n][0]
            for ell in range(1, rows + 1):
                cur[ell] += u_n0 * cur[ell - 1]
        levels.append(cur)
    return levels[m][k]


def pgf(k, m, plan, law, gamma, tables=None):
    """PGF of the customer count at an independent Exp(gamma) deadline.

    Returns the polynomial whose coefficients are P(Z(T) = l) starting from
    k customers present and m yet to arrive.  gamma may be complex, in
    which case the coefficients are complex-valued transform evaluations.
    """
    if k < 0 or m < 0:
        raise ValueError("k and m must be nonnegative")
    if tables is None:
        tables = kernels.build_tables(plan, law, gamma)
    dtype = complex if np.iscomplexobj(gamma) else float
    row_factors = np.ones(k + m + 1, dtype=dtype)
    coeffs = _recurse(k, m, tables, tables.v, row_factors, dtype)
    return PgfPolynomial(coeffs=coeffs)


def joint_transform(k, m, plan, law, gamma, alpha, tables=None):
    """Joint transform of customer count and workload at the deadline.

    Computed by the same recursion with the weight at column l+i replaced by
    beta(alpha)^{l+i-1} v_{ni}(alpha); at alpha = 0 it reduces to pgf().
    """
    if alpha.real < 0:
        raise ValueError("alpha must have nonnegative real part")
    if tables is None:
        tables = kernels.build_tables(plan, law, gamma)
    beta_a = service.lst(law, alpha)
    v_rows = [
        np.array(
            [beta_a**i * tables.v_alpha(n, i, alpha) for i in range(n + 1)],
            dtype=complex,
        )
        for n in range(m + 1)
    ]
    # beta(alpha)^{l-1} per row; the l = 0 row never uses its factor.
    row_factors = np.empty(k + m + 1, dtype=complex)
    row_factors[0] = 1.0
    row_factors[1:] = beta_a ** np.arange(0, k + m)
    coeffs = _recurse(k, m, tables, v_rows, row_factors, complex)
    return JointTransformValue(alpha=alpha, coeffs=coeffs)


def workload_lst(k, m, plan, law, gamma, alpha, tables=None):
    """E[e^{-alpha W(T)}]: the joint transform summed at z = 1."""
    value = joint_transform(k, m, plan, law, gamma, alpha, tables=tables).coeffs.sum()
    return value


def pmf(k, m, plan, law, gamma, tables=None):
    """P(Z(T) = l) for l = 0..k+m (the PGF's coefficient array)."""
    return pgf(k, m, plan, law, gamma, tables=tables).coeffs


def factorial_moments(k, m, plan, law, gamma, max_order, tables=None):
    """E[Z(Z-1)...(Z-l+1)] at the deadline, for l = 0..max_order.

    Index l of the result is the l-th falling-factorial moment; the empty
    product at l = 0 gives 1.
    """
    probs = pmf(k, m, plan, law, gamma, tables=tables)
    out = np.zeros(max_order + 1, dtype=probs.dtype)
    out[0] = probs.sum()
    for order in range(1, max_order + 1):
        ff = np.array(
            [
                factorial(j) / factorial(j - order) if j >= order else 0.0
                for j in range(len(probs))
            ]
        )
        out[order] = probs @ ff
    return out
