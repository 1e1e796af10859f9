"""Closed-form moment helpers.

Central moments are produced from cumulants through the standard recursion

    m_k = sum_{j>=2} C(k-1, j-1) * kappa_j * m_{k-j},      m_0 = 1,

which is the raw-moment recursion with the first cumulant set to zero.  The
same machinery serves gamma sample means and chisquare variables, so the
printed constants used by the bound engine double as regression tests of this
recursion rather than being hardcoded tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial, pi, sqrt

from scipy.special import gammaln
import numpy as np

from .errors import UnsupportedOrder

MAX_ORDER = 8


@dataclass(frozen=True)
class MomentValue:
    """A moment with provenance: analytic entries carry zero standard error."""

    value: float
    source: str = "analytic"  # "analytic" | "monte-carlo"
    stderr: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("moment value must be finite")
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if self.source not in ("analytic", "monte-carlo"):
            raise ValueError(f"unknown moment source {self.source!r}")


def central_moments_from_cumulants(cumulants: np.ndarray, k: int) -> np.ndarray:
    """Central moments m_0..m_k from cumulants kappa_2..kappa_k.

    ``cumulants[j]`` holds kappa_j (index 0 and 1 are ignored).
    """
    kap = np.zeros(k + 1)
    kap[2 : len(cumulants)] = cumulants[2 : k + 1]
    m = np.zeros(k + 1)
    m[0] = 1.0
    for order in range(1, k + 1):
        acc = 0.0
        for j in range(2, order + 1):
            acc += comb(order - 1, j - 1) * kap[j] * m[order - j]
        m[order] = acc
    return m


def _check_even_order(k: int) -> None:
    if k % 2 != 0 or k < 2 or k > MAX_ORDER:
        raise UnsupportedOrder(f"order k={k} not supported (even, 2 <= k <= {MAX_ORDER})")


def gamma_mean_central_moment(n: int, theta0: float, k: int) -> float:
    """E(Xbar - theta0)^k for the mean of n i.i.d. exponentials with mean theta0.

    Xbar is Gamma(n, n/theta0), whose cumulants are kappa_j = (j-1)! theta0^j / n^(j-1).
    """
    _check_even_order(k)
    if n < 1:
        raise ValueError("n must be >= 1")
    if theta0 <= 0:
        raise ValueError("theta0 must be positive")
    kap = np.zeros(k + 1)
    for j in range(2, k + 1):
        kap[j] = factorial(j - 1) * theta0**j / n ** (j - 1)
    return float(central_moments_from_cumulants(kap, k)[k])


def chisq_central_moment(nu: int, k: int, shift: float) -> float:
    """E(G - shift)^k for G ~ chisquare(nu).

    Computed by shifting the central moments of G (cumulants
    kappa_j = 2^(j-1) (j-1)! nu) by delta = nu - shift.
    """
    _check_even_order(k)
    if nu < 1:
        raise ValueError("nu must be >= 1")
    kap = np.zeros(k + 1)
    for j in range(2, k + 1):
        kap[j] = 2 ** (j - 1) * factorial(j - 1) * nu
    m = central_moments_from_cumulants(kap, k)
    delta = nu - shift
    return float(sum(comb(k, i) * m[i] * delta ** (k - i) for i in range(k + 1)))


def halfnormal_abs_moment(k: int) -> float:
    """E|Z|^k for Z standard normal: 2^(k/2) Gamma((k+1)/2) / sqrt(pi)."""
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    return float(2 ** (k / 2.0) * np.exp(gammaln((k + 1) / 2.0)) / sqrt(pi))


def normal_central_moment(k: int, variance: float) -> float:
    """E(X - mu)^k for X ~ N(mu, variance); zero for odd k."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k % 2 == 1:
        return 0.0
    # (k-1)!! * variance^(k/2)
    dfact = 1.0
    for j in range(k - 1, 0, -2):
        dfact *= j
    return float(dfact * variance ** (k // 2))


def exponential_central_moment(k: int, theta: float) -> float:
    """k-th central moment of Exp(mean theta): the derangement number D_k times theta^k."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    # D_k via recursion D_k = k*D_{k-1} + (-1)^k
    d = 1
    for j in range(1, k + 1):
        d = j * d + (-1) ** j
    return float(d * theta**k)
