"""Exponential model with mean theta (d = 1): the simple-null test theta = theta0.

The sample mean is Gamma(n, n/theta) distributed, so every Q-moment is exact,
and the score-coordinate moment table uses the Cauchy-Schwarz bounds

    E|Y|   <= 1/theta,   E|Y^3| <= sqrt(265)/theta^3,   E|Y^5| <= sqrt(1334961)/theta^5

(265 and 1334961 are the 6th and 10th central moments of Exp(1), i.e.
derangement numbers).
"""

from __future__ import annotations

import numpy as np

from ..contract import (
    EXACT, UPPER_BOUND, Dataset, ParametricModel, QTMomentSet, WMomentSet,
    normal_comparison_moments,
)
from ..errors import ConfigError, NonpositiveEpsilon, OracleUnavailable
from ..moments import exponential_central_moment, gamma_mean_central_moment


def _theta_scalar(theta) -> float:
    th = float(np.atleast_1d(np.asarray(theta, dtype=float))[0])
    if th <= 0:
        raise ConfigError(f"exponential mean must be positive, got {th}")
    return th


class ExponentialModel(ParametricModel):
    model_id = "exponential"
    dim = 1
    arity = 1
    analytic_capabilities = frozenset(
        {"fisher_info", "moment_oracle", "fit", "dominating_bound"}
    )

    def log_density(self, x, theta):
        th = _theta_scalar(theta)
        xv = np.asarray(x, dtype=float).reshape(-1)
        return -np.log(th) - xv / th

    def score(self, x, theta):
        th = _theta_scalar(theta)
        xv = np.asarray(x, dtype=float).reshape(-1)
        return ((xv - th) / th**2)[:, None]

    def hessian(self, x, theta):
        th = _theta_scalar(theta)
        xv = np.asarray(x, dtype=float).reshape(-1)
        return (1.0 / th**2 - 2.0 * xv / th**3)[:, None, None]

    def fisher_info(self, theta):
        th = _theta_scalar(theta)
        return np.array([[1.0 / th**2]])

    def epsilon_default(self, theta0):
        return _theta_scalar(theta0) / 2.0

    def _m_sup(self, theta0: float, eps: float, n: int) -> float:
        """Conditional sup of M_111(X) = sup_ball |d^3 ell| given |Xbar - theta0| < eps."""
        if eps <= 0:
            raise NonpositiveEpsilon("eps must be positive")
        if eps >= theta0:
            raise ConfigError("exponential dominating function needs eps < theta0")
        lo = theta0 - eps
        return 2.0 * n / lo**3 + 6.0 * n * (theta0 + eps) / lo**4

    def dominating_bound(self, j, k, l, theta0, eps, n):
        th = _theta_scalar(theta0)
        sup = self._m_sup(th, eps, n)
        return sup**2, sup**4

    def sample_with_rng(self, theta, n, rng):
        th = _theta_scalar(theta)
        u = rng.random(n)
        return Dataset(-th * np.log1p(-u))

    def fit(self, data, restricted=False, r=0):
        if restricted:
            raise ConfigError(
                "exponential supports only the simple null; the restricted fit is theta0"
            )
        xbar = float(np.mean(data.observations))
        return np.array([xbar]), 0, 0.0

    def batch_statistics(self, theta0, n, r, rng, count):
        if r != 1:
            raise ConfigError("exponential tests require r = d = 1")
        th = _theta_scalar(theta0)
        stats = np.empty(count)
        # chunk the (count, n) draw to bound memory
        rows = max(1, min(count, (1 << 21) // max(n, 1)))
        start = 0
        while start < count:
            stop = min(start + rows, count)
            u = rng.random((stop - start, n))
            xbar = np.mean(-th * np.log1p(-u), axis=1)
            ratio = xbar / th
            stats[start:stop] = 2.0 * n * (ratio - 1.0 - np.log(ratio))
            start = stop
        return stats

    def simple_null_statistic(self, xbar: float, theta0: float, n: int) -> float:
        """Closed form 2n(xbar/theta0 - 1 - log(xbar/theta0)); cross-check for the general path."""
        ratio = xbar / theta0
        return float(2.0 * n * (ratio - 1.0 - np.log(ratio)))

    def moment_oracle(self, theta0, n, r=1, eps=None):
        if r != 1:
            raise OracleUnavailable("exponential oracle supports only r = d = 1")
        if n < 2:
            raise ConfigError("moment oracle needs n >= 2")
        th = _theta_scalar(theta0)
        eps = self.epsilon_default(theta0) if eps is None else float(eps)

        gm4 = gamma_mean_central_moment(n, th, 4)
        gm6 = gamma_mean_central_moment(n, th, 6)
        gm8 = gamma_mean_central_moment(n, th, 8)
        var_hess = 4.0 / th**4                       # Var(1/th^2 - 2X/th^3)
        t_scale = 2.0 * n / th**3                    # T_11 = -(2n/th^3)(Xbar - th)
        m_sup = self._m_sup(th, eps, n)

        one = lambda v: np.full((1,), v)
        qt = QTMomentSet(
            eps=eps,
            q2=one(th**2 / n),
            q2q2=np.full((1, 1), gm4),
            q6=one(gm6),
            q2_triple=np.full((1, 1, 1), gm6),
            q2_quad=np.full((1, 1, 1, 1), gm8),
            var_hess=np.full((1, 1), var_hess),
            t6=np.full((1, 1), t_scale**6 * gm6),
            t4_cond=np.full((1, 1), t_scale**4 * gm4),
            m2_cond=np.full((1, 1, 1), m_sup**2),
            m4_cond=np.full((1, 1, 1), m_sup**4),
            source="analytic",
            kinds={
                "q2": EXACT, "q2q2": EXACT, "q6": EXACT, "q2_triple": EXACT,
                "q2_quad": EXACT, "var_hess": EXACT, "t6": EXACT,
                "t4_cond": UPPER_BOUND, "m2_cond": UPPER_BOUND, "m4_cond": UPPER_BOUND,
            },
            restricted=None,                          # simple null: no starred leg
        )

        abs3 = np.sqrt(exponential_central_moment(6, 1.0)) / th**3    # sqrt(265)/th^3
        abs5 = np.sqrt(exponential_central_moment(10, 1.0)) / th**5   # sqrt(1334961)/th^5
        info = self.fisher_info(theta0)
        z1, z3 = normal_comparison_moments(info)
        w = WMomentSet(
            abs1=one(1.0 / th),
            cross2=np.full((1, 1), 1.0 / th**2),
            abs3=np.full((1, 1, 1), abs3),
            abs5=np.full((1, 1, 1, 1), abs5),
            w2=one(1.0 / th**2),
            z1=z1,
            z3=z3,
            source="analytic",
            kinds={
                "abs1": UPPER_BOUND, "cross2": EXACT, "abs3": UPPER_BOUND,
                "abs5": UPPER_BOUND, "w2": EXACT, "z1": EXACT, "z3": EXACT,
            },
        )
        return qt, w
