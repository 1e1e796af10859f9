"""Normal model with theta = (mu, sigma^2) and the test mu = 0 (r = 1, d = 2).

Closed-form structure used throughout the oracle:

  Q1 = Xbar - mu ~ N(0, sigma^2/n), independent of
  Q2 = sigmahat^2 - sigma^2 = (sigma^2/n)(G_{n-1} - n),  G_nu ~ chisq(nu);
  T11 = 0, T12 = -sum(X_i - mu)/sigma^4, T22 = -(G_n - n)/sigma^4.

Under the null restriction the active parameter is sigma^2 with
Q*_1 = (sigma^2/n)(G_n - n) and T*_11 = (n - G_n)/sigma^4.

Conditional dominating-function moments are certified by the conditional
suprema of M on the event |Q_(m)| < eps (sigmahat^2 < sigma^2 + eps and
|Xbar - mu| < eps hold almost surely there), which keeps the whole oracle
analytic.
"""

from __future__ import annotations

from math import pi, sqrt

import numpy as np

from ..contract import (
    EXACT, UPPER_BOUND, Dataset, ParametricModel, QTMomentSet, WMomentSet,
    normal_comparison_moments,
)
from ..errors import ConfigError, NonpositiveEpsilon, OracleUnavailable
from ..moments import chisq_central_moment, normal_central_moment


def _unpack(theta):
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.shape[0] != 2:
        raise ConfigError(f"normal model expects theta = (mu, sigma^2), got {th}")
    mu, s2 = float(th[0]), float(th[1])
    if s2 <= 0:
        raise ConfigError(f"sigma^2 must be positive, got {s2}")
    return mu, s2


class NormalModel(ParametricModel):
    model_id = "normal"
    dim = 2
    arity = 1
    analytic_capabilities = frozenset(
        {"fisher_info", "moment_oracle", "fit", "dominating_bound"}
    )

    def log_density(self, x, theta):
        mu, s2 = _unpack(theta)
        xv = np.asarray(x, dtype=float).reshape(-1)
        return -0.5 * np.log(2.0 * pi * s2) - (xv - mu) ** 2 / (2.0 * s2)

    def score(self, x, theta):
        mu, s2 = _unpack(theta)
        xv = np.asarray(x, dtype=float).reshape(-1)
        centered = xv - mu
        return np.stack(
            [centered / s2, -0.5 / s2 + centered**2 / (2.0 * s2**2)], axis=1
        )

    def hessian(self, x, theta):
        mu, s2 = _unpack(theta)
        xv = np.asarray(x, dtype=float).reshape(-1)
        centered = xv - mu
        h = np.empty((xv.shape[0], 2, 2))
        h[:, 0, 0] = -1.0 / s2
        h[:, 0, 1] = h[:, 1, 0] = -centered / s2**2
        h[:, 1, 1] = 0.5 / s2**2 - centered**2 / s2**3
        return h

    def fisher_info(self, theta):
        _, s2 = _unpack(theta)
        return np.diag([1.0 / s2, 0.5 / s2**2])

    def epsilon_default(self, theta0):
        _, s2 = _unpack(theta0)
        return s2 / 2.0

    def _check_eps(self, s2: float, eps: float) -> None:
        if eps <= 0:
            raise NonpositiveEpsilon("eps must be positive")
        if eps >= s2:
            raise ConfigError("normal dominating functions need eps < sigma^2")

    def _m_sup(self, j: int, k: int, l: int, s2: float, eps: float, n: int) -> float:
        """Conditional sup of M_{jkl}(X) on |Q_(m)| < eps (0-based indices)."""
        lo = s2 - eps
        ones = (j, k, l).count(0)
        if ones == 3:                      # d^3/dmu^3 vanishes
            return 0.0
        if ones == 2:                      # mixed mu,mu,sigma^2: n/theta2^2
            return n / lo**2
        if ones == 1:                      # mixed mu,sigma^2,sigma^2
            return 2.0 * n * (eps + eps) / lo**3
        # pure sigma^2 derivatives
        return n / lo**3 + 9.0 * n * (s2 + eps + 2.0 * eps**2) / lo**4

    def dominating_bound(self, j, k, l, theta0, eps, n):
        _, s2 = _unpack(theta0)
        self._check_eps(s2, eps)
        sup = self._m_sup(j, k, l, s2, eps, n)
        return sup**2, sup**4

    def sample_with_rng(self, theta, n, rng):
        mu, s2 = _unpack(theta)
        return Dataset(mu + sqrt(s2) * rng.standard_normal(n))

    def fit(self, data, restricted=False, r=0):
        x = data.observations.reshape(-1)
        n = x.shape[0]
        if n < 2:
            raise ConfigError("normal fit needs n >= 2")
        if restricted:
            if r != 1:
                raise ConfigError("normal restriction supports r = 1 (mu = 0)")
            s2 = float(np.mean(x**2))
            return np.array([0.0, s2]), 0, 0.0
        xbar = float(np.mean(x))
        s2 = float(np.mean((x - xbar) ** 2))
        if s2 <= 0:
            raise ConfigError("degenerate sample: zero variance")
        return np.array([xbar, s2]), 0, 0.0

    def batch_statistics(self, theta0, n, r, rng, count):
        mu, s2 = _unpack(theta0)
        if r != 1 or mu != 0.0:
            raise ConfigError("normal statistic simulation requires the null mu = 0 (r = 1)")
        stats = np.empty(count)
        rows = max(1, min(count, (1 << 21) // max(n, 1)))
        start = 0
        while start < count:
            stop = min(start + rows, count)
            x = sqrt(s2) * rng.standard_normal((stop - start, n))
            ss_total = np.sum(x**2, axis=1)
            xbar = np.mean(x, axis=1)
            ss_centered = ss_total - n * xbar**2
            stats[start:stop] = n * np.log(ss_total / ss_centered)
            start = stop
        return stats

    # -- analytic moment tables --------------------------------------------

    def _q_moments(self, s2: float, n: int):
        """E(Q1^k) and E(Q2^k) for k = 2,4,6,8 (exact)."""
        q1 = {k: normal_central_moment(k, s2 / n) for k in (2, 4, 6, 8)}
        q2 = {k: (s2 / n) ** k * chisq_central_moment(n - 1, k, n) for k in (2, 4, 6, 8)}
        return q1, q2

    @staticmethod
    def _even_product(q1: dict, q2: dict, idx: tuple) -> float:
        """E(prod Q_{idx}^2) via independence: powers of Q1 and Q2 factorize."""
        p1 = 2 * sum(1 for i in idx if i == 0)
        p2 = 2 * sum(1 for i in idx if i == 1)
        out = 1.0
        if p1:
            out *= q1[p1]
        if p2:
            out *= q2[p2]
        return out

    def moment_oracle(self, theta0, n, r=1, eps=None):
        mu, s2 = _unpack(theta0)
        if r != 1:
            raise OracleUnavailable("normal oracle supports only the mu = 0 test (r = 1)")
        if n < 2:
            raise ConfigError("moment oracle needs n >= 2")
        eps = self.epsilon_default(theta0) if eps is None else float(eps)
        self._check_eps(s2, eps)

        q1, q2 = self._q_moments(s2, n)
        d = 2
        q2_vec = np.array([q1[2], q2[2]])
        q2q2 = np.empty((d, d))
        q6 = np.array([q1[6], q2[6]])
        q2_triple = np.empty((d, d, d))
        q2_quad = np.empty((d, d, d, d))
        for j in range(d):
            for k in range(d):
                q2q2[j, k] = self._even_product(q1, q2, (j, k))
                for l in range(d):
                    q2_triple[j, k, l] = self._even_product(q1, q2, (j, k, l))
                    for t in range(d):
                        q2_quad[j, k, l, t] = self._even_product(q1, q2, (j, k, l, t))

        var_hess = np.array([[0.0, 1.0 / s2**3], [1.0 / s2**3, 2.0 / s2**4]])
        t6 = np.array(
            [
                [0.0, 15.0 * n**3 / s2**9],
                [15.0 * n**3 / s2**9, chisq_central_moment(n, 6, n) / s2**12],
            ]
        )
        t4_cond = np.array(
            [
                [0.0, 3.0 * n**2 / s2**6],
                [3.0 * n**2 / s2**6, chisq_central_moment(n, 4, n) / s2**8],
            ]
        )
        m2_cond = np.empty((d, d, d))
        m4_cond = np.empty((d, d, d))
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    sup = self._m_sup(j, k, l, s2, eps, n)
                    m2_cond[j, k, l] = sup**2
                    m4_cond[j, k, l] = sup**4

        # starred leg: active parameter sigma^2 under mu = 0
        qs = {k: (s2 / n) ** k * chisq_central_moment(n, k, n) for k in (2, 4, 6, 8)}
        sup_star = n / (s2 - eps) ** 3 + 3.0 * n * (s2 + eps) / (s2 - eps) ** 4
        starred = QTMomentSet(
            eps=eps,
            q2=np.array([qs[2]]),
            q2q2=np.array([[qs[4]]]),
            q6=np.array([qs[6]]),
            q2_triple=np.full((1, 1, 1), qs[6]),
            q2_quad=np.full((1, 1, 1, 1), qs[8]),
            var_hess=np.array([[2.0 / s2**4]]),
            t6=np.array([[chisq_central_moment(n, 6, n) / s2**12]]),
            t4_cond=np.array([[chisq_central_moment(n, 4, n) / s2**8]]),
            m2_cond=np.full((1, 1, 1), sup_star**2),
            m4_cond=np.full((1, 1, 1), sup_star**4),
            source="analytic",
            kinds={
                "q2": EXACT, "q2q2": EXACT, "q6": EXACT, "q2_triple": EXACT,
                "q2_quad": EXACT, "var_hess": EXACT, "t6": EXACT,
                "t4_cond": UPPER_BOUND, "m2_cond": UPPER_BOUND, "m4_cond": UPPER_BOUND,
            },
        )
        qt = QTMomentSet(
            eps=eps,
            q2=q2_vec, q2q2=q2q2, q6=q6, q2_triple=q2_triple, q2_quad=q2_quad,
            var_hess=var_hess, t6=t6, t4_cond=t4_cond,
            m2_cond=m2_cond, m4_cond=m4_cond,
            source="analytic",
            kinds=dict(starred.kinds),
            restricted=starred,
        )

        # score-coordinate table (paper-style bounds; exact where closed form)
        s = sqrt(s2)
        root2pi = sqrt(2.0 / pi)
        abs1 = np.array([root2pi / s, 1.0 / (sqrt(2.0) * s2)])
        cross2 = np.array([[1.0 / s2, 0.0], [0.0, 0.5 / s2**2]])
        abs3 = np.empty((d, d, d))
        triple_table = {
            3: 2.0 * root2pi / s**3,                 # E|Y1^3| (exact)
            2: sqrt(3.0) / (sqrt(2.0) * s2**2),      # E|Y1^2 Y2|
            1: sqrt(15.0) / (2.0 * s**5),            # E|Y1 Y2^2|
            0: sqrt(1510.0) / (4.0 * s2**3),         # E|Y2^3|
        }
        quint_table = {
            5: 8.0 * root2pi / s**5,                 # E|Y1^5| (exact)
            4: sqrt(105.0) / (sqrt(2.0) * s2**3),    # E|Y1^4 Y2|
            3: 15.0 / (2.0 * s**7),                  # E|Y1^3 Y2^2|
            2: sqrt(4530.0) / (4.0 * s2**4),         # E|Y1^2 Y2^3|
            1: sqrt(74417.0) / (4.0 * s**9),         # E|Y1 Y2^4|
            0: 3.0 * sqrt(2688194.0) / (8.0 * s2**5),  # E|Y2^5|
        }
        abs5 = np.empty((d, d, d, d))
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    abs3[j, k, l] = triple_table[(j, k, l).count(0)]
                    for t in range(d):
                        abs5[j, k, l, t] = quint_table[(j, k, l).count(0) + 2 * (t == 0)]
        z1, z3 = normal_comparison_moments(self.fisher_info(theta0))
        w = WMomentSet(
            abs1=abs1, cross2=cross2, abs3=abs3, abs5=abs5,
            w2=np.array([1.0 / s2, 0.5 / s2**2]),
            z1=z1, z3=z3,
            source="analytic",
            kinds={
                "abs1": "mixed", "cross2": EXACT, "abs3": "mixed",
                "abs5": "mixed", "w2": EXACT, "z1": EXACT, "z3": EXACT,
            },
        )
        return qt, w
