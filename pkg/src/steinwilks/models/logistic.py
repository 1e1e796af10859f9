"""Logistic regression: pairs (x, y), P(y=1|x) = psi(theta^T x), psi the
standard logistic link.

Third log-likelihood derivatives are dominated observation-wise by
|x_i x_j x_k| uniformly in theta (|psi''| < 1), so the dominating functions
need no localisation radius; eps only enters the rejection-sampling
conditioning.  The MLE has no closed form: fits run damped Newton with step
halving, and the moment oracle is Monte Carlo (entries carry standard errors
and are flagged non-certified downstream).

Covariates default to independent Rademacher coordinates, which makes the
third/fifth moment caps exactly one and the information at theta = 0 exactly
I_d/4; "normal" switches to standard normal coordinates.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from ..contract import (
    MONTE_CARLO, Dataset, ParametricModel, QTMomentSet, WMomentSet,
    normal_comparison_moments,
)
from ..errors import (
    ConfigError, MaxIterations, OracleUnavailable, RejectionShortfall, Separation,
    SingularHessian,
)

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100
MAX_HALVINGS = 30
DIVERGENCE_NORM = 1e6
SUSPICION_NORM = 50.0
MIN_ACCEPTED = 10_000


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _loglik_from_margin(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    # sum over the observation axis of y*t - log(1 + e^t), stable form
    return np.sum(y * t - np.logaddexp(0.0, t), axis=-1)


def certify_separation(x: np.ndarray, y: np.ndarray, tol: float = 1e-9) -> bool:
    """LP certificate: data are strictly separable iff max t > 0 subject to
    (2y_i - 1) x_i^T w >= t, |w|_inf <= 1."""
    n, d = x.shape
    signed = (2.0 * y - 1.0)[:, None] * x
    # variables (w_1..w_d, t); maximize t
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-signed, np.ones((n, 1))])
    b_ub = np.zeros(n)
    bounds = [(-1.0, 1.0)] * d + [(0.0, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    return bool(res.success and -res.fun > tol)


class LogisticModel(ParametricModel):
    model_id = "logistic"
    arity = 2  # d + 1, set in __init__
    analytic_capabilities = frozenset()

    def __init__(self, dim: int = 2, covariates: str = "rademacher"):
        if dim < 1:
            raise ConfigError("logistic dimension must be >= 1")
        if covariates not in ("rademacher", "normal"):
            raise ConfigError(f"unknown covariate law {covariates!r}")
        self.dim = dim
        self.arity = dim + 1
        self.covariates = covariates

    # -- data layout: columns [x_1..x_d, y] --------------------------------
    def _split(self, obs: np.ndarray):
        x = obs[:, : self.dim]
        y = obs[:, self.dim]
        if np.any((y != 0.0) & (y != 1.0)):
            raise ConfigError("logistic responses must be 0/1")
        return x, y

    def validate_data(self, data: Dataset) -> None:
        super().validate_data(data)
        self._split(data.observations)

    def log_density(self, obs, theta):
        x, y = self._split(np.asarray(obs, dtype=float))
        t = x @ np.asarray(theta, dtype=float)
        return y * t - np.logaddexp(0.0, t)

    def score(self, obs, theta):
        x, y = self._split(np.asarray(obs, dtype=float))
        t = x @ np.asarray(theta, dtype=float)
        return (y - _sigmoid(t))[:, None] * x

    def hessian(self, obs, theta):
        x, y = self._split(np.asarray(obs, dtype=float))
        t = x @ np.asarray(theta, dtype=float)
        p = _sigmoid(t)
        w = p * (1.0 - p)
        return -w[:, None, None] * (x[:, :, None] * x[:, None, :])

    def fisher_info(self, theta, mc_draws: int = 400_000, seed: int = 2718):
        theta = np.asarray(theta, dtype=float)
        if np.all(theta == 0.0):
            # psi'(0) = 1/4 and E[X X^T] = I_d for both covariate laws
            return np.eye(self.dim) / 4.0
        rng = np.random.Generator(np.random.Philox(key=seed))
        x = self._draw_covariates(rng, mc_draws)
        w = _sigmoid(x @ theta)
        w = w * (1.0 - w)
        info = (x * w[:, None]).T @ x / mc_draws
        return 0.5 * (info + info.T)

    def epsilon_default(self, theta0):
        # M is theta-uniform, so any radius is admissible; 1/2 keeps the
        # rejection acceptance rate near one for n >> d.
        return 0.5

    def observation_third_derivative_bound(self, x_row: np.ndarray, j: int, k: int, l: int) -> float:
        return float(abs(x_row[j] * x_row[k] * x_row[l]))

    def dominating_bound(self, j, k, l, theta0, eps, n):
        raise OracleUnavailable(
            "logistic conditional dominating moments are Monte Carlo; use moment_oracle"
        )

    def _draw_covariates(self, rng, n):
        if self.covariates == "rademacher":
            return rng.integers(0, 2, size=(n, self.dim)).astype(float) * 2.0 - 1.0
        return rng.standard_normal((n, self.dim))

    def sample_with_rng(self, theta, n, rng):
        theta = np.asarray(theta, dtype=float)
        x = self._draw_covariates(rng, n)
        p = _sigmoid(x @ theta)
        y = (rng.random(n) < p).astype(float)
        return Dataset(np.hstack([x, y[:, None]]))

    # -- fitting -------------------------------------------------------------
    def fit(self, data, restricted=False, r=0):
        x, y = self._split(data.observations)
        if restricted:
            if not 1 <= r <= self.dim:
                raise ConfigError(f"restricted fit needs 1 <= r <= d, got r={r}")
            if r == self.dim:
                raise ConfigError("simple null: the restricted fit is theta0 itself")
            free = np.arange(r, self.dim)
        else:
            free = np.arange(self.dim)
        theta_free, iters, gnorm, status = self._newton_single(x[:, free], y)
        if status == "separated":
            raise Separation("logistic MLE diverged (iterate norm exceeded 1e6)")
        if status == "singular":
            raise SingularHessian("Newton step hit a singular Hessian")
        if status == "max_iter":
            if certify_separation(x[:, free], y):
                raise Separation("logistic data are separable (LP certificate)")
            raise MaxIterations(f"Newton did not converge in {NEWTON_MAX_ITER} iterations")
        # a vanishing gradient at a huge iterate is a stalled divergence, not an MLE
        if np.max(np.abs(theta_free)) > SUSPICION_NORM and certify_separation(x[:, free], y):
            raise Separation("logistic data are separable (LP certificate)")
        theta = np.zeros(self.dim)
        theta[free] = theta_free
        return theta, iters, gnorm

    def _newton_single(self, x, y):
        n, k = x.shape
        theta = np.zeros(k)
        ll = _loglik_from_margin(x @ theta, y)
        for it in range(1, NEWTON_MAX_ITER + 1):
            t = x @ theta
            p = _sigmoid(t)
            grad = x.T @ (y - p)
            gnorm = float(np.max(np.abs(grad))) if k else 0.0
            if gnorm <= NEWTON_TOL:
                return theta, it - 1, gnorm, "ok"
            w = p * (1.0 - p)
            hess = (x * w[:, None]).T @ x
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                return theta, it, gnorm, "singular"
            # damped update: halve until the log-likelihood does not decrease
            for _ in range(MAX_HALVINGS + 1):
                cand = theta + step
                ll_new = _loglik_from_margin(x @ cand, y)
                if ll_new >= ll - 1e-12:
                    break
                step = 0.5 * step
            theta, ll = cand, ll_new
            if np.max(np.abs(theta)) > DIVERGENCE_NORM:
                return theta, it, gnorm, "separated"
        return theta, NEWTON_MAX_ITER, gnorm, "max_iter"

    # -- vectorized Monte Carlo machinery -------------------------------------
    def _newton_batch(self, x, y):
        """Newton over a batch: x (B,n,k), y (B,n) -> theta (B,k), ok mask."""
        bsz, n, k = x.shape
        theta = np.zeros((bsz, k))
        ll = _loglik_from_margin(np.zeros((bsz, n)), y)
        ok = np.zeros(bsz, dtype=bool)
        failed = np.zeros(bsz, dtype=bool)
        for _ in range(NEWTON_MAX_ITER):
            active = ~(ok | failed)
            if not active.any():
                break
            xa = x[active]
            ya = y[active]
            ta = np.einsum("bnk,bk->bn", xa, theta[active])
            pa = _sigmoid(ta)
            grad = np.einsum("bn,bnk->bk", ya - pa, xa)
            gnorm = np.max(np.abs(grad), axis=1)
            conv = gnorm <= NEWTON_TOL
            idx_active = np.flatnonzero(active)
            ok[idx_active[conv]] = True
            work = idx_active[~conv]
            if work.size == 0:
                continue
            xw = x[work]
            yw = y[work]
            w = pa[~conv] * (1.0 - pa[~conv])
            hess = np.einsum("bni,bnj,bn->bij", xw, xw, w)
            try:
                step = np.linalg.solve(hess, grad[~conv][..., None])[..., 0]
            except np.linalg.LinAlgError:
                failed[work] = True
                continue
            base = theta[work]
            ll_old = ll[work]
            cand = base + step
            ll_new = _loglik_from_margin(np.einsum("bnk,bk->bn", xw, cand), yw)
            for _ in range(MAX_HALVINGS):
                worse = ll_new < ll_old - 1e-12
                if not worse.any():
                    break
                step[worse] *= 0.5
                cand[worse] = base[worse] + step[worse]
                ll_new[worse] = _loglik_from_margin(
                    np.einsum("bnk,bk->bn", xw[worse], cand[worse]), yw[worse]
                )
            theta[work] = cand
            ll[work] = ll_new
            diverged = np.max(np.abs(cand), axis=1) > DIVERGENCE_NORM
            failed[work[diverged]] = True
        # stalled divergences (underflowed gradients at huge iterates) are failures
        ok &= np.max(np.abs(theta), axis=1) <= SUSPICION_NORM
        return theta, ok

    def batch_statistics(self, theta0, n, r, rng, count):
        theta0 = np.asarray(theta0, dtype=float)
        if not 1 <= r <= self.dim:
            raise ConfigError(f"need 1 <= r <= d, got r={r}")
        x = self._draw_covariates(rng, count * n).reshape(count, n, self.dim)
        p = _sigmoid(np.einsum("bnk,k->bn", x, theta0))
        y = (rng.random((count, n)) < p).astype(float)
        theta_hat, ok = self._newton_batch(x, y)
        ll_hat = _loglik_from_margin(np.einsum("bnk,bk->bn", x, theta_hat), y)
        if r == self.dim:
            ll_res = _loglik_from_margin(np.einsum("bnk,k->bn", x, theta0), y)
        else:
            theta_res, ok_res = self._newton_batch(x[:, :, r:], y)
            ok &= ok_res
            ll_res = _loglik_from_margin(np.einsum("bnk,bk->bn", x[:, :, r:], theta_res), y)
        stats = 2.0 * (ll_hat - ll_res)
        stats[~ok] = np.nan
        return stats

    # -- Monte Carlo moment oracle --------------------------------------------
    def moment_oracle(self, theta0, n, r, eps=None, reps=20_000,
                      obs_draws=400_000, seed=314159):
        theta0 = np.asarray(theta0, dtype=float)
        if not 1 <= r <= self.dim:
            raise OracleUnavailable(f"need 1 <= r <= d, got r={r}")
        if n < 2:
            raise ConfigError("moment oracle needs n >= 2")
        eps = self.epsilon_default(theta0) if eps is None else float(eps)
        if eps <= 0:
            raise ConfigError("eps must be positive")
        rng = np.random.Generator(np.random.Philox(key=seed))
        info = self.fisher_info(theta0)
        qt = self._qt_oracle(theta0, n, r, eps, reps, rng, info)
        w = self._w_oracle(theta0, obs_draws, rng, info)
        return qt, w

    def _qt_oracle(self, theta0, n, r, eps, reps, rng, info):
        d = self.dim
        q = np.empty((reps, d))
        t_mat = np.empty((reps, d, d))
        m_sums = np.empty((reps, d, d, d))
        q_star = np.empty((reps, d - r)) if r < d else None
        t_star = np.empty((reps, d - r, d - r)) if r < d else None
        m_star = np.empty((reps, d - r, d - r, d - r)) if r < d else None
        ok = np.zeros(reps, dtype=bool)

        block = max(1, min(reps, (1 << 20) // max(n * d, 1)))
        start = 0
        while start < reps:
            stop = min(start + block, reps)
            bsz = stop - start
            x = self._draw_covariates(rng, bsz * n).reshape(bsz, n, d)
            p = _sigmoid(np.einsum("bnk,k->bn", x, theta0))
            y = (rng.random((bsz, n)) < p).astype(float)
            th, good = self._newton_batch(x, y)
            ok[start:stop] = good
            q[start:stop] = th - theta0
            # T_lj = d2 ell(theta0) + n I_lj
            w0 = _sigmoid(np.einsum("bnk,k->bn", x, theta0))
            w0 = w0 * (1.0 - w0)
            hess0 = -np.einsum("bni,bnj,bn->bij", x, x, w0)
            t_mat[start:stop] = hess0 + n * info
            absx = np.abs(x)
            m_sums[start:stop] = np.einsum("bni,bnj,bnk->bijk", absx, absx, absx)
            if r < d:
                th_s, good_s = self._newton_batch(x[:, :, r:], y)
                ok[start:stop] &= good_s
                q_star[start:stop] = th_s - theta0[r:]
                t_star[start:stop] = hess0[:, r:, r:] + n * info[r:, r:]
                m_star[start:stop] = m_sums[start:stop][:, r:, r:, r:]
            start = stop

        if ok.sum() < max(1000, reps // 2):
            raise RejectionShortfall(f"only {int(ok.sum())} of {reps} replicate fits converged")
        q, t_mat, m_sums = q[ok], t_mat[ok], m_sums[ok]

        def qt_from(qv, tv, mv, eps_val):
            m = qv.shape[0]
            accept = np.max(np.abs(qv), axis=1) < eps_val
            n_acc = int(accept.sum())
            if n_acc < MIN_ACCEPTED:
                raise RejectionShortfall(
                    f"rejection sampling accepted {n_acc} < {MIN_ACCEPTED} replicates"
                )
            q2v = qv**2
            fields = {
                "q2": q2v.mean(axis=0),
                "q2q2": np.einsum("ra,rb->ab", q2v, q2v) / m,
                "q6": (qv**6).mean(axis=0),
                "q2_triple": np.einsum("ra,rb,rc->abc", q2v, q2v, q2v) / m,
                "q2_quad": np.einsum("ra,rb,rc,rd->abcd", q2v, q2v, q2v, q2v) / m,
                "var_hess": None,  # filled by caller (observation-level)
                "t6": (tv[:, :, :, ] ** 6).mean(axis=0),
                "t4_cond": (tv[accept] ** 4).mean(axis=0),
                "m2_cond": (mv[accept] ** 2).mean(axis=0),
                "m4_cond": (mv[accept] ** 4).mean(axis=0),
            }
            errs = {
                "q2": q2v.std(axis=0, ddof=1) / np.sqrt(m),
                "q6": (qv**6).std(axis=0, ddof=1) / np.sqrt(m),
                "t4_cond": (tv[accept] ** 4).std(axis=0, ddof=1) / np.sqrt(n_acc),
                "m2_cond": (mv[accept] ** 2).std(axis=0, ddof=1) / np.sqrt(n_acc),
            }
            return fields, errs

        fields, errs = qt_from(q, t_mat, m_sums, eps)
        fields["var_hess"] = self._var_hess_mc(theta0, rng)
        restricted = None
        if r < d:
            q_star, t_star, m_star = q_star[ok], t_star[ok], m_star[ok]
            f_star, e_star = qt_from(q_star, t_star, m_star, eps)
            f_star["var_hess"] = fields["var_hess"][r:, r:]
            restricted = QTMomentSet(
                eps=eps, source="monte-carlo",
                kinds={k: MONTE_CARLO for k in QTMomentSet.ARRAY_FIELDS},
                stderr=e_star, restricted=None, **f_star,
            )
        return QTMomentSet(
            eps=eps, source="monte-carlo",
            kinds={k: MONTE_CARLO for k in QTMomentSet.ARRAY_FIELDS},
            stderr=errs, restricted=restricted, **fields,
        )

    def _var_hess_mc(self, theta0, rng, draws: int = 200_000):
        x = self._draw_covariates(rng, draws)
        w = _sigmoid(x @ theta0)
        w = w * (1.0 - w)
        h = -w[:, None, None] * (x[:, :, None] * x[:, None, :])
        return h.var(axis=0, ddof=1)

    def _w_oracle(self, theta0, obs_draws, rng, info):
        x = self._draw_covariates(rng, obs_draws)
        p = _sigmoid(x @ theta0)
        y = (rng.random(obs_draws) < p).astype(float)
        yv = (y - p)[:, None] * x                      # per-observation scores
        absy = np.abs(yv)
        m = obs_draws
        abs1 = absy.mean(axis=0)
        cross2 = np.abs(np.einsum("ra,rb->ab", yv, yv) / m)
        abs3 = np.einsum("ra,rb,rc->abc", absy, absy, absy) / m
        abs5 = np.einsum("ra,rb,rc,rd->abcd", absy, absy, absy, absy**2) / m
        w2 = np.diag(info).copy()
        z1, z3 = normal_comparison_moments(info)
        # per-entry stderr via second moments of the products
        sq3 = np.einsum("ra,rb,rc->abc", absy**2, absy**2, absy**2) / m
        sq5 = np.einsum("ra,rb,rc,rd->abcd", absy**2, absy**2, absy**2, absy**4) / m
        errs = {
            "abs1": absy.std(axis=0, ddof=1) / np.sqrt(m),
            "abs3": np.sqrt(np.maximum(sq3 - abs3**2, 0.0) / m),
            "abs5": np.sqrt(np.maximum(sq5 - abs5**2, 0.0) / m),
        }
        return WMomentSet(
            abs1=abs1, cross2=cross2, abs3=abs3, abs5=abs5, w2=w2, z1=z1, z3=z3,
            source="monte-carlo",
            kinds={k: MONTE_CARLO for k in WMomentSet.ARRAY_FIELDS},
            stderr=errs,
        )
