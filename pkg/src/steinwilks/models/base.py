"""Likelihood-ratio fitting on top of the model contract."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..contract import Dataset, ParametricModel, Theta
from ..errors import ConfigError, NumericalError

STATISTIC_FLOOR = -1e-8
GRAD_TOL = 1e-8


@dataclass(frozen=True)
class LRTResult:
    """Fitted unrestricted/restricted parameters and the statistic -2 log Lambda."""

    theta_hat: Theta
    theta_res_hat: Theta
    statistic: float
    iterations: tuple
    grad_norm: tuple

    def __post_init__(self):
        if self.statistic < STATISTIC_FLOOR:
            raise NumericalError(
                f"-2 log Lambda = {self.statistic:.3e} below nonnegativity tolerance"
            )
        if max(self.grad_norm) > GRAD_TOL:
            raise NumericalError(
                f"fit gradient inf-norm {max(self.grad_norm):.3e} exceeds {GRAD_TOL:.0e}"
            )


def fit_mle(model: ParametricModel, data: Dataset, restricted: bool = False,
            r: int = 0) -> Theta:
    """Maximum-likelihood fit; restricted pins the first r coordinates to zero."""
    model.validate_data(data)
    if restricted and not 1 <= r <= model.dim:
        raise ConfigError(f"restricted fit needs 1 <= r <= d, got r={r}")
    values, _, _ = model.fit(data, restricted=restricted, r=r)
    return Theta(values, r=r if restricted else 0)


def neg2_log_lambda(model: ParametricModel, data: Dataset, r: int,
                    theta0_for_simple_null: np.ndarray | None = None) -> LRTResult:
    """-2 log Lambda = 2 [ell(theta_hat) - ell(theta_hat_res)].

    For the simple null r = d the restricted "fit" is theta0 itself and must
    be supplied.
    """
    model.validate_data(data)
    if not 1 <= r <= model.dim:
        raise ConfigError(f"need 1 <= r <= d, got r={r}")
    hat_values, it_full, g_full = model.fit(data, restricted=False, r=0)
    if r == model.dim:
        if theta0_for_simple_null is None:
            raise ConfigError("simple null (r = d) requires theta0_for_simple_null")
        res_values = np.asarray(theta0_for_simple_null, dtype=float)
        it_res, g_res = 0, 0.0
    else:
        res_values, it_res, g_res = model.fit(data, restricted=True, r=r)
    stat = 2.0 * (model.loglik(data, hat_values) - model.loglik(data, res_values))
    return LRTResult(
        theta_hat=Theta(hat_values, r=0),
        theta_res_hat=Theta(res_values, r=r),
        statistic=float(stat),
        iterations=(it_full, it_res),
        grad_norm=(float(g_full), float(g_res)),
    )


def batch_statistics_generic(model: ParametricModel, theta0: np.ndarray, n: int,
                             r: int, rng: np.random.Generator,
                             count: int) -> np.ndarray:
    """Slow fallback: per-replicate sample + fit.  NaN marks a failed fit."""
    out = np.empty(count)
    for i in range(count):
        data = model.sample_with_rng(theta0, n, rng)
        try:
            out[i] = neg2_log_lambda(model, data, r, theta0).statistic
        except NumericalError:
            out[i] = np.nan
    return out
