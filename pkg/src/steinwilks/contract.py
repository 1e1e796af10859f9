"""Model contract: parameter/data containers, moment-set schemas, and the
abstract capability set every parametric model must provide.

A model mirrors the classical regularity conditions: smooth log-density with
three derivatives, score with mean zero, a finite symmetric PD information
matrix whose per-observation covariance identity E[Y Y^T] = I(theta0) holds,
and dominating functions for the third derivatives in an epsilon-ball.
``validate_model`` spot-checks the empirically checkable ones by Monte Carlo.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np

from .errors import ConfigError, ContractViolation, DimensionMismatch, OracleUnavailable


@dataclass(frozen=True)
class Theta:
    """Parameter point with the number of constrained leading coordinates."""

    values: np.ndarray
    r: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", np.atleast_1d(np.asarray(self.values, dtype=float)))
        d = self.values.shape[0]
        if d < 1:
            raise ConfigError("parameter dimension must be >= 1")
        if not 0 <= self.r <= d:
            raise ConfigError(f"need 0 <= r <= d, got r={self.r}, d={d}")
        # Composite-null restricted points pin the first r coordinates to zero;
        # at r = d the restriction is a full point theta0 and no pinning applies.
        if 0 < self.r < d and np.any(self.values[: self.r] != 0.0):
            raise ConfigError("restricted parameter must have its first r entries exactly zero")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("parameter values must be finite")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Dataset:
    """n observations, each a length-t real vector (t=1 for scalar models)."""

    observations: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        if obs.ndim != 2 or obs.shape[0] < 1:
            raise ConfigError("dataset must hold at least one observation")
        if not np.all(np.isfinite(obs)):
            raise ConfigError("observations must be finite")
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def arity(self) -> int:
        return self.observations.shape[1]


def dataset_to_csv(data: Dataset, path) -> None:
    np.savetxt(path, data.observations, delimiter=",", fmt="%.17g")


def dataset_from_csv(path, expected_arity: int | None = None) -> Dataset:
    obs = np.loadtxt(path, delimiter=",", ndmin=2)
    data = Dataset(obs)
    if expected_arity is not None and data.arity != expected_arity:
        raise ConfigError(
            f"dataset arity {data.arity} does not match the model's declared arity {expected_arity}"
        )
    return data


# -- moment-set schemas -------------------------------------------------------

#: entry provenance: exact closed form vs. certified upper bound vs. MC estimate
EXACT, UPPER_BOUND, MONTE_CARLO = "exact", "upper-bound", "monte-carlo"


@dataclass(frozen=True)
class QTMomentSet:
    """MLE-error and Hessian-fluctuation moments for one model at (theta0, n).

    Shapes (d = active dimension):
      q2 (d,)              E(Q_j^2)
      q2q2 (d,d)           E(Q_j^2 Q_k^2)
      q6 (d,)              E(Q_j^6)
      q2_triple (d,d,d)    E(Q_j^2 Q_k^2 Q_l^2)
      q2_quad (d,d,d,d)    E(Q_j^2 Q_k^2 Q_s^2 Q_l^2)
      var_hess (d,d)       Var(d^2/dtheta_l dtheta_j log f(X_1|theta0))
      t6 (d,d)             E(T_mk^6)
      t4_cond (d,d)        E(T_kj^4 | |Q_(m)| < eps)
      m2_cond (d,d,d)      E(M_jkl(X)^2 | |Q_(m)| < eps)
      m4_cond (d,d,d)      E(M_jkl(X)^4 | |Q_(m)| < eps)

    ``restricted`` carries the starred analogue over the trailing d-r
    coordinates (None when r = d).  ``kinds`` maps field name -> EXACT /
    UPPER_BOUND / MONTE_CARLO; ``stderr`` holds per-field standard-error
    arrays for MC-sourced sets.
    """

    eps: float
    q2: np.ndarray
    q2q2: np.ndarray
    q6: np.ndarray
    q2_triple: np.ndarray
    q2_quad: np.ndarray
    var_hess: np.ndarray
    t6: np.ndarray
    t4_cond: np.ndarray
    m2_cond: np.ndarray
    m4_cond: np.ndarray
    source: str = "analytic"
    kinds: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)
    restricted: "QTMomentSet | None" = None

    @property
    def dim(self) -> int:
        return self.q2.shape[0]

    ARRAY_FIELDS = ("q2", "q2q2", "q6", "q2_triple", "q2_quad",
                    "var_hess", "t6", "t4_cond", "m2_cond", "m4_cond")


@dataclass(frozen=True)
class WMomentSet:
    """Score-coordinate absolute moments and normal-comparison constants.

    Shapes:
      abs1 (d,)       E|Y_j|
      cross2 (d,d)    |E(Y_j Y_k)|
      abs3 (d,d,d)    E|Y_j Y_k Y_l|
      abs5 (d,d,d,d)  E|Y_j Y_k Y_l Y_t^2|  (symmetric in j,k,l)
      w2 (d,)         E(W_t^2)
      z1 (d,)         E|(I^{-1/2} Z)_s|
      z3 (d,d)        E|(I^{-1/2} Z)_s Z_t^2|
    """

    abs1: np.ndarray
    cross2: np.ndarray
    abs3: np.ndarray
    abs5: np.ndarray
    w2: np.ndarray
    z1: np.ndarray
    z3: np.ndarray
    source: str = "analytic"
    kinds: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.abs1.shape[0]

    ARRAY_FIELDS = ("abs1", "cross2", "abs3", "abs5", "w2", "z1", "z3")


def normal_comparison_moments(info: np.ndarray):
    """z1[s] = E|(I^{-1/2}Z)_s| and z3[s,t] = E|(I^{-1/2}Z)_s Z_t^2| in closed form.

    With V = (I^{-1/2}Z)_s = sum_u a_u Z_u, sigma_s^2 = Var V = [I^{-1}]_{ss}:

        E|V|        = sigma_s sqrt(2/pi)
        E|V Z_t^2|  = sqrt(2/pi) (sigma_s^2 + a_t^2) / sigma_s

    (the second via E[Z^2 e^{-lam Z^2}] and E[Z^3 erf(cZ)] closed forms).
    """
    info = np.asarray(info, dtype=float)
    evals, evecs = np.linalg.eigh(info)
    if np.any(evals <= 0):
        raise ValueError("information matrix must be positive definite")
    inv_sqrt = (evecs * (1.0 / np.sqrt(evals))) @ evecs.T
    var_s = np.sum(inv_sqrt**2, axis=1)
    sigma_s = np.sqrt(var_s)
    z1 = sigma_s * sqrt(2.0 / pi)
    z3 = sqrt(2.0 / pi) * (var_s[:, None] + inv_sqrt**2) / sigma_s[:, None]
    return z1, z3


# -- the model capability set -------------------------------------------------

class ParametricModel(ABC):
    """Capability set for a d-dimensional parametric family."""

    model_id: str = "abstract"
    dim: int = 1
    arity: int = 1
    #: capabilities with exact closed forms (others are Monte Carlo backed)
    analytic_capabilities: frozenset = frozenset()

    # - densities and derivatives (all vectorized over the observation axis) -
    @abstractmethod
    def log_density(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """log f(x_i | theta), shape (n,)."""

    @abstractmethod
    def score(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Per-observation gradient of log f, shape (n, d)."""

    @abstractmethod
    def hessian(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Per-observation Hessian of log f, shape (n, d, d)."""

    @abstractmethod
    def fisher_info(self, theta: np.ndarray) -> np.ndarray:
        """Expected information for one observation, (d, d) SPD."""

    @abstractmethod
    def dominating_bound(self, j: int, k: int, l: int, theta0: np.ndarray,
                         eps: float, n: int):
        """Certified bounds on E(M_jkl(X)^2 | |Q_(m)|<eps) and E(M_jkl^4 | ...).

        M_jkl dominates |d^3 ell(theta; X)| over the eps-ball (full-sample ell,
        hence the n argument).  Returns (m2_bound, m4_bound); models whose
        conditional moments are Monte Carlo only raise OracleUnavailable.
        """

    @abstractmethod
    def epsilon_default(self, theta0: np.ndarray) -> float:
        """Default localisation radius eps(theta0)."""

    @abstractmethod
    def sample_with_rng(self, theta: np.ndarray, n: int, rng: np.random.Generator) -> Dataset:
        """Draw n observations using the supplied generator."""

    def sample(self, theta: np.ndarray, n: int, seed: int) -> Dataset:
        """Deterministic sampler: a fixed seed gives a bit-identical dataset."""
        return self.sample_with_rng(theta, n, np.random.Generator(np.random.Philox(key=seed)))

    def batch_statistics(self, theta0: np.ndarray, n: int, r: int,
                         rng: np.random.Generator, count: int) -> np.ndarray:
        """Simulate `count` replicates of -2 log Lambda; NaN marks a failed fit.

        Built-ins override this with a vectorized path; tests pin the two
        paths together on small cases.
        """
        from .models.base import batch_statistics_generic
        return batch_statistics_generic(self, theta0, n, r, rng, count)

    @abstractmethod
    def moment_oracle(self, theta0: np.ndarray, n: int, r: int,
                      eps: float | None = None) -> tuple:
        """(QTMomentSet, WMomentSet) at (theta0, n) for the r-coordinate test.

        ``eps`` overrides the model's default localisation radius for the
        conditional entries.
        """

    # - fitting -
    @abstractmethod
    def fit(self, data: Dataset, restricted: bool, r: int):
        """Return (theta_hat vector, iterations, grad_inf_norm)."""

    def loglik(self, data: Dataset, theta: np.ndarray) -> float:
        return float(np.sum(self.log_density(data.observations, theta)))

    def validate_data(self, data: Dataset) -> None:
        if data.arity != self.arity:
            raise DimensionMismatch(
                f"model {self.model_id} expects arity {self.arity}, got {data.arity}"
            )

    def supports_restriction(self, r: int) -> bool:
        return 1 <= r <= self.dim


_REGISTRY: dict = {}


def register_model(factory, model_id: str) -> None:
    _REGISTRY[model_id] = factory


def get_model(model_id: str, **kwargs) -> ParametricModel:
    try:
        factory = _REGISTRY[model_id]
    except KeyError:
        raise OracleUnavailable(
            f"no model registered under id {model_id!r}; "
            f"known ids: {sorted(_REGISTRY)}"
        ) from None
    return factory(**kwargs)


def registered_models():
    return sorted(_REGISTRY)


# -- empirical regularity spot-checks -----------------------------------------

@dataclass(frozen=True)
class ModelValidationReport:
    passed: bool
    score_zscores: np.ndarray          # (d,)
    fisher_zscores: np.ndarray         # (d,d)
    reps: int
    seed: int


def validate_model(model: ParametricModel, theta0: np.ndarray, reps: int = 100_000,
                   seed: int = 0, z_limit: float = 5.0) -> ModelValidationReport:
    """Monte Carlo spot-check of score-mean-zero and E[Y Y^T] = I(theta0).

    Draws ``reps`` single observations at theta0 and forms per-coordinate
    z-scores; any |z| > z_limit raises ContractViolation.
    """
    if reps < 10_000:
        raise ConfigError("validation needs reps >= 10^4")
    theta0 = np.asarray(theta0, dtype=float)
    data = model.sample(theta0, reps, seed)
    y = model.score(data.observations, theta0)               # (reps, d)
    d = y.shape[1]

    mean_y = y.mean(axis=0)
    se_y = y.std(axis=0, ddof=1) / sqrt(reps)
    z_score = mean_y / np.where(se_y > 0, se_y, np.inf)

    prods = y[:, :, None] * y[:, None, :]                    # (reps, d, d)
    mean_p = prods.mean(axis=0)
    se_p = prods.std(axis=0, ddof=1) / sqrt(reps)
    info = model.fisher_info(theta0)
    z_fisher = (mean_p - info) / np.where(se_p > 0, se_p, np.inf)

    for j in range(d):
        if abs(z_score[j]) > z_limit:
            raise ContractViolation("E[score] = 0", j, float(abs(z_score[j])))
    for j in range(d):
        for k in range(d):
            if abs(z_fisher[j, k]) > z_limit:
                raise ContractViolation("E[S S^T] = n I(theta0)", (j, k),
                                        float(abs(z_fisher[j, k])))
    return ModelValidationReport(True, z_score, z_fisher, reps, seed)
