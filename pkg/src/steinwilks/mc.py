"""Monte Carlo harness: simulate -2 log Lambda, compare against chisquare
reference expectations, and run n- and d-sweeps.

Reproducibility contract: replicates are split into fixed-size blocks, block b
gets a Philox generator advanced by b * 2^128 from the master seed, and the
reduction walks blocks in index order.  Results are therefore bit-identical
for any worker count, which is capped by the STEIN_WILKS_THREADS environment
variable.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln
from scipy.stats import chi2

from .bound import ScalingReport, assemble_bound, logistic_bound_scaling
from .contract import ParametricModel
from .errors import ConfigError, ExcessiveFitFailures, QuadratureNonconvergence
from .models.logistic import LogisticModel
from .testfunc import TestFunction

FAILURE_BUDGET = 1e-3
_BLOCK_DRAWS = 1 << 21
_BLOCK_CAP = 4096


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo mean distance with its standard error and provenance."""

    mean: float
    stderr: float
    reps: int
    master_seed: int
    failed_reps: int = 0

    def __post_init__(self):
        if self.stderr < 0:
            raise ConfigError("stderr must be nonnegative")


@dataclass(frozen=True)
class SweepRow:
    key: float                      # n for rate sweeps, d for dimension sweeps
    bound_total: float
    mc_distance: MCEstimate | None
    chisq_ref: float
    ks_distance: float | None
    scaling: ScalingReport | None = None


def worker_count(threads: int | None = None) -> int:
    cap = os.environ.get("STEIN_WILKS_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    if threads is not None:
        limit = min(limit, threads)
    return max(1, limit)


def block_generator(master_seed: int, block_index: int) -> np.random.Generator:
    bitgen = np.random.Philox(key=int(master_seed) & ((1 << 128) - 1))
    bitgen.advance(block_index * (1 << 128))
    return np.random.Generator(bitgen)


def _block_size(n: int) -> int:
    return max(1, min(_BLOCK_CAP, _BLOCK_DRAWS // max(n, 1)))


def simulate_statistics(model: ParametricModel, theta0, n: int, r: int,
                        reps: int, master_seed: int,
                        threads: int | None = None) -> np.ndarray:
    """reps draws of -2 log Lambda under the null; NaN marks a failed fit."""
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    bsize = _block_size(n)
    nblocks = (reps + bsize - 1) // bsize
    out = np.empty(reps)

    def run_block(b: int) -> None:
        start = b * bsize
        count = min(bsize, reps - start)
        rng = block_generator(master_seed, b)
        out[start : start + count] = model.batch_statistics(theta0, n, r, rng, count)

    workers = worker_count(threads)
    if workers == 1 or nblocks == 1:
        for b in range(nblocks):
            run_block(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, range(nblocks)))
    return out


def chisq_expectation(h: TestFunction, r: int, tol: float = 1e-10) -> float:
    """E h(K) for K ~ chisq(r) by adaptive quadrature to absolute tolerance.

    The substitution x = u^2 removes the integrable density singularity at
    zero (any odd r), leaving the smooth integrand
    2 u^(r-1) e^(-u^2/2) h(u^2) / (2^(r/2) Gamma(r/2)).
    """
    if r < 1:
        raise ConfigError("degrees of freedom must be >= 1")
    log_norm = (r / 2.0) * np.log(2.0) + gammaln(r / 2.0)

    def integrand(u: float) -> float:
        x = u * u
        log_w = np.log(2.0) + (r - 1) * np.log(u) if u > 0 else -np.inf
        if u <= 0:
            return 0.0
        return float(h.eval_h(np.array([x]))[0]) * np.exp(log_w - x / 2.0 - log_norm)

    value, err = quad(integrand, 0.0, np.inf, epsabs=tol * 0.1, epsrel=1e-12, limit=500)
    if not np.isfinite(value) or err > tol:
        raise QuadratureNonconvergence(
            f"quadrature error estimate {err:.3g} exceeds tolerance {tol:.3g}"
        )
    return value


def _distance_from_stats(stats: np.ndarray, h: TestFunction, ref: float,
                         reps: int, master_seed: int, n: int) -> MCEstimate:
    ok = np.isfinite(stats)
    failures = int(reps - ok.sum())
    if n >= 50 and failures > FAILURE_BUDGET * reps:
        raise ExcessiveFitFailures(
            f"{failures} of {reps} replicates failed to fit (> {FAILURE_BUDGET:.1%})"
        )
    vals = np.asarray(h.eval_h(stats[ok]), dtype=float)
    m = vals.shape[0]
    mean = float(vals.sum() / m)
    var = float((vals - mean) @ (vals - mean) / (m - 1)) if m > 1 else 0.0
    stderr = sqrt(var / m) if m > 1 else 0.0
    return MCEstimate(
        mean=abs(mean - ref), stderr=stderr, reps=reps,
        master_seed=master_seed, failed_reps=failures,
    )


def estimate_distance(model: ParametricModel, theta0, n: int, r: int,
                      h: TestFunction, reps: int, master_seed: int,
                      threads: int | None = None) -> MCEstimate:
    """|mean of h(-2 log Lambda) over replicates - E h(chisq_r)| with stderr."""
    if reps < 10_000:
        raise ConfigError("estimate_distance needs reps >= 10^4")
    stats = simulate_statistics(model, theta0, n, r, reps, master_seed, threads)
    ref = chisq_expectation(h, r)
    return _distance_from_stats(stats, h, ref, reps, master_seed, n)


def ks_distance_to_chisq(stats: np.ndarray, r: int) -> float:
    vals = np.sort(stats[np.isfinite(stats)])
    m = vals.shape[0]
    if m == 0:
        raise ConfigError("no finite statistics to compare")
    cdf = chi2.cdf(vals, df=r)
    grid_hi = np.arange(1, m + 1) / m
    grid_lo = np.arange(0, m) / m
    return float(max(np.max(grid_hi - cdf), np.max(cdf - grid_lo)))


def wilks_ks_check(model: ParametricModel, theta0, n: int, r: int, reps: int,
                   master_seed: int, threads: int | None = None) -> float:
    """Kolmogorov-Smirnov distance between simulated statistics and chisq(r)."""
    if reps < 10_000:
        raise ConfigError("wilks_ks_check needs reps >= 10^4")
    stats = simulate_statistics(model, theta0, n, r, reps, master_seed, threads)
    return ks_distance_to_chisq(stats, r)


def rate_sweep(model: ParametricModel, theta0, h: TestFunction, n_grid,
               r: int | None = None) -> tuple:
    """Bound totals over an n-grid and the fitted log-log slope.

    Monte Carlo columns stay empty: the grid extends far beyond simulable n.
    Returns (rows, slope).
    """
    n_grid = [int(v) for v in n_grid]
    if len(n_grid) < 4:
        raise ConfigError("rate sweep needs at least 4 grid points")
    if max(n_grid) / min(n_grid) < 1e3:
        raise ConfigError("rate sweep grid must span at least 3 decades")
    r = model.dim if r is None else r
    ref = chisq_expectation(h, r)
    rows = []
    for n in sorted(n_grid):
        bb = assemble_bound(model, theta0, n, r, h)
        rows.append(SweepRow(key=n, bound_total=bb.total, mc_distance=None,
                             chisq_ref=ref, ks_distance=None))
    logs_n = np.log([row.key for row in rows])
    logs_b = np.log([row.bound_total for row in rows])
    slope = float(np.polyfit(logs_n, logs_b, 1)[0])
    return rows, slope


def default_sweep_restriction(d: int) -> int:
    """Tested-coordinate count for dimension sweeps: half the slope vector
    (at least one); d = 1 degenerates to the simple null."""
    return max(1, d // 2)


def dimension_sweep(n: int, d_grid, reps: int, master_seed: int,
                    h: TestFunction, covariates: str = "rademacher",
                    r_rule=default_sweep_restriction,
                    threads: int | None = None) -> list:
    """Scaling coefficients and MC distances for logistic models across d."""
    if n < 10:
        raise ConfigError("dimension sweep needs n >= 10")
    rows = []
    for d in sorted(int(v) for v in d_grid):
        if n < 10 * d:
            raise ConfigError(f"dimension sweep needs n >> d (n={n}, d={d})")
        r = int(r_rule(d))
        model = LogisticModel(dim=d, covariates=covariates)
        caps = {"mu3": 1.0, "mu5": 1.0} if covariates == "rademacher" else {}
        scaling = logistic_bound_scaling(d, r, n, caps)
        theta0 = np.zeros(d)
        stats = simulate_statistics(model, theta0, n, r, reps, master_seed, threads)
        ref = chisq_expectation(h, r)
        est = _distance_from_stats(stats, h, ref, reps, master_seed, n)
        ks = ks_distance_to_chisq(stats, r)
        rows.append(SweepRow(key=d, bound_total=scaling.bound_order,
                             mc_distance=est, chisq_ref=ref, ks_distance=ks,
                             scaling=scaling))
    return rows


def sweep_rows_to_csv(rows, path) -> None:
    """Fixed column order: key, bound_total, mc_mean, mc_stderr, chisq_ref, ks."""
    lines = ["key,bound_total,mc_mean,mc_stderr,chisq_ref,ks"]
    for row in rows:
        mc_mean = f"{row.mc_distance.mean:.17g}" if row.mc_distance else ""
        mc_se = f"{row.mc_distance.stderr:.17g}" if row.mc_distance else ""
        ks = f"{row.ks_distance:.17g}" if row.ks_distance is not None else ""
        lines.append(
            f"{row.key:.17g},{row.bound_total:.17g},{mc_mean},{mc_se},"
            f"{row.chisq_ref:.17g},{ks}"
        )
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
