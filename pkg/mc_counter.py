"""
Monte Carlo estimates of the number of interference-alignment solutions.

For a tight scenario the number of solutions equals a constant C times the
average of |det Psi|^2 over a set of structured channels:

* general scenarios average over channels with ||H_kl||_F = 1 per link
  (``estimate_general``);
* square symmetric scenarios (N x N, d)^K, K >= 3, average over channels
  whose A_kl^* and B_kl blocks are orthonormal frames and C_kl = 0
  (``estimate_square``), which converges much faster.

Per-sample values span hundreds of orders of magnitude for large
scenarios, so the running moments are kept as max-shifted sums of
exp(log value).
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, List, NamedTuple, Optional

import numpy as np
from scipy.special import gammaln

from config import DEFAULTS
from linalg import log_abs_det_sq
from psi import psi_layout
from sampling import RngStream, require_stiefel_domain, sphere_flat, stiefel_flat
from scenario import HypothesisError, Scenario, render, require_tight

logger = logging.getLogger(__name__)

STOPPING_RULES = ("std_error", "sample_std")


# ---------------------------------------------------------------------------
# Constants and volumes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogConstant:
    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def log_gamma_run(lo: int, hi: int) -> float:
    """sum of ln Gamma(j) for j = lo..hi (zero for an empty range)."""
    if hi < lo:
        return 0.0
    return float(gammaln(np.arange(lo, hi + 1, dtype=np.float64)).sum())


def _g(n: int) -> float:
    # ln(Gamma(2) * ... * Gamma(n))
    return log_gamma_run(2, n)


def log_volume_sphere(a: int) -> float:
    """Volume of the unit sphere in C^a: 2 pi^a / Gamma(a)."""
    return math.log(2.0) + a * math.log(math.pi) - float(gammaln(a))


def log_volume_unitary(a: int) -> float:
    """Volume of U(a) with the Frobenius metric: (2 pi)^(a(a+1)/2) / (Gamma(1)...Gamma(a))."""
    return a * (a + 1) / 2 * math.log(2 * math.pi) - log_gamma_run(1, a)


def log_volume_grassmannian(a: int, b: int) -> float:
    """Volume of the Grassmannian of a-planes in C^b."""
    if not 1 <= a <= b:
        raise ValueError(f"Grassmannian needs 1 <= a <= b, got a={a}, b={b}")
    return a * (b - a) * math.log(math.pi) + _g(a) + _g(b - a) - _g(b)


def log_volume_output_space(sc: Scenario) -> float:
    """Volume of the product of decoder and precoder Grassmannians."""
    return sum(
        log_volume_grassmannian(u.d, u.N) + log_volume_grassmannian(u.d, u.M)
        for u in sc.users
    )


def constant_theorem2(sc: Scenario) -> LogConstant:
    """
    The constant in front of the unit-sphere average, as a product of
    Gamma-function ratios.

    Raises:
        HypothesisError: if the scenario is not tight.
    """
    require_tight(sc, "the unit-sphere estimator")
    log_c = 0.0
    for k, l in sc.links:
        rx, tx = sc.users[k], sc.users[l]
        nm = rx.N * tx.M
        log_c += float(gammaln(nm) - gammaln(nm - rx.d * tx.d))
    for u in sc.users:
        log_c += _g(u.d) + _g(u.N - u.d) - _g(u.N)
        log_c += _g(u.d) + _g(u.M - u.d) - _g(u.M)
    return LogConstant(log_c)


def constant_theorem2_from_volumes(sc: Scenario) -> LogConstant:
    """Same constant, from the output-space and sphere volumes."""
    require_tight(sc, "the unit-sphere estimator")
    log_c = log_volume_output_space(sc)
    for k, l in sc.links:
        rx, tx = sc.users[k], sc.users[l]
        nm = rx.N * tx.M
        log_c += log_volume_sphere(nm - rx.d * tx.d) - log_volume_sphere(nm)
    return LogConstant(log_c)


def _require_square(sc: Scenario) -> None:
    require_tight(sc, "the Stiefel estimator")
    require_stiefel_domain(sc)
    if sc.K < 3:
        raise HypothesisError(f"the Stiefel estimator needs K >= 3, {render(sc)} has K = {sc.K}")


def constant_theorem3(sc: Scenario) -> LogConstant:
    """
    The constant in front of the Stiefel average for (N x N, d)^K. It is
    exactly 1 when N = 2d.

    Raises:
        HypothesisError: unless the scenario is tight, square symmetric,
            K >= 3 and N >= 2d.
    """
    _require_square(sc)
    n, d, k = sc.users[0].N, sc.users[0].d, sc.K
    top = log_gamma_run(n - d + 1, n)
    log_c = k * (k - 1) * (top - log_gamma_run(n - 2 * d + 1, n - d))
    log_c += 2 * k * (_g(d) - top)
    return LogConstant(log_c)


def constant_theorem3_from_volumes(sc: Scenario) -> LogConstant:
    """Same constant, from unitary-group volumes and the output space."""
    _require_square(sc)
    n, d = sc.users[0].N, sc.users[0].d
    per_link = (
        d * d * math.log(2.0)
        + 2 * log_volume_unitary(n - d)
        - log_volume_unitary(n)
        - log_volume_unitary(n - 2 * d)
    )
    return LogConstant(len(sc.links) * per_link + log_volume_output_space(sc))


# ---------------------------------------------------------------------------
# Running moments
# ---------------------------------------------------------------------------

def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


class McAccumulator:
    """
    Running mean and sample standard deviation of f(x_j) = exp(log_value).

    In log domain the state is m = max log value, S1 = sum exp(v - m) and
    S2 = sum exp(2 (v - m)). With ``log_domain=False`` the raw values are
    kept and the textbook formulas are used (small runs only).
    """

    def __init__(self, log_domain: bool = True):
        self.log_domain = log_domain
        self.n = 0
        self.log_max = -math.inf
        self.s1 = 0.0
        self.s2 = 0.0
        self._values: List[float] = []

    def push(self, log_value: float) -> None:
        self.n += 1
        if not self.log_domain:
            self._values.append(_safe_exp(log_value))
        if log_value == -math.inf:
            return
        if log_value > self.log_max:
            if self.s1 > 0.0:
                shrink = math.exp(self.log_max - log_value)
                self.s1 *= shrink
                self.s2 *= shrink * shrink
            self.log_max = log_value
        w = math.exp(log_value - self.log_max)
        self.s1 += w
        self.s2 += w * w

    @property
    def all_zero(self) -> bool:
        return self.n > 0 and self.s1 == 0.0

    def _shifted_var(self) -> float:
        if self.n < 2:
            return 0.0
        return max(self.s2 - self.s1 * self.s1 / self.n, 0.0) / (self.n - 1)

    @property
    def log_mean(self) -> float:
        if self.s1 == 0.0:
            return -math.inf
        return self.log_max + math.log(self.s1) - math.log(self.n)

    @property
    def mean(self) -> float:
        if not self.log_domain:
            return float(np.mean(self._values)) if self._values else 0.0
        return _safe_exp(self.log_mean) if self.s1 > 0.0 else 0.0

    @property
    def sample_std(self) -> float:
        if not self.log_domain:
            return float(np.std(self._values, ddof=1)) if self.n > 1 else 0.0
        var = self._shifted_var()
        return _safe_exp(self.log_max + 0.5 * math.log(var)) if var > 0.0 else 0.0

    @property
    def sample_std_rel(self) -> float:
        """Sigma_n / E_n."""
        if self.s1 == 0.0:
            return 0.0 if self.all_zero else math.inf
        if not self.log_domain:
            return self.sample_std / self.mean
        return math.sqrt(self._shifted_var()) * self.n / self.s1

    @property
    def std_error_rel(self) -> float:
        """(Sigma_n / sqrt(n)) / E_n."""
        rel = self.sample_std_rel
        return rel / math.sqrt(self.n) if self.n else math.inf


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------

class Checkpoint(NamedTuple):
    n: int
    mean: float
    std_error_rel: float


@dataclass(frozen=True)
class McEstimate:
    method: str
    seed: int
    n: int
    mean: float
    sample_std: float
    std_error_rel: float
    epsilon: float
    stopping: str
    converged: bool
    all_zero: bool
    log_constant: float
    log_mean: float
    log_max: float
    shifted_sum: float
    shifted_square_sum: float
    nearest_integer: Optional[int]

    @property
    def std_error(self) -> float:
        return self.mean * self.std_error_rel

    @property
    def relative_error_bound(self) -> float:
        """With probability about 0.95 the relative error stays below this."""
        return 2.0 * self.std_error_rel


def nearest_integer(mean: float, std_error_rel: float) -> Optional[int]:
    """
    The integer count, when the estimate pins one down: relative standard
    error below 0.05 and a single integer inside mean +/- 2 standard errors.
    """
    if not math.isfinite(mean) or std_error_rel >= 0.05:
        return None
    half = 2.0 * mean * std_error_rel
    lo, hi = math.ceil(mean - half), math.floor(mean + half)
    if hi - lo != 0:
        return None
    return int(lo)


def _draw_for(kind: str):
    return {"sphere": sphere_flat, "stiefel": stiefel_flat}[kind]


def evaluate_block(
    sc: Scenario,
    kind: str,
    seed: int,
    start: int,
    stop: int,
    singular_rtol: float = DEFAULTS.singular_rtol,
) -> np.ndarray:
    """log |det Psi|^2 for the samples with stream ids start..stop-1."""
    layout = psi_layout(sc)
    draw = _draw_for(kind)
    out = np.empty(stop - start)
    for j in range(start, stop):
        sample = draw(layout, RngStream(seed, j).generator())
        out[j - start] = log_abs_det_sq(layout.psi_from_flat(sample), singular_rtol)
    return out


def _blocks(
    sc: Scenario,
    kind: str,
    seed: int,
    max_samples: int,
    batch_size: int,
    workers: int,
    singular_rtol: float,
) -> Iterator[np.ndarray]:
    """Yield per-sample log values in stream order, block by block."""
    bounds = [(s, min(s + batch_size, max_samples)) for s in range(0, max_samples, batch_size)]
    if workers <= 1:
        for start, stop in bounds:
            yield evaluate_block(sc, kind, seed, start, stop, singular_rtol)
        return

    window = 2 * workers
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = []
        try:
            for start, stop in bounds:
                pending.append(pool.submit(evaluate_block, sc, kind, seed, start, stop, singular_rtol))
                if len(pending) >= window:
                    yield pending.pop(0).result()
            for fut in pending:
                yield fut.result()
        except GeneratorExit:
            # converged early: queued batches are not needed
            pool.shutdown(wait=False, cancel_futures=True)
            raise


def run_estimator(
    sc: Scenario,
    kind: str,
    log_constant: LogConstant,
    epsilon: float = DEFAULTS.epsilon,
    seed: int = DEFAULTS.seed,
    max_samples: int = DEFAULTS.max_samples,
    min_samples: int = DEFAULTS.min_samples,
    stopping: str = "std_error",
    workers: int = DEFAULTS.threads,
    batch_size: int = DEFAULTS.batch_size,
    checkpoint_every: int = DEFAULTS.checkpoint_every,
    on_checkpoint: Optional[Callable[[Checkpoint], None]] = None,
    singular_rtol: float = DEFAULTS.singular_rtol,
    log_domain: bool = True,
) -> McEstimate:
    """
    Crude Monte Carlo over the sample streams of ``seed``.

    Samples are folded in stream order and the stop decision is taken after
    every sample once ``min_samples`` are in, so the result depends only on
    (scenario, seed, settings), never on ``workers`` or ``batch_size``.
    """
    if stopping not in STOPPING_RULES:
        raise ValueError(f"unknown stopping rule {stopping!r}, expected one of {STOPPING_RULES}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")

    method = {"sphere": "mc-general", "stiefel": "mc-square"}[kind]
    acc = McAccumulator(log_domain=log_domain)
    converged = False
    log_c = log_constant.log_value

    def rule() -> float:
        return acc.std_error_rel if stopping == "std_error" else acc.sample_std_rel

    logger.info("%s %s: seed=%d epsilon=%g log C=%.6g", method, render(sc), seed, epsilon, log_c)
    blocks = _blocks(sc, kind, seed, max_samples, batch_size, workers, singular_rtol)
    try:
        for block in blocks:
            for lv in block:
                acc.push(log_c + float(lv))
                if acc.n % checkpoint_every == 0:
                    cp = Checkpoint(acc.n, acc.mean, acc.std_error_rel)
                    logger.info("n=%d mean=%.6g std_error_rel=%.4g", *cp)
                    if on_checkpoint is not None:
                        on_checkpoint(cp)
                if acc.n >= min_samples and (acc.all_zero or rule() < epsilon):
                    converged = True
                    break
            if converged:
                break
    finally:
        blocks.close()

    if acc.all_zero:
        logger.warning("%s: every sample of Psi was singular; the scenario is infeasible", render(sc))

    se_rel = 0.0 if acc.all_zero else acc.std_error_rel
    mean = acc.mean
    estimate = McEstimate(
        method=method,
        seed=seed,
        n=acc.n,
        mean=mean,
        sample_std=acc.sample_std,
        std_error_rel=se_rel,
        epsilon=epsilon,
        stopping=stopping,
        converged=converged,
        all_zero=acc.all_zero,
        log_constant=log_c,
        log_mean=acc.log_mean,
        log_max=acc.log_max,
        shifted_sum=acc.s1,
        shifted_square_sum=acc.s2,
        nearest_integer=nearest_integer(mean, se_rel),
    )
    logger.info(
        "%s %s: n=%d mean=%.6g std_error_rel=%.4g converged=%s",
        method, render(sc), estimate.n, estimate.mean, estimate.std_error_rel, converged,
    )
    return estimate


def estimate_general(sc: Scenario, epsilon: float = DEFAULTS.epsilon, seed: int = DEFAULTS.seed,
                     max_samples: int = DEFAULTS.max_samples, **options) -> McEstimate:
    """
    Estimate the solution count of any tight scenario by averaging over
    unit-norm structured channels.

    Raises:
        HypothesisError: if s != 0.
    """
    constant = constant_theorem2(sc)
    return run_estimator(sc, "sphere", constant, epsilon=epsilon, seed=seed,
                         max_samples=max_samples, **options)


def estimate_square(sc: Scenario, epsilon: float = DEFAULTS.epsilon, seed: int = DEFAULTS.seed,
                    max_samples: int = DEFAULTS.max_samples, **options) -> McEstimate:
    """
    Estimate the solution count of a tight (N x N, d)^K scenario, K >= 3,
    by averaging over Stiefel-frame channels.

    Raises:
        HypothesisError: if the scenario is not tight, square symmetric
            with K >= 3.
    """
    constant = constant_theorem3(sc)
    return run_estimator(sc, "stiefel", constant, epsilon=epsilon, seed=seed,
                         max_samples=max_samples, **options)
