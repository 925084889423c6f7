"""Numerical checks of the supporting inequalities and constants.

* :func:`gronwall_check` evaluates the reversed discrete Gronwall bound on a
  concrete sequence.
* :func:`estimate_psi_alpha_norm` estimates an Orlicz psi_alpha norm by
  bisection over a Monte-Carlo expectation.
* :func:`spacing_experiment` measures how often a uniform point on the
  sphere has a visible gap between its largest and second-largest squared
  coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .datagen import SourceDistribution, as_generator
from .errors import (
    EstimateFailedError,
    HypothesisViolatedError,
    InfeasibleDimensionError,
    InvalidInstanceError,
    InvalidSamplerError,
)

# ---------------------------------------------------------------------------
# Reversed Gronwall inequality
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GronwallInstance:
    """Sequence ``u(0..T)``, weights ``beta(0..T-1)`` in ``[0, 1)`` and bound ``alpha``."""

    u: np.ndarray
    beta: np.ndarray
    alpha: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if u.ndim != 1 or beta.shape != (len(u) - 1,):
            raise InvalidInstanceError("need len(beta) == len(u) - 1")
        if np.any(beta < 0) or np.any(beta >= 1) or not np.all(np.isfinite(beta)):
            raise InvalidInstanceError("beta(s) must lie in [0, 1)")
        if not self.alpha >= 0:
            raise InvalidInstanceError("alpha must be non-negative")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "beta", beta)

    @property
    def T(self) -> int:
        return len(self.u) - 1

    def hypothesis_residuals(self) -> np.ndarray:
        """``|u(t) - u(0) + sum_{s<t} beta(s) u(s)|`` for ``t = 1..T``."""
        acc = np.cumsum(self.beta * self.u[:-1])
        return np.abs(self.u[1:] - self.u[0] + acc)


class GronwallResult(NamedTuple):
    holds: bool
    max_slack: float


def _rounding_slack(inst: GronwallInstance, scale=None) -> float:
    if scale is None:
        scale = max(1.0, float(np.max(np.abs(inst.u))))
    return 1e-12 * scale


def gronwall_check(inst: GronwallInstance, rounding: float | None = None) -> GronwallResult:
    """Check ``|u(t) - u(0) prod_{s<t}(1 - beta(s))| <= 2 alpha - alpha prod(...)``.

    The premise (residuals of :meth:`GronwallInstance.hypothesis_residuals`
    at most ``alpha``) is verified first and a violation raises
    :class:`HypothesisViolatedError`.  ``max_slack`` is the largest value of
    the left side minus ``2 alpha``; it is negative when the bound holds
    with room to spare.  ``rounding`` (default ``1e-12 * max(1, max|u|)``)
    absorbs floating point error on both checks.
    """
    tol = _rounding_slack(inst) if rounding is None else rounding
    if inst.T == 0:
        return GronwallResult(True, -2.0 * inst.alpha)
    if np.any(inst.hypothesis_residuals() > inst.alpha + tol):
        raise HypothesisViolatedError("premise |u(t) - u(0) + sum beta(s) u(s)| <= alpha fails")
    prod = np.cumprod(1.0 - inst.beta)
    lhs = np.abs(inst.u[1:] - inst.u[0] * prod)
    bound = 2.0 * inst.alpha - inst.alpha * prod
    holds = bool(np.all(lhs <= bound + tol))
    return GronwallResult(holds, float(np.max(lhs - 2.0 * inst.alpha)))


def random_gronwall_instance(rng, T: int | None = None) -> GronwallInstance:
    """Random instance that satisfies the premise by construction.

    ``u`` is built forward as ``u(t) = u(0) - sum_{s<t} beta(s) u(s) + e(t)``
    with ``|e(t)| < alpha``.  Weights come from a mix of regimes (tiny,
    uniform, close to one) and perturbations are either uniform or pinned
    at ``+-alpha``, which is where the bound gets tight.
    """
    rng = as_generator(rng)
    if T is None:
        T = int(rng.integers(1, 200))
    alpha = float(10.0 ** rng.uniform(-3, 1))
    regime = rng.integers(3)
    if regime == 0:
        beta = rng.uniform(0, 1e-2, T)
    elif regime == 1:
        beta = rng.uniform(0, 1, T)
    else:
        beta = 1.0 - 10.0 ** rng.uniform(-6, 0, T)
    beta = np.minimum(beta, np.nextafter(1.0, 0.0))
    shape = rng.integers(3)
    if shape == 0:
        e = rng.uniform(-1, 1, T)
    elif shape == 1:
        e = rng.choice([-1.0, 1.0], T)
    else:
        # one sign flip: drift one way, then the other
        e = np.where(np.arange(T) < rng.integers(0, T + 1), 1.0, -1.0) * rng.choice([-1.0, 1.0])
    e = alpha * (1 - 1e-9) * e
    u = np.empty(T + 1)
    u[0] = rng.normal(0, 10)
    acc = 0.0
    for t in range(1, T + 1):
        acc += beta[t - 1] * u[t - 1]
        u[t] = u[0] - acc + e[t - 1]
    return GronwallInstance(u, beta, alpha)


def gronwall_audit(n: int = 10_000, seed=0) -> tuple[int, float]:
    """Check ``n`` random instances; returns ``(failures, worst max_slack)``."""
    rng = as_generator(seed)
    failures = 0
    worst = -math.inf
    for _ in range(n):
        res = gronwall_check(random_gronwall_instance(rng))
        failures += not res.holds
        worst = max(worst, res.max_slack)
    return failures, worst


# ---------------------------------------------------------------------------
# Orlicz norms
# ---------------------------------------------------------------------------

K_MIN, K_MAX = 1e-6, 1e6


@dataclass(frozen=True)
class OrliczEstimate:
    alpha: float
    K_hat: float
    n_samples: int
    tolerance: float
    bracket: tuple[float, float]
    mc_value: float
    """Monte-Carlo ``E exp(|X / K_hat|^alpha)`` on the samples used."""


def _psi_mean(absx: np.ndarray, K: float, alpha: float) -> float:
    with np.errstate(over="ignore"):
        return float(np.mean(np.exp((absx / K) ** alpha)))


def psi_alpha_norm_of_samples(x, alpha: float, tol: float = 1e-3) -> OrliczEstimate:
    """Empirical psi_alpha norm of a fixed sample.

    Geometric bisection on ``K`` in ``[1e-6, 1e6]`` for the crossing of
    ``mean(exp(|x/K|^alpha)) = 2``.  The same sample is used for every
    ``K`` so the criterion is monotone in ``K``.  Stops when the bracket's
    relative width drops below ``tol``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidSamplerError("sampler produced non-finite values")
    absx = np.abs(x)
    n = len(absx)
    lo, hi = K_MIN, K_MAX
    if _psi_mean(absx, lo, alpha) <= 2.0:
        return OrliczEstimate(alpha, lo, n, tol, (lo, lo), _psi_mean(absx, lo, alpha))
    if _psi_mean(absx, hi, alpha) > 2.0:
        raise EstimateFailedError(f"no bracket for the psi_{alpha} norm within [{K_MIN}, {K_MAX}]")
    while hi / lo - 1.0 > tol:
        mid = math.sqrt(lo * hi)
        if _psi_mean(absx, mid, alpha) > 2.0:
            lo = mid
        else:
            hi = mid
    return OrliczEstimate(alpha, hi, n, tol, (lo, hi), _psi_mean(absx, hi, alpha))


def estimate_psi_alpha_norm(sampler, alpha: float, n: int = 1_000_000, seed=None,
                            tol: float = 1e-3) -> OrliczEstimate:
    """Monte-Carlo estimate of ``inf{K > 0 : E exp(|X/K|^alpha) <= 2}``.

    ``sampler`` is called once as ``sampler(rng, n)``; a
    :class:`~tensorica.datagen.SourceDistribution` is accepted as well.
    """
    if n < 10_000:
        raise ValueError("n must be at least 1e4 for a usable estimate")
    rng = as_generator(seed)
    if isinstance(sampler, SourceDistribution):
        x = sampler.sample(rng, n)
    else:
        x = np.asarray(sampler(rng, n), dtype=float)
    return psi_alpha_norm_of_samples(x, alpha, tol)


def psi_alpha_confidence_width(sampler, alpha: float, n: int, seed=None, batches: int = 20) -> float:
    """Approximate 95% confidence width of the estimate at sample size ``n``.

    Batch means: the ``n`` draws are split into ``batches`` groups, each is
    estimated separately and the spread is scaled to the full sample.
    """
    rng = as_generator(seed)
    x = sampler.sample(rng, n) if isinstance(sampler, SourceDistribution) else sampler(rng, n)
    x = np.asarray(x, dtype=float)
    ks = [psi_alpha_norm_of_samples(part, alpha).K_hat for part in np.array_split(x, batches)]
    return 2 * 1.96 * float(np.std(ks, ddof=1)) / math.sqrt(batches)


PSI2_TO_B = math.sqrt(8.0 / 3.0)


def sub_gaussian_B(dist: SourceDistribution, n: int = 1_000_000, seed=0) -> float:
    """``B`` such that the psi_2 norm of the source equals ``sqrt(3/8) B``."""
    return estimate_psi_alpha_norm(dist, 2.0, n, seed).K_hat * PSI2_TO_B


# ---------------------------------------------------------------------------
# Spacing of the top two squared coordinates at uniform initialization
# ---------------------------------------------------------------------------


class SpacingResult(NamedTuple):
    empirical_prob: float
    stderr: float
    threshold: float
    n_trials: int


def spacing_min_dimension(epsilon: float) -> float:
    """Smallest ``d`` allowed for ``epsilon``: ``2 sqrt(2 pi e) log(1/epsilon) + 1``."""
    return 2.0 * math.sqrt(2.0 * math.pi * math.e) * math.log(1.0 / epsilon) + 1.0


def spacing_threshold(d: int, epsilon: float) -> float:
    return epsilon / (8.0 * math.log(1.0 / epsilon) * math.log(d))


def min_W_uniform(d: int, n_trials: int, seed=None, chunk: int = 20_000) -> np.ndarray:
    """``min_{k>=2} W_k`` for ``n_trials`` uniform points, after moving the
    largest squared coordinate to position 1."""
    rng = as_generator(seed)
    out = np.empty(n_trials)
    done = 0
    while done < n_trials:
        m = min(chunk, n_trials - done)
        sq = rng.standard_normal((m, d)) ** 2  # normalization cancels in the ratios
        top2 = -np.partition(-sq, 1, axis=1)[:, :2]
        # min over k of (v_1^2 - v_k^2) / v_k^2 is attained at the runner-up
        out[done:done + m] = (top2[:, 0] - top2[:, 1]) / top2[:, 1]
        done += m
    return out


def spacing_experiment(d: int, epsilon: float, n_trials: int, seed=None) -> SpacingResult:
    """Fraction of uniform initializations with ``min_k W_k >= eps / (8 log(1/eps) log d)``."""
    if not 0.0 < epsilon < 1.0 / 3.0:
        raise InfeasibleDimensionError(f"epsilon must lie in (0, 1/3), got {epsilon}")
    if d < 2 or d < spacing_min_dimension(epsilon):
        raise InfeasibleDimensionError(
            f"d={d} violates d >= 2 sqrt(2 pi e) log(1/eps) + 1 = {spacing_min_dimension(epsilon):.3f}"
        )
    thr = spacing_threshold(d, epsilon)
    w = min_W_uniform(d, n_trials, seed)
    p = float(np.mean(w >= thr))
    return SpacingResult(p, math.sqrt(p * (1 - p) / n_trials), thr, n_trials)
