"""Analysis quantities for the sphere iteration.

Component indices are 1-based throughout (``1 <= i <= d``), matching the
trace files written by :mod:`tensorica.harness`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .datagen import MixingModel, SourceDistribution, as_generator
from .errors import InvalidDimensionError, ScheduleInfeasibleError

WARM = "warm"
WARM_AUX = "warm-aux"
COLD = "cold"


@dataclass
class RunTrace:
    """Diagnostics recorded along one run of the solver.

    The per-record arrays share one length.  ``u_snapshots`` is ``None``
    unless snapshots were requested.
    """

    t: np.ndarray
    tan_angle_min: np.ndarray
    component_index: np.ndarray
    phase: np.ndarray
    T: int
    d: int
    seed: int | None = None
    config_fingerprint: str = ""
    initial_tan: float = math.inf
    initial_index: int = 1
    final_u: np.ndarray | None = None
    first_warm_t: int | None = None
    window_fraction: float = 0.6
    window_mean_error: float = math.nan
    u_snapshots: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def final_error(self) -> float:
        if len(self.t) == 0:
            return self.initial_tan
        return float(self.tan_angle_min[-1])

    @property
    def final_index(self) -> int:
        if len(self.t) == 0:
            return self.initial_index
        return int(self.component_index[-1])

    def crossed_warm_before(self, t_max: int, barrier: float = 1 / math.sqrt(3)) -> bool:
        """Whether a recorded error at ``t <= t_max`` is below ``barrier``."""
        mask = self.t <= t_max
        return bool(np.any(self.tan_angle_min[mask] < barrier))

    def rows(self, run_id):
        for t, tan, idx, ph in zip(self.t, self.tan_angle_min, self.component_index, self.phase):
            yield (run_id, int(t), int(ph), float(tan), int(idx))

    def equals(self, other: "RunTrace") -> bool:
        """Bit-level equality of the recorded series."""
        return (
            self.T == other.T
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.tan_angle_min, other.tan_angle_min)
            and np.array_equal(self.component_index, other.component_index)
            and np.array_equal(self.phase, other.phase)
            and (self.final_u is None) == (other.final_u is None)
            and (self.final_u is None or np.array_equal(self.final_u, other.final_u))
        )


class ClosestComponent(NamedTuple):
    index: int
    tan_abs: float


class RotatedView(NamedTuple):
    v: np.ndarray
    index_I: int


class CoordRatios(NamedTuple):
    U: np.ndarray
    W: np.ndarray


class MonteCarloEstimate(NamedTuple):
    value: float
    stderr: float


def tan_angle(u, a) -> float:
    """Signed tangent of the angle between unit vectors ``u`` and ``a``.

    The sign follows ``a . u``.  Orthogonal inputs give ``+inf``.
    """
    c = float(np.dot(a, u))
    if c == 0.0:
        return math.inf
    return math.sqrt(max(1.0 - c * c, 0.0)) / c


def closest_component(u, model) -> ClosestComponent:
    """Component ``a_i`` minimizing ``tan^2(u, a_i)``; ties go to the smallest index.

    ``model`` may be a :class:`MixingModel` or a bare mixing matrix.
    """
    A = model.A if isinstance(model, MixingModel) else np.asarray(model)
    c = np.abs(A.T @ u)
    i = int(np.argmax(c))  # first maximum wins
    return ClosestComponent(i + 1, abs(tan_angle(u, A[:, i])))


def rotate(u, model, index: int) -> RotatedView:
    """Rotated iterate ``v = P A^T u`` where ``P`` swaps coordinates 1 and ``index``."""
    A = model.A if isinstance(model, MixingModel) else np.asarray(model)
    d = A.shape[0]
    if not 1 <= index <= d:
        raise InvalidDimensionError(f"component index must be in [1, {d}], got {index}")
    v = A.T @ u
    v[[0, index - 1]] = v[[index - 1, 0]]
    return RotatedView(v, index)


def coord_ratios(v) -> CoordRatios:
    """``U_k = v_k / v_1`` and ``W_k = (v_1^2 - v_k^2) / v_k^2`` for ``k = 2..d``.

    Position ``j`` of each output array corresponds to ``k = j + 2``.
    Undefined entries are ``nan`` for ``U`` (when ``v_1 = 0``) and ``+inf``
    for ``W`` (when ``v_k = 0``).
    """
    v = np.asarray(v, dtype=float)
    v1, rest = v[0], v[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        U = rest / v1 if v1 != 0 else np.full(rest.shape, np.nan)
        sq = rest**2
        W = np.where(sq > 0, (v1**2 - sq) / np.where(sq > 0, sq, 1.0), np.inf)
    return CoordRatios(U, W)


def region_of(v, k: int | None = None) -> frozenset:
    """Labels of the regions containing ``v`` (in rotated coordinates).

    ``warm``: ``v_1^2 >= 3/4``; ``warm-aux``: ``v_1^2 >= 2/3``;
    ``mid_k``: ``v_1^2 >= 3 v_k^2``; ``cold``: ``v_1^2 >= max_k v_k^2``.
    With ``k`` given only that ``mid_k`` is tested, otherwise all of them.
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    sq = v**2
    labels = set()
    if sq[0] >= 0.75:
        labels.add(WARM)
    if sq[0] >= 2.0 / 3.0:
        labels.add(WARM_AUX)
    if sq[0] >= sq[1:].max():
        labels.add(COLD)
    if k is not None and not 2 <= k <= d:
        raise InvalidDimensionError(f"k must be in [2, {d}], got {k}")
    for kk in ([k] if k is not None else range(2, d + 1)):
        if sq[0] >= 3.0 * sq[kk - 1]:
            labels.add(f"mid_{kk}")
    return frozenset(labels)


def fourth_moment_exact(u, model: MixingModel) -> float:
    """``E (u^T X)^4 = mu4 * s + 3 (1 - s)`` with ``s = sum_i (a_i^T u)^4``."""
    s = float(np.sum((model.A.T @ u) ** 4))
    return model.source.mu4 * s + 3.0 * (1.0 - s)


def objective_estimate(u, model: MixingModel, n_mc: int, seed=None, chunk=200_000) -> MonteCarloEstimate:
    """Monte-Carlo estimate of ``-sign(mu4-3) E (u^T X)^4`` with its standard error."""
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    rng = as_generator(seed)
    c = model.A.T @ u  # u^T X = c^T Z
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        y = (model.source.sample(rng, (m, model.d)) @ c) ** 4
        total += y.sum()
        total_sq += (y**2).sum()
        done += m
    mean = total / n_mc
    var = max(total_sq / n_mc - mean**2, 0.0)
    se = math.sqrt(var / max(n_mc - 1, 1))
    return MonteCarloEstimate(-model.source.kurtosis_sign * mean, se)


def cross_moment_exact(v, mu4: float) -> np.ndarray:
    """``E[(v^T Y)^3 Y_k] = (mu4 - 3) v_k^3 + 3 v_k`` for every ``k``."""
    v = np.asarray(v, dtype=float)
    return (mu4 - 3.0) * v**3 + 3.0 * v


def cross_moment_estimate(v, source: SourceDistribution, n: int, seed=None, chunk=200_000):
    """Monte-Carlo ``E[(v^T Y)^3 Y_k]`` for all ``k`` with i.i.d. ``Y_k ~ source``.

    Returns ``(mean, stderr)`` arrays of length ``d``.
    """
    v = np.asarray(v, dtype=float)
    rng = as_generator(seed)
    d = v.shape[0]
    s1 = np.zeros(d)
    s2 = np.zeros(d)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        y = source.sample(rng, (m, d))
        g = (y @ v)[:, None] ** 3 * y
        s1 += g.sum(axis=0)
        s2 += (g**2).sum(axis=0)
        done += m
    mean = s1 / n
    var = np.maximum(s2 / n - mean**2, 0.0)
    return mean, np.sqrt(var / (n - 1))


def rescaled_time(kind: str, eta: float, tau: float, mu4: float, B: float, d: int = 2) -> int:
    """Rescaled horizon ``ceil(tau log(|mu4-3| / (B^8 eta)) / -log(1 - eta |mu4-3| / c))``.

    ``c = 3`` for ``kind="warm"`` and ``c = 2 d`` for ``kind="uniform"``.
    Report-only: the solver never uses it.
    """
    kappa = abs(mu4 - 3.0)
    if kind == "warm":
        rate = eta * kappa / 3.0
    elif kind == "uniform":
        rate = eta * kappa / (2.0 * d)
    else:
        raise ValueError(f"kind must be 'warm' or 'uniform', got {kind!r}")
    if not 0.0 < rate < 1.0:
        raise ScheduleInfeasibleError(
            f"contraction factor eta*|mu4-3|/{'3' if kind == 'warm' else '(2d)'} = {rate:g} "
            "must lie in (0, 1)"
        )
    ratio = kappa / (B**8 * eta)
    if not ratio > 1.0:
        raise ScheduleInfeasibleError(
            f"|mu4-3| / (B^8 eta) = {ratio:g} must exceed 1 for a positive log horizon"
        )
    return int(math.ceil(tau * math.log(ratio) / -math.log1p(-rate)))
