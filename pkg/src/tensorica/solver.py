"""Projected stochastic gradient iteration on the unit sphere for one component.

Each observation ``x`` moves the iterate by

    u <- normalize(u + eta * sign(mu4 - 3) * (u . x)^3 * x)

with ``eta`` taken from a :class:`StepsizeSchedule`.  :func:`run` drives the
iteration over an :class:`~tensorica.datagen.ObservationStream` and records
diagnostics; its inner loop is compiled with numba (see ``_kernel``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernel
from .datagen import MixingModel, ObservationStream, as_generator
from .diagnostics import RunTrace, closest_component
from .errors import DegenerateVectorError, InvalidDimensionError, ScheduleInfeasibleError

CONSTANT_WARM = "constant_warm"
CONSTANT_UNIFORM = "constant_uniform"
TWO_PHASE = "two_phase"
TWO_PHASE_PRACTICAL = "two_phase_practical"
FIXED = "fixed"
SCHEDULE_KINDS = (CONSTANT_WARM, CONSTANT_UNIFORM, TWO_PHASE, TWO_PHASE_PRACTICAL, FIXED)
LOG_KINDS = (CONSTANT_WARM, CONSTANT_UNIFORM, TWO_PHASE)

_TINY_NORM = 1e-300
_CHUNK = 1 << 16


def project_sphere(w) -> np.ndarray:
    """Return ``w / ||w||``; raises :class:`DegenerateVectorError` for a zero vector."""
    w = np.asarray(w, dtype=float)
    nrm = np.linalg.norm(w)
    if not nrm > _TINY_NORM or not np.isfinite(nrm):
        raise DegenerateVectorError(f"cannot project vector of norm {nrm:g} onto the sphere")
    return w / nrm


@dataclass(frozen=True)
class StepsizeSchedule:
    """Rule producing the stepsize at each iteration ``t = 1..T``.

    Kinds
    -----
    constant_warm
        ``9 log(2 k^2 T / (9 B^8)) / (2 k T)`` for every ``t``.
    constant_uniform
        ``4 d log(k^2 T / (4 B^8 d)) / (k T)`` for every ``t``.
    two_phase
        ``8 d log(k^2 T / (8 B^8 d)) / (k T)`` for ``t <= T/2``, then
        ``9 log(k^2 T / (9 B^8)) / (k T)``.
    two_phase_practical
        ``8 d / (k T)`` then ``9 / (k T)`` (log factors dropped).
    fixed
        ``eta`` for every ``t``.

    Here ``k = |mu4 - 3|``.  ``B`` is only consulted by the logarithmic kinds.
    """

    kind: str
    T: int
    d: int
    mu4: float
    B: float | None = None
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.mu4 == 3.0:
            raise ScheduleInfeasibleError("mu4 = 3 gives no kurtosis signal")
        if self.kind == FIXED and (self.eta is None or self.eta < 0):
            raise ValueError("fixed schedule needs eta >= 0")
        if self.kind in LOG_KINDS and (self.B is None or not self.B > 0):
            raise ScheduleInfeasibleError(f"{self.kind} schedule needs a positive B")

    @classmethod
    def for_model(cls, kind: str, T: int, model: MixingModel, eta=None, B=None):
        """Schedule for ``model``; ``B`` is resolved from the source law if needed."""
        src = model.source
        if kind in LOG_KINDS and B is None:
            B = src.resolve_B()
        return cls(kind, int(T), model.d, src.mu4, B, eta)

    @property
    def kurtosis_sign(self) -> int:
        return 1 if self.mu4 > 3.0 else -1

    @property
    def boundary(self) -> int:
        """Last iteration of phase 1 (``t <= T/2``)."""
        if self.kind in (TWO_PHASE, TWO_PHASE_PRACTICAL):
            return self.T // 2
        return self.T

    def phase(self, t: int) -> int:
        return 1 if t <= self.boundary else 2

    def phase_values(self) -> tuple[float, float]:
        """``(eta_phase1, eta_phase2)``; equal for single-phase kinds."""
        k = abs(self.mu4 - 3.0)
        T, d = self.T, self.d
        if self.kind == FIXED:
            return float(self.eta), float(self.eta)
        if self.kind == TWO_PHASE_PRACTICAL:
            return 8.0 * d / (k * T), 9.0 / (k * T)
        B8 = self.B**8
        if self.kind == CONSTANT_WARM:
            eta = 9.0 * _log_factor(2 * k**2 * T / (9 * B8), "T > 9 B^8 / (2 (mu4-3)^2)") / (2 * k * T)
            return eta, eta
        if self.kind == CONSTANT_UNIFORM:
            eta = 4.0 * d * _log_factor(k**2 * T / (4 * B8 * d), "T > 4 B^8 d / (mu4-3)^2") / (k * T)
            return eta, eta
        eta1 = 8.0 * d * _log_factor(k**2 * T / (8 * B8 * d), "T > 8 B^8 d / (mu4-3)^2") / (k * T)
        eta2 = 9.0 * _log_factor(k**2 * T / (9 * B8), "T > 9 B^8 / (mu4-3)^2") / (k * T)
        return eta1, eta2

    def at(self, t: int) -> float:
        return stepsize_at(self, t)


def _log_factor(arg: float, condition: str) -> float:
    if not arg > 1.0:
        raise ScheduleInfeasibleError(
            f"stepsize log factor is non-positive (argument {arg:.4g}); requires {condition}"
        )
    return math.log(arg)


def stepsize_at(schedule: StepsizeSchedule, t: int) -> float:
    """Stepsize used at iteration ``t`` (``1 <= t <= T``)."""
    if not 1 <= t <= schedule.T:
        raise ValueError(f"t must be in [1, {schedule.T}], got {t}")
    eta1, eta2 = schedule.phase_values()
    return eta1 if t <= schedule.boundary else eta2


@dataclass(frozen=True, eq=False)
class SolverState:
    u: np.ndarray
    t: int = 0
    kurtosis_sign: int = 1
    schedule: StepsizeSchedule | None = None


def sgd_step(state: SolverState, x, eta: float) -> SolverState:
    """One projected update; returns a new state with ``t`` advanced by one."""
    if eta < 0:
        raise ValueError("stepsize must be non-negative")
    u = state.u
    x = np.asarray(x, dtype=float)
    w = u + eta * state.kurtosis_sign * float(u @ x) ** 3 * x
    try:
        u_new = project_sphere(w)
    except DegenerateVectorError as exc:
        raise DegenerateVectorError(str(exc), iteration=state.t + 1) from None
    return replace(state, u=u_new, t=state.t + 1)


def init_uniform(d: int, seed=None) -> np.ndarray:
    """Uniform point on the sphere, as a normalized standard Gaussian vector."""
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {d}")
    rng = as_generator(seed)
    while True:
        chi = rng.standard_normal(d)
        nrm = np.linalg.norm(chi)
        if nrm > 0:
            return chi / nrm


def estimate_kurtosis_sign(stream: ObservationStream, n: int = 10_000) -> int:
    """Sign of the empirical excess kurtosis, averaged over observed coordinates.

    Each coordinate of ``X`` has excess kurtosis ``(mu4 - 3) sum_i A_ji^4``,
    so all coordinates share the sign of ``mu4 - 3``.
    """
    x = stream.take(n)
    x = x - x.mean(axis=0)
    m2 = (x**2).mean(axis=0)
    m4 = (x**4).mean(axis=0)
    return 1 if float(np.mean(m4 / m2**2 - 3.0)) > 0 else -1


def default_stride(T: int) -> int:
    return max(1, T // 2000)


def run(
    model: MixingModel,
    T: int,
    schedule: StepsizeSchedule | str = TWO_PHASE_PRACTICAL,
    init="uniform",
    seed: int | None = 0,
    record_stride: int | None = None,
    full_resolution: bool = False,
    window_fraction: float = 0.6,
    keep_snapshots: bool = False,
    kurtosis_sign: int | str | None = None,
    warmup: int = 10_000,
) -> RunTrace:
    """Run the iteration for ``T`` observations and return its trace.

    ``init`` is ``"uniform"`` or an explicit starting vector (normalized
    here).  ``seed`` is split into independent streams for initialization,
    observations and (if ``kurtosis_sign="estimate"``) the warm-up sample,
    so the run consumes exactly ``T`` observations from its stream.

    The trace records every ``record_stride`` iterations (default
    ``max(1, T // 2000)``, or every iteration with ``full_resolution``) plus
    the last one.  ``window_mean_error`` averages the closest-component
    tan-angle over the final ``window_fraction * T`` iterates.
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be at least 1")
    if isinstance(schedule, str):
        schedule = StepsizeSchedule.for_model(schedule, T, model)
    if schedule.T != T or schedule.d != model.d:
        raise ValueError("schedule was built for a different (T, d)")
    eta1, eta2 = schedule.phase_values()

    init_seq, stream_seq, warm_seq = np.random.SeedSequence(seed).spawn(3)
    if isinstance(init, str):
        if init != "uniform":
            raise ValueError(f"unknown init mode {init!r}")
        u = init_uniform(model.d, init_seq)
    else:
        u = project_sphere(np.array(init, dtype=float))

    if kurtosis_sign is None:
        sign = model.source.kurtosis_sign
    elif kurtosis_sign == "estimate":
        sign = estimate_kurtosis_sign(ObservationStream(model, warm_seq), warmup)
    else:
        sign = int(kurtosis_sign)
        if sign not in (-1, 1):
            raise ValueError("kurtosis_sign must be +1 or -1")

    stride = 1 if full_resolution else int(record_stride or default_stride(T))
    n_max = T // stride + 1
    rec_t = np.empty(n_max, dtype=np.int64)
    rec_tan = np.empty(n_max)
    rec_idx = np.empty(n_max, dtype=np.int64)
    rec_phase = np.empty(n_max, dtype=np.int64)
    rec_u = np.empty((n_max if keep_snapshots else 0, model.d))
    window_len = max(1, int(round(window_fraction * T)))
    window_start = T - window_len

    initial = closest_component(u, model)
    # window_sum, window_count, first_warm_t, last_tan, last_idx
    state = np.array([0.0, 0.0, -1.0, initial.tan_abs, float(initial.index)])
    if initial.tan_abs <= _kernel.WARM_TAN:
        state[2] = 0

    stream = ObservationStream(model, stream_seq)
    A = np.ascontiguousarray(model.A)
    n_rec = 0
    t = 0
    while t < T:
        X = stream.take(min(_CHUNK, T - t))
        n_rec = _kernel.run_block(
            u, X, t, T, schedule.boundary, eta1, eta2, float(sign), A, stride,
            window_start, rec_t, rec_tan, rec_idx, rec_phase, rec_u,
            n_rec, keep_snapshots, state,
        )
        if n_rec < 0:
            raise DegenerateVectorError("pre-projection vector vanished", iteration=-n_rec)
        t += len(X)

    return RunTrace(
        t=rec_t[:n_rec].copy(),
        tan_angle_min=rec_tan[:n_rec].copy(),
        component_index=rec_idx[:n_rec].copy(),
        phase=rec_phase[:n_rec].copy(),
        T=T,
        d=model.d,
        seed=seed,
        initial_tan=initial.tan_abs,
        initial_index=initial.index,
        final_u=u,
        first_warm_t=None if state[2] < 0 else int(state[2]),
        window_fraction=window_fraction,
        window_mean_error=state[0] / state[1],
        u_snapshots=rec_u[:n_rec].copy() if keep_snapshots else None,
        extra={"eta1": eta1, "eta2": eta2, "kurtosis_sign": sign},
    )
