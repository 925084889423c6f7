"""Synthetic data model: Haar mixing matrices, source laws and observation streams.

Observations follow ``X = A Z`` with ``A`` orthogonal and the coordinates of
``Z`` i.i.d. with mean 0, variance 1 and fourth moment ``mu4 != 3``.

All randomness goes through :class:`numpy.random.Generator` backed by PCG64,
so a given integer seed yields the same numbers on every platform numpy
supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import InvalidDimensionError, InvalidDistributionError

RNG_NAME = "numpy.PCG64"

# Observations are generated in blocks of this many rows; part of the
# determinism contract since it fixes the order in which the generator is
# consumed.
STREAM_BLOCK = 4096

_NORMALIZATION_TOL = 1e-12

MIXTURE_GAUSSIAN = "mixture_gaussian"
GAUSSIAN_BERNOULLI = "gaussian_bernoulli"
CUSTOM = "custom"
KINDS = (MIXTURE_GAUSSIAN, GAUSSIAN_BERNOULLI, CUSTOM)

_B_CACHE: dict = {}


def as_generator(seed) -> np.random.Generator:
    """Return a PCG64 generator for an int / SeedSequence, or pass a Generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class SourceDistribution:
    """Law of a single independent source coordinate ``Z_i``.

    Use the constructors :meth:`mixture_gaussian`, :meth:`gaussian_bernoulli`
    and :meth:`custom` rather than building instances directly.

    ``sub_gaussian_B`` is the constant ``B`` for which the psi_2 norm of
    ``Z_i`` is at most ``sqrt(3/8) B``.  When left as ``None`` it is
    estimated numerically on first use of :meth:`resolve_B` and cached.
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    mu4: float = 3.0
    sub_gaussian_B: float | None = None
    sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidDistributionError(f"unknown source kind {self.kind!r}")
        if not np.isfinite(self.mu4) or self.mu4 == 3.0:
            raise InvalidDistributionError(
                "fourth moment must be finite and differ from 3 (Gaussian kurtosis)"
            )
        if self.sub_gaussian_B is not None and not self.sub_gaussian_B > 0:
            raise InvalidDistributionError("sub_gaussian_B must be positive")

    # -- constructors -----------------------------------------------------

    @classmethod
    def mixture_gaussian(cls, mean=1 / np.sqrt(2), var=0.5, p=0.5, sub_gaussian_B=None):
        """``Z = delta*Y1 + (1-delta)*Y2`` with ``Y1 ~ N(-mean, var)``,
        ``Y2 ~ N(mean, var)`` and ``delta ~ Bernoulli(p)``.

        The defaults give ``mu4 = 2.5``.
        """
        if not var > 0:
            raise InvalidDistributionError(f"variance must be positive, got {var}")
        if not 0.0 <= p <= 1.0:
            raise InvalidDistributionError(f"probability must lie in [0, 1], got {p}")
        first = mean * (1.0 - 2.0 * p)
        second = mean**2 + var
        _check_normalized(first, second)
        mu4 = mean**4 + 6 * mean**2 * var + 3 * var**2
        return cls(
            MIXTURE_GAUSSIAN,
            {"mean": float(mean), "var": float(var), "p": float(p)},
            float(mu4),
            sub_gaussian_B,
        )

    @classmethod
    def gaussian_bernoulli(cls, var=2.0, p=0.5, sub_gaussian_B=None):
        """``Z = delta*Y`` with ``Y ~ N(0, var)`` and ``delta ~ Bernoulli(p)``.

        The defaults give ``mu4 = 6``.
        """
        if not var > 0:
            raise InvalidDistributionError(f"variance must be positive, got {var}")
        if not 0.0 <= p <= 1.0:
            raise InvalidDistributionError(f"probability must lie in [0, 1], got {p}")
        _check_normalized(0.0, p * var)
        return cls(
            GAUSSIAN_BERNOULLI,
            {"var": float(var), "p": float(p)},
            float(3 * p * var**2),
            sub_gaussian_B,
        )

    @classmethod
    def custom(cls, sampler, mu4, sub_gaussian_B):
        """Arbitrary law given by ``sampler(rng, n) -> ndarray``.

        Moments are not derived; the caller vouches for mean 0, variance 1
        and the supplied ``mu4`` and ``sub_gaussian_B``.
        """
        if sampler is None or not callable(sampler):
            raise InvalidDistributionError("custom distributions need a callable sampler")
        if sub_gaussian_B is None:
            raise InvalidDistributionError("custom distributions need an explicit sub_gaussian_B")
        return cls(CUSTOM, {}, float(mu4), float(sub_gaussian_B), sampler)

    @classmethod
    def from_name(cls, name: str) -> "SourceDistribution":
        key = name.strip().lower().replace("-", "_")
        if key in (MIXTURE_GAUSSIAN, "mixture", "mg"):
            return cls.mixture_gaussian()
        if key in (GAUSSIAN_BERNOULLI, "bernoulli_gaussian", "gb"):
            return cls.gaussian_bernoulli()
        raise InvalidDistributionError(f"no built-in distribution named {name!r}")

    # -- properties -------------------------------------------------------

    @property
    def excess_kurtosis(self) -> float:
        return self.mu4 - 3.0

    @property
    def kurtosis_sign(self) -> int:
        return 1 if self.mu4 > 3.0 else -1

    def cache_key(self):
        return (self.kind, tuple(sorted(self.params.items())))

    def resolve_B(self, n: int = 1_000_000, seed: int = 0) -> float:
        """Return ``sub_gaussian_B``, estimating (and caching) it if unset."""
        if self.sub_gaussian_B is not None:
            return self.sub_gaussian_B
        key = self.cache_key() + (n, seed)
        if key not in _B_CACHE:
            from .mathkit import sub_gaussian_B

            _B_CACHE[key] = sub_gaussian_B(self, n=n, seed=seed)
        return _B_CACHE[key]

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == MIXTURE_GAUSSIAN:
            m, var, p = self.params["mean"], self.params["var"], self.params["p"]
            first = rng.random(size) < p
            centers = np.where(first, -m, m)
            return centers + np.sqrt(var) * rng.standard_normal(size)
        if self.kind == GAUSSIAN_BERNOULLI:
            var, p = self.params["var"], self.params["p"]
            on = rng.random(size) < p
            return on * (np.sqrt(var) * rng.standard_normal(size))
        out = np.asarray(self.sampler(rng, size), dtype=float)
        if out.shape != np.shape(np.empty(size)):
            raise InvalidDistributionError(
                f"custom sampler returned shape {out.shape}, expected {size}"
            )
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params, "mu4": self.mu4}


def _check_normalized(first, second):
    if abs(first) > _NORMALIZATION_TOL or abs(second - 1.0) > _NORMALIZATION_TOL:
        raise InvalidDistributionError(
            f"source must have mean 0 and second moment 1 (got {first:g}, {second:g})"
        )


def sample_source(dist: SourceDistribution, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. values from ``dist``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return dist.sample(as_generator(seed), n)


def sample_haar_orthogonal(d: int, seed=None) -> np.ndarray:
    """Haar-distributed ``d x d`` orthogonal matrix.

    QR of a standard Gaussian matrix, with the columns of Q re-signed so that
    R has a positive diagonal (without that correction Q is not Haar).
    """
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {d}")
    rng = as_generator(seed)
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


@dataclass(frozen=True, eq=False)
class MixingModel:
    """Orthogonal mixing matrix together with the source law."""

    A: np.ndarray
    source: SourceDistribution

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
            raise InvalidDimensionError(f"mixing matrix must be square with d >= 2, got {A.shape}")
        if np.max(np.abs(A @ A.T - np.eye(A.shape[0]))) > 1e-10:
            raise InvalidDimensionError("mixing matrix is not orthogonal")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @classmethod
    def random(cls, d: int, source: SourceDistribution, seed=None) -> "MixingModel":
        return cls(sample_haar_orthogonal(d, seed), source)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def component(self, i: int) -> np.ndarray:
        """Column ``a_i`` (1-based, as in the trace files)."""
        return self.A[:, i - 1]


class ObservationStream:
    """Unbounded, seeded stream of observations ``X = A Z``.

    Values are produced in blocks of :data:`STREAM_BLOCK` rows, so pulling
    single vectors with :meth:`next_observation` or chunks with :meth:`take`
    yields the same sequence.
    """

    def __init__(self, model: MixingModel, seed=None):
        self.model = model
        self.seed = seed
        self.count_emitted = 0
        self._rng = as_generator(seed)
        self._buf = np.empty((0, model.d))
        self._pos = 0

    def _refill(self):
        d = self.model.d
        z = self.model.source.sample(self._rng, (STREAM_BLOCK, d))
        self._buf = z @ self.model.A.T
        self._pos = 0

    def next_observation(self) -> np.ndarray:
        if self._pos >= len(self._buf):
            self._refill()
        x = self._buf[self._pos].copy()
        self._pos += 1
        self.count_emitted += 1
        return x

    def take(self, n: int) -> np.ndarray:
        """Next ``n`` observations as an ``(n, d)`` array."""
        out = np.empty((n, self.model.d))
        filled = 0
        while filled < n:
            if self._pos >= len(self._buf):
                self._refill()
            k = min(n - filled, len(self._buf) - self._pos)
            out[filled:filled + k] = self._buf[self._pos:self._pos + k]
            self._pos += k
            filled += k
        self.count_emitted += n
        return out

    def __iter__(self):
        while True:
            yield self.next_observation()
