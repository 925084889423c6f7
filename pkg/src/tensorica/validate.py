"""Property suite behind ``tensorica validate``.

Each check returns ``(passed, detail)``.  :func:`run_suite` runs them all
and reports one line per property.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from . import diagnostics as dg
from . import mathkit as mk
from .datagen import MixingModel, SourceDistribution, as_generator, sample_haar_orthogonal
from .solver import (
    TWO_PHASE,
    TWO_PHASE_PRACTICAL,
    SolverState,
    StepsizeSchedule,
    project_sphere,
    run,
    sgd_step,
)

SPHERE_TOL = 1e-12
ROTATION_TOL = 1e-10
WU_TOL = 1e-10
HAAR_TOL = 1e-12


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def check_sphere_normalization(rng):
    d = 10
    model = MixingModel.random(d, SourceDistribution.gaussian_bernoulli(), rng)
    state = SolverState(project_sphere(rng.standard_normal(d)), kurtosis_sign=1)
    worst = 0.0
    xs =model.source.sample(rng, (2000, d)) @ model.A.T
    for x in xs:
        state = sgd_step(state, x, 0.05)
        worst = max(worst, abs(np.linalg.norm(state.u) - 1.0))
    trace = run(model, 2000, StepsizeSchedule("fixed", 2000, d, model.source.mu4, eta=0.05),
                seed=int(rng.integers(2**32)), full_resolution=True, keep_snapshots=True)
    worst = max(worst, float(np.max(np.abs(np.linalg.norm(trace.u_snapshots, axis=1) - 1.0))))
    return worst <= SPHERE_TOL, f"max | ||u|| - 1 | = {worst:.2e}"


def check_rotation_identity(rng, n=1000):
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 30))
        A = sample_haar_orthogonal(d, rng)
        u = project_sphere(rng.standard_normal(d))
        i = int(rng.integers(1, d + 1))
        v = dg.rotate(u, A, i).v
        a = dg.tan_angle(v, np.eye(d)[0])
        b = dg.tan_angle(u, A[:, i - 1])
        if math.isfinite(a) and math.isfinite(b):
            worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return worst < ROTATION_TOL, f"max |tan(v,e1) - tan(u,a_I)| = {worst:.2e} over {n} triples"


def check_wu_identity(rng, n=1000):
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 30))
        v = project_sphere(rng.standard_normal(d))
        U, W = dg.coord_ratios(v)
        ok = np.isfinite(U) & np.isfinite(W) & (U != 0)
        if ok.any():
            err = np.abs(W[ok] - (1.0 / U[ok] ** 2 - 1.0)) / np.maximum(1.0, np.abs(W[ok]))
            worst = max(worst, float(err.max()))
    return worst < WU_TOL, f"max |W - (1/U^2 - 1)| / max(1, |W|) = {worst:.2e}"


def check_projection_idempotent(rng, n=1000):
    worst = 0.0
    for _ in range(n):
        w = rng.standard_normal(int(rng.integers(2, 30))) * 10.0 ** rng.uniform(-5, 5)
        p = project_sphere(w)
        worst = max(worst, float(np.max(np.abs(project_sphere(p) - p))))
    return worst <= SPHERE_TOL, f"max |P(P(w)) - P(w)| = {worst:.2e}"


def check_haar_orthogonality(rng):
    worst = 0.0
    for d in (2, 3, 7, 20, 54, 100):
        Q = sample_haar_orthogonal(d, rng)
        worst = max(worst, float(np.max(np.abs(Q @ Q.T - np.eye(d)))))
    return worst < HAAR_TOL, f"max |QQ^T - I| = {worst:.2e}"


def check_determinism(rng):
    from .harness.config import ExperimentConfig
    from .harness.experiment import run_experiment

    seed = int(rng.integers(2**31))
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            out = Path(tmp) / str(k)
            cfg = ExperimentConfig(name="det", d=6, T=5000, replications=2, seed=seed,
                                   output_dir=str(out), record_stride=7)
            run_experiment(cfg)
            blobs.append({p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*.csv"))})
    same = blobs[0] == blobs[1] and len(blobs[0]) == 3
    return same, f"{len(blobs[0])} CSV files compared byte for byte"


def check_phase_boundary(rng):
    problems = []
    for kind in (TWO_PHASE_PRACTICAL, TWO_PHASE):
        for T in (200_000, 1_000_001):
            s = StepsizeSchedule(kind, T, 20, 6.0, B=2.0)
            half = T // 2
            ts1 = [1, 2, half // 2, half]
            ts2 = [half + 1, half + 2, T - 1, T]
            v1 = {s.at(t) for t in ts1}
            v2 = {s.at(t) for t in ts2}
            if len(v1) != 1 or len(v2) != 1 or v1 == v2 or min(v1 | v2) <= 0:
                problems.append(f"{kind} T={T}")
    return not problems, "constant within phases, jump at T/2" if not problems else ", ".join(problems)


def check_moment_identity(rng, n=1_000_000, n_vectors=20, d=10):
    worst = 0.0
    for dist in (SourceDistribution.mixture_gaussian(), SourceDistribution.gaussian_bernoulli()):
        for _ in range(n_vectors):
            v = project_sphere(rng.standard_normal(d))
            est, se = dg.cross_moment_estimate(v, dist, n, rng)
            z = np.abs(est - dg.cross_moment_exact(v, dist.mu4)) / se
            worst = max(worst, float(z.max()))
    return worst <= 3.0, f"max |MC - exact| / SE = {worst:.2f} (limit 3)"


def check_gronwall(rng, n=10_000):
    failures, worst = mk.gronwall_audit(n, rng)
    return failures == 0, f"{failures} failures in {n} instances, max LHS - 2 alpha = {worst:.2e}"


def check_psi2_normal(rng, n=1_000_000):
    est = mk.estimate_psi_alpha_norm(lambda r, m: r.standard_normal(m), 2.0, n, rng)
    rel = abs(est.K_hat / math.sqrt(8 / 3) - 1)
    return rel <= 0.02, f"K_hat = {est.K_hat:.5f}, relative error {rel:.4f} (limit 0.02)"


def check_spacing(rng, n_trials=10_000):
    res = mk.spacing_experiment(50, 0.1, n_trials, rng)
    return res.empirical_prob >= 0.7, f"P(min W >= {res.threshold:.3g}) = {res.empirical_prob:.4f} (need >= 0.7)"


STRUCTURAL: list[tuple[str, Callable]] = [
    ("sphere normalization after every step", check_sphere_normalization),
    ("rotation identity tan(v,e1) = tan(u,a_I)", check_rotation_identity),
    ("W = 1/U^2 - 1 identity", check_wu_identity),
    ("projection idempotence", check_projection_idempotent),
    ("Haar orthogonality", check_haar_orthogonality),
    ("determinism byte-equality", check_determinism),
    ("stepsize phase-boundary contract", check_phase_boundary),
]

NUMERICAL: list[tuple[str, Callable]] = [
    ("moment identity E[(v'Y)^3 Y_k]", check_moment_identity),
    ("reversed Gronwall audit", check_gronwall),
    ("psi_2 norm of N(0,1)", check_psi2_normal),
    ("spacing at uniform initialization", check_spacing),
]


def run_suite(seed: int = 0, structural_only: bool = False, report=print) -> list[CheckResult]:
    """Run the checks (each with its own child seed) and report one line each."""
    checks = STRUCTURAL if structural_only else STRUCTURAL + NUMERICAL
    children = np.random.SeedSequence(seed).spawn(len(checks))
    results = []
    for (name, fn), child in zip(checks, children):
        try:
            passed, detail = fn(as_generator(child))
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(passed), detail)
        results.append(res)
        if report is not None:
            report(f"[{'PASS' if res.passed else 'FAIL'}] {name}: {detail}")
    return results
