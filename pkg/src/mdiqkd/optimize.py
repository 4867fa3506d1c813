"""Multi-start Nelder-Mead search over the six protocol parameters.

The search runs in an unconstrained 6-vector ``z``:

* ``mu_y`` and ``mu_z`` are log-uniformly squashed into ``(MU_MIN, MU_MAX]``,
* ``mu_x = mu_y * sigmoid(z)``, which keeps ``mu_x < mu_y``,
* ``(p_o, p_x, p_y, p_z)`` is a softmax with the vacuum logit pinned at 0,
  so every probability is positive and they sum to one.

The objective is the expected key rate per pulse, i.e. the finite-key
analysis fed with expected counts (or the asymptotic rate when ``n_pairs`` is
``None``).  The unclamped key length is used so the simplex still sees a
slope where the clamped key is zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .decoy import (AnalysisPolicy, FluctuationPolicy, InconsistentDataError, asymptotic_rate,
                    expected_finite_key)
from .model import ProtocolParams, SystemSpec

MU_MIN = 1e-4
MU_MAX = 2.0
_LOG_SPAN = math.log(MU_MAX) - math.log(MU_MIN)
# Objective assigned to points the analysis cannot process at all.
_PENALTY = -1.0


@dataclass
class OptimizationResult:
    best_params: ProtocolParams
    best_rate_per_pulse: float
    evaluations: int
    starts: int
    converged: bool
    # Unclamped objective at the optimum (may be negative when no key exists anywhere).
    best_objective: float = 0.0
    history: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "best_params": self.best_params.as_dict(),
            "best_rate_per_pulse": self.best_rate_per_pulse,
            "best_objective": self.best_objective,
            "evaluations": self.evaluations,
            "starts": self.starts,
            "converged": self.converged,
        }


def _squash_mu(z: float) -> float:
    return math.exp(math.log(MU_MIN) + _LOG_SPAN * float(expit(z)))


def _unsquash_mu(mu: float) -> float:
    frac = (math.log(mu) - math.log(MU_MIN)) / _LOG_SPAN
    return float(logit(min(max(frac, 1e-12), 1 - 1e-12)))


def params_from_vector(z) -> ProtocolParams:
    z = np.asarray(z, dtype=float)
    mu_y = _squash_mu(z[0])
    mu_x = mu_y * float(expit(z[1]))
    mu_z = _squash_mu(z[2])
    logits = np.array([0.0, z[3], z[4], z[5]])
    logits -= logits.max()
    w = np.exp(logits)
    p = w / w.sum()
    # Rounding can push tiny probabilities to exactly 0 far out in z.
    p = np.maximum(p, 1e-300)
    return ProtocolParams(mu_x, mu_y, mu_z, float(p[1]), float(p[2]), float(p[3]))


def vector_from_params(params: ProtocolParams) -> np.ndarray:
    ratio = min(max(params.mu_x / params.mu_y, 1e-12), 1 - 1e-12)
    p_o = max(params.p_o, 1e-12)
    return np.array([
        _unsquash_mu(params.mu_y),
        float(logit(ratio)) if params.mu_x > 0 else -30.0,
        _unsquash_mu(params.mu_z),
        math.log(params.p_x / p_o),
        math.log(params.p_y / p_o),
        math.log(params.p_z / p_o),
    ])


def _random_params(rng: np.random.Generator) -> ProtocolParams:
    """Random start inside the region where decoy analysis usually yields key.

    Far from it the objective is flat (no resolvable single-photon yield) and
    a simplex started there never moves.
    """
    mu_y = math.exp(rng.uniform(math.log(0.1), math.log(0.6)))
    mu_x = mu_y * rng.uniform(0.1, 0.5)
    mu_z = math.exp(rng.uniform(math.log(0.2), math.log(1.0)))
    p_x = rng.uniform(0.1, 0.5)
    p_y = rng.uniform(0.02, 0.2)
    p_z = rng.uniform(0.2, 0.8) * (0.98 - p_x - p_y)
    return ProtocolParams(mu_x, mu_y, mu_z, p_x, p_y, p_z)


def key_rate_objective(system: SystemSpec, params: ProtocolParams, n_pairs: float | None,
                       fp: FluctuationPolicy, ap: AnalysisPolicy) -> tuple[float, float]:
    """``(unclamped, clamped)`` expected key rate per pulse at ``params``."""
    try:
        if n_pairs is None:
            rep = asymptotic_rate(system, params, ap)
            return rep.key_length_unclamped, rep.rate_per_pulse
        rep = expected_finite_key(system, params, n_pairs, fp, ap)
        return rep.key_length_unclamped / n_pairs, rep.rate_per_pulse
    except (InconsistentDataError, RuntimeError, ValueError):
        return _PENALTY, 0.0


def optimize(system: SystemSpec, n_pairs: float | None,
             fp: FluctuationPolicy = FluctuationPolicy(),
             ap: AnalysisPolicy = AnalysisPolicy(),
             seed: int = 0, budget: int = 2000, starts: int = 32,
             initial: ProtocolParams | None = None,
             tolerance: float = 1e-4) -> OptimizationResult:
    """Maximize the expected key rate per pulse over the protocol parameters.

    ``budget`` caps the total number of objective evaluations, shared evenly
    by the starts that remain.  ``initial`` (if given) replaces the first
    random start, which makes the result at least as good as that point.
    Starts run in index order, so the outcome depends only on ``seed``.
    """
    if budget < 100:
        raise ValueError("budget must be >= 100")
    if starts < 1:
        raise ValueError("starts must be >= 1")
    rng = np.random.default_rng(seed)
    points = [_random_params(rng) for _ in range(starts)]
    if initial is not None:
        points[0] = initial

    evaluations = 0
    best = None  # (clamped, unclamped, params)
    history = []
    all_converged = True

    def consider(params, unclamped, clamped):
        nonlocal best
        key = (clamped, unclamped)
        if best is None or key > best[:2]:
            best = (clamped, unclamped, params)

    for i, start in enumerate(points):
        remaining = budget - evaluations
        if remaining <= 0:
            all_converged = False
            break
        share = remaining // (starts - i)
        if share < 2:
            all_converged = False
            break
        cache = {}

        def neg(z):
            nonlocal evaluations
            key = tuple(np.round(z, 12))
            if key not in cache:
                params = params_from_vector(z)
                unclamped, clamped = key_rate_objective(system, params, n_pairs, fp, ap)
                evaluations += 1
                consider(params, unclamped, clamped)
                cache[key] = unclamped
            return -cache[key] / scale

        z0 = vector_from_params(start)
        p0 = params_from_vector(z0)
        first, first_clamped = key_rate_objective(system, p0, n_pairs, fp, ap)
        evaluations += 1
        consider(p0, first, first_clamped)
        cache[tuple(np.round(z0, 12))] = first
        scale = max(abs(first), 1e-300)
        res = minimize(neg, z0, method="Nelder-Mead",
                       options={"maxfev": max(share - 1, 1), "xatol": 1e-3,
                                "fatol": tolerance, "initial_simplex": _simplex(z0)})
        history.append((i, -float(res.fun) * scale, bool(res.success)))
        all_converged &= bool(res.success)

    clamped, unclamped, params = best
    return OptimizationResult(params, clamped, evaluations, len(history), all_converged,
                              unclamped, history)


def _simplex(z0: np.ndarray, step: float = 0.5) -> np.ndarray:
    out = np.tile(z0, (len(z0) + 1, 1))
    for k in range(len(z0)):
        out[k + 1, k] += step
    return out


@dataclass(frozen=True)
class SurfaceRow:
    mu_z: float
    p_z: float
    rate_finite_bps: float
    rate_asymptotic_bps: float


def rate_surface(system: SystemSpec, n_pairs: float, fp: FluctuationPolicy, ap: AnalysisPolicy,
                 mu_z_grid, p_z_grid, fixed: ProtocolParams) -> list[SurfaceRow]:
    """Finite and asymptotic rates over a (mu_z, p_z) grid.

    The other four parameters come from ``fixed``; the vacuum probability
    absorbs changes of ``p_z``.  Cells with ``p_x + p_y + p_z > 1`` are skipped.
    """
    mu_z_grid = list(mu_z_grid)
    p_z_grid = list(p_z_grid)
    if not mu_z_grid or not p_z_grid:
        raise ValueError("grid must be non-empty")
    rows = []
    for mu_z in mu_z_grid:
        for p_z in p_z_grid:
            if fixed.p_x + fixed.p_y + p_z > 1.0:
                continue
            params = ProtocolParams(fixed.mu_x, fixed.mu_y, mu_z, fixed.p_x, fixed.p_y, p_z)
            fin = expected_finite_key(system, params, n_pairs, fp, ap)
            asym = asymptotic_rate(system, params, ap)
            rows.append(SurfaceRow(mu_z, p_z, fin.rate_bps, asym.rate_bps))
    return rows
