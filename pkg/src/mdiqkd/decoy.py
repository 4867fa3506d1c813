"""Finite-size decoy-state estimation and secret key rates.

The single-photon-pair yield is lower-bounded (and its X-basis error rate
upper-bounded) by linear programs over photon-number yields ``s[m][n]``,
``m, n <= n_cut``.  Each X-basis source pair contributes one two-sided gain
constraint whose interval comes from a per-observable concentration bound;
Poisson mass beyond the cutoff enters through one bounded slack per pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linprog, minimize_scalar
from scipy.stats import norm

from .model import (X_LABELS, ProtocolParams, SystemSpec, expected_observables,
                    poisson_weight, poisson_weights, shannon_entropy)
from .simkit import SourcePairStats, expected_stats


class InconsistentDataError(ValueError):
    """The observed statistics admit no yields in [0, 1]."""


class UnresolvableYieldError(ValueError):
    """The single-photon-pair yield lower bound is zero."""


@dataclass(frozen=True)
class FluctuationPolicy:
    """How statistical fluctuations are bounded.

    ``pooling="symmetric"`` adds joint observables for the mirrored vacuum
    pairs (ox + xo, oy + yo); the total failure probability is split equally
    over every bounded observable.
    """

    epsilon: float = 1e-10
    method: str = "chernoff"
    pooling: str = "symmetric"
    budget_rule: str = "equal"

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.method not in ("chernoff", "gaussian"):
            raise ValueError(f"unknown fluctuation method {self.method!r}")
        if self.pooling not in ("none", "symmetric"):
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.budget_rule != "equal":
            raise ValueError(f"unknown budget rule {self.budget_rule!r}")


@dataclass(frozen=True)
class AnalysisPolicy:
    ec_efficiency: float = 1.16
    n_cut: int = 10
    lp_tolerance: float = 1e-12
    vacuum_error_half: bool = True
    joint_estimation: bool = True

    def __post_init__(self):
        if self.ec_efficiency < 1.0:
            raise ValueError("ec_efficiency must be >= 1")
        if self.n_cut < 2:
            raise ValueError("n_cut must be >= 2")


@dataclass
class KeyRateReport:
    s11_lower: float
    e11_upper: float
    n11_lower: float
    key_length: int | None
    rate_per_pulse: float
    rate_bps: float
    epsilon_used: float
    mode: str
    # Pre-clamp, pre-floor key length (per pulse in asymptotic mode); the optimizer climbs on it.
    key_length_unclamped: float = 0.0
    secure: bool = True
    epsilon_budget: dict = field(default_factory=dict)
    # Point of the joint (s11, e11) worst case that fixed the key length.
    s11_worst: float = 0.0
    e11_worst: float = 0.5

    def as_dict(self) -> dict:
        num = lambda v: None if v is None else float(v)
        return {
            "s11_lower": num(self.s11_lower),
            "e11_upper": num(self.e11_upper),
            "n11_lower": num(self.n11_lower),
            "key_length": None if self.key_length is None else int(self.key_length),
            "rate_per_pulse": num(self.rate_per_pulse),
            "rate_bps": num(self.rate_bps),
            "epsilon_used": num(self.epsilon_used),
            "mode": self.mode,
            "secure": bool(self.secure),
            "s11_worst": num(self.s11_worst),
            "e11_worst": num(self.e11_worst),
            "epsilon_budget": {k: (int(v) if k == "n_observables" else float(v))
                               for k, v in self.epsilon_budget.items()},
        }


# --- concentration bounds -------------------------------------------------

def chernoff_interval(count: float, trials: float, per_obs_failure: float) -> tuple[float, float]:
    """Invert the Chernoff-Hoeffding tail ``exp(-n D(k/n || p))`` on both sides.

    Each side receives half of ``per_obs_failure``.  The lower root is found
    in ``log p`` and the upper one in ``-log(1 - p)`` so that means near 0 or 1
    keep full relative precision.
    """
    q = count / trials
    budget = math.log(2.0 / per_obs_failure) / trials

    if q <= 0.0:
        lo = 0.0
    else:
        top = math.log(q)

        # D(q || p) with p = exp(u).
        def f(u):
            out = q * (top - u)
            if q < 1.0:
                out += (1 - q) * (math.log1p(-q) - math.log1p(-math.exp(u)))
            return out - budget
        step = max(1.0, abs(top))
        bottom = top - step
        while f(bottom) < 0 and bottom > -745.0:
            step *= 2.0
            bottom = top - step
        if f(bottom) < 0:
            lo = 0.0
        else:
            lo = math.exp(brentq(f, bottom, top, xtol=1e-300, rtol=1e-14))

    if q >= 1.0:
        hi = 1.0
    else:
        # D(q || p) with 1 - p = exp(-v), finite for every v > 0.
        def g(v):
            out = (1 - q) * (math.log1p(-q) + v)
            if q > 0.0:
                out += q * (math.log(q) - math.log(-math.expm1(-v)))
            return out - budget

        start = -math.log1p(-q) if q > 0 else 1e-300
        stop = max(2.0 * start, 1e-300)
        while g(stop) < 0:
            stop *= 4.0
            if stop > 745.0:
                break
        if g(min(stop, 745.0)) < 0:
            hi = 1.0
        else:
            hi = -math.expm1(-brentq(g, start, min(stop, 745.0), xtol=1e-300, rtol=1e-14))
    return min(lo, q), max(hi, q)


def gaussian_interval(count: float, trials: float, per_obs_failure: float) -> tuple[float, float]:
    q = count / trials
    z = norm.isf(per_obs_failure / 2.0)
    half = z * math.sqrt(max(q * (1 - q), 0.0) / trials)
    return max(0.0, q - half), min(1.0, q + half)


def bound_mean(count: float, trials: float, per_obs_failure: float,
               method: str = "chernoff") -> tuple[float, float]:
    """Confidence interval for a success probability from ``count`` of ``trials``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if count < 0:
        raise ValueError("count must be >= 0")
    if count > trials:
        raise ValueError(f"count {count} exceeds trials {trials}")
    if not 0.0 < per_obs_failure < 1.0:
        raise ValueError("per_obs_failure must lie in (0, 1)")
    if method == "gaussian":
        return gaussian_interval(count, trials, per_obs_failure)
    return chernoff_interval(count, trials, per_obs_failure)


def count_lower_bound(mean: float, failure: float) -> float:
    """Multiplicative Chernoff lower bound on a sum of Bernoullis with mean ``mean``."""
    if mean <= 0:
        return 0.0
    return max(0.0, mean - math.sqrt(2.0 * mean * math.log(1.0 / failure)))


# --- linear programs ------------------------------------------------------

@dataclass(frozen=True)
class Observation:
    """A bounded rate pooled over one or more source pairs.

    ``shares`` maps each pooled label to its fraction of the pooled pulses;
    ``kind`` is ``"gain"`` or ``"error"``.
    """

    kind: str
    shares: dict
    low: float
    high: float


@dataclass
class YieldLP:
    """Linear description of the X-basis data in photon-number space.

    ``weights[label]`` is the pair of photon-number distributions (Alice,
    Bob) truncated at the cutoff; ``tail_caps[label]`` bounds the contribution
    of photon numbers beyond it.  Yields are measured in units of the largest
    implied upper bound so the solver tolerances act relatively.
    """

    weights: dict
    tail_caps: dict
    observations: list
    tolerance: float = 1e-12
    # A party emitting no photon carries no information about its bit, so
    # error yields with m = 0 or n = 0 are exactly half the yield.
    vacuum_error_half: bool = False

    @property
    def size(self) -> int:
        return len(next(iter(self.weights.values()))[0])

    def _options(self) -> dict:
        tol = min(max(self.tolerance, 1e-10), 1e-7)
        return {"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol}

    def _solve(self, c, a_ub, b_ub, bounds):
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs",
                      options=self._options())
        if res.status == 2:
            raise InconsistentDataError("data inconsistent with model: yield LP infeasible")
        if res.status != 0:
            raise RuntimeError(f"yield LP failed: {res.message}")
        return res

    def _layout(self, with_errors: bool):
        labels = list(self.weights)
        k = self.size
        n_s, n_l = k * k, len(labels)
        block = n_s + n_l
        return labels, k, n_s, n_l, block, (2 * block if with_errors else block)

    def _system(self, with_errors: bool):
        """Scaled inequality system; returns ``(a_ub, b_ub, bounds, unit, k, block)``.

        Variable ``j`` is measured in units of ``unit[j]``, the tightest upper
        bound implied by any single gain constraint, so every variable lives
        in [0, 1] and the binding coefficients are O(1).  A uniform scale
        would leave far-tail yields with coefficients small enough for the
        solver to drop while their bounds stay huge.
        """
        labels, k, n_s, n_l, block, n_var = self._layout(with_errors)
        tail_index = {lb: n_s + i for i, lb in enumerate(labels)}
        outer = {lb: np.outer(*self.weights[lb]).ravel() for lb in labels}
        vacuum = np.array([m == 0 or n == 0 for m in range(k) for n in range(k)])
        half = with_errors and self.vacuum_error_half

        gains = [ob for ob in self.observations if ob.kind == "gain"]
        errors = [ob for ob in self.observations if ob.kind == "error"] if with_errors else []

        unit = np.ones(block)
        unit[n_s:] = [self.tail_caps[lb] for lb in labels]
        for ob in gains:
            for lb, share in ob.shares.items():
                coef = np.zeros(block)
                coef[:n_s] = share * outer[lb]
                coef[tail_index[lb]] = share
                with np.errstate(divide="ignore"):
                    cap = np.where(coef > 0, ob.high / coef, np.inf)
                unit = np.minimum(unit, cap)
        if with_errors:
            unit = np.concatenate([unit, unit])

        rows, lo, hi = [], [], []
        for ob in gains + errors:
            row = np.zeros(n_var)
            for lb, share in ob.shares.items():
                if ob.kind == "gain":
                    row[:n_s] += share * outer[lb]
                    row[tail_index[lb]] += share
                else:
                    w = share * outer[lb]
                    if half:
                        row[:n_s] += 0.5 * np.where(vacuum, w, 0.0)
                        w = np.where(vacuum, 0.0, w)
                    row[block:block + n_s] += w
                    row[block + tail_index[lb]] += share
            scale = ob.high if ob.high > 0 else 1.0
            rows.append(row * unit / scale)
            lo.append(ob.low / scale)
            hi.append(ob.high / scale)
        rows = np.array(rows).reshape(-1, n_var)
        a_ub = np.vstack([rows, -rows])
        b_ub = np.concatenate([hi, -np.asarray(lo)])

        bounds = [(0.0, 1.0)] * block
        if with_errors:
            bounds += [(0.0, 0.0 if (half and v) else 1.0) for v in vacuum] + [(0.0, 1.0)] * n_l
            # t <= s elementwise, for yields and tails alike (shared units).
            link = np.hstack([-np.eye(block), np.eye(block)])
            a_ub = np.vstack([a_ub, link])
            b_ub = np.concatenate([b_ub, np.zeros(block)])
        return a_ub, b_ub, bounds, unit, k, block

    def _has_signal(self) -> bool:
        return any(ob.high > 0 for ob in self.observations if ob.kind == "gain")

    def min_s11(self) -> float:
        if not self._has_signal():
            return 0.0
        a_ub, b_ub, bounds, unit, k, _ = self._system(False)
        c = np.zeros(len(bounds))
        c[k + 1] = 1.0
        res = self._solve(c, a_ub, b_ub, bounds)
        return max(0.0, float(res.x[k + 1]) * unit[k + 1])

    def s11_range(self) -> tuple[float, float]:
        """Extent of s11 over the joint yield/error-yield feasible set."""
        if not self._has_signal():
            return 0.0, 0.0
        a_ub, b_ub, bounds, unit, k, _ = self._system(True)
        c = np.zeros(len(bounds))
        c[k + 1] = 1.0
        lo = float(self._solve(c, a_ub, b_ub, bounds).x[k + 1]) * unit[k + 1]
        c[k + 1] = -1.0
        hi = float(self._solve(c, a_ub, b_ub, bounds).x[k + 1]) * unit[k + 1]
        return max(lo, 0.0), max(hi, 0.0)

    def max_t11_given_s11(self, s11: float) -> float | None:
        """Largest t11 with s11 pinned; ``None`` if that s11 is infeasible."""
        a_ub, b_ub, bounds, unit, k, block = self._system(True)
        if unit[k + 1] <= 0:
            return None
        bounds = list(bounds)
        v = s11 / unit[k + 1]
        bounds[k + 1] = (v, v)
        c = np.zeros(len(bounds))
        c[block + k + 1] = -1.0
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs",
                      options=self._options())
        if res.status != 0:
            return None
        return max(0.0, float(res.x[block + k + 1]) * unit[block + k + 1])

    def max_t11(self) -> float:
        if not any(ob.kind == "error" for ob in self.observations):
            raise ValueError("error-gain observations required")
        if not self._has_signal():
            return 0.0
        a_ub, b_ub, bounds, unit, k, block = self._system(True)
        c = np.zeros(len(bounds))
        c[block + k + 1] = -1.0
        res = self._solve(c, a_ub, b_ub, bounds)
        return max(0.0, float(res.x[block + k + 1]) * unit[block + k + 1])


def poisson_lp_weights(params: ProtocolParams, n_cut: int, labels=X_LABELS):
    """Truncated Poisson weights and tail caps for each source pair."""
    weights, caps = {}, {}
    for label in labels:
        wa = poisson_weights(params.intensity(label[0]), n_cut)
        wb = poisson_weights(params.intensity(label[1]), n_cut)
        weights[label] = (wa, wb)
        caps[label] = max(0.0, 1.0 - wa.sum() * wb.sum())
    return weights, caps


def observable_plan(fp: FluctuationPolicy | None, ap: AnalysisPolicy) -> list:
    """Bounded observables as ``(kind, labels)``; pooled labels share one bound."""
    groups = [(lb,) for lb in X_LABELS]
    if fp is not None and fp.pooling == "symmetric":
        groups += [("ox", "xo"), ("oy", "yo")]
    plan = [("gain", g) for g in groups]
    for g in groups:
        # With exact vacuum error yields, vacuum-pair error counts add nothing.
        if ap.vacuum_error_half and any("o" in lb for lb in g):
            continue
        plan.append(("error", g))
    return plan


def epsilon_budget(fp: FluctuationPolicy, ap: AnalysisPolicy) -> dict:
    plan = observable_plan(fp, ap)
    n_obs = len(plan) + 1
    each = fp.epsilon / n_obs
    return {"n_observables": n_obs, "per_observable": each,
            "gains": each * sum(k == "gain" for k, _ in plan),
            "error_gains": each * sum(k == "error" for k, _ in plan),
            "n11": each, "total": fp.epsilon}


def observations(stats: SourcePairStats, fp: FluctuationPolicy | None,
                 ap: AnalysisPolicy, with_errors: bool = True) -> list:
    """Bounded observations from counts; ``fp=None`` collapses them to points."""
    plan = observable_plan(fp, ap)
    each = None if fp is None else epsilon_budget(fp, ap)["per_observable"]
    out = []
    for kind, labels in plan:
        if kind == "error" and not with_errors:
            continue
        sent = sum(stats.sent[lb] for lb in labels)
        if sent <= 0:
            raise ValueError(f"no pulses sent for source pair(s) {labels}")
        src = stats.coincidences if kind == "gain" else stats.errors
        count = sum(src[lb] for lb in labels)
        shares = {lb: stats.sent[lb] / sent for lb in labels}
        if fp is None:
            low = high = count / sent
        else:
            low, high = bound_mean(count, sent, each, fp.method)
        out.append(Observation(kind, shares, low, high))
    return out


def build_lp(stats: SourcePairStats, params: ProtocolParams, fp: FluctuationPolicy | None,
             ap: AnalysisPolicy, with_errors: bool = False) -> YieldLP:
    for label in X_LABELS:
        if label not in stats.sent:
            raise ValueError(f"statistics lack source pair {label!r}")
    weights, caps = poisson_lp_weights(params, ap.n_cut)
    obs = observations(stats, fp, ap, with_errors)
    return YieldLP(weights, caps, obs, ap.lp_tolerance, ap.vacuum_error_half)


def s11_lower(stats: SourcePairStats, params: ProtocolParams, fp: FluctuationPolicy | None,
              ap: AnalysisPolicy = AnalysisPolicy()) -> float:
    """Lower bound on the single-photon-pair yield from the seven X-basis sources.

    Passing ``fp=None`` treats the observed gains as exact (asymptotic limit).
    """
    return build_lp(stats, params, fp, ap).min_s11()


def e11_upper(stats: SourcePairStats, params: ProtocolParams, fp: FluctuationPolicy | None,
              ap: AnalysisPolicy, s11L: float) -> float:
    if s11L <= 0:
        raise UnresolvableYieldError("single-photon yield unresolvable (s11 lower bound is 0)")
    t11 = build_lp(stats, params, fp, ap, with_errors=True).max_t11()
    return min(t11 / s11L, 0.5)


def joint_worst_case(lp: YieldLP, weight, xatol: float = 1e-4) -> tuple[float, float, float]:
    """Minimize ``weight(s11) * (1 - H(e11))`` jointly over the feasible (s11, t11) set.

    For fixed s11 the worst error yield is the largest feasible t11, and that
    profile is concave in s11, so the objective is convex in s11 for weights
    linear in s11 and a bounded scalar search finds its minimum.  Returns the
    minimizing ``(s11, e11, value)``.
    """
    lo, hi = lp.s11_range()
    if hi <= 0.0:
        return 0.0, 0.5, 0.0

    def value(s11):
        if s11 <= 0.0:
            return 0.0, 0.5
        t = lp.max_t11_given_s11(s11)
        if t is None:
            # Pinned s11 rejected by solver tolerances: count it as no key.
            return 0.0, 0.5
        e = min(t / s11, 0.5)
        return weight(s11) * (1.0 - shannon_entropy(e)), e

    if hi - lo <= 1e-9 * hi:
        v = 0.5 * (lo + hi)
        val, e = value(v)
        return v, e, val
    # Pinning s11 exactly at an extreme can fail on solver tolerances; a
    # convex objective attains its infimum in the interior anyway.
    ends = []
    for v0, direction in ((lo, 1.0), (hi, -1.0)):
        for frac in (1e-9, 1e-7, 1e-5, 1e-3):
            v = v0 + direction * frac * (hi - lo)
            if lp.max_t11_given_s11(v) is not None:
                ends.append(v)
                break
        else:
            ends.append(v0 + direction * 1e-2 * (hi - lo))
    best = min((value(v)[0], v) for v in ends)
    res = minimize_scalar(lambda v: value(v)[0], bounds=(ends[0], ends[1]),
                          method="bounded", options={"xatol": xatol * (hi - lo)})
    best = min(best, (float(res.fun), float(res.x)))
    val, s_star = best
    return s_star, value(s_star)[1], val


def _zz_terms(stats: SourcePairStats, ap: AnalysisPolicy):
    zz_c = stats.coincidences["zz"]
    zz_e = min(stats.errors["zz"] / zz_c, 1.0) if zz_c > 0 else 0.0
    return zz_c, ap.ec_efficiency * zz_c * shannon_entropy(zz_e)


def finite_key(stats: SourcePairStats, params: ProtocolParams, system: SystemSpec,
               fp: FluctuationPolicy = FluctuationPolicy(),
               ap: AnalysisPolicy = AnalysisPolicy()) -> KeyRateReport:
    """Finite-size key length from observed (or expected) counts.

    Key bits come from single-photon pairs in the zz source; the X-basis error
    rate of those pairs stands in for their phase error rate.
    """
    budget = epsilon_budget(fp, ap)
    eps_i = budget["per_observable"]
    n_t = stats.total_pairs
    p11 = poisson_weight(params.mu_z, 1) ** 2
    zz_sent = stats.sent["zz"]
    _, ec = _zz_terms(stats, ap)

    s11L = s11_lower(stats, params, fp, ap)
    if s11L <= 0:
        return KeyRateReport(0.0, 0.5, 0.0, 0, 0.0, 0.0, fp.epsilon, "finite",
                             key_length_unclamped=-ec, secure=False, epsilon_budget=budget)
    e11U = e11_upper(stats, params, fp, ap, s11L)
    n11_of = lambda s11: count_lower_bound(zz_sent * p11 * s11, eps_i)
    if ap.joint_estimation:
        lp = build_lp(stats, params, fp, ap, with_errors=True)
        s_w, e_w, secret = joint_worst_case(lp, n11_of)
    else:
        s_w, e_w = s11L, e11U
        secret = n11_of(s11L) * (1.0 - shannon_entropy(e11U))
    raw = secret - ec
    secure = bool(e_w < 0.5)
    key = int(math.floor(raw)) if (secure and raw > 0) else 0
    rate = key / n_t
    return KeyRateReport(s11L, e11U, n11_of(s_w), key, rate, rate * system.clock_rate,
                         fp.epsilon, "finite", key_length_unclamped=raw, secure=secure,
                         epsilon_budget=budget, s11_worst=s_w, e11_worst=e_w)


def asymptotic_rate(system: SystemSpec, params: ProtocolParams,
                    ap: AnalysisPolicy = AnalysisPolicy()) -> KeyRateReport:
    """Key rate per pulse without finite-size effects (point-constrained LPs)."""
    stats = expected_stats(system, params, 1.0)
    return asymptotic_from_stats(stats, params, system, ap)


def asymptotic_from_stats(stats: SourcePairStats, params: ProtocolParams, system: SystemSpec,
                          ap: AnalysisPolicy = AnalysisPolicy()) -> KeyRateReport:
    n_t = stats.total_pairs
    zz_frac = stats.sent["zz"] / n_t
    _, ec = _zz_terms(stats, ap)
    ec /= n_t
    s11L = s11_lower(stats, params, None, ap)
    if s11L <= 0:
        return KeyRateReport(0.0, 0.5, 0.0, None, 0.0, 0.0, 0.0, "asymptotic",
                             key_length_unclamped=-ec, secure=False)
    e11U = e11_upper(stats, params, None, ap, s11L)
    n11_of = lambda s11: zz_frac * poisson_weight(params.mu_z, 1) ** 2 * s11
    if ap.joint_estimation:
        lp = build_lp(stats, params, None, ap, with_errors=True)
        s_w, e_w, secret = joint_worst_case(lp, n11_of)
    else:
        s_w, e_w = s11L, e11U
        secret = n11_of(s11L) * (1.0 - shannon_entropy(e11U))
    raw = secret - ec
    secure = bool(e_w < 0.5)
    rate = raw if (secure and raw > 0) else 0.0
    return KeyRateReport(s11L, e11U, n11_of(s_w), None, rate, rate * system.clock_rate, 0.0,
                         "asymptotic", key_length_unclamped=raw, secure=secure,
                         s11_worst=s_w, e11_worst=e_w)


def expected_finite_key(system: SystemSpec, params: ProtocolParams, n_pairs: float,
                        fp: FluctuationPolicy = FluctuationPolicy(),
                        ap: AnalysisPolicy = AnalysisPolicy()) -> KeyRateReport:
    """Finite-key analysis of the expected counts of an ``n_pairs`` run."""
    return finite_key(expected_stats(system, params, n_pairs), params, system, fp, ap)
