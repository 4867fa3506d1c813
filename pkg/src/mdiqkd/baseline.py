"""Passive BB84 baselines under the linear loss model.

A passive receiver splits arriving light into an X and a Z measurement port
with probabilities ``p_x`` and ``p_z = 1 - p_x``.  With overall transmittance
``eta`` and dark count probability ``d`` per detector, a single photon gives

    S = eta p + 2 d (1 - d) (1 - eta p),   e = d (1 - d) (1 - eta p) / S

in a port with probability ``p``.  There is no alignment error and no
insertion loss.  All rates carry the sifting factor ``p_x * p_z``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .model import STANDARD_FIBER_DB_PER_KM, shannon_entropy


@dataclass(frozen=True)
class IdealSP:
    pass


@dataclass(frozen=True)
class PracticalSP:
    g2: float = 0.01
    # Multiphoton fraction per emitted pulse, taken as g2 / 2 (weak-source limit).
    multiphoton_ratio: float = 0.5

    def __post_init__(self):
        if self.g2 < 0:
            raise ValueError("g2 must be >= 0")

    @property
    def multiphoton_fraction(self) -> float:
        return self.g2 * self.multiphoton_ratio


@dataclass(frozen=True)
class WCSDecoy:
    """Weak coherent source with ideal decoy estimation; ``mu=None`` optimizes it."""

    mu: float | None = None
    ec_efficiency: float = 1.16


@dataclass(frozen=True)
class BB84Spec:
    end_to_end_loss_db: float
    detector_efficiency: float = 0.65
    dark_prob: float = 7.2e-8
    p_x: float = 0.5
    source: IdealSP | PracticalSP | WCSDecoy = IdealSP()

    def __post_init__(self):
        if self.end_to_end_loss_db < 0:
            raise ValueError("loss must be >= 0")
        if not 0.0 < self.p_x < 1.0:
            raise ValueError("p_x must lie in (0, 1)")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ValueError("detector_efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_prob < 1.0:
            raise ValueError("dark_prob must lie in [0, 1)")

    @property
    def p_z(self) -> float:
        return 1.0 - self.p_x

    @property
    def eta(self) -> float:
        return self.detector_efficiency * 10.0 ** (-self.end_to_end_loss_db / 10.0)

    def port(self, basis: str) -> float:
        if basis not in ("X", "Z"):
            raise ValueError(f"unknown basis {basis!r}")
        return self.p_x if basis == "X" else self.p_z


def _gain_error(eta_p: float, d: float) -> tuple[float, float]:
    noise = d * (1.0 - d) * (1.0 - eta_p)
    s = eta_p + 2.0 * noise
    if s <= 0.0:
        raise ZeroDivisionError("zero gain: no light and no dark counts")
    return s, noise / s


def bb84_gain_error(spec: BB84Spec, basis: str) -> tuple[float, float]:
    """Single-photon gain and bit error rate of one measurement port."""
    return _gain_error(spec.eta * spec.port(basis), spec.dark_prob)


def error_floor(loss_db: float, detector_efficiency: float = 0.65,
                dark_prob: float = 7.2e-8) -> tuple[float, float]:
    """``(inf e_X, min e_X + e_Z)`` over the passive split ratio."""
    base = BB84Spec(loss_db, detector_efficiency, dark_prob)
    inf_ex = _gain_error(base.eta, dark_prob)[1]

    def total(px):
        s = BB84Spec(loss_db, detector_efficiency, dark_prob, px)
        return bb84_gain_error(s, "X")[1] + bb84_gain_error(s, "Z")[1]

    res = minimize_scalar(total, bounds=(1e-6, 1 - 1e-6), method="bounded",
                          options={"xatol": 1e-10})
    return inf_ex, float(res.fun)


def _sift(spec: BB84Spec) -> float:
    return spec.p_x * spec.p_z


def bb84_ideal_sp_rate(spec: BB84Spec) -> float:
    s_z, e_z = bb84_gain_error(spec, "Z")
    _, e_x = bb84_gain_error(spec, "X")
    return max(0.0, _sift(spec) * s_z * (1.0 - shannon_entropy(e_x) - shannon_entropy(e_z)))


def bb84_practical_sp_rate(spec: BB84Spec) -> float:
    """GLLP rate: multiphoton emissions are tagged and count as fully insecure."""
    src = spec.source if isinstance(spec.source, PracticalSP) else PracticalSP(0.0)
    s_z, e_z = bb84_gain_error(spec, "Z")
    _, e_x = bb84_gain_error(spec, "X")
    omega = 1.0 - src.multiphoton_fraction / s_z
    if omega <= 0.0:
        return 0.0
    e_ph = e_x / omega
    if e_ph >= 0.5:
        return 0.0
    return max(0.0, _sift(spec) * s_z * (omega * (1.0 - shannon_entropy(e_ph))
                                         - shannon_entropy(e_z)))


def _wcs_rate_at(spec: BB84Spec, mu: float, f: float) -> float:
    d = spec.dark_prob
    eta_z = spec.eta * spec.p_z
    y1, _ = _gain_error(eta_z, d)
    _, e1 = _gain_error(spec.eta * spec.p_x, d)
    arrive = math.exp(-mu * eta_z)
    noise = d * (1.0 - d) * arrive
    s_mu = 1.0 - arrive + 2.0 * noise
    e_mu = noise / s_mu if s_mu > 0 else 0.0
    return _sift(spec) * (mu * math.exp(-mu) * y1 * (1.0 - shannon_entropy(min(e1, 0.5)))
                          - s_mu * f * shannon_entropy(e_mu))


def bb84_wcs_decoy_rate(spec: BB84Spec) -> float:
    """Asymptotic decoy-state rate with single-photon yield and error known exactly."""
    src = spec.source if isinstance(spec.source, WCSDecoy) else WCSDecoy()
    if src.mu is not None:
        if not 0.0 < src.mu <= 1.0:
            raise ValueError("mu must lie in (0, 1]")
        return max(0.0, _wcs_rate_at(spec, src.mu, src.ec_efficiency))
    res = minimize_scalar(lambda m: -_wcs_rate_at(spec, m, src.ec_efficiency),
                          bounds=(1e-6, 1.0), method="bounded", options={"xatol": 1e-8})
    best = max(-float(res.fun), _wcs_rate_at(spec, 1.0, src.ec_efficiency))
    return max(0.0, best)


_RATES = {
    "ideal_sp": bb84_ideal_sp_rate,
    "practical_sp": bb84_practical_sp_rate,
    "wcs_decoy": bb84_wcs_decoy_rate,
}


def curve(kind: str, distances_km, attenuation: float = STANDARD_FIBER_DB_PER_KM,
          detector_efficiency: float = 0.65, dark_prob: float = 7.2e-8, p_x: float = 0.5,
          source=None) -> np.ndarray:
    """Rate per pulse of one baseline at each distance."""
    rate = _RATES[kind]
    if source is None:
        source = {"ideal_sp": IdealSP(), "practical_sp": PracticalSP(0.01),
                  "wcs_decoy": WCSDecoy()}[kind]
    return np.array([rate(BB84Spec(L * attenuation, detector_efficiency, dark_prob, p_x, source))
                     for L in distances_km])


def cutoff_distance(kind: str, attenuation: float = STANDARD_FIBER_DB_PER_KM,
                    detector_efficiency: float = 0.65, dark_prob: float = 7.2e-8,
                    p_x: float = 0.5, source=None, max_km: float = 2000.0) -> float:
    """Distance at which the baseline rate first hits zero (``inf`` if never before ``max_km``)."""
    def margin(L):
        return curve(kind, [L], attenuation, detector_efficiency, dark_prob, p_x, source)[0]

    if margin(0.0) <= 0.0:
        return 0.0
    if margin(max_km) > 0.0:
        return math.inf
    lo, hi = 0.0, max_km
    # Rates are clamped at zero, so bisect on positivity.
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
