"""Pulse-level Monte Carlo of the relay measurement, plus synthetic data generators.

``simulate`` samples source labels, encodings and global phases per pulse
pair and propagates classical field amplitudes to the beam splitter; this is
exact for phase-randomized coherent states.  Work is split into fixed-size
batches, each seeded from ``(seed, batch_index)``, so the counts do not depend
on how many worker threads run the batches.

``synth_stats`` is independent of any optics: it draws counts from an
arbitrary photon-number yield matrix with known ground truth, and serves as
the oracle for the decoy analysis.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import (ALL_LABELS, LABELS, SOURCES, ProtocolParams, SystemSpec, arm_transmittance,
                    basis_of, encodings, expected_observables, poisson_weights)

BATCH_SIZE = 2 ** 20


@dataclass
class SourcePairStats:
    """Counts per source-pair label (Alice's source first).

    Counts are integers for sampled runs and may be floats for expected-count
    runs at deployment scale.
    """

    sent: dict
    coincidences: dict
    errors: dict
    total_pairs: float
    seed: int | None = None

    def __post_init__(self):
        for label in self.sent:
            s, c, e = self.sent[label], self.coincidences[label], self.errors[label]
            if min(s, c, e) < 0:
                raise ValueError(f"negative count for {label!r}")
            if not e <= c <= s:
                raise ValueError(f"need errors <= coincidences <= sent for {label!r}")

    def gain(self, label: str) -> float:
        return self.coincidences[label] / self.sent[label] if self.sent[label] else 0.0

    def error_rate(self, label: str) -> float:
        c = self.coincidences[label]
        return self.errors[label] / c if c else 0.0

    def scaled(self, factor: float) -> "SourcePairStats":
        """Same per-pulse statistics for ``factor`` times as many pulses (expected counts)."""
        mul = lambda d: {k: v * factor for k, v in d.items()}
        return SourcePairStats(mul(self.sent), mul(self.coincidences), mul(self.errors),
                               self.total_pairs * factor, self.seed)


@dataclass
class YieldMatrix:
    """Photon-number-resolved yields ``s[m][n]`` and conditional error rates ``e[m][n]``."""

    s: np.ndarray
    e: np.ndarray = field(default=None)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.e = np.zeros_like(self.s) if self.e is None else np.asarray(self.e, dtype=float)
        if self.s.ndim != 2 or self.s.shape[0] != self.s.shape[1] or self.s.shape != self.e.shape:
            raise ValueError("yield and error matrices must be square and equal-shaped")
        if np.any((self.s < 0) | (self.s > 1)) or np.any((self.e < 0) | (self.e > 1)):
            raise ValueError("yields and error rates must lie in [0, 1]")

    @property
    def n_cut(self) -> int:
        return self.s.shape[0] - 1

    @property
    def s11(self) -> float:
        return float(self.s[1, 1])

    @property
    def e11(self) -> float:
        return float(self.e[1, 1])


def _label_probs(params: ProtocolParams) -> dict:
    return {a + b: params.probability(a) * params.probability(b) for a, b in itertools.product(SOURCES, SOURCES)}


def stats_from_rates(params: ProtocolParams, gains: dict, error_gains: dict,
                     n_pairs: float) -> SourcePairStats:
    """Expected counts for an ``n_pairs`` run with the given per-pair gains."""
    probs = _label_probs(params)
    sent, coinc, errs = {}, {}, {}
    for label in ALL_LABELS:
        sent[label] = n_pairs * probs[label]
        coinc[label] = sent[label] * gains.get(label, 0.0)
        errs[label] = min(coinc[label], sent[label] * error_gains.get(label, 0.0))
    return SourcePairStats(sent, coinc, errs, n_pairs)


def expected_stats(system: SystemSpec, params: ProtocolParams, n_pairs: float) -> SourcePairStats:
    """Expected-count statistics from the closed-form model (no sampling)."""
    obs = expected_observables(system, params)
    return stats_from_rates(params, obs.gains, obs.error_gains, n_pairs)


def synth_rates(yields: YieldMatrix, params: ProtocolParams) -> tuple[dict, dict]:
    """Exact gains and error-gains implied by a yield matrix (no tail beyond its cutoff)."""
    gains, errs = {}, {}
    k = yields.n_cut
    for label in ALL_LABELS:
        wa = poisson_weights(params.intensity(label[0]), k)
        wb = poisson_weights(params.intensity(label[1]), k)
        gains[label] = float(wa @ yields.s @ wb)
        errs[label] = float(wa @ (yields.s * yields.e) @ wb)
    return gains, errs


def synth_stats(yields: YieldMatrix, params: ProtocolParams, n_pairs: int,
                seed: int | None) -> SourcePairStats:
    """Multinomial/binomial counts drawn at the gains of ``yields``."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    gains, errs = synth_rates(yields, params)
    rng = np.random.default_rng(seed)
    probs = _label_probs(params)
    p = np.array([probs[lb] for lb in ALL_LABELS])
    sent_arr = rng.multinomial(int(n_pairs), p / p.sum())
    sent, coinc, errors = {}, {}, {}
    for label, ns in zip(ALL_LABELS, sent_arr):
        g = min(max(gains[label], 0.0), 1.0)
        c = int(rng.binomial(int(ns), g))
        q = errs[label] / g if g > 0 else 0.0
        sent[label] = int(ns)
        coinc[label] = c
        errors[label] = int(rng.binomial(c, min(q, 1.0)))
    return SourcePairStats(sent, coinc, errors, int(n_pairs), seed)


# --- two single photons at the relay ---------------------------------------

def _output_modes(psi, phi):
    """Slot amplitudes (D1e, D1l, D2e, D2l) for Alice's and Bob's photon."""
    r = 1.0 / math.sqrt(2.0)
    u = np.array([psi[0], psi[1], psi[0], psi[1]]) * r
    v = np.array([phi[0], phi[1], -phi[0], -phi[1]]) * r
    return u, v


def _coincidence_given(photons, eff, dark):
    """Singlet-pattern probability given photon numbers arriving in each slot."""
    click = [1.0 - (1.0 - dark) * (1.0 - eff[i]) ** photons[i] for i in range(4)]
    c1e, c1l, c2e, c2l = click
    return c1e * c2l * (1 - c1l) * (1 - c2e) + c1l * c2e * (1 - c1e) * (1 - c2l)


def two_photon_coincidence(psi, phi, eta_a, eta_b, eff1, eff2, dark) -> float:
    """Singlet post-selection probability for one photon from each side.

    ``psi``/``phi`` are the normalized time-bin states; each photon survives
    its arm with probability ``eta_a``/``eta_b``.  Two arriving photons
    interfere as bosons (amplitude ``u_i v_j + u_j v_i``, or ``sqrt(2) u_i v_i``
    for a shared slot).
    """
    eff = (eff1, eff1, eff2, eff2)
    u, v = _output_modes(psi, phi)
    total = 0.0
    for i in range(4):
        for j in range(i, 4):
            amp = math.sqrt(2.0) * u[i] * v[i] if i == j else u[i] * v[j] + u[j] * v[i]
            p = abs(amp) ** 2
            if p == 0.0:
                continue
            photons = [0, 0, 0, 0]
            photons[i] += 1
            photons[j] += 1
            total += eta_a * eta_b * p * _coincidence_given(photons, eff, dark)
    for w, amps in ((eta_a * (1 - eta_b), u), ((1 - eta_a) * eta_b, v)):
        for i in range(4):
            photons = [0, 0, 0, 0]
            photons[i] = 1
            total += w * abs(amps[i]) ** 2 * _coincidence_given(photons, eff, dark)
    total += (1 - eta_a) * (1 - eta_b) * _coincidence_given([0, 0, 0, 0], eff, dark)
    return total


def true_s11(system: SystemSpec, params: ProtocolParams | None = None,
             basis: str = "X") -> tuple[float, float]:
    """Encoding-averaged yield and error rate of single-photon pairs.

    Computed from genuine two-photon interference, independently of the
    coherent-state model.  Reporting only; the bounds never use it.
    """
    eta_a = arm_transmittance(system, "alice")
    eta_b = arm_transmittance(system, "bob")
    eff1, eff2 = system.detectors.effective()
    dark = system.detectors.dark_prob
    states = encodings(basis, 1.0)
    gain = same = 0.0
    for ba in (0, 1):
        for bb in (0, 1):
            c = two_photon_coincidence(states[ba], states[bb], eta_a, eta_b, eff1, eff2, dark)
            gain += 0.25 * c
            if ba == bb:
                same += 0.25 * c
    em = system.misalignment(basis)
    errs = (1 - em) * same + em * (gain - same)
    return gain, (errs / gain if gain > 0 else 0.0)


# --- Monte Carlo -----------------------------------------------------------

def batch_generator(seed: int, index: int) -> np.random.Generator:
    """Independent stream for batch ``index`` of a run with master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _amplitudes(system: SystemSpec, params: ProtocolParams, side: str) -> np.ndarray:
    eta = arm_transmittance(system, side)
    out = np.zeros((4, 2, 2), dtype=np.complex128)
    for k, src in enumerate(SOURCES):
        out[k] = encodings(basis_of(src), params.intensity(src)) * math.sqrt(eta)
    return out


def _cumulative(probs) -> np.ndarray:
    cum = np.cumsum(np.asarray(probs, dtype=float))
    cum[-1] = 1.0
    return cum


def _run(system, params, n_pairs, seed, cum_a, cum_b, workers):
    from ._kernel import run_batch

    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    n_pairs = int(n_pairs)
    amp_a = _amplitudes(system, params, "alice")
    amp_b = _amplitudes(system, params, "bob")
    eff1, eff2 = system.detectors.effective()
    dark = system.detectors.dark_prob
    n_batches = -(-n_pairs // BATCH_SIZE)

    def one(b):
        size = min(BATCH_SIZE, n_pairs - b * BATCH_SIZE)
        counts = np.zeros((16, 3), dtype=np.int64)
        run_batch(batch_generator(seed, b), size, cum_a, cum_b, amp_a, amp_b, eff1, eff2, dark,
                  system.misalignment_x, system.misalignment_z, counts)
        return counts

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(n_batches)))
    else:
        parts = [one(b) for b in range(n_batches)]
    total = np.sum(parts, axis=0)

    sent = {lb: int(total[i, 0]) for i, lb in enumerate(ALL_LABELS)}
    coinc = {lb: int(total[i, 1]) for i, lb in enumerate(ALL_LABELS)}
    errs = {lb: int(total[i, 2]) for i, lb in enumerate(ALL_LABELS)}
    return SourcePairStats(sent, coinc, errs, n_pairs, seed)


def simulate(system: SystemSpec, params: ProtocolParams, n_pairs: int, seed: int,
             workers: int = 1) -> SourcePairStats:
    """Monte Carlo run of ``n_pairs`` pulse pairs with random source choices."""
    probs = [params.probability(s) for s in SOURCES]
    cum = _cumulative(probs)
    return _run(system, params, n_pairs, seed, cum, cum, workers)


def simulate_pair(system: SystemSpec, params: ProtocolParams, label: str, n_pairs: int,
                  seed: int, workers: int = 1) -> SourcePairStats:
    """Monte Carlo run with both sources fixed to ``label``."""
    if label not in ALL_LABELS:
        raise ValueError(f"unknown source pair {label!r}")
    one_hot = lambda s: _cumulative([1.0 if c == s else 0.0 for c in SOURCES])
    return _run(system, params, n_pairs, seed, one_hot(label[0]), one_hot(label[1]), workers)


__all__ = ["SourcePairStats", "YieldMatrix", "simulate", "simulate_pair", "synth_stats",
           "synth_rates", "expected_stats", "stats_from_rates", "true_s11", "LABELS"]
