"""Physical and protocol parameters, and closed-form expected observables.

Alice and Bob each send a phase-randomized weak coherent pulse encoded in two
time bins.  Z-basis pulses put the whole intensity in one bin (bit 0 = early,
bit 1 = late); X-basis pulses split it evenly over both bins with relative
phase 0 or pi.  Charlie interferes the two pulses on a 50:50 beam splitter and
keeps events where detector 1 and detector 2 click in different time bins
(singlet post-selection).

Gains are obtained from the classical field picture, which is exact for
phase-randomized coherent states with threshold detectors: for a fixed phase
difference the four (detector, bin) slots click independently with
probability ``1 - (1 - d) exp(-eta * I)``.  The phase difference is averaged
by a uniform periodic quadrature (``PHASE_NODES`` nodes), which converges
spectrally for these smooth integrands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STANDARD_FIBER_DB_PER_KM = 59.05 / 311.0
ULTRALOW_LOSS_DB_PER_KM = 0.16

SOURCES = "oxyz"
X_LABELS = ("oo", "ox", "xo", "oy", "yo", "xx", "yy")
LABELS = X_LABELS + ("zz",)
ALL_LABELS = tuple(a + b for a in SOURCES for b in SOURCES)

PHASE_NODES = 1024


def basis_of(source: str) -> str:
    if source not in SOURCES:
        raise ValueError(f"unknown source {source!r}")
    return "Z" if source == "z" else "X"


@dataclass(frozen=True)
class ChannelSpec:
    """Fibre link between Alice and Bob, with Charlie somewhere in between.

    ``total_length`` is in km, ``attenuation`` in dB/km, extra losses in dB.
    Alice's arm is ``arm_split_fraction * total_length``.
    """

    total_length: float
    attenuation: float = STANDARD_FIBER_DB_PER_KM
    arm_split_fraction: float = 0.5
    extra_loss_alice: float = 0.0
    extra_loss_bob: float = 0.0

    def __post_init__(self):
        if self.total_length < 0:
            raise ValueError("total_length must be >= 0")
        if self.attenuation < 0:
            raise ValueError("attenuation must be >= 0")
        if not 0.0 <= self.arm_split_fraction <= 1.0:
            raise ValueError("arm_split_fraction must lie in [0, 1]")
        if self.extra_loss_alice < 0 or self.extra_loss_bob < 0:
            raise ValueError("extra losses must be >= 0")


@dataclass(frozen=True)
class DetectorSpec:
    efficiency_d1: float = 0.66
    efficiency_d2: float = 0.64
    dark_prob: float = 7.2e-8
    window_efficiency: float = 0.85

    def __post_init__(self):
        for name in ("efficiency_d1", "efficiency_d2", "dark_prob", "window_efficiency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.dark_prob >= 1e-3:
            raise ValueError("dark_prob must be < 1e-3")

    @property
    def mean_efficiency(self) -> float:
        return 0.5 * (self.efficiency_d1 + self.efficiency_d2)

    def effective(self) -> tuple[float, float]:
        """Per-detector efficiency including the time-window factor."""
        w = self.window_efficiency
        return self.efficiency_d1 * w, self.efficiency_d2 * w


@dataclass(frozen=True)
class ProtocolParams:
    mu_x: float
    mu_y: float
    mu_z: float
    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self):
        if not 0.0 <= self.mu_x < self.mu_y:
            raise ValueError("need 0 <= mu_x < mu_y")
        if self.mu_z <= 0:
            raise ValueError("mu_z must be > 0")
        if min(self.p_x, self.p_y, self.p_z) <= 0:
            raise ValueError("source probabilities must be > 0")
        if self.p_x + self.p_y + self.p_z > 1.0 + 1e-12:
            raise ValueError("p_x + p_y + p_z must be <= 1")

    @property
    def p_o(self) -> float:
        return max(0.0, 1.0 - self.p_x - self.p_y - self.p_z)

    def intensity(self, source: str) -> float:
        return {"o": 0.0, "x": self.mu_x, "y": self.mu_y, "z": self.mu_z}[source]

    def probability(self, source: str) -> float:
        return {"o": self.p_o, "x": self.p_x, "y": self.p_y, "z": self.p_z}[source]

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("mu_x", "mu_y", "mu_z", "p_x", "p_y", "p_z")}


@dataclass(frozen=True)
class SystemSpec:
    channel: ChannelSpec
    detectors: DetectorSpec = field(default_factory=DetectorSpec)
    misalignment_x: float = 0.015
    misalignment_z: float = 0.005
    clock_rate: float = 7.5e7

    def __post_init__(self):
        for name in ("misalignment_x", "misalignment_z"):
            if not 0.0 <= getattr(self, name) <= 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5]")
        if self.clock_rate <= 0:
            raise ValueError("clock_rate must be > 0")

    def misalignment(self, basis: str) -> float:
        return self.misalignment_z if basis == "Z" else self.misalignment_x


# Deployed settings per total distance: fibre type, protocol parameters and N_t.
FIELD_SETTINGS = {
    102: ("standard", ProtocolParams(0.049, 0.189, 0.891, 0.128, 0.025, 0.827), 2.05e12),
    155: ("standard", ProtocolParams(0.058, 0.191, 0.864, 0.154, 0.038, 0.789), 2.03e12),
    207: ("standard", ProtocolParams(0.059, 0.203, 0.757, 0.201, 0.042, 0.731), 3.61e13),
    259: ("standard", ProtocolParams(0.064, 0.267, 0.677, 0.388, 0.068, 0.509), 3.55e13),
    311: ("standard", ProtocolParams(0.083, 0.363, 0.453, 0.439, 0.101, 0.409), 9.09e13),
    404: ("ultralow", ProtocolParams(0.073, 0.302, 0.413, 0.529, 0.110, 0.315), 6.04e14),
}


def reference_system(distance_km: float, fiber: str = "standard", **overrides) -> SystemSpec:
    """Default experimental system at the given total distance."""
    att = ULTRALOW_LOSS_DB_PER_KM if fiber == "ultralow" else STANDARD_FIBER_DB_PER_KM
    return SystemSpec(channel=ChannelSpec(distance_km, att), **overrides)


def poisson_weight(mu: float, k: int) -> float:
    if mu < 0:
        raise ValueError("mean photon number must be >= 0")
    if k < 0 or int(k) != k:
        raise ValueError("photon count must be a non-negative integer")
    if mu == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-mu + k * math.log(mu) - math.lgamma(k + 1))


def poisson_weights(mu: float, n_cut: int) -> np.ndarray:
    """Weights for photon numbers 0..n_cut."""
    return np.array([poisson_weight(mu, k) for k in range(n_cut + 1)])


def shannon_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def arm_transmittance(system: SystemSpec, side: str) -> float:
    """Fibre plus insertion-loss transmittance of one arm (no detector terms)."""
    ch = system.channel
    side = side.lower()
    if side in ("alice", "a"):
        length = ch.total_length * ch.arm_split_fraction
        extra = ch.extra_loss_alice
    elif side in ("bob", "b"):
        length = ch.total_length * (1.0 - ch.arm_split_fraction)
        extra = ch.extra_loss_bob
    else:
        raise ValueError(f"side must be Alice or Bob, got {side!r}")
    return 10.0 ** (-(length * ch.attenuation + extra) / 10.0)


def encodings(basis: str, mu: float) -> np.ndarray:
    """Field amplitudes (early, late) for both values of the encoded bit.

    Row 0 is bit 0 (early bin / phase 0), row 1 bit 1 (late bin / phase pi).
    """
    a = math.sqrt(mu)
    if basis == "Z":
        return np.array([[a, 0.0], [0.0, a]], dtype=complex)
    h = a / math.sqrt(2.0)
    return np.array([[h, h], [h, -h]], dtype=complex)


def _click(lam, eff, dark):
    return 1.0 - (1.0 - dark) * np.exp(-eff * lam)


def singlet_coincidence(i1e, i1l, i2e, i2l, eff1: float, eff2: float, dark: float):
    """Probability that D1 and D2 click in different bins and nothing else clicks."""
    c1e, c1l = _click(i1e, eff1, dark), _click(i1l, eff1, dark)
    c2e, c2l = _click(i2e, eff2, dark), _click(i2l, eff2, dark)
    return c1e * c2l * (1 - c1l) * (1 - c2e) + c1l * c2e * (1 - c1e) * (1 - c2l)


def slot_intensities(amp_a, amp_b, phase):
    """Mean photon numbers at (D1 early, D1 late, D2 early, D2 late).

    ``amp_a``/``amp_b`` are arrived amplitudes (early, late); Bob's field carries
    the extra phase ``phase`` relative to Alice's.
    """
    rot = np.exp(1j * np.asarray(phase))
    be, bl = amp_b[0] * rot, amp_b[1] * rot
    i1e = np.abs(amp_a[0] + be) ** 2 / 2
    i1l = np.abs(amp_a[1] + bl) ** 2 / 2
    i2e = np.abs(amp_a[0] - be) ** 2 / 2
    i2l = np.abs(amp_a[1] - bl) ** 2 / 2
    return i1e, i1l, i2e, i2l


def pair_observables(system: SystemSpec, mu_a: float, basis_a: str, mu_b: float, basis_b: str,
                     nodes: int = PHASE_NODES) -> tuple[float, float]:
    """Gain and error-gain for one source pair, averaged over encodings and phase.

    For matched bases the error verdict (equal bits in Z, equal phases in X) is
    flipped with the basis misalignment probability.  Mismatched-basis pairs
    are never sifted and report an error-gain of zero.
    """
    eta_a = arm_transmittance(system, "alice")
    eta_b = arm_transmittance(system, "bob")
    eff1, eff2 = system.detectors.effective()
    dark = system.detectors.dark_prob
    enc_a = encodings(basis_a, mu_a) * math.sqrt(eta_a)
    enc_b = encodings(basis_b, mu_b) * math.sqrt(eta_b)
    phase = 2.0 * np.pi * np.arange(nodes) / nodes

    gain = 0.0
    same = 0.0
    for bit_a in (0, 1):
        for bit_b in (0, 1):
            slots = slot_intensities(enc_a[bit_a], enc_b[bit_b], phase)
            c = float(np.mean(singlet_coincidence(*slots, eff1, eff2, dark)))
            gain += 0.25 * c
            if bit_a == bit_b:
                same += 0.25 * c
    if basis_a != basis_b:
        return gain, 0.0
    em = system.misalignment(basis_a)
    return gain, (1.0 - em) * same + em * (gain - same)


@dataclass(frozen=True)
class ExpectedObservables:
    """Expected gain and error-gain per source-pair label (Alice source first)."""

    gains: dict
    error_gains: dict

    def S(self, label: str) -> float:
        return self.gains[label]

    def T(self, label: str) -> float:
        return self.error_gains[label]

    def error_rate(self, label: str) -> float:
        s = self.gains[label]
        return self.error_gains[label] / s if s > 0 else 0.0


def expected_observables(system: SystemSpec, params: ProtocolParams,
                         labels=ALL_LABELS) -> ExpectedObservables:
    gains, errs = {}, {}
    for label in labels:
        a, b = label
        s, t = pair_observables(system, params.intensity(a), basis_of(a),
                                params.intensity(b), basis_of(b))
        gains[label] = s
        errs[label] = min(t, s)
    return ExpectedObservables(gains, errs)


def dark_only_gain(dark: float) -> float:
    """Singlet coincidence probability when no light reaches the detectors."""
    return 2.0 * (dark * (1.0 - dark)) ** 2
