import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdiqkd.model import (ALL_LABELS, LABELS, SOURCES, FIELD_SETTINGS, ChannelSpec, DetectorSpec,
                          ProtocolParams, SystemSpec, dark_only_gain, expected_observables,
                          reference_system)
from mdiqkd.simkit import (SourcePairStats, YieldMatrix, expected_stats, simulate, simulate_pair,
                           synth_rates, synth_stats, true_s11)
from oracles import finite_difference_s11

P102 = FIELD_SETTINGS[102][1]


def quiet_system(distance=0.0, eff=0.7):
    det = DetectorSpec(efficiency_d1=eff, efficiency_d2=eff, dark_prob=0.0, window_efficiency=1.0)
    return SystemSpec(ChannelSpec(distance), det, misalignment_x=0.0, misalignment_z=0.0)


def poisson(mu, n):
    return math.exp(-mu) * mu ** n / math.factorial(n)


class TestSourcePairStats:
    def test_rejects_errors_above_coincidences(self):
        with pytest.raises(ValueError):
            SourcePairStats({"zz": 10}, {"zz": 2}, {"zz": 3}, 10)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            SourcePairStats({"zz": 10}, {"zz": -1}, {"zz": 0}, 10)

    def test_rates(self):
        st_ = SourcePairStats({"zz": 10, "oo": 0}, {"zz": 4, "oo": 0}, {"zz": 1, "oo": 0}, 10)
        assert st_.gain("zz") == 0.4 and st_.error_rate("zz") == 0.25
        assert st_.gain("oo") == 0.0 and st_.error_rate("oo") == 0.0

    def test_expected_counts_sum_to_total(self):
        stats = expected_stats(reference_system(102), P102, 1e12)
        assert sum(stats.sent.values()) == pytest.approx(1e12, rel=1e-12)
        assert set(stats.sent) == set(ALL_LABELS)


class TestSynthetic:
    def test_all_ones_yield_gives_unit_gain(self):
        y = YieldMatrix(np.ones((31, 31)))
        gains, _ = synth_rates(y, P102)
        for lb in LABELS:
            assert gains[lb] == pytest.approx(1.0, abs=1e-12)

    def test_vacuum_pair_gain_is_s00(self):
        s = np.full((4, 4), 0.3)
        s[0, 0] = 0.0123
        gains, _ = synth_rates(YieldMatrix(s), P102)
        assert gains["oo"] == 0.0123

    def test_gain_matches_explicit_sum(self):
        rng = np.random.default_rng(4)
        s = rng.uniform(0, 1, (5, 5))
        e = rng.uniform(0, 0.5, (5, 5))
        gains, errs = synth_rates(YieldMatrix(s, e), P102)
        mx, my = P102.mu_x, P102.mu_y
        g = sum(poisson(mx, m) * poisson(my, n) * s[m, n] for m in range(5) for n in range(5))
        t = sum(poisson(mx, m) * poisson(my, n) * s[m, n] * e[m, n]
                for m in range(5) for n in range(5))
        assert gains["xy"] == pytest.approx(g, rel=1e-13)
        assert errs["xy"] == pytest.approx(t, rel=1e-13)

    def test_counts_reproducible_and_consistent(self):
        y = YieldMatrix(np.full((3, 3), 0.2), np.full((3, 3), 0.1))
        a = synth_stats(y, P102, 100_000, seed=3)
        b = synth_stats(y, P102, 100_000, seed=3)
        assert a.coincidences == b.coincidences and a.errors == b.errors
        assert sum(a.sent.values()) == 100_000
        for lb in ALL_LABELS:
            assert a.errors[lb] <= a.coincidences[lb] <= a.sent[lb]

    def test_rejects_bad_matrices(self):
        with pytest.raises(ValueError):
            YieldMatrix(np.full((3, 3), 1.5))
        with pytest.raises(ValueError):
            YieldMatrix(np.ones((2, 3)))
        with pytest.raises(ValueError):
            synth_stats(YieldMatrix(np.ones((3, 3))), P102, 0, seed=1)


class TestTrueS11:
    def test_lossless_no_noise(self):
        s11, e11 = true_s11(quiet_system(0.0, eff=0.7))
        assert e11 == 0.0
        assert s11 == pytest.approx(0.7 ** 2 / 4, rel=1e-12)
        assert true_s11(quiet_system(0.0, eff=0.7), basis="Z")[1] == 0.0

    def test_dark_counts_only(self):
        system = SystemSpec(ChannelSpec(0.0, extra_loss_alice=500, extra_loss_bob=500))
        s11, e11 = true_s11(system)
        assert s11 == pytest.approx(dark_only_gain(7.2e-8), rel=1e-8)
        assert e11 == pytest.approx(0.5, abs=1e-8)

    @pytest.mark.parametrize("distance", [0.0, 50.0, 150.0, 311.0])
    @pytest.mark.parametrize("basis", ["X", "Z"])
    def test_matches_coherent_state_coefficient(self, distance, basis):
        system = reference_system(distance)
        assert true_s11(system, basis=basis)[0] == pytest.approx(
            finite_difference_s11(system, basis), rel=2e-5)

    def test_error_rate_tracks_misalignment(self):
        system = SystemSpec(ChannelSpec(10.0), DetectorSpec(dark_prob=0.0),
                            misalignment_x=0.03, misalignment_z=0.0)
        assert true_s11(system)[1] == pytest.approx(0.03, rel=1e-12)


class TestMonteCarlo:
    def test_vacuum_without_darks_never_clicks(self):
        system = quiet_system(10.0)
        stats = simulate_pair(system, P102, "oo", 200_000, seed=1)
        assert stats.sent["oo"] == 200_000
        assert stats.coincidences["oo"] == 0

    def test_no_z_errors_without_noise(self):
        stats = simulate_pair(quiet_system(5.0), P102, "zz", 300_000, seed=2)
        assert stats.coincidences["zz"] > 1000
        assert stats.errors["zz"] == 0

    def test_identical_across_worker_counts(self):
        system = reference_system(102)
        runs = [simulate(system, P102, 2_500_000, seed=11, workers=w) for w in (1, 2, 3)]
        for other in runs[1:]:
            assert other.sent == runs[0].sent
            assert other.coincidences == runs[0].coincidences
            assert other.errors == runs[0].errors

    def test_seed_changes_counts(self):
        system = reference_system(20)
        a = simulate(system, P102, 200_000, seed=1)
        b = simulate(system, P102, 200_000, seed=2)
        assert a.coincidences != b.coincidences

    def test_source_marginals(self):
        n = 2_000_000
        params = ProtocolParams(0.1, 0.3, 0.6, 0.3, 0.2, 0.4)
        stats = simulate(reference_system(20), params, n, seed=5)
        assert sum(stats.sent.values()) == n
        for side in (0, 1):
            for src in SOURCES:
                p = params.probability(src)
                count = sum(v for lb, v in stats.sent.items() if lb[side] == src)
                assert abs(count - n * p) < 5 * math.sqrt(n * p * (1 - p))

    @pytest.mark.parametrize("label", ["xx", "yy", "zz", "oy", "xy"])
    def test_gains_match_closed_form(self, label):
        n = 2_000_000
        system = reference_system(30)
        obs = expected_observables(system, P102)
        stats = simulate_pair(system, P102, label, n, seed=17)
        for value, expect in ((stats.coincidences[label], obs.S(label)),
                              (stats.errors[label], obs.T(label))):
            sigma = math.sqrt(n * expect * (1 - expect))
            assert abs(value - n * expect) < 5 * sigma

    def test_error_shrinks_with_samples(self):
        system = reference_system(10)
        expect = expected_observables(system, P102).S("xx")
        devs = []
        for n in (10_000, 1_000_000):
            runs = [simulate_pair(system, P102, "xx", n, seed=s).gain("xx") for s in range(5)]
            devs.append(np.sqrt(np.mean((np.array(runs) - expect) ** 2)))
        assert devs[1] < devs[0] / 3

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            simulate(reference_system(10), P102, 0, seed=1)
        with pytest.raises(ValueError):
            simulate_pair(reference_system(10), P102, "qq", 10, seed=1)

    @settings(max_examples=5, deadline=None)
    @given(st.integers(1, 3000), st.integers(0, 2 ** 31))
    def test_small_runs_are_consistent(self, n, seed):
        stats = simulate(reference_system(50), P102, n, seed=seed)
        assert sum(stats.sent.values()) == n
        for lb in ALL_LABELS:
            assert 0 <= stats.errors[lb] <= stats.coincidences[lb] <= stats.sent[lb]
