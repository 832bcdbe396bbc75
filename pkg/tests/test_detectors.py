import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdmaica.channel import LinkScenario, bpsk_ser, chip_snr_db, synthesize
from cdmaica.codes import gold_family
from cdmaica.detectors import (
    MIN_MATCH_SCORE,
    PILOT_LENGTH,
    DetectorOutput,
    combine,
    hard_decision,
    ica_detect,
    resolve_ambiguity,
    sud_detect,
    sudica_detect,
    symbol_errors,
)
from cdmaica.ica import ALGORITHMS, IcaConfig


@pytest.fixture(scope="module")
def family():
    return gold_family()


def frame(family, **kw):
    return synthesize(LinkScenario(**kw), family)


class TestHardDecision:
    def test_zero_maps_to_plus_one(self):
        np.testing.assert_array_equal(hard_decision([-0.5, 0.0, 2.0]), [-1, 1, 1])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
    def test_output_invariant(self, values):
        out = DetectorOutput.from_soft(values)
        expected = np.where(np.array(values) >= 0, 1.0, -1.0)
        np.testing.assert_array_equal(out.hard_symbols[0], expected)


class TestSud:
    def test_noise_free_single_user(self, family):
        f = frame(family, users=1, symbols=500, snr_db=math.inf)
        out = sud_detect(f.received, f.mixing[:, 0])
        np.testing.assert_allclose(out.soft_values, f.symbols, atol=1e-15)
        assert symbol_errors(out.hard_symbols, f.symbols) == (0, 500)

    def test_scaling_of_code_irrelevant(self, family):
        f = frame(family, users=2, symbols=200, snr_db=0.0)
        a = sud_detect(f.received, family.codes[:2].T)
        b = sud_detect(f.received, f.mixing)
        np.testing.assert_allclose(a.soft_values * math.sqrt(31), b.soft_values, rtol=1e-12)

    def test_mai_expansion(self, family):
        # noise-free correlator output is b_k + sum_j rho_kj b_j
        f = frame(family, users=30, symbols=400, snr_db=math.inf)
        soft = sud_detect(f.received, f.mixing).soft_values
        rho = f.mixing.T @ f.mixing
        for k in (0, 1, 17, 29):
            mai = sum(rho[k, j] * f.symbols[j] for j in range(30) if j != k)
            np.testing.assert_allclose(soft[k], f.symbols[k] + mai, atol=1e-12)
        off = rho[~np.eye(30, dtype=bool)]
        assert np.max(np.abs(off)) <= 9 / 31 + 1e-12

    @pytest.mark.parametrize("ebn0", [0.0, 4.0])
    def test_bpsk_oracle(self, family, ebn0):
        errors = scored = 0
        for seed in range(10):
            f = frame(family, users=1, symbols=5000, snr_db=chip_snr_db(ebn0), seed=seed)
            e, n = symbol_errors(sud_detect(f.received, f.mixing).hard_symbols, f.symbols)
            errors += e
            scored += n
        p = bpsk_ser(ebn0)
        assert abs(errors / scored - p) <= 3 * math.sqrt(p * (1 - p) / scored)

    def test_length_mismatch(self, family):
        with pytest.raises(ValueError):
            sud_detect(np.zeros((31, 10)), np.ones(15))


class TestAmbiguity:
    def test_exact_permuted_copy(self, rng):
        b = rng.choice([-1.0, 1.0], size=(4, 300))
        perm = np.array([2, 0, 3, 1])
        signs = np.array([1.0, -1.0, -1.0, 1.0])
        sources = np.empty_like(b)
        sources[perm] = signs[:, None] * b
        amb = resolve_ambiguity(sources, b[:, :PILOT_LENGTH])
        np.testing.assert_array_equal(amb.permutation, perm)
        np.testing.assert_array_equal(amb.signs, signs)
        assert np.all(amb.match_scores >= 1 - 1e-10)

    def test_noise_component_never_assigned(self, rng):
        b = rng.choice([-1.0, 1.0], size=(3, 500))
        sources = np.vstack([b[1], rng.normal(size=500), b[0], b[2]])
        amb = resolve_ambiguity(sources, b[:, :PILOT_LENGTH])
        assert 1 not in amb.permutation
        np.testing.assert_array_equal(amb.permutation, [2, 0, 3])

    def test_sign_flip_corrected(self, rng):
        b = rng.choice([-1.0, 1.0], size=(2, 400))
        sources = np.vstack([-b[0], b[1]])
        amb = resolve_ambiguity(sources, b[:, :50])
        fixed = amb.signs[:, None] * sources[amb.permutation]
        assert symbol_errors(hard_decision(fixed), b, start=0)[0] == 0

    def test_unresolved_below_threshold(self, rng):
        b = rng.choice([-1.0, 1.0], size=(2, 400))
        sources = np.vstack([b[0], rng.normal(size=400)])
        amb = resolve_ambiguity(sources, b[:, :50])
        assert amb.permutation[0] == 0 and amb.permutation[1] == -1
        assert amb.match_scores[1] < MIN_MATCH_SCORE
        np.testing.assert_array_equal(amb.resolved, [True, False])

    def test_scale_invariance(self, rng):
        b = rng.choice([-1.0, 1.0], size=(3, 200))
        sources = b[[1, 2, 0]] + 0.3 * rng.normal(size=(3, 200))
        base = resolve_ambiguity(sources, b[:, :50])
        scaled = resolve_ambiguity(sources * np.array([[5.0], [0.01], [-2.0]]), b[:, :50])
        np.testing.assert_array_equal(base.permutation, scaled.permutation)
        np.testing.assert_allclose(base.match_scores, scaled.match_scores, rtol=1e-12)
        flipped = base.signs.copy()
        flipped[base.permutation == 2] *= -1
        np.testing.assert_array_equal(scaled.signs, flipped)

    def test_scores_in_unit_interval(self, rng):
        amb = resolve_ambiguity(rng.normal(size=(6, 100)), rng.choice([-1.0, 1.0], size=(4, 50)))
        assert np.all((amb.match_scores >= 0) & (amb.match_scores <= 1))
        used = amb.permutation[amb.permutation >= 0]
        assert len(set(used)) == len(used)

    def test_short_pilot(self, rng):
        with pytest.raises(ValueError):
            resolve_ambiguity(rng.normal(size=(2, 100)), np.ones((2, 19)))


class TestIcaDetect:
    @pytest.mark.parametrize("algorithm", ALGORITHMS)
    def test_noise_free_two_users(self, family, algorithm):
        # rank-2 frame on 31 chips: separated inside its signal subspace
        f = frame(family, users=2, symbols=2000, snr_db=math.inf, seed=1)
        out = ica_detect(f.received, IcaConfig(algorithm=algorithm), f.symbols[:, :PILOT_LENGTH])
        assert not out.failed
        assert symbol_errors(out.hard_symbols, f.symbols, PILOT_LENGTH)[0] == 0

    def test_full_chip_space_low_noise(self, family):
        # 27 of the 31 directions are pure noise; FastICA flags per component
        # so the four users still come out on converged components
        f = frame(family, users=4, symbols=3000, snr_db=10.0, seed=2, first_code=2)
        out = ica_detect(f.received, IcaConfig(algorithm="fastica"), f.symbols[:, :PILOT_LENGTH])
        assert not out.failed
        errors, scored = symbol_errors(out.hard_symbols, f.symbols, PILOT_LENGTH)
        assert errors / scored < 1e-3
        np.testing.assert_allclose(np.mean(out.soft_values * f.symbols, axis=1), 1.0, atol=0.05)

    def test_gaussian_input_records_failure(self, rng):
        pilots = rng.choice([-1.0, 1.0], size=(3, PILOT_LENGTH))
        out = ica_detect(rng.normal(size=(5, 1000)), IcaConfig(), pilots)
        assert out.failed
        assert out.fallback.sum() >= 1

    def test_noise_free_thirty_users(self, family):
        f = frame(family, users=30, symbols=3000, snr_db=math.inf, seed=4)
        out = ica_detect(f.received, IcaConfig(algorithm="fastica"), f.symbols[:, :PILOT_LENGTH])
        assert not out.failed
        assert symbol_errors(out.hard_symbols, f.symbols, PILOT_LENGTH)[0] == 0

    def test_singular_input_records_failure(self, rng):
        s = rng.choice([-1.0, 1.0], size=500)
        pilots = s[None, :PILOT_LENGTH]
        out = ica_detect(np.vstack([s, s]), IcaConfig(), pilots)
        assert out.failed and out.error
        assert np.all(out.fallback)

    def test_pilot_must_be_shorter(self, rng):
        with pytest.raises(ValueError):
            ica_detect(rng.normal(size=(3, 60)), IcaConfig(), np.ones((1, 60)))


class TestScoringWindow:
    def test_pilot_columns_not_scored(self):
        truth = np.ones((2, 100))
        hard = truth.copy()
        hard[:, :PILOT_LENGTH] = -1.0
        assert symbol_errors(hard, truth, PILOT_LENGTH) == (0, 2 * (100 - PILOT_LENGTH))
        hard[0, PILOT_LENGTH] = -1.0
        assert symbol_errors(hard, truth, PILOT_LENGTH)[0] == 1


class TestCombine:
    def test_failed_ica_is_sud_bitwise(self, family, rng):
        f = frame(family, users=5, symbols=400, snr_db=-5.0)
        pilots = f.symbols[:, :PILOT_LENGTH]
        failed = DetectorOutput.from_soft(rng.normal(size=(5, 400)), failed=True,
                                          fallback=np.zeros(5, dtype=bool))
        out = sudica_detect(f.received, f.mixing, IcaConfig(), pilots, ica_output=failed)
        sud = sud_detect(f.received, f.mixing)
        np.testing.assert_array_equal(out.hard_symbols, sud.hard_symbols)
        assert np.all(out.fallback) and not out.failed

    def test_both_perfect(self, family):
        f = frame(family, users=3, symbols=1000, snr_db=math.inf, first_code=2)
        ica = DetectorOutput.from_soft(f.symbols.copy(), fallback=np.zeros(3, dtype=bool))
        out = sudica_detect(f.received, f.mixing, IcaConfig(), f.symbols[:, :50], ica_output=ica)
        assert symbol_errors(out.hard_symbols, f.symbols)[0] == 0

    def test_confidence_rule_keeps_correct_symbol(self):
        # SUD flips symbol 3 with a weak statistic; ICA is confident there
        truth = np.array([[1.0, -1.0, 1.0, 1.0, -1.0, 1.0]])
        sud_soft = truth * np.array([1.2, 0.9, 1.1, 1.0, 0.8, 1.0])
        sud_soft[0, 3] = -0.1
        ica_soft = truth * np.array([1.0, 1.1, 0.9, 1.0, 1.0, 1.0])
        sud = DetectorOutput.from_soft(sud_soft)
        ica = DetectorOutput.from_soft(ica_soft, fallback=np.zeros(1, dtype=bool))
        out = combine(sud, ica)
        np.testing.assert_array_equal(out.hard_symbols, truth)

    def test_confidence_rule_can_favour_sud(self):
        truth = np.array([[1.0, 1.0, -1.0, -1.0]])
        sud = DetectorOutput.from_soft(truth * 1.0)
        ica_soft = truth.copy()
        ica_soft[0, 0] = -0.05
        ica = DetectorOutput.from_soft(ica_soft, fallback=np.zeros(1, dtype=bool))
        np.testing.assert_array_equal(combine(sud, ica).hard_symbols, truth)

    def test_unresolved_user_gets_sud(self):
        sud = DetectorOutput.from_soft(np.array([[1.0, 3.0], [1.0, 3.0]]))
        ica = DetectorOutput.from_soft(np.array([[-3.0, -1.0], [-3.0, -1.0]]),
                                       fallback=np.array([False, True]))
        out = combine(sud, ica)
        # user 0: ICA wins where it is relatively surer; user 1 is pure SUD
        np.testing.assert_array_equal(out.hard_symbols, [[-1, 1], [1, 1]])
        np.testing.assert_array_equal(out.fallback, [False, True])

    def test_hard_matches_soft(self, family, rng):
        f = frame(family, users=6, symbols=800, snr_db=-5.0, first_code=2)
        out = sudica_detect(f.received, f.mixing, IcaConfig(algorithm="jade"), f.symbols[:, :50])
        np.testing.assert_array_equal(out.hard_symbols, hard_decision(out.soft_values))
