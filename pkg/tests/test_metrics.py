import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperent.analyzers import stabilizer_settings, sweep_settings
from hyperent.counts import RunSeed, simulate_records
from hyperent.hilbert import TB_LAYOUT, DensityMatrix, fidelity_pure
from hyperent.metrics import (
    TSIRELSON,
    chsh_fixed_angles,
    chsh_horodecki,
    correlation_matrix,
    direction,
    estimate_stabilizers,
    fit_fringe,
    merit_report,
    stabilizer_error,
    stabilizer_values_exact,
    visibility_from_fringe,
    violation_stds,
    witness,
)
from hyperent.state import NoiseParams, bell_phi_plus, dephased_bell, marginal, noisy_he_state

from oracles import chsh_search, random_density

# measured stabilizer values of the reference experiment
REFERENCE_STABILIZERS = (0.905, 0.981, 0.720, 0.994)


class TestChsh:
    def test_bell(self):
        assert chsh_horodecki(bell_phi_plus().dm()) == pytest.approx(TSIRELSON)

    def test_fixed_angles_on_bell(self):
        rho = bell_phi_plus().dm()
        angles = [0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4]
        assert chsh_fixed_angles(rho, angles) == pytest.approx(TSIRELSON)

    @pytest.mark.parametrize("mu", [0.0, 0.5, 0.834, 1.0])
    def test_dephased_closed_form(self, mu):
        assert chsh_horodecki(dephased_bell(mu)) == pytest.approx(2 * math.sqrt(1 + mu ** 2))

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_search(self, seed):
        rho = random_density(4, np.random.default_rng(seed), rank=1 + seed % 3)
        assert chsh_horodecki(DensityMatrix(rho, TB_LAYOUT)) == pytest.approx(chsh_search(rho), abs=1e-3)

    @given(st.integers(0, 2 ** 32 - 1), st.lists(st.floats(0, 2 * math.pi), min_size=8, max_size=8))
    @settings(max_examples=40, deadline=None)
    def test_fixed_angles_never_beat_horodecki(self, seed, angles):
        rho = DensityMatrix(random_density(4, np.random.default_rng(seed)), TB_LAYOUT)
        pairs = [angles[2 * k: 2 * k + 2] for k in range(4)]
        assert chsh_fixed_angles(rho, pairs) <= chsh_horodecki(rho) + 1e-9
        assert chsh_horodecki(rho) <= TSIRELSON + 1e-9

    def test_direction_forms(self):
        assert np.allclose(direction(0.0), [0, 0, 1])
        assert np.allclose(direction((math.pi / 2, math.pi / 2)), [0, 1, 0])
        assert np.allclose(direction([2, 0, 0]), [1, 0, 0])
        with pytest.raises(ValueError):
            direction([1, 2, 3, 4])

    def test_correlation_matrix_needs_two_qubits(self):
        with pytest.raises(ValueError):
            correlation_matrix(noisy_he_state(NoiseParams()))

    def test_fixed_angles_count(self):
        with pytest.raises(ValueError):
            chsh_fixed_angles(bell_phi_plus().dm(), [0, 1, 2])


class TestFringe:
    @given(st.floats(0.01, 1.0), st.floats(1.0, 1e4), st.floats(-math.pi, math.pi))
    @settings(max_examples=40, deadline=None)
    def test_exact_recovery(self, vis, amp, phase0):
        phases = 2 * math.pi * np.arange(8) / 8
        samples = [(p, amp * (1 + vis * math.cos(p + phase0))) for p in phases]
        a, v, _ = fit_fringe(samples)
        assert a == pytest.approx(amp, rel=1e-9)
        assert v == pytest.approx(vis, abs=1e-9)
        assert visibility_from_fringe(samples) == pytest.approx(vis, abs=1e-9)

    def test_too_few_phases(self):
        with pytest.raises(ValueError):
            fit_fringe([(0.0, 1.0), (1.0, 2.0), (2.0, 1.5)])

    def test_noiseless_sweep(self):
        rho = dephased_bell(0.834)
        recs = simulate_records(rho, sweep_settings("TB", 2 * math.pi * np.arange(16) / 16), 4700.0, 10.0,
                                RunSeed(0), noiseless=True)
        samples = [(float(r.outcome_label), r.coincidences) for r in recs]
        # phases come back from 6-decimal labels
        assert fit_fringe(samples)[1] == pytest.approx(0.834, abs=1e-6)


class TestWitness:
    def test_reference_values(self):
        assert witness(REFERENCE_STABILIZERS) == pytest.approx(-0.600, abs=1e-12)

    def test_ideal(self):
        assert witness([1, 1, 1, 1]) == -1.0

    def test_separable_bound(self):
        assert witness([0.75, 0.75, 0.75, 0.75]) == 0.0

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            witness([1, 1, 1])
        with pytest.raises(ValueError):
            witness([1, 1], d=1)

    def test_violation_stds(self):
        assert violation_stds(2.5, 2.0, 0.05) == pytest.approx(10.0)
        assert violation_stds(-0.6, 0.0, 0.01, above=False) == pytest.approx(60.0)
        assert violation_stds(1.9, 2.0, 0.1) < 0
        with pytest.raises(ValueError):
            violation_stds(1.0, 0.0, 0.0)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.99))
    @settings(max_examples=40, deadline=None)
    def test_model_witness(self, mu_tb, mu_fb, p):
        vals = stabilizer_values_exact(noisy_he_state(NoiseParams(mu_tb, mu_fb, p)))
        assert witness(vals) == pytest.approx(3 - (1 - p) * (2 + mu_tb + mu_fb), abs=1e-12)


class TestStabilizersFromCounts:
    def _records(self, noise, noiseless, car=float("inf"), t=10.0, seed=0):
        rho = noisy_he_state(noise)
        stab = [s for g in stabilizer_settings().values() for s in g]
        return simulate_records(rho, stab, 4700.0, t, RunSeed(seed), car=car, noiseless=noiseless)

    def test_noiseless_exact(self):
        noise = NoiseParams(0.93, 0.834, 0.03)
        est = estimate_stabilizers(self._records(noise, True, car=30.0))
        exact = stabilizer_values_exact(noisy_he_state(noise))
        assert list(est.values()) == pytest.approx(exact, abs=1e-12)

    def test_without_subtraction_accidentals_bias(self):
        noise = NoiseParams(1.0, 1.0, 0.0)
        est = estimate_stabilizers(self._records(noise, True, car=30.0), subtract_accidentals=False)
        assert est["S1"] == pytest.approx(30 / 31, abs=1e-12)

    def test_missing(self):
        with pytest.raises(KeyError):
            estimate_stabilizers(self._records(NoiseParams(), True)[:-1])

    def test_error_scaling(self):
        noise = NoiseParams(0.93, 0.834, 0.0)
        a = stabilizer_error(self._records(noise, False, t=10.0), 200, RunSeed(1))
        b = stabilizer_error(self._records(noise, False, t=40.0), 200, RunSeed(1))
        assert a.std["witness"] / b.std["witness"] == pytest.approx(2.0, rel=0.25)


class TestReport:
    def test_ideal(self):
        rho = noisy_he_state(NoiseParams())
        rep = merit_report(marginal(rho, "TB"), marginal(rho, "FB"), rho_full=rho)
        assert rep.witness == pytest.approx(-1.0)
        assert rep.hyperentangled
        assert rep.tb.s_parameter == pytest.approx(TSIRELSON)
        d = rep.to_dict()
        assert d["stabilizers"] == pytest.approx([1, 1, 1, 1])

    def test_needs_stabilizers(self):
        with pytest.raises(ValueError):
            merit_report(dephased_bell(1.0), dephased_bell(1.0, "FB"))

    def test_separable_not_flagged(self):
        rep = merit_report(dephased_bell(0.0), dephased_bell(0.0, "FB"), stabilizers=[0, 1, 0, 1])
        assert not rep.hyperentangled
        assert rep.witness == 1.0


class TestSpecExamples:
    def test_dephased_0834(self):
        assert chsh_horodecki(dephased_bell(0.834)) == pytest.approx(2.605, abs=1e-3)
        assert chsh_search(dephased_bell(0.834).matrix) == pytest.approx(2.605, abs=1e-3)

    def test_noisy_fb_marginal(self):
        rho = marginal(noisy_he_state(NoiseParams(0.93, 0.834, 0.032)), "FB")
        assert chsh_horodecki(rho) == pytest.approx(2.52, abs=5e-3)

    @given(st.lists(st.floats(0, 2 * math.pi), min_size=4, max_size=4))
    def test_mixed_state_any_angles(self, angles):
        rho = DensityMatrix.maximally_mixed(TB_LAYOUT)
        assert chsh_fixed_angles(rho, angles) == pytest.approx(0.0, abs=1e-12)

    def test_flat_fringe(self):
        assert visibility_from_fringe([(p, 5.0) for p in np.linspace(0, 6, 8)]) == pytest.approx(0.0, abs=1e-12)

    def test_model_witness(self):
        vals = stabilizer_values_exact(noisy_he_state(NoiseParams(0.93, 0.834, 0.032)))
        assert witness(vals) == pytest.approx(-0.643, abs=1e-3)

    @given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.integers(0, 3), st.floats(1e-3, 1))
    def test_witness_strictly_decreasing(self, vals, k, step):
        bumped = list(vals)
        bumped[k] += step
        assert witness(bumped) == pytest.approx(witness(vals) - step, abs=1e-12)

    def test_reference_violations(self):
        assert violation_stds(2.55, 2.0, 0.02) == pytest.approx(27.5)
        assert violation_stds(-0.60, 0.0, 0.01, above=False) == pytest.approx(60.0)
        assert violation_stds(2.0, 2.0, 0.1) == 0.0

    @given(st.floats(0, 1), st.floats(0, 0.99))
    @settings(max_examples=40, deadline=None)
    def test_dephasing_closed_forms(self, mu, p):
        rho = marginal(noisy_he_state(NoiseParams(mu, mu, p)), "TB")
        assert fidelity_pure(rho, bell_phi_plus()) == pytest.approx((1 - p) * (1 + mu) / 2 + p / 4, abs=1e-10)
        assert correlation_matrix(rho)[0, 0] == pytest.approx((1 - p) * mu, abs=1e-10)

    def test_noisy_rows(self):
        rho = noisy_he_state(NoiseParams(0.93, 0.834, 0.032))
        rep = merit_report(marginal(rho, "TB"), marginal(rho, "FB"), rho_full=rho)
        assert (rep.tb.fidelity, rep.tb.purity, rep.tb.s_parameter) == pytest.approx((0.942, 0.890, 2.645), abs=2e-3)
        assert (rep.fb.fidelity, rep.fb.purity, rep.fb.s_parameter) == pytest.approx((0.896, 0.810, 2.52), abs=2e-3)

    def test_report_is_pure(self):
        rho = noisy_he_state(NoiseParams(0.93, 0.834, 0.032))
        args = (marginal(rho, "TB"), marginal(rho, "FB"), rho)
        assert merit_report(*args).to_dict() == merit_report(*args).to_dict()

    def test_injected_stabilizers(self):
        rep = merit_report(dephased_bell(1.0), dephased_bell(1.0, "FB"), stabilizers=REFERENCE_STABILIZERS)
        assert rep.witness == pytest.approx(-0.600, abs=1e-12)
