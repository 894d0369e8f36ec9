"""Two-quanta vibrational dynamics on localized bond modes."""

from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nltimebin import states, vibsim

from _oracles import pair_occupancies

WATER_PERIOD_PS = 1.0 / (2.99792458e10 * 1e-12 * (3740.05 - 3619.68))


def mirrored_spec(spec: vibsim.MoleculeSpec) -> vibsim.MoleculeSpec:
    return vibsim.MoleculeSpec(
        nu10=spec.nu01,
        nu01=spec.nu10,
        nu20=spec.nu02,
        nu02=spec.nu20,
        nu11=spec.nu11,
        localization=tuple((row[1], row[0]) for row in spec.localization),
    )


def test_wrap_phase_lands_on_the_principal_branch():
    assert vibsim.wrap_phase(0.0) == 0.0
    assert abs(vibsim.wrap_phase(math.pi) - math.pi) < 1e-12
    assert abs(vibsim.wrap_phase(-math.pi) - math.pi) < 1e-12
    assert abs(vibsim.wrap_phase(2.0 * math.pi)) < 1e-12
    assert abs(vibsim.wrap_phase(3.5 * math.pi) + 0.5 * math.pi) < 1e-12


def test_water_parameters_and_defect_frequencies():
    spec = vibsim.water_spec()
    assert (spec.nu10, spec.nu01) == (3740.05, 3619.68)
    assert (spec.nu20, spec.nu02, spec.nu11) == (7391.43, 7154.35, 7206.46)
    assert abs(spec.nu20 - 2.0 * spec.nu10 + 88.67) < 1e-9
    assert abs(spec.nu02 - 2.0 * spec.nu01 + 85.01) < 1e-9
    assert abs(spec.nu11 - spec.nu10 - spec.nu01 + 153.27) < 1e-9
    matrix = np.asarray(spec.matrix)
    assert np.allclose(matrix.conj().T @ matrix, np.eye(2), atol=1e-12)


def test_molecule_spec_validation_and_serialization():
    spec = vibsim.water_spec()
    assert vibsim.MoleculeSpec.from_json_dict(spec.to_json_dict()) == spec
    with pytest.raises(ValueError):
        vibsim.MoleculeSpec(
            nu10=-1.0,
            nu01=spec.nu01,
            nu20=spec.nu20,
            nu02=spec.nu02,
            nu11=spec.nu11,
            localization=spec.localization,
        ).validate()
    with pytest.raises(ValueError):
        vibsim.MoleculeSpec(
            nu10=spec.nu10,
            nu01=spec.nu01,
            nu20=spec.nu20,
            nu02=spec.nu02,
            nu11=spec.nu11,
            localization=((1.0, 0.0), (1.0, 0.0)),
        ).validate()


def test_harmonic_step_phases_vanish_identically():
    spec = vibsim.water_spec()
    for t in (0.1, 0.25, 0.4, 0.77):
        phases = vibsim.step_phases(t, spec, harmonic=True)
        assert phases.phi_nl_0 == 0.0
        assert phases.phi_nl_1 == 0.0
        assert phases.phi_11_residual == 0.0


def test_step_phase_reference_point():
    phases = vibsim.step_phases(0.5, vibsim.water_spec())
    assert abs(phases.phi_nl_0 - 2.067983916484) < 1e-9


def test_evolution_uses_twelve_layers():
    assert len(vibsim.evolution_layers(0.2, vibsim.water_spec())) == 12


@settings(deadline=None, max_examples=50)
@given(
    t=st.floats(1e-3, 1.0),
    harmonic=st.booleans(),
    input_mode=st.sampled_from([0, 1]),
)
def test_occupancies_conserve_probability(t, harmonic, input_mode):
    point = vibsim.evolve(t, vibsim.water_spec(), harmonic=harmonic, input_mode=input_mode)
    total = point.p_same_left + point.p_same_right + point.p_separate
    assert abs(total - 1.0) < 1e-12


def test_evolution_matches_dense_matrix_oracle():
    spec = vibsim.water_spec()
    for t in (0.07, 0.19, 0.333, 0.481):
        for harmonic in (False, True):
            source = spec.harmonic_variant() if harmonic else spec
            freqs = {"nu20": source.nu20, "nu02": source.nu02, "nu11": source.nu11}
            ref = pair_occupancies(t, freqs, np.asarray(source.matrix))
            point = vibsim.evolve(t, spec, harmonic=harmonic)
            mine = (point.p_same_left, point.p_same_right, point.p_separate)
            assert max(abs(a - b) for a, b in zip(mine, ref)) < 1e-12


def test_harmonic_dynamics_factorize_into_single_quanta():
    spec = vibsim.water_spec().harmonic_variant()
    scale = -2.0 * math.pi * 2.99792458e10 * 1e-12
    matrix = np.asarray(spec.matrix)
    for t in (0.09, 0.21, 0.38):
        phases = np.diag(np.exp(1j * scale * t * np.array([spec.nu10, spec.nu01])))
        single = matrix.conj().T @ phases @ matrix
        point = vibsim.evolve(t, vibsim.water_spec(), harmonic=True)
        assert abs(point.p_same_left - abs(single[0, 0]) ** 4) < 1e-12
        assert abs(point.p_same_right - abs(single[1, 0]) ** 4) < 1e-12
        assert abs(point.p_separate - 2.0 * abs(single[0, 0] * single[1, 0]) ** 2) < 1e-12


def test_harmonic_revival_period():
    spec = vibsim.water_spec()
    for t in (0.11, 0.26):
        now = vibsim.evolve(t, spec, harmonic=True)
        later = vibsim.evolve(t + WATER_PERIOD_PS, spec, harmonic=True)
        assert abs(now.p_same_left - later.p_same_left) < 1e-6
        assert abs(now.p_separate - later.p_separate) < 1e-6


def test_mode_swap_mirrors_the_occupancies():
    spec = vibsim.water_spec()
    swapped = mirrored_spec(spec)
    for t in (0.13, 0.27, 0.44):
        a = vibsim.evolve(t, spec, input_mode=1)
        b = vibsim.evolve(t, swapped, input_mode=0)
        assert abs(a.p_same_left - b.p_same_right) < 1e-12
        assert abs(a.p_same_right - b.p_same_left) < 1e-12
        assert abs(a.p_separate - b.p_separate) < 1e-12


def test_trace_starts_pinned_and_splits_the_models():
    points = vibsim.trace(0.5, 51, vibsim.water_spec())
    assert len(points) == 51
    anharmonic, harmonic = points[0]
    assert anharmonic.p_same_left == 1.0
    assert harmonic.p_same_left == 1.0
    for pair in points:
        for point in pair:
            total = point.p_same_left + point.p_same_right + point.p_separate
            assert abs(total - 1.0) < 1e-12
    assert all(a.anharmonic and not h.anharmonic for a, h in points)
    divergence = max(abs(a.p_same_left - h.p_same_left) for a, h in points)
    assert divergence > 0.05


def test_evolve_input_guards():
    spec = vibsim.water_spec()
    with pytest.raises(ValueError):
        vibsim.evolve(-0.1, spec)
    with pytest.raises(ValueError):
        vibsim.evolve(0.1, spec, input_mode=2)
    with pytest.raises(ValueError):
        vibsim.trace(0.5, 1, spec)
    with pytest.raises(ValueError):
        vibsim.trace(-1.0, 10, spec)


def test_detuning_lookup_interpolates_the_sweep():
    curve = [(0.0, 1.0), (1.0, 0.6), (2.0, 0.3), (5.0, 0.05)]
    assert vibsim.phase_to_detuning(1.0, curve) == 0.0
    assert abs(vibsim.phase_to_detuning(0.45, curve) - 1.5) < 1e-12
    assert vibsim.phase_to_detuning(0.01, curve) == 5.0
    entries = [SimpleNamespace(delta=d, phi_nl=p) for d, p in curve]
    assert abs(vibsim.phase_to_detuning(0.45, entries) - 1.5) < 1e-12
    negatives = [(-1.0, 2.0)] + curve
    assert abs(vibsim.phase_to_detuning(0.45, negatives) - 1.5) < 1e-12


def test_detuning_lookup_rejects_bad_requests():
    curve = [(0.0, 1.0), (1.0, 0.6), (2.0, 0.3)]
    with pytest.raises(ValueError, match="maximum"):
        vibsim.phase_to_detuning(1.2, curve)
    with pytest.raises(ValueError):
        vibsim.phase_to_detuning(-0.1, curve)
    with pytest.raises(ValueError):
        vibsim.phase_to_detuning(0.5, [(0.0, 1.0)])
    with pytest.raises(ValueError):
        vibsim.phase_to_detuning(0.5, [(0.0, 1.0), (1.0, 1.1), (2.0, 0.3)])


def test_layer_products_stay_in_the_photonic_basis():
    spec = vibsim.water_spec()
    amps = np.zeros(states.N_CONFIGURATIONS, dtype=complex)
    amps[0] = 1.0
    evolved = states.apply_circuit(
        states.TwoPhotonState(amps), vibsim.evolution_layers(0.3, spec)
    )
    assert abs(evolved.norm_squared - 1.0) < 1e-12
