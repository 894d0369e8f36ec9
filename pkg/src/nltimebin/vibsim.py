"""Two-mode vibrational dynamics mapped onto the photonic circuit.

A pair of coupled stretch oscillators, truncated to two excitation
quanta, evolves freely in its eigenbasis.  Expressed in the localized
basis this is exactly the interferometer sandwich the states module
implements: a basis-change unitary, per-configuration phases (the
anharmonic defects act as a nonlinear phase), and the inverse basis
change.  Time enters only through phase accumulation, so every step is
a lossless ten-amplitude evolution.

Frequencies are wavenumbers (inverse centimeters), times picoseconds.
All phases are computed from frequency differences rather than raw
eigenphases: the differences are small, so no precision is lost to
wrapping, and the harmonic variant yields exactly zero nonlinearity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from . import states
from .scatter import SPEED_OF_LIGHT_CM

# Radians accumulated per picosecond and per wavenumber of frequency.
_RAD_PER_PS_CM = 2.0 * math.pi * SPEED_OF_LIGHT_CM * 1e-12


def wrap_phase(angle: float) -> float:
    """Reduce an angle to the interval (-pi, pi]."""
    wrapped = math.remainder(angle, math.tau)
    if wrapped <= -math.pi:
        wrapped = math.pi
    return wrapped


@dataclass(frozen=True)
class MoleculeSpec:
    """Eigenfrequencies of a two-mode vibrational ladder.

    ``nu10``/``nu01`` are the single-excitation eigenmode frequencies,
    ``nu20``/``nu02``/``nu11`` the two-excitation ones, all in inverse
    centimeters.  ``localization`` is the unitary taking localized
    modes to eigenmodes, stored row-major as a nested tuple.
    """

    nu10: float
    nu01: float
    nu20: float
    nu02: float
    nu11: float
    localization: tuple[tuple[complex, complex], tuple[complex, complex]]

    def validate(self) -> None:
        for name in ("nu10", "nu01", "nu20", "nu02", "nu11"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be a positive frequency, got {value!r}")
        u = self.matrix
        defect = np.max(np.abs(u.conj().T @ u - np.eye(2)))
        if defect > 1e-12:
            raise ValueError(f"localization must be unitary, defect {defect:.3e}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.localization, dtype=complex)

    def harmonic_variant(self) -> MoleculeSpec:
        """The same molecule with two-excitation levels at exact sums."""
        return replace(
            self,
            nu20=2.0 * self.nu10,
            nu02=2.0 * self.nu01,
            nu11=self.nu10 + self.nu01,
        )

    def to_json_dict(self) -> dict:
        return {
            "nu10": self.nu10,
            "nu01": self.nu01,
            "nu20": self.nu20,
            "nu02": self.nu02,
            "nu11": self.nu11,
            "localization": [[[z.real, z.imag] for z in row] for row in self.localization],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> MoleculeSpec:
        if "localization" in data:
            rows = []
            for row in data["localization"]:
                entries = []
                for z in row:
                    entries.append(complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z))
                rows.append(tuple(entries))
            localization = tuple(rows)
        else:
            localization = _BEAM_SPLITTER_LOCALIZATION
        spec = cls(
            nu10=float(data["nu10"]),
            nu01=float(data["nu01"]),
            nu20=float(data["nu20"]),
            nu02=float(data["nu02"]),
            nu11=float(data["nu11"]),
            localization=localization,
        )
        spec.validate()
        return spec


_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_BEAM_SPLITTER_LOCALIZATION = (
    (complex(_INV_SQRT2), complex(-_INV_SQRT2)),
    (complex(_INV_SQRT2), complex(_INV_SQRT2)),
)


def water_spec() -> MoleculeSpec:
    """The symmetric/antisymmetric OH-stretch ladder of water."""
    return MoleculeSpec(
        nu10=3740.05,
        nu01=3619.68,
        nu20=7391.43,
        nu02=7154.35,
        nu11=7206.46,
        localization=_BEAM_SPLITTER_LOCALIZATION,
    )


@dataclass(frozen=True)
class StepPhases:
    """Wrapped interferometer phases for one evolution time."""

    phi_lin: float
    phi_nl_0: float
    phi_nl_1: float
    phi_11_residual: float


def step_phases(t: float, spec: MoleculeSpec, harmonic: bool = False) -> StepPhases:
    """Phases accumulated after ``t`` picoseconds of free evolution.

    Each eigenconfiguration picks up exp(-2*pi*i*c*nu*t); the reported
    quantities are the differences that drive the circuit, wrapped to
    (-pi, pi].  With ``harmonic`` the two-excitation frequencies are
    replaced by sums of single-excitation ones, which zeroes the
    nonlinear and residual phases identically.
    """
    spec.validate()
    if not (math.isfinite(t) and t >= 0.0):
        raise ValueError(f"evolution time must be non-negative, got {t!r}")
    scale = -_RAD_PER_PS_CM * t
    if harmonic:
        # The substitution nu20 -> 2 nu10 and so on cancels the defect
        # frequencies identically, not just to rounding.
        defects = (0.0, 0.0, 0.0)
    else:
        defects = (
            spec.nu20 - 2.0 * spec.nu10,
            spec.nu02 - 2.0 * spec.nu01,
            spec.nu11 - spec.nu10 - spec.nu01,
        )
    return StepPhases(
        phi_lin=wrap_phase(scale * (spec.nu10 - spec.nu01)),
        phi_nl_0=wrap_phase(scale * defects[0]),
        phi_nl_1=wrap_phase(scale * defects[1]),
        phi_11_residual=wrap_phase(scale * defects[2]),
    )


@dataclass(frozen=True)
class TracePoint:
    """Localized-basis occupancies after one evolution time."""

    t: float
    p_separate: float
    p_same_left: float
    p_same_right: float
    anharmonic: bool


def _mode_unitary_layers(u: np.ndarray) -> list[states.LayerSpec]:
    """Decompose a 2x2 unitary into phase and splitter layers.

    Uses the interferometer form D1 * B * D2 * B * D3 with diagonal
    phase layers around the fixed symmetric splitter; the overall
    phase is dropped, which leaves pair probabilities unchanged.
    """
    mixing = math.atan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[1, 0]) < 1e-12:
        alpha, beta = cmath.phase(u[0, 0]), 0.0
        gamma, delta = 0.0, cmath.phase(u[1, 1])
    elif abs(u[0, 0]) < 1e-12:
        beta = cmath.phase(u[1, 0]) - 0.5 * math.pi
        alpha, gamma, delta = cmath.phase(u[0, 1]) - 0.5 * math.pi, 0.0, 0.0
    else:
        gamma = 0.0
        alpha = cmath.phase(u[0, 0])
        beta = cmath.phase(u[1, 0]) - 0.5 * math.pi
        delta = cmath.phase(u[0, 1]) - 0.5 * math.pi - alpha
    return [
        states.linear_phase(gamma - delta),
        states.beam_splitter_first(),
        states.linear_phase(2.0 * mixing),
        states.beam_splitter_second(),
        states.linear_phase(alpha - beta),
    ]


def evolution_layers(t: float, spec: MoleculeSpec, harmonic: bool = False) -> list[states.LayerSpec]:
    """The full localized -> eigenbasis -> localized layer sequence.

    The eigenbasis phase diagonal splits into a linear phase and a
    same-mode nonlinear phase; both are computed from frequency
    differences, so the harmonic variant carries zero nonlinearity
    exactly.
    """
    spec.validate()
    if not (math.isfinite(t) and t >= 0.0):
        raise ValueError(f"evolution time must be non-negative, got {t!r}")
    if harmonic:
        spec = spec.harmonic_variant()
    scale = -_RAD_PER_PS_CM * t
    # diag(th20, th02, th11) over pair configurations, up to a global
    # phase: a linear phase of (th20 - th02) / 2 plus a nonlinear phase
    # of (th20 + th02) / 2 - th11 on the doubly occupied entries.
    linear = 0.5 * scale * (spec.nu20 - spec.nu02)
    kerr = 0.5 * scale * (spec.nu20 + spec.nu02 - 2.0 * spec.nu11)
    u = spec.matrix
    layers = _mode_unitary_layers(u)
    layers.append(states.linear_phase(linear))
    layers.append(states.nonlinear(kerr, 0.0, 1.0))
    layers.extend(_mode_unitary_layers(u.conj().T))
    return layers


_SAME_LEFT = states.CONFIGURATIONS.index((2, 0, 0, 0))
_SAME_RIGHT = states.CONFIGURATIONS.index((0, 2, 0, 0))
_SEPARATE = states.CONFIGURATIONS.index((1, 1, 0, 0))


def evolve(
    t: float,
    spec: MoleculeSpec,
    harmonic: bool = False,
    input_mode: int = 0,
) -> TracePoint:
    """Evolve two quanta starting in one localized mode.

    ``input_mode`` selects which localized oscillator holds both
    excitations at t = 0.  The evolution is lossless, so the three
    occupancies sum to one up to rounding.
    """
    if input_mode not in (0, 1):
        raise ValueError(f"input_mode must be 0 or 1, got {input_mode!r}")
    spec.validate()
    if not (math.isfinite(t) and t >= 0.0):
        raise ValueError(f"evolution time must be non-negative, got {t!r}")
    if t == 0.0:
        # Zero time is the identity; skip the layer products so the
        # initial occupancy is reproduced without rounding residue.
        return TracePoint(
            t=0.0,
            p_separate=0.0,
            p_same_left=1.0 if input_mode == 0 else 0.0,
            p_same_right=0.0 if input_mode == 0 else 1.0,
            anharmonic=not harmonic,
        )
    amps = np.zeros(states.N_CONFIGURATIONS, dtype=complex)
    amps[_SAME_LEFT if input_mode == 0 else _SAME_RIGHT] = 1.0
    state = states.apply_circuit(states.TwoPhotonState(amps), evolution_layers(t, spec, harmonic))
    weights = np.abs(state.amplitudes) ** 2
    return TracePoint(
        t=float(t),
        p_separate=float(weights[_SEPARATE]),
        p_same_left=float(weights[_SAME_LEFT]),
        p_same_right=float(weights[_SAME_RIGHT]),
        anharmonic=not harmonic,
    )


def trace(
    t_max: float,
    n_steps: int,
    spec: MoleculeSpec,
) -> list[tuple[TracePoint, TracePoint]]:
    """Anharmonic and harmonic traces on a uniform time grid.

    Returns one (anharmonic, harmonic) pair per grid point, with the
    grid spanning [0, t_max] inclusive.
    """
    if n_steps < 2:
        raise ValueError(f"n_steps must be at least 2, got {n_steps!r}")
    if not (math.isfinite(t_max) and t_max > 0.0):
        raise ValueError(f"t_max must be positive, got {t_max!r}")
    points = []
    for t in np.linspace(0.0, t_max, n_steps):
        points.append((evolve(float(t), spec), evolve(float(t), spec, harmonic=True)))
    return points


def phase_to_detuning(phi_nl_target: float, curve) -> float:
    """Invert a characterized (detuning, nonlinear phase) table.

    ``curve`` is an iterable of sweep entries (anything with ``delta``
    and ``phi_nl`` attributes, or (delta, phi_nl) pairs) covering
    non-negative detunings on which the phase decreases away from
    resonance.  Targets below the far-detuned tail clamp to the last
    tabulated detuning; targets above the resonant maximum raise.
    """
    pairs = []
    for entry in curve:
        if hasattr(entry, "delta"):
            delta, phase = float(entry.delta), float(entry.phi_nl)
        else:
            delta, phase = float(entry[0]), float(entry[1])
        if delta >= 0.0:
            pairs.append((delta, phase))
    if len(pairs) < 2:
        raise ValueError("curve must tabulate at least two non-negative detunings")
    pairs.sort()
    deltas = [d for d, _ in pairs]
    phases = [p for _, p in pairs]
    if any(phases[k + 1] >= phases[k] for k in range(len(pairs) - 1)):
        raise ValueError("curve must be strictly decreasing in phi_nl for increasing detuning")
    if not (math.isfinite(phi_nl_target) and phi_nl_target >= 0.0):
        raise ValueError(f"target phase must be non-negative, got {phi_nl_target!r}")
    if phi_nl_target > phases[0]:
        raise ValueError(
            f"target phase {phi_nl_target!r} exceeds the maximum achievable "
            f"nonlinear phase {phases[0]!r} at zero detuning"
        )
    if phi_nl_target <= phases[-1]:
        return deltas[-1]
    for k in range(len(pairs) - 1):
        if phases[k + 1] <= phi_nl_target <= phases[k]:
            span = phases[k + 1] - phases[k]
            frac = (phi_nl_target - phases[k]) / span
            return deltas[k] + frac * (deltas[k + 1] - deltas[k])
    raise ValueError("target phase does not bracket any table interval")
