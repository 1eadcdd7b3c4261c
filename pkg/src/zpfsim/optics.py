"""Linear optical elements and the lens feasibility formulas.

Amplitude maps (beam splitter, polarization rotator) act unitarily on the
mode amplitudes. The lens is handled at the intensity level: it multiplies
the signal mean by the gain b^2 and fixes the recommended detector radius,
but leaves the zeropoint statistics untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import FieldState

__all__ = [
    "LensSpec",
    "GeometrySpec",
    "beam_splitter_transform",
    "beam_splitter",
    "rotator_transform",
    "polarization_rotator",
    "lens_gain",
    "ring_radius",
    "coherence_ok",
]

# Fraction-of-intensity coefficients of the Airy pattern rings.
_RING_COEFF = {"first": 1.22, "second": 2.23}


@dataclass(frozen=True)
class LensSpec:
    """Lens radius, focal distance, working wavelength and ring choice."""

    radius: float
    focal: float
    wavelength: float
    ring_choice: str = "first"

    def __post_init__(self):
        if min(self.radius, self.focal, self.wavelength) <= 0:
            raise ValueError("lens radius, focal distance and wavelength must be positive")
        if self.ring_choice not in _RING_COEFF:
            raise ValueError(f"ring_choice must be 'first' or 'second', got {self.ring_choice!r}")


@dataclass(frozen=True)
class GeometrySpec:
    """Source-to-detector distance d and crystal radius R_C."""

    distance: float
    crystal_radius: float

    def __post_init__(self):
        if min(self.distance, self.crystal_radius) <= 0:
            raise ValueError("distance and crystal radius must be positive")


def _check_disjoint(pairs, n: int) -> None:
    used = set()
    for a, b in pairs:
        for idx in (a, b):
            if not 0 <= idx < n:
                raise ValueError(f"mode index {idx} out of range")
            if idx in used:
                raise ValueError(f"mode index {idx} appears in more than one pair")
            used.add(idx)


def beam_splitter_transform(amps: np.ndarray, pairs, transmittance: float, phase: float = 0.0) -> np.ndarray:
    """Beam splitter on amplitude array of shape (..., n_modes).

    Convention: symmetric i-phase on reflection,
        (a, b) -> (sqrt(t) a + i sqrt(1-t) e^{i phi} b,
                   i sqrt(1-t) e^{-i phi} a + sqrt(t) b).
    """
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    out = np.array(amps, dtype=complex, copy=True)
    if not len(pairs):
        return out
    ct = math.sqrt(transmittance)
    st = math.sqrt(1.0 - transmittance)
    a_idx = np.array([p[0] for p in pairs])
    b_idx = np.array([p[1] for p in pairs])
    a = amps[..., a_idx]
    b = amps[..., b_idx]
    out[..., a_idx] = ct * a + 1j * st * np.exp(1j * phase) * b
    out[..., b_idx] = 1j * st * np.exp(-1j * phase) * a + ct * b
    return out


def beam_splitter(state: FieldState, mode_pairs, transmittance: float, phase: float = 0.0) -> FieldState:
    _check_disjoint(mode_pairs, len(state.modes))
    return state.with_amplitudes(
        beam_splitter_transform(state.amplitudes, mode_pairs, transmittance, phase)
    )


def rotator_transform(amps: np.ndarray, pairs, angle: float) -> np.ndarray:
    """Polarization rotation by ``angle`` on (H, V) amplitude pairs."""
    out = np.array(amps, dtype=complex, copy=True)
    if not len(pairs):
        return out
    c = math.cos(angle)
    s = math.sin(angle)
    h_idx = np.array([p[0] for p in pairs])
    v_idx = np.array([p[1] for p in pairs])
    h = amps[..., h_idx]
    v = amps[..., v_idx]
    out[..., h_idx] = c * h + s * v
    out[..., v_idx] = -s * h + c * v
    return out


def polarization_rotator(state: FieldState, beam_mode_pairs, angle: float) -> FieldState:
    _check_disjoint(beam_mode_pairs, len(state.modes))
    return state.with_amplitudes(rotator_transform(state.amplitudes, beam_mode_pairs, angle))


def lens_gain(lens: LensSpec) -> float:
    """Signal-intensity amplification b^2 = pi^2 R_l^4 / (lambda^2 f^2)."""
    return math.pi**2 * lens.radius**4 / (lens.wavelength**2 * lens.focal**2)


def ring_radius(lens: LensSpec) -> float:
    """Optimum detector radius a * lambda * f / (2 R_l), first or second ring."""
    a = _RING_COEFF[lens.ring_choice]
    return a * lens.wavelength * lens.focal / (2.0 * lens.radius)


def coherence_ok(lens: LensSpec, geom: GeometrySpec) -> bool:
    """Spatial-coherence condition d * lambda >= R_l * R_C (boundary inclusive)."""
    return geom.distance * lens.wavelength >= lens.radius * geom.crystal_radius
