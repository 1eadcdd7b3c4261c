"""Parametric-down-conversion source: the nonlinear-crystal amplitude map.

The crystal couples every phase-matched pair of modes (signal s, idler i):

    alpha_s' = (1 + g^2/2) alpha_s + g conj(alpha_i)
    alpha_i' = (1 + g^2/2) alpha_i + g conj(alpha_s)

Modes outside the matching pass through unchanged. Under the vacuum
ensemble this map has the exact moments

    E[alpha_s' alpha_i']   = g (1 + g^2/2)
    E[|alpha_s'|^2] - 1/2  = g^2 + g^4/8
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .field import FieldState, Mode

__all__ = [
    "PumpSpec",
    "PhaseMatchedPairs",
    "pdc_transform",
    "apply_pdc",
    "pair_correlation",
    "excess_photon_fraction",
    "mean_signal_intensity",
]

# Above this coupling the order-g^2 expansion of the map is dubious.
PERTURBATIVE_G_LIMIT = 0.3


@dataclass(frozen=True)
class PumpSpec:
    """Pump beam: wavevector k0, angular frequency omega0, coupling g."""

    k0: tuple[float, float, float]
    omega0: float
    g: float

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"coupling g must be non-negative, got {self.g}")
        if self.omega0 <= 0:
            raise ValueError("pump frequency must be positive")
        if self.g >= PERTURBATIVE_G_LIMIT:
            warnings.warn(
                f"coupling g={self.g:g} is outside the perturbative regime "
                f"(g < {PERTURBATIVE_G_LIMIT})",
                stacklevel=2,
            )


@dataclass(frozen=True)
class PhaseMatchedPairs:
    """Partial matching of (signal, idler) mode indices.

    Each pair must satisfy k_s + k_i = k0 and omega_s + omega_i = omega0
    within ``rtol``, and no mode may appear twice.
    """

    pairs: tuple[tuple[int, int], ...]
    rtol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))
        used = set()
        for s, i in self.pairs:
            for idx in (s, i):
                if idx in used:
                    raise ValueError(f"mode index {idx} appears in more than one pair")
                used.add(idx)

    def validate(self, modes: tuple[Mode, ...], pump: PumpSpec) -> None:
        n = len(modes)
        k0 = np.asarray(pump.k0, dtype=float)
        for s, i in self.pairs:
            if not (0 <= s < n and 0 <= i < n):
                raise ValueError(f"pair ({s}, {i}) references an unknown mode")
            ksum = modes[s].k_array + modes[i].k_array
            wsum = modes[s].omega + modes[i].omega
            if np.linalg.norm(ksum - k0) > self.rtol * max(np.linalg.norm(k0), 1.0):
                raise ValueError(f"pair ({s}, {i}) violates wavevector matching")
            if abs(wsum - pump.omega0) > self.rtol * pump.omega0:
                raise ValueError(f"pair ({s}, {i}) violates frequency matching")


def pdc_transform(amps: np.ndarray, pairs, g: float) -> np.ndarray:
    """Apply the crystal map to an amplitude array of shape (..., n_modes)."""
    out = np.array(amps, dtype=complex, copy=True)
    if g == 0 or not len(pairs):
        return out
    a = 1.0 + 0.5 * g * g
    s_idx = np.array([p[0] for p in pairs])
    i_idx = np.array([p[1] for p in pairs])
    alpha_s = amps[..., s_idx]
    alpha_i = amps[..., i_idx]
    out[..., s_idx] = a * alpha_s + g * np.conj(alpha_i)
    out[..., i_idx] = a * alpha_i + g * np.conj(alpha_s)
    return out


def apply_pdc(state: FieldState, pump: PumpSpec, pairs: PhaseMatchedPairs) -> FieldState:
    """Crystal-transformed copy of ``state``; the input is not mutated."""
    pairs.validate(state.modes, pump)
    return state.with_amplitudes(pdc_transform(state.amplitudes, pairs.pairs, pump.g))


def pair_correlation(g: float) -> float:
    """Ensemble moment E[alpha_s' alpha_i'] of one matched pair."""
    return g * (1.0 + 0.5 * g * g)


def excess_photon_fraction(g: float) -> float:
    """Above-vacuum occupation E[|alpha'|^2] - 1/2 of one output mode."""
    return g * g + g**4 / 8.0


def mean_signal_intensity(pump: PumpSpec, n_pairs: int, mode_scales=1.0) -> float:
    """Mean above-vacuum effective intensity of the signal beam.

    ``mode_scales`` is either one scale shared by all signal modes or an
    array with one entry per signal mode (length n_pairs). The result is
    sum(scale^2) * (g^2 + g^4/8), i.e. the per-mode vacuum contribution
    scale^2/2 times twice the excess occupation.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    scales = np.asarray(mode_scales, dtype=float)
    if scales.ndim == 0:
        sq = n_pairs * float(scales) ** 2
    else:
        if len(scales) != n_pairs:
            raise ValueError("mode_scales length must equal n_pairs")
        sq = float(np.sum(scales**2))
    return sq * excess_photon_fraction(pump.g)
