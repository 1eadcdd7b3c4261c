"""Plane-wave modes, vacuum sampling, and field evaluation.

The hidden variables of the whole simulator live here: each plane-wave mode
carries a complex amplitude alpha whose vacuum distribution is the circular
gaussian (2/pi) exp(-2|alpha|^2), i.e. Re(alpha) and Im(alpha) are
independent normals with mean 0 and variance 1/4.

Everything is expressed in dimensionless units (hbar = c = epsilon_0 = 1)
unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mode",
    "FieldState",
    "mode_scales",
    "trial_rng",
    "sample_vacuum",
    "sample_vacuum_batch",
    "evaluate_field",
]

# Relative tolerance on the dispersion relation omega = |k| (c = 1).
_DISPERSION_RTOL = 1e-9


@dataclass(frozen=True)
class Mode:
    """A plane-wave mode: wavevector, angular frequency and polarization index.

    The dispersion relation omega = c|k| is enforced at construction
    (c = 1 in dimensionless units).
    """

    k: tuple[float, float, float]
    omega: float
    polarization: int = 0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError(f"mode frequency must be positive, got {self.omega}")
        if self.polarization not in (0, 1):
            raise ValueError(f"polarization index must be 0 or 1, got {self.polarization}")
        knorm = float(np.linalg.norm(self.k))
        if abs(knorm - self.omega) > _DISPERSION_RTOL * self.omega:
            raise ValueError(
                f"dispersion relation violated: |k|={knorm:g} but omega={self.omega:g}"
            )

    @property
    def k_array(self) -> np.ndarray:
        return np.asarray(self.k, dtype=float)


def mode_scales(modes: list[Mode], box_length: float = 1.0) -> np.ndarray:
    """Per-mode field normalization sqrt(hbar*omega / (eps0 * L0^3)).

    ``box_length`` is the quantization box length L0, kept as an explicit
    free parameter so that scenario builders can calibrate the vacuum level.
    """
    if box_length <= 0:
        raise ValueError("box_length must be positive")
    omegas = np.array([m.omega for m in modes], dtype=float)
    return np.sqrt(omegas / box_length**3)


@dataclass(frozen=True)
class FieldState:
    """An immutable field configuration: modes, amplitudes and scales.

    ``amplitudes[i]`` is the dimensionless complex amplitude of ``modes[i]``;
    ``scales[i]`` is the field normalization factor of that mode.
    """

    modes: tuple[Mode, ...]
    amplitudes: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        scales = np.asarray(self.scales, dtype=float)
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "scales", scales)
        if len(amps) != len(self.modes):
            raise ValueError(
                f"{len(amps)} amplitudes for {len(self.modes)} modes"
            )
        if len(scales) != len(self.modes):
            raise ValueError(
                f"{len(scales)} scales for {len(self.modes)} modes"
            )
        if np.any(scales <= 0):
            raise ValueError("mode scales must be strictly positive")
        amps.setflags(write=False)
        scales.setflags(write=False)

    def with_amplitudes(self, amplitudes: np.ndarray) -> "FieldState":
        """New state sharing modes and scales but with different amplitudes."""
        return FieldState(self.modes, amplitudes, self.scales)


def _check_distinct(modes) -> None:
    seen = set()
    for m in modes:
        key = (tuple(np.round(m.k_array, 12)), m.polarization)
        if key in seen:
            raise ValueError(f"duplicate mode (k={m.k}, pol={m.polarization})")
        seen.add(key)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial substream.

    Each (seed, trial_index) pair keys an independent generator, so trials
    are reproducible and order-independent across workers.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, trial_index))))


def sample_vacuum_batch(n_modes: int, seed: int, trial_indices) -> np.ndarray:
    """Vacuum amplitudes for many trials, shape (len(trial_indices), n_modes).

    Each row is drawn from its own (seed, trial_index) substream: Re and Im
    are independent N(0, 1/4), hence E[|alpha|^2] = 1/2 and E[alpha^2] = 0.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    out = np.empty((len(trial_indices), n_modes), dtype=complex)
    for row, t in enumerate(trial_indices):
        rng = trial_rng(seed, int(t))
        z = rng.standard_normal(2 * n_modes)
        out[row] = 0.5 * (z[:n_modes] + 1j * z[n_modes:])
    return out


def sample_vacuum(
    modes: list[Mode],
    seed: int,
    trial_index: int = 0,
    scales: np.ndarray | None = None,
    box_length: float = 1.0,
) -> FieldState:
    """Draw one zeropoint-field realization from the vacuum gaussian.

    Deterministic given (seed, trial_index). Raises ValueError on an empty
    or duplicated mode list.
    """
    if not modes:
        raise ValueError("mode list must be non-empty")
    _check_distinct(modes)
    if scales is None:
        scales = mode_scales(modes, box_length)
    amps = sample_vacuum_batch(len(modes), seed, [trial_index])[0]
    return FieldState(tuple(modes), amps, scales)


def evaluate_field(state: FieldState, r, t: float) -> complex:
    """Analytic-signal field E+(r, t) = sum_k scale_k alpha_k e^{-i k.r + i w t}."""
    r = np.asarray(r, dtype=float)
    kmat = np.array([m.k_array for m in state.modes])  # (n, 3)
    omegas = np.array([m.omega for m in state.modes])
    phases = np.exp(-1j * (kmat @ r) + 1j * omegas * t)
    return complex(np.sum(state.scales * state.amplitudes * phases))
