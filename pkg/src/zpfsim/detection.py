"""Threshold photodetection built on filtered fields and effective intensity.

A detector is a cylinder (radius R, length L) carrying N narrow-band
elements (omega_l, k_l). Each element sees the filtered field

    Ebar_l = (1 / (pi R^2 L T)) int_V dV int_0^T E+(r,t) e^{i k_l.r - i w_l t} dt,

which for a plane-wave superposition evaluates analytically to
sum_k scale_k alpha_k D(k - k_l) S(w - w_l), with S the time sinc factor
and D the normalized volume overlap of the cylinder. The effective
intensity is Ibar = c eps0 sum_l |Ebar_l|^2 and the detector response is

    Q(Ibar) = (1 - e^{-zeta (Ibar - I0)}) Theta(Ibar - I_m),  Theta(0) = 0,

which stays in [0, 1) as long as the threshold I_m exceeds the vacuum
mean I0. Under vacuum, Ibar is gaussian with mean I0 = wbar dw / (8 pi c L)
and deviation sigma0 = I0 sqrt(tau / T); a weak signal shifts the mean by
Ibar_s and leaves the deviation unchanged.

All formulas below use dimensionless units (hbar = c = eps0 = 1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.special import j1

from .field import FieldState

__all__ = [
    "DetectorSpec",
    "EffectiveIntensityDist",
    "BivariateIntensityDist",
    "filtered_field",
    "response_matrix",
    "effective_intensity",
    "intensity_batch",
    "q_model",
    "q_standard",
    "rho_vacuum",
    "rho_signal",
    "p_single",
    "p_joint",
    "empirical_corr",
]


@dataclass(frozen=True)
class DetectorSpec:
    """Geometry, timing, band, gain and threshold of one detector.

    ``threshold`` is the effective-intensity threshold I_m and must exceed
    the vacuum mean ``I0``. ``zeta`` is the dimensionless gain; when None it
    is derived from the quantum efficiency as eta * pi R^2 T / omega_center
    (the aperture-window photon-count conversion).
    """

    radius: float
    length: float
    window: float                 # time window T
    tau: float                    # beam coherence time
    omega_center: float
    threshold: float
    bandwidth: float | None = None   # defaults to 2 pi / tau
    eta: float = 1.0
    zeta_override: float | None = None
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    element_omegas: np.ndarray | None = None
    element_kvecs: np.ndarray | None = None

    def __post_init__(self):
        if min(self.radius, self.length, self.window, self.tau, self.omega_center) <= 0:
            raise ValueError("detector geometry, timing and frequency must be positive")
        if self.tau > self.window:
            raise ValueError("coherence time tau must not exceed the window T")
        if not 0 < self.eta <= 1:
            raise ValueError(f"quantum efficiency must lie in (0, 1], got {self.eta}")
        if self.bandwidth is None:
            object.__setattr__(self, "bandwidth", 2.0 * math.pi / self.tau)
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        ax = np.asarray(self.axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        object.__setattr__(self, "axis", tuple(ax))
        if self.element_omegas is None:
            w, k = _element_grid(self)
            object.__setattr__(self, "element_omegas", w)
            object.__setattr__(self, "element_kvecs", k)
        else:
            w = np.asarray(self.element_omegas, dtype=float)
            k = np.asarray(self.element_kvecs, dtype=float)
            if k.shape != (len(w), 3):
                raise ValueError("element_kvecs must have shape (n_elements, 3)")
            object.__setattr__(self, "element_omegas", w)
            object.__setattr__(self, "element_kvecs", k)
        self.element_omegas.setflags(write=False)
        self.element_kvecs.setflags(write=False)
        if self.threshold <= self.I0:
            raise ValueError(
                f"threshold I_m={self.threshold:g} must exceed the vacuum mean "
                f"I0={self.I0:g} to keep the response Q positive"
            )
        n_min = self.window / self.tau
        if len(self.element_omegas) < n_min - 0.5:
            warnings.warn(
                f"detector has {len(self.element_omegas)} elements, below the "
                f"band-resolving minimum T/tau ~ {n_min:.0f}",
                stacklevel=2,
            )

    # derived quantities -----------------------------------------------------
    @property
    def I0(self) -> float:
        """Vacuum mean effective intensity wbar * dw / (8 pi c L)."""
        return self.omega_center * self.bandwidth / (8.0 * math.pi * self.length)

    @property
    def sigma0(self) -> float:
        """Vacuum effective-intensity deviation I0 sqrt(tau / T)."""
        return self.I0 * math.sqrt(self.tau / self.window)

    @property
    def zeta(self) -> float:
        if self.zeta_override is not None:
            return self.zeta_override
        return self.eta * math.pi * self.radius**2 * self.window / self.omega_center

    @property
    def n_elements(self) -> int:
        return len(self.element_omegas)

    @classmethod
    def matched(cls, *, n_elements: int | None = None, **kwargs) -> "DetectorSpec":
        """Detector whose elements sit on the resolution grid along its axis.

        Element frequencies are spaced by 2 pi / T around ``omega_center``
        and every k_l points along the detector axis; ``n_elements`` defaults
        to round(T / tau), the number of coherence cells in the window.
        """
        window = kwargs["window"]
        tau = kwargs["tau"]
        omega_center = kwargs["omega_center"]
        ax = np.asarray(kwargs.get("axis", (0.0, 0.0, 1.0)), dtype=float)
        ax = ax / np.linalg.norm(ax)
        if n_elements is None:
            n_elements = max(1, round(window / tau))
        dw = 2.0 * math.pi / window
        w = omega_center + dw * (np.arange(n_elements) - (n_elements - 1) / 2.0)
        k = w[:, None] * ax[None, :]
        return cls(element_omegas=w, element_kvecs=k, **kwargs)


def _element_grid(det: DetectorSpec):
    n = max(1, round(det.window / det.tau))
    dw = 2.0 * math.pi / det.window
    w = det.omega_center + dw * (np.arange(n) - (n - 1) / 2.0)
    ax = np.asarray(det.axis, dtype=float)
    return w, w[:, None] * ax[None, :]


# ---------------------------------------------------------------------------
# filtered fields and effective intensity
# ---------------------------------------------------------------------------

def _sinc(x: np.ndarray) -> np.ndarray:
    """sin(x)/x with the x -> 0 limit."""
    return np.sinc(x / np.pi)

def _airy_disc(x: np.ndarray) -> np.ndarray:
    """2 J1(x)/x with the x -> 0 limit (disc overlap factor)."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-12
    out[nz] = 2.0 * j1(x[nz]) / x[nz]
    return out


def _element_response(det: DetectorSpec, kmat: np.ndarray, omegas: np.ndarray,
                      el_slice: slice) -> np.ndarray:
    """Complex response of elements in ``el_slice`` to each mode.

    Shape (n_sel, n_modes). The cylinder is centered at the origin with its
    axis along ``det.axis``; the time factor carries the e^{i dw T / 2}
    phase of the one-sided window.
    """
    el_w = det.element_omegas[el_slice]
    el_k = det.element_kvecs[el_slice]
    dw = omegas[None, :] - el_w[:, None]
    time_factor = np.exp(0.5j * dw * det.window) * _sinc(0.5 * dw * det.window)
    dk = kmat[None, :, :] - el_k[:, None, :]            # (n_sel, n_modes, 3)
    ax = np.asarray(det.axis, dtype=float)
    dpar = dk @ ax
    dperp_sq = np.maximum(np.einsum("ijk,ijk->ij", dk, dk) - dpar**2, 0.0)
    vol_factor = _sinc(0.5 * dpar * det.length) * _airy_disc(np.sqrt(dperp_sq) * det.radius)
    return time_factor * vol_factor


def filtered_field(state: FieldState, element_index: int, detector: DetectorSpec) -> complex:
    """Analytic evaluation of the filtered field of one detector element."""
    if not 0 <= element_index < detector.n_elements:
        raise ValueError(f"element {element_index} not in detector (N={detector.n_elements})")
    kmat = np.array([m.k_array for m in state.modes])
    omegas = np.array([m.omega for m in state.modes])
    resp = _element_response(detector, kmat, omegas, slice(element_index, element_index + 1))[0]
    return complex(np.sum(state.scales * resp * state.amplitudes))


def response_matrix(modes, scales, detector: DetectorSpec,
                    prune_rtol: float = 1e-12) -> sp.csr_matrix:
    """Sparse (n_elements x n_modes) map from amplitudes to filtered fields.

    Entries below ``prune_rtol`` of the largest mode scale are dropped; on
    a matched element grid the sinc zeros make the matrix diagonal.
    """
    kmat = np.array([m.k_array for m in modes])
    omegas = np.array([m.omega for m in modes])
    scales = np.asarray(scales, dtype=float)
    cutoff = prune_rtol * float(np.max(scales))
    blocks = []
    chunk = max(1, int(4_000_000 // max(len(modes), 1)))
    for start in range(0, detector.n_elements, chunk):
        sl = slice(start, min(start + chunk, detector.n_elements))
        block = _element_response(detector, kmat, omegas, sl) * scales[None, :]
        block[np.abs(block) < cutoff] = 0.0
        blocks.append(sp.csr_matrix(block))
    return sp.vstack(blocks, format="csr")


def intensity_batch(amps: np.ndarray, response: sp.csr_matrix) -> np.ndarray:
    """Effective intensities for an amplitude batch of shape (B, n_modes)."""
    n_el = response.shape[0]
    out = np.empty(len(amps), dtype=float)
    sub = max(1, int(4_000_000 // max(n_el, 1)))
    for start in range(0, len(amps), sub):
        f = response @ amps[start:start + sub].T     # (n_el, b)
        out[start:start + sub] = np.sum(np.abs(f) ** 2, axis=0)
    return out


def effective_intensity(state: FieldState, detector: DetectorSpec) -> float:
    """Ibar = c eps0 sum_l |Ebar_l|^2 (c = eps0 = 1)."""
    resp = response_matrix(state.modes, state.scales, detector)
    return float(intensity_batch(state.amplitudes[None, :], resp)[0])


# ---------------------------------------------------------------------------
# detector response
# ---------------------------------------------------------------------------

def q_model(intensity, detector: DetectorSpec):
    """Bounded response Q = (1 - e^{-zeta (I - I0)}) Theta(I - I_m), Theta(0)=0."""
    i = np.asarray(intensity, dtype=float)
    scalar = i.ndim == 0
    i = np.atleast_1d(i)
    q = np.zeros_like(i)
    mask = i > detector.threshold
    # clamp one ulp below 1 so float rounding cannot breach the [0, 1) bound
    q[mask] = np.minimum(-np.expm1(-detector.zeta * (i[mask] - detector.I0)),
                         np.nextafter(1.0, 0.0))
    return float(q[0]) if scalar else q


def q_standard(intensity, detector: DetectorSpec):
    """Unbounded textbook response zeta (I - I0); may be negative or exceed 1."""
    i = np.asarray(intensity, dtype=float)
    q = detector.zeta * (i - detector.I0)
    return q if q.ndim else float(q)


# ---------------------------------------------------------------------------
# analytic effective-intensity laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveIntensityDist:
    """Gaussian law of the effective intensity (vacuum or vacuum + signal)."""

    mean: float
    sigma: float
    kind: str = "vacuum"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kind not in ("vacuum", "signal"):
            raise ValueError(f"kind must be 'vacuum' or 'signal', got {self.kind!r}")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.sigma
        return np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * self.sigma)


@dataclass(frozen=True)
class BivariateIntensityDist:
    """Joint gaussian of two effective intensities with correlation ``corr``."""

    marginal_1: EffectiveIntensityDist
    marginal_2: EffectiveIntensityDist
    corr: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.corr <= 1.0:
            raise ValueError(f"correlation must lie in [-1, 1], got {self.corr}")


def rho_vacuum(detector: DetectorSpec) -> EffectiveIntensityDist:
    """Vacuum law: mean I0 = wbar dw / (8 pi c L), sigma = I0 sqrt(tau/T)."""
    return EffectiveIntensityDist(detector.I0, detector.sigma0, "vacuum")


def rho_signal(detector: DetectorSpec, signal_mean: float) -> EffectiveIntensityDist:
    """Signal law: mean I0 + Ibar_s, deviation unchanged from the vacuum."""
    if signal_mean < 0:
        raise ValueError(f"signal mean intensity must be non-negative, got {signal_mean}")
    kind = "vacuum" if signal_mean == 0 else "signal"
    return EffectiveIntensityDist(detector.I0 + signal_mean, detector.sigma0, kind)


# ---------------------------------------------------------------------------
# detection probabilities by quadrature
# ---------------------------------------------------------------------------

_TAIL_SIGMAS = 12.0


def p_single(dist: EffectiveIntensityDist, detector: DetectorSpec) -> float:
    """p = int rho(I) Q(I) dI over [I_m, mean + 12 sigma], abs tol 1e-12."""
    lo = detector.threshold
    hi = dist.mean + _TAIL_SIGMAS * dist.sigma
    if lo >= hi:
        return 0.0
    val, _ = quad(lambda x: dist.pdf(x) * q_model(x, detector),
                  lo, hi, epsabs=1e-12, epsrel=1e-10, limit=400)
    return min(max(val, 0.0), 1.0)


def p_joint(dist: BivariateIntensityDist, det1: DetectorSpec, det2: DetectorSpec) -> float:
    """p12 = int rho12(I1, I2) Q1(I1) Q2(I2) dI1 dI2, abs tol 1e-10.

    Evaluated as an outer integral over I1 with the gaussian conditional of
    I2 integrated inside; |corr| = 1 degenerates to a line integral.
    """
    m1, s1 = dist.marginal_1.mean, dist.marginal_1.sigma
    m2, s2 = dist.marginal_2.mean, dist.marginal_2.sigma
    c = dist.corr
    lo1 = det1.threshold
    hi1 = m1 + _TAIL_SIGMAS * s1
    if lo1 >= hi1:
        return 0.0

    if abs(c) >= 1.0 - 1e-12:
        sign = 1.0 if c > 0 else -1.0

        def integrand(x1):
            x2 = m2 + sign * (s2 / s1) * (x1 - m1)
            return dist.marginal_1.pdf(x1) * q_model(x1, det1) * q_model(x2, det2)

        val, _ = quad(integrand, lo1, hi1, epsabs=1e-10, epsrel=1e-8, limit=400)
        return min(max(val, 0.0), 1.0)

    s_cond = s2 * math.sqrt(1.0 - c * c)

    def inner(x1):
        m_cond = m2 + c * (s2 / s1) * (x1 - m1)
        lo2 = det2.threshold
        hi2 = m_cond + _TAIL_SIGMAS * s_cond
        if lo2 >= hi2:
            return 0.0
        cond = EffectiveIntensityDist(m_cond, s_cond, "signal")
        val, _ = quad(lambda x2: cond.pdf(x2) * q_model(x2, det2),
                      lo2, hi2, epsabs=1e-12, epsrel=1e-10, limit=200)
        return val

    val, _ = quad(lambda x1: dist.marginal_1.pdf(x1) * q_model(x1, det1) * inner(x1),
                  lo1, hi1, epsabs=1e-10, epsrel=1e-8, limit=400)
    return min(max(val, 0.0), 1.0)


def empirical_corr(samples) -> float:
    """Centered sample correlation of paired effective intensities.

    ``samples`` has shape (n, 2) with n >= 2.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
        raise ValueError("samples must have shape (n, 2) with n >= 2")
    return float(np.corrcoef(arr[:, 0], arr[:, 1])[0, 1])
