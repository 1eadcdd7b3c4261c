"""Declarative experiment scenarios.

A ``Scenario`` bundles the mode list, the calibrated scales, the ordered
amplitude-map operations (crystal, rotators, beam splitters) and the
per-detector response matrices. Everything is plain data so scenarios can
be shipped to worker processes.

Mode scales are calibrated so that each detector's vacuum-ensemble mean of
the effective intensity equals its analytic value I0; this amounts to
fixing the quantization box length per beam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .detection import DetectorSpec, response_matrix
from .field import Mode, _check_distinct
from .pdc import PhaseMatchedPairs, PumpSpec, pdc_transform
from .optics import beam_splitter_transform, rotator_transform

__all__ = [
    "Scenario",
    "apply_ops",
    "make_matched_detector",
    "vacuum_scenario",
    "pdc_scenario",
    "chsh_scenario",
]


@dataclass(frozen=True)
class Scenario:
    """Modes, scales, amplitude-map ops and detector responses."""

    modes: tuple[Mode, ...]
    scales: np.ndarray
    ops: tuple[tuple, ...]
    detector_names: tuple[str, ...]
    detector_specs: tuple[DetectorSpec, ...]
    responses: tuple[sp.csr_matrix, ...]
    coincidences: tuple[tuple[int, int], ...] = ()
    signal_means: tuple[float, ...] = ()   # analytic Ibar_s per detector
    # diagnostic override: constant response per detector (None = physical Q)
    forced_responses: tuple = ()

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def detector(self, name: str) -> DetectorSpec:
        return self.detector_specs[self.detector_names.index(name)]


def apply_ops(amps: np.ndarray, ops) -> np.ndarray:
    """Run the declarative op list over an amplitude batch (..., n_modes)."""
    out = amps
    for op in ops:
        kind = op[0]
        if kind == "pdc":
            out = pdc_transform(out, op[1], op[2])
        elif kind == "rotator":
            out = rotator_transform(out, op[1], op[2])
        elif kind == "beam_splitter":
            out = beam_splitter_transform(out, op[1], op[2], op[3])
        else:
            raise ValueError(f"unknown op {kind!r}")
    return out


def make_matched_detector(
    *,
    omega_center: float,
    window: float,
    n_cells: int,
    threshold_sigma: float,
    length: float = 1.0,
    radius: float = 1.0,
    eta: float = 1.0,
    zeta: float | None = None,
    zeta_sigma: float | None = None,
    axis=(0.0, 0.0, 1.0),
) -> DetectorSpec:
    """Detector with tau = T / n_cells and threshold I0 + threshold_sigma * sigma0.

    ``zeta_sigma``, when given, sets the gain so that zeta * sigma0 equals it.
    """
    tau = window / n_cells
    bandwidth = 2.0 * math.pi / tau
    i0 = omega_center * bandwidth / (8.0 * math.pi * length)
    sigma0 = i0 * math.sqrt(tau / window)
    if zeta_sigma is not None:
        if zeta is not None:
            raise ValueError("give at most one of zeta and zeta_sigma")
        zeta = zeta_sigma / sigma0
    return DetectorSpec.matched(
        radius=radius,
        length=length,
        window=window,
        tau=tau,
        omega_center=omega_center,
        threshold=i0 + threshold_sigma * sigma0,
        eta=eta,
        zeta_override=zeta,
        axis=tuple(axis),
    )


def _matched_beam(det: DetectorSpec, n_modes: int | None, polarization: int = 0):
    """Modes on the detector's element grid with vacuum-calibrated scales.

    When ``n_modes`` is smaller than the element count the central slice of
    the grid is used; the calibration always sets sum(scale^2)/2 = I0.
    """
    n_el = det.n_elements
    if n_modes is None:
        n_modes = n_el
    if not 1 <= n_modes <= n_el:
        raise ValueError(f"n_modes must lie in [1, {n_el}], got {n_modes}")
    start = (n_el - n_modes) // 2
    omegas = det.element_omegas[start:start + n_modes]
    kvecs = det.element_kvecs[start:start + n_modes]
    modes = [Mode(tuple(k), float(w), polarization) for k, w in zip(kvecs, omegas)]
    # scale^2 proportional to omega, normalized to the vacuum mean
    raw = omegas / np.sum(omegas)
    scales = np.sqrt(2.0 * det.I0 * raw)
    return modes, scales


def vacuum_scenario(detectors: list[DetectorSpec], names: list[str] | None = None,
                    n_modes: int | None = None) -> Scenario:
    """One independent matched beam per detector, no source and no optics."""
    if names is None:
        names = [f"d{i}" for i in range(len(detectors))]
    modes: list[Mode] = []
    scales: list[np.ndarray] = []
    masks = []
    offset = 0
    for det in detectors:
        m, s = _matched_beam(det, n_modes)
        modes.extend(m)
        scales.append(s)
        masks.append((offset, offset + len(m)))
        offset += len(m)
    _check_distinct(modes)
    scales_all = np.concatenate(scales)
    responses = []
    for det, (lo, hi) in zip(detectors, masks):
        resp = response_matrix(modes, scales_all, det)
        mask = np.zeros(len(modes))
        mask[lo:hi] = 1.0
        responses.append((resp @ sp.diags(mask)).tocsr())
    coinc = tuple((i, j) for i in range(len(detectors)) for j in range(i + 1, len(detectors)))
    return Scenario(
        modes=tuple(modes),
        scales=scales_all,
        ops=(),
        detector_names=tuple(names),
        detector_specs=tuple(detectors),
        responses=tuple(responses),
        coincidences=coinc,
        signal_means=tuple(0.0 for _ in detectors),
    )


def pdc_scenario(det_signal: DetectorSpec, det_idler: DetectorSpec, g: float,
                 names: tuple[str, str] = ("signal", "idler")) -> Scenario:
    """Collinear PDC: signal and idler beams in separate frequency bands.

    Both detectors must share the window T and axis so that every
    phase-matched pair satisfies k_s + k_i = k0 exactly. Pair j couples the
    j-th signal grid mode with the frequency-mirrored idler grid mode.
    """
    if det_signal.window != det_idler.window:
        raise ValueError("signal and idler detectors must share the window T")
    if det_signal.axis != det_idler.axis:
        raise ValueError("collinear scenario requires a common detector axis")
    if det_signal.n_elements != det_idler.n_elements:
        raise ValueError("signal and idler detectors must have equal element counts")
    n = det_signal.n_elements
    sig_modes, sig_scales = _matched_beam(det_signal, None)
    idl_modes, idl_scales = _matched_beam(det_idler, None)
    omega0 = det_signal.omega_center + det_idler.omega_center
    if abs(det_signal.omega_center - det_idler.omega_center) < 4.0 * max(
            det_signal.bandwidth, det_idler.bandwidth):
        raise ValueError("signal and idler bands must be well separated")
    ax = np.asarray(det_signal.axis, dtype=float)
    pump = PumpSpec(tuple(omega0 * ax), omega0, g)
    # pair j: signal omega_c1 + j dw with idler omega_c2 - j dw
    pairs = tuple((j, n + (n - 1 - j)) for j in range(n))
    modes = list(sig_modes) + list(idl_modes)
    scales = np.concatenate([sig_scales, idl_scales])
    PhaseMatchedPairs(pairs).validate(tuple(modes), pump)
    mask_sig = np.concatenate([np.ones(n), np.zeros(n)])
    mask_idl = 1.0 - mask_sig
    resp_sig = (response_matrix(modes, scales, det_signal) @ sp.diags(mask_sig)).tocsr()
    resp_idl = (response_matrix(modes, scales, det_idler) @ sp.diags(mask_idl)).tocsr()
    excess = g * g + g**4 / 8.0
    return Scenario(
        modes=tuple(modes),
        scales=scales,
        ops=(("pdc", pairs, g),),
        detector_names=tuple(names),
        detector_specs=(det_signal, det_idler),
        responses=(resp_sig, resp_idl),
        coincidences=((0, 1),),
        signal_means=(2.0 * det_signal.I0 * excess, 2.0 * det_idler.I0 * excess),
    )


def chsh_scenario(det_station1: DetectorSpec, det_station2: DetectorSpec, g: float):
    """Two polarization-analyzed stations fed by cross-polarized PDC pairs.

    Station s carries two polarization modes (H, V) per frequency slot; the
    crystal couples (1H, 2V) and (1V, 2H) slot-wise. Each station splits
    into '+' (H after rotation) and '-' (V after rotation) detectors.

    Returns (scenario, rotator_pairs_station1, rotator_pairs_station2);
    rotator ops for a concrete analyzer setting are appended per variant.
    """
    if det_station1.window != det_station2.window:
        raise ValueError("stations must share the window T")
    if det_station1.n_elements != det_station2.n_elements:
        raise ValueError("stations must have equal slot counts")
    n = det_station1.n_elements
    if abs(det_station1.omega_center - det_station2.omega_center) < 4.0 * max(
            det_station1.bandwidth, det_station2.bandwidth):
        raise ValueError("station bands must be well separated")
    omega0 = det_station1.omega_center + det_station2.omega_center
    ax = np.asarray(det_station1.axis, dtype=float)
    if det_station1.axis != det_station2.axis:
        raise ValueError("collinear scenario requires a common detector axis")
    pump = PumpSpec(tuple(omega0 * ax), omega0, g)

    modes: list[Mode] = []
    scales_parts = []
    for det in (det_station1, det_station2):
        base_modes, base_scales = _matched_beam(det, None, polarization=0)
        for bm in base_modes:
            modes.append(bm)
            modes.append(Mode(bm.k, bm.omega, 1))
        scales_parts.append(np.repeat(base_scales, 2))
    scales = np.concatenate(scales_parts)

    # index layout: station 1 slots [2j (H), 2j+1 (V)], station 2 offset 2n
    off = 2 * n
    pdc_pairs = []
    for j in range(n):
        jm = n - 1 - j   # frequency-mirrored slot on station 2
        pdc_pairs.append((2 * j, off + 2 * jm + 1))      # 1H with 2V
        pdc_pairs.append((2 * j + 1, off + 2 * jm))      # 1V with 2H
    pdc_pairs = tuple(pdc_pairs)
    PhaseMatchedPairs(pdc_pairs).validate(tuple(modes), pump)

    rot1 = tuple((2 * j, 2 * j + 1) for j in range(n))
    rot2 = tuple((off + 2 * j, off + 2 * j + 1) for j in range(n))

    n_modes = len(modes)
    det_specs, names, responses = [], [], []
    for det, (lo, pol) in (
        (det_station1, (0, 0)), (det_station1, (0, 1)),
        (det_station2, (off, 0)), (det_station2, (off, 1)),
    ):
        mask = np.zeros(n_modes)
        mask[lo + pol: lo + 2 * n: 2] = 1.0
        resp = (response_matrix(modes, scales, det) @ sp.diags(mask)).tocsr()
        det_specs.append(det)
        responses.append(resp)
    names = ("1+", "1-", "2+", "2-")
    coinc = ((0, 2), (0, 3), (1, 2), (1, 3))
    excess = g * g + g**4 / 8.0
    scenario = Scenario(
        modes=tuple(modes),
        scales=scales,
        ops=(("pdc", pdc_pairs, g),),
        detector_names=names,
        detector_specs=tuple(det_specs),
        responses=tuple(responses),
        coincidences=coinc,
        signal_means=tuple(2.0 * d.I0 * excess for d in det_specs),
    )
    return scenario, rot1, rot2
