import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad
from scipy.special import j0
from scipy.stats import norm

from zpfsim.detection import (
    BivariateIntensityDist,
    DetectorSpec,
    EffectiveIntensityDist,
    effective_intensity,
    empirical_corr,
    filtered_field,
    intensity_batch,
    p_joint,
    p_single,
    q_model,
    q_standard,
    response_matrix,
    rho_signal,
    rho_vacuum,
)
from zpfsim.field import FieldState, Mode, sample_vacuum_batch

from conftest import detector

# shared across hypothesis examples (construction is deterministic)
_BOUNDEDNESS_DETECTOR = detector(zeta_sigma=10.0)


def single_element_detector(omega_el=0.9, radius=2.0, length=3.0, window=5.0):
    """One explicit element; threshold far above I0 to satisfy validation."""
    return DetectorSpec(
        radius=radius, length=length, window=window, tau=window,
        omega_center=omega_el, threshold=1e6,
        element_omegas=np.array([omega_el]),
        element_kvecs=np.array([[0.0, 0.0, omega_el]]),
    )


class TestDetectorSpec:
    def test_threshold_below_vacuum_mean_rejected(self):
        with pytest.raises(ValueError, match="Q positive"):
            detector(threshold_sigma=-1.0)

    def test_tau_exceeding_window_rejected(self):
        with pytest.raises(ValueError, match="tau"):
            DetectorSpec(radius=1.0, length=1.0, window=1.0, tau=2.0,
                         omega_center=1.0, threshold=1.0)

    def test_eta_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="efficiency"):
            detector(eta=1.5)

    def test_vacuum_law_formulas(self):
        det = detector(n_cells=50, omega_center=2.0, window=100.0, length=4.0)
        tau = 100.0 / 50
        bw = 2 * math.pi / tau
        assert det.I0 == pytest.approx(2.0 * bw / (8 * math.pi * 4.0), rel=1e-12)
        assert det.sigma0 == pytest.approx(det.I0 * math.sqrt(tau / 100.0), rel=1e-12)

    def test_default_zeta_from_eta(self):
        det = DetectorSpec.matched(radius=2.0, length=1.0, window=50.0, tau=0.5,
                                   omega_center=4.0, threshold=1e6, eta=0.25)
        assert det.zeta == pytest.approx(0.25 * math.pi * 4.0 * 50.0 / 4.0, rel=1e-12)

    def test_matched_grid_spacing(self):
        det = detector(n_cells=8, window=16.0 * math.pi)
        dw = np.diff(det.element_omegas)
        assert np.allclose(dw, 2 * math.pi / det.window)
        assert np.mean(det.element_omegas) == pytest.approx(det.omega_center)
        # k vectors along the axis with |k| = omega
        assert np.allclose(det.element_kvecs[:, 2], det.element_omegas)

    def test_too_few_elements_warns(self):
        with pytest.warns(UserWarning, match="band-resolving"):
            DetectorSpec.matched(n_elements=4, radius=1.0, length=1.0, window=100.0,
                                 tau=1.0, omega_center=50.0, threshold=1e6)


class TestFilteredField:
    def test_matched_mode_gives_unit_response(self):
        det = detector(n_cells=8, window=16.0 * math.pi)
        modes = [Mode(tuple(k), float(w)) for k, w
                 in zip(det.element_kvecs, det.element_omegas)]
        amps = np.zeros(8, dtype=complex)
        amps[3] = 1.5 - 0.5j
        state = FieldState(tuple(modes), amps, np.ones(8))
        # the mode sits exactly on element 3: full response there, sinc zeros elsewhere
        assert filtered_field(state, 3, det) == pytest.approx(amps[3], rel=1e-12)
        for el in (0, 1, 5, 7):
            assert abs(filtered_field(state, el, det)) < 1e-12

    def test_element_index_validated(self):
        det = detector(n_cells=4, window=8.0 * math.pi)
        mode = Mode((0.0, 0.0, 1.0), 1.0)
        state = FieldState((mode,), np.array([1.0 + 0j]), np.array([1.0]))
        with pytest.raises(ValueError, match="element"):
            filtered_field(state, 4, det)

    def test_against_brute_force_filter_integral(self):
        # oracle: the defining window integral, evaluated as three independent
        # 1-D quadratures (time, axial, radial with the J0 disc identity)
        det = single_element_detector()
        k = (0.6, 0.0, 0.8)
        mode = Mode(k, 1.0)
        alpha, scale = 0.7 - 0.3j, 1.3
        state = FieldState((mode,), np.array([alpha]), np.array([scale]))

        dw = mode.omega - det.element_omegas[0]
        re_t, _ = quad(lambda t: math.cos(dw * t) / det.window, 0.0, det.window)
        im_t, _ = quad(lambda t: math.sin(dw * t) / det.window, 0.0, det.window)
        dpar = k[2] - det.element_kvecs[0, 2]
        dperp = math.hypot(k[0] - det.element_kvecs[0, 0], k[1] - det.element_kvecs[0, 1])
        z_int, _ = quad(lambda z: math.cos(dpar * z) / det.length,
                        -det.length / 2, det.length / 2)
        r_int, _ = quad(lambda r: j0(dperp * r) * 2.0 * r / det.radius**2,
                        0.0, det.radius)
        expected = scale * alpha * complex(re_t, im_t) * z_int * r_int

        got = filtered_field(state, 0, det)
        assert got == pytest.approx(expected, rel=1e-10)
        assert abs(got) < abs(scale * alpha)   # filtering can only attenuate

    def test_effective_intensity_sums_elements(self):
        det = detector(n_cells=8, window=16.0 * math.pi)
        modes = [Mode(tuple(k), float(w)) for k, w
                 in zip(det.element_kvecs, det.element_omegas)]
        rng = np.random.default_rng(0)
        amps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        state = FieldState(tuple(modes), amps, np.full(8, 0.7))
        expected = sum(abs(filtered_field(state, el, det)) ** 2 for el in range(8))
        assert effective_intensity(state, det) == pytest.approx(expected, rel=1e-10)


class TestResponseMatrix:
    def test_matched_grid_is_diagonal(self):
        det = detector(n_cells=32)
        modes = [Mode(tuple(k), float(w)) for k, w
                 in zip(det.element_kvecs, det.element_omegas)]
        scales = np.linspace(0.5, 1.5, 32)
        resp = response_matrix(modes, scales, det)
        assert resp.nnz == 32
        assert np.allclose(resp.diagonal(), scales)

    def test_intensity_batch_matches_dense(self):
        det = detector(n_cells=16)
        modes = [Mode(tuple(k), float(w)) for k, w
                 in zip(det.element_kvecs, det.element_omegas)]
        scales = np.linspace(0.5, 1.5, 16)
        resp = response_matrix(modes, scales, det)
        amps = sample_vacuum_batch(16, seed=2, trial_indices=range(40))
        dense = np.sum(np.abs(amps @ resp.toarray().T) ** 2, axis=1)
        assert np.allclose(intensity_batch(amps, resp), dense, rtol=1e-12)


class TestResponseModels:
    def test_zero_at_and_below_threshold(self, small_detector):
        det = small_detector
        assert q_model(det.threshold, det) == 0.0
        assert q_model(det.threshold - det.sigma0, det) == 0.0
        assert q_model(0.0, det) == 0.0

    def test_linear_limit_above_threshold(self, small_detector):
        det = small_detector
        i = det.threshold + det.sigma0
        expected = -math.expm1(-det.zeta * (i - det.I0))
        assert q_model(i, det) == pytest.approx(expected, rel=1e-12)
        # small zeta: q ~ zeta (I - I0) up to the second-order term
        assert q_model(i, det) == pytest.approx(det.zeta * (i - det.I0), rel=5e-2)

    @given(x=st.floats(min_value=0.0, max_value=1e6, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_model_bounded_on_any_intensity(self, x):
        det = _BOUNDEDNESS_DETECTOR
        q = q_model(x * det.I0, det)
        assert 0.0 <= q < 1.0

    def test_standard_response_unbounded(self, small_detector):
        det = small_detector
        big = DetectorSpec.matched(
            radius=1.0, length=det.length, window=det.window, tau=det.tau,
            omega_center=det.omega_center, threshold=det.threshold,
            zeta_override=3.0 / det.sigma0)
        assert q_standard(det.I0 - det.sigma0, big) < 0.0
        assert q_standard(det.I0 + det.sigma0, big) > 1.0
        # while the bounded model stays in [0, 1) at the same intensities
        assert q_model(det.I0 - det.sigma0, big) == 0.0
        assert 0.0 <= q_model(det.I0 + det.sigma0, big) < 1.0

    def test_array_and_scalar_shapes(self, small_detector):
        det = small_detector
        arr = q_model(np.array([0.0, det.threshold, det.threshold + det.sigma0]), det)
        assert arr.shape == (3,)
        assert isinstance(q_model(det.threshold, det), float)


class TestIntensityLaws:
    def test_dist_validation(self):
        with pytest.raises(ValueError, match="sigma"):
            EffectiveIntensityDist(1.0, 0.0)
        with pytest.raises(ValueError, match="kind"):
            EffectiveIntensityDist(1.0, 1.0, "thermal")
        with pytest.raises(ValueError, match="correlation"):
            BivariateIntensityDist(EffectiveIntensityDist(1.0, 1.0),
                                   EffectiveIntensityDist(1.0, 1.0), 1.5)

    def test_pdf_matches_scipy_norm(self):
        dist = EffectiveIntensityDist(2.0, 0.3)
        x = np.linspace(1.0, 3.0, 7)
        assert np.allclose(dist.pdf(x), norm.pdf(x, 2.0, 0.3), rtol=1e-12)

    def test_vacuum_and_signal_laws(self, small_detector):
        det = small_detector
        vac = rho_vacuum(det)
        assert (vac.mean, vac.sigma, vac.kind) == (det.I0, det.sigma0, "vacuum")
        sig = rho_signal(det, 2.5 * det.sigma0)
        assert sig.mean == pytest.approx(det.I0 + 2.5 * det.sigma0)
        assert sig.sigma == det.sigma0
        assert sig.kind == "signal"
        assert rho_signal(det, 0.0).kind == "vacuum"
        with pytest.raises(ValueError, match="non-negative"):
            rho_signal(det, -1.0)


class TestDetectionProbabilities:
    def test_saturated_limit_equals_gaussian_tail(self):
        # huge gain: p -> P(I > I_m), the threshold-crossing probability
        det = detector(n_cells=100, threshold_sigma=1.0, zeta_sigma=1e6)
        p = p_single(rho_signal(det, 3.0 * det.sigma0), det)
        tail = norm.sf(det.threshold, det.I0 + 3.0 * det.sigma0, det.sigma0)
        assert p == pytest.approx(tail, rel=1e-6)

    def test_dark_probability_below_gaussian_tail(self, small_detector):
        det = small_detector
        p = p_single(rho_vacuum(det), det)
        assert 0.0 < p <= norm.sf(5.0)

    def test_joint_factorizes_at_zero_corr(self):
        d1 = detector(n_cells=100, threshold_sigma=2.0, zeta_sigma=0.5)
        d2 = detector(n_cells=100, threshold_sigma=1.0, zeta_sigma=0.2)
        r1 = rho_signal(d1, 4.0 * d1.sigma0)
        r2 = rho_signal(d2, 2.0 * d2.sigma0)
        joint = p_joint(BivariateIntensityDist(r1, r2, 0.0), d1, d2)
        assert joint == pytest.approx(p_single(r1, d1) * p_single(r2, d2), rel=1e-8)

    def test_perfect_corr_identical_arms_collapses(self):
        det = detector(n_cells=100, threshold_sigma=1.5, zeta_sigma=1e6)
        r = rho_signal(det, 3.0 * det.sigma0)
        # saturated responses: joint click prob = single click prob on the diagonal
        joint = p_joint(BivariateIntensityDist(r, r, 1.0), det, det)
        assert joint == pytest.approx(p_single(r, det), rel=1e-6)

    def test_against_dblquad_oracle_at_half_corr(self):
        d1 = detector(n_cells=100, threshold_sigma=1.0, zeta_sigma=0.8)
        d2 = detector(n_cells=100, threshold_sigma=0.5, zeta_sigma=0.4)
        r1 = rho_signal(d1, 3.0 * d1.sigma0)
        r2 = rho_signal(d2, 2.0 * d2.sigma0)
        c = 0.5
        dist = BivariateIntensityDist(r1, r2, c)

        def pdf2(x1, x2):
            z1 = (x1 - r1.mean) / r1.sigma
            z2 = (x2 - r2.mean) / r2.sigma
            expo = -(z1 * z1 - 2 * c * z1 * z2 + z2 * z2) / (2 * (1 - c * c))
            return math.exp(expo) / (2 * math.pi * r1.sigma * r2.sigma * math.sqrt(1 - c * c))

        oracle, _ = dblquad(
            lambda x2, x1: pdf2(x1, x2) * q_model(x1, d1) * q_model(x2, d2),
            d1.threshold, r1.mean + 10 * r1.sigma,
            d2.threshold, r2.mean + 10 * r2.sigma,
        )
        assert p_joint(dist, d1, d2) == pytest.approx(oracle, rel=1e-6)

    def test_positive_corr_raises_coincidences(self):
        det = detector(n_cells=100, threshold_sigma=1.0, zeta_sigma=0.5)
        r = rho_signal(det, 3.0 * det.sigma0)
        ps = [p_joint(BivariateIntensityDist(r, r, c), det, det)
              for c in (-0.5, 0.0, 0.5, 0.9)]
        assert ps == sorted(ps)


class TestEmpiricalCorr:
    def test_matches_numpy_on_known_sample(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal(500)
        y = 0.6 * x + 0.8 * rng.standard_normal(500)
        samples = np.stack([x, y], axis=1)
        assert empirical_corr(samples) == pytest.approx(np.corrcoef(x, y)[0, 1], rel=1e-12)

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="shape"):
            empirical_corr(np.zeros((1, 2)))
        with pytest.raises(ValueError, match="shape"):
            empirical_corr(np.zeros((5, 3)))
