import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from array_geometry import UraGeometry, steering_vector
from exceptions import DomainError
from location_model import (
    LocationError,
    Position3D,
    UncertaintyBall,
    effective_aods_from_positions,
    error_sensitivity,
    error_vector,
    estimated_reflect_channel,
    exact_reflect_channel,
    exact_reflect_vectors,
    linearized_aod_error,
    model_reflect_vectors,
    sample_error,
    sample_errors,
)

IRS = Position3D(0.0, 0.0, 0.0)
USER = Position3D(20.0, 20.0, -20.0)
GEOM = UraGeometry(4, 4)


class TestEffectiveAods:

    def test_reference_position(self):
        angles, d = effective_aods_from_positions(IRS, USER)
        assert_allclose(d, 20 * np.sqrt(3))
        assert_allclose(angles.v_y, -1 / np.sqrt(3))
        assert_allclose(angles.v_z, 1 / np.sqrt(3))

    def test_along_x_axis(self):
        angles, _ = effective_aods_from_positions(IRS, Position3D(-10.0, 0.0, 0.0))
        assert_allclose([angles.v_z, angles.v_y], [0.0, 0.0], atol=1e-15)

    def test_direction_cosine_bound(self):
        rng = np.random.default_rng(0)
        for p in rng.uniform(-50, 50, size=(50, 3)):
            angles, _ = effective_aods_from_positions(IRS, Position3D(*p))
            assert angles.v_y ** 2 + angles.v_z ** 2 <= 1.0 + 1e-12

    def test_coincident_positions(self):
        with pytest.raises(DomainError):
            effective_aods_from_positions(IRS, IRS)


class TestReflectChannel:

    def test_zero_error_is_exact(self):
        g_hat = estimated_reflect_channel(IRS, USER, 0.3 + 0.1j, GEOM)
        g_true = exact_reflect_channel(IRS, USER, LocationError(np.zeros(3)), 0.3 + 0.1j, GEOM)
        assert_allclose(g_true.vector, g_hat.vector)

    def test_constant_modulus(self):
        g_hat = estimated_reflect_channel(IRS, USER, 0.3 + 0.1j, GEOM)
        assert_allclose(np.abs(g_hat.vector), abs(0.3 + 0.1j))

    def test_angles_follow_position(self):
        g_hat = estimated_reflect_channel(IRS, USER, 1.0, GEOM)
        angles, _ = effective_aods_from_positions(IRS, USER)
        assert_allclose(g_hat.vector, steering_vector(GEOM, angles))

    def test_batch_matches_single(self):
        deltas = sample_errors(UncertaintyBall(4.0), 5, 7)
        batch = exact_reflect_vectors(IRS, USER, deltas, 0.5j, GEOM)
        for row, delta in zip(batch, deltas):
            assert_allclose(row, exact_reflect_channel(IRS, USER, LocationError(delta), 0.5j, GEOM).vector)


class TestSensitivity:

    def test_first_row_is_zero(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        assert_array_equal(sens.f[0], np.zeros(3))

    def test_second_row(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        v_x, v_y, v_z = sens.v_hat
        d = sens.d_hat
        assert_allclose(sens.f[1], [v_z * v_x / d, v_z * v_y / d, (v_z ** 2 - 1) / d])

    def test_linearized_angles(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        base, _ = effective_aods_from_positions(IRS, USER)
        delta = LocationError([1e-3, -2e-3, 1.5e-3])
        moved, _ = effective_aods_from_positions(IRS, USER.shifted(delta))
        eps_z, eps_y = linearized_aod_error(sens, delta)
        assert_allclose([moved.v_z - base.v_z, moved.v_y - base.v_y], [eps_z, eps_y], atol=1e-7)

    def test_rows_match_linearized_angles(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        delta = LocationError([0.3, -0.1, 0.2])
        eps_z, eps_y = linearized_aod_error(sens, delta)
        i_m = np.tile(np.arange(4), 4)
        i_n = np.repeat(np.arange(4), 4)
        assert_allclose(sens.f @ delta.delta, i_m * eps_z + i_n * eps_y, atol=1e-14)


class TestErrorVector:

    def test_zero_error(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        assert_allclose(error_vector(sens, LocationError(np.zeros(3))), np.ones(16))

    def test_unit_modulus(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        assert_allclose(np.abs(error_vector(sens, LocationError([1.0, 2.0, -3.0]))), 1.0)

    def test_phase_error_is_second_order(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        g_hat = estimated_reflect_channel(IRS, USER, 1.0, GEOM)
        direction = np.array([0.6, -0.48, 0.64])
        errors = []
        for scale in (0.2, 0.1):
            deltas = (scale * direction)[None, :]
            exact = exact_reflect_vectors(IRS, USER, deltas, 1.0, GEOM)[0]
            model = model_reflect_vectors(g_hat, sens, deltas)[0]
            errors.append(np.linalg.norm(exact / np.abs(exact) - model))
        assert 3.0 <= errors[0] / errors[1] <= 5.0

    def test_opposite_error_conjugates(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        delta = LocationError([0.4, -1.1, 0.7])
        assert_allclose(error_vector(sens, -delta), np.conj(error_vector(sens, delta)))

    def test_model_tracks_exact_phases(self):
        sens = error_sensitivity(IRS, USER, GEOM)
        g_hat = estimated_reflect_channel(IRS, USER, 1.0, GEOM)
        rng = np.random.default_rng(8)
        directions = rng.standard_normal((200, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        for scale in (0.01, 0.05):
            deltas = scale * sens.d_hat * directions
            exact = exact_reflect_vectors(IRS, USER, deltas, 1.0, GEOM)
            # the model keeps the estimated path loss
            exact /= np.abs(exact)
            model = model_reflect_vectors(g_hat, sens, deltas)
            relative = np.linalg.norm(exact - model, axis=1) / np.linalg.norm(exact, axis=1)
            assert relative.max() <= 0.05


class TestSampling:

    def test_zero_radius(self):
        assert_array_equal(sample_errors(UncertaintyBall(0.0), 4, 0), np.zeros((4, 3)))
        assert_array_equal(sample_error(UncertaintyBall(0.0), 0).delta, np.zeros(3))

    def test_inside_ball(self):
        deltas = sample_errors(UncertaintyBall(4.0), 10000, 1)
        assert np.all(np.linalg.norm(deltas, axis=1) <= 4.0 + 1e-12)

    def test_uniform_radial_law(self):
        deltas = sample_errors(UncertaintyBall(4.0), 100000, 2)
        ratio = np.mean(np.linalg.norm(deltas, axis=1) ** 3 / 4.0 ** 3)
        assert_allclose(ratio, 0.5, rtol=0.02)

    def test_seeded(self):
        assert_array_equal(sample_errors(UncertaintyBall(1.0), 5, 11), sample_errors(UncertaintyBall(1.0), 5, 11))

    def test_negative_radius(self):
        with pytest.raises(DomainError):
            UncertaintyBall(-1.0)
