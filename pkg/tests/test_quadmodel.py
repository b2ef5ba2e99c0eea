import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from niquad.quadmodel import (ControlInput4, EulerAngles, HorizState, QuadParams, State12,
                              euler_rate_map, full_dynamics, reshaped_horizontal_dynamics,
                              rotation_body_to_inertial, storage_value)
from niquad.simulator import rk4_step

angles = st.floats(min_value=-1.5, max_value=1.5, allow_nan=False)
yaws = st.floats(min_value=-3.1, max_value=3.1, allow_nan=False)


def _elementary_rotation_oracle(phi, theta, psi):
    # independent oracle: compose Rz(psi) @ Ry(theta) @ Rx(phi)
    rx = np.array([[1, 0, 0],
                   [0, math.cos(phi), -math.sin(phi)],
                   [0, math.sin(phi), math.cos(phi)]])
    ry = np.array([[math.cos(theta), 0, math.sin(theta)],
                   [0, 1, 0],
                   [-math.sin(theta), 0, math.cos(theta)]])
    rz = np.array([[math.cos(psi), -math.sin(psi), 0],
                   [math.sin(psi), math.cos(psi), 0],
                   [0, 0, 1]])
    return rz @ ry @ rx


class TestRotation:
    def test_identity_at_zero(self):
        np.testing.assert_array_equal(rotation_body_to_inertial(EulerAngles()), np.eye(3))

    def test_pure_yaw_quarter_turn(self):
        r = rotation_body_to_inertial(EulerAngles(0.0, 0.0, math.pi / 2))
        expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
        np.testing.assert_allclose(r, expected, atol=1e-15)

    @given(phi=angles, theta=angles, psi=yaws)
    def test_matches_elementary_composition(self, phi, theta, psi):
        r = rotation_body_to_inertial(EulerAngles(phi, theta, psi))
        np.testing.assert_allclose(r, _elementary_rotation_oracle(phi, theta, psi), atol=1e-14)

    @given(phi=angles, theta=angles, psi=yaws)
    def test_special_orthogonal(self, phi, theta, psi):
        r = rotation_body_to_inertial(EulerAngles(phi, theta, psi))
        np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)
        assert abs(np.linalg.det(r) - 1.0) < 1e-12


class TestEulerRateMap:
    def test_identity_at_zero(self):
        np.testing.assert_array_equal(euler_rate_map(EulerAngles()), np.eye(3))

    @given(phi=angles, theta=angles, psi=yaws)
    def test_determinant_is_cos_theta(self, phi, theta, psi):
        w = euler_rate_map(EulerAngles(phi, theta, psi))
        # cofactor expansion along the first column as an independent oracle
        cofactor = w[1, 1] * w[2, 2] - w[1, 2] * w[2, 1]
        assert abs(cofactor - math.cos(theta)) < 1e-12
        assert abs(np.linalg.det(w) - math.cos(theta)) < 1e-12

    def test_near_singular_warns(self):
        with pytest.warns(RuntimeWarning, match="near-singular"):
            euler_rate_map(EulerAngles(0.0, math.pi / 2 - 1e-9, 0.0))

    def test_regular_angle_does_not_warn(self):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            euler_rate_map(EulerAngles(0.2, 0.4, 1.0))


class TestAngleBounds:
    def test_roll_bound(self):
        with pytest.raises(ValueError, match="phi"):
            EulerAngles(phi=math.pi / 2)

    def test_pitch_bound(self):
        with pytest.raises(ValueError, match="theta"):
            EulerAngles(theta=-math.pi / 2)

    def test_yaw_halfopen_interval(self):
        EulerAngles(psi=math.pi)  # pi is included
        with pytest.raises(ValueError, match="psi"):
            EulerAngles(psi=-math.pi)

    def test_state12_checks_angles(self):
        with pytest.raises(ValueError, match="theta"):
            State12(theta=2.0)

    def test_thrust_nonnegative(self):
        with pytest.raises(ValueError, match="u1"):
            ControlInput4(u1=-1.0)

    def test_horiz_state_finite(self):
        with pytest.raises(ValueError, match="finite"):
            HorizState(x2=math.inf)


class TestFullDynamics:
    def test_hover_equilibrium(self, bench_quad):
        u = ControlInput4(u1=bench_quad.m * bench_quad.g)
        deriv = full_dynamics(State12(), u, bench_quad)
        np.testing.assert_array_equal(deriv, np.zeros(12))

    def test_free_fall(self, bench_quad):
        deriv = full_dynamics(State12(), ControlInput4(), bench_quad)
        expected = np.zeros(12)
        expected[5] = 9.81
        np.testing.assert_array_equal(deriv, expected)

    def test_symmetric_inertia_kills_yaw_coupling(self, bench_quad):
        # jx == jy makes the yaw coupling coefficient (jx - jy)/jz vanish
        assert bench_quad.a5 == 0.0
        x = State12(phidot=1.0, thetadot=1.0)
        deriv = full_dynamics(x, ControlInput4(), bench_quad)
        assert deriv[11] == 0.0

    def test_gyroscopic_and_torque_rows(self, bench_quad):
        # roll-rate row: thetadot*psidot*a1 - thetadot*a2*omega_bar + b1*u2
        x = State12(phidot=0.3, thetadot=0.7, psidot=-1.1)
        u = ControlInput4(u1=0.0, u2=0.02, u3=-0.03, u4=0.05)
        omega_bar = 40.0
        p = bench_quad
        deriv = full_dynamics(x, u, p, omega_bar=omega_bar)
        assert deriv[7] == pytest.approx(0.7 * -1.1 * p.a1 - 0.7 * p.a2 * omega_bar + p.b1 * 0.02, abs=1e-15)
        assert deriv[9] == pytest.approx(0.3 * -1.1 * p.a3 + 0.3 * p.a4 * omega_bar + p.b2 * -0.03, abs=1e-15)
        assert deriv[11] == pytest.approx(0.7 * 0.3 * p.a5 + p.b3 * 0.05, abs=1e-15)

    @settings(max_examples=50)
    @given(du2=st.floats(-2, 2), du3=st.floats(-2, 2), du4=st.floats(-2, 2))
    def test_linear_in_torque_channels(self, bench_quad, du2, du3, du4):
        x = State12(x=1.0, xdot=-0.5, y=0.3, z=2.0, phi=0.2, phidot=0.4,
                    theta=-0.3, thetadot=0.1, psi=0.7, psidot=-0.2)
        u0 = ControlInput4(u1=3.0, u2=0.1, u3=0.2, u4=-0.1)
        u1 = ControlInput4(u1=3.0, u2=0.1 + du2, u3=0.2 + du3, u4=-0.1 + du4)
        diff = full_dynamics(x, u1, bench_quad) - full_dynamics(x, u0, bench_quad)
        expected = np.zeros(12)
        expected[7] = bench_quad.b1 * du2
        expected[9] = bench_quad.b2 * du3
        expected[11] = bench_quad.b3 * du4
        np.testing.assert_allclose(diff, expected, atol=1e-12)

    def test_quadparams_positive(self):
        with pytest.raises(ValueError, match="jx"):
            QuadParams(jx=0.0)
        with pytest.raises(ValueError, match="m"):
            QuadParams(m=-0.5)


class TestReshapedHorizontal:
    def test_restoring_acceleration(self, bench_quad):
        s = HorizState(1.0, 0.0, 0.0, 0.0)
        deriv = reshaped_horizontal_dynamics(s, (0.0, 0.0), (5.0, 5.0), bench_quad)
        np.testing.assert_array_equal(deriv, [0.0, -5.0, 0.0, 0.0])

    def test_force_over_mass(self, bench_quad):
        deriv = reshaped_horizontal_dynamics(HorizState(), (1.0, 0.0), (5.0, 5.0), bench_quad)
        np.testing.assert_array_equal(deriv, [0.0, 2.0, 0.0, 0.0])

    def test_constant_force_equilibrium(self, bench_quad):
        # F = m * kp * xi balances the restoring term exactly
        xbar, ybar = 0.7, -0.4
        kp = (5.0, 8.0)
        f = (bench_quad.m * kp[0] * xbar, bench_quad.m * kp[1] * ybar)
        deriv = reshaped_horizontal_dynamics(HorizState(xbar, 0.0, ybar, 0.0), f, kp, bench_quad)
        np.testing.assert_allclose(deriv, np.zeros(4), atol=1e-15)

    def test_rejects_nonpositive_gains(self, bench_quad):
        with pytest.raises(ValueError, match="positive"):
            reshaped_horizontal_dynamics(HorizState(), (0.0, 0.0), (0.0, 5.0), bench_quad)

    def test_zero_state_observable_axis(self):
        # position-only output: observability matrix [[C], [C A]] has full rank
        for kp in (0.5, 5.0, 20.0):
            a = np.array([[0.0, 1.0], [-kp, 0.0]])
            c = np.array([[1.0, 0.0]])
            obs = np.vstack([c, c @ a])
            assert np.linalg.matrix_rank(obs) == 2


class TestStorage:
    def test_zero_at_origin(self, bench_quad):
        assert storage_value(HorizState(), (5.0, 5.0), bench_quad) == 0.0

    def test_positional_term_mass_weighted(self, bench_quad):
        # 1/2 * m * kp * x^2 = 0.5 * 0.5 * 5 * 1
        assert storage_value(HorizState(1.0, 0.0, 0.0, 0.0), (5.0, 5.0), bench_quad) == 1.25

    def test_unweighted_variant(self, bench_quad):
        v = storage_value(HorizState(1.0, 0.0, 0.0, 0.0), (5.0, 5.0), bench_quad,
                          mass_weighted=False)
        assert v == 2.5

    @given(x1=st.floats(-5, 5), x2=st.floats(-5, 5), x3=st.floats(-5, 5), x4=st.floats(-5, 5))
    def test_positive_definite(self, bench_quad, x1, x2, x3, x4):
        s = HorizState(x1, x2, x3, x4)
        v = storage_value(s, (5.0, 2.0), bench_quad)
        assert v >= 0.0
        if (x1, x2, x3, x4) != (0.0, 0.0, 0.0, 0.0):
            assert v > 0.0

    def test_conserved_without_forcing(self, bench_quad):
        # unforced subsystem is an undamped oscillator pair; V is a first integral
        kp = (5.0, 5.0)
        dt, n = 1e-3, 3000
        state = np.array([1.0, 0.0, -0.5, 0.0])
        v0 = storage_value(HorizState(*state), kp, bench_quad)

        def f(_t, s):
            return reshaped_horizontal_dynamics(HorizState(*s), (0.0, 0.0), kp, bench_quad)

        omega = math.sqrt(5.0)
        for k in range(n):
            state = rk4_step(f, state, k * dt, dt)
        t = n * dt
        # closed-form harmonic solution as the reference
        np.testing.assert_allclose(
            state,
            [math.cos(omega * t), -omega * math.sin(omega * t),
             -0.5 * math.cos(omega * t), 0.5 * omega * math.sin(omega * t)],
            atol=1e-8)
        v_end = storage_value(HorizState(*state), kp, bench_quad)
        assert abs(v_end - v0) < 1e-8
