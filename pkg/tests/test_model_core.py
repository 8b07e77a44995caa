import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CHAOTIC, FOCI, SINK, random_params
from sociolorenz.model_core import (
    Branch,
    BranchError,
    InvalidParameterError,
    ParamSet,
    State,
    absorbing_ball,
    char_coeffs_nontrivial,
    divergence,
    equilibria,
    hopf_threshold,
    jacobian,
    lyapunov_v,
    lyapunov_v_dot,
    pitchfork_amplitude,
    symmetry_map,
    vector_field,
)

positive = st.floats(min_value=1e-3, max_value=50.0, allow_nan=False)
coord = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


@pytest.mark.parametrize(
    "triple",
    [(0, 1, 1), (1, -1, 1), (1, 1, 0), (float("nan"), 1, 1), (1, float("inf"), 1), ("x", 1, 1)],
)
def test_paramset_rejects_invalid(triple):
    with pytest.raises(InvalidParameterError):
        ParamSet(*triple)


def test_state_rejects_non_finite():
    with pytest.raises(InvalidParameterError):
        State(0.0, float("nan"), 0.0)
    with pytest.raises(InvalidParameterError):
        State.from_sequence([1.0, 2.0])


class TestVectorField:
    def test_origin(self):
        assert np.array_equal(vector_field(CHAOTIC, (0, 0, 0)), [0, 0, 0])

    def test_hand_substitution(self):
        np.testing.assert_allclose(vector_field(CHAOTIC, (1, 1, 1)), [0, 26, -5 / 3], rtol=0, atol=1e-15)
        np.testing.assert_array_equal(vector_field(ParamSet(2, 0.5, 1), (1, 0, 0)), [-2, 0.5, 0])

    def test_accepts_state(self):
        np.testing.assert_array_equal(vector_field(CHAOTIC, State(1, 1, 1)), vector_field(CHAOTIC, [1, 1, 1]))

    def test_rejects_bad_shape(self):
        with pytest.raises(InvalidParameterError):
            vector_field(CHAOTIC, (1, 2))


class TestJacobian:
    def test_at_origin(self):
        expected = [[-10, 10, 0], [28, -1, 0], [0, 0, -8 / 3]]
        np.testing.assert_array_equal(jacobian(CHAOTIC, (0, 0, 0)), expected)

    def test_at_nontrivial_equilibrium(self):
        alpha = math.sqrt(51.3)
        for sign in (1, -1):
            jac = jacobian(FOCI, (sign * alpha, sign * alpha, 19.0))
            expected = [[-10, 10, 0], [1, -1, -sign * alpha], [sign * alpha, sign * alpha, -2.7]]
            np.testing.assert_allclose(jac, expected, rtol=0, atol=1e-14)

    def test_central_differences(self, rng):
        step = 1e-7
        # states at attractor scale; larger magnitudes make step 1e-7 roundoff-limited
        for p in random_params(rng, 100):
            x = rng.uniform(-10, 10, size=3)
            fd = np.empty((3, 3))
            for j in range(3):
                e = np.zeros(3)
                e[j] = step
                fd[:, j] = (vector_field(p, x + e) - vector_field(p, x - e)) / (2 * step)
            np.testing.assert_allclose(jacobian(p, x), fd, rtol=0, atol=1e-6)

    @given(positive, positive, positive, coord, coord, coord)
    def test_trace_is_divergence(self, s, r, b, t, i, m):
        p = ParamSet(s, r, b)
        assert np.trace(jacobian(p, (t, i, m))) == pytest.approx(-(s + 1 + b), rel=1e-14)
        assert divergence(p) == -(s + 1 + b)


class TestEquilibria:
    def test_sink_has_only_origin(self):
        eqs = equilibria(SINK)
        assert [e.branch for e in eqs] == [Branch.P0]
        assert tuple(eqs[0].point) == (0.0, 0.0, 0.0)

    def test_lorenz_values(self):
        eqs = equilibria(CHAOTIC)
        assert [e.branch for e in eqs] == [Branch.P0, Branch.PePlus, Branch.PeMinus]
        assert eqs[1].point.t_transmission == pytest.approx(8.485281, abs=1e-6)
        assert tuple(eqs[1].point) == (math.sqrt(72), math.sqrt(72), 27.0)
        assert tuple(eqs[2].point) == (-math.sqrt(72), -math.sqrt(72), 27.0)

    @pytest.mark.parametrize("sigma,beta", [(1, 1), (10, 8 / 3), (0.3, 7)])
    def test_pitchfork_point_returns_origin_only(self, sigma, beta):
        assert len(equilibria(ParamSet(sigma, 1.0, beta))) == 1

    def test_residuals(self, rng):
        for p in random_params(rng, 200):
            eqs = equilibria(p)
            assert (len(eqs) == 3) == (p.r0 > 1)
            for e in eqs:
                assert np.max(np.abs(vector_field(p, e.point))) < 1e-12

    def test_mirror_pair(self):
        plus, minus = equilibria(FOCI)[1:]
        np.testing.assert_array_equal(symmetry_map(plus.point), minus.point.as_array())


class TestCharCoeffs:
    def test_lorenz(self):
        c = char_coeffs_nontrivial(CHAOTIC)
        assert (c.a1, c.a2, c.a3) == pytest.approx((41 / 3, 304 / 3, 1440), rel=1e-14)

    def test_foci(self):
        c = char_coeffs_nontrivial(FOCI)
        assert (c.a1, c.a2, c.a3) == pytest.approx((13.7, 81.0, 1026.0), rel=1e-14)

    def test_a3_vanishes_at_pitchfork(self):
        assert char_coeffs_nontrivial(ParamSet(10, 1 + 1e-12, 2)).a3 == pytest.approx(0, abs=1e-10)

    @pytest.mark.parametrize("r0", [0.5, 1.0])
    def test_rejects_missing_branch(self, r0):
        with pytest.raises(BranchError):
            char_coeffs_nontrivial(ParamSet(10, r0, 2))

    def test_positive_above_pitchfork(self, rng):
        for p in random_params(rng, 200, r0_range=(1.0001, 60)):
            assert min(char_coeffs_nontrivial(p)) > 0

    def test_matches_jacobian_characteristic_polynomial(self, rng):
        for p in random_params(rng, 50, r0_range=(1.1, 40)):
            e = equilibria(p)[1]
            poly = np.poly(jacobian(p, e.point))
            np.testing.assert_allclose(poly[1:], tuple(char_coeffs_nontrivial(p)), rtol=1e-9)


class TestHopfThreshold:
    def test_lorenz(self):
        r_h = hopf_threshold(CHAOTIC)
        assert r_h == pytest.approx(470 / 19, abs=1e-12)
        assert r_h == pytest.approx(24.736842, abs=1e-6)

    def test_beta_2_7(self):
        assert hopf_threshold(FOCI) == pytest.approx(157 / 6.3, abs=1e-12)
        assert hopf_threshold(FOCI) == pytest.approx(24.920635, abs=1e-6)

    @pytest.mark.parametrize("sigma,beta", [(1, 1), (3, 2), (2, 2)])
    def test_undefined_without_gate(self, sigma, beta):
        assert hopf_threshold(ParamSet(sigma, 5, beta)) is None

    def test_root_of_hurwitz_determinant(self, rng):
        for p in random_params(rng, 100):
            r_h = hopf_threshold(p)
            if r_h is None:
                continue
            c = char_coeffs_nontrivial(p.with_r0(r_h))
            assert c.a1 * c.a2 - c.a3 == pytest.approx(0, abs=1e-9 * c.a3)


class TestDissipativityCertificate:
    def test_v_examples(self):
        assert lyapunov_v(CHAOTIC, (0, 0, 38)) == 0
        assert lyapunov_v(CHAOTIC, (0, 0, 0)) == 1444

    @given(positive, positive, positive, coord, coord, coord)
    def test_v_is_squared_distance(self, s, r, b, t, i, m):
        p = ParamSet(s, r, b)
        d = np.array([t, i, m]) - [0, 0, s + r]
        assert lyapunov_v(p, (t, i, m)) == pytest.approx(d @ d, rel=1e-12, abs=1e-12)

    def test_ball_lorenz(self):
        ball = absorbing_ball(CHAOTIC)
        assert ball.decay_m == 2
        assert ball.offset_c == pytest.approx(8 / 3 * 1444, rel=1e-14)
        assert ball.offset_c == pytest.approx(3850.667, abs=1e-3)
        assert ball.radius_sq == pytest.approx(1925.333, abs=1e-3)
        assert ball.center_m == 38

    def test_ball_decay_min(self):
        assert absorbing_ball(ParamSet(0.5, 1, 3)).decay_m == 1

    @given(positive, positive, positive)
    def test_ball_identity(self, s, r, b):
        ball = absorbing_ball(ParamSet(s, r, b))
        assert ball.radius_sq > 0
        assert ball.radius_sq * ball.decay_m == pytest.approx(ball.offset_c, rel=1e-14)

    def test_v_dot_matches_chain_rule(self, rng):
        for p in random_params(rng, 50):
            x = rng.uniform(-50, 50, size=3)
            a = p.sigma + p.r0
            grad = 2 * np.array([x[0], x[1], x[2] - a])
            assert lyapunov_v_dot(p, x) == pytest.approx(grad @ vector_field(p, x), rel=1e-10, abs=1e-9)


class TestSymmetry:
    def test_definition(self):
        np.testing.assert_array_equal(symmetry_map((1, 2, 3)), [-1, -2, 3])

    @given(coord, coord, coord)
    def test_involution(self, t, i, m):
        np.testing.assert_array_equal(symmetry_map(symmetry_map((t, i, m))), [t, i, m])

    def test_equivariance_exact(self, rng):
        for p in random_params(rng, 100):
            x = rng.uniform(-50, 50, size=3)
            np.testing.assert_array_equal(
                vector_field(p, symmetry_map(x)), symmetry_map(vector_field(p, x))
            )


def test_pitchfork_amplitude_scaling():
    beta = 8 / 3
    for eps in (1e-2, 1e-4, 1e-6, 1e-8):
        alpha = pitchfork_amplitude(ParamSet(10, 1 + eps, beta))
        assert alpha / math.sqrt(eps) == pytest.approx(math.sqrt(beta), rel=1e-6)
    assert pitchfork_amplitude(ParamSet(10, 0.7, beta)) == 0.0
