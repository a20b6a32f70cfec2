"""Problem catalogue values against hand-computed oracles."""

import math

import numpy as np
import pytest

from rmquad import (
    AlignmentError,
    ConfigError,
    ContractError,
    KINDS,
    TrajectoryBundle,
    eval_integrand,
    exact_integral_x1,
    make_integrand,
    payoff,
)


class TestFactory:
    def test_kinds(self):
        assert set(KINDS) == {"x1", "x2", "x3", "x4", "sde", "const"}
        for k in KINDS:
            assert make_integrand(k).kind == k

    def test_rejects_unknown_kind(self):
        with pytest.raises(ConfigError):
            make_integrand("x9")

    def test_rejects_foreign_params(self):
        with pytest.raises(ConfigError):
            make_integrand("x1", strike=9.0)
        with pytest.raises(ConfigError):
            make_integrand("const", mu=3.0)
        # native params pass
        assert make_integrand("x3", strike=7.0).strike == 7.0
        assert make_integrand("sde", mu=2.0).mu == 2.0
        assert make_integrand("const", level=5.0).level == 5.0

    def test_params_echo_round_trip(self):
        for k in KINDS:
            prob = make_integrand(k)
            again = make_integrand(k, **prob.params_echo())
            assert again == prob

    def test_channel_requirements(self):
        assert make_integrand("x2").needs_w2
        assert make_integrand("sde").needs_w2
        assert not make_integrand("x1").needs_w2
        assert make_integrand("x4").needs_poisson
        assert not make_integrand("x3").needs_poisson


class TestValues:
    def test_x1_is_the_driving_path(self):
        w = np.array([0.0, 0.5, -1.0])
        t = np.array([0.0, 0.5, 1.0])
        out = make_integrand("x1").values_at(t, 1.0, w=w)
        assert np.array_equal(out, w)

    def test_x2_is_the_second_path(self):
        w2 = np.array([0.25, -0.5, 2.0])
        t = np.array([0.0, 0.5, 1.0])
        out = make_integrand("x2").values_at(t, 1.0, w2=w2)
        assert np.array_equal(out, w2)

    def test_x3_put_times_spot_oracles(self):
        prob = make_integrand("x3")  # strike 9, sigma 1, spot 1
        # at t=0, w=0: s=1, value = (9-1)*1 = 8
        assert prob.values_at(np.array([0.0]), 1.0, w=np.array([0.0]))[0] == 8.0
        # at t=1, w=0.5: s = exp(-0.5 + 0.5) = 1, value = 8
        v = prob.values_at(np.array([1.0]), 1.0, w=np.array([0.5]))[0]
        assert math.isclose(v, 8.0, rel_tol=1e-15)
        # deep in the money is clipped to zero: s = exp(3) > 9
        v = prob.values_at(np.array([0.0]), 1.0, w=np.array([3.0]))[0]
        assert v == 0.0
        # generic point, independent recomputation
        t, w = 0.7, -0.3
        s = 1.0 * math.exp(-0.5 * t + w)
        expect = max(0.0, 9.0 - s) * s
        got = prob.values_at(np.array([t]), 1.0, w=np.array([w]))[0]
        assert math.isclose(got, expect, rel_tol=1e-15)

    def test_x4_count_times_exp(self):
        prob = make_integrand("x4")
        t = np.array([0.0, 0.5])
        counts = np.array([2, 3])
        w = np.array([0.0, 1.0])
        out = prob.values_at(t, 1.0, w=w, counts=counts)
        assert out[0] == 2.0
        assert math.isclose(out[1], 3.0 * math.e, rel_tol=1e-15)

    def test_sde_kernel_weighting(self):
        prob = make_integrand("sde")  # mu 3
        t = np.array([1.0, 0.0])
        w2 = np.array([2.0, 1.0])
        out = prob.values_at(t, 1.0, w2=w2)
        assert out[0] == 2.0  # exp(0) * 2
        assert math.isclose(out[1], math.exp(3.0), rel_tol=1e-15)

    def test_const_ignores_randomness(self):
        prob = make_integrand("const", level=2.0)
        t = np.array([0.0, 0.3, 1.0])
        assert np.array_equal(prob.values_at(t, 1.0), np.full(3, 2.0))

    def test_missing_channels_raise(self):
        t = np.array([0.0])
        with pytest.raises(ContractError):
            make_integrand("x1").values_at(t, 1.0)
        with pytest.raises(ContractError):
            make_integrand("x2").values_at(t, 1.0, w=np.array([0.0]))
        with pytest.raises(ContractError):
            make_integrand("x4").values_at(t, 1.0, w=np.array([0.0]))


class TestPointEvaluation:
    def test_reads_bundle_on_mesh(self):
        b = TrajectoryBundle(seed=0, replicate_index=0, n_fine=8, horizon=1.0)
        prob = make_integrand("x1")
        got = eval_integrand(prob, 0.25, b)
        assert got == b.w[2]

    def test_off_mesh_time_raises(self):
        b = TrajectoryBundle(seed=0, replicate_index=0, n_fine=8, horizon=1.0)
        with pytest.raises(AlignmentError):
            eval_integrand(make_integrand("x1"), 0.3, b)

    def test_poisson_problem_via_bundle(self):
        b = TrajectoryBundle(seed=1, replicate_index=2, n_fine=8, horizon=1.0)
        v = eval_integrand(make_integrand("x4"), 0.5, b)
        k = int(np.searchsorted(b.poisson_arrivals, 0.5, side="right"))
        # vectorized exp may differ from libm by an ulp
        assert math.isclose(v, k * math.exp(b.w[4]), rel_tol=1e-15)


class TestClosedForms:
    def test_exact_integral_x1_oracle(self):
        # 0.5 * 1.5^2 - 0.5 * 1.0 = 0.625, all terms dyadic
        assert exact_integral_x1(1.5, 1.0) == 0.625
        assert exact_integral_x1(0.0, 1.0) == -0.5
        assert exact_integral_x1(-1.5, 1.0) == 0.625

    def test_payoff(self):
        assert payoff(1.5, 2.0) == 0.5
        assert payoff(2.5, 2.0) == 0.0
        assert payoff(-1.0, 2.0) == 3.0
        arr = payoff(np.array([1.5, 2.5]), 2.0)
        assert np.array_equal(arr, np.array([0.5, 0.0]))
