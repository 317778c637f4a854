import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracks.errors import ConvergenceError, GammaPoleError
from fracks.fractional_kernel import (
    PowerBranchMode,
    SampledFunction,
    check_order,
    frac_power,
    frac_power_rule,
    gamma_fn,
    log_gamma,
    mittag_leffler,
    mittag_leffler_terms,
    mittag_leffler_trunc2,
    ml_derivative_a8,
    rl_frac_derivative,
)

# Reference values computed once with mpmath at 30 digits.
GAMMA_1_2 = 0.918168742399760622426519659256
INV_GAMMA_1_3 = 1.11424250854730185496272568941
GAMMA3_OVER_GAMMA2_7 = 1.29476165355725359631290298461
E_HALF_AT_1 = 5.00898008076228346630982459821
E_HALF_AT_I = complex(0.367879441171442321595523770161, 0.607157705841393729115038235801)
A8_SPOT = 7.08376756387070224382241491763

orders = st.floats(min_value=0.05, max_value=1.0)


def grid(h=1.0 / 1024, x_end=2.0):
    return np.arange(0, int(round(x_end / h)) + 1) * h


class TestGamma:
    def test_examples(self):
        assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
        assert gamma_fn(1.5) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)
        assert gamma_fn(1.2) == pytest.approx(GAMMA_1_2, rel=1e-13)

    @pytest.mark.parametrize("x", [0.0, -1.0, -2.0, -7.0])
    def test_poles(self, x):
        with pytest.raises(GammaPoleError):
            gamma_fn(x)

    def test_accuracy_against_stdlib(self):
        xs = np.linspace(0.1, 10.0, 500)
        rel = [abs(gamma_fn(x) - math.gamma(x)) / math.gamma(x) for x in xs]
        assert max(rel) < 1e-12

    def test_reflection_branch(self):
        for x in (0.3, -0.5, -1.7):
            assert gamma_fn(x) == pytest.approx(math.gamma(x), rel=1e-12)

    @given(st.floats(min_value=0.1, max_value=5.0))
    def test_recurrence(self, x):
        assert abs(gamma_fn(x + 1) - x * gamma_fn(x)) / gamma_fn(x + 1) < 1e-12

    @given(st.floats(min_value=0.05, max_value=150.0))
    def test_log_gamma(self, x):
        assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-12)


class TestOrder:
    def test_bounds(self):
        assert check_order(1.0) == 1.0
        with pytest.raises(ValueError):
            check_order(1.0, allow_one=False)
        for bad in (0.0, -0.2, 1.1, float("nan")):
            with pytest.raises(ValueError):
                check_order(bad)


class TestMittagLeffler:
    def test_examples(self):
        assert mittag_leffler(1.0, 1.0) == pytest.approx(math.e, rel=1e-14)
        assert mittag_leffler(0.5, 0.0) == 1.0
        assert abs(mittag_leffler(0.5, 1.0) - E_HALF_AT_1) < 1e-12

    def test_half_order_closed_form(self):
        # E_{1/2}(z) = exp(z^2) erfc(-z) for real z
        for z in (-2.0, -0.5, 0.3, 1.0, 2.5):
            expected = math.exp(z * z) * math.erfc(-z)
            assert mittag_leffler(0.5, z).real == pytest.approx(expected, rel=1e-12)

    def test_imaginary_argument(self):
        assert abs(mittag_leffler(0.5, 1j) - E_HALF_AT_I) < 1e-13

    @given(st.floats(min_value=0.1, max_value=5.0))
    def test_order_one_is_exp(self, x):
        assert abs(mittag_leffler(1.0, x) - math.exp(x)) / math.exp(x) < 1e-10

    def test_order_one_imaginary_is_cis(self):
        theta = np.linspace(-5, 5, 41)
        assert np.max(np.abs(mittag_leffler(1.0, 1j * theta) - np.exp(1j * theta))) < 1e-12

    def test_array_matches_scalar(self):
        u = np.array([0.0, 0.5, -1.0, 2j])
        vec = mittag_leffler(0.7, u)
        assert vec.shape == u.shape
        for ui, vi in zip(u, vec):
            assert vi == pytest.approx(mittag_leffler(0.7, ui), rel=1e-14)

    def test_large_negative_argument(self):
        assert abs(mittag_leffler(1.0, -5.0) - math.exp(-5.0)) / math.exp(-5.0) < 1e-10

    def test_domain_cap(self):
        with pytest.raises(ValueError):
            mittag_leffler(0.5, 31.0)

    def test_growing_terms_raise(self):
        with pytest.raises(ConvergenceError):
            mittag_leffler(1.0, 20.0, k_max=5)

    def test_shrinking_but_unconverged_warns(self):
        with pytest.warns(RuntimeWarning):
            mittag_leffler(1.0, 0.5, k_max=3)

    def test_converged_case_is_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            mittag_leffler(0.3, 2.0)


class TestTrunc2:
    def test_examples(self):
        assert mittag_leffler_trunc2(1.0, 0.0) == 1 + 0j
        assert mittag_leffler_trunc2(1.0, 2.0) == pytest.approx(1 + 2j, abs=1e-15)
        v = mittag_leffler_trunc2(0.3, 1.0)
        assert v.real == 1.0
        assert v.imag == pytest.approx(INV_GAMMA_1_3, rel=1e-13)

    @given(orders, st.floats(min_value=-20, max_value=20))
    def test_equals_first_two_terms(self, alpha, theta):
        terms = mittag_leffler_terms(alpha, 1j * theta, 2)
        assert mittag_leffler_trunc2(alpha, theta) == terms[0] + terms[1]


class TestFracPower:
    def test_examples(self):
        for mode in PowerBranchMode:
            assert frac_power(0.0, 0.3, mode) == 0.0
        assert frac_power(4.0, 0.5, "signed") == pytest.approx(2.0)
        assert frac_power(-2.0, 0.3, "signed") == pytest.approx(-1.2311444133449163, rel=1e-14)

    def test_principal_real(self):
        assert frac_power(-2.0, 0.3, "principal-real") == pytest.approx(2**0.3 * math.cos(0.3 * math.pi))
        assert frac_power(2.0, 0.3, "principal-real") == pytest.approx(2**0.3)

    def test_strict_rejects_negative(self):
        assert frac_power(9.0, 0.5, "strict") == pytest.approx(3.0)
        with pytest.raises(ValueError):
            frac_power(-1.0, 0.5, "strict")

    @given(st.floats(min_value=-1e6, max_value=1e6), orders)
    def test_signed_is_odd(self, y, alpha):
        assert frac_power(-y, alpha, "signed") == -frac_power(y, alpha, "signed")


class TestSampledFunction:
    def test_validation(self):
        with pytest.raises(ValueError):
            SampledFunction(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            SampledFunction(np.array([0.0, 1.0, 3.0]), np.zeros(3))
        with pytest.raises(ValueError):
            SampledFunction(np.array([0.0, 1.0, 2.0]), np.zeros(4))
        assert SampledFunction(np.array([0.0, 0.5, 1.0]), np.zeros(3)).h == 0.5


class TestRiemannLiouville:
    def test_constant_vanishes(self):
        xs = grid()
        d = rl_frac_derivative(SampledFunction(xs, np.full_like(xs, 2.5)), 0.5)
        assert np.max(np.abs(d.ys)) < 1e-10

    def test_identity_is_exact(self):
        xs = grid()
        d = rl_frac_derivative(SampledFunction(xs, xs), 0.5)
        i = int(np.argmin(np.abs(xs - 1.0)))
        assert d.ys[i] == pytest.approx(1.0 / gamma_fn(1.5), rel=1e-12)
        assert d.ys[i] == pytest.approx(1.1283791670955126, rel=1e-12)

    def test_square(self):
        xs = grid()
        d = rl_frac_derivative(SampledFunction(xs, xs**2), 0.3)
        i = int(np.argmin(np.abs(xs - 1.0)))
        assert d.ys[i] == pytest.approx(GAMMA3_OVER_GAMMA2_7, rel=1e-3)

    @pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("a", [0.3, 0.5, 0.7])
    def test_power_rule_agreement(self, g, a):
        xs = grid()
        win = (xs >= 0.25) & (xs <= 2.0)
        num = rl_frac_derivative(SampledFunction(xs, xs**g), a).ys[win]
        exact = frac_power_rule(g, a, xs[win])
        assert np.max(np.abs(num - exact) / exact) < 1e-3

    @pytest.mark.parametrize("g", [0.5, 2.0])
    @pytest.mark.parametrize("a", [0.3, 0.7])
    def test_error_decreases_under_refinement(self, g, a):
        errs = []
        for h in (1 / 256, 1 / 512, 1 / 1024):
            xs = grid(h)
            win = (xs >= 0.25) & (xs <= 2.0)
            num = rl_frac_derivative(SampledFunction(xs, xs**g), a).ys[win]
            exact = frac_power_rule(g, a, xs[win])
            errs.append(np.max(np.abs(num - exact) / exact))
        assert errs[0] > errs[1] > errs[2]

    def test_affine_error_stays_at_roundoff(self):
        # for g = 1 the scheme is exact, so refinement cannot reduce the error further
        for h in (1 / 256, 1 / 1024):
            xs = grid(h)
            num = rl_frac_derivative(SampledFunction(xs, 3.0 * xs - 1.0), 0.5).ys[1:]
            assert np.max(np.abs(num - 3.0 * frac_power_rule(1.0, 0.5, xs[1:]))) < 1e-11

    @given(
        st.floats(min_value=-3, max_value=3),
        st.floats(min_value=-3, max_value=3),
        st.floats(min_value=0.05, max_value=0.95),
    )
    def test_linearity(self, a, b, alpha):
        xs = grid(1 / 128)
        f, g = np.sin(3 * xs), xs**1.5
        lhs = rl_frac_derivative(SampledFunction(xs, a * f + b * g), alpha).ys
        rhs = a * rl_frac_derivative(SampledFunction(xs, f), alpha).ys + b * rl_frac_derivative(
            SampledFunction(xs, g), alpha
        ).ys
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(lhs)))

    def test_preconditions(self):
        xs = grid(1 / 16)
        with pytest.raises(ValueError):
            rl_frac_derivative(SampledFunction(xs + 1.0, xs), 0.5)
        with pytest.raises(ValueError):
            rl_frac_derivative(SampledFunction(xs, xs), 1.0)


class TestClosedForms:
    def test_power_rule_examples(self):
        assert frac_power_rule(1.0, 1.0, 3.0) == pytest.approx(1.0)
        assert frac_power_rule(1.0, 0.5, 1.0) == pytest.approx(1.128379, abs=1e-6)
        assert frac_power_rule(0.5, 0.5, 1.0) == pytest.approx(0.886227, abs=1e-6)
        with pytest.raises(ValueError):
            frac_power_rule(0.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            frac_power_rule(1.0, 0.5, -1.0)

    def test_a8_examples(self):
        assert ml_derivative_a8(1.0, 1.0, 2.0) == pytest.approx(math.exp(2.0), rel=1e-13)
        assert ml_derivative_a8(0.0, 0.5, 1.0) == 0.0
        assert ml_derivative_a8(1.0, 0.5, 1.0) == pytest.approx(A8_SPOT, rel=1e-12)
        with pytest.raises(ValueError):
            ml_derivative_a8(1.0, 0.5, 0.0)
