import numpy as np
import pytest

from slm import (
    ModelInvalidError,
    dichotomy_f_moment,
    improper_integral_verdict,
    integrand_small_moment_classify,
    kotani_classify,
    l2_test,
    parse_expr,
)
from slm.classifier import (
    CONVERGENT,
    DIVERGENT,
    FINITE,
    INFINITE,
    IntegrandError,
    L2_MARTINGALE,
    NOT_L2,
    UNDECIDED,
)
from slm.core import INCONCLUSIVE, MARTINGALE, STRICT_LOCAL


# ---------------------------------------------------------------------------
# the integral engine


def test_engine_inverse_square():
    iv = improper_integral_verdict(parse_expr("1/x^2"), 1.0)
    assert iv.status == CONVERGENT
    assert iv.value == pytest.approx(1.0, rel=1e-6)


def test_engine_harmonic_tail_diverges():
    iv = improper_integral_verdict(parse_expr("1/x"), 1.0)
    assert iv.status == DIVERGENT


def test_engine_cubic_reciprocal():
    iv = improper_integral_verdict(parse_expr("x^-3"), 1.0)
    assert iv.status == CONVERGENT
    assert iv.value == pytest.approx(0.5, rel=1e-6)


def test_engine_super_exponential_fast_path():
    iv = improper_integral_verdict(parse_expr("exp(abs(x)^3 - x^2/2)"), 1.0)
    assert iv.status == DIVERGENT
    assert iv.fast_path


def test_engine_quadrature_accuracy_power_tails():
    # closed-form tails; convergent values must match to 1e-6 relative
    for p in (1.5, 2.0, 3.0):
        iv = improper_integral_verdict(parse_expr(f"x^-{p}"), 1.0)
        assert iv.status == CONVERGENT
        assert iv.value == pytest.approx(1.0 / (p - 1.0), rel=1e-6), p


def test_engine_scale_consistency_in_eps():
    # doubling eps never changes the status (the value drops by one block)
    cases = ("1/x^2", "1/x", "x^-3", "exp(-x)", "x^-1.1", "1/(1+x^2)")
    for src in cases:
        h = parse_expr(src)
        s1 = improper_integral_verdict(h, 1.0).status
        s2 = improper_integral_verdict(h, 2.0).status
        assert s1 == s2, src


def test_engine_rejects_negative_integrand():
    with pytest.raises(IntegrandError):
        improper_integral_verdict(parse_expr("1 - x"), 1.0)


def test_engine_rejects_bad_eps():
    from slm import InvalidArgumentError

    with pytest.raises(InvalidArgumentError):
        improper_integral_verdict(parse_expr("1/x^2"), 0.0)


def test_engine_slowly_varying_is_inconclusive():
    # 1/(x log x) diverges but defeats a mechanical geometric test; the
    # honest outcome is Inconclusive, never a false Convergent
    iv = improper_integral_verdict(parse_expr("1/(x*log(x))"), 2.0)
    assert iv.status in (UNDECIDED, DIVERGENT)
    assert iv.status != CONVERGENT


def test_engine_gaussian_tail_converges():
    iv = improper_integral_verdict(parse_expr("exp(-x^2/2)"), 1.0)
    assert iv.status == CONVERGENT
    # tail of the standard normal integral: sqrt(2 pi) * (1 - Phi(1))
    from scipy.special import ndtr

    assert iv.value == pytest.approx(np.sqrt(2 * np.pi) * (1 - ndtr(1.0)), rel=1e-6)


def test_engine_zero_integrand():
    iv = improper_integral_verdict(parse_expr("0"), 1.0)
    assert iv.status == CONVERGENT
    assert iv.value == 0.0


# ---------------------------------------------------------------------------
# Kotani / Delbaen-Shirakawa criterion


def test_kotani_linear_is_martingale():
    v = kotani_classify(parse_expr("x"), 1.0)
    assert v.status == MARTINGALE


def test_kotani_quadratic_is_strict_local():
    v = kotani_classify(parse_expr("x^2"), 1.0)
    assert v.status == STRICT_LOCAL


def test_kotani_one_plus_square_value():
    v = kotani_classify(parse_expr("1+x^2"), 1.0)
    assert v.status == STRICT_LOCAL
    iv = v.evidence[0][1]
    assert iv.value == pytest.approx(1.0 / (2.0 * (1.0 + 1.0)), rel=1e-6)


def test_kotani_sqrt_is_martingale():
    v = kotani_classify(parse_expr("sqrt(x)"), 1.0)
    assert v.status == MARTINGALE


def test_kotani_rejects_nonpositive_coefficient():
    with pytest.raises(ModelInvalidError):
        kotani_classify(parse_expr("x - 100"), 1.0)


def test_kotani_scale_invariance():
    # rescaling a by c > 0 rescales the integral by 1/c^2 and must not
    # change a conclusive status
    for src in ("x", "x^2", "1+x^2", "sqrt(x)"):
        base = kotani_classify(parse_expr(src), 1.0).status
        for c in (0.1, 3.0, 25.0):
            scaled = kotani_classify(parse_expr(f"{c}*({src})"), 1.0).status
            assert scaled == base, (src, c)


# ---------------------------------------------------------------------------
# L2 test


def test_l2_exp_square_below_quarter():
    assert l2_test(parse_expr("exp(x^2)"), 0.2) == L2_MARTINGALE


def test_l2_exp_square_above_quarter():
    assert l2_test(parse_expr("exp(x^2)"), 0.3) == NOT_L2


def test_l2_polynomial_always():
    assert l2_test(parse_expr("x"), 1.0) == L2_MARTINGALE
    assert l2_test(parse_expr("x"), 10.0) == L2_MARTINGALE


# ---------------------------------------------------------------------------
# small-moment criterion for Ito integrands


def test_small_moment_cubic_exponential_strict():
    for t in (0.1, 1.0):
        v = integrand_small_moment_classify(parse_expr("exp(abs(x)^3)"), t, [0.5])
        assert v.status == STRICT_LOCAL, t


def test_small_moment_linear_martingale():
    v = integrand_small_moment_classify(parse_expr("x"), 1.0)
    assert v.status == MARTINGALE


def test_small_moment_exp_square_l2_window():
    v = integrand_small_moment_classify(parse_expr("exp(x^2)"), 0.2)
    assert v.status == MARTINGALE
    # beyond the L2 window the small-moment test must not fire
    v = integrand_small_moment_classify(parse_expr("exp(x^2)"), 0.3)
    assert v.status == INCONCLUSIVE


def test_small_moment_never_contradicts_l2():
    # consistency guard: an L2 martingale is never declared strict local
    gs = ("x", "x^2", "1+abs(x)", "exp(x^2)", "exp(abs(x)^3)", "exp(x)")
    for src in gs:
        g = parse_expr(src)
        for t in (0.1, 0.2, 1.0):
            if l2_test(g, t) == L2_MARTINGALE:
                v = integrand_small_moment_classify(g, t)
                assert v.status != STRICT_LOCAL, (src, t)


def test_small_moment_rejects_bad_alphas():
    from slm import InvalidArgumentError

    with pytest.raises(InvalidArgumentError):
        integrand_small_moment_classify(parse_expr("x"), 1.0, [1.5])
    with pytest.raises(InvalidArgumentError):
        integrand_small_moment_classify(parse_expr("x"), 1.0, [])


# ---------------------------------------------------------------------------
# sup-moment dichotomy


def test_dichotomy_fractional_powers_finite():
    # F(y) = y^alpha with alpha < 1: F'/y has an integrable tail, and the
    # quadrature value must match the antiderivative to 1e-6 relative
    for alpha in (0.25, 0.5, 0.9):
        r = dichotomy_f_moment(parse_expr(f"{alpha}*y^{alpha - 1.0}", "y"), 1.0)
        assert r.status == FINITE, alpha
        expected = alpha / (1.0 - alpha)  # integral of alpha y^(alpha-2) from 1
        assert r.integral.value == pytest.approx(expected, rel=1e-6)


def test_dichotomy_identity_infinite():
    r = dichotomy_f_moment(parse_expr("1", "y"), 1.0)
    assert r.status == INFINITE


def test_dichotomy_superlinear_infinite():
    r = dichotomy_f_moment(parse_expr("1.5*y^0.5", "y"), 1.0)
    assert r.status == INFINITE


def test_dichotomy_rational_finite():
    r = dichotomy_f_moment(parse_expr("1/(1+y)", "y"), 1.0)
    assert r.status == FINITE
    assert r.integral.value == pytest.approx(np.log(2.0), rel=1e-6)
