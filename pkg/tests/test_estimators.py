import numpy as np
import pytest

from slm import (
    BesselPower,
    Brownian,
    EstimationFailedError,
    GenericDiffusion,
    InvalidArgumentError,
    InverseBes3,
    ItoIntegral,
    PrescribedMean,
    SamplePath,
    parse_expr,
    uniform_grid,
)
from slm.estimators import (
    Z99,
    mean_curve,
    path_sup,
    small_moment_scan,
    tail_quantities,
    tail_scan,
)


# ---------------------------------------------------------------------------
# path_sup


def test_path_sup_constant():
    g = uniform_grid(1.0, 2)
    p = SamplePath(g, np.array([-3.0, -3.0, -3.0]))
    assert path_sup(p) == 3.0


def test_path_sup_mixed_signs():
    g = uniform_grid(1.0, 2)
    p = SamplePath(g, np.array([0.0, -3.0, 2.0]))
    assert path_sup(p) == 3.0


def test_path_sup_grows_under_bridge_refinement():
    # refine a Brownian path by conditional midpoint fill-in: the fine grid
    # contains the coarse nodes, so its supremum cannot be smaller
    rng = np.random.default_rng(5)
    coarse_n = 256
    w = np.concatenate([[0.0], np.cumsum(rng.standard_normal(coarse_n) / np.sqrt(coarse_n))])
    sups = []
    for level in range(5):  # 256 -> 4096 by repeated midpoint bisection
        n = len(w) - 1
        grid = uniform_grid(1.0, n)
        sups.append(path_sup(SamplePath(grid, w)))
        dt = 1.0 / n
        mids = 0.5 * (w[:-1] + w[1:]) + np.sqrt(dt / 4.0) * rng.standard_normal(n)
        out = np.empty(2 * n + 1)
        out[0::2] = w
        out[1::2] = mids
        w = out
    assert all(b >= a for a, b in zip(sups, sups[1:]))


# ---------------------------------------------------------------------------
# mean_curve


def test_mean_curve_gbm_defect_zero():
    g = uniform_grid(1.0, 64)
    c = mean_curve(GenericDiffusion(parse_expr("x"), 1.0), g, [0.5, 1.0], 50_000, 1)
    for i in range(2):
        assert abs(c.defect_est[i]) < 3.0 * c.stderr[i]
        assert c.ci_low[i] <= c.defect_est[i] <= c.ci_high[i]


def test_mean_curve_inverse_bes3_defect():
    g = uniform_grid(1.0, 1)
    c = mean_curve(InverseBes3(1.0), g, [1.0], 100_000, 42)
    assert abs(c.defect_est[0] - 0.3173105078629141) < 3.0 * c.stderr[0]


def test_mean_curve_bessel_power4_defect():
    g = uniform_grid(1.0, 1)
    c = mean_curve(BesselPower(4.0, 1.0), g, [1.0], 100_000, 42)
    target = 1.0 - (1.0 - np.exp(-0.5))  # 1 - E[1/X_1], X ~ BESQ(4) from 1
    assert abs(c.defect_est[0] - target) < 3.0 * c.stderr[0]


def test_mean_curve_validates_inputs():
    g = uniform_grid(1.0, 4)
    with pytest.raises(InvalidArgumentError):
        mean_curve(Brownian(), g, [1.0], 50, 1)  # too few paths
    with pytest.raises(InvalidArgumentError):
        mean_curve(Brownian(), g, [0.3], 1000, 1)  # not a node
    with pytest.raises(InvalidArgumentError):
        mean_curve(Brownian(), g, [], 1000, 1)


def test_mean_curve_overflow_exclusion():
    # integrand exp(1000) overflows immediately: estimation must fail
    g = uniform_grid(1.0, 4)
    with pytest.raises(EstimationFailedError):
        mean_curve(ItoIntegral(parse_expr("exp(1000)")), g, [1.0], 200, 1)


def test_mean_curve_counts_overflows():
    g = uniform_grid(1.0, 256)
    c = mean_curve(GenericDiffusion(parse_expr("x^2"), 1.0), g, [1.0], 5000, 7)
    assert c.n_overflowed[0] > 0
    assert np.isfinite(c.mean_est[0])


def test_mean_curve_reproducible_and_thread_independent():
    g = uniform_grid(1.0, 16)
    msg = (InverseBes3(1.0), g, [0.5, 1.0], 3000, 9)
    a = mean_curve(*msg, threads=1)
    b = mean_curve(*msg, threads=4)
    c = mean_curve(*msg, threads=1)
    for x, y in ((a, b), (a, c)):
        assert np.array_equal(x.mean_est, y.mean_est)
        assert np.array_equal(x.stderr, y.stderr)
        assert np.array_equal(x.defect_est, y.defect_est)


def test_mean_curve_ci_calibration_gbm():
    # 99% CI coverage of the true defect 0 across 100 independent seeds
    g = uniform_grid(1.0, 16)
    model = GenericDiffusion(parse_expr("x"), 1.0)
    hits = 0
    for seed in range(100):
        c = mean_curve(model, g, [1.0], 2000, seed)
        hits += c.ci_low[0] <= 0.0 <= c.ci_high[0]
    assert hits >= 95


def test_defect_nonnegative_for_positive_local_martingales():
    # positive local martingales are supermartingales: defect >= -3 SE
    g = uniform_grid(1.0, 8)
    models = (
        InverseBes3(1.0),
        BesselPower(3.0, 1.0),
        BesselPower(4.0, 1.0),
        PrescribedMean(parse_expr("1/(1+t)", "t")),
        GenericDiffusion(parse_expr("x"), 1.0),
    )
    for model in models:
        c = mean_curve(model, g, [0.5, 1.0], 20_000, 3)
        assert np.all(c.defect_est >= -3.0 * c.stderr), model


# ---------------------------------------------------------------------------
# tail_scan


def test_tail_scan_brownian_vanishing_tail():
    g = uniform_grid(1.0, 64)
    scan = tail_scan(Brownian(0.0), g, 1.0, [4.0, 6.0, 8.0], 50_000, 3)
    assert np.all(np.diff(scan.prob_est) <= 0.0)
    assert np.all(np.diff(scan.lambda_prob) <= 0.0)
    assert scan.lambda_prob[-1] < 0.01  # integrable sup: lambda P -> 0


def test_tail_scan_monotone_probabilities():
    g = uniform_grid(1.0, 32)
    scan = tail_scan(InverseBes3(1.0), g, 1.0, list(np.linspace(1.5, 30, 12)), 20_000, 11)
    assert np.all(np.diff(scan.prob_est) <= 0.0)
    assert np.all((scan.prob_est >= 0.0) & (scan.prob_est <= 1.0))


def test_tail_scan_constant_path_exact_zero():
    g = uniform_grid(1.0, 8)
    scan = tail_scan(PrescribedMean(parse_expr("1 + 0*t", "t")), g, 1.0,
                     [2.0, 3.0, 4.0], 10_000, 1)
    assert np.all(scan.prob_est == 0.0)


def test_tail_scan_validates_inputs():
    g = uniform_grid(1.0, 8)
    with pytest.raises(InvalidArgumentError):
        tail_scan(Brownian(), g, 1.0, [1.0, 2.0], 10_000, 1)  # too few lambdas
    with pytest.raises(InvalidArgumentError):
        tail_scan(Brownian(), g, 1.0, [2.0, 1.0, 3.0], 10_000, 1)  # not increasing
    with pytest.raises(InvalidArgumentError):
        tail_scan(Brownian(), g, 1.0, [1.0, 2.0, 3.0], 100, 1)  # too few paths


def test_tail_scan_thread_independent():
    g = uniform_grid(1.0, 16)
    args = (InverseBes3(1.0), g, 1.0, [2.0, 4.0, 8.0], 10_000, 5)
    a = tail_scan(*args, threads=1)
    b = tail_scan(*args, threads=4)
    assert np.array_equal(a.prob_est, b.prob_est)


# ---------------------------------------------------------------------------
# small_moment_scan


def test_moment_scan_brownian_stabilizes():
    g = uniform_grid(1.0, 64)
    scan = small_moment_scan(Brownian(0.0), g, 1.0, 0.5,
                             [1000, 4000, 16000, 64000], 5)
    assert scan.verdict == "stabilizing"


def test_moment_scan_inverse_bes3_stabilizes():
    # finite small moments for positive local martingales
    g = uniform_grid(1.0, 64)
    scan = small_moment_scan(InverseBes3(1.0), g, 1.0, 0.5,
                             [1000, 4000, 16000, 64000], 5)
    assert scan.verdict == "stabilizing"


def test_moment_scan_heavy_integrand_suspected_divergent():
    # the verdict is a noisy diagnostic; this seed/sizes configuration is a
    # fixed regression point, with the analytic classifier as the authority
    g = uniform_grid(1.0, 256)
    scan = small_moment_scan(ItoIntegral(parse_expr("exp(abs(x)^3)")), g, 1.0, 0.5,
                             [1000, 4000, 16000, 64000, 256000], 42, threads=2)
    assert scan.verdict == "suspected-divergent"


def test_moment_scan_nested_reuse():
    # the estimate at size n is identical whether or not larger sizes follow
    g = uniform_grid(1.0, 16)
    a = small_moment_scan(Brownian(0.0), g, 1.0, 0.5, [500, 1000, 2000, 4000], 7)
    b = small_moment_scan(Brownian(0.0), g, 1.0, 0.5, [500, 1000, 2000, 4000, 8000], 7)
    assert np.array_equal(a.estimates, b.estimates[:4])


def test_moment_scan_validates_inputs():
    g = uniform_grid(1.0, 8)
    with pytest.raises(InvalidArgumentError):
        small_moment_scan(Brownian(), g, 1.0, 1.5, [10, 20, 40, 80], 1)
    with pytest.raises(InvalidArgumentError):
        small_moment_scan(Brownian(), g, 1.0, 0.5, [10, 20, 40], 1)


def test_moment_scan_thread_independent():
    g = uniform_grid(1.0, 16)
    args = (InverseBes3(1.0), g, 1.0, 0.5, [500, 1000, 2000, 4000], 7)
    a = small_moment_scan(*args, threads=1)
    b = small_moment_scan(*args, threads=4)
    assert np.array_equal(a.estimates, b.estimates)
    assert a.verdict == b.verdict


# ---------------------------------------------------------------------------
# tail quantities


def test_tail_quantities_bundle():
    g = uniform_grid(1.0, 16)
    curve = mean_curve(InverseBes3(1.0), g, [1.0], 20_000, 3)
    scan = tail_scan(InverseBes3(1.0), g, 1.0, [5.0, 10.0, 20.0], 20_000, 3)
    tq = tail_quantities(curve, scan, 1.0)
    assert tq.t == 1.0
    assert 0.0 <= tq.gamma <= 1.0  # bounded by E M_0 for positive models
    assert tq.ell >= 0.0


def test_z99_quantile():
    from scipy.special import ndtr

    assert ndtr(Z99) == pytest.approx(0.995, abs=1e-12)
