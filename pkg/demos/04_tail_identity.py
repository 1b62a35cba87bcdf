#!/usr/bin/env python3
"""The tail identity for positive continuous local martingales:

    lambda * P(sup_{s<=t} M_s >= lambda)  ->  E[M_0 - M_t]   (lambda -> inf)

For a true martingale the limit is zero; for the inverse Bessel-3 it is
the defect gamma(t) > 0.  Grid suprema are lower bounds for the true
supremum, so finite-lambda scans approach the limit from below and grid
refinement matters more the larger lambda is (the undercount scales like
lambda * sqrt(dt)).
"""

from slm import Brownian, InverseBes3, inverse_bes3_mean, uniform_grid
from slm.estimators import tail_scan

N_PATHS = 200_000
SEED = 42
GAMMA_1 = 1.0 - inverse_bes3_mean(1.0, 1.0)

print("=" * 72)
print("BROWNIAN MOTION — integrable supremum, lambda * P must vanish")
print("=" * 72)
scan = tail_scan(Brownian(0.0), uniform_grid(1.0, 256), 1.0,
                 [2.0, 4.0, 6.0, 8.0], N_PATHS, SEED, threads=2)
for lam, lp in zip(scan.lambdas, scan.lambda_prob):
    print(f"  lambda = {lam:4g}   lambda*P = {lp:.5f}")

print()
print("=" * 72)
print(f"INVERSE BESSEL-3 — limit is gamma(1) = {GAMMA_1:.6f}")
print("=" * 72)
lambdas = [5.0, 10.0, 20.0, 50.0]
for steps in (256, 1024, 4096):
    scan = tail_scan(InverseBes3(1.0), uniform_grid(1.0, steps), 1.0,
                     lambdas, N_PATHS, SEED, threads=2)
    row = "  ".join(f"{lp:.4f}" for lp in scan.lambda_prob)
    print(f"  {steps:5d} steps:  lambda*P = {row}")
print(f"  lambdas:               " + "  ".join(f"{l:6g}" for l in lambdas))
print()
print("reading: at moderate lambda the scan sits near gamma(1); at large")
print("lambda the grid supremum misses short excursions and the estimate")
print("drops, recovering only under refinement — the one-sided sup bias.")
