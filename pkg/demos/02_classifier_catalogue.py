#!/usr/bin/env python3
"""The analytic decision engine on the worked catalogue.

Driftless diffusions dM = a(M) dW are classified by convergence of the
tail integral of x/a(x)^2; Ito integrals of g(W) by divergence of a small
moment of the quadratic variation, with an L2 test certifying true
martingales.  Everything here is quadrature, no simulation.
"""

from slm import (
    dichotomy_f_moment,
    integrand_small_moment_classify,
    kotani_classify,
    l2_test,
    parse_expr,
)

print("=" * 72)
print("DIFFUSIONS dM = a(M) dW — tail integral of x/a(x)^2 on [1, inf)")
print("=" * 72)
for src in ("x", "sqrt(x)", "x^2", "1+x^2"):
    v = kotani_classify(parse_expr(src), eps=1.0)
    iv = v.evidence[0][1]
    value = "diverges" if iv.value is None else f"= {iv.value:.6f}"
    print(f"  a(x) = {src:8s} -> integral {value:>12s}   verdict: {v.status}")
print("  (a(x)=x is geometric Brownian motion; a(x)=x^2 solves the")
print("   inverse Bessel-3 equation in law, the canonical strict case)")

print()
print("=" * 72)
print("ITO INTEGRALS of g(W_s) — small-moment and L2 tests")
print("=" * 72)
cases = [
    ("x", 1.0),
    ("exp(x^2)", 0.2),
    ("exp(x^2)", 0.3),
    ("exp(abs(x)^3)", 0.1),
    ("exp(abs(x)^3)", 1.0),
]
for src, t in cases:
    g = parse_expr(src)
    v = integrand_small_moment_classify(g, t)
    print(f"  g = {src:14s} t = {t:<4g} L2: {l2_test(g, t):12s} -> {v.status}")
print("  (exp(W^2) integrates to an L2 martingale while t < 1/4; the cubic")
print("   exponent defeats the Gaussian tail at every horizon)")

print()
print("=" * 72)
print("SUP-MOMENT DICHOTOMY — is E F(sup M) finite for strict local M?")
print("=" * 72)
for name, fp in (
    ("F(y)=y^0.25", "0.25*y^-0.75"),
    ("F(y)=y^0.5", "0.5*y^-0.5"),
    ("F(y)=y^0.9", "0.9*y^-0.1"),
    ("F(y)=y", "1"),
    ("F(y)=y^1.5", "1.5*y^0.5"),
):
    r = dichotomy_f_moment(parse_expr(fp, "y"), eps=1.0)
    print(f"  {name:12s} F'(y) = {fp:14s} -> E F(sup M) {r.status}")
print("  (every moment below order one is finite; order one already is not)")
