"""Analytic martingale-vs-strict-local classification.

The criteria all reduce to deciding convergence or divergence of an
improper integral over [eps, inf).  One mechanical engine does that:
dyadic blocks [2^k eps, 2^(k+1) eps] integrated by 61-point
Gauss-Legendre, a log fast path for super-exponential integrands, a
geometric-decay fit for the tail, and Inconclusive as a first-class
outcome when neither convergence nor divergence can be certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    INCONCLUSIVE,
    MARTINGALE,
    STRICT_LOCAL,
    InvalidArgumentError,
    ModelInvalidError,
    SlmError,
    Verdict,
)
from .expr import (
    Call,
    Div,
    Expr,
    Mul,
    Neg,
    Num,
    Pow,
    Var,
    compile_array,
    compile_log_array,
    reflect_var,
)


class IntegrandError(SlmError, ValueError):
    """The integrand violates the engine's requirements (sign or finiteness)."""


CONVERGENT = "convergent"
DIVERGENT = "divergent"
UNDECIDED = "inconclusive"

L2_MARTINGALE = "L2Martingale"
NOT_L2 = "NotL2"
L2_UNDECIDED = "Inconclusive"

FINITE = "Finite"
INFINITE = "Infinite"

# engine constants: 61 dyadic blocks, trailing window of 10, geometric
# ratio threshold, tail tolerance relative to the partial sum, and the
# partial-sum divergence threshold
K_MAX = 60
WINDOW = 10
RATIO_THRESHOLD = 0.97
DIVERGE_SUM = 1e12
LOG_OVERFLOW = 700.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(61)


@dataclass
class IntegralVerdict:
    """Outcome of the improper-integral engine.

    blocks holds (k, lower, upper, integral) for every dyadic block that
    was counted; value is reported only when convergent and includes the
    fitted geometric tail.
    """

    status: str
    value: Optional[float] = None
    blocks: list = field(default_factory=list)
    ratio_fit: Optional[float] = None
    partial_sum: float = 0.0
    fast_path: bool = False
    detail: str = ""


def _log_spaced(eps: float, n: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(eps), math.log(eps) + (K_MAX + 1) * math.log(2.0), n))


def improper_integral_verdict(h: Expr, eps: float) -> IntegralVerdict:
    """Decide whether the integral of h over [eps, inf) converges.

    h must be nonnegative on [eps, inf); this is spot-checked on 512
    log-spaced points.  Integrand magnitudes are evaluated through the
    structural log form, so super-exponential growth is classified
    without ever overflowing.
    """
    if not eps > 0.0:
        raise InvalidArgumentError(f"eps must be > 0, got {eps}")
    h_fn = compile_array(h)
    log_fn = compile_log_array(h)

    # sign spot-check: only finite direct evaluations carry sign information
    pts = _log_spaced(eps, 512)
    direct = h_fn(pts)
    finite = np.isfinite(direct)
    if np.any(direct[finite] < -1e-12):
        x_bad = float(pts[finite][np.argmin(direct[finite])])
        raise IntegrandError(f"integrand is negative near x={x_bad:.6g}")

    # log fast path: a super-exponentially growing integrand diverges
    scan = log_fn(_log_spaced(eps, 64))
    tail = scan[-16:]
    if tail[-1] > LOG_OVERFLOW and np.all(np.diff(tail) > 0.0):
        return IntegralVerdict(
            status=DIVERGENT,
            fast_path=True,
            detail="log-integrand increases beyond exp overflow",
        )

    blocks: list[tuple[int, float, float, float]] = []
    integrals: list[float] = []
    partial = 0.0
    chunk = 10  # blocks integrated per evaluator call

    for k_lo in range(0, K_MAX + 1, chunk):
        ks = range(k_lo, min(k_lo + chunk, K_MAX + 1))
        los = np.array([eps * 2.0 ** k for k in ks])
        his = 2.0 * los
        centers = 0.5 * (los + his)
        half = 0.5 * (his - los)
        xs = centers[:, None] + half[:, None] * _GL_NODES[None, :]
        vals = np.exp(log_fn(xs.ravel()).reshape(xs.shape))
        chunk_ints = (vals @ _GL_WEIGHTS) * half

        for j, k in enumerate(ks):
            ik = float(chunk_ints[j])
            if math.isnan(ik) or math.isinf(ik):
                raise IntegrandError(f"non-finite block integral at k={k}")
            blocks.append((k, float(los[j]), float(his[j]), ik))
            integrals.append(ik)
            partial += ik
            if partial > DIVERGE_SUM:
                return IntegralVerdict(
                    status=DIVERGENT,
                    blocks=blocks,
                    partial_sum=partial,
                    detail=f"partial sum exceeded {DIVERGE_SUM:.0e}",
                )
            decided = _try_convergent(integrals, partial, blocks)
            if decided is not None:
                return decided

    # exhausted all blocks without an early exit
    win = np.array(integrals[-WINDOW:])
    if np.all(win[1:] >= win[:-1] * (1.0 - 1e-12)):
        return IntegralVerdict(
            status=DIVERGENT,
            blocks=blocks,
            partial_sum=partial,
            detail="trailing blocks are non-decreasing",
        )
    verdict = _fit_tail(integrals, partial)
    if verdict is not None:
        ratio, tail_fit, spread = verdict
        if spread < 1e-6 * (abs(partial) + 1.0):
            return IntegralVerdict(
                status=CONVERGENT,
                value=partial + tail_fit,
                blocks=blocks,
                ratio_fit=ratio,
                partial_sum=partial,
                detail="geometric tail fit at exhaustion",
            )
    return IntegralVerdict(
        status=UNDECIDED,
        blocks=blocks,
        partial_sum=partial,
        detail="trailing blocks neither decay geometrically nor grow",
    )


def _fit_tail(integrals: list[float], partial: float):
    """Geometric tail (ratio_fit, tail, spread) from the trailing window,
    or None when the window does not decay below the ratio threshold."""
    win = integrals[-WINDOW:]
    prev = np.array(win[:-1])
    nxt = np.array(win[1:])
    if np.any(prev <= 0.0) or np.any(nxt >= prev):
        return None
    ratios = nxt / prev
    rmax = float(ratios.max())
    if rmax >= RATIO_THRESHOLD:
        return None
    rmin = float(ratios.min())
    with np.errstate(divide="ignore"):  # a zero ratio fits a zero tail
        rfit = float(np.exp(np.mean(np.log(ratios))))
    last = win[-1]
    tail_fit = last * rfit / (1.0 - rfit)
    spread = last * rmax / (1.0 - rmax) - last * rmin / (1.0 - rmin)
    return rfit, tail_fit, spread


def _try_convergent(integrals: list[float], partial: float, blocks: list):
    """Early convergent exit once the tail is certifiably negligible."""
    if len(integrals) < WINDOW:
        return None
    tol = 1e-9 * (abs(partial) + 1.0)
    win = integrals[-WINDOW:]
    if all(v <= tol * 1e-3 for v in win):
        return IntegralVerdict(
            status=CONVERGENT,
            value=partial,
            blocks=list(blocks),
            ratio_fit=0.0,
            partial_sum=partial,
            detail="trailing blocks vanish",
        )
    fit = _fit_tail(integrals, partial)
    if fit is None:
        return None
    ratio, tail_fit, spread = fit
    if spread < tol:
        return IntegralVerdict(
            status=CONVERGENT,
            value=partial + tail_fit,
            blocks=list(blocks),
            ratio_fit=ratio,
            partial_sum=partial,
            detail="geometric tail certified",
        )
    return None


# ---------------------------------------------------------------------------
# criteria


def kotani_classify(a: Expr, eps: float = 1.0) -> Verdict:
    """Martingale test for dM = a(M) dW via the tail integral of x/a(x)^2.

    A convergent integral identifies a strict local martingale, a
    divergent one a true martingale.  The coefficient must be positive on
    the sampled tail grid.
    """
    a_fn = compile_array(a)
    pts = _log_spaced(eps, 512)
    vals = a_fn(pts)
    finite = np.isfinite(vals)
    if np.any(vals[finite] <= 0.0) or np.any(np.isnan(vals)):
        raise ModelInvalidError("coefficient a(x) must be positive on [eps, inf)")
    h = Div(Var(), Pow(a, Num(2.0)))
    iv = improper_integral_verdict(h, eps)
    status = {CONVERGENT: STRICT_LOCAL, DIVERGENT: MARTINGALE}.get(iv.status, INCONCLUSIVE)
    return Verdict(
        status=status,
        evidence=[("tail integral of x/a(x)^2", iv)],
        notes="convergent tail integral <=> strict local martingale",
    )


def _gaussian_weighted(g_side: Expr, power: float, s: float, normalized: bool) -> Expr:
    """|g(x)|^power * exp(-x^2/(2s)) [ / sqrt(2 pi s) ] as an expression."""
    weight = Call("exp", Neg(Div(Pow(Var(), Num(2.0)), Num(2.0 * s))))
    core = Mul(Pow(Call("abs", g_side), Num(power)), weight)
    if normalized:
        return Mul(core, Num(1.0 / math.sqrt(2.0 * math.pi * s)))
    return core


def _half_line_status(h: Expr, eps: float = 1.0):
    return improper_integral_verdict(h, eps)


def _l2_scan(g: Expr, t: float):
    """Convergence of int g(x)^2 exp(-x^2/(2s)) dx on a 64-point s-grid.

    Returns (status, evidence) where evidence carries the per-s verdicts
    for both half-lines.
    """
    s_grid = [t * j / 64.0 for j in range(1, 65)]
    evidence = []
    diverged_interior = False
    all_convergent = True
    for s in s_grid:
        for label, g_side in (("+", g), ("-", reflect_var(g))):
            iv = _half_line_status(_gaussian_weighted(g_side, 2.0, s, normalized=False))
            evidence.append((f"L2 inner integral s={s:.6g} {label} half-line", iv))
            if iv.status != CONVERGENT:
                all_convergent = False
                if iv.status == DIVERGENT and s < t:
                    diverged_interior = True
    if all_convergent:
        return L2_MARTINGALE, evidence
    if diverged_interior:
        return NOT_L2, evidence
    return L2_UNDECIDED, evidence


def l2_test(g: Expr, t: float) -> str:
    """L2-martingale test for the integral of g(W) up to time t.

    L2Martingale when E g(W_s)^2 is integrable for every sampled s <= t;
    NotL2 when the inner Gaussian integral diverges for some s < t.
    """
    if not t > 0.0:
        raise InvalidArgumentError(f"t must be > 0, got {t}")
    status, _ = _l2_scan(g, t)
    return status


def integrand_small_moment_classify(
    g: Expr, t: float, alphas: Sequence[float] = (0.25, 0.5, 0.9)
) -> Verdict:
    """Small-moment divergence test for the Ito integral of g(W).

    For each alpha the inner integral E|g(W_s)|^alpha is tested at the
    witness time s = t/2 on both half-lines; divergence for one alpha
    already certifies a strict local martingale.  If every alpha is
    convergent and the L2 test passes, the integral is a martingale; any
    other combination stays inconclusive.  An L2 martingale is never
    reported strict (consistency guard).
    """
    if not t > 0.0:
        raise InvalidArgumentError(f"t must be > 0, got {t}")
    alphas = list(alphas)
    if not alphas or any(not 0.0 < a < 1.0 for a in alphas):
        raise InvalidArgumentError("alphas must be a nonempty subset of (0, 1)")

    s = t / 2.0
    evidence = []
    any_divergent = False
    all_convergent = True
    for alpha in alphas:
        for label, g_side in (("+", g), ("-", reflect_var(g))):
            iv = _half_line_status(_gaussian_weighted(g_side, alpha, s, normalized=True))
            evidence.append(
                (f"E|g(W_s)|^{alpha:g} inner integral, s=t/2, {label} half-line", iv)
            )
            if iv.status == DIVERGENT:
                any_divergent = True
            elif iv.status != CONVERGENT:
                all_convergent = False

    l2_status, l2_evidence = _l2_scan(g, t)
    evidence.append(("L2 test", {"status": l2_status, "count": len(l2_evidence)}))

    if l2_status == L2_MARTINGALE:
        if any_divergent:
            return Verdict(
                status=INCONCLUSIVE,
                evidence=evidence,
                notes="small-moment divergence contradicts the L2 test; not trusted",
            )
        return Verdict(
            status=MARTINGALE,
            evidence=evidence,
            notes=f"L2 martingale on [0, {t:g}]",
        )
    if any_divergent:
        return Verdict(
            status=STRICT_LOCAL,
            evidence=evidence,
            notes="a small moment of the supremum diverges",
        )
    if all_convergent:
        return Verdict(
            status=INCONCLUSIVE,
            evidence=evidence,
            notes="small moments finite but L2 test did not pass",
        )
    return Verdict(status=INCONCLUSIVE, evidence=evidence, notes="tests undecided")


@dataclass
class DichotomyResult:
    """Finiteness verdict for E F(sup M) with the integral evidence."""

    status: str
    integral: IntegralVerdict


def dichotomy_f_moment(fprime: Expr, eps: float = 1.0) -> DichotomyResult:
    """E F(sup M) finiteness for a strict local martingale via F'(y)/y.

    The user supplies F' explicitly and asserts the W^{1,1} regularity of
    F; only the tail integral is checked here.
    """
    h = Div(fprime, Var())
    iv = improper_integral_verdict(h, eps)
    status = {CONVERGENT: FINITE, DIVERGENT: INFINITE}.get(iv.status, "Inconclusive")
    return DichotomyResult(status=status, integral=iv)
