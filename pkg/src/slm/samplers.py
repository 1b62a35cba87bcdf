"""Path samplers for every process family in the catalogue.

Exact transition sampling is used wherever the law is available (Brownian
motion, squared Bessel, inverse Bessel-3, the prescribed-mean time change);
generic diffusions fall back to explicit Euler with a reported positivity
policy.  All samplers are pure functions of (model, grid, random source) and
block variants exist so estimators can stream many paths without Python
overhead per path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from . import _philox
from .core import (
    NO_OVERFLOW,
    OVERFLOW_SENTINEL,
    Besq,
    BesselPower,
    Brownian,
    GenericDiffusion,
    InvalidArgumentError,
    InverseBes3,
    ItoIntegral,
    ModelInvalidError,
    PrescribedMean,
    ProcessModel,
    RandomSource,
    SamplePath,
    TimeGrid,
    normal_block,
    uniform_block,
    _normals_inplace,
)
from .expr import EvalDomainError, Expr, compile_array, eval_expr

# paths per block when estimators stream; fixed so that reductions are
# independent of thread count
BLOCK_SIZE = 1024

_ABSORB_FLOOR = 1e-12

# Explicit Euler on superlinear coefficients diverges irreversibly long
# before float overflow (one more step squares the value); a path beyond
# this level is a discretization artifact, not a feature of the law, so it
# is flagged as overflowed and reported.  Exact samplers never use this.
EULER_DIVERGENCE_CAP = 1e9


@dataclass(frozen=True)
class BesqState:
    """State of a squared Bessel process: dimension and current value."""

    delta: float
    x: float

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ModelInvalidError(f"delta must be > 0, got {self.delta}")
        if self.x < 0.0:
            raise ModelInvalidError(f"squared Bessel value must be >= 0, got {self.x}")


@dataclass
class PathBlock:
    """A contiguous block of simulated paths.

    values has one row per path and one column per grid node.  Rows that
    overflowed are clamped to OVERFLOW_SENTINEL from overflow_at[r] on;
    overflow_at is NO_OVERFLOW for clean rows.  clamp_count records
    positivity-policy triggers (Euler only).
    """

    values: np.ndarray
    overflow_at: np.ndarray
    clamp_count: np.ndarray


def _empty_block(count: int, n_nodes: int) -> PathBlock:
    return PathBlock(
        values=np.empty((count, n_nodes), dtype=np.float64),
        overflow_at=np.full(count, NO_OVERFLOW, dtype=np.int64),
        clamp_count=np.zeros(count, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# squared Bessel: exact noncentral chi-squared transitions


def besq_transition(state: BesqState, dt: float, rng: np.random.Generator) -> BesqState:
    """One exact BESQ step: N ~ Poisson(x/(2 dt)), then Gamma(d/2 + N, 2 dt)."""
    if dt < 0.0:
        raise InvalidArgumentError(f"dt must be >= 0, got {dt}")
    if dt == 0.0:
        return state
    n_mix = rng.poisson(state.x / (2.0 * dt))
    x_new = rng.gamma(state.delta / 2.0 + n_mix, 2.0 * dt)
    return BesqState(state.delta, x_new)


def _besq_block(
    delta: float, x0: float, dts: np.ndarray, master_seed: int, start: int, count: int
) -> PathBlock:
    block = _empty_block(count, len(dts) + 1)
    half_delta = delta / 2.0
    # one Philox object re-keyed per path: identical streams to
    # RandomSource.generator() at a fraction of the construction cost
    bitgen = np.random.Philox(key=np.zeros(2, dtype=np.uint64))
    rng = np.random.Generator(bitgen)
    state = bitgen.state
    k0 = _philox.splitmix64(master_seed)
    for r in range(count):
        state["state"]["counter"][:] = 0
        state["state"]["key"][0] = k0
        state["state"]["key"][1] = _philox.splitmix64(k0 ^ _philox.splitmix64(start + r))
        state["buffer_pos"] = 4
        bitgen.state = state
        x = x0
        block.values[r, 0] = x
        for i, dt in enumerate(dts):
            if dt > 0.0:
                n_mix = rng.poisson(x / (2.0 * dt))
                x = rng.gamma(half_delta + n_mix, 2.0 * dt)
            block.values[r, i + 1] = x
    return block


def sample_besq_exact(
    delta: float, x0: float, grid: TimeGrid, rs: RandomSource
) -> SamplePath:
    """Squared Bessel path with exact-in-law marginals at the grid nodes."""
    BesqState(delta, x0)  # validates
    dts = np.diff(grid.nodes())
    block = _besq_block(delta, x0, dts, rs.master_seed, rs.stream_id, 1)
    return SamplePath(grid, block.values[0])


# ---------------------------------------------------------------------------
# Brownian motion


def _brownian_block(
    x0: float, dts: np.ndarray, master_seed: int, start: int, count: int, threads: int = 1
) -> PathBlock:
    n = len(dts)
    z = normal_block(master_seed, start, count, n, threads=threads)
    z *= np.sqrt(dts)
    block = _empty_block(count, n + 1)
    block.values[:, 0] = x0
    np.cumsum(z, axis=1, out=block.values[:, 1:])
    if x0 != 0.0:
        block.values[:, 1:] += x0
    return block


def sample_brownian_path(grid: TimeGrid, x0: float, rs: RandomSource) -> SamplePath:
    """Brownian path: independent N(0, dt) increments from x0."""
    dts = np.diff(grid.nodes())
    block = _brownian_block(x0, dts, rs.master_seed, rs.stream_id, 1)
    return SamplePath(grid, block.values[0])


# ---------------------------------------------------------------------------
# inverse Bessel-3 (and its time-changed relatives)


def _besq3_block(
    x0sq: float, dts: np.ndarray, master_seed: int, start: int, count: int, threads: int = 1
) -> np.ndarray:
    """Exact BESQ(3) node values (count, n+1) via the one-normal-plus-chi2_2
    decomposition of the noncentral chi-squared transition."""
    n = len(dts)
    u = uniform_block(master_seed, start, count, 2 * n)
    z = u[:, :n]
    _normals_inplace(z, threads)
    x = np.empty((count, n + 1), dtype=np.float64)
    _philox.besq3_paths(z, u[:, n:], x0sq, np.ascontiguousarray(dts), x)
    return x


def _inverse_bes3_block(
    x0: float, dts: np.ndarray, master_seed: int, start: int, count: int, threads: int = 1
) -> PathBlock:
    x = _besq3_block(x0 * x0, dts, master_seed, start, count, threads)
    block = _empty_block(count, len(dts) + 1)
    np.power(x, -0.5, out=block.values)
    return block


def sample_inverse_bes3_path(x0: float, grid: TimeGrid, rs: RandomSource) -> SamplePath:
    """Inverse Bessel-3 path 1/R_t from R_0 = x0, exact at the grid nodes."""
    InverseBes3(x0)  # validates
    dts = np.diff(grid.nodes())
    block = _inverse_bes3_block(x0, dts, rs.master_seed, rs.stream_id, 1)
    return SamplePath(grid, block.values[0])


def _inverse_bes3_gaussian_block(
    x0: float, dts: np.ndarray, master_seed: int, start: int, count: int, threads: int = 1
) -> PathBlock:
    n = len(dts)
    z = normal_block(master_seed, start, count, 3 * n, threads=threads)
    z3 = z.reshape(count, 3, n)
    z3 *= np.sqrt(dts)
    w = np.cumsum(z3, axis=2)
    r2 = (x0 + w[:, 0, :]) ** 2 + w[:, 1, :] ** 2 + w[:, 2, :] ** 2
    block = _empty_block(count, n + 1)
    block.values[:, 0] = 1.0 / x0
    np.power(r2, -0.5, out=block.values[:, 1:])
    return block


def sample_inverse_bes3_gaussian(x0: float, grid: TimeGrid, rs: RandomSource) -> SamplePath:
    """Cross-check sampler: 1/|x0 e1 + B_t| with B a 3-d Brownian motion.

    Must agree in law with sample_inverse_bes3_path; the suite holds both
    to a two-sample KS test.
    """
    InverseBes3(x0)
    dts = np.diff(grid.nodes())
    block = _inverse_bes3_gaussian_block(x0, dts, rs.master_seed, rs.stream_id, 1)
    return SamplePath(grid, block.values[0])


def _bessel_power_block(
    delta: float, x0: float, dts: np.ndarray, master_seed: int, start: int, count: int
) -> PathBlock:
    x = _besq_block(delta, x0 * x0, dts, master_seed, start, count)
    np.power(x.values, (2.0 - delta) / 2.0, out=x.values)
    return x


def sample_bessel_power_path(
    delta: float, x0: float, grid: TimeGrid, rs: RandomSource
) -> SamplePath:
    """R^(2-delta) along an exact BESQ(delta) path started at x0^2."""
    BesselPower(delta, x0)  # validates
    dts = np.diff(grid.nodes())
    block = _bessel_power_block(delta, x0, dts, rs.master_seed, rs.stream_id, 1)
    return SamplePath(grid, block.values[0])


def inverse_bes3_mean(t: float, x0: float) -> float:
    """Mean of the inverse Bessel-3 at time t from x0 > 0.

    Closed form (2 Phi(x0/sqrt(t)) - 1) / x0, validated in the test suite
    against direct Monte Carlo of 1/|x0 e1 + B_t| with exact 3-d Gaussian
    sampling before being trusted anywhere else.
    """
    if not x0 > 0.0:
        raise InvalidArgumentError(f"x0 must be > 0, got {x0}")
    if t < 0.0:
        raise InvalidArgumentError(f"t must be >= 0, got {t}")
    if t == 0.0:
        return 1.0 / x0
    return (2.0 * float(ndtr(x0 / math.sqrt(t))) - 1.0) / x0


# ---------------------------------------------------------------------------
# prescribed-mean construction


def _check_mean_expr(m: Expr, horizon: float) -> None:
    """m(0) = 1 and m nonincreasing, checked on 1024 grid points."""
    pts = np.linspace(0.0, horizon, 1024)
    vals = compile_array(m)(pts)
    if not np.all(np.isfinite(vals)):
        raise ModelInvalidError("mean function is not finite on the horizon")
    if abs(vals[0] - 1.0) > 1e-9:
        raise ModelInvalidError(f"mean function must satisfy m(0)=1, got {vals[0]}")
    if np.any(np.diff(vals) > 1e-12):
        raise ModelInvalidError("mean function must be nonincreasing on the horizon")
    if vals[-1] <= 0.0:
        raise InvalidArgumentError("mean function must stay positive on the horizon")


def _solve_time_change(target: float) -> float:
    """Solve r(tau) = target by bisection, r(tau) = 2 Phi(1/sqrt(tau)) - 1."""
    if not 0.0 < target <= 1.0:
        raise InvalidArgumentError(f"mean target must lie in (0, 1], got {target}")
    if target >= 1.0:
        return 0.0
    r = lambda tau: inverse_bes3_mean(tau, 1.0)
    hi = 1.0
    while r(hi) >= target:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        rm = r(mid)
        if abs(rm - target) < 1e-10:
            return mid
        if rm > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def prescribed_mean_time_change(m: Expr, t: float) -> float:
    """Inner time tau(t) with r(tau) = m(t) for the inverse Bessel-3 mean r."""
    if t < 0.0:
        raise InvalidArgumentError(f"t must be >= 0, got {t}")
    if t == 0.0:
        _check_mean_expr(m, max(t, 1e-9))
        return 0.0
    _check_mean_expr(m, t)
    return _solve_time_change(eval_expr(m, t))


@lru_cache(maxsize=128)
def _prescribed_mean_taus(m: Expr, grid: TimeGrid) -> np.ndarray:
    _check_mean_expr(m, grid.t_end)
    m_fn = compile_array(m)
    targets = np.minimum(m_fn(grid.nodes()), 1.0)
    taus = np.array([_solve_time_change(float(v)) for v in targets])
    # monotone m gives nondecreasing taus; guard against solver wiggle
    taus = np.maximum.accumulate(taus)
    taus.setflags(write=False)  # cached: callers only read
    return taus


def _prescribed_mean_block(
    m: Expr, grid: TimeGrid, master_seed: int, start: int, count: int, threads: int = 1
) -> PathBlock:
    taus = _prescribed_mean_taus(m, grid)
    dts = np.diff(taus)
    x = _besq3_block(1.0, dts, master_seed, start, count, threads)
    block = _empty_block(count, grid.n_steps + 1)
    np.power(x, -0.5, out=block.values)
    return block


def sample_prescribed_mean_path(m: Expr, grid: TimeGrid, rs: RandomSource) -> SamplePath:
    """Strict local martingale with mean curve m: inverse Bessel-3 run on the
    inner clock tau(t_i), sampled with exact transitions on the inner grid."""
    block = _prescribed_mean_block(m, grid, rs.master_seed, rs.stream_id, 1)
    return SamplePath(grid, block.values[0])


# ---------------------------------------------------------------------------
# generic diffusion: explicit Euler with positivity policy


def _euler_block(
    a: Expr,
    x0: float,
    dts: np.ndarray,
    master_seed: int,
    start: int,
    count: int,
    positivity: str = "reflect",
    threads: int = 1,
) -> PathBlock:
    n = len(dts)
    a_fn = compile_array(a)
    z = normal_block(master_seed, start, count, n, threads=threads)
    z *= np.sqrt(dts)
    block = _empty_block(count, n + 1)
    m = np.full(count, float(x0))
    block.values[:, 0] = m
    alive = np.ones(count, dtype=bool)
    for i in range(n):
        coeff = a_fn(m)
        if np.any(alive & np.isnan(coeff)):
            raise EvalDomainError(
                f"diffusion coefficient hit a domain error at step {i}"
            )
        with np.errstate(over="ignore", invalid="ignore"):
            new = m + coeff * z[:, i]
        crossed = alive & (new <= 0.0)
        if np.any(crossed):
            block.clamp_count += crossed
            if positivity == "reflect":
                fixed = np.abs(new)
                fixed = np.where(fixed == 0.0, _ABSORB_FLOOR, fixed)
            else:
                fixed = np.full_like(new, _ABSORB_FLOOR)
            new = np.where(crossed, fixed, new)
        bad = alive & (~np.isfinite(new) | (np.abs(new) >= EULER_DIVERGENCE_CAP))
        if np.any(bad):
            block.overflow_at[bad] = i + 1
            new = np.where(bad, OVERFLOW_SENTINEL, new)
            alive &= ~bad
        m = np.where(alive | bad, new, m)
        block.values[:, i + 1] = m
    return block


def euler_maruyama_path(
    a: Expr, x0: float, grid: TimeGrid, rs: RandomSource, positivity: str = "reflect"
) -> SamplePath:
    """Explicit Euler for dM = a(M) dW from x0 > 0.

    Updates crossing zero follow the positivity policy ('reflect' mirrors
    to |value|, 'absorb' pins at 1e-12); the trigger count lands on the
    returned path.  A coefficient domain error aborts the path.  Paths
    beyond EULER_DIVERGENCE_CAP are clamped to the overflow sentinel and
    flagged: superlinear coefficients make the scheme run away with small
    probability, and those excursions belong to the discretization, not
    to the law being approximated.
    """
    GenericDiffusion(a, x0, positivity)  # validates
    if not math.isfinite(eval_expr(a, x0)):
        raise ModelInvalidError(f"a(x0) must be finite, a({x0}) is not")
    dts = np.diff(grid.nodes())
    block = _euler_block(
        a, x0, dts, rs.master_seed, rs.stream_id, 1, positivity=positivity
    )
    ov = block.overflow_at[0]
    return SamplePath(
        grid,
        block.values[0],
        overflow_index=None if ov == NO_OVERFLOW else int(ov),
        clamp_count=int(block.clamp_count[0]),
    )


# ---------------------------------------------------------------------------
# Ito integrals of g(W)


def _ito_block(
    g: Expr,
    x0: float,
    dts: np.ndarray,
    master_seed: int,
    start: int,
    count: int,
    threads: int = 1,
) -> PathBlock:
    n = len(dts)
    w = _brownian_block(x0, dts, master_seed, start, count, threads).values
    g_fn = compile_array(g)
    gv = g_fn(w[:, :-1])
    if np.any(np.isnan(gv)):
        raise EvalDomainError("integrand hit a domain error along a path")
    block = _empty_block(count, n + 1)
    block.values[:, 0] = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        inc = gv * np.diff(w, axis=1)
        np.cumsum(inc, axis=1, out=block.values[:, 1:])
    vals = block.values
    bad = ~np.isfinite(vals) | (np.abs(vals) >= OVERFLOW_SENTINEL)
    rows = np.flatnonzero(bad.any(axis=1))
    for r in rows:
        first = int(np.argmax(bad[r]))
        vals[r, first:] = OVERFLOW_SENTINEL
        block.overflow_at[r] = first
    return block


def ito_integral_path(g: Expr, grid: TimeGrid, rs: RandomSource, x0: float = 0.0) -> SamplePath:
    """Left-point Ito sums M_i = sum_{j<i} g(W_j)(W_{j+1} - W_j), M_0 = 0.

    Paths whose value leaves the representable range are clamped to
    OVERFLOW_SENTINEL from the first bad node on and flagged; estimators
    count them separately.
    """
    dts = np.diff(grid.nodes())
    block = _ito_block(g, x0, dts, rs.master_seed, rs.stream_id, 1)
    ov = block.overflow_at[0]
    return SamplePath(
        grid,
        block.values[0],
        overflow_index=None if ov == NO_OVERFLOW else int(ov),
    )


# ---------------------------------------------------------------------------
# dispatch


def sample_block(
    model: ProcessModel,
    grid: TimeGrid,
    master_seed: int,
    start: int,
    count: int,
    threads: int = 1,
) -> PathBlock:
    """Simulate paths for streams start..start+count-1 as one block.

    Row r is bit-identical to the single-path sampler run with stream id
    start + r, whatever the block boundaries or thread count.
    """
    dts = np.diff(grid.nodes())
    if isinstance(model, Brownian):
        return _brownian_block(model.x0, dts, master_seed, start, count, threads)
    if isinstance(model, Besq):
        return _besq_block(model.delta, model.x0, dts, master_seed, start, count)
    if isinstance(model, BesselPower):
        return _bessel_power_block(model.delta, model.x0, dts, master_seed, start, count)
    if isinstance(model, InverseBes3):
        return _inverse_bes3_block(model.x0, dts, master_seed, start, count, threads)
    if isinstance(model, GenericDiffusion):
        if not math.isfinite(eval_expr(model.a, model.x0)):
            raise ModelInvalidError("a(x0) must be finite")
        return _euler_block(
            model.a, model.x0, dts, master_seed, start, count,
            positivity=model.positivity, threads=threads,
        )
    if isinstance(model, ItoIntegral):
        return _ito_block(model.g, model.x0, dts, master_seed, start, count, threads)
    if isinstance(model, PrescribedMean):
        return _prescribed_mean_block(model.m, grid, master_seed, start, count, threads)
    raise InvalidArgumentError(f"unknown process model {model!r}")


def sample_path(model: ProcessModel, grid: TimeGrid, rs: RandomSource) -> SamplePath:
    """Simulate one path of the given model."""
    block = sample_block(model, grid, rs.master_seed, rs.stream_id, 1)
    ov = block.overflow_at[0]
    return SamplePath(
        grid,
        block.values[0],
        overflow_index=None if ov == NO_OVERFLOW else int(ov),
        clamp_count=int(block.clamp_count[0]),
    )
