"""Core domain types: time grids, sample paths, random streams, process models.

Everything here is immutable after construction and safe to share across
threads.  Estimators fan paths out by stream id, so all randomness is
derived per path from (master_seed, stream_id) and replays bit-identically.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
from scipy.special import ndtri

from . import _philox

if TYPE_CHECKING:  # pragma: no cover
    from .expr import Expr

# Finite stand-in for values beyond float range.  Overflowed paths are
# clamped here and counted; tail scans read them as "at least this large",
# mean estimates drop them.
OVERFLOW_SENTINEL = 1e300

# marker for "path never overflowed" in per-path step indices
NO_OVERFLOW = np.iinfo(np.int64).max


class SlmError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(SlmError, ValueError):
    """An argument violates an operation's precondition."""


class ModelInvalidError(SlmError, ValueError):
    """A process model fails its own validity constraints."""


class EstimationFailedError(SlmError, RuntimeError):
    """An estimator could not produce a usable estimate."""


# ---------------------------------------------------------------------------
# time grids


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [t_start, t_end] with n_steps steps."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not (self.t_end > self.t_start >= 0.0):
            raise InvalidArgumentError(
                f"need t_end > t_start >= 0, got [{self.t_start}, {self.t_end}]"
            )
        if self.n_steps < 1:
            raise InvalidArgumentError(f"need n_steps >= 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    def nodes(self) -> np.ndarray:
        # linspace pins both endpoints exactly and is bit-reproducible
        return np.linspace(self.t_start, self.t_end, self.n_steps + 1)

    def index_of(self, t: float) -> int:
        """Index of the node equal to t, or raise if t is not a node."""
        nodes = self.nodes()
        i = int(np.argmin(np.abs(nodes - t)))
        if abs(nodes[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise InvalidArgumentError(f"t={t} is not a node of the grid")
        return i


def uniform_grid(t_end: float, n_steps: int) -> TimeGrid:
    """Uniform grid on [0, t_end]."""
    if not t_end > 0.0:
        raise InvalidArgumentError(f"need t_end > 0, got {t_end}")
    if n_steps < 1:
        raise InvalidArgumentError(f"need n_steps >= 1, got {n_steps}")
    return TimeGrid(0.0, float(t_end), int(n_steps))


# ---------------------------------------------------------------------------
# random streams


def _normals_inplace(u: np.ndarray, threads: int = 1) -> np.ndarray:
    """Map uniforms to standard normals via the inverse CDF, in place.

    ndtri is monotone in the uniform draw and accurate to ~1e-15, and the
    call releases the GIL, so large arrays are split across a small thread
    pool.  The split is by fixed row ranges, so results do not depend on
    the thread count.
    """
    if threads <= 1 or u.ndim != 2 or u.shape[0] < 2 or u.size < 65536:
        return ndtri(u, out=u)
    rows = u.shape[0]
    workers = min(threads, rows)
    bounds = [(i * rows // workers, (i + 1) * rows // workers) for i in range(workers)]
    with ThreadPoolExecutor(workers) as ex:
        list(ex.map(lambda b: ndtri(u[b[0]:b[1]], out=u[b[0]:b[1]]), bounds))
    return u


def uniform_block(
    master_seed: int, stream_start: int, count: int, n: int, offset: int = 0
) -> np.ndarray:
    """(count, n) matrix of uniforms; row r holds draws offset..offset+n-1
    of stream stream_start + r."""
    k0, k1 = _philox.philox_key(master_seed)
    out = np.empty((count, n), dtype=np.float64)
    if n > 0:
        _philox.fill_uniforms(k0, k1, stream_start & _philox._MASK64, offset, out)
    return out


def normal_block(
    master_seed: int,
    stream_start: int,
    count: int,
    n: int,
    offset: int = 0,
    threads: int = 1,
) -> np.ndarray:
    """(count, n) matrix of standard normals from the per-path streams."""
    u = uniform_block(master_seed, stream_start, count, n, offset)
    return _normals_inplace(u, threads)


@dataclass(frozen=True)
class RandomSource:
    """Deterministic per-path randomness for (master_seed, stream_id).

    Draws are stateless: uniforms(n, start=j) always returns draws
    j..j+n-1 of the stream, so replay is bit-identical across runs,
    processes and thread counts.
    """

    master_seed: int
    stream_id: int

    def uniforms(self, n: int, start: int = 0) -> np.ndarray:
        return uniform_block(self.master_seed, self.stream_id, 1, n, start)[0]

    def normals(self, n: int, start: int = 0) -> np.ndarray:
        u = self.uniforms(n, start)
        return ndtri(u, out=u)

    def generator(self) -> np.random.Generator:
        """numpy Generator on a Philox stream keyed by (master_seed, stream_id).

        Used only for discrete draws (Poisson / Gamma) in the exact
        squared-Bessel sampler; Gaussian draws always go through the
        inverse CDF instead.
        """
        k0 = _philox.splitmix64(self.master_seed)
        k1 = _philox.splitmix64(k0 ^ _philox.splitmix64(self.stream_id))
        key = np.array([k0, k1], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def derive_stream(master_seed: int, stream_id: int) -> RandomSource:
    """Stream for (master_seed, stream_id); same inputs, same bits."""
    return RandomSource(int(master_seed), int(stream_id))


# ---------------------------------------------------------------------------
# sample paths


@dataclass
class SamplePath:
    """One realized trajectory on a time grid.

    values[i] is the process value at node i.  Values are always finite;
    paths that left the representable range are clamped to
    OVERFLOW_SENTINEL from overflow_index on and flagged.
    """

    grid: TimeGrid
    values: np.ndarray
    overflow_index: Optional[int] = None
    clamp_count: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_steps + 1,):
            raise InvalidArgumentError(
                f"values length {self.values.shape} does not match grid "
                f"({self.grid.n_steps + 1} nodes)"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("sample path contains non-finite values")

    @property
    def overflowed(self) -> bool:
        return self.overflow_index is not None


# ---------------------------------------------------------------------------
# process models


@dataclass(frozen=True)
class Brownian:
    """One-dimensional Brownian motion from x0."""

    x0: float = 0.0


@dataclass(frozen=True)
class Besq:
    """Squared Bessel process of dimension delta from x0 >= 0."""

    delta: float
    x0: float = 1.0

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ModelInvalidError(f"Besq needs delta > 0, got {self.delta}")
        if self.x0 < 0.0:
            raise ModelInvalidError(f"Besq needs x0 >= 0, got {self.x0}")


@dataclass(frozen=True)
class BesselPower:
    """R^(2-delta) for a delta-dimensional Bessel process R, delta > 2.

    The negative exponent makes this the canonical family of positive
    strict local martingales.
    """

    delta: float
    x0: float = 1.0

    def __post_init__(self):
        if not self.delta > 2.0:
            raise ModelInvalidError(f"BesselPower needs delta > 2, got {self.delta}")
        if not self.x0 > 0.0:
            raise ModelInvalidError(f"BesselPower needs x0 > 0, got {self.x0}")


@dataclass(frozen=True)
class InverseBes3:
    """Reciprocal of a 3-dimensional Bessel process from x0 > 0."""

    x0: float = 1.0

    def __post_init__(self):
        if not self.x0 > 0.0:
            raise ModelInvalidError(f"InverseBes3 needs x0 > 0, got {self.x0}")


@dataclass(frozen=True)
class GenericDiffusion:
    """Driftless diffusion dM = a(M) dW from x0 > 0, Euler-discretized.

    positivity selects what happens when an explicit Euler update crosses
    zero: 'reflect' mirrors to |value| (default), 'absorb' pins the value
    at 1e-12.  Either way the trigger count is reported on the path.
    """

    a: "Expr"
    x0: float
    positivity: str = "reflect"

    def __post_init__(self):
        if not self.x0 > 0.0:
            raise ModelInvalidError(f"GenericDiffusion needs x0 > 0, got {self.x0}")
        if self.positivity not in ("reflect", "absorb"):
            raise ModelInvalidError(
                f"positivity must be 'reflect' or 'absorb', got {self.positivity!r}"
            )


@dataclass(frozen=True)
class ItoIntegral:
    """Ito integral of g along the driving Brownian path: sum g(W) dW.

    W starts at x0; the integral itself starts at 0.
    """

    g: "Expr"
    x0: float = 0.0


@dataclass(frozen=True)
class PrescribedMean:
    """Time-changed inverse Bessel-3 whose mean curve is m(t).

    Requires m(0) = 1 and m nonincreasing on the simulated horizon; both
    are checked numerically on the grid when sampling.  The start value
    is fixed at 1.
    """

    m: "Expr"
    x0: float = 1.0

    def __post_init__(self):
        if self.x0 != 1.0:
            raise ModelInvalidError("PrescribedMean is built from x0 = 1")


ProcessModel = Union[
    Brownian, Besq, BesselPower, InverseBes3, GenericDiffusion, ItoIntegral,
    PrescribedMean,
]


# ---------------------------------------------------------------------------
# verdicts and tail functionals

MARTINGALE = "Martingale"
STRICT_LOCAL = "StrictLocal"
INCONCLUSIVE = "Inconclusive"


@dataclass
class Verdict:
    """Classifier output with the numeric evidence that produced it."""

    status: str
    evidence: list = field(default_factory=list)  # (criterion name, trace) pairs
    notes: str = ""

    def __post_init__(self):
        if self.status not in (MARTINGALE, STRICT_LOCAL, INCONCLUSIVE):
            raise InvalidArgumentError(f"unknown verdict status {self.status!r}")
        if not self.evidence:
            raise InvalidArgumentError("a verdict must carry at least one evidence entry")


@dataclass(frozen=True)
class TailQuantities:
    """Finite-lambda tail functional and martingale defect at time t.

    ell approximates limsup lambda * P(sup |M| >= lambda); gamma is the
    defect E[M_0 - M_t].  Both are nonnegative; for positive local
    martingales gamma is bounded by E[M_0].
    """

    ell: float
    gamma: float
    t: float

    def __post_init__(self):
        if not self.ell >= 0.0:
            raise InvalidArgumentError(f"ell must be >= 0, got {self.ell}")
        if not self.gamma >= 0.0:
            raise InvalidArgumentError(f"gamma must be >= 0, got {self.gamma}")
