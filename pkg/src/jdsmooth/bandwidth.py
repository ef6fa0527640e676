"""Bandwidth selection: rule of thumb, grid search, cross-validation, plug-in.

The rule of thumb scales the sample standard deviation of the proxy,

    h = c * S * T^(-2/5)   (interior target),
    h = c * S * T^(-1/5)   (boundary target),

and the other selectors refine the scale constant c or h itself.  The
simulation-oriented grid search scores candidate constants against a known
truth; k-block cross-validation scores candidate bandwidths by one-sided
prediction of the drift response with a 2k+1 wide block around each point
held out, which breaks the serial dependence that defeats ordinary
leave-one-out on diffusion data.  The asymptotic plug-in balances squared
bias against variance pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DegenerateDesignError, SparseRegionError
from .kernels import (
    KernelFamily,
    KernelSpec,
    PointRegime,
    RegimeKind,
    boundary_variance_constant,
)
from .locallinear import Target, _fit_arrays
from .proxy import ProxySeries, build_regression_triples

_GRID_COUNT = 25
_GRID_SPAN = (0.2, 5.0)
_DEFAULT_GRID_C = 2.0


class BandwidthMethod(Enum):
    RULE_OF_THUMB = "rule_of_thumb"
    MSE_GRID = "mse_grid"
    BLOCK_CV = "block_cv"
    ASYMPTOTIC_PLUGIN = "asymptotic_plugin"


@dataclass(frozen=True)
class BandwidthChoice:
    """A selected bandwidth plus the score curve that produced it."""

    h: float
    method: BandwidthMethod
    candidates: np.ndarray = field(default_factory=lambda: np.empty(0))
    objectives: np.ndarray = field(default_factory=lambda: np.empty(0))
    c: float | None = None
    k: int | None = None
    failures: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValueError(f"selected bandwidth must be positive, got {self.h!r}")
        if self.candidates.size != self.objectives.size:
            raise ValueError("candidates and objectives must align")


def _proxy_scale(p: ProxySeries) -> float:
    s = float(np.std(p.values, ddof=1)) if len(p) > 1 else 0.0
    if not (s > 0):
        raise ValueError("proxy series has no spread; cannot scale a bandwidth")
    return s


def _rot_exponent(regime: RegimeKind) -> float:
    return -0.4 if regime is RegimeKind.INTERIOR else -0.2


def rule_of_thumb(
    p: ProxySeries,
    c: float,
    T: float,
    regime: RegimeKind = RegimeKind.INTERIOR,
) -> BandwidthChoice:
    """h = c * std(proxy) * T^(-2/5), or T^(-1/5) for boundary targets."""
    if not (math.isfinite(c) and c > 0):
        raise ValueError(f"scale constant c must be positive, got {c!r}")
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"horizon T must be positive, got {T!r}")
    s = _proxy_scale(p)
    h = c * s * T ** _rot_exponent(regime)
    return BandwidthChoice(h=h, method=BandwidthMethod.RULE_OF_THUMB, c=c)


def default_h_grid(
    p: ProxySeries,
    count: int = _GRID_COUNT,
    span: tuple[float, float] = _GRID_SPAN,
    T: float | None = None,
) -> np.ndarray:
    """Log-spaced candidate bandwidths around the rule-of-thumb value.

    T defaults to the observation span delta * n of the proxy itself.
    """
    if count < 2:
        raise ValueError("need at least two candidates")
    if T is None:
        T = p.delta * len(p)
    rot = rule_of_thumb(p, c=_DEFAULT_GRID_C, T=T).h
    return np.geomspace(span[0] * rot, span[1] * rot, count)


def mse_grid_search(
    truth: Callable[[np.ndarray], np.ndarray],
    p: ProxySeries,
    c_grid,
    T: float,
    eval_grid,
    family: KernelFamily = KernelFamily.GAMMA,
    target: Target = Target.DRIFT,
    regime: RegimeKind = RegimeKind.INTERIOR,
) -> BandwidthChoice:
    """Score rule-of-thumb scale constants against a known truth.

    For each candidate c the curve is fitted at h(c) over eval_grid and
    scored by mean squared error against truth(x); failed grid points are
    dropped from the average and counted.  Ties go to the smallest
    candidate.  Only meaningful in simulation studies where the truth is
    available.
    """
    c_grid = np.sort(np.asarray(c_grid, dtype=float))
    eval_grid = np.asarray(eval_grid, dtype=float)
    if c_grid.size == 0 or eval_grid.size == 0:
        raise ValueError("candidate and evaluation grids must be nonempty")
    triples = build_regression_triples(p)
    s = _proxy_scale(p)
    exponent = _rot_exponent(regime)
    true_vals = np.asarray(truth(eval_grid), dtype=float)

    objectives = np.full(c_grid.size, np.inf)
    failures = 0
    y = triples.response(target)
    for j, c in enumerate(c_grid):
        h = c * s * T**exponent
        spec = KernelSpec(family, h)
        errs = []
        for x, tv in zip(eval_grid, true_vals):
            if family is KernelFamily.GAMMA and x < 0:
                failures += 1
                continue
            try:
                fit = _fit_arrays(
                    triples.weight_points, triples.design_points, y, spec, float(x)
                )
            except (SparseRegionError, DegenerateDesignError):
                failures += 1
                continue
            errs.append((fit.intercept - tv) ** 2)
        if errs:
            objectives[j] = math.fsum(errs) / len(errs)
    if not np.any(np.isfinite(objectives)):
        raise SparseRegionError(
            float(eval_grid[0]), "every candidate bandwidth failed at every point"
        )
    best = int(np.argmin(objectives))
    c_best = float(c_grid[best])
    return BandwidthChoice(
        h=c_best * s * T**exponent,
        method=BandwidthMethod.MSE_GRID,
        candidates=c_grid,
        objectives=objectives,
        c=c_best,
        failures=failures,
    )


def leave_out_mask(
    n_triples: int, source_offset: int, center: int, half_width: int
) -> np.ndarray:
    """Inclusion mask dropping triples whose proxy index is in the block.

    Triple j refers to proxy index j + source_offset; the block spans
    proxy indices [center - half_width, center + half_width].
    """
    idx = np.arange(n_triples) + source_offset
    return (idx < center - half_width) | (idx > center + half_width)


def block_cv(
    p: ProxySeries,
    h_grid=None,
    k: int | None = None,
    family: KernelFamily = KernelFamily.GAMMA,
    on_fold: Callable[[int, np.ndarray], None] | None = None,
) -> BandwidthChoice:
    """k-block cross-validation for the drift bandwidth.

    CV(h) = n^-1 sum_i {drift response_i - mu_hat_{h,-i}(Xt_i)}^2 where
    mu_hat_{h,-i} omits the 2k+1 observations centered on i.  The default
    block half-width is round(n^(1/4)).  Leave-out fits that fail (sparse
    region, collinear design, evaluation point outside the kernel support)
    contribute the unconditional response variance, which penalizes
    degenerate candidates without discarding them.  On ties the smallest
    bandwidth wins.  ``on_fold`` is a diagnostics hook receiving each
    (center index, inclusion mask) pair.
    """
    n = len(p)
    if k is None:
        k = int(round(n**0.25))
    k = int(k)
    if k < 1:
        raise ValueError("block half-width k must be at least 1")
    if n < 4 * k + 4:
        raise ValueError(
            f"series of length {n} is too short for block width k={k}"
        )
    if h_grid is None:
        h_grid = default_h_grid(p)
    h_grid = np.sort(np.asarray(h_grid, dtype=float))
    if h_grid.size == 0 or np.any(h_grid <= 0):
        raise ValueError("h_grid must contain positive bandwidths")

    triples = build_regression_triples(p)
    m = len(triples)
    off = triples.source_offset
    v = p.values
    resp = triples.drift
    penalty = float(np.var(resp))

    # proxy index i runs k+1 .. n-k in 1-based terms; convert to 0-based
    centers = np.arange(k + 1, n - k + 1)
    objectives = np.empty(h_grid.size)
    failures = 0
    for jh, h in enumerate(h_grid):
        spec = KernelSpec(family, float(h))
        terms = []
        for i in centers:
            mask = leave_out_mask(m, off, int(i), k)
            if on_fold is not None and jh == 0:
                on_fold(int(i), mask)
            x = float(v[i - 1])
            # the response being predicted: the triple with design point
            # Xt_i sits at array position i - off
            y_i = float(resp[i - off])
            if family is KernelFamily.GAMMA and x < 0:
                terms.append(penalty)
                failures += 1
                continue
            try:
                fit = _fit_arrays(
                    triples.weight_points[mask],
                    triples.design_points[mask],
                    resp[mask],
                    spec,
                    x,
                )
            except (SparseRegionError, DegenerateDesignError):
                terms.append(penalty)
                failures += 1
                continue
            terms.append((y_i - fit.intercept) ** 2)
        objectives[jh] = math.fsum(terms) / n
    best = int(np.argmin(objectives))
    return BandwidthChoice(
        h=float(h_grid[best]),
        method=BandwidthMethod.BLOCK_CV,
        candidates=h_grid,
        objectives=objectives,
        k=k,
        failures=failures,
    )


def asymptotic_h_opt(
    x: float,
    n: int,
    delta: float,
    m_hat: float,
    p_hat: float,
    curvature: float,
    regime: PointRegime,
) -> BandwidthChoice:
    """Pointwise plug-in bandwidth balancing squared bias and variance.

    Interior: bias h (x/2) f'' against variance M / (2 sqrt(pi x) p) over
    rate n delta h^(1/2) gives h ~ (n delta)^(-2/5).  Boundary kappa:
    bias h^2 (2+kappa)/2 f'' against the boundary variance constant over
    rate n delta h gives h ~ (n delta)^(-1/5).
    """
    if not (math.isfinite(curvature) and curvature != 0.0):
        raise ValueError("plug-in bandwidth needs nonzero curvature")
    if not (p_hat > 0):
        raise ValueError(f"density estimate must be positive, got {p_hat!r}")
    if not (m_hat > 0):
        raise ValueError(f"variance numerator must be positive, got {m_hat!r}")
    if not (n > 0 and delta > 0):
        raise ValueError("need positive n and delta")
    nd = n * delta
    if regime.kind is RegimeKind.INTERIOR:
        if not (x > 0):
            raise ValueError("interior plug-in needs x > 0")
        variance = m_hat / (2.0 * math.sqrt(math.pi) * math.sqrt(x) * p_hat)
        h = (variance * 4.0 / (x * curvature) ** 2 / nd) ** 0.4
    else:
        kappa = float(regime.kappa)
        variance = boundary_variance_constant(kappa) * m_hat / p_hat
        h = (variance * 4.0 / ((2.0 + kappa) * curvature) ** 2 / nd) ** 0.2
    return BandwidthChoice(h=float(h), method=BandwidthMethod.ASYMPTOTIC_PLUGIN)
