"""Difference-quotient proxies and staggered regression triples.

The latent state is observed only through the integrated series Y, so the
working sample is the proxy

    Xt_i = (Y_i - Y_{i-1}) / delta,

or its log variant for price data.  Conditional-moment regressions then
pair a kernel weight evaluated at the lagged proxy Xt_{i-1} with a design
point Xt_i and a response built from the following increment
Xt_{i+1} - Xt_i.  The lag keeps the weight measurable with respect to the
past, which is what makes the drift and moment regressions unbiased to
first order; the 3/2 and 3 factors undo the smoothing the integration
applies to squared and higher-power increments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

# response scale factors induced by integrate-then-difference smoothing
_VAR_FACTOR = 1.5
_HIGH_MOMENT_FACTOR = 3.0


def _as_clean_array(values, what: str) -> np.ndarray:
    # copy so freezing or reuse never mutates caller-owned arrays
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0]) + 1
        raise DataError(f"{what} contains a non-finite value at row {bad}")
    return arr


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be positive and finite, got {delta!r}")
    return delta


@dataclass(frozen=True)
class ProxySeries:
    """Proxy values for the latent state at sampling interval delta."""

    delta: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "delta", _check_delta(self.delta))
        arr = _as_clean_array(self.values, "proxy values")
        if arr.size < 1:
            raise DataError("proxy series is empty")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class RegressionTriples:
    """Aligned arrays (weight point, design point, responses) for smoothing.

    For proxy values Xt_1..Xt_n the usable indices are i = 2..n-1, giving
    n - 2 triples.  ``source_offset`` records the proxy index of the first
    design point (used by leave-out schemes to map observation indices to
    triple indices).
    """

    delta: float
    weight_points: np.ndarray
    design_points: np.ndarray
    drift: np.ndarray
    cond_var: np.ndarray
    moment4: np.ndarray
    moment6: np.ndarray
    source_offset: int = 2

    def __post_init__(self):
        n = self.weight_points.size
        arrays = (
            self.design_points,
            self.drift,
            self.cond_var,
            self.moment4,
            self.moment6,
        )
        if any(a.size != n for a in arrays):
            raise ValueError("triple arrays must have equal length")
        if n < 1:
            raise ValueError("need at least one regression triple")

    def __len__(self) -> int:
        return int(self.weight_points.size)

    def response(self, target) -> np.ndarray:
        # Target lives in locallinear; dispatch on the enum value to avoid
        # a circular import
        name = getattr(target, "value", target)
        try:
            return {
                "drift": self.drift,
                "cond_variance": self.cond_var,
                "moment4": self.moment4,
                "moment6": self.moment6,
            }[name]
        except KeyError:
            raise ValueError(f"unknown regression target {target!r}") from None

    def subset(self, mask: np.ndarray) -> "RegressionTriples":
        return RegressionTriples(
            delta=self.delta,
            weight_points=self.weight_points[mask],
            design_points=self.design_points[mask],
            drift=self.drift[mask],
            cond_var=self.cond_var[mask],
            moment4=self.moment4[mask],
            moment6=self.moment6[mask],
            source_offset=self.source_offset,
        )


def build_proxy(y, delta: float) -> ProxySeries:
    """Difference-quotient proxy (Y_i - Y_{i-1}) / delta of an observed series."""
    delta = _check_delta(delta)
    arr = _as_clean_array(y, "observed series")
    if arr.size < 2:
        raise DataError("need at least two observations to build a proxy")
    return ProxySeries(delta=delta, values=np.diff(arr) / delta)


def build_log_proxy(prices, delta: float) -> ProxySeries:
    """Proxy from price levels: (log Y_i - log Y_{i-1}) / delta."""
    delta = _check_delta(delta)
    arr = _as_clean_array(prices, "price series")
    if arr.size < 2:
        raise DataError("need at least two prices to build a proxy")
    nonpos = np.flatnonzero(arr <= 0)
    if nonpos.size:
        row = int(nonpos[0]) + 1
        raise DataError(
            f"price must be positive to take logs: row {row} has {arr[nonpos[0]]!r}"
        )
    return ProxySeries(delta=delta, values=np.diff(np.log(arr)) / delta)


def _triples_from_arrays(
    weight: np.ndarray,
    design: np.ndarray,
    diffs: np.ndarray,
    delta: float,
    var_factor: float,
    high_factor: float,
    source_offset: int,
) -> RegressionTriples:
    drift = diffs / delta
    sq = diffs * diffs
    return RegressionTriples(
        delta=delta,
        weight_points=weight,
        design_points=design,
        drift=drift,
        cond_var=var_factor * sq / delta,
        moment4=high_factor * sq * sq / delta,
        moment6=high_factor * sq * sq * sq / delta,
        source_offset=source_offset,
    )


def build_regression_triples(p: ProxySeries) -> RegressionTriples:
    """Staggered triples (Xt_{i-1}, Xt_i, Xt_{i+1} - Xt_i) from a proxy series."""
    v = p.values
    if v.size < 3:
        raise ValueError("need at least three proxy values to form triples")
    return _triples_from_arrays(
        weight=v[:-2],
        design=v[1:-1],
        diffs=v[2:] - v[1:-1],
        delta=p.delta,
        var_factor=_VAR_FACTOR,
        high_factor=_HIGH_MOMENT_FACTOR,
        source_offset=2,
    )


def build_direct_triples(x, delta: float) -> RegressionTriples:
    """Triples from directly observed state values (simulation diagnostics).

    Weight and design point coincide at X_{i-1} and the responses are plain
    powers of the increment over delta, without the proxy correction
    factors.
    """
    delta = _check_delta(delta)
    arr = _as_clean_array(x, "state series")
    if arr.size < 2:
        raise ValueError("need at least two state values to form triples")
    return _triples_from_arrays(
        weight=arr[:-1],
        design=arr[:-1],
        diffs=np.diff(arr),
        delta=delta,
        var_factor=1.0,
        high_factor=1.0,
        source_offset=1,
    )
