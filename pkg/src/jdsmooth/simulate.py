"""Euler simulation of a second-order jump-diffusion.

The latent state follows

    dX_t = (a0 + a1 X_t) dt + sqrt(b0 + b1 X_t^2) dW_t + dJ_t,

with J a compound Poisson process whose sizes are Normal(mu_z, sigma_z^2),
and the observable series integrates the state: dY_t = X_t dt.  Jumps are
parameterized by their expected count over the simulated horizon, so the
per-unit-time intensity is jump_total / T for whatever T a path or a
moment query refers to.

The Euler scheme draws the jump times and sizes first, bins them into
observation intervals (several jumps in one interval simply add up), and
then advances

    X_{t_i} = X_{t_{i-1}} + mu(X_{t_{i-1}}) d + sigma(X_{t_{i-1}}) sqrt(d) V_i + sum of jumps,
    Y_{t_i} = Y_{t_{i-1}} + X_{t_{i-1}} d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True, slots=True)
class ModelSpec:
    """Coefficients of the simulated jump-diffusion."""

    drift_intercept: float
    drift_slope: float
    diffusion_const: float
    diffusion_quad: float
    jump_total: float
    jump_size_std: float
    jump_size_mean: float = 0.0
    x0: float = 0.1
    y0: float = 100.0

    def __post_init__(self):
        for name in (
            "drift_intercept",
            "drift_slope",
            "diffusion_const",
            "diffusion_quad",
            "jump_total",
            "jump_size_std",
            "jump_size_mean",
            "x0",
            "y0",
        ):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite number, got {v!r}")
        if self.jump_total < 0:
            raise ValueError("jump_total must be nonnegative")
        if self.jump_size_std < 0:
            raise ValueError("jump_size_std must be nonnegative")
        if self.diffusion_const < 0:
            raise ValueError("diffusion_const must be nonnegative")

    def mu(self, x):
        return self.drift_intercept + self.drift_slope * np.asarray(x, dtype=float)

    def sigma2(self, x):
        xx = np.asarray(x, dtype=float)
        return self.diffusion_const + self.diffusion_quad * xx * xx


def baseline_model(
    jump_total: float = 20.0, jump_size_std: float = 0.036
) -> ModelSpec:
    """Mean-reverting benchmark: mu(x) = 1 - 10x, sigma^2(x) = 0.1 + 0.1 x^2."""
    return ModelSpec(
        drift_intercept=1.0,
        drift_slope=-10.0,
        diffusion_const=0.1,
        diffusion_quad=0.1,
        jump_total=jump_total,
        jump_size_std=jump_size_std,
    )


class TrueMoments(NamedTuple):
    mu: float
    m: float
    c4: float


def true_moments(model: ModelSpec, x: float, T: float) -> TrueMoments:
    """Drift, conditional second moment, and fourth jump moment at x.

    M(x) = sigma^2(x) + lambda E[Z^2] and c4 = lambda E[Z^4] with the
    per-unit intensity lambda = jump_total / T, so the horizon the jump
    budget is spread over must be supplied.
    """
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"horizon T must be positive, got {T!r}")
    lam = model.jump_total / T
    mz, sz = model.jump_size_mean, model.jump_size_std
    ez2 = mz * mz + sz * sz
    ez4 = mz**4 + 6.0 * mz * mz * sz * sz + 3.0 * sz**4
    mu = float(model.mu(x))
    m = float(model.sigma2(x)) + lam * ez2
    return TrueMoments(mu=mu, m=m, c4=lam * ez4)


@dataclass(frozen=True)
class SamplePath:
    """One simulated path: state x, integrated series y, jump record."""

    delta: float
    x: np.ndarray
    y: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    seed: int

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.x.size) * self.delta

    @property
    def n_steps(self) -> int:
        return int(self.x.size) - 1

    def thin(self, step: int) -> "SamplePath":
        """Keep every step-th observation; the jump record is unchanged.

        Thinning a finely simulated path gives observation-grid data whose
        integrated series carries genuine integration error, which is how
        the proxy behaves on real data.
        """
        step = int(step)
        if step < 1:
            raise ValueError("step must be a positive integer")
        if self.n_steps % step != 0:
            raise ValueError(
                f"step {step} does not divide the path length {self.n_steps}"
            )
        return SamplePath(
            delta=self.delta * step,
            x=self.x[::step].copy(),
            y=self.y[::step].copy(),
            jump_times=self.jump_times,
            jump_sizes=self.jump_sizes,
            seed=self.seed,
        )


def replicate_seed(base_seed: int, index: int) -> int:
    """Deterministic per-replicate seed derived from (base_seed, index).

    Uses the splittable seed-sequence hash, so replicate streams are
    independent and reproducible no matter how work is scheduled.
    """
    if index < 0:
        raise ValueError("replicate index must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def simulate_path(model: ModelSpec, T: float, n: int, seed: int) -> SamplePath:
    """Simulate n Euler steps over [0, T] from X_0 = x0, Y_0 = y0."""
    if not (isinstance(T, (int, float)) and math.isfinite(T) and T > 0):
        raise ValueError(f"horizon T must be positive, got {T!r}")
    n = int(n)
    if n < 1:
        raise ValueError("need at least one step")
    delta = float(T) / n
    rng = np.random.default_rng(int(seed))

    count = int(rng.poisson(model.jump_total)) if model.jump_total > 0 else 0
    if count > 0:
        times = rng.uniform(0.0, float(T), count)
        sizes = rng.normal(model.jump_size_mean, model.jump_size_std, count)
        order = np.argsort(times, kind="stable")
        times, sizes = times[order], sizes[order]
    else:
        times = np.empty(0)
        sizes = np.empty(0)

    jump_in_step = np.zeros(n)
    if count > 0:
        idx = np.minimum((times / delta).astype(np.int64), n - 1)
        np.add.at(jump_in_step, idx, sizes)

    shocks = rng.standard_normal(n)
    sqrt_d = math.sqrt(delta)
    a0, a1 = model.drift_intercept, model.drift_slope
    b0, b1 = model.diffusion_const, model.diffusion_quad

    x = np.empty(n + 1)
    y = np.empty(n + 1)
    x[0] = model.x0
    y[0] = model.y0
    xi = model.x0
    yi = model.y0
    for i in range(n):
        s2 = b0 + b1 * xi * xi
        sig = math.sqrt(s2) if s2 > 0.0 else 0.0
        yi += xi * delta
        xi += (a0 + a1 * xi) * delta + sig * sqrt_d * shocks[i] + jump_in_step[i]
        x[i + 1] = xi
        y[i + 1] = yi

    return SamplePath(
        delta=delta,
        x=x,
        y=y,
        jump_times=times,
        jump_sizes=sizes,
        seed=int(seed),
    )
