"""DDPM schedule construction and the exact forward/reverse update arithmetic,
plus the coarse-to-fine interleaved attention layout.

The reverse step is the deterministic mean update; the standard posterior
noise term is available behind a flag (off by default). The denoiser itself
is a plain callable supplied by the user, so any framework can plug in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-timestep beta/alpha/alpha_bar arrays; index t runs 1..T."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=np.float64)
        if b.ndim != 1 or len(b) < 1:
            raise ValueError("beta must be a 1-D array")
        if np.any(b <= 0) or np.any(b >= 1) or np.any(np.diff(b) < 0):
            raise ValueError("need 0 < beta_1 <= ... <= beta_T < 1")
        object.__setattr__(self, "beta", b)

    @property
    def T(self) -> int:
        return len(self.beta)

    @property
    def alpha(self) -> np.ndarray:
        return 1.0 - self.beta

    @property
    def alpha_bar(self) -> np.ndarray:
        return np.cumprod(self.alpha)

    def alpha_bar_at(self, t: int) -> float:
        """Cumulative product at timestep t, with alpha_bar(0) = 1."""
        self._check_t(t, allow_zero=True)
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])

    def _check_t(self, t, allow_zero=False):
        lo = 0 if allow_zero else 1
        if not (lo <= t <= self.T):
            raise ValueError(f"timestep {t} outside [{lo}, {self.T}]")


def make_schedule(T: int, kind: str = "linear", beta_bounds=(1e-4, 0.02)) -> DiffusionSchedule:
    """Linear or squared-cosine beta schedule over T steps."""
    lo, hi = beta_bounds
    if T < 1:
        raise ValueError("T must be >= 1")
    if not (0 < lo <= hi < 1):
        raise ValueError("need 0 < beta_min <= beta_max < 1")
    if kind == "linear":
        beta = np.linspace(lo, hi, T)
    elif kind == "cosine":
        s = 0.008
        steps = np.arange(T + 1) / T
        f = np.cos((steps + s) / (1 + s) * np.pi / 2.0) ** 2
        abar = f / f[0]
        beta = np.clip(1.0 - abar[1:] / abar[:-1], lo, hi)
        beta = np.maximum.accumulate(beta)  # enforce monotone nondecreasing
    else:
        raise ValueError(f"unknown schedule kind: {kind}")
    return DiffusionSchedule(beta)


def q_sample(x0, t: int, eps, sched: DiffusionSchedule):
    """Forward noising: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError("x0 and eps must share a shape")
    sched._check_t(t)
    abar = sched.alpha_bar_at(t)
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def p_step(
    x_t,
    eps_hat,
    t: int,
    sched: DiffusionSchedule,
    posterior_noise: bool = False,
    rng: np.random.Generator | None = None,
):
    """One reverse update from t to t-1:

        (x_t - sqrt(1 - alpha_t)/sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)

    With posterior_noise=True the standard sigma_t * z term is added
    (sigma_t^2 = beta_t (1 - abar_{t-1})/(1 - abar_t); zero at t = 1).
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if x_t.shape != eps_hat.shape:
        raise ValueError("x_t and eps_hat must share a shape")
    sched._check_t(t)
    alpha_t = float(sched.alpha[t - 1])
    abar_t = sched.alpha_bar_at(t)
    if abar_t >= 1.0:  # beta_t == 0 edge: identity map
        coeff = 0.0
    else:
        coeff = np.sqrt(1.0 - alpha_t) / np.sqrt(1.0 - abar_t)
    out = (x_t - coeff * eps_hat) / np.sqrt(alpha_t)
    if posterior_noise and t > 1:
        if rng is None:
            raise ValueError("posterior_noise requires an rng")
        abar_prev = sched.alpha_bar_at(t - 1)
        sigma2 = (1.0 - alpha_t) * (1.0 - abar_prev) / (1.0 - abar_t)
        out = out + np.sqrt(sigma2) * rng.standard_normal(out.shape)
    return out


def sample(eps_model, shape, sched: DiffusionSchedule, rng, posterior_noise=False):
    """Run the full reverse chain from pure noise with a pluggable denoiser.

    eps_model(x_t, t) must return the noise estimate for x_t at timestep t.
    """
    x = rng.standard_normal(shape)
    for t in range(sched.T, 0, -1):
        x = p_step(x, eps_model(x, t), t, sched, posterior_noise=posterior_noise, rng=rng)
    return x


def build_interleaved_mask(levels: int):
    """Coarse-to-fine token layout and its causal attention mask.

    Tokens alternate radar block r_j (even positions) and shape level h_l
    (odd positions) for j, l in 0..levels-1; mask[i, j] = (j <= i), so h_l
    attends only to r_0..r_l, h_0..h_{l-1}, and itself.
    """
    if levels < 1:
        raise ValueError("need at least one level")
    layout = []
    for j in range(levels):
        layout.append(("r", j))
        layout.append(("h", j))
    n = 2 * levels
    mask = np.tril(np.ones((n, n), dtype=bool))
    return layout, mask
