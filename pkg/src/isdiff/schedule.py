"""Noise schedules and the forward/reverse diffusion step mathematics.

Index convention: t = 0 is the clean-data index with alpha_bar[0] = 1;
t = 1..T are noising steps. beta[0] is a zero sentinel so every table is
addressed directly by timestep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionError,
    ParameterError,
    PixelGrid,
    RngState,
    gaussian_noise,
)

__all__ = [
    "NoiseSchedule",
    "SamplerConfig",
    "make_linear_schedule",
    "q_sample",
    "predict_x0",
    "noise_for_x0",
    "reverse_step",
    "base_timestep_grid",
    "segment_grid",
    "effective_steps",
    "effective_eta",
]


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Tables beta, alpha = 1 - beta and alpha_bar (running product), each of
    length T + 1 and indexed by timestep."""

    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=np.float64)
        alpha = np.asarray(self.alpha, dtype=np.float64)
        abar = np.asarray(self.alpha_bar, dtype=np.float64)
        if not (beta.shape == alpha.shape == abar.shape) or beta.ndim != 1 or beta.size < 2:
            raise ParameterError("schedule tables must share one length >= 2")
        if beta[0] != 0.0 or abar[0] != 1.0:
            raise ParameterError("data index must have beta=0, alpha_bar=1")
        if np.any(beta[1:] <= 0.0) or np.any(beta[1:] > 1.0):
            raise ParameterError("beta_t must lie in (0, 1]")
        if np.any(np.diff(abar) >= 0.0):
            raise ParameterError("alpha_bar must be strictly decreasing")
        check = np.cumprod(alpha)
        if np.any(np.abs(check - abar) > 1e-12 * np.abs(abar)):
            raise ParameterError("alpha_bar is not the running product of alpha")
        for name, arr in (("beta", beta), ("alpha", alpha), ("alpha_bar", abar)):
            frozen = np.array(arr, copy=True)
            frozen.setflags(write=False)
            object.__setattr__(self, name, frozen)

    @property
    def T(self) -> int:
        return self.beta.size - 1

    def a_bar(self, t: int) -> float:
        return float(self.alpha_bar[t])


@dataclass(frozen=True)
class SamplerConfig:
    """Reverse-sampler knobs: 'ddim' with sub-sampled steps and an eta noise
    knob, or 'ddpm' (unit steps, eta forced to 1)."""

    kind: str = "ddim"
    steps: int = 100
    eta: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("ddim", "ddpm"):
            raise ParameterError(f"sampler kind must be 'ddim' or 'ddpm', got {self.kind!r}")
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps}")
        if self.eta < 0:
            raise ParameterError(f"eta must be >= 0, got {self.eta}")


def effective_steps(cfg: SamplerConfig, T: int) -> int:
    if cfg.kind == "ddpm":
        return T
    return min(cfg.steps, T)


def effective_eta(cfg: SamplerConfig) -> float:
    return 1.0 if cfg.kind == "ddpm" else cfg.eta


def make_linear_schedule(T: int, beta_1: float, beta_T: float) -> NoiseSchedule:
    """Linear interpolation of beta over t = 1..T."""
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_1 <= beta_T < 1.0):
        raise ParameterError(f"need 0 < beta_1 <= beta_T < 1, got ({beta_1}, {beta_T})")
    beta = np.zeros(T + 1)
    beta[1:] = np.linspace(beta_1, beta_T, T)
    alpha = 1.0 - beta
    return NoiseSchedule(beta=beta, alpha=alpha, alpha_bar=np.cumprod(alpha))


def _check_t(t: int, T: int, lo: int = 0) -> None:
    if not lo <= t <= T:
        raise ParameterError(f"timestep {t} outside [{lo}, {T}]")


def q_sample(x0: PixelGrid, t: int, eps: PixelGrid, s: NoiseSchedule) -> PixelGrid:
    """Forward marginal: sqrt(a_bar_t) x0 + sqrt(1 - a_bar_t) eps."""
    _check_t(t, s.T)
    if x0.shape != eps.shape:
        raise DimensionError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    if t == 0:
        return x0
    ab = s.a_bar(t)
    return PixelGrid(np.sqrt(ab) * x0.data + np.sqrt(1.0 - ab) * eps.data)


def predict_x0(x_t: PixelGrid, eps_hat: PixelGrid, t: int, s: NoiseSchedule) -> PixelGrid:
    """Invert the forward marginal: (x_t - sqrt(1 - a_bar_t) eps_hat) / sqrt(a_bar_t)."""
    if t == 0:
        raise ParameterError("clean-image estimate is undefined at the data index t=0")
    _check_t(t, s.T, lo=1)
    if x_t.shape != eps_hat.shape:
        raise DimensionError(f"x_t shape {x_t.shape} != eps_hat shape {eps_hat.shape}")
    ab = s.a_bar(t)
    return PixelGrid((x_t.data - np.sqrt(1.0 - ab) * eps_hat.data) / np.sqrt(ab))


def noise_for_x0(x_t: PixelGrid, x0: PixelGrid, t: int, s: NoiseSchedule) -> PixelGrid:
    """The residual noise that makes ``predict_x0`` return exactly ``x0``."""
    if t == 0:
        raise ParameterError("residual noise is undefined at the data index t=0")
    _check_t(t, s.T, lo=1)
    ab = s.a_bar(t)
    return PixelGrid((x_t.data - np.sqrt(ab) * x0.data) / np.sqrt(1.0 - ab))


def reverse_step(x_t: PixelGrid, eps_hat: PixelGrid, t_from: int, t_to: int,
                 s: NoiseSchedule, cfg: SamplerConfig, rng: RngState) -> PixelGrid:
    """One reverse update t_from -> t_to.

    x_next = sqrt(ab_to) x0_hat + sqrt(1 - ab_to - sigma^2) eps_hat + sigma z
    with sigma = eta * sqrt((1-ab_to)/(1-ab_from)) * sqrt(1 - ab_from/ab_to).
    eta = 0 is deterministic and consumes no randomness; eta = 1 on adjacent
    steps reproduces the ancestral posterior mean and variance.
    """
    if not 0 <= t_to < t_from <= s.T:
        raise ParameterError(f"need 0 <= t_to < t_from <= T, got ({t_from}, {t_to})")
    eta = effective_eta(cfg)
    ab_from = s.a_bar(t_from)
    ab_to = s.a_bar(t_to)
    x0_hat = predict_x0(x_t, eps_hat, t_from, s)
    sigma = eta * np.sqrt((1.0 - ab_to) / (1.0 - ab_from)) * np.sqrt(1.0 - ab_from / ab_to)
    dir_coeff = np.sqrt(max(1.0 - ab_to - sigma * sigma, 0.0))
    out = np.sqrt(ab_to) * x0_hat.data + dir_coeff * eps_hat.data
    if eta > 0.0 and t_to > 0:
        out = out + sigma * rng.normal(x_t.shape)
    return PixelGrid(out)


def base_timestep_grid(T: int, steps: int) -> np.ndarray:
    """Strictly decreasing grid from T to 0 with roughly uniform stride."""
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    pts = np.unique(np.round(np.linspace(0, T, min(steps, T) + 1)).astype(np.int64))
    return pts[::-1]


def segment_grid(base: np.ndarray, t_start: int, t_end: int = 0) -> np.ndarray:
    """Grid points visited by a chain from t_start down to t_end, reusing the
    base grid's interior points. Splitting a run at any base point composes
    exactly with running it in one piece."""
    if t_end > t_start:
        raise ParameterError(f"need t_end <= t_start, got ({t_start}, {t_end})")
    if t_start == t_end:
        return np.array([t_start], dtype=np.int64)
    interior = base[(base > t_end) & (base < t_start)]
    return np.concatenate(([t_start], interior, [t_end])).astype(np.int64)
