"""Core value types: pixel grids, binary masks, intensity histograms, and a
reproducible RNG stream contract shared by every other module.

Intensities live in [-1, 1]. Masks use 1 = known (observed) pixel. All types
are immutable after construction except :class:`RngState`, which is passed
explicitly and advanced by each draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "INTENSITY_MIN",
    "INTENSITY_MAX",
    "DimensionError",
    "ParameterError",
    "EmptyRegionError",
    "DegenerateMaskError",
    "DegenerateDataError",
    "NumericalError",
    "PixelGrid",
    "Mask",
    "Histogram",
    "RngState",
    "compose",
    "histogram",
    "gaussian_noise",
    "region_values",
]

INTENSITY_MIN = -1.0
INTENSITY_MAX = 1.0


class DimensionError(ValueError):
    """Array shapes do not agree."""


class ParameterError(ValueError):
    """Argument or configuration value outside its legal range."""


class EmptyRegionError(ValueError):
    """The selected mask region contains no pixels."""


class DegenerateMaskError(ValueError):
    """Too few known pixels for the requested operation."""


class DegenerateDataError(ValueError):
    """Input data cannot support the requested fit."""


class NumericalError(ArithmeticError):
    """A numerical routine produced a non-finite value."""


def _frozen_f64(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class PixelGrid:
    """An H x W x C grid of float64 intensities, immutable after construction.

    Doubles as image, latent, and clean-image estimate; C must be 1 or 3 and
    every entry must be finite.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise DimensionError(f"expected H x W x C data, got shape {arr.shape}")
        if arr.shape[2] not in (1, 3):
            raise DimensionError(f"channels must be 1 or 3, got {arr.shape[2]}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"degenerate grid shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericalError("pixel grid contains non-finite values")
        object.__setattr__(self, "data", _frozen_f64(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @classmethod
    def zeros(cls, height: int, width: int, channels: int = 1) -> "PixelGrid":
        return cls(np.zeros((height, width, channels)))

    @classmethod
    def full(cls, height: int, width: int, value: float, channels: int = 1) -> "PixelGrid":
        return cls(np.full((height, width, channels), float(value)))

    def clamped(self, lo: float = INTENSITY_MIN, hi: float = INTENSITY_MAX) -> "PixelGrid":
        return PixelGrid(np.clip(self.data, lo, hi))


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary H x W map; True/1 marks a known (observed) pixel."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise DimensionError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            vals = np.unique(arr)
            if not np.all(np.isin(vals, (0, 1))):
                raise ParameterError("mask entries must be 0 or 1")
            arr = arr.astype(bool)
        arr = np.array(arr, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def known_count(self) -> int:
        return int(self.data.sum())

    @property
    def unknown_count(self) -> int:
        return int(self.data.size - self.data.sum())

    def check_matches(self, grid: PixelGrid) -> None:
        if self.data.shape != grid.data.shape[:2]:
            raise DimensionError(
                f"mask shape {self.data.shape} does not match grid {grid.shape[:2]}"
            )


@dataclass(frozen=True, eq=False)
class Histogram:
    """Per-channel binned probabilities over [-1, 1] with an additive
    smoothing floor: probs has shape (C, bins), each row sums to 1."""

    bins: int
    probs: np.ndarray
    delta: float

    def __post_init__(self) -> None:
        probs = _frozen_f64(self.probs)
        if probs.ndim != 2 or probs.shape[1] != self.bins:
            raise DimensionError(f"probs must be (C, {self.bins}), got {probs.shape}")
        sums = probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise NumericalError(f"histogram rows must sum to 1, got {sums}")
        floor = self.delta / (1.0 + self.bins * self.delta)
        if np.any(probs < floor - 1e-15):
            raise NumericalError("histogram violates its smoothing floor")
        object.__setattr__(self, "probs", probs)

    @property
    def channels(self) -> int:
        return self.probs.shape[0]


class RngState:
    """Deterministic random stream.

    Identical seed plus identical call sequence yields bitwise-identical
    draws; ``spawn`` derives independent child streams for parallel work.
    """

    __slots__ = ("_seq", "_gen")

    def __init__(self, seed: int):
        self._seq = np.random.SeedSequence(int(seed))
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @classmethod
    def _from_sequence(cls, seq: np.random.SeedSequence) -> "RngState":
        obj = cls.__new__(cls)
        obj._seq = seq
        obj._gen = np.random.Generator(np.random.PCG64(seq))
        return obj

    def normal(self, shape: tuple[int, ...] | int = ()) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def uniform(self, low: float = 0.0, high: float = 1.0,
                shape: tuple[int, ...] | int = ()) -> np.ndarray:
        return self._gen.uniform(low, high, shape)

    def integers(self, low: int, high: int | None = None,
                 shape: tuple[int, ...] | int = ()) -> np.ndarray:
        return self._gen.integers(low, high, size=shape)

    def spawn(self, n: int) -> list["RngState"]:
        return [RngState._from_sequence(s) for s in self._seq.spawn(n)]


def compose(a: PixelGrid, b: PixelGrid, m: Mask) -> PixelGrid:
    """Combine two grids through a mask: a where known, b where unknown.

    Values are copied exactly (bitwise) from their source grid.
    """
    if a.shape != b.shape:
        raise DimensionError(f"grid shapes differ: {a.shape} vs {b.shape}")
    m.check_matches(a)
    return PixelGrid(np.where(m.data[:, :, None], a.data, b.data))


def region_values(x: PixelGrid, m: Mask, select: str) -> np.ndarray:
    """Pixel values of the known or unknown region as an (N, C) array."""
    m.check_matches(x)
    if select == "known":
        sel = m.data
    elif select == "unknown":
        sel = ~m.data
    else:
        raise ParameterError(f"select must be 'known' or 'unknown', got {select!r}")
    return x.data[sel]


def histogram(x: PixelGrid, m: Mask, select: str, bins: int = 32,
              delta: float = 1e-6) -> Histogram:
    """Per-channel normalized counts of one mask region over uniform bins on
    [-1, 1]; values outside the range are clamped into the end bins, then the
    counts are additively smoothed by ``delta`` and renormalized."""
    if bins < 2:
        raise ParameterError(f"bins must be >= 2, got {bins}")
    if delta < 0:
        raise ParameterError(f"delta must be >= 0, got {delta}")
    vals = region_values(x, m, select)
    if vals.shape[0] == 0:
        raise EmptyRegionError(f"{select} region is empty")
    clipped = np.clip(vals, INTENSITY_MIN, INTENSITY_MAX)
    idx = np.minimum(((clipped - INTENSITY_MIN) * 0.5 * bins).astype(np.int64), bins - 1)
    n = vals.shape[0]
    probs = np.empty((vals.shape[1], bins))
    for c in range(vals.shape[1]):
        counts = np.bincount(idx[:, c], minlength=bins)
        probs[c] = (counts / n + delta) / (1.0 + bins * delta)
    return Histogram(bins=bins, probs=probs, delta=delta)


def gaussian_noise(shape: tuple[int, ...], rng: RngState) -> PixelGrid:
    """I.i.d. standard-normal grid of the given (H, W) or (H, W, C) shape."""
    if len(shape) == 2:
        shape = (shape[0], shape[1], 1)
    if len(shape) != 3:
        raise DimensionError(f"shape must be (H, W) or (H, W, C), got {shape}")
    return PixelGrid(rng.normal(shape))
