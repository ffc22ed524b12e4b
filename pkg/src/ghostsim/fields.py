"""Pseudo-thermal source: field containers and per-realization sampling.

Each source pixel inside the aperture carries an independent complex value
A * exp(j*phase) with A Rayleigh-distributed (mean square 2*sigma2) and phase
uniform on (0, 2*pi].  Pixels are statistically independent, so the field is
delta-correlated across the source plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import GeometryError, GridMismatchError
from .grids import Grid

_MASK64 = (1 << 64) - 1


@dataclass(eq=False)
class ComplexField:
    """Complex scalar field samples on a grid, tagged with the wavelength."""

    grid: Grid
    samples: np.ndarray
    wavelength: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.shape != self.grid.shape:
            raise GridMismatchError(
                f"field samples {self.samples.shape} do not match grid {self.grid.shape}"
            )
        if not (np.isfinite(self.wavelength) and self.wavelength > 0):
            raise ValueError("wavelength must be positive and finite")
        if not np.isfinite(self.samples).all():
            raise ValueError("field samples must be finite")


@dataclass(eq=False)
class RealPattern:
    """Real-valued samples on a grid (intensities, correlations, references)."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.shape != self.grid.shape:
            raise GridMismatchError(
                f"pattern samples {self.samples.shape} do not match grid {self.grid.shape}"
            )
        if not np.isfinite(self.samples).all():
            raise ValueError("pattern samples must be finite")


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: a pure function of (seed, realization_index).

    Each index keys its own Philox generator, so streams are mutually
    independent and any realization can be drawn on any worker, in any order,
    with identical results.
    """

    seed: int
    realization_index: int

    def __post_init__(self):
        if self.realization_index < 0:
            raise ValueError("realization_index must be >= 0")

    def generator(self) -> Generator:
        key = np.array(
            [self.seed & _MASK64, self.realization_index & _MASK64], dtype=np.uint64
        )
        return Generator(Philox(key=key))


@dataclass(frozen=True)
class SourceSpec:
    """Chaotic source geometry: aperture width/diameter and amplitude scale.

    ``aperture`` is the full slit width (1D grids) or disk diameter (2D grids).
    It must fit between the outermost sample centers of the grid on every
    axis; a wider aperture would be silently truncated and is rejected.
    """

    grid: Grid
    aperture: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.aperture) and self.aperture > 0):
            raise ValueError("aperture must be positive and finite")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError("sigma2 must be positive and finite")
        for axis in range(self.grid.ndim):
            if self.aperture > self.grid.extent(axis):
                raise GeometryError(
                    f"aperture {self.aperture} exceeds grid extent "
                    f"{self.grid.extent(axis)} on axis {axis}"
                )

    def aperture_mask(self) -> np.ndarray:
        half = self.aperture / 2.0
        if self.grid.ndim == 1:
            return np.abs(self.grid.coords(0)) <= half
        x = self.grid.coords(0)[:, None]
        y = self.grid.coords(1)[None, :]
        return x * x + y * y <= half * half


def draw_source_samples(spec: SourceSpec, stream: RngStream) -> np.ndarray:
    """Raw complex samples of one realization (zeros outside the aperture).

    Amplitudes for every in-aperture pixel are drawn first (at unit scale),
    then phases, in fixed row-major order; the amplitude is multiplied by
    sigma afterwards, so two calls with the same stream and different sigma2
    give exactly proportional fields.
    """
    rng = stream.generator()
    mask = spec.aperture_mask()
    idx = np.flatnonzero(mask.ravel())
    amp = rng.rayleigh(size=idx.size)
    u = rng.random(idx.size)
    phase = (2.0 * np.pi) * (1.0 - u)  # uniform on (0, 2*pi]
    sigma = np.sqrt(spec.sigma2)
    out = np.zeros(mask.size, dtype=np.complex128)
    out[idx] = (sigma * amp) * np.exp(1j * phase)
    return out.reshape(mask.shape)


def sample_source(spec: SourceSpec, stream: RngStream, wavelength: float) -> ComplexField:
    """One pseudo-thermal realization of the source as a ComplexField."""
    return ComplexField(spec.grid, draw_source_samples(spec, stream), wavelength)


def intensity(field: ComplexField) -> RealPattern:
    """|E|^2 sample by sample."""
    s = field.samples
    return RealPattern(field.grid, s.real * s.real + s.imag * s.imag)
