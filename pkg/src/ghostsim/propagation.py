"""Paraxial Fresnel propagation between parallel transverse planes.

Amplitude convention: the 1D point response is

    h(x, y) = exp(j k z) / sqrt(j lambda z) * exp(j k (y - x)^2 / (2 z))

with 1/sqrt(j lambda z) per transverse dimension, so a 1D quadrature matrix
entry has modulus dx / sqrt(lambda z).  The 2D one-step FFT form carries the
full exp(j k z) / (j lambda z) prefactor and dx*dy quadrature weight, and its
output pitch is forced to lambda * z / (M * dx) per axis; requests for any
other output sampling are rejected rather than silently regridded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, SamplingError
from .fields import ComplexField
from .grids import Grid, make_grid


def _check_geometry(distance: float, wavelength: float) -> None:
    if not (np.isfinite(distance) and distance > 0):
        raise ValueError("distance must be positive and finite")
    if not (np.isfinite(wavelength) and wavelength > 0):
        raise ValueError("wavelength must be positive and finite")


def fft_output_pitch(grid_in: Grid, distance: float, wavelength: float, axis: int) -> float:
    """Output pitch the one-step FFT form produces along one axis."""
    return wavelength * distance / (grid_in.shape[axis] * grid_in.pitch[axis])


def fft_output_grid(grid_in: Grid, distance: float, wavelength: float) -> Grid:
    """The only output grid the one-step FFT form can deliver for grid_in."""
    pitches = tuple(
        fft_output_pitch(grid_in, distance, wavelength, a) for a in range(grid_in.ndim)
    )
    return make_grid(grid_in.ndim, grid_in.shape, pitches)


@dataclass(eq=False)
class PropagationKernel:
    """Precomputed Fresnel propagator from grid_in to grid_out at one distance."""

    grid_in: Grid
    grid_out: Grid
    distance: float
    wavelength: float
    form: str
    _matrix: np.ndarray | None = field(default=None, repr=False)
    _pre: np.ndarray | None = field(default=None, repr=False)
    _post: np.ndarray | None = field(default=None, repr=False)

    @property
    def matrix(self) -> np.ndarray:
        """The explicit quadrature matrix (direct form only)."""
        if self._matrix is None:
            raise ValueError("fft-form kernels carry no explicit matrix")
        return self._matrix

    def apply(self, samples: np.ndarray) -> np.ndarray:
        """Propagate raw samples; accepts one realization or a batch.

        direct form: (M,) or (M, B) arrays, batch in columns.
        fft form: (M0, M1) or (B, M0, M1) arrays, batch leading.
        """
        if self.form == "direct":
            return self._matrix @ samples
        x = np.asarray(samples, dtype=np.complex128)
        single = x.ndim == 2
        if single:
            x = x[None, :, :]
        out = np.fft.fft2(x * self._pre, axes=(-2, -1)) * self._post
        return out[0] if single else out


def fresnel_kernel(
    grid_in: Grid,
    grid_out: Grid,
    distance: float,
    wavelength: float,
    form: str | None = None,
) -> PropagationKernel:
    """Build a propagator; form defaults to direct for 1D grids, fft for 2D."""
    _check_geometry(distance, wavelength)
    if form is None:
        form = "direct" if grid_in.ndim == 1 else "fft"
    if form not in ("direct", "fft"):
        raise ValueError(f"unknown kernel form {form!r}")
    k = 2.0 * np.pi / wavelength

    if form == "direct":
        if grid_in.ndim != 1 or grid_out.ndim != 1:
            raise ValueError("direct form supports 1D grids only")
        x = grid_in.coords(0)[None, :]
        y = grid_out.coords(0)[:, None]
        pref = np.exp(1j * k * distance) / np.sqrt(1j * wavelength * distance)
        matrix = (pref * grid_in.pitch[0]) * np.exp(
            (1j * k / (2.0 * distance)) * (y - x) ** 2
        )
        return PropagationKernel(grid_in, grid_out, distance, wavelength, form, _matrix=matrix)

    if grid_in.ndim != 2 or grid_out.ndim != 2:
        raise ValueError("fft form supports 2D grids only")
    if grid_out.shape != grid_in.shape:
        raise SamplingError(
            f"fft form output shape {grid_out.shape} must equal input shape {grid_in.shape}"
        )
    if any(o != 0.0 for o in grid_in.origin + grid_out.origin):
        raise SamplingError("fft form requires both grids centered at the origin")
    for a in range(2):
        forced = fft_output_pitch(grid_in, distance, wavelength, a)
        if abs(grid_out.pitch[a] - forced) > 1e-9 * forced:
            raise SamplingError(
                f"fft form forces output pitch {forced:.6e} on axis {a}, "
                f"requested {grid_out.pitch[a]:.6e}"
            )
    # Separable centered-DFT phases: with c = (M-1)/2,
    #   sum_p f(x_p) exp(-j 2 pi u_q x_p / (lambda z))
    #     = e^{j 2 pi c q / M} e^{-j 2 pi c^2 / M} FFT[f(x_p) e^{j 2 pi c p / M}]_q
    pre_ax, post_ax = [], []
    for a in range(2):
        m = grid_in.shape[a]
        c = (m - 1) / 2.0
        p = np.arange(m)
        xa = grid_in.coords(a)
        ua = grid_out.coords(a)
        pre_ax.append(
            np.exp((1j * k / (2.0 * distance)) * xa**2) * np.exp(2j * np.pi * c * p / m)
        )
        post_ax.append(
            np.exp(2j * np.pi * c * p / m)
            * np.exp(-2j * np.pi * c * c / m)
            * np.exp((1j * k / (2.0 * distance)) * ua**2)
        )
    pref = (
        np.exp(1j * k * distance)
        / (1j * wavelength * distance)
        * grid_in.pitch[0]
        * grid_in.pitch[1]
    )
    pre = pre_ax[0][:, None] * pre_ax[1][None, :]
    post = pref * post_ax[0][:, None] * post_ax[1][None, :]
    return PropagationKernel(grid_in, grid_out, distance, wavelength, form, _pre=pre, _post=post)


def propagate(field_in: ComplexField, kernel: PropagationKernel) -> ComplexField:
    """Apply a kernel to one field; linear in the input by construction."""
    if field_in.grid != kernel.grid_in:
        raise GridMismatchError("field grid does not match kernel input grid")
    if field_in.wavelength != kernel.wavelength:
        raise ValueError("field wavelength does not match kernel wavelength")
    return ComplexField(kernel.grid_out, kernel.apply(field_in.samples), kernel.wavelength)


def point_weights(
    grid: Grid, point, distance: float, wavelength: float
) -> np.ndarray:
    """Quadrature weights w with sum(w * E) = field propagated to one point."""
    _check_geometry(distance, wavelength)
    k = 2.0 * np.pi / wavelength
    if grid.ndim == 1:
        x = grid.coords(0)
        pref = np.exp(1j * k * distance) / np.sqrt(1j * wavelength * distance)
        return (pref * grid.pitch[0]) * np.exp(
            (1j * k / (2.0 * distance)) * (float(point) - x) ** 2
        )
    px, py = point
    r2 = (px - grid.coords(0)[:, None]) ** 2 + (py - grid.coords(1)[None, :]) ** 2
    pref = (
        np.exp(1j * k * distance)
        / (1j * wavelength * distance)
        * grid.pitch[0]
        * grid.pitch[1]
    )
    return pref * np.exp((1j * k / (2.0 * distance)) * r2)


def propagate_to_point(field_in: ComplexField, point, distance: float) -> complex:
    """Field value at a single output point; O(M), no output grid involved."""
    w = point_weights(field_in.grid, point, distance, field_in.wavelength)
    return complex(np.dot(w.ravel(), field_in.samples.ravel()))


def validate_sampling(kernel: PropagationKernel) -> list[str]:
    """Aliasing and paraxial checks; returns human-readable warnings (empty if clean).

    For the direct form the chirp argument spans input-to-output offsets, so
    the phase step between adjacent input samples is bounded with
    W = half input extent + half output extent + |origin shift|.  For the fft
    form only the input chirp is sampled, so W = half input extent.
    """
    out: list[str] = []
    k = 2.0 * np.pi / kernel.wavelength
    z = kernel.distance
    for a in range(kernel.grid_in.ndim):
        half_in = kernel.grid_in.extent(a) / 2.0
        half_out = kernel.grid_out.extent(a) / 2.0
        shift = abs(kernel.grid_out.origin[a] - kernel.grid_in.origin[a])
        w = half_in if kernel.form == "fft" else half_in + half_out + shift
        step = k * kernel.grid_in.pitch[a] * w / z
        if step > np.pi:
            out.append(
                f"chirp undersampled on axis {a}: edge phase step {step:.3g} rad > pi"
            )
        angle = (half_in + half_out + shift) / z
        if angle > 0.1:
            out.append(
                f"paraxial limit strained on axis {a}: half angle {angle:.3g} rad > 0.1"
            )
    return out
