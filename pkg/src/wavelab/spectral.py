"""Periodic-box Fourier representation.

Fields live on a periodic box ``[0, P)^n`` sampled with ``N`` points per axis.
Coefficients are stored in full ``numpy.fft.fftn`` ordering with a unitary
normalisation, so that

    sum |u_hat(xi)|^2 = integral over the box of |u(x)|^2 dx

holds exactly (up to round-off) and Sobolev norms are plain weighted sums
over the coefficient array.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

HERMITIAN_RTOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``points_per_axis`` samples per axis."""

    n: int
    points_per_axis: int
    period: float = 2 * np.pi

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        N = self.points_per_axis
        if N < 4 or N & (N - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 4, got {N}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.n

    @property
    def size(self) -> int:
        return self.points_per_axis**self.n

    @property
    def spacing(self) -> float:
        return self.period / self.points_per_axis

    @property
    def volume(self) -> float:
        return float(self.period) ** self.n

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1D angular wavenumbers ``2*pi*m/P`` in fft ordering (Nyquist negative)."""
        N = self.points_per_axis
        return 2 * np.pi * np.fft.fftfreq(N, d=1.0 / N) / self.period

    def axis_wavenumber(self, axis: int) -> np.ndarray:
        """Wavenumbers along ``axis`` (0-based), shaped for broadcasting."""
        shape = [1] * self.n
        shape[axis] = self.points_per_axis
        return self.wavenumbers.reshape(shape)

    @cached_property
    def xi_squared(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for axis in range(self.n):
            out = out + self.axis_wavenumber(axis) ** 2
        return out

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_squared)

    @property
    def xi_max(self) -> float:
        return float(self.xi_abs.max())

    def bracket(self, s: float) -> np.ndarray:
        """Japanese bracket ``(1 + |xi|^2)^(s/2)``."""
        return (1.0 + self.xi_squared) ** (0.5 * s)

    def centered_offsets(self, axis: int) -> np.ndarray:
        """Signed distance from the box centre along ``axis``, exact under reflection."""
        N = self.points_per_axis
        shape = [1] * self.n
        shape[axis] = N
        return ((np.arange(N) - N // 2) * self.spacing).reshape(shape)

    def coordinates(self, axis: int) -> np.ndarray:
        N = self.points_per_axis
        shape = [1] * self.n
        shape[axis] = N
        return (np.arange(N) * self.spacing).reshape(shape)

    @property
    def _scale(self) -> float:
        return np.sqrt(self.volume) / self.size


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Unitary-normalised Fourier coefficients of a (real) field on ``grid``."""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        if self.coefficients.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coefficients.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coefficients)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def samples(self) -> np.ndarray:
        return inverse_transform(self)


@dataclass(frozen=True, eq=False)
class FieldState:
    """The pair ``(u, d_t u)`` at one instant."""

    time: float
    u: SpectralField
    ut: SpectralField

    def __post_init__(self):
        if self.u.grid != self.ut.grid:
            raise ValueError("u and ut live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: GridSpec, time: float = 0.0) -> "FieldState":
        return cls(time, SpectralField.zeros(grid), SpectralField.zeros(grid))

    @classmethod
    def from_samples(cls, grid: GridSpec, u: np.ndarray, ut: np.ndarray, time: float = 0.0) -> "FieldState":
        return cls(time, forward_transform(u, grid), forward_transform(ut, grid))

    def scaled(self, factor: float) -> "FieldState":
        return FieldState(self.time, self.u * factor, self.ut * factor)

    def __sub__(self, other: "FieldState") -> "FieldState":
        return FieldState(self.time, self.u - other.u, self.ut - other.ut)


def forward_transform(samples: np.ndarray, grid: GridSpec) -> SpectralField:
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise ValueError(f"samples have shape {samples.shape}, grid expects {grid.shape}")
    if np.iscomplexobj(samples):
        raise ValueError("forward_transform expects real samples")
    return SpectralField(grid, np.fft.fftn(samples) * grid._scale)


def inverse_transform(field: SpectralField, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Real samples of ``field``; rejects coefficients that are not Hermitian."""
    values = np.fft.ifftn(field.coefficients) / field.grid._scale
    peak = np.max(np.abs(values), initial=0.0)
    if peak > 0 and np.max(np.abs(values.imag)) > rtol * peak:
        raise ValueError("coefficients are not Hermitian-symmetric; field is not real")
    return np.ascontiguousarray(values.real)


def hermitian_defect(coefficients: np.ndarray) -> float:
    """``max |c(-xi) - conj(c(xi))|`` over the lattice."""
    flipped = coefficients
    for axis in range(coefficients.ndim):
        flipped = np.roll(np.flip(flipped, axis=axis), 1, axis=axis)
    return float(np.max(np.abs(flipped - np.conj(coefficients)), initial=0.0))


def spectral_derivative(field: SpectralField, axis: int) -> SpectralField:
    """Partial derivative along ``axis`` (1-based, as in d_1 .. d_n).

    The Nyquist row of the differentiated axis is zeroed.
    """
    grid = field.grid
    if not 1 <= axis <= grid.n:
        raise ValueError(f"axis must be in 1..{grid.n}, got {axis}")
    k = grid.axis_wavenumber(axis - 1).copy()
    k.flat[grid.points_per_axis // 2] = 0.0
    return SpectralField(grid, 1j * k * field.coefficients)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """Inhomogeneous ``H^s`` norm ``(sum (1+|xi|^2)^s |u_hat|^2)^(1/2)``."""
    weight = (1.0 + field.grid.xi_squared) ** s
    return float(np.sqrt(np.sum(weight * np.abs(field.coefficients) ** 2)))


def gradient_sobolev_norm(state: FieldState, s: float) -> float:
    """``H^s`` norm of the space-time gradient ``(d_t u, grad u)``.

    The spatial part uses the multiplier ``|xi|^2``, which is what the linear
    flow conserves.
    """
    grid = state.grid
    weight = (1.0 + grid.xi_squared) ** s
    total = np.sum(weight * (np.abs(state.ut.coefficients) ** 2 + grid.xi_squared * np.abs(state.u.coefficients) ** 2))
    return float(np.sqrt(total))


def data_norm(state: FieldState, s: float) -> float:
    """``||u0||_{H^s} + ||u1||_{H^{s-1}}``, the size of Cauchy data."""
    return sobolev_norm(state.u, s) + sobolev_norm(state.ut, s - 1)


def energy(state: FieldState) -> float:
    """Linear wave energy ``(||d_t u||^2 + ||grad u||^2) / 2``."""
    grid = state.grid
    return 0.5 * float(
        np.sum(np.abs(state.ut.coefficients) ** 2 + grid.xi_squared * np.abs(state.u.coefficients) ** 2)
    )


def padded_size(n_points: int, factor: float) -> int:
    """Smallest even size ``>= factor * n_points``."""
    m = int(np.ceil(factor * n_points - 1e-9))
    return m + (m % 2)


def pad_coefficients(coefficients: np.ndarray, m: int) -> np.ndarray:
    """Zero-pad fft-ordered coefficients from ``N`` to ``m`` points per axis.

    Nyquist entries are split evenly between +N/2 and -N/2, which keeps real
    fields real.
    """
    out = coefficients
    for axis in range(coefficients.ndim):
        N = out.shape[axis]
        if m == N:
            continue
        if m < N:
            raise ValueError("use truncate_coefficients to shrink")
        h = N // 2
        shape = list(out.shape)
        shape[axis] = m
        padded = np.zeros(shape, dtype=complex)
        src = [slice(None)] * out.ndim
        dst = [slice(None)] * out.ndim
        src[axis], dst[axis] = slice(0, h), slice(0, h)
        padded[tuple(dst)] = out[tuple(src)]
        src[axis], dst[axis] = slice(h + 1, N), slice(m - h + 1, m)
        padded[tuple(dst)] = out[tuple(src)]
        src[axis] = h
        half = 0.5 * out[tuple(src)]
        dst[axis] = h
        padded[tuple(dst)] = half
        dst[axis] = m - h
        padded[tuple(dst)] = half
        out = padded
    return out


def truncate_coefficients(coefficients: np.ndarray, N: int) -> np.ndarray:
    """Inverse of :func:`pad_coefficients`: keep ``|m| < N/2`` and fold the two Nyquist rows."""
    out = coefficients
    for axis in range(coefficients.ndim):
        m = out.shape[axis]
        if m == N:
            continue
        h = N // 2
        idx = np.concatenate([np.arange(0, h + 1), np.arange(m - h + 1, m)])
        kept = np.take(out, idx, axis=axis)
        sel = [slice(None)] * out.ndim
        sel[axis] = h
        kept[tuple(sel)] = np.take(out, h, axis=axis) + np.take(out, m - h, axis=axis)
        out = kept
    return out


def padded_samples(field: SpectralField, m: int) -> np.ndarray:
    """Real samples of ``field`` on an ``m``-point-per-axis grid (band-limited interpolation)."""
    grid = field.grid
    coeffs = pad_coefficients(field.coefficients, m)
    return np.fft.ifftn(coeffs).real * (m**grid.n / np.sqrt(grid.volume))


def samples_to_padded_coefficients(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    m = values.shape[0]
    return np.fft.fftn(values) * (np.sqrt(grid.volume) / m**grid.n)


def derivative_fields(state: FieldState) -> list[SpectralField]:
    """``[d_t u, d_1 u, ..., d_n u]`` in spectral form."""
    return [state.ut] + [spectral_derivative(state.u, axis) for axis in range(1, state.grid.n + 1)]


def gradient_sup_norm(state: FieldState, oversample: int = 2) -> float:
    """``max_x max_i |d_i u(x)|`` over ``(d_t, d_1, .., d_n)``, on an oversampled grid."""
    m = state.grid.points_per_axis * oversample
    return max(float(np.max(np.abs(padded_samples(f, m)))) for f in derivative_fields(state))
