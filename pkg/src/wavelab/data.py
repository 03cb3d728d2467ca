"""Initial-data families: bumps, Gaussians, single modes, constants, and concentrated ladders."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .spectral import FieldState, GridSpec, data_norm, forward_transform

SHAPES = ("gaussian", "bump", "single_mode", "constant")
# a Gaussian is treated as supported where it exceeds 1e-14 of its peak
GAUSSIAN_CUTOFF = math.sqrt(2 * math.log(1e14))


@dataclass(frozen=True)
class DataProfile:
    """Shape of Cauchy data; ``u0 = u0_weight * phi``, ``u1 = u1_weight * phi``.

    ``center`` defaults to the box centre.  A ``seed`` perturbs the profile
    deterministically (weights, width, and for non-radial data an axis
    stretch and a small shift of the centre).
    """

    shape: str = "gaussian"
    width: float = 1.0
    center: tuple[float, ...] | None = None
    radial: bool = False
    seed: int | None = None
    u0_weight: float = 1.0
    u1_weight: float = 0.0
    mode: int = 1

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown profile shape {self.shape!r}")
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.radial and self.center is not None:
            raise ValueError("radial profiles are centred on the box")
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["center"] is not None:
            out["center"] = list(out["center"])
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DataProfile":
        d = dict(d)
        if d.get("center") is not None:
            d["center"] = tuple(d["center"])
        return cls(**d)

    @property
    def compact(self) -> bool:
        return self.shape in ("gaussian", "bump")


@dataclass(frozen=True)
class _Realized:
    weights: tuple[float, float]
    width: float
    stretch: tuple[float, ...]
    shift: tuple[float, ...]


def _realize(profile: DataProfile, n: int) -> _Realized:
    if profile.seed is None:
        return _Realized((profile.u0_weight, profile.u1_weight), profile.width, (1.0,) * n, (0.0,) * n)
    rng = np.random.default_rng(profile.seed)
    weights = tuple(rng.uniform(-1.0, 1.0, size=2))
    width = profile.width * rng.uniform(0.8, 1.0)
    if profile.radial:
        return _Realized(weights, width, (1.0,) * n, (0.0,) * n)
    stretch = tuple(rng.uniform(0.7, 1.0, size=n))
    shift = tuple(rng.uniform(-0.1, 0.1, size=n) * width)
    return _Realized(weights, width, stretch, shift)


def support_radius(profile: DataProfile, n: int) -> float | None:
    """Radius of the ball (about ``center``) outside which the profile is negligible.

    ``None`` for periodic shapes that fill the box.
    """
    if not profile.compact:
        return None
    r = _realize(profile, n)
    extent = r.width * max(r.stretch) + math.sqrt(sum(x * x for x in r.shift))
    return extent * (GAUSSIAN_CUTOFF if profile.shape == "gaussian" else 1.0)


def _offsets(grid: GridSpec, profile: DataProfile, axis: int) -> np.ndarray:
    if profile.center is None:
        return grid.centered_offsets(axis)
    x = grid.coordinates(axis) - profile.center[axis]
    # nearest periodic image
    return x - grid.period * np.round(x / grid.period)


def profile_samples(profile: DataProfile, grid: GridSpec) -> np.ndarray:
    """The scalar profile ``phi`` on the grid (peak 1 for compact shapes)."""
    n = grid.n
    if profile.shape == "constant":
        return np.ones(grid.shape)
    if profile.shape == "single_mode":
        x = grid.coordinates(0)
        return np.broadcast_to(np.cos(2 * np.pi * profile.mode * x / grid.period), grid.shape).copy()
    radius = support_radius(profile, n)
    if radius >= grid.period / 2:
        raise ValueError(
            f"profile support radius {radius:.4g} does not fit in the box (period {grid.period})"
        )
    r = _realize(profile, n)
    rho2 = np.zeros(grid.shape)
    for axis in range(n):
        d = (_offsets(grid, profile, axis) - r.shift[axis]) / (r.width * r.stretch[axis])
        rho2 = rho2 + d * d
    if profile.shape == "gaussian":
        return np.exp(-0.5 * rho2)
    inside = rho2 < 1.0
    out = np.zeros(grid.shape)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    return out


def make_data(profile: DataProfile, grid: GridSpec, eps: float, s: float) -> FieldState:
    """Cauchy data of the given shape with ``||u0||_{H^s} + ||u1||_{H^{s-1}} = eps``."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    phi = profile_samples(profile, grid)
    w0, w1 = _realize(profile, grid.n).weights
    state = FieldState.from_samples(grid, w0 * phi, w1 * phi)
    size = data_norm(state, s)
    if size == 0:
        raise ValueError("profile produces zero data")
    return state.scaled(eps / size)


def concentrated_width(base: DataProfile, j: int) -> float:
    return base.width * 2.0**-j


def concentrated_family(
    base: DataProfile, grid: GridSpec, s: float, j: int, norm_decay: float = 1.0
) -> FieldState:
    """``j``-th member of a concentrating ladder.

    The profile width is ``base.width * 2^-j`` and the data size
    ``||u0||_{H^s} + ||u1||_{H^{s-1}}`` is ``2^(-j * norm_decay)``; the default
    ``norm_decay = 1`` shrinks size and support at the same rate.
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    width = concentrated_width(base, j)
    if width < 8 * grid.spacing:
        raise ValueError(
            f"j={j}: width {width:.4g} spans fewer than 8 grid cells (spacing {grid.spacing:.4g})"
        )
    return make_data(replace(base, width=width), grid, 2.0 ** (-j * norm_decay), s)
