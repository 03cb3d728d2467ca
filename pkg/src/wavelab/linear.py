"""Exact Fourier-space propagator for the linear wave equation and Duhamel integrals.

Each mode obeys ``u'' + |xi|^2 u = F``; the homogeneous flow is applied in
closed form and forcing is integrated by fourth-order quadrature over a
uniform time grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .spectral import (
    FieldState,
    SpectralField,
    gradient_sobolev_norm,
    gradient_sup_norm,
)


def quadrature_weights(j: int, h: float) -> np.ndarray:
    """Weights for ``int_0^{t_j}`` on nodes ``0..max(j, 2)``.

    Composite Simpson for even ``j``; Simpson on ``[0, t_{j-3}]`` plus the 3/8
    rule for odd ``j >= 3``; for ``j = 1`` the integral of the quadratic through
    the first three nodes.  Exact on cubics except at ``j = 1`` (quadratics),
    whose local error is ``O(h^4)``.
    """
    if j < 0:
        raise ValueError("negative node index")
    if j == 0:
        return np.zeros(1)
    if j == 1:
        return np.array([5.0, 8.0, -1.0]) * (h / 12.0)
    w = np.zeros(j + 1)
    even_end = j if j % 2 == 0 else j - 3
    if even_end > 0:
        w[0:even_end + 1:2] += 2.0
        w[1:even_end:2] += 4.0
        w[0] -= 1.0
        w[even_end] -= 1.0
        w[: even_end + 1] *= h / 3.0
    if j % 2:
        w[j - 3: j + 1] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    return w


def uniform_step(times: Sequence[float]) -> float:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ValueError("need at least two sample times")
    h = np.diff(t)
    if np.any(h <= 0):
        raise ValueError("sample times must be strictly increasing")
    if np.max(np.abs(h - h.mean())) > 1e-9 * max(1.0, abs(t[-1])):
        raise ValueError("sample times must be uniformly spaced")
    return float(h.mean())


def mixed_time_norm(values: Sequence[float], q: float, dt: float) -> float:
    """``(int_0^T g^q dt)^(1/q)`` on a uniform grid; ``q = inf`` gives the max."""
    g = np.abs(np.asarray(values, dtype=float))
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if math.isinf(q):
        return float(np.max(g))
    J = len(g) - 1
    if J < 1:
        raise ValueError("need at least two samples")
    if J == 1:
        integral = 0.5 * dt * float(np.sum(g**q))
    else:
        integral = float(quadrature_weights(J, dt) @ g[: J + 1] ** q)
    return max(integral, 0.0) ** (1.0 / q)


def homogeneous_solution(data: FieldState, t: float) -> FieldState:
    """Free wave with Cauchy data ``data`` advanced by ``t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    grid = data.grid
    w = grid.xi_abs
    c = np.cos(t * w)
    s = np.sin(t * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc = np.where(w > 0, s / np.where(w > 0, w, 1.0), t)
    u0, u1 = data.u.coefficients, data.ut.coefficients
    u = c * u0 + sinc * u1
    ut = -w * s * u0 + c * u1
    return FieldState(data.time + t, SpectralField(grid, u), SpectralField(grid, ut))


def _check_forcing(forcing: Sequence[SpectralField], dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if len(forcing) < 3:
        raise ValueError("forcing needs at least three time samples")
    return np.stack([f.coefficients for f in forcing])


def duhamel(forcing: Sequence[SpectralField], dt: float, t: float) -> FieldState:
    """Null-data solution of ``box u = F`` at grid time ``t``.

    ``forcing[j]`` is ``F`` at ``t_j = j * dt``.  Evaluates the kernel
    ``sin((t - tau)|xi|)/|xi|`` directly at the nodes.
    """
    F = _check_forcing(forcing, dt)
    j = round(t / dt)
    if abs(j * dt - t) > 1e-9 * max(1.0, abs(t)) or not 0 <= j < len(F):
        raise ValueError(f"t={t} is not on the forcing grid")
    grid = forcing[0].grid
    if j == 0:
        return FieldState(0.0, SpectralField.zeros(grid), SpectralField.zeros(grid))
    w_q = quadrature_weights(j, dt)
    taus = np.arange(len(w_q)) * dt
    w = grid.xi_abs
    u = np.zeros(grid.shape, dtype=complex)
    ut = np.zeros(grid.shape, dtype=complex)
    safe = np.where(w > 0, w, 1.0)
    for weight, tau, Fj in zip(w_q, taus, F):
        lag = t - tau
        u += weight * np.where(w > 0, np.sin(lag * w) / safe, lag) * Fj
        ut += weight * np.cos(lag * w) * Fj
    return FieldState(t, SpectralField(grid, u), SpectralField(grid, ut))


def duhamel_history(forcing: Sequence[SpectralField], dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Duhamel solution at every grid time, as coefficient stacks ``(u, ut)``.

    Uses ``sin((t - tau) w) = sin(t w) cos(tau w) - cos(t w) sin(tau w)`` so
    the quadrature becomes two running integrals; same nodes and weights as
    :func:`duhamel`.
    """
    F = _check_forcing(forcing, dt)
    grid = forcing[0].grid
    J = len(F) - 1
    times = (np.arange(J + 1) * dt).reshape((J + 1,) + (1,) * grid.n)
    w = grid.xi_abs[None]
    cos_tw = np.cos(times * w)
    sin_tw = np.sin(times * w)
    Ic = kernels.cumulative_quadrature(cos_tw * F, dt)
    Is = kernels.cumulative_quadrature(sin_tw * F, dt)
    safe = np.where(w > 0, w, 1.0)
    u = (sin_tw * Ic - cos_tw * Is) / safe
    ut = cos_tw * Ic + sin_tw * Is
    zero = (0,) * grid.n
    if grid.xi_abs[zero] == 0:
        F0 = F[(slice(None),) + zero]
        t1 = times.ravel()
        I1 = kernels.cumulative_quadrature(F0[:, None], dt)[:, 0]
        It = kernels.cumulative_quadrature((t1 * F0)[:, None], dt)[:, 0]
        u[(slice(None),) + zero] = t1 * I1 - It
        ut[(slice(None),) + zero] = I1
    return u, ut


def linear_history(data: FieldState, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Free-wave coefficients at each of ``times`` (relative to ``data.time``)."""
    grid = data.grid
    t = np.asarray(times, dtype=float).reshape((-1,) + (1,) * grid.n)
    w = grid.xi_abs[None]
    c = np.cos(t * w)
    s = np.sin(t * w)
    sinc = np.where(w > 0, s / np.where(w > 0, w, 1.0), t)
    u0, u1 = data.u.coefficients[None], data.ut.coefficients[None]
    return c * u0 + sinc * u1, -w * s * u0 + c * u1


# --------------------------------------------------------------------------
# Strichartz measurements


@dataclass(frozen=True)
class StrichartzQuery:
    q: float
    s: float
    T: float
    sample_times: tuple[float, ...]

    def __post_init__(self):
        if not self.q >= 2:
            raise ValueError(f"q must be >= 2, got {self.q}")
        if not self.T > 0:
            raise ValueError("T must be positive")
        t = self.sample_times
        if len(t) < 2 or t[0] != 0.0 or abs(t[-1] - self.T) > 1e-12 * self.T:
            raise ValueError("sample_times must run from 0 to T")
        uniform_step(t)

    @classmethod
    def uniform(cls, q: float, s: float, T: float, intervals: int) -> "StrichartzQuery":
        return cls(q, s, T, tuple(np.linspace(0.0, T, intervals + 1)))

    @property
    def dt(self) -> float:
        return self.T / (len(self.sample_times) - 1)


def gradient_profile(data: FieldState, times: Sequence[float], s: float, oversample: int = 2):
    """``sup_x |du(t)|`` and ``||du(t)||_{H^{s-1}}`` of the free wave at each time."""
    sups, norms = [], []
    for t in times:
        state = homogeneous_solution(data, float(t))
        sups.append(gradient_sup_norm(state, oversample))
        norms.append(gradient_sobolev_norm(state, s - 1))
    return np.array(sups), np.array(norms)


def _initial_size(data: FieldState, s: float) -> float:
    size = gradient_sobolev_norm(data, s - 1)
    if size == 0:
        raise ValueError("zero data: ||du(0)||_{H^{s-1}} vanishes")
    return size


def estimate_strichartz_ratio(data: FieldState, query: StrichartzQuery) -> float:
    """``(||du||_{L^q L^inf} + ||du||_{L^inf H^{s-1}}) / ||du(0)||_{H^{s-1}}`` for the free wave.

    A lower bound for the constant in the linear estimate, from one datum.
    """
    size = _initial_size(data, query.s)
    sups, norms = gradient_profile(data, query.sample_times, query.s)
    return (mixed_time_norm(sups, query.q, query.dt) + float(np.max(norms))) / size


def strichartz_growth(
    data: FieldState, s: float, T_list: Sequence[float], dt: float, q: float = 2.0
) -> list[tuple[float, float, float]]:
    """``(T, L^q L^inf ratio, full ratio)`` for each ``T``, sharing one sample pass.

    The full ratio adds ``||du||_{L^inf([0,T]) H^{s-1}}`` as in
    :func:`estimate_strichartz_ratio`.  Every ``T`` must be a multiple of ``dt``.
    """
    T_list = [float(T) for T in T_list]
    if not T_list or T_list[0] <= 0 or any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be positive and increasing")
    size = _initial_size(data, s)
    steps = [round(T / dt) for T in T_list]
    if any(j < 1 or abs(j * dt - T) > 1e-9 * T for j, T in zip(steps, T_list)):
        raise ValueError("every T must be a positive multiple of dt")
    times = np.arange(steps[-1] + 1) * dt
    sups, norms = gradient_profile(data, times, s)
    rows = []
    for T, j in zip(T_list, steps):
        lq = mixed_time_norm(sups[: j + 1], q, dt) / size
        rows.append((T, lq, lq + float(np.max(norms[: j + 1])) / size))
    return rows


def estimate_endpoint_growth(
    data: FieldState, s: float, T_list: Sequence[float], dt: float
) -> list[tuple[float, float]]:
    """``||du||_{L^2([0,T]) L^inf} / ||du(0)||_{H^{s-1}}`` for each ``T`` (``n = 3``, ``s > 2``)."""
    if data.grid.n != 3:
        raise ValueError("the endpoint estimate concerns n = 3")
    if not s > 2:
        raise ValueError("the endpoint estimate needs s > 2")
    return [(T, l2) for T, l2, _ in strichartz_growth(data, s, T_list, dt)]
