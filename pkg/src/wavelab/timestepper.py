"""Method-of-lines RK4 integrator with blow-up detection.

The first-order system ``v' = w, w' = -|xi|^2 v + N_hat`` is advanced in
Fourier space by the classical four-stage Runge-Kutta scheme.  This solver is
deliberately independent of the Picard machinery so that it can serve as its
oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .nonlinearity import NonlinearSpec, eval_N_with_sup
from .spectral import (
    FieldState,
    GridSpec,
    SpectralField,
    gradient_sobolev_norm,
    gradient_sup_norm,
)

log = logging.getLogger(__name__)

CFL_LIMIT = 0.5
OUTCOMES = ("blowup", "survived_to_Tmax", "hit_horizon")


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class EvolveConfig:
    dt: float
    T_max: float
    blowup_threshold: float = 1e6
    record_every: int = 1
    horizon: float | None = None
    cfl: float = CFL_LIMIT

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T_max > 0:
            raise ValueError("T_max must be positive")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class LifespanRecord:
    eps: float
    T_star: float
    outcome: str
    final_norms: tuple[float, float]  # (H^{s-1} of du, sup of du)

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    states: list[FieldState] = field(default_factory=list)

    def append(self, state: FieldState):
        self.times.append(state.time)
        self.states.append(state)


def validity_horizon(grid: GridSpec, support_radius: float) -> float:
    """Time before a unit-speed signal from a centred ball of ``support_radius`` wraps around."""
    half = grid.period / 2
    if support_radius < 0 or support_radius >= half:
        raise ValueError(f"support radius {support_radius} must lie in [0, {half})")
    return half - support_radius


def check_cfl(grid: GridSpec, dt: float, limit: float = CFL_LIMIT):
    if dt * grid.xi_max > limit * (1 + 1e-12):
        raise CFLError(f"dt*|xi_max| = {dt * grid.xi_max:.4g} exceeds {limit}")


def _rhs(v: np.ndarray, w: np.ndarray, grid: GridSpec, spec: NonlinearSpec):
    state = FieldState(0.0, SpectralField(grid, v), SpectralField(grid, w))
    forcing, sup = eval_N_with_sup(state, spec)
    return w, -grid.xi_squared * v + forcing.coefficients, sup


def rk4_step(v: np.ndarray, w: np.ndarray, dt: float, grid: GridSpec, spec: NonlinearSpec):
    """One RK4 step; also returns the largest ``|du|`` seen at the stages."""
    k1v, k1w, s1 = _rhs(v, w, grid, spec)
    k2v, k2w, s2 = _rhs(v + 0.5 * dt * k1v, w + 0.5 * dt * k1w, grid, spec)
    k3v, k3w, s3 = _rhs(v + 0.5 * dt * k2v, w + 0.5 * dt * k2w, grid, spec)
    k4v, k4w, s4 = _rhs(v + dt * k3v, w + dt * k3w, grid, spec)
    v_new = v + (dt / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    w_new = w + (dt / 6.0) * (k1w + 2 * k2w + 2 * k3w + k4w)
    return v_new, w_new, max(s1, s2, s3, s4)


def _grid_sup(v: np.ndarray, w: np.ndarray, grid: GridSpec) -> float:
    state = FieldState(0.0, SpectralField(grid, v), SpectralField(grid, w))
    return gradient_sup_norm(state, oversample=1)


def _blown(v, w, sup, threshold) -> bool:
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
        return True
    return not np.isfinite(sup) or sup >= threshold


def evolve(
    state: FieldState, spec: NonlinearSpec, cfg: EvolveConfig, s: float = 1.0, eps: float = float("nan")
) -> tuple[Trajectory, LifespanRecord]:
    """Integrate until blow-up, the validity horizon, or ``T_max``.

    ``s`` only selects the ``H^{s-1}`` norm reported in the record.  Non-finite
    values end the run as a blow-up rather than raising.
    """
    grid = state.grid
    check_cfl(grid, cfg.dt, cfg.cfl)
    stop = cfg.T_max
    limited_by = "survived_to_Tmax"
    if cfg.horizon is not None and cfg.horizon < cfg.T_max:
        stop, limited_by = cfg.horizon, "hit_horizon"
    n_steps = int(np.ceil(stop / cfg.dt - 1e-9))
    t0 = state.time
    v = state.u.coefficients.astype(complex)
    w = state.ut.coefficients.astype(complex)
    traj = Trajectory()
    traj.append(state)
    outcome, T_star = limited_by, stop
    last = state
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_steps):
            t = t0 + step * cfg.dt
            h = min(cfg.dt, t0 + stop - t)
            v_new, w_new, stage_sup = rk4_step(v, w, h, grid, spec)
            sup = max(stage_sup, _grid_sup(v_new, w_new, grid)) if np.all(np.isfinite(v_new)) else np.inf
            if _blown(v_new, w_new, sup, cfg.blowup_threshold):
                # one bisection level inside the offending step
                v_half, w_half, half_sup = rk4_step(v, w, 0.5 * h, grid, spec)
                half_blown = _blown(v_half, w_half, half_sup, cfg.blowup_threshold)
                outcome = "blowup"
                T_star = (t - t0) + (0.5 * h if half_blown else h)
                break
            v, w = v_new, w_new
            last = FieldState(t + h, SpectralField(grid, v), SpectralField(grid, w))
            if (step + 1) % cfg.record_every == 0 or step + 1 == n_steps:
                traj.append(last)
    if outcome == "blowup":
        final = (float("inf"), float("inf"))
    else:
        final = (gradient_sobolev_norm(last, s - 1), gradient_sup_norm(last))
    return traj, LifespanRecord(eps, float(min(T_star, cfg.T_max)), outcome, final)


def lifespan_estimate(
    data_family: Callable[[float], FieldState],
    spec: NonlinearSpec,
    s: float,
    eps: float,
    cfg: EvolveConfig,
) -> LifespanRecord:
    """Lifespan of the solution from ``data_family(eps)``.

    ``data_family`` maps a size to Cauchy data with
    ``||u0||_{H^s} + ||u1||_{H^{s-1}} = eps`` (see :func:`wavelab.data.make_data`).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    _, record = evolve(data_family(eps), spec, cfg, s=s, eps=eps)
    log.debug("eps=%g T*=%g (%s)", eps, record.T_star, record.outcome)
    return record
