"""Picard iteration ``u^(0) = 0``, ``box u^(m+1) = N(u^(m))`` with fixed Cauchy data.

Every iterate is a full trajectory on a uniform time grid.  The iteration is
measured in the norm ``||du||_{L^inf_t H^{s-1}} + ||du||_{L^q_t L^inf_x}``,
which is also the norm used to declare convergence.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linear import duhamel_history, linear_history, mixed_time_norm
from .nonlinearity import NonlinearSpec, eval_N
from .spectral import FieldState, SpectralField, data_norm, gradient_sup_norm

MODES = ("standard", "endpoint_3_3")


class PicardDivergence(ArithmeticError):
    def __init__(self, m: int):
        super().__init__(f"non-finite values in Picard iterate m={m}")
        self.m = m


class PicardNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class PicardConfig:
    T: float
    steps: int
    s: float
    q: float
    m_max: int = 40
    tol: float = 1e-10
    mode: str = "standard"
    horizon: float | None = None
    oversample: int = 2

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.steps < 8 or self.steps % 2:
            raise ValueError(f"steps must be even and >= 8, got {self.steps}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "endpoint_3_3" and self.q != 2:
            raise ValueError("endpoint_3_3 mode measures L^2 in time (q = 2)")
        if self.q < 1:
            raise ValueError("q must be >= 1")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


@dataclass
class IterationTrace:
    """Norm bookkeeping for one Picard run.

    Row ``m`` holds ``iter_norm`` of ``du^(m)`` and ``diff_norm`` of
    ``d(u^(m+1) - u^(m))``; ``ratio[m] = diff[m] / diff[m-1]`` from ``m = 2``.
    """

    eps: float
    iter_norm: list[float] = field(default_factory=list)
    diff_norm: list[float] = field(default_factory=list)
    ratio: list[float | None] = field(default_factory=list)
    lq_norm: list[float] = field(default_factory=list)  # ||du^(m)||_{L^q L^inf}
    h_norm: list[float] = field(default_factory=list)  # ||du^(m)||_{L^inf H^{s-1}}
    A: list[float | None] = field(default_factory=list)
    final_norm: float = 0.0
    converged_at: int | None = None
    stop_reason: str = ""

    @property
    def M_observed(self) -> float:
        if self.eps == 0:
            return 0.0
        return max(self.iter_norm + [self.final_norm]) / self.eps

    @property
    def converged(self) -> bool:
        return self.converged_at is not None

    def worst_ratio(self) -> float:
        vals = [r for r in self.ratio if r is not None]
        return max(vals) if vals else 0.0

    def cauchy_bound_holds(self) -> bool:
        """``diff[m] <= 2^(1-m) M eps`` for every ``m >= 2``."""
        bound = self.M_observed * self.eps
        return all(d <= 2.0 ** (1 - m) * bound * (1 + 1e-12) for m, d in enumerate(self.diff_norm) if m >= 2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "iter_norm", "diff_norm", "ratio", "A_m"])
        for m, (it, df) in enumerate(zip(self.iter_norm, self.diff_norm)):
            r = self.ratio[m]
            a = self.A[m] if m < len(self.A) else None
            writer.writerow([m, repr(it), repr(df), "" if r is None else repr(r), "" if a is None else repr(a)])
        return buf.getvalue()


@dataclass
class PicardResult:
    times: np.ndarray
    u: np.ndarray  # coefficient stack, shape (steps+1, *grid.shape)
    ut: np.ndarray
    trace: IterationTrace
    grid: object

    def state(self, j: int) -> FieldState:
        return FieldState(
            float(self.times[j]), SpectralField(self.grid, self.u[j]), SpectralField(self.grid, self.ut[j])
        )


def trajectory_norms(u: np.ndarray, ut: np.ndarray, grid, s: float, q: float, dt: float, oversample: int = 2):
    """``(||du||_{L^inf H^{s-1}}, ||du||_{L^q L^inf})`` of a coefficient trajectory."""
    axes = tuple(range(1, grid.n + 1))
    weight = ((1.0 + grid.xi_squared) ** (s - 1))[None]
    h = np.sqrt(np.sum(weight * (np.abs(ut) ** 2 + grid.xi_squared[None] * np.abs(u) ** 2), axis=axes))
    sups = [
        gradient_sup_norm(FieldState(0.0, SpectralField(grid, a), SpectralField(grid, b)), oversample)
        for a, b in zip(u, ut)
    ]
    return float(np.max(h)), mixed_time_norm(sups, q, dt)


def _forcing(u: np.ndarray, ut: np.ndarray, grid, spec: NonlinearSpec) -> list[SpectralField]:
    return [eval_N(FieldState(0.0, SpectralField(grid, a), SpectralField(grid, b)), spec) for a, b in zip(u, ut)]


def picard_solve(data: FieldState, spec: NonlinearSpec, cfg: PicardConfig) -> PicardResult:
    """Run the iteration until ``diff_norm <= tol * eps`` or ``m_max`` iterates.

    Raises :class:`PicardDivergence` as soon as an iterate stops being finite.
    """
    # overflow is detected explicitly below
    with np.errstate(over="ignore", invalid="ignore"):
        return _picard_solve(data, spec, cfg)


def _picard_solve(data: FieldState, spec: NonlinearSpec, cfg: PicardConfig) -> PicardResult:
    grid = data.grid
    if spec.n != grid.n:
        raise ValueError("nonlinearity and data have different dimensions")
    if cfg.horizon is not None and cfg.T > cfg.horizon * (1 + 1e-12):
        raise ValueError(f"T={cfg.T} lies beyond the validity horizon {cfg.horizon}")
    times, dt = cfg.times, cfg.dt
    eps = data_norm(data, cfg.s)
    trace = IterationTrace(eps)
    log_weight = math.sqrt(math.log1p(cfg.T))

    def measure(u, ut):
        return trajectory_norms(u, ut, grid, cfg.s, cfg.q, dt, cfg.oversample)

    def record_iterate(h_norm, lq_norm):
        trace.iter_norm.append(h_norm + lq_norm)
        trace.h_norm.append(h_norm)
        trace.lq_norm.append(lq_norm)
        trace.A.append(lq_norm + log_weight * h_norm if cfg.mode == "endpoint_3_3" else None)

    lin_u, lin_ut = linear_history(data, times)
    cur_u = np.zeros_like(lin_u)
    cur_ut = np.zeros_like(lin_ut)
    record_iterate(0.0, 0.0)
    for m in range(cfg.m_max):
        if m == 0 or spec.is_zero:
            nxt_u, nxt_ut = lin_u, lin_ut
        else:
            du, dut = duhamel_history(_forcing(cur_u, cur_ut, grid, spec), dt)
            nxt_u, nxt_ut = lin_u + du, lin_ut + dut
        if not (np.all(np.isfinite(nxt_u)) and np.all(np.isfinite(nxt_ut))):
            raise PicardDivergence(m + 1)
        d_h, d_lq = measure(nxt_u - cur_u, nxt_ut - cur_ut)
        diff = d_h + d_lq
        trace.diff_norm.append(diff)
        prev = trace.diff_norm[m - 1] if m >= 1 else None
        trace.ratio.append(diff / prev if m >= 2 and prev else None)
        n_h, n_lq = measure(nxt_u, nxt_ut)
        if not math.isfinite(n_h + n_lq):
            raise PicardDivergence(m + 1)
        cur_u, cur_ut = nxt_u, nxt_ut
        if m >= 1 and diff <= cfg.tol * eps:
            trace.final_norm = n_h + n_lq
            trace.converged_at = m
            trace.stop_reason = "tol"
            break
        if m + 1 < cfg.m_max:
            record_iterate(n_h, n_lq)
        else:
            trace.final_norm = n_h + n_lq
    else:
        trace.stop_reason = "m_max"
    return PicardResult(times, cur_u, cur_ut, trace, grid)


def solution_difference_norm(a: PicardResult, b: PicardResult, cfg: PicardConfig) -> float:
    h, lq = trajectory_norms(a.u - b.u, a.ut - b.ut, a.grid, cfg.s, cfg.q, cfg.dt, cfg.oversample)
    return h + lq


def continuous_dependence_probe(
    data_a: FieldState, data_b: FieldState, spec: NonlinearSpec, cfg: PicardConfig
) -> float:
    """Lipschitz ratio ``||d(u - v)|| / ||(u0 - v0, u1 - v1)||_{H^s x H^{s-1}}``."""
    denom = data_norm(data_a - data_b, cfg.s)
    if denom == 0:
        raise ValueError("identical data: the Lipschitz ratio is undefined")
    ra = picard_solve(data_a, spec, cfg)
    rb = picard_solve(data_b, spec, cfg)
    for r in (ra, rb):
        if not r.trace.converged:
            raise PicardNotConverged(f"Picard run did not converge within m_max={cfg.m_max}")
    return solution_difference_norm(ra, rb, cfg) / denom


def contracts(trace: IterationTrace, bound: float = 0.5) -> bool:
    return trace.converged and all(r is None or r <= bound for r in trace.ratio)


def find_contraction_threshold(
    family: Callable[[float], FieldState],
    spec: NonlinearSpec,
    cfg: PicardConfig,
    eps_lo: float,
    eps_hi: float,
    iterations: int = 10,
) -> float:
    """Largest ``eps`` in ``[eps_lo, eps_hi]`` (to bisection accuracy) at which runs contract.

    Bisection is geometric.  Returns ``eps_hi`` if it already contracts and
    ``0.0`` if not even ``eps_lo`` does.
    """

    def ok(eps: float) -> bool:
        try:
            return contracts(picard_solve(family(eps), spec, cfg).trace)
        except PicardDivergence:
            return False

    if ok(eps_hi):
        return eps_hi
    if not ok(eps_lo):
        return 0.0
    lo, hi = eps_lo, eps_hi
    for _ in range(iterations):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
