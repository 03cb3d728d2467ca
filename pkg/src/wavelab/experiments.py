"""The five canonical experiments and their CSV output.

Every CSV starts with a comment block::

    # wavelab-csv v1 <experiment>
    # config_sha256=...
    # seed=... grid=... validity_horizon=... gate=... override_gate=...

followed by a header row.  Floats are written with ``repr`` so output is
byte-identical across runs with the same configuration and seed.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from .config import ExperimentConfig
from .data import concentrated_family, concentrated_width, make_data, support_radius
from .linear import StrichartzQuery, estimate_strichartz_ratio, strichartz_growth
from .nonlinearity import is_radial, radial_witness, regularity_gate, scaling_index, strichartz_admissible
from .picard import PicardConfig, PicardDivergence, contracts, find_contraction_threshold, picard_solve
from .spectral import gradient_sobolev_norm, gradient_sup_norm
from .timestepper import EvolveConfig, evolve, validity_horizon

log = logging.getLogger(__name__)

CSV_VERSION = "wavelab-csv v1"


class Refusal(Exception):
    """A precondition of the experiment is not met (CLI exit code 2)."""


class Divergence(Exception):
    """Numerical divergence in a single (non-sweep) run (CLI exit code 3)."""


@dataclass
class RunReport:
    experiment: str
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# helpers


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: str, header: list[str], columns: list[str], rows: list[list]) -> str:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map preserves submission order
        return list(pool.map(fn, items))


def _horizon(cfg: ExperimentConfig) -> float | None:
    radius = support_radius(cfg.profile, cfg.grid.n)
    if radius is None:
        return None
    return validity_horizon(cfg.grid, radius)


def _gate_text(cfg: ExperimentConfig, s_values) -> str:
    spec = cfg.nonlinearity
    radial = cfg.profile.radial and is_radial(spec)
    parts = []
    for s in s_values:
        v = regularity_gate(spec.n, spec.k, s, radial)
        parts.append(f"s={s!r}:{v.case}:{'accepted' if v.accepted else 'rejected'}")
    return ";".join(parts) if parts else "n/a"


def _header(cfg: ExperimentConfig, s_values, extra: dict | None = None) -> list[str]:
    g = cfg.grid
    horizon = _horizon(cfg)
    lines = [
        f"{CSV_VERSION} {cfg.experiment}",
        f"config_sha256={cfg.digest()}",
        f"seed={cfg.seed}",
        f"grid=n:{g.n},points_per_axis:{g.points_per_axis},period:{g.period!r}",
        f"validity_horizon={'none' if horizon is None else repr(horizon)}",
        f"gate={_gate_text(cfg, s_values)}",
        f"override_gate={'true' if cfg.override_gate else 'false'}",
    ]
    if g.n == 1:
        lines.append("note=n=1 surrogate: outside all theorem hypotheses")
    for key, value in (extra or {}).items():
        lines.append(f"{key}={_fmt(value)}")
    return lines


def _require(cfg: ExperimentConfig, *names):
    missing = [n for n in names if getattr(cfg, n) in (None, ())]
    if missing:
        raise ValueError(f"{cfg.experiment} needs config keys: {', '.join(missing)}")


def _check_gate(cfg: ExperimentConfig, s: float):
    spec = cfg.nonlinearity
    verdict = regularity_gate(spec.n, spec.k, s, cfg.profile.radial and is_radial(spec))
    if not verdict.accepted and not cfg.override_gate:
        raise Refusal(f"admissibility gate: {verdict.describe()} (use --override-gate)")
    return verdict


def _evolve_config(cfg: ExperimentConfig) -> EvolveConfig:
    return EvolveConfig(
        dt=cfg.dt,
        T_max=cfg.T_max,
        blowup_threshold=cfg.blowup_threshold,
        record_every=cfg.record_every,
        horizon=_horizon(cfg),
    )


# --------------------------------------------------------------------------
# picard_contraction


def _picard_config(cfg: ExperimentConfig) -> PicardConfig:
    q = cfg.q if cfg.q is not None else (2 if cfg.mode == "endpoint_3_3" else cfg.nonlinearity.k - 1)
    return PicardConfig(
        T=cfg.T, steps=cfg.steps, s=cfg.s, q=q, m_max=cfg.m_max, tol=cfg.tol, mode=cfg.mode, horizon=_horizon(cfg)
    )


def _picard_point(cfg: ExperimentConfig, eps: float):
    pcfg = _picard_config(cfg)
    try:
        return picard_solve(make_data(cfg.profile, cfg.grid, eps, cfg.s), cfg.nonlinearity, pcfg).trace
    except PicardDivergence as exc:
        return exc


def run_picard_contraction(cfg: ExperimentConfig, out_dir: str, threads: int = 1) -> RunReport:
    _require(cfg, "s", "T", "steps", "eps")
    _check_gate(cfg, cfg.s)
    pcfg = _picard_config(cfg)
    results = _map(partial(_picard_point, cfg), cfg.eps, threads)
    if len(results) == 1 and isinstance(results[0], PicardDivergence):
        raise Divergence(str(results[0]))

    eps0 = None
    if cfg.eps_search is not None:
        family = partial(make_data, cfg.profile, cfg.grid, s=cfg.s)
        eps0 = find_contraction_threshold(family, cfg.nonlinearity, pcfg, *cfg.eps_search)

    report = RunReport(cfg.experiment)
    rows = []
    worst, max_M = 0.0, 0.0
    for i, (eps, res) in enumerate(zip(cfg.eps, results)):
        if isinstance(res, PicardDivergence):
            rows.append([eps, None, f"diverged_at_{res.m}", None, None, None, None, False])
            continue
        trace_header = _header(cfg, [cfg.s], {"eps": eps})
        columns = ["m", "iter_norm", "diff_norm", "ratio", "A_m"]
        trace_rows = [
            [m, it, df, res.ratio[m], res.A[m] if m < len(res.A) else None]
            for m, (it, df) in enumerate(zip(res.iter_norm, res.diff_norm))
        ]
        report.files.append(_write_csv(os.path.join(out_dir, f"trace_{i:03d}.csv"), trace_header, columns, trace_rows))
        rows.append(
            [eps, res.converged_at, res.stop_reason, len(res.diff_norm), res.worst_ratio(), res.M_observed,
             res.cauchy_bound_holds(), contracts(res)]
        )
        max_M = max(max_M, res.M_observed)
        if eps0 is None or eps <= eps0:
            worst = max(worst, res.worst_ratio())
    summary = {"eps0": eps0, "worst_ratio_below_eps0": worst, "max_M_observed": max_M}
    columns = ["eps", "converged_at", "stop_reason", "iterations", "worst_ratio", "M_observed", "cauchy_bound",
               "contracts"]
    report.files.append(
        _write_csv(os.path.join(out_dir, "summary.csv"), _header(cfg, [cfg.s], summary), columns, rows)
    )
    report.summary = summary | {"rows": rows}
    return report


# --------------------------------------------------------------------------
# lifespan_sweep


def _lifespan_point(cfg: ExperimentConfig, eps: float):
    data = make_data(cfg.profile, cfg.grid, eps, cfg.s)
    _, rec = evolve(data, cfg.nonlinearity, _evolve_config(cfg), s=cfg.s, eps=eps)
    return rec


def fit_log_lifespan(eps, T_star, outcomes) -> dict:
    """Least-squares slope of ``ln T*`` against ``eps^-2`` over blow-up rows."""
    pts = [(e**-2, math.log(t)) for e, t, o in zip(eps, T_star, outcomes) if o == "blowup" and e > 0]
    if len(pts) < 2:
        return {"status": "inconclusive", "slope": None, "intercept": None, "sign": None}
    x, y = np.array(pts).T
    slope, intercept = np.polyfit(x, y, 1)
    sign = "positive" if slope > 0 else ("negative" if slope < 0 else "zero")
    return {"status": "ok", "slope": float(slope), "intercept": float(intercept), "sign": sign}


def run_lifespan_sweep(cfg: ExperimentConfig, out_dir: str, threads: int = 1) -> RunReport:
    _require(cfg, "s", "dt", "T_max", "eps")
    _check_gate(cfg, cfg.s)
    records = _map(partial(_lifespan_point, cfg), cfg.eps, threads)
    spec = cfg.nonlinearity
    if (spec.n, spec.k) == (3, 3):
        fit = fit_log_lifespan(cfg.eps, [r.T_star for r in records], [r.outcome for r in records])
    else:
        fit = {"status": "disabled", "slope": None, "intercept": None, "sign": None}
    order = sorted(range(len(records)), key=lambda i: -cfg.eps[i])
    ordered = [records[i].T_star for i in order]
    monotone = all(b > a for a, b in zip(ordered, ordered[1:]))
    fit["strictly_increasing_as_eps_decreases"] = monotone
    rows = [[r.eps, r.T_star, r.outcome, r.final_norms[0], r.final_norms[1]] for r in records]
    report = RunReport(cfg.experiment)
    header = _header(cfg, [cfg.s])
    report.files.append(
        _write_csv(os.path.join(out_dir, "lifespan.csv"), header,
                   ["eps", "T_star", "outcome", "final_h_norm", "final_sup"], rows)
    )
    report.files.append(
        _write_csv(os.path.join(out_dir, "fit.csv"), header,
                   ["status", "slope", "intercept", "sign", "strictly_increasing_as_eps_decreases"],
                   [[fit["status"], fit["slope"], fit["intercept"], fit["sign"], monotone]])
    )
    report.summary = {"fit": fit, "records": records}
    return report


# --------------------------------------------------------------------------
# strichartz_ensemble


def _strichartz_point(cfg: ExperimentConfig, seed: int):
    profile = replace(cfg.profile, seed=seed)
    data = make_data(profile, cfg.grid, 1.0, cfg.s)
    query = StrichartzQuery.uniform(cfg.q, cfg.s, cfg.T, cfg.steps)
    if not ((cfg.q, cfg.grid.n) == (2, 3) and cfg.T_list):
        return estimate_strichartz_ratio(data, query), None
    growth = strichartz_growth(data, cfg.s, cfg.T_list, query.dt)
    # the last growth row already covers [0, T] with the same samples
    if math.isclose(growth[-1][0], cfg.T):
        return growth[-1][2], growth
    return estimate_strichartz_ratio(data, query), growth


def run_strichartz_ensemble(cfg: ExperimentConfig, out_dir: str, threads: int = 1) -> RunReport:
    _require(cfg, "s", "q", "T", "steps")
    n = cfg.grid.n
    if not strichartz_admissible(n, cfg.q, cfg.s, cfg.profile.radial) and not cfg.override_gate:
        raise Refusal(
            f"(n={n}, q={cfg.q!r}, s={cfg.s!r}, radial={cfg.profile.radial}) is outside the linear estimate's range"
        )
    horizon = _horizon(cfg)
    t_end = max([cfg.T, *cfg.T_list])
    if horizon is not None and t_end > horizon * (1 + 1e-12) and not cfg.override_gate:
        raise Refusal(f"time {t_end} exceeds the validity horizon {horizon}")
    seeds = [cfg.seed + i for i in range(cfg.n_seeds)]
    results = _map(partial(_strichartz_point, cfg), seeds, threads)
    header = _header(cfg, [cfg.s], {"q": cfg.q, "T": cfg.T})
    rows, running = [], 0.0
    for seed, (ratio, _) in zip(seeds, results):
        running = max(running, ratio)
        rows.append([seed, ratio, running])
    report = RunReport(cfg.experiment)
    report.files.append(_write_csv(os.path.join(out_dir, "ratios.csv"), header, ["seed", "ratio", "running_max"], rows))
    report.summary = {"ratios": [r for r, _ in results], "ensemble_max": running}
    if results and results[0][1] is not None:
        growth_rows, table = [], {}
        for seed, (_, growth) in zip(seeds, results):
            for T, l2, full in growth:
                growth_rows.append([seed, T, l2, full, full / math.sqrt(math.log1p(T))])
                table[T] = max(table.get(T, 0.0), full)
        for T, full in table.items():
            growth_rows.append(["max", T, None, full, full / math.sqrt(math.log1p(T))])
        report.files.append(
            _write_csv(os.path.join(out_dir, "growth.csv"), header,
                       ["seed", "T", "l2_ratio", "ratio", "ratio_over_sqrt_log"], growth_rows)
        )
        normalized = [full / math.sqrt(math.log1p(T)) for T, full in table.items()]
        report.summary["growth_max"] = table
        report.summary["growth_spread"] = max(normalized) / min(normalized)
    return report


# --------------------------------------------------------------------------
# radial_compare


def _radial_point(cfg: ExperimentConfig, s: float, eps: float):
    data = make_data(cfg.profile, cfg.grid, eps, s)
    traj, rec = evolve(data, cfg.nonlinearity, _evolve_config(cfg), s=s, eps=eps)
    history = [(st.time, gradient_sobolev_norm(st, s - 1), gradient_sup_norm(st)) for st in traj.states]
    return rec, history


def run_radial_compare(cfg: ExperimentConfig, out_dir: str, threads: int = 1) -> RunReport:
    _require(cfg, "dt", "T_max", "eps")
    spec = cfg.nonlinearity
    witness = radial_witness(spec)
    if witness is not None:
        raise Refusal(f"equation is not radial; rotation witness: {witness.describe()}")
    if not cfg.profile.radial:
        raise Refusal("radial_compare needs a radial data profile")
    s = scaling_index(spec.n, spec.k)
    verdict = regularity_gate(spec.n, spec.k, s, radial=True)
    if verdict.case != "radial_global" and not cfg.override_gate:
        raise Refusal(f"(n={spec.n}, k={spec.k}) is outside the radial regime: {verdict.describe()}")
    results = _map(partial(_radial_point, cfg, s), cfg.eps, threads)
    report = RunReport(cfg.experiment)
    rows = []
    for i, (eps, (rec, history)) in enumerate(zip(cfg.eps, results)):
        header = _header(cfg, [s], {"eps": eps})
        report.files.append(
            _write_csv(os.path.join(out_dir, f"history_{i:03d}.csv"), header, ["t", "h_norm", "sup"],
                       [list(h) for h in history])
        )
        sups = [h[2] for h in history]
        sup0 = sups[0]
        growth = max(sups) / sup0 if sup0 > 0 else 1.0
        bounded = rec.outcome != "blowup" and growth <= cfg.growth_bound
        rows.append([eps, rec.outcome, rec.T_star, sup0, max(sups), growth, bounded])
    report.files.append(
        _write_csv(os.path.join(out_dir, "summary.csv"), _header(cfg, [s], {"growth_bound": cfg.growth_bound}),
                   ["eps", "outcome", "T_star", "sup_initial", "sup_max", "growth_factor", "bounded"], rows)
    )
    report.summary = {"rows": rows, "s": s}
    return report


# --------------------------------------------------------------------------
# illposedness_probe


def _probe_point(cfg: ExperimentConfig, item):
    s, j = item
    try:
        data = concentrated_family(cfg.profile, cfg.grid, s, j, cfg.norm_decay)
    except ValueError as exc:
        return ("skipped", str(exc))
    _, rec = evolve(data, cfg.nonlinearity, _evolve_config(cfg), s=s, eps=2.0 ** (-j * cfg.norm_decay))
    return ("ok", rec, gradient_sup_norm(data))


def classify_trend(T_star: list[float], outcomes: list[str], below: bool) -> str:
    """Trend label of lifespans along the concentration ladder."""
    if len(T_star) < 2:
        return "insufficient"
    if all(o != "blowup" for o in outcomes):
        return "vacuous" if below else "horizon_limited"
    if below:
        ok = all(o == "blowup" for o in outcomes) and all(b < a for a, b in zip(T_star, T_star[1:]))
        return "decreasing" if ok else "violated"
    return "non_decreasing" if all(b >= a for a, b in zip(T_star, T_star[1:])) else "violated"


def run_illposedness_probe(cfg: ExperimentConfig, out_dir: str, threads: int = 1) -> RunReport:
    _require(cfg, "s_list", "j", "dt", "T_max")
    spec = cfg.nonlinearity
    s_c = scaling_index(spec.n, spec.k)
    if not (min(cfg.s_list) < s_c < max(cfg.s_list)):
        raise Refusal(f"s_list {list(cfg.s_list)} must straddle s_c={s_c!r}")
    items = [(s, j) for s in cfg.s_list for j in cfg.j]
    results = _map(partial(_probe_point, cfg), items, threads)
    rows, per_s = [], {}
    for (s, j), res in zip(items, results):
        if res[0] == "skipped":
            log.warning("s=%g j=%d skipped: %s", s, j, res[1])
            continue
        _, rec, sup0 = res
        rows.append([s, j, concentrated_width(cfg.profile, j), rec.eps, sup0, rec.T_star, rec.outcome])
        per_s.setdefault(s, []).append(rec)
    verdict_rows, labels = [], []
    for s in cfg.s_list:
        recs = per_s.get(s, [])
        below = s < s_c
        label = classify_trend([r.T_star for r in recs], [r.outcome for r in recs], below)
        ok = label == "decreasing" if below else label in ("non_decreasing", "horizon_limited")
        labels.append((below, label, ok))
        verdict_rows.append([s, "below_s_c" if below else "above_s_c", label, ok])
    if all(label == "vacuous" for below, label, _ in labels if below):
        overall = "vacuous"
    elif all(ok for _, _, ok in labels):
        overall = "sharpness_trend_observed"
    else:
        overall = "not_observed"
    header = _header(cfg, list(cfg.s_list), {"s_c": s_c, "norm_decay": cfg.norm_decay})
    report = RunReport(cfg.experiment)
    report.files.append(
        _write_csv(os.path.join(out_dir, "probe.csv"), header,
                   ["s", "j", "width", "data_size", "sup_initial", "T_star", "outcome"], rows)
    )
    report.files.append(
        _write_csv(os.path.join(out_dir, "verdict.csv"), header + [f"verdict={overall}"],
                   ["s", "regime", "trend", "pass"], verdict_rows)
    )
    report.summary = {"verdict": overall, "rows": rows, "labels": verdict_rows}
    return report


RUNNERS = {
    "picard_contraction": run_picard_contraction,
    "lifespan_sweep": run_lifespan_sweep,
    "strichartz_ensemble": run_strichartz_ensemble,
    "radial_compare": run_radial_compare,
    "illposedness_probe": run_illposedness_probe,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str, threads: int = 1) -> RunReport:
    os.makedirs(out_dir, exist_ok=True)
    return RUNNERS[cfg.experiment](cfg, out_dir, threads)
