"""Experiment configuration: JSON file, schema-validated, with located error messages."""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

import jsonschema

from .data import DataProfile
from .nonlinearity import NonlinearSpec, SpecSyntaxError, parse_spec
from .spectral import GridSpec

EXPERIMENTS = (
    "picard_contraction",
    "lifespan_sweep",
    "strichartz_ensemble",
    "radial_compare",
    "illposedness_probe",
)


class ConfigError(ValueError):
    """Invalid configuration; ``line``/``column`` point into the source when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


def load_schema() -> dict:
    text = resources.files("wavelab").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    grid: GridSpec
    nonlinearity: NonlinearSpec
    profile: DataProfile = field(default_factory=DataProfile)
    s: float | None = None
    s_list: tuple[float, ...] = ()
    eps: tuple[float, ...] = ()
    eps_search: tuple[float, float] | None = None
    j: tuple[int, ...] = ()
    q: float | None = None
    mode: str = "standard"
    T: float | None = None
    T_list: tuple[float, ...] = ()
    steps: int | None = None
    dt: float | None = None
    T_max: float | None = None
    m_max: int = 40
    tol: float = 1e-10
    n_seeds: int = 1
    seed: int = 0
    blowup_threshold: float = 1e6
    record_every: int = 1
    growth_bound: float = 2.0
    norm_decay: float = 1.0
    override_gate: bool = False
    output: str | None = None

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "grid":
                value = asdict(value)
            elif f.name == "nonlinearity":
                value = value.to_text()
            elif f.name == "profile":
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        g = d.pop("grid")
        kwargs = {
            "grid": GridSpec(int(g["n"]), int(g["points_per_axis"]), float(g["period"])),
            "nonlinearity": parse_spec(d.pop("nonlinearity")),
            "profile": DataProfile.from_dict(d.pop("profile", {}) or {}),
        }
        for key in ("s_list", "eps", "j", "T_list"):
            if key in d:
                kwargs[key] = tuple(d.pop(key))
        if d.get("eps_search") is not None:
            kwargs["eps_search"] = tuple(d.pop("eps_search"))
        kwargs.update(d)
        cfg = cls(**kwargs)
        if cfg.nonlinearity.n != cfg.grid.n:
            raise ValueError(f"nonlinearity is for n={cfg.nonlinearity.n} but the grid has n={cfg.grid.n}")
        return cfg


def _locate(text: str, path) -> tuple[int, int]:
    """Best-effort line/column of the innermost key of a JSON path."""
    pos = None
    for key in (p for p in path if isinstance(p, str)):
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos or 0)
        if not m:
            break
        pos = m.start()
    if pos is None:
        return 1, 1
    line = text.count("\n", 0, pos) + 1
    column = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, column


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno, exc.colno) from None
    validator = jsonschema.Draft202012Validator(load_schema())
    err = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if err is not None:
        line, column = _locate(text, list(err.absolute_path))
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}", line, column)
    try:
        return ExperimentConfig.from_dict(raw)
    except SpecSyntaxError as exc:
        line, column = _locate(text, ["nonlinearity"])
        raise ConfigError(f"nonlinearity {exc}", line, column) from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
