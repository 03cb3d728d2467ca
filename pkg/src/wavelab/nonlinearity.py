"""Derivative nonlinearities ``N(u) = sum_{|alpha|=k} c_alpha (du)^alpha``.

A multi-index ``alpha = (a0, a1, ..., an)`` counts powers of
``(d_t u, d_1 u, ..., d_n u)``.  Also here: the admissibility arithmetic
(scaling index and which existence regime an ``(n, k, s)`` triple falls in)
and the rotation-invariance classifier.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import kernels
from .spectral import (
    FieldState,
    SpectralField,
    derivative_fields,
    padded_samples,
    padded_size,
    samples_to_padded_coefficients,
    truncate_coefficients,
)

RADIAL_SEED = 20240611
RADIAL_RTOL = 1e-9


@dataclass(frozen=True)
class NonlinearTerm:
    alpha: tuple[int, ...]
    coeff: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        if any(a < 0 for a in self.alpha):
            raise ValueError(f"negative exponent in {self.alpha}")


@dataclass(frozen=True)
class NonlinearSpec:
    """Homogeneous polynomial of degree ``k`` in the ``n+1`` first derivatives."""

    k: int
    n: int
    terms: tuple[NonlinearTerm, ...] = field(default=())

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"degree k must be >= 2, got {self.k}")
        if self.n < 1:
            raise ValueError(f"dimension n must be >= 1, got {self.n}")
        merged: dict[tuple[int, ...], float] = {}
        for term in self.terms:
            if len(term.alpha) != self.n + 1:
                raise ValueError(f"multi-index {term.alpha} should have length {self.n + 1}")
            if sum(term.alpha) != self.k:
                raise ValueError(f"multi-index {term.alpha} has degree {sum(term.alpha)}, expected {self.k}")
            merged[term.alpha] = merged.get(term.alpha, 0.0) + float(term.coeff)
        terms = tuple(NonlinearTerm(a, c) for a, c in sorted(merged.items(), reverse=True) if c != 0.0)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_dict(cls, k: int, n: int, coeffs: dict) -> "NonlinearSpec":
        return cls(k, n, tuple(NonlinearTerm(a, c) for a, c in coeffs.items()))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {t.alpha: t.coeff for t in self.terms}

    def scaled(self, factor: float) -> "NonlinearSpec":
        return NonlinearSpec(self.k, self.n, tuple(NonlinearTerm(t.alpha, t.coeff * factor) for t in self.terms))

    def polynomial(self, a, b) -> float:
        """Evaluate ``P(a, b)`` with ``a`` the time slot and ``b`` the spatial vector."""
        vals = [a, *b]
        return sum(t.coeff * math.prod(v**p for v, p in zip(vals, t.alpha)) for t in self.terms)

    def to_text(self) -> str:
        lines = [f"k = {self.k}", f"n = {self.n}"]
        for t in self.terms:
            lines.append(f"alpha = ({', '.join(map(str, t.alpha))}), coeff = {t.coeff!r}")
        return "\n".join(lines) + "\n"


_LINE_KV = re.compile(r"^\s*(k|n)\s*=\s*([+-]?\d+)\s*$")
_LINE_TERM = re.compile(r"^\s*alpha\s*=\s*\(([^)]*)\)\s*,\s*coeff\s*=\s*(\S+)\s*$")


class SpecSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_spec(text: str) -> NonlinearSpec:
    """Parse the line-oriented nonlinearity grammar.

    ::

        k = 3
        n = 3
        alpha = (3, 0, 0, 0), coeff = 1.0

    Blank lines and ``#`` comments are ignored.
    """
    k = n = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _LINE_KV.match(line):
            if m.group(1) == "k":
                k = int(m.group(2))
            else:
                n = int(m.group(2))
            continue
        if m := _LINE_TERM.match(line):
            try:
                alpha = tuple(int(x) for x in m.group(1).split(",") if x.strip())
                coeff = float(m.group(2))
            except ValueError as exc:
                raise SpecSyntaxError(str(exc), lineno) from None
            terms.append(NonlinearTerm(alpha, coeff))
            continue
        raise SpecSyntaxError(f"cannot parse {raw!r}", lineno)
    if k is None or n is None:
        raise SpecSyntaxError("both 'k = ...' and 'n = ...' are required", 0)
    return NonlinearSpec(k, n, tuple(terms))


# --------------------------------------------------------------------------
# admissibility


def scaling_index(n: int, k: int) -> float:
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return (n + 2) / 2 - 1 / (k - 1)


@dataclass(frozen=True)
class AdmissibilityVerdict:
    s_c: float
    case: str  # strict | weak | almost_global_3_3 | radial_global | inadmissible
    q: int
    accepted: bool

    @property
    def requirement(self) -> str:
        return {
            "strict": "s > s_c",
            "weak": "s >= s_c",
            "almost_global_3_3": "s > 2",
            "radial_global": "s >= s_c",
        }.get(self.case, "none")

    def describe(self) -> str:
        status = "accepted" if self.accepted else "rejected"
        return f"case={self.case} s_c={self.s_c!r} q={self.q} requires {self.requirement}: {status}"


_S_TOL = 1e-12


def _max_frac(a: Fraction | None, b: Fraction) -> Fraction | None:
    # None stands for +infinity (n = 1)
    return None if a is None else max(a, b)


def regularity_gate(n: int, k: int, s: float, radial: bool = False) -> AdmissibilityVerdict:
    """Classify ``(n, k, s)`` against the small-data existence theorems."""
    s_c = scaling_index(n, k)
    q = k - 1
    threshold = _max_frac(Fraction(4, n - 1) if n > 1 else None, Fraction(2))
    radial_threshold = _max_frac(Fraction(n + 1, n - 1) if n > 1 else None, Fraction(2))

    if radial and n >= 2 and k > radial_threshold:
        return AdmissibilityVerdict(s_c, "radial_global", q, s >= s_c - _S_TOL)
    if (n, k) == (3, 3):
        return AdmissibilityVerdict(s_c, "almost_global_3_3", q, s > 2 + _S_TOL)
    if threshold is not None and q > threshold:
        return AdmissibilityVerdict(s_c, "weak", q, s >= s_c - _S_TOL)
    if threshold is not None and q == threshold and n != 3:
        return AdmissibilityVerdict(s_c, "strict", q, s > s_c + _S_TOL)
    return AdmissibilityVerdict(s_c, "inadmissible", q, False)


def strichartz_admissible(n: int, q: float, s: float, radial: bool = False) -> bool:
    """Whether the linear ``L^q L^inf`` estimate is available for ``(n, q, s)``.

    The ``(q, n) = (2, 3)`` endpoint is admitted for ``s > 2`` (with the
    logarithmic loss in time).
    """
    if not (2 <= q < math.inf):
        return False
    need = (n + 2) / 2 - 1 / q
    if radial and n >= 2:
        return q > 2 / (n - 1) and s >= need - _S_TOL
    if (q, n) == (2, 3):
        return s > 2 + _S_TOL
    if n == 1:
        return False
    threshold = max(4 / (n - 1), 2)
    if q > threshold + _S_TOL:
        return s >= need - _S_TOL
    if abs(q - threshold) <= _S_TOL:
        return s > need + _S_TOL
    return False


# --------------------------------------------------------------------------
# evaluation


def dealias_size(points_per_axis: int, k: int) -> int:
    return padded_size(points_per_axis, (k + 1) / 2)


def _alpha_matrix(spec: NonlinearSpec) -> tuple[np.ndarray, np.ndarray]:
    alphas = np.array([t.alpha for t in spec.terms], dtype=np.int_).reshape(-1, spec.n + 1)
    coeffs = np.array([t.coeff for t in spec.terms], dtype=np.float64)
    return alphas, coeffs


def eval_N_with_sup(state: FieldState, spec: NonlinearSpec) -> tuple[SpectralField, float]:
    """Dealiased ``N(u)`` plus the max of ``|du|`` seen on the padded grid."""
    grid = state.grid
    if spec.n != grid.n:
        raise ValueError(f"nonlinearity is for n={spec.n}, state has n={grid.n}")
    m = dealias_size(grid.points_per_axis, spec.k)
    fields = derivative_fields(state)
    values = np.stack([padded_samples(f, m).ravel() for f in fields])
    sup = float(np.max(np.abs(values)))
    if spec.is_zero:
        return SpectralField.zeros(grid), sup
    alphas, coeffs = _alpha_matrix(spec)
    product_values = kernels.poly_eval(values, alphas, coeffs).reshape((m,) * grid.n)
    coeffs_padded = samples_to_padded_coefficients(product_values, grid)
    return SpectralField(grid, truncate_coefficients(coeffs_padded, grid.points_per_axis)), sup


def eval_N(state: FieldState, spec: NonlinearSpec) -> SpectralField:
    """``N(u)`` as a spectral field, products formed on a zero-padded grid."""
    return eval_N_with_sup(state, spec)[0]


# --------------------------------------------------------------------------
# rotation invariance


@dataclass(frozen=True)
class RotationWitness:
    """An orthogonal ``R`` and point ``(a, b)`` with ``P(a, R b) != P(a, b)``."""

    rotation: np.ndarray
    a: float
    b: np.ndarray
    before: float
    after: float

    def describe(self) -> str:
        rows = "; ".join(" ".join(f"{x:+.6g}" for x in row) for row in self.rotation)
        return (
            f"R=[{rows}] a={self.a:+.6g} b=({', '.join(f'{x:+.6g}' for x in self.b)}) "
            f"P(a,b)={self.before:+.6g} P(a,Rb)={self.after:+.6g}"
        )


def _multinomial(m: int, parts: tuple[int, ...]) -> int:
    out = math.factorial(m)
    for p in parts:
        out //= math.factorial(p)
    return out


def symbolic_radial(spec: NonlinearSpec, rtol: float = 1e-12) -> bool:
    """Exact test: ``P`` is a polynomial in ``a`` and ``|b|^2``.

    Each ``a^j`` slice is a homogeneous form of degree ``d = k - j`` in ``b``;
    it must equal ``c |b|^d`` with ``d`` even, i.e. ``c`` times the multinomial
    expansion of ``(b_1^2 + ... + b_n^2)^(d/2)``.
    """
    n = spec.n
    slices: dict[int, dict[tuple[int, ...], float]] = {}
    for t in spec.terms:
        slices.setdefault(t.alpha[0], {})[t.alpha[1:]] = t.coeff
    for j, form in slices.items():
        d = spec.k - j
        if d % 2:
            return False
        half = d // 2
        lead = form.get((d,) + (0,) * (n - 1), 0.0)
        scale = max(abs(c) for c in form.values())
        expected = {}
        for parts in product(range(half + 1), repeat=n):
            if sum(parts) == half:
                expected[tuple(2 * p for p in parts)] = lead * _multinomial(half, parts)
        for key in set(form) | set(expected):
            if abs(form.get(key, 0.0) - expected.get(key, 0.0)) > rtol * scale:
                return False
    return True


def _random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))


def _quarter_turns(n: int) -> list[np.ndarray]:
    mats = []
    if n == 1:
        return [np.array([[-1.0]])]
    for i in range(n):
        for j in range(i + 1, n):
            r = np.eye(n)
            r[i, i] = r[j, j] = 0.0
            r[i, j], r[j, i] = -1.0, 1.0
            mats.append(r)
    return mats


def sampling_witness(
    spec: NonlinearSpec,
    n_vectors: int = 64,
    n_rotations: int = 64,
    seed: int = RADIAL_SEED,
    rtol: float = RADIAL_RTOL,
) -> RotationWitness | None:
    """Randomized falsification of rotation invariance.

    Tries the coordinate quarter-turns first (these give clean witnesses such
    as ``d_1 -> d_2``), then ``n_rotations`` Haar-random orthogonal matrices
    against ``n_vectors`` random points.
    """
    if spec.is_zero:
        return None
    n = spec.n
    rng = np.random.default_rng(seed)
    avals = rng.standard_normal(n_vectors)
    bvals = rng.standard_normal((n_vectors, n))
    rotations = _quarter_turns(n) + [_random_orthogonal(rng, n) for _ in range(n_rotations)]
    scale = sum(abs(t.coeff) for t in spec.terms)
    for rot in rotations:
        for a, b in zip(avals, bvals):
            before = spec.polynomial(a, b)
            after = spec.polynomial(a, rot @ b)
            size = scale * (abs(a) + np.linalg.norm(b)) ** spec.k
            if abs(after - before) > rtol * size:
                return RotationWitness(rot, float(a), b.copy(), float(before), float(after))
    return None


def radial_witness(spec: NonlinearSpec) -> RotationWitness | None:
    """``None`` when the equation is rotation invariant, else a counterexample."""
    if symbolic_radial(spec):
        return None
    witness = sampling_witness(spec)
    if witness is None:
        # symbolic rejection without a sampled counterexample: search harder
        witness = sampling_witness(spec, n_vectors=256, n_rotations=256, seed=RADIAL_SEED + 1, rtol=1e-13)
    return witness


def is_radial(spec: NonlinearSpec) -> bool:
    """Invariance of the equation under every rotation (reflections for n = 1)."""
    return radial_witness(spec) is None
