"""Coefficient-space Helmholtz-Weyl decomposition and the diagonal operators.

A field is represented by its coefficients over the orthonormal grad-div
eigenfields ``q_k`` (potential part, ``a``) and curl eigenfields ``q+-_k``
(vortex part, ``b``) of a fixed truncation. On that space the self-adjoint
extensions of grad-div (``N_d``) and curl (``S``) are diagonal:

    N_d q_k = -nu_k^2 q_k,        S q+-_k = +-lam_k q+-_k

so powers, inverses and resolvents act entrywise.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import ballcalc
from .eigenbasis import (CURL, GRADDIV, BallDomain, EigenField, MultiIndex, SphericalVector,
                         cartesian_to_spherical, enumerate_indices, eval_field, normalized_record,
                         to_cartesian, wavenumber)
from .errors import DomainError, IndexRangeError, ResolutionError, SpectrumCollisionError

SCHEMA_VERSION = 1
ZERO_CUTOFF = 1e-14

# The harmonic subspaces (null spaces of grad-div in the potential class and
# of curl in the solenoidal class) are empty on the ball, so every quotient by
# them is the identity. Kept as an explicit flag for other geometries.
HAS_HARMONIC_SUBSPACES = False


def reduce_harmonic(c: "SpectralCoefficients") -> "SpectralCoefficients":
    """Quotient by the harmonic subspaces; the identity on the ball."""
    return c


@dataclass(frozen=True)
class Truncation:
    n_max: int
    m_max: int

    def __post_init__(self):
        if self.n_max < 1 or self.m_max < 1:
            raise IndexRangeError("truncation needs n_max, m_max >= 1")

    @classmethod
    def parse(cls, text: str) -> "Truncation":
        n, m = (int(x) for x in text.split(","))
        return cls(n, m)


def basis_indices(trunc: Truncation, domain: BallDomain = BallDomain()):
    """(graddiv indices, curl indices) of a truncation, each sorted by |eigenvalue|."""
    return (enumerate_indices(GRADDIV, trunc.n_max, trunc.m_max, domain),
            enumerate_indices(CURL, trunc.n_max, trunc.m_max, domain))


@dataclass(frozen=True)
class SpectralCoefficients:
    a: Mapping[MultiIndex, float]
    b: Mapping[MultiIndex, float]
    truncation: Truncation
    domain: BallDomain = field(default_factory=BallDomain)

    def __post_init__(self):
        ga, cu = (set(x) for x in basis_indices(self.truncation, self.domain))
        for idx in self.a:
            if idx not in ga:
                raise IndexRangeError(f"{idx.label()} is not a graddiv index of {self.truncation}")
        for idx in self.b:
            if idx not in cu:
                raise IndexRangeError(f"{idx.label()} is not a curl index of {self.truncation}")
        object.__setattr__(self, "a", dict(self.a))
        object.__setattr__(self, "b", dict(self.b))

    def with_parts(self, a=None, b=None) -> "SpectralCoefficients":
        return SpectralCoefficients(self.a if a is None else a, self.b if b is None else b,
                                    self.truncation, self.domain)

    def l2_norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.a.values()) + sum(x * x for x in self.b.values()))

    def has_potential_part(self) -> bool:
        return any(x != 0.0 for x in self.a.values())

    def has_vortex_part(self) -> bool:
        return any(x != 0.0 for x in self.b.values())

    # serialisation -------------------------------------------------------

    def to_records(self) -> list[dict]:
        out = []
        ga, cu = basis_indices(self.truncation, self.domain)
        for part, order in ((self.a, ga), (self.b, cu)):
            for idx in order:
                if idx in part:
                    out.append({"operator": idx.operator, "n": idx.n, "m": idx.m, "k": idx.k,
                                "sign": idx.sign_char, "value": part[idx]})
        return out

    def to_json(self) -> str:
        return json.dumps({"schema_version": SCHEMA_VERSION, "radius": self.domain.R,
                           "truncation": [self.truncation.n_max, self.truncation.m_max],
                           "coefficients": self.to_records()}, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["operator", "n", "m", "k", "sign", "value"])
        for rec in self.to_records():
            w.writerow([rec["operator"], rec["n"], rec["m"], rec["k"], rec["sign"],
                        format(rec["value"], ".17g")])
        return buf.getvalue()

    @classmethod
    def from_json(cls, text: str) -> "SpectralCoefficients":
        data = json.loads(text)
        trunc = Truncation(*data["truncation"])
        a, b = {}, {}
        for rec in data["coefficients"]:
            sign = {"+": 1, "-": -1, "": 0}[rec.get("sign", "")]
            idx = MultiIndex(rec["n"], rec["m"], rec["k"], rec["operator"], sign)
            (b if idx.operator == CURL else a)[idx] = float(rec["value"])
        return cls(a, b, trunc, BallDomain(data.get("radius", 1.0)))


def zeros(trunc: Truncation, domain: BallDomain = BallDomain()) -> SpectralCoefficients:
    ga, cu = basis_indices(trunc, domain)
    return SpectralCoefficients({i: 0.0 for i in ga}, {i: 0.0 for i in cu}, trunc, domain)


def basis_vector(idx: MultiIndex, trunc: Truncation, domain: BallDomain = BallDomain(),
                 value: float = 1.0) -> SpectralCoefficients:
    c = zeros(trunc, domain)
    a, b = dict(c.a), dict(c.b)
    (b if idx.operator == CURL else a)[idx] = value
    return c.with_parts(a, b)


# --------------------------------------------------------------------------
# analysis / synthesis


def basis_field(idx: MultiIndex, domain: BallDomain, grid_shape=ballcalc.DEFAULT_GRID) -> EigenField:
    return EigenField(normalized_record(idx, domain.R, tuple(grid_shape)))


def _analyze_on(samples: np.ndarray, trunc: Truncation, grid: ballcalc.QuadratureGrid,
                domain: BallDomain) -> SpectralCoefficients:
    ga, cu = basis_indices(trunc, domain)
    w = grid.weights()

    def coeff(idx):
        q = ballcalc.sample(basis_field(idx, domain, grid.shape), grid)
        value = float(np.sum(w * np.sum(samples * q, axis=-1)))
        return 0.0 if abs(value) < ZERO_CUTOFF else value

    return SpectralCoefficients({i: coeff(i) for i in ga}, {i: coeff(i) for i in cu}, trunc, domain)


def analyze(f, trunc: Truncation, grid: Optional[ballcalc.QuadratureGrid] = None,
            domain: BallDomain = BallDomain(), check_resolution: bool = False,
            tol: float = 1e-6) -> SpectralCoefficients:
    """Project ``f`` on every basis field of the truncation by quadrature.

    With ``check_resolution`` the analysis is repeated on the doubled grid
    and a :class:`ResolutionError` raised if any coefficient moves by more
    than ``tol``.
    """
    grid = grid or ballcalc.QuadratureGrid(domain.R)
    out = _analyze_on(ballcalc.sample(f, grid), trunc, grid, domain)
    if check_resolution:
        fine_grid = grid.refined()
        fine = _analyze_on(ballcalc.sample(f, fine_grid), trunc, fine_grid, domain)
        for part, fpart in ((out.a, fine.a), (out.b, fine.b)):
            for idx, val in part.items():
                if abs(val - fpart[idx]) > tol:
                    raise ResolutionError(f"coefficient {idx.label()} changed by "
                                          f"{abs(val - fpart[idx]):.3g} under refinement")
    return out


class SynthesizedField:
    """Partial sum of the eigenfield expansion, evaluable like any field."""

    def __init__(self, coeffs: SpectralCoefficients, grid_shape=ballcalc.DEFAULT_GRID):
        self.coeffs = coeffs
        self.terms = [(basis_field(i, coeffs.domain, grid_shape).rec, v)
                      for part in (coeffs.a, coeffs.b) for i, v in part.items() if v != 0.0]

    def spherical(self, r, theta, phi) -> SphericalVector:
        shape = np.broadcast(r, theta, phi).shape
        acc = [np.zeros(shape) for _ in range(3)]
        for rec, val in self.terms:
            v = eval_field(rec, r, theta, phi)
            acc[0] = acc[0] + val * v.u_r
            acc[1] = acc[1] + val * v.u_theta
            acc[2] = acc[2] + val * v.u_phi
        return SphericalVector(*acc)

    def __call__(self, points) -> np.ndarray:
        r, theta, phi = cartesian_to_spherical(points)
        return to_cartesian(self.spherical(r, theta, phi), None, theta, phi).as_array()


def synthesize(c: SpectralCoefficients, grid_shape=ballcalc.DEFAULT_GRID) -> SynthesizedField:
    return SynthesizedField(c, grid_shape)


def project_A(c: SpectralCoefficients) -> SpectralCoefficients:
    return c.with_parts(b={i: 0.0 for i in c.b})


def project_V(c: SpectralCoefficients) -> SpectralCoefficients:
    return c.with_parts(a={i: 0.0 for i in c.a})


# --------------------------------------------------------------------------
# operators


def _require_potential(c: SpectralCoefficients, what: str) -> None:
    if c.has_vortex_part():
        raise DomainError(f"{what} acts on the potential subspace; input has a nonzero curl part")


def _require_vortex(c: SpectralCoefficients, what: str) -> None:
    if c.has_potential_part():
        raise DomainError(f"{what} acts on the vortex subspace; input has a nonzero graddiv part")


def _nd_factor(idx: MultiIndex, domain: BallDomain) -> float:
    return -wavenumber(idx, domain) ** 2


def _s_factor(idx: MultiIndex, domain: BallDomain) -> float:
    return idx.sign * wavenumber(idx, domain)


def apply_Nd(c: SpectralCoefficients, p: int = 1) -> SpectralCoefficients:
    """``a_k <- (-nu_k^2)^p a_k``."""
    if p < 1:
        raise ValueError("power must be >= 1")
    _require_potential(c, "N_d")
    return c.with_parts(a={i: _nd_factor(i, c.domain) ** p * v for i, v in c.a.items()})


def apply_Nd_inverse(c: SpectralCoefficients, p: int = 1) -> SpectralCoefficients:
    if p < 1:
        raise ValueError("power must be >= 1")
    _require_potential(c, "N_d^-1")
    return c.with_parts(a={i: v / _nd_factor(i, c.domain) ** p for i, v in c.a.items()})


def apply_S(c: SpectralCoefficients, p: int = 1) -> SpectralCoefficients:
    """``b+-_k <- (+-lam_k)^p b+-_k``."""
    if p < 1:
        raise ValueError("power must be >= 1")
    _require_vortex(c, "S")
    return c.with_parts(b={i: _s_factor(i, c.domain) ** p * v for i, v in c.b.items()})


def apply_S_inverse(c: SpectralCoefficients, p: int = 1) -> SpectralCoefficients:
    if p < 1:
        raise ValueError("power must be >= 1")
    _require_vortex(c, "S^-1")
    return c.with_parts(b={i: v / _s_factor(i, c.domain) ** p for i, v in c.b.items()})


def _near(x: float, y: float, lam: float) -> bool:
    return abs(x - y) <= max(1e-10 * abs(lam), 1e-12)


def resolvent_Nd(c: SpectralCoefficients, lam: float) -> SpectralCoefficients:
    """Solve ``(N_d + lam I) u = c``: ``a_k <- a_k / (-nu_k^2 + lam)``.

    Refused when ``lam`` lies on the spectrum ``{-nu_k^2}`` of N_d (outside
    the range where the resolvent is asserted to exist) and when
    ``lam = nu_k^2``, where ``N_d + lam I`` itself is singular.
    """
    _require_potential(c, "N_d + lam I")
    out = {}
    for idx, v in c.a.items():
        mu = _nd_factor(idx, c.domain)
        if _near(lam, mu, lam):
            raise SpectrumCollisionError(
                f"lam={lam!r} lies on the spectrum of N_d at {idx.label()} (eigenvalue {mu!r})", idx)
        if _near(lam, -mu, lam):
            raise SpectrumCollisionError(
                f"N_d + lam I is singular at {idx.label()}: lam={lam!r} cancels {mu!r}", idx)
        out[idx] = v / (mu + lam)
    return c.with_parts(a=out)


def apply_Nd_plus(c: SpectralCoefficients, lam: float) -> SpectralCoefficients:
    """``(N_d + lam I) c``."""
    _require_potential(c, "N_d + lam I")
    return c.with_parts(a={i: (_nd_factor(i, c.domain) + lam) * v for i, v in c.a.items()})


@dataclass(frozen=True)
class ScaleNorm:
    scale: str
    order: int
    value: float

    def to_json(self) -> str:
        return json.dumps({"schema_version": SCHEMA_VERSION, "scale": self.scale,
                           "order": self.order, "value": self.value})


def scale_norm(c: SpectralCoefficients, scale: str, order: int) -> ScaleNorm:
    """Weighted l2 norms of the two Sobolev-type scales.

    ``A`` scale, order 2k: ``sum nu^(4k) a^2`` (order < 0 is the dual norm M).
    ``W`` scale, order m: ``sum lam^(2m) b^2``.
    """
    if scale == "A":
        total = sum(wavenumber(i, c.domain) ** (2 * order) * v * v for i, v in c.a.items())
    elif scale == "W":
        total = sum(wavenumber(i, c.domain) ** (2 * order) * v * v for i, v in c.b.items())
    else:
        raise ValueError(f"unknown scale {scale!r}")
    return ScaleNorm(scale, order, math.sqrt(total))


@dataclass(frozen=True)
class PowerSolution:
    """Solution of a power equation with its dual norm and coefficient residual."""

    solution: SpectralCoefficients
    dual_norm: ScaleNorm
    residual: float


def _max_diff(x: SpectralCoefficients, y: SpectralCoefficients) -> float:
    diffs = [abs(x.a[i] - y.a[i]) for i in x.a] + [abs(x.b[i] - y.b[i]) for i in x.b]
    return max(diffs, default=0.0)


def solve_graddiv_power(v: SpectralCoefficients, k: int) -> PowerSolution:
    """``(grad div)^(2k) u = v`` on the truncated space: ``u = N_d^(-2k) v``.

    Reports ``M_2k(v)`` (A-scale norm of order -2k); on a finite truncation
    it is always finite, so comparing it across truncations is the only
    solvability diagnostic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    u = reduce_harmonic(apply_Nd_inverse(v, 2 * k))
    res = _max_diff(apply_Nd(u, 2 * k), v)
    return PowerSolution(u, scale_norm(v, "A", -2 * k), res)


def solve_curl_power(v: SpectralCoefficients, m: int) -> PowerSolution:
    """``curl^(2m) u = v``: ``u = S^(-2m) v``, dual norm of order -m on the W scale."""
    if m < 1:
        raise ValueError("m must be >= 1")
    u = reduce_harmonic(apply_S_inverse(v, 2 * m))
    res = _max_diff(apply_S(u, 2 * m), v)
    return PowerSolution(u, scale_norm(v, "W", -m), res)


def embedding_constant(trunc: Truncation, k: int, domain: BallDomain = BallDomain()) -> float:
    """``c_k^2 = max_j (1 + nu_j^(-2k))`` over the truncated graddiv spectrum."""
    ga, _ = basis_indices(trunc, domain)
    return max(1.0 + wavenumber(i, domain) ** (-2 * k) for i in ga)
