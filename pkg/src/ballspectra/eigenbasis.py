"""Eigenvalues and eigenfields of curl and grad-div on a ball of radius R.

Curl eigenfields (n >= 1, sign +/-):

    u_r         = c (lam r)^-1 psi_n(lam r) Y
    u_phi + i u_theta = c (lam r)^-1 Phi_n(lam r) H Y,     lam = sign * rho_{n,m} / R

Grad-div eigenfields v = grad g, g = c psi_n(nu r) Y, nu = alpha_{n,m} / R.

``Y`` is the real orthonormal harmonic of degree n and order k (cosine for
k > 0, sine for k < 0), so all stored basis fields are real. Every evaluator
broadcasts over arrays of (r, theta, phi).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from . import specfun
from .errors import IndexRangeError, OperatorKindError, ResolutionError

CURL = "curl"
GRADDIV = "graddiv"
OPERATORS = (CURL, GRADDIV)


@dataclass(frozen=True, order=False)
class MultiIndex:
    n: int
    m: int
    k: int
    operator: str = CURL
    sign: int = 1

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise IndexRangeError(f"unknown operator {self.operator!r}")
        if self.m < 1 or abs(self.k) > self.n:
            raise IndexRangeError(f"inadmissible index {self}")
        if self.operator == CURL:
            if self.n < 1:
                raise IndexRangeError("curl indices require n >= 1 (kappa=(0,m,0) is nulled)")
            if self.sign not in (1, -1):
                raise IndexRangeError("curl sign must be +1 or -1")
        else:
            if self.n < 0:
                raise IndexRangeError("graddiv indices require n >= 0")
            if self.sign != 0:
                object.__setattr__(self, "sign", 0)

    @property
    def sign_char(self) -> str:
        return {1: "+", -1: "-", 0: ""}[self.sign]

    def label(self) -> str:
        base = f"{self.operator}({self.n},{self.m},{self.k})"
        return base + self.sign_char

    def sort_key(self):
        # '+' before '-' for equal (n, m, k)
        return (self.n, self.m, self.k, -self.sign)

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        """Parse ``curl:1,1,0,+`` or ``graddiv:0,1,0``."""
        try:
            op, rest = text.split(":", 1)
            parts = [p.strip() for p in rest.split(",")]
            n, m, k = (int(p) for p in parts[:3])
            sign = 0
            if op == CURL:
                sign = -1 if len(parts) > 3 and parts[3] in ("-", "-1") else 1
            return cls(n, m, k, op, sign)
        except (ValueError, TypeError) as exc:
            raise IndexRangeError(f"cannot parse index {text!r}") from exc


@dataclass(frozen=True)
class BallDomain:
    R: float = 1.0

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class SphericalPoint:
    r: float
    theta: float
    phi: float


@dataclass
class SphericalVector:
    """Vector components in the spherical (r, theta, phi) or Cartesian frame.

    For ``frame == "cartesian"`` the three slots hold (x, y, z) components.
    """

    u_r: np.ndarray
    u_theta: np.ndarray
    u_phi: np.ndarray
    frame: str = "spherical"

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.u_r, self.u_theta, self.u_phi), axis=-1)

    def norm(self):
        return np.sqrt(self.u_r**2 + self.u_theta**2 + self.u_phi**2)


@dataclass(frozen=True)
class EigenRecord:
    index: MultiIndex
    eigenvalue: float
    c: float = 1.0
    R: float = 1.0

    @property
    def wavenumber(self) -> float:
        """|lam| for curl, nu for graddiv (both 1/length)."""
        if self.index.operator == CURL:
            return abs(self.eigenvalue)
        return math.sqrt(-self.eigenvalue)


# --------------------------------------------------------------------------
# spectra


def curl_eigenvalue(idx: MultiIndex, domain: BallDomain = BallDomain()) -> float:
    if idx.operator != CURL:
        raise OperatorKindError(f"{idx.label()} is not a curl index")
    return idx.sign * specfun.bessel_zero(idx.n, idx.m) / domain.R


def graddiv_eigenvalue(idx: MultiIndex, domain: BallDomain = BallDomain()) -> float:
    if idx.operator != GRADDIV:
        raise OperatorKindError(f"{idx.label()} is not a graddiv index")
    return -(specfun.bessel_prime_zero(idx.n, idx.m) / domain.R) ** 2


def eigenvalue(idx: MultiIndex, domain: BallDomain = BallDomain()) -> float:
    return curl_eigenvalue(idx, domain) if idx.operator == CURL else graddiv_eigenvalue(idx, domain)


def wavenumber(idx: MultiIndex, domain: BallDomain = BallDomain()) -> float:
    if idx.operator == CURL:
        return specfun.bessel_zero(idx.n, idx.m) / domain.R
    return specfun.bessel_prime_zero(idx.n, idx.m) / domain.R


def enumerate_indices(operator: str, n_max: int, m_max: int,
                      domain: BallDomain = BallDomain()) -> list[MultiIndex]:
    """All admissible indices up to (n_max, m_max), sorted by |eigenvalue|.

    Ties are broken by (n, m, k, sign) with '+' first. Both curl signs are
    always emitted.
    """
    if n_max < 0 or m_max < 1:
        raise IndexRangeError("need n_max >= 0 and m_max >= 1")
    out = []
    if operator == CURL:
        for n in range(1, n_max + 1):
            for m in range(1, m_max + 1):
                for k in range(-n, n + 1):
                    out.extend(MultiIndex(n, m, k, CURL, s) for s in (1, -1))
    elif operator == GRADDIV:
        for n in range(0, n_max + 1):
            for m in range(1, m_max + 1):
                out.extend(MultiIndex(n, m, k, GRADDIV) for k in range(-n, n + 1))
    else:
        raise IndexRangeError(f"unknown operator {operator!r}")
    return sorted(out, key=lambda i: (abs(eigenvalue(i, domain)),) + i.sort_key())


def make_record(idx: MultiIndex, domain: BallDomain = BallDomain(), c: float = 1.0) -> EigenRecord:
    return EigenRecord(idx, eigenvalue(idx, domain), c, domain.R)


# --------------------------------------------------------------------------
# pointwise fields


def _coords(p, theta=None, phi=None):
    if isinstance(p, SphericalPoint):
        return p.r, p.theta, p.phi
    return p, theta, phi


def eval_curl_field(rec: EigenRecord, r, theta=None, phi=None) -> SphericalVector:
    """Curl eigenfield at spherical points; accepts a SphericalPoint or arrays."""
    idx = rec.index
    if idx.operator != CURL:
        raise OperatorKindError(f"{idx.label()} is not a curl index")
    r, theta, phi = _coords(r, theta, phi)
    n = idx.n
    z = rec.eigenvalue * np.asarray(r, dtype=float)
    y, dy_theta, dy_phi_s = specfun.real_harmonic(n, idx.k, theta, phi)
    p_over_z, p, dp = specfun.psi_triplet(n, z)
    radial = rec.c * p_over_z
    # c Phi_n(z) / z = c (psi/z + psi' + i psi) / (n(n+1))
    g = rec.c * (p_over_z + dp + 1j * p) / (n * (n + 1))
    w = g * (dy_phi_s + 1j * dy_theta)
    return SphericalVector(radial * y, np.imag(w), np.real(w))


def eval_graddiv_field(rec: EigenRecord, r, theta=None, phi=None) -> SphericalVector:
    """Grad-div eigenfield ``grad(c psi_n(nu r) Y)`` at spherical points."""
    idx = rec.index
    if idx.operator != GRADDIV:
        raise OperatorKindError(f"{idx.label()} is not a graddiv index")
    r, theta, phi = _coords(r, theta, phi)
    n = idx.n
    nu = math.sqrt(-rec.eigenvalue)
    z = nu * np.asarray(r, dtype=float)
    y, dy_theta, dy_phi_s = specfun.real_harmonic(n, idx.k, theta, phi)
    if n == 0:
        v_r = rec.c * nu * specfun.psi_prime(0, z) * y
        zero = np.zeros(np.shape(v_r))
        return SphericalVector(v_r, zero, zero.copy())
    p_over_z, _, dp = specfun.psi_triplet(n, z)
    v_r = rec.c * nu * dp * y
    tang = rec.c * nu * p_over_z
    return SphericalVector(v_r, tang * dy_theta, tang * dy_phi_s)


def eval_graddiv_potential(rec: EigenRecord, r, theta=None, phi=None):
    """Scalar potential ``g = c psi_n(nu r) Y`` of a grad-div eigenfield."""
    r, theta, phi = _coords(r, theta, phi)
    nu = math.sqrt(-rec.eigenvalue)
    y, _, _ = specfun.real_harmonic(rec.index.n, rec.index.k, theta, phi)
    return rec.c * specfun.psi(rec.index.n, nu * np.asarray(r, dtype=float)) * y


def eval_field(rec: EigenRecord, r, theta=None, phi=None) -> SphericalVector:
    if rec.index.operator == CURL:
        return eval_curl_field(rec, r, theta, phi)
    return eval_graddiv_field(rec, r, theta, phi)


def eval_axisym_110(p, rho: float, theta=None, phi=None) -> SphericalVector:
    """Closed-form axisymmetric field u+_(1,1,0) with x = r rho:

    u_r = 2 (sin x - x cos x) / x^3 cos(theta)
    u_theta = ((sin x - x cos x) / x^3 - sin x / x) sin(theta)
    u_phi = (sin x - x cos x) / x^2 sin(theta)

    This is an exact eigenfield (scaling u_r by rho would break that) and
    equals twice ``eval_curl_field`` at (1,1,0,+) with unit c and the
    unnormalised ``Y = cos(theta)``.
    """
    r, theta, _ = _coords(p, theta, phi)
    x = rho * np.asarray(r, dtype=float)
    j0, j1, _ = specfun.psi_orders(2, x)
    j1_over_x = specfun.psi_over_z(1, x)
    ct, st = np.cos(theta), np.sin(theta)
    return SphericalVector(2 * j1_over_x * ct, (j1_over_x - j0) * st, j1 * st)


# --------------------------------------------------------------------------
# frames


def to_cartesian(v: SphericalVector, p=None, theta=None, phi=None) -> SphericalVector:
    """Rotate spherical-frame components into the Cartesian frame.

    At the poles the frame for the supplied phi is used (phi = 0 when points
    come from :func:`cartesian_to_spherical`).
    """
    if v.frame != "spherical":
        raise ValueError("vector is not in the spherical frame")
    if isinstance(p, SphericalPoint):
        theta, phi = p.theta, p.phi
    elif p is not None and theta is None:
        theta, phi = p
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    ux = v.u_r * st * cp + v.u_theta * ct * cp - v.u_phi * sp
    uy = v.u_r * st * sp + v.u_theta * ct * sp + v.u_phi * cp
    uz = v.u_r * ct - v.u_theta * st
    return SphericalVector(ux, uy, uz, frame="cartesian")


def to_spherical(v: SphericalVector, theta, phi) -> SphericalVector:
    if v.frame != "cartesian":
        raise ValueError("vector is not in the cartesian frame")
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    x, y, z = v.u_r, v.u_theta, v.u_phi
    return SphericalVector(x * st * cp + y * st * sp + z * ct,
                           x * ct * cp + y * ct * sp - z * st,
                           -x * sp + y * cp)


def cartesian_to_spherical(points):
    points = np.asarray(points, dtype=float)
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    rho = np.hypot(x, y)
    r = np.hypot(rho, z)
    theta = np.arctan2(rho, z)
    phi = np.mod(np.arctan2(y, x), 2 * np.pi)
    return r, theta, phi


def spherical_to_cartesian(r, theta, phi):
    st = np.sin(theta)
    return np.stack(np.broadcast_arrays(r * st * np.cos(phi), r * st * np.sin(phi),
                                        r * np.cos(theta)), axis=-1)


class EigenField:
    """Callable view of an eigenfield: Cartesian points (..., 3) -> vectors (..., 3).

    ``spherical(r, theta, phi)`` gives the broadcasting spherical-frame path
    that quadrature grids use.
    """

    def __init__(self, rec: EigenRecord):
        self.rec = rec

    @property
    def index(self) -> MultiIndex:
        return self.rec.index

    def spherical(self, r, theta, phi) -> SphericalVector:
        return eval_field(self.rec, r, theta, phi)

    def __call__(self, points) -> np.ndarray:
        r, theta, phi = cartesian_to_spherical(points)
        return to_cartesian(self.spherical(r, theta, phi), None, theta, phi).as_array()

    def scaled(self, factor: float) -> "EigenField":
        return EigenField(replace(self.rec, c=self.rec.c * factor))


# --------------------------------------------------------------------------
# normalisation


def field_norm_squared(rec: EigenRecord, grid) -> float:
    v = eval_field(rec, *grid.nodes())
    return float(np.sum(grid.weights() * (v.u_r**2 + v.u_theta**2 + v.u_phi**2)))


def normalize(rec: EigenRecord, grid, check_refinement: bool = False,
              rtol: float = 1e-8) -> EigenRecord:
    """Return ``rec`` with c > 0 chosen so that the grid L2 norm is one.

    With ``check_refinement`` the constant is recomputed on the doubled grid
    and a :class:`ResolutionError` is raised if it moves by more than ``rtol``.
    """
    unit = replace(rec, c=1.0)
    c = 1.0 / math.sqrt(field_norm_squared(unit, grid))
    if check_refinement:
        c_fine = 1.0 / math.sqrt(field_norm_squared(unit, grid.refined()))
        if abs(c_fine - c) > rtol * c:
            raise ResolutionError(
                f"normalisation of {rec.index.label()} unstable under refinement: "
                f"{c!r} vs {c_fine!r}")
    return replace(rec, c=c)


@functools.lru_cache(maxsize=4096)
def normalized_record(idx: MultiIndex, R: float = 1.0, grid_shape=(48, 48, 64)) -> EigenRecord:
    """Cached normalised record for an index on the given default grid."""
    from .ballcalc import QuadratureGrid

    domain = BallDomain(R)
    return normalize(make_record(idx, domain), QuadratureGrid(R, *grid_shape))


def first_basis_fields(count: int = 20, domain: BallDomain = BallDomain(),
                       n_max: int = 3, m_max: int = 3) -> list[MultiIndex]:
    """First ``count`` mixed curl/graddiv indices ordered by wavenumber."""
    pool = enumerate_indices(CURL, n_max, m_max, domain) + enumerate_indices(GRADDIV, n_max, m_max, domain)
    pool.sort(key=lambda i: (wavenumber(i, domain), i.operator) + i.sort_key())
    return pool[:count]
