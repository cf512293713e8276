"""Ball quadrature, finite-difference operators and residual reports.

Fields are callables mapping Cartesian points of shape (..., 3) to vectors
of shape (..., 3); objects that also expose ``spherical(r, theta, phi)`` are
sampled on quadrature grids through that faster broadcasting path.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import specfun
from .eigenbasis import (CURL, GRADDIV, EigenField, EigenRecord, eval_field,
                         spherical_to_cartesian, to_cartesian)
from .errors import StencilError

DEFAULT_GRID = (48, 48, 64)
DEFAULT_STEP = 0.02
DEFAULT_POINTS = 200
DEFAULT_SEED = 20240601
SMALL_FIELD = 1e-8


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor Gauss-Legendre(r) x Gauss-Legendre(cos theta) x uniform(phi) rule.

    The radial weights include the r**2 Jacobian; no node lies at r = 0 or on
    the polar axis.
    """

    R: float = 1.0
    n_r: int = DEFAULT_GRID[0]
    n_theta: int = DEFAULT_GRID[1]
    n_phi: int = DEFAULT_GRID[2]

    @cached_property
    def _radial(self):
        x, w = np.polynomial.legendre.leggauss(self.n_r)
        r = 0.5 * self.R * (x + 1.0)
        return r, 0.5 * self.R * w * r**2

    @cached_property
    def _polar(self):
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        return np.arccos(x), w

    @cached_property
    def _azimuthal(self):
        phi = 2 * np.pi * np.arange(self.n_phi) / self.n_phi
        return phi, np.full(self.n_phi, 2 * np.pi / self.n_phi)

    @property
    def shape(self):
        return (self.n_r, self.n_theta, self.n_phi)

    def nodes(self):
        """Broadcastable (r, theta, phi) arrays of shapes (Nr,1,1), (1,Nt,1), (1,1,Np)."""
        return (self._radial[0][:, None, None], self._polar[0][None, :, None],
                self._azimuthal[0][None, None, :])

    @cached_property
    def _weights(self):
        return (self._radial[1][:, None, None] * self._polar[1][None, :, None]
                * self._azimuthal[1][None, None, :])

    def weights(self) -> np.ndarray:
        return self._weights

    def cartesian_nodes(self) -> np.ndarray:
        r, t, p = self.nodes()
        return spherical_to_cartesian(r, t, p)

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid(self.R, 2 * self.n_r, 2 * self.n_theta, 2 * self.n_phi)

    def volume(self) -> float:
        return float(self.weights().sum())


def sample(f, grid: QuadratureGrid) -> np.ndarray:
    """Field values on the grid as an array (Nr, Nt, Np, 3) in the Cartesian frame."""
    r, t, p = grid.nodes()
    if hasattr(f, "spherical"):
        v = f.spherical(r, t, p)
        return to_cartesian(v, None, t, p).as_array()
    return np.asarray(f(grid.cartesian_nodes()), dtype=float)


def inner_product(f, g, grid: QuadratureGrid) -> float:
    """Quadrature of ``f . g`` over the ball."""
    if f is g:
        a = sample(f, grid)
        return float(np.sum(grid.weights() * np.sum(a * a, axis=-1)))
    return float(np.sum(grid.weights() * np.sum(sample(f, grid) * sample(g, grid), axis=-1)))


def inner_product_sampled(a: np.ndarray, b: np.ndarray, grid: QuadratureGrid) -> float:
    return float(np.sum(grid.weights() * np.sum(a * b, axis=-1)))


# --------------------------------------------------------------------------
# finite differences

_FIRST = {
    2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    4: (np.array([-2, -1, 1, 2]), np.array([1 / 12, -2 / 3, 2 / 3, -1 / 12])),
    6: (np.array([-3, -2, -1, 1, 2, 3]),
        np.array([-1 / 60, 3 / 20, -3 / 4, 3 / 4, -3 / 20, 1 / 60])),
}
_SECOND = {
    2: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])),
    4: (np.array([-2, -1, 0, 1, 2]), np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])),
    6: (np.array([-3, -2, -1, 0, 1, 2, 3]),
        np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])),
}


def _check_stencil(p: np.ndarray, h: float, order: int, radius: Optional[float]) -> None:
    if order not in _FIRST:
        raise ValueError(f"unsupported stencil order {order}")
    if radius is None:
        return
    reach = h * (order // 2)
    if np.any(np.linalg.norm(p, axis=-1) + reach > radius * (1 + 1e-12)):
        raise StencilError(f"stencil of reach {reach} leaves the ball of radius {radius}")


def _partial(func: Callable, p: np.ndarray, axis: int, h: float, order: int) -> np.ndarray:
    offsets, coeffs = _FIRST[order]
    e = np.zeros(3)
    e[axis] = h
    total = 0.0
    for o, c in zip(offsets, coeffs):
        total = total + c * np.asarray(func(p + o * e))
    return total / h


def fd_jacobian(f: Callable, p, h: float = DEFAULT_STEP, order: int = 2,
                radius: Optional[float] = None) -> np.ndarray:
    """``J[..., i, j] = d f_i / d x_j`` by central differences."""
    p = np.asarray(p, dtype=float)
    _check_stencil(p, h, order, radius)
    cols = [_partial(f, p, j, h, order) for j in range(3)]
    return np.stack(cols, axis=-1)


def fd_curl(f: Callable, p, h: float = DEFAULT_STEP, order: int = 2,
            radius: Optional[float] = None) -> np.ndarray:
    """Central-difference curl (default second order, error O(h**2))."""
    J = fd_jacobian(f, p, h, order, radius)
    return np.stack([J[..., 2, 1] - J[..., 1, 2],
                     J[..., 0, 2] - J[..., 2, 0],
                     J[..., 1, 0] - J[..., 0, 1]], axis=-1)


def fd_div(f: Callable, p, h: float = DEFAULT_STEP, order: int = 2,
           radius: Optional[float] = None):
    p = np.asarray(p, dtype=float)
    _check_stencil(p, h, order, radius)
    return sum(_partial(lambda q, j=j: np.asarray(f(q))[..., j], p, j, h, order) for j in range(3))


def fd_grad(s: Callable, p, h: float = DEFAULT_STEP, order: int = 2,
            radius: Optional[float] = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    _check_stencil(p, h, order, radius)
    return np.stack([_partial(s, p, j, h, order) for j in range(3)], axis=-1)


def fd_laplacian(s: Callable, p, h: float = DEFAULT_STEP, order: int = 2,
                 radius: Optional[float] = None):
    """Scalar (or componentwise vector) Laplacian from 1D second differences."""
    p = np.asarray(p, dtype=float)
    _check_stencil(p, h, order, radius)
    offsets, coeffs = _SECOND[order]
    total = 0.0
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        for o, c in zip(offsets, coeffs):
            total = total + c * np.asarray(s(p + o * e))
    return total / h**2


def fd_graddiv(f: Callable, p, h: float = DEFAULT_STEP, order: int = 2,
               radius: Optional[float] = None) -> np.ndarray:
    """grad(div f) by nested central differences (needs twice the stencil reach)."""
    p = np.asarray(p, dtype=float)
    _check_stencil(p, 2 * h, order, radius)
    return fd_grad(lambda q: fd_div(f, q, h, order), p, h, order)


# --------------------------------------------------------------------------
# reports


@dataclass
class ResidualReport:
    """Relative sup-norm residuals of one eigenpair.

    ``eigen_residual`` is ``max|curl u - lam u| / max|u|`` for curl records
    and ``max|grad div v - mu v| / (|mu| max|v|)`` for graddiv records;
    ``div_residual`` applies to curl, ``rot_residual`` to graddiv (``None``
    where not applicable).
    """

    eigen_residual: float
    div_residual: Optional[float]
    boundary_flux: float
    gram_defect: float
    rot_residual: Optional[float] = None
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _sup_ratio(residual: np.ndarray, reference: np.ndarray) -> float:
    """max|residual| / max|reference| over points where |reference| >= SMALL_FIELD."""
    res = np.linalg.norm(np.atleast_2d(residual), axis=-1) if np.ndim(residual) > 1 else np.abs(residual)
    ref = np.linalg.norm(reference, axis=-1) if np.ndim(reference) > 1 else np.abs(reference)
    keep = ref >= SMALL_FIELD
    if not np.any(keep):
        return 0.0
    return float(np.max(res[keep]) / np.max(ref[keep]))


def interior_points(n_points: int, R: float, margin: float, seed: int) -> np.ndarray:
    """Uniform random points in the ball of radius ``R - margin``."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=(n_points, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = (R - margin) * rng.random(n_points) ** (1 / 3)
    return direction * radius[:, None]


def boundary_points(n_points: int, seed: int):
    rng = np.random.default_rng(seed + 1)
    theta = np.arccos(rng.uniform(-1, 1, n_points))
    phi = rng.uniform(0, 2 * np.pi, n_points)
    return theta, phi


def verify_eigenpair(rec: EigenRecord, n_points: int = DEFAULT_POINTS, h: Optional[float] = None,
                     seed: int = DEFAULT_SEED, order: int = 6,
                     grid: Optional[QuadratureGrid] = None,
                     eigenvalue: Optional[float] = None) -> ResidualReport:
    """Finite-difference check of one eigenpair; never raises on large residuals.

    ``eigenvalue`` overrides the record's value (used for fault injection).
    """
    R = rec.R
    h = DEFAULT_STEP * R if h is None else h
    lam = rec.eigenvalue if eigenvalue is None else eigenvalue
    f = EigenField(rec)
    nested = rec.index.operator == GRADDIV
    reach = h * (order // 2) * (2 if nested else 1)
    pts = interior_points(n_points, R, reach * 1.001, seed)
    u = f(pts)

    theta, phi = boundary_points(n_points, seed)
    flux = float(np.max(np.abs(eval_field(rec, np.full_like(theta, R), theta, phi).u_r)))

    gram = 0.0
    if grid is not None:
        gram = abs(inner_product(f, f, grid) - 1.0)

    if rec.index.operator == CURL:
        curl = fd_curl(f, pts, h, order, R)
        div = fd_div(f, pts, h, order, R)
        eig = _sup_ratio(curl - lam * u, u)
        divres = _sup_ratio(div, u)
        rot = None
    else:
        gd = fd_graddiv(f, pts, h, order, R)
        eig = _sup_ratio(gd - lam * u, abs(lam) * u)
        rot = _sup_ratio(fd_curl(f, pts, h, order, R), u)
        divres = None
    prov = {"index": rec.index.label(), "h": h, "seed": seed, "order": order,
            "n_points": n_points, "eigenvalue": lam,
            "grid": list(grid.shape) if grid is not None else None}
    return ResidualReport(eig, divres, flux, gram, rot, prov)


def gram_matrix(fields, grid: QuadratureGrid) -> np.ndarray:
    samples = [sample(f, grid) for f in fields]
    w = grid.weights()
    n = len(samples)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = float(np.sum(w * np.sum(samples[i] * samples[j], axis=-1)))
    return G


def gram_defect(fields, grid: QuadratureGrid) -> float:
    G = gram_matrix(fields, grid)
    return float(np.max(np.abs(G - np.eye(len(G)))))


def apply_analytic(f, operator: str):
    """Exact action of curl / grad-div on an eigenfield (scaled copy or zero)."""
    if not isinstance(f, EigenField):
        raise TypeError("analytic operator action needs an EigenField")
    rec = f.rec
    if operator == rec.index.operator:
        return f.scaled(rec.eigenvalue)
    return f.scaled(0.0)


def verify_adjointness(u, v, grid: QuadratureGrid, operator: str = CURL) -> float:
    """``|(A u, v) - (u, A v)|`` with A the analytic curl or grad-div."""
    if u is v:
        return 0.0
    return abs(inner_product(apply_analytic(u, operator), v, grid)
               - inner_product(u, apply_analytic(v, operator), grid))


def verify_dirichlet_reduction(rec: EigenRecord, n_points: int = DEFAULT_POINTS,
                               h: Optional[float] = None, seed: int = DEFAULT_SEED,
                               order: int = 4) -> tuple[float, float]:
    """Check ``-Lap v = lam^2 v`` and ``v(R) = 0`` for ``v = x . u``.

    Returns ``(relative interior residual, max |v| on the boundary)``.
    """
    R = rec.R
    h = DEFAULT_STEP * R if h is None else h
    f = EigenField(rec)

    def v(q):
        return np.sum(np.asarray(q) * f(q), axis=-1)

    pts = interior_points(n_points, R, h * (order // 2) * 1.001, seed)
    lap = fd_laplacian(v, pts, h, order, R)
    target = rec.eigenvalue**2 * v(pts)
    res = _sup_ratio(-lap - target, target)
    theta, phi = boundary_points(n_points, seed)
    vb = R * eval_field(rec, np.full_like(theta, R), theta, phi).u_r
    return res, float(np.max(np.abs(vb)))


def verify_compatibility(rec: EigenRecord, n_points: int = 50, seed: int = DEFAULT_SEED,
                         h: float = 1e-5, min_sin: float = 0.1) -> tuple[float, float]:
    """Residuals of the complex first-order system for v = r u_r, w = u_phi + i u_theta:

        (d/dr - i lam)(r w) = r^-1 H v,      K w = lam v - i r^-1 d/dr (r v)

    Derivatives by central differences with step ``h`` in (r, theta, phi).
    Each residual is the sup over points divided by the sup of its
    right-hand side.
    """
    if rec.index.operator != CURL:
        raise ValueError("compatibility system applies to curl eigenfields")
    R, lam = rec.R, rec.eigenvalue
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n_points:
        r = R * (0.05 + 0.9 * rng.random())
        theta = math.acos(rng.uniform(-1, 1))
        if math.sin(theta) < min_sin:
            continue
        pts.append((r, theta, rng.uniform(0, 2 * math.pi)))

    def v(r, t, p):
        return r * float(eval_field(rec, r, t, p).u_r)

    def w(r, t, p):
        s = eval_field(rec, r, t, p)
        return complex(float(s.u_phi), float(s.u_theta))

    res1, ref1, res2, ref2 = [], [], [], []
    for r, t, p in pts:
        d_rw = ((r + h) * w(r + h, t, p) - (r - h) * w(r - h, t, p)) / (2 * h)
        lhs1 = d_rw - 1j * lam * r * w(r, t, p)
        hv = ((v(r, t, p + h) - v(r, t, p - h)) / (2 * h) / math.sin(t)
              + 1j * (v(r, t + h, p) - v(r, t - h, p)) / (2 * h))
        rhs1 = hv / r
        kw = specfun.k_apply(lambda tt, pp: w(r, tt, pp), t, p, h=h)
        d_rv = ((r + h) * v(r + h, t, p) - (r - h) * v(r - h, t, p)) / (2 * h)
        rhs2 = lam * v(r, t, p) - 1j * d_rv / r
        res1.append(abs(lhs1 - rhs1))
        ref1.append(abs(rhs1))
        res2.append(abs(kw - rhs2))
        ref2.append(abs(rhs2))
    return max(res1) / max(ref1), max(res2) / max(ref2)
