"""Scalar special functions on the ball.

Spherical Bessel functions ``psi_n`` (``psi_n(z) = sqrt(pi/2z) J_{n+1/2}(z)``),
their derivatives and positive zeros, complex and real spherical harmonics
with the angular operators ``H`` and ``K``, and the radial line integral
``Phi_n`` that carries the tangential part of the curl eigenfields.

All evaluators broadcast over numpy arrays in the angle/argument inputs;
orders are plain integers.
"""
from __future__ import annotations

import math
import threading
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import IndexRangeError, OrderRangeError, PoleEvaluationError

N_MAX = 40
M_MAX = 200

# Miller backward recurrence starts this many orders above max(n, |z|).
_MILLER_PAD = 40
_RESCALE = 1e150


def _check_order(n: int, lo: int = 0) -> None:
    if not isinstance(n, (int, np.integer)) or n < lo or n > N_MAX + 1:
        raise OrderRangeError(f"order n={n} outside supported range [{lo}, {N_MAX}]")


def _double_factorial_odd(n: int) -> float:
    """(2n+1)!!"""
    out = 1.0
    for j in range(3, 2 * n + 2, 2):
        out *= j
    return out


def small_argument_threshold(n: int) -> float:
    """Below this |z| the 4-term power series is used for psi_n."""
    return 1e-2 * (2 * n + 1)


def _psi_series_reduced(n: int, a: np.ndarray) -> np.ndarray:
    """psi_n(a) / a**n from the first four terms of the power series."""
    t = 0.5 * a * a
    term = np.ones_like(a)
    total = np.ones_like(a)
    denom = 2 * n + 1
    for k in range(1, 4):
        denom += 2
        term = -term * t / (k * denom)
        total = total + term
    return total / _double_factorial_odd(n)


def _upward_orders(n: int, a: np.ndarray) -> list:
    j0 = np.sin(a) / a
    out = [j0]
    if n == 0:
        return out
    out.append((j0 - np.cos(a)) / a)
    for l in range(1, n):
        out.append((2 * l + 1) / a * out[l] - out[l - 1])
    return out


def _miller_orders(n: int, a: np.ndarray) -> list:
    start = int(max(n, float(np.max(a)))) + _MILLER_PAD
    f_next = np.zeros_like(a)
    f = np.full_like(a, 1e-300)
    kept: list = [None] * (n + 1)
    for l in range(start, 0, -1):
        f_prev = (2 * l + 1) / a * f - f_next
        f_next, f = f, f_prev
        big = np.abs(f) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            f, f_next = f * scale, f_next * scale
            kept = [None if v is None else v * scale for v in kept]
        if l - 1 <= n:
            kept[l - 1] = f.copy()
    f_0 = kept[0]
    f_1 = kept[1] if n >= 1 else f_next
    j0 = np.sin(a) / a
    j1 = (j0 - np.cos(a)) / a
    use_j0 = np.abs(j0) >= np.abs(j1)
    norm = np.where(use_j0, j0 / np.where(use_j0, f_0, 1.0), j1 / np.where(use_j0, 1.0, f_1))
    return [v * norm for v in kept]


def psi_orders(n_hi: int, z) -> list:
    """``[psi_0(z), ..., psi_{n_hi}(z)]`` as arrays from one recurrence pass.

    Per element: the 4-term power series where ``|z| < 0.01 (2l+1)``, upward
    recurrence where ``|z| >= n_hi`` and Miller's backward recurrence
    otherwise.
    """
    _check_order(n_hi)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    a = np.abs(z_arr)
    out = [np.empty_like(a) for _ in range(n_hi + 1)]
    up = a >= max(n_hi, small_argument_threshold(n_hi))
    if up.all():
        out = _upward_orders(n_hi, a)
    else:
        if up.any():
            for l, v in enumerate(_upward_orders(n_hi, a[up])):
                out[l][up] = v
        down = ~up & (a >= small_argument_threshold(0))
        if down.any():
            for l, v in enumerate(_miller_orders(n_hi, a[down])):
                out[l][down] = v
        for l in range(n_hi + 1):
            small = ~up & (a < small_argument_threshold(l))
            if small.any():
                out[l][small] = _psi_series_reduced(l, a[small]) * a[small] ** l
    neg = z_arr < 0
    if neg.any():
        for l in range(1, n_hi + 1, 2):
            out[l] = np.where(neg, -out[l], out[l])
    if np.ndim(z) == 0:
        return [float(v[0]) for v in out]
    return [v.reshape(np.shape(z)) for v in out]


def psi(n: int, z):
    """Spherical Bessel function of the first kind, ``psi_n(z) = j_n(z)``."""
    return psi_orders(n, z)[n]


def psi_triplet(n: int, z):
    """``(psi_n(z)/z, psi_n(z), psi_n'(z))`` for n >= 1, regular at z = 0.

    Uses ``psi_{n-1} + psi_{n+1} = (2n+1) psi_n / z`` and
    ``(2n+1) psi_n' = n psi_{n-1} - (n+1) psi_{n+1}``.
    """
    _check_order(n, lo=1)
    lo, mid, hi = psi_orders(n + 1, z)[n - 1:]
    return (lo + hi) / (2 * n + 1), mid, (n * lo - (n + 1) * hi) / (2 * n + 1)


def psi_over_z(n: int, z):
    """``psi_n(z) / z`` with the removable singularity at 0 handled (n >= 1)."""
    return psi_triplet(n, z)[0]


def psi_prime(n: int, z):
    """Derivative ``d psi_n / dz``.

    ``psi_0' = -psi_1``; for n >= 1 the regular combination
    ``(n psi_{n-1} - (n+1) psi_{n+1}) / (2n+1)`` avoids dividing by z.
    """
    if n == 0:
        return -psi(1, z) if np.ndim(z) == 0 else -np.asarray(psi(1, z))
    return psi_triplet(n, z)[2]


def psi_second(n: int, z):
    """Second derivative from the spherical Bessel equation (z != 0)."""
    z = np.asarray(z, dtype=float)
    p, dp = psi(n, z), psi_prime(n, z)
    return -2.0 / z * dp - (1.0 - n * (n + 1) / z**2) * p


# --------------------------------------------------------------------------
# zeros


def mcmahon_guess(n: int, m: int, kind: str = "rho") -> float:
    """Leading McMahon estimate for the m-th positive zero of psi_n or psi_n'."""
    nu = n + 0.5
    if kind == "rho":
        beta = (m + nu / 2 - 0.25) * math.pi
        mu = 4 * nu * nu
        return beta - (mu - 1) / (8 * beta)
    beta = (m + nu / 2 - 0.75) * math.pi
    return beta


class ZeroTable:
    """Lazily filled, cached table of positive zeros of psi_n (``rho``) or
    psi_n' (``alpha``).

    Zeros are bracketed by sign scans with step pi/8 starting at pi/16,
    refined by bisection down to a bracket of width ``2*tolerance`` and then
    polished by one Newton step that must stay inside the bracket. Builds are
    guarded by a lock so concurrent fills are idempotent.
    """

    SCAN_STEP = math.pi / 8

    def __init__(self, kind: str, tolerance: float = 1e-13):
        if kind not in ("rho", "alpha"):
            raise ValueError(f"unknown zero kind {kind!r}")
        self.kind = kind
        self.tolerance = tolerance
        self._entries: dict[int, list[float]] = {}
        self._lock = threading.Lock()

    def _target(self, n: int):
        if self.kind == "rho":
            return lambda z: psi(n, z), lambda z: psi_prime(n, z)
        return lambda z: psi_prime(n, z), lambda z: psi_second(n, z)

    def _scan(self, n: int, count: int) -> list[float]:
        f, df = self._target(n)
        roots: list[float] = []
        lo = self.SCAN_STEP / 2
        upper = mcmahon_guess(n, count, self.kind) + 2 * math.pi
        while len(roots) < count:
            grid = np.arange(lo, upper + self.SCAN_STEP, self.SCAN_STEP)
            vals = np.asarray(f(grid))
            for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
                roots.append(self._refine(f, df, grid[i], grid[i + 1]))
                if len(roots) == count:
                    break
            lo = grid[-1]
            upper = lo + 8 * math.pi
        return roots

    def _refine(self, f, df, a: float, b: float) -> float:
        fa = f(a)
        while b - a > 2 * self.tolerance:
            mid = 0.5 * (a + b)
            fm = f(mid)
            if fm == 0.0:
                return mid
            if np.sign(fm) == np.sign(fa):
                a, fa = mid, fm
            else:
                b = mid
            if mid in (a, b) and b - a <= 4 * np.spacing(b):
                break
        x = 0.5 * (a + b)
        d = df(x)
        if d != 0.0:
            polished = x - f(x) / d
            if a <= polished <= b:
                x = polished
        return float(x)

    def get(self, n: int, m: int) -> float:
        if not (0 <= n <= N_MAX) or not (1 <= m <= M_MAX):
            raise IndexRangeError(f"zero ({n}, {m}) beyond table capacity n<={N_MAX}, m<={M_MAX}")
        row = self._entries.get(n)
        if row is None or len(row) < m:
            with self._lock:
                row = self._entries.get(n)
                if row is None or len(row) < m:
                    row = self._scan(n, max(m, 8))
                    self._entries[n] = row
        return row[m - 1]

    def zeros(self, n: int, count: int) -> list[float]:
        self.get(n, count)
        return list(self._entries[n][:count])

    def entries(self) -> dict[tuple[int, int], float]:
        return {(n, i + 1): z for n, row in sorted(self._entries.items()) for i, z in enumerate(row)}

    def check_interlacing(self, n_max: int, m_max: int) -> bool:
        """rho_{n,m} < rho_{n+1,m} < rho_{n,m+1} over the requested block."""
        for n in range(n_max):
            a = self.zeros(n, m_max + 1)
            b = self.zeros(n + 1, m_max)
            for m in range(m_max):
                if not a[m] < b[m] < a[m + 1]:
                    return False
        return True


RHO = ZeroTable("rho")
ALPHA = ZeroTable("alpha")


def bessel_zero(n: int, m: int) -> float:
    """m-th positive zero of psi_n."""
    return RHO.get(n, m)


def bessel_prime_zero(n: int, m: int) -> float:
    """m-th strictly positive zero of psi_n' (z = 0 is never counted)."""
    return ALPHA.get(n, m)


# --------------------------------------------------------------------------
# spherical harmonics


def _legendre(lmax: int, theta):
    """Fully normalised associated Legendre values (Condon-Shortley phase).

    Returns ``(P, Q)`` where ``P[l][m]`` is the orthonormal factor of
    ``Y_l^m = P[l][m] e^{i m phi}`` and ``Q[l][m] = P[l][m] / sin(theta)``
    for m >= 1, computed by the same recurrence from a regular start value.
    """
    theta = np.asarray(theta, dtype=float)
    x, s = np.cos(theta), np.sin(theta)
    P = [[None] * (lmax + 2) for _ in range(lmax + 2)]
    Q = [[None] * (lmax + 2) for _ in range(lmax + 2)]
    diag = np.full_like(x, 1.0 / math.sqrt(4 * math.pi))
    diag_q = None
    for m in range(lmax + 1):
        if m > 0:
            fac = -math.sqrt((2 * m + 1) / (2 * m))
            diag_q = fac * diag
            diag = diag_q * s
        for target, start in ((P, diag), (Q, diag_q)):
            if start is None:
                continue
            target[m][m] = start
            if m + 1 <= lmax:
                target[m + 1][m] = math.sqrt(2 * m + 3) * x * start
            for l in range(m + 2, lmax + 1):
                a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
                b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
                target[l][m] = a * (x * target[l - 1][m] - b * target[l - 2][m])
    return P, Q


def _check_harmonic_index(n: int, k: int) -> None:
    if n < 0 or abs(k) > n:
        raise IndexRangeError(f"|k|={abs(k)} exceeds degree n={n}")


def _dtheta(P, n: int, m: int):
    """d/dtheta of P[n][m] (m >= 0) via the ladder identity."""
    up = math.sqrt((n - m) * (n + m + 1)) * P[n][m + 1] if m + 1 <= n else 0.0
    if m == 0:
        return up
    down = math.sqrt((n + m) * (n - m + 1)) * P[n][m - 1]
    return 0.5 * (up - down)


def sph_harmonic(n: int, k: int, theta, phi):
    """Orthonormal complex spherical harmonic ``Y_n^k`` (e^{ik phi} dependence)."""
    _check_harmonic_index(n, k)
    P, _ = _legendre(n, theta)
    val = P[n][abs(k)] * np.exp(1j * k * np.asarray(phi, dtype=float))
    if k < 0 and k % 2:
        val = -val
    return val


def h_apply(n: int, k: int, theta, phi):
    """``H Y_n^k = (ik / sin theta) Y_n^k + i dY_n^k/dtheta``, regular at the poles."""
    _check_harmonic_index(n, k)
    P, Q = _legendre(n, theta)
    m = abs(k)
    radial = 1j * _dtheta(P, n, m)
    if m:
        radial = radial + 1j * k * Q[n][m]
    val = radial * np.exp(1j * k * np.asarray(phi, dtype=float))
    if k < 0 and k % 2:
        val = -val
    return val


def real_harmonic(n: int, k: int, theta, phi):
    """Real orthonormal harmonic and its regular tangential derivatives.

    k > 0 selects the cosine member, k < 0 the sine member. Returns
    ``(Y, dY/dtheta, (1/sin theta) dY/dphi)``.
    """
    _check_harmonic_index(n, k)
    P, Q = _legendre(n, theta)
    m = abs(k)
    phi = np.asarray(phi, dtype=float)
    if m == 0:
        y, dy, _ = np.broadcast_arrays(P[n][0], _dtheta(P, n, 0), phi)
        return y, dy, np.zeros(y.shape)
    scale = math.sqrt(2.0) * (-1) ** m
    cos_, sin_ = np.cos(m * phi), np.sin(m * phi)
    if k > 0:
        out = (P[n][m] * cos_, _dtheta(P, n, m) * cos_, -m * Q[n][m] * sin_)
    else:
        out = (P[n][m] * sin_, _dtheta(P, n, m) * sin_, m * Q[n][m] * cos_)
    return tuple(scale * np.asarray(a) for a in np.broadcast_arrays(*out))


def k_apply(w: Callable, theta: float, phi: float,
            dtheta: Optional[Callable] = None, dphi: Optional[Callable] = None,
            h: float = 1e-5) -> complex:
    """``K w = (1/sin theta)(d/dtheta (sin theta w) + i dw/dphi)``.

    ``w`` is a callable of ``(theta, phi)``. Closed-form partials may be
    supplied; otherwise second-order central differences with step ``h``.
    """
    s = math.sin(theta)
    if abs(s) < 1e-12:
        raise PoleEvaluationError("K cannot be evaluated at theta in {0, pi}")
    wt = dtheta(theta, phi) if dtheta else (w(theta + h, phi) - w(theta - h, phi)) / (2 * h)
    wp = dphi(theta, phi) if dphi else (w(theta, phi + h) - w(theta, phi - h)) / (2 * h)
    return math.cos(theta) / s * w(theta, phi) + wt + 1j * wp / s


# --------------------------------------------------------------------------
# Phi_n


def _phi_series_left(n: int, s_end: float, terms: int = 40) -> complex:
    """``int_0^{s_end} e^{-is} psi_n(s) / s ds`` termwise, |s_end| <= 1."""
    # psi_n(s)/s = sum_j b_j s^{n-1+2j}
    b = []
    coef = 1.0 / _double_factorial_odd(n)
    for j in range(terms):
        b.append(coef)
        coef = -coef / (2 * (j + 1) * (2 * n + 2 * j + 3))
    total = 0j
    for j, bj in enumerate(b):
        if bj == 0.0:
            break
        e_term = 1.0 + 0j
        for q in range(terms):
            p = n + 2 * j + q
            total += bj * e_term * s_end**p / p
            e_term *= -1j / (q + 1)
            if abs(e_term) < 1e-30:
                break
    return total


def phi_integral(n: int, lam: float, r: float, epsabs: float = 1e-13) -> complex:
    """``Phi_n(lam r) = int_0^r exp(i lam (r - t)) psi_n(lam t) / t dt``.

    [0, r] is split at ``t = min(r, 1/|lam|)``; the left piece is integrated
    from the power series, the right piece by adaptive Gauss-Kronrod.
    """
    if n < 1:
        raise OrderRangeError("Phi_n requires n >= 1 (kappa=(0,m,0) is excluded for curl)")
    _check_order(n)
    if lam == 0:
        raise ValueError("lam must be nonzero")
    if r <= 0:
        return 0j
    t_split = min(r, 1.0 / abs(lam))
    left = _phi_series_left(n, lam * t_split)
    right = 0j
    if t_split < r:
        def re(t):
            return math.cos(-lam * t) * psi(n, lam * t) / t

        def im(t):
            return math.sin(-lam * t) * psi(n, lam * t) / t

        kw = dict(epsabs=epsabs, epsrel=1e-13, limit=400)
        right = integrate.quad(re, t_split, r, **kw)[0] + 1j * integrate.quad(im, t_split, r, **kw)[0]
    return complex(np.exp(1j * lam * r) * (left + right))


def phi_closed(n: int, z):
    """Closed form ``Phi_n(z) = ((z psi_n)' + i z psi_n) / (n(n+1))``.

    Obtained by solving ``Phi' - i Phi = psi_n(z)/z`` with ``Phi(0) = 0``;
    it agrees with :func:`phi_integral` and is the fast path for fields.
    """
    _check_order(n, lo=1)
    z = np.asarray(z, dtype=float)
    zpsi = z * psi(n, z)
    dzpsi = psi(n, z) + z * psi_prime(n, z)
    return (dzpsi + 1j * zpsi) / (n * (n + 1))
