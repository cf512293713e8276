"""Verification suites behind ``ballspectra verify``.

Each suite returns a list of :class:`Check` entries; a suite passes when
every value is at or below its threshold.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import ballcalc, spectral
from .eigenbasis import (CURL, GRADDIV, BallDomain, EigenField, MultiIndex, enumerate_indices,
                         first_basis_fields, normalized_record)

SCHEMA_VERSION = 1

EIGEN_TOL = 1e-3
BOUNDARY_TOL = 1e-8
GRAM_TOL = 1e-6
DIRICHLET_TOL = 1e-3
DIRICHLET_BOUNDARY_TOL = 1e-10
COMPAT_TOL = 1e-6
ADJOINT_TOL = 1e-6
ALGEBRA_TOL = 1e-12
PARSEVAL_TOL = 1e-5


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.value <= self.threshold)


@dataclass
class VerifyConfig:
    R: float = 1.0
    curl_n_max: int = 3
    curl_m_max: int = 3
    graddiv_n_max: int = 2
    graddiv_m_max: int = 2
    h: Optional[float] = None
    n_points: int = ballcalc.DEFAULT_POINTS
    seed: int = ballcalc.DEFAULT_SEED
    order: int = 6
    grid: tuple = ballcalc.DEFAULT_GRID
    lambda_scale: float = 1.0  # fault injection: multiplies the eigenvalue under test

    @property
    def step(self) -> float:
        return ballcalc.DEFAULT_STEP * self.R if self.h is None else self.h


def eigen_suite(cfg: VerifyConfig) -> list[Check]:
    domain = BallDomain(cfg.R)
    checks = []
    indices = (enumerate_indices(CURL, cfg.curl_n_max, cfg.curl_m_max, domain)
               + enumerate_indices(GRADDIV, cfg.graddiv_n_max, cfg.graddiv_m_max, domain))
    for idx in indices:
        rec = normalized_record(idx, cfg.R, tuple(cfg.grid))
        rep = ballcalc.verify_eigenpair(rec, cfg.n_points, cfg.step, cfg.seed, cfg.order,
                                        eigenvalue=rec.eigenvalue * cfg.lambda_scale)
        name = idx.label()
        checks.append(Check(f"eigen_residual {name}", rep.eigen_residual, EIGEN_TOL))
        if rep.div_residual is not None:
            checks.append(Check(f"div_residual {name}", rep.div_residual, EIGEN_TOL))
        if rep.rot_residual is not None:
            checks.append(Check(f"rot_residual {name}", rep.rot_residual, EIGEN_TOL))
        checks.append(Check(f"boundary_flux {name}", rep.boundary_flux, BOUNDARY_TOL))
    return checks


def multiplicity_defect(operator: str, n_max: int, m_max: int, domain: BallDomain) -> int:
    counts: dict = {}
    for idx in enumerate_indices(operator, n_max, m_max, domain):
        counts[(idx.n, idx.m, idx.sign)] = counts.get((idx.n, idx.m, idx.sign), 0) + 1
    return sum(abs(c - (2 * n + 1)) for (n, _, _), c in counts.items())


def basis_suite(cfg: VerifyConfig) -> list[Check]:
    domain = BallDomain(cfg.R)
    grid = ballcalc.QuadratureGrid(cfg.R, *cfg.grid)
    fields = [EigenField(normalized_record(i, cfg.R, tuple(cfg.grid)))
              for i in first_basis_fields(20, domain)]
    checks = [Check("gram_defect first20", ballcalc.gram_defect(fields, grid), GRAM_TOL)]
    for op in (CURL, GRADDIV):
        checks.append(Check(f"multiplicity {op}",
                            multiplicity_defect(op, cfg.curl_n_max, cfg.curl_m_max, domain), 0))
    for idx in enumerate_indices(CURL, 2, 2, domain):
        rec = normalized_record(idx, cfg.R, tuple(cfg.grid))
        res, vb = ballcalc.verify_dirichlet_reduction(rec, cfg.n_points, cfg.step, cfg.seed)
        checks.append(Check(f"dirichlet {idx.label()}", res, DIRICHLET_TOL))
        checks.append(Check(f"dirichlet_boundary {idx.label()}", vb, DIRICHLET_BOUNDARY_TOL))
    for n, m, k in ((1, 1, 0), (2, 1, 1)):
        for sign in (1, -1):
            idx = MultiIndex(n, m, k, CURL, sign)
            rec = normalized_record(idx, cfg.R, tuple(cfg.grid))
            r1, r2 = ballcalc.verify_compatibility(rec, 50, cfg.seed)
            checks.append(Check(f"compat_radial {idx.label()}", r1, COMPAT_TOL))
            checks.append(Check(f"compat_angular {idx.label()}", r2, COMPAT_TOL))
    return checks


def random_coefficients(trunc, domain, rng, potential=True, vortex=True):
    c = spectral.zeros(trunc, domain)
    a = {i: float(rng.normal()) if potential else 0.0 for i in c.a}
    b = {i: float(rng.normal()) if vortex else 0.0 for i in c.b}
    return c.with_parts(a, b)


def _max_diff(x, y) -> float:
    return max([abs(x.a[i] - y.a[i]) for i in x.a] + [abs(x.b[i] - y.b[i]) for i in x.b])


def operators_suite(cfg: VerifyConfig) -> list[Check]:
    domain = BallDomain(cfg.R)
    grid = ballcalc.QuadratureGrid(cfg.R, *cfg.grid)
    rng = np.random.default_rng(cfg.seed)
    checks = []

    pairs = [(MultiIndex(1, 1, 0), MultiIndex(2, 1, 1)),
             (MultiIndex(1, 1, 0), MultiIndex(1, 1, 0, CURL, -1)),
             (MultiIndex(1, 1, 0), MultiIndex(1, 1, 0, GRADDIV)),
             (MultiIndex(0, 1, 0, GRADDIV), MultiIndex(1, 2, 1, GRADDIV))]
    for i, j in pairs:
        u = EigenField(normalized_record(i, cfg.R, tuple(cfg.grid)))
        v = EigenField(normalized_record(j, cfg.R, tuple(cfg.grid)))
        for op in (CURL, GRADDIV):
            checks.append(Check(f"adjoint {op} {i.label()} {j.label()}",
                                ballcalc.verify_adjointness(u, v, grid, op), ADJOINT_TOL))

    trunc = spectral.Truncation(4, 4)
    pot = random_coefficients(trunc, domain, rng, vortex=False)
    vor = random_coefficients(trunc, domain, rng, potential=False)
    for p in (1, 2):
        checks.append(Check(f"roundtrip Nd p={p}",
                            _max_diff(spectral.apply_Nd(spectral.apply_Nd_inverse(pot, p), p), pot),
                            ALGEBRA_TOL))
        checks.append(Check(f"roundtrip S p={p}",
                            _max_diff(spectral.apply_S(spectral.apply_S_inverse(vor, p), p), vor),
                            ALGEBRA_TOL))
    for k in (1, 2):
        sol = spectral.solve_graddiv_power(pot, k)
        checks.append(Check(f"solve_graddiv k={k}", sol.residual, ALGEBRA_TOL))
        norm_u = spectral.scale_norm(sol.solution, "A", 2 * k).value
        checks.append(Check(f"dual_norm_identity k={k}",
                            abs(norm_u - sol.dual_norm.value) / sol.dual_norm.value, ALGEBRA_TOL))
        checks.append(Check(f"solve_curl m={k}", spectral.solve_curl_power(vor, k).residual,
                            ALGEBRA_TOL))
    for lam in (1.0, -10.0):
        back = spectral.apply_Nd_plus(spectral.resolvent_Nd(pot, lam), lam)
        checks.append(Check(f"resolvent lam={lam:g}", _max_diff(back, pot), ALGEBRA_TOL))

    mixed = random_coefficients(trunc, domain, rng)
    synth = ballcalc.sample(spectral.synthesize(mixed, cfg.grid), grid)
    energy = ballcalc.inner_product_sampled(synth, synth, grid)
    checks.append(Check("parseval (4,4)", abs(energy - mixed.l2_norm() ** 2) / mixed.l2_norm() ** 2,
                        PARSEVAL_TOL))
    return checks


SUITES = {"eigen": eigen_suite, "basis": basis_suite, "operators": operators_suite}


def run(suite: str, cfg: VerifyConfig) -> dict:
    names = list(SUITES) if suite == "all" else [suite]
    checks = [c for name in names for c in SUITES[name](cfg)]
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": suite,
        "seed": cfg.seed,
        "config": {"radius": cfg.R, "h": cfg.step, "n_points": cfg.n_points, "order": cfg.order,
                   "grid": list(cfg.grid), "lambda_scale": cfg.lambda_scale,
                   "curl_trunc": [cfg.curl_n_max, cfg.curl_m_max],
                   "graddiv_trunc": [cfg.graddiv_n_max, cfg.graddiv_m_max]},
        "checks": [asdict(c) for c in checks],
        "passed": all(c.passed for c in checks),
    }
