"""Field-line tracing with classic RK4 on the unit-speed direction field."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .eigenbasis import (CURL, EigenField, MultiIndex, cartesian_to_spherical, eval_field,
                         normalized_record)

STOP_LEFT_BALL = "left_ball"
STOP_MAX_STEPS = "max_steps"
STOP_STAGNATION = "stagnation"


@dataclass
class TraceConfig:
    seeds: Sequence[Sequence[float]]
    step: float = 1e-3
    max_steps: int = 10_000
    R: float = 1.0
    index: MultiIndex = field(default_factory=lambda: MultiIndex(1, 1, 0, CURL, 1))
    min_speed: float = 1e-10

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("trace step must be positive")
        for s in self.seeds:
            if np.linalg.norm(s) >= self.R:
                raise ValueError(f"seed {tuple(s)} is not inside the open ball of radius {self.R}")


@dataclass
class Trace:
    points: np.ndarray
    arclength: np.ndarray
    stop_reason: str
    flux: Optional[np.ndarray] = None

    def flux_drift(self) -> float:
        """max |Psi(s) - Psi(0)| / |Psi(0)| along the trace."""
        if self.flux is None or self.flux[0] == 0.0:
            return 0.0
        return float(np.max(np.abs(self.flux - self.flux[0])) / abs(self.flux[0]))


def flux_function(rec, points) -> np.ndarray:
    """Psi = r sin(theta) u_phi / lam; constant on field lines of axisymmetric Beltrami fields."""
    r, theta, phi = cartesian_to_spherical(points)
    u = eval_field(rec, r, theta, phi)
    return r * np.sin(theta) * u.u_phi / rec.eigenvalue


def trace_fieldline(f, seed, step: float, max_steps: int, R: float,
                    min_speed: float = 1e-10) -> Trace:
    """Integrate dx/ds = u(x)/|u(x)| from ``seed`` with RK4.

    Stops before leaving the closed ball, after ``max_steps`` or where
    ``|u| < min_speed``.
    """
    x = np.asarray(seed, dtype=float)
    pts = [x.copy()]
    reason = STOP_MAX_STEPS

    def direction(p):
        u = f(p)
        speed = np.linalg.norm(u)
        if speed < min_speed:
            raise _Stagnation
        return u / speed

    for _ in range(max_steps):
        try:
            k1 = direction(x)
            k2 = direction(x + 0.5 * step * k1)
            k3 = direction(x + 0.5 * step * k2)
            k4 = direction(x + step * k3)
        except _Stagnation:
            reason = STOP_STAGNATION
            break
        nxt = x + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.linalg.norm(nxt) > R:
            reason = STOP_LEFT_BALL
            break
        x = nxt
        pts.append(x.copy())
    pts_arr = np.array(pts)
    return Trace(pts_arr, step * np.arange(len(pts_arr)), reason)


class _Stagnation(Exception):
    pass


def run_traces(cfg: TraceConfig, grid_shape=(48, 48, 64)) -> list[Trace]:
    rec = normalized_record(cfg.index, cfg.R, tuple(grid_shape))
    f = EigenField(rec)
    out = []
    for seed in cfg.seeds:
        tr = trace_fieldline(f, seed, cfg.step, cfg.max_steps, cfg.R, cfg.min_speed)
        if cfg.index.operator == CURL and cfg.index.k == 0:
            tr.flux = flux_function(rec, tr.points)
        out.append(tr)
    return out
