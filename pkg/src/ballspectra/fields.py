"""Named built-in test fields (version 1).

    rigid            (-y, x, 0)              solenoidal, tangential on the sphere
    radial-gradient  (x, y, z) = grad(r^2/2)
    x2-gradient      (2x, 0, 0) = grad(x^2)
    composite        grad(x^2) + (-y, x, 0)
    eigen:<index>    normalised eigenfield, e.g. eigen:curl:1,1,0,+
"""
from __future__ import annotations

import numpy as np

from .eigenbasis import EigenField, MultiIndex, normalized_record
from .errors import IndexRangeError

BUILTIN_FIELDS_VERSION = 1


def rigid(p):
    p = np.asarray(p, dtype=float)
    return np.stack([-p[..., 1], p[..., 0], np.zeros(p.shape[:-1])], axis=-1)


def radial_gradient(p):
    return np.array(p, dtype=float)


def x2_gradient(p):
    p = np.asarray(p, dtype=float)
    zero = np.zeros(p.shape[:-1])
    return np.stack([2 * p[..., 0], zero, zero], axis=-1)


def composite(p):
    return x2_gradient(p) + rigid(p)


BUILTIN = {
    "rigid": rigid,
    "radial-gradient": radial_gradient,
    "x2-gradient": x2_gradient,
    "composite": composite,
}


def resolve(name: str, R: float = 1.0):
    if name in BUILTIN:
        return BUILTIN[name]
    if name.startswith("eigen:"):
        return EigenField(normalized_record(MultiIndex.parse(name[len("eigen:"):]), R))
    raise IndexRangeError(f"unknown field {name!r}; known: {sorted(BUILTIN)} or eigen:<index>")


class SampledField:
    """Piecewise-linear interpolant of scattered samples (nearest outside the hull)."""

    def __init__(self, points: np.ndarray, values: np.ndarray):
        from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator

        self._lin = LinearNDInterpolator(points, values)
        self._near = NearestNDInterpolator(points, values)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, 3)
        out = self._lin(flat)
        bad = np.isnan(out).any(axis=1)
        if bad.any():
            out[bad] = self._near(flat[bad])
        return out.reshape(p.shape)

    @classmethod
    def from_csv(cls, path) -> "SampledField":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 6 or len(data) < 4:
            raise IndexRangeError(f"{path}: expected columns x,y,z,ux,uy,uz with at least 4 rows")
        return cls(data[:, :3], data[:, 3:])
