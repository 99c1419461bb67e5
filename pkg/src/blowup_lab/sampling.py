"""Deterministic point sets on spheres and extremum search over them."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))
CHUNK = 512


@lru_cache(maxsize=32)
def sphere_directions(dimension: int, count: int) -> np.ndarray:
    """Unit vectors on S^{N-1}: a low-discrepancy set plus the +-axis directions.

    N = 3 uses the Fibonacci lattice; higher dimensions push an unscrambled
    Halton sequence through the normal quantile function and normalize.
    The axes are included because potentials written in terms of ``x1`` and
    ``r`` take their extrema there.
    """
    if dimension == 3:
        k = np.arange(count)
        z = 1.0 - (2.0 * k + 1.0) / count
        rho = np.sqrt(1.0 - z * z)
        theta = k * GOLDEN_ANGLE
        lattice = np.column_stack([z, rho * np.cos(theta), rho * np.sin(theta)])
    else:
        u = qmc.Halton(d=dimension, scramble=False).random(count + 1)[1:]
        g = ndtri(u)
        lattice = g / np.linalg.norm(g, axis=1, keepdims=True)
    axes = np.vstack([np.eye(dimension), -np.eye(dimension)])
    out = np.vstack([axes, lattice])
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def cap_pattern(dimension: int, count: int = 32) -> np.ndarray:
    """Offsets in the unit ball of R^{N-1}: origin, +-axes, then a Halton fill."""
    d = dimension - 1
    fixed = [np.zeros(d)]
    for scale in (0.5, 1.0):
        fixed.extend(scale * np.eye(d))
        fixed.extend(-scale * np.eye(d))
    fixed = np.array(fixed)
    need = max(count - len(fixed), 0)
    pts = 2.0 * qmc.Halton(d=d, scramble=False).random(8 * need + 16)[1:] - 1.0
    pts = pts[np.linalg.norm(pts, axis=1) <= 1.0][:need]
    out = np.vstack([fixed, pts])
    out.setflags(write=False)
    return out


def angular_spacing(dimension: int, count: int) -> float:
    """Typical angular gap of ``count`` roughly uniform points on S^{N-1}."""
    from math import gamma, pi

    area = 2 * pi ** (dimension / 2) / gamma(dimension / 2)
    return (area / count) ** (1.0 / (dimension - 1))


def _tangent_frames(u: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the tangent spaces at unit vectors ``u`` (m, N)."""
    m, n = u.shape
    s = np.where(u[:, 0] >= 0, 1.0, -1.0)
    w = u.copy()
    w[:, 0] += s
    coef = 2.0 / np.einsum("ij,ij->i", w, w)
    # columns 2..N of the Householder reflection that maps e1 to -s*u
    frames = np.broadcast_to(np.eye(n)[1:], (m, n - 1, n)).copy()
    frames -= coef[:, None, None] * w[:, None, 1:].transpose(0, 2, 1) * w[:, None, :]
    return frames


def _cap_directions(centers: np.ndarray, radius: float, pattern: np.ndarray) -> np.ndarray:
    frames = _tangent_frames(centers)
    offsets = np.einsum("kd,mdn->mkn", radius * pattern, frames)
    dirs = centers[:, None, :] + offsets
    return dirs / np.linalg.norm(dirs, axis=2, keepdims=True)


def _values(fn, r, dirs, dimension):
    pts = r[:, None, None] * dirs
    out = fn(pts.reshape(-1, dimension), np.repeat(r, dirs.shape[1]))
    return np.asarray(out, float).reshape(r.size, dirs.shape[1])


def _parabolic_step(center, values, radius, dimension):
    """Vertex of per-axis parabolas through the cap centre and its +-radius points.

    ``values`` are cap values in ``cap_pattern`` order (centre first, then the
    +-0.5 and +-1.0 axis offsets), oriented so that larger is better.
    """
    d = dimension - 1
    f0 = values[:, :1]
    plus, minus = values[:, 1 + 2 * d : 1 + 3 * d], values[:, 1 + 3 * d : 1 + 4 * d]
    with np.errstate(divide="ignore", invalid="ignore"):
        curv = 2 * f0 - plus - minus
        t = np.where(curv > 0, 0.5 * (plus - minus) / curv, 0.0)
    t = np.clip(np.nan_to_num(t), -1.0, 1.0) * radius
    dirs = center + np.einsum("md,mdn->mn", t, _tangent_frames(center))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def sphere_extrema(fn, radii, dimension: int, base_count: int = 512, rounds: int = 3,
                   shrink: float = 4.0):
    """Max and min of ``fn`` over sampled spheres of the given radii.

    ``fn(points, radius)`` receives an ``(m, N)`` array of points together with
    the exact radius of each and returns ``m`` values.  After the base sample,
    each refinement round re-samples a cap around the current maximizer and
    minimizer, the cap shrinking by ``shrink`` per round; each round also
    tries the vertex of per-axis parabolas through the cap's axis points.

    Returns ``(max_history, min_history)``, arrays of shape ``(rounds + 1,
    len(radii))`` holding the extrema after the base sample and each round.
    """
    radii = np.asarray(radii, dtype=float)
    base = sphere_directions(dimension, base_count)
    pattern = cap_pattern(dimension)
    cap0 = 2.0 * angular_spacing(dimension, base_count)
    max_hist = np.empty((rounds + 1, radii.size))
    min_hist = np.empty((rounds + 1, radii.size))
    for start in range(0, radii.size, CHUNK):
        r = radii[start : start + CHUNK]
        m = r.size
        pts = r[:, None, None] * base[None, :, :]
        vals = np.asarray(fn(pts.reshape(-1, dimension), np.repeat(r, base.shape[0])), float)
        vals = vals.reshape(m, base.shape[0])
        imax, imin = vals.argmax(axis=1), vals.argmin(axis=1)
        rows = np.arange(m)
        best_max, best_min = vals[rows, imax], vals[rows, imin]
        dir_max, dir_min = base[imax], base[imin]
        max_hist[0, start : start + m] = best_max
        min_hist[0, start : start + m] = best_min
        radius = cap0
        for k in range(1, rounds + 1):
            for sign in (1.0, -1.0):
                center = dir_max if sign > 0 else dir_min
                best = best_max if sign > 0 else best_min
                dirs = _cap_directions(center, radius, pattern)
                cv = sign * _values(fn, r, dirs, dimension)
                j = cv.argmax(axis=1)
                cand_dir, cand_val = dirs[rows, j], cv[rows, j]
                step = _parabolic_step(center, cv, radius, dimension)
                sv = sign * _values(fn, r, step[:, None, :], dimension)[:, 0]
                use_step = sv > cand_val
                cand_dir = np.where(use_step[:, None], step, cand_dir)
                cand_val = np.where(use_step, sv, cand_val)
                better = cand_val > sign * best
                best = np.where(better, sign * cand_val, best)
                center = np.where(better[:, None], cand_dir, center)
                if sign > 0:
                    best_max, dir_max = best, center
                else:
                    best_min, dir_min = best, center
            max_hist[k, start : start + m] = best_max
            min_hist[k, start : start + m] = best_min
            radius /= shrink
    return max_hist, min_hist
