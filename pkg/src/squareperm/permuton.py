"""Permutons: empirical measures of permutations and their rectangle limit.

A permuton is a probability measure on the unit square with uniform
marginals.  A permutation induces one by spreading mass ``1/n`` uniformly
over each point's cell; square permutations converge to a one-parameter
family ``mu^z`` supported on four segments joining the corners through
``(0, z)``, ``(z, 0)``, ``(1-z, 1)`` and ``(1, 1-z)``.

Rectangle masses are exact for both measures: cell-overlap areas for the
empirical one, segment clipping for the limit.  :func:`grid_cdf` stores
every grid-corner value of the empirical CDF as an integer numerator so
rectangle queries incur no rounding at all, and :func:`box_distance_grid`
maximizes the discrepancy over grid rectangles (a lower bound on the
rectangle-sup distance, short by at most ``4/G``).

>>> mu_z_rect(0.5, (0.0, 0.5, 0.0, 0.5))
0.25
>>> grid_cdf((2, 4, 1, 3), 4).cdf_fraction(2, 2)
Fraction(1, 4)
>>> sample_pattern_mu_z(0.0, 4, 7)
(1, 2, 3, 4)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .core import as_permutation
from .encoding import _as_value_array
from .sampler import ensure_rng

__all__ = [
    "GridCdf",
    "Rect",
    "RectPermuton",
    "box_distance_grid",
    "grid_cdf",
    "lambda_estimate",
    "mu_sigma_rect",
    "mu_z_rect",
    "sample_pattern_mu_z",
    "sample_point_mu_z",
]


class Rect(NamedTuple):
    """Axis-aligned rectangle ``(a, b) x (c, d)`` inside the unit square."""

    a: float
    b: float
    c: float
    d: float


def _as_rect(r: Rect | Sequence[float]) -> Rect:
    rect = Rect(*(float(v) for v in r))
    if not (0.0 <= rect.a <= rect.b <= 1.0 and 0.0 <= rect.c <= rect.d <= 1.0):
        raise ValueError(f"not a rectangle in the unit square: {rect}")
    return rect


def mu_sigma_rect(p: Sequence[int] | np.ndarray, r: Rect | Sequence[float]) -> float:
    """Mass the empirical permuton of ``p`` gives to a rectangle.

    Each point spreads mass uniformly over its ``1/n x 1/n`` cell, so the
    mass is ``n`` times the total cell-overlap area.  Only the columns
    meeting the rectangle are touched.

    >>> mu_sigma_rect((1, 2), (0.0, 0.5, 0.0, 0.5))
    0.5
    """
    arr = _as_value_array(p)
    n = arr.size
    a, b, c, d = _as_rect(r)
    i_lo = max(0, math.floor(a * n))
    i_hi = min(n, math.ceil(b * n))
    if i_lo >= i_hi:
        return 0.0
    cols = np.arange(i_lo, i_hi, dtype=np.float64)
    vals = arr[i_lo:i_hi].astype(np.float64)
    dx = np.minimum(b, (cols + 1) / n) - np.maximum(a, cols / n)
    dy = np.minimum(d, vals / n) - np.maximum(c, (vals - 1) / n)
    np.clip(dx, 0.0, None, out=dx)
    np.clip(dy, 0.0, None, out=dy)
    return float(n * (dx * dy).sum())


def _segments(z: float) -> tuple[tuple[float, float, float, float], ...]:
    # (x_lo, x_hi, intercept, slope) for y = intercept + slope * x
    return (
        (0.0, z, z, -1.0),
        (0.0, 1.0 - z, z, 1.0),
        (z, 1.0, -z, 1.0),
        (1.0 - z, 1.0, 2.0 - z, -1.0),
    )


def mu_z_rect(z: float, r: Rect | Sequence[float]) -> float:
    """Mass the rectangle permuton gives to a rectangle.

    Each of the four segments carries half its x-projection length;
    clipping the segment by the rectangle in x and in y reduces the mass
    to an interval-intersection length.  Segment endpoints are shared but
    individual points carry no mass, so no double counting arises.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError("z must lie in [0, 1]")
    a, b, c, d = _as_rect(r)
    total = 0.0
    for x_lo, x_hi, c0, s in _segments(z):
        if s > 0:
            y_lo, y_hi = c - c0, d - c0
        else:
            y_lo, y_hi = c0 - d, c0 - c
        lo = max(x_lo, a, y_lo)
        hi = min(x_hi, b, y_hi)
        if hi > lo:
            total += (hi - lo) / 2.0
    return total


@dataclass(frozen=True, eq=False)
class GridCdf:
    """Exact empirical-permuton CDF on a uniform grid.

    ``numer[a, b] / denom`` is the mass of ``[0, a/G] x [0, b/G]``; the
    numerators are integers, so inclusion-exclusion rectangle queries are
    exact.
    """

    G: int  # grid resolution
    numer: np.ndarray  # (G+1, G+1) int64 corner numerators
    denom: int  # n * G**2

    @property
    def table(self) -> np.ndarray:
        return self.numer / self.denom

    def cdf_fraction(self, a: int, b: int) -> Fraction:
        return Fraction(int(self.numer[a, b]), self.denom)

    def rect_mass(self, a1: int, a2: int, b1: int, b2: int) -> Fraction:
        """Exact mass of ``(a1/G, a2/G) x (b1/G, b2/G)``."""
        num = (
            self.numer[a2, b2]
            - self.numer[a1, b2]
            - self.numer[a2, b1]
            + self.numer[a1, b1]
        )
        return Fraction(int(num), self.denom)


def grid_cdf(p: Sequence[int] | np.ndarray, G: int) -> GridCdf:
    """Integrate the empirical permuton of ``p`` at every grid corner.

    Runs in O(n + G^2): grid corners classify each cell as fully inside,
    fully outside, or the single partial column (row), so the bulk is a
    dominance count computed by a 2D histogram prefix sum and the two
    partial strips are rank-one corrections.
    """
    arr = _as_value_array(p)
    n = arr.size
    if G < 1:
        raise ValueError("grid resolution must be positive")
    pos = np.arange(1, n + 1, dtype=np.int64)
    vals = arr.astype(np.int64)
    # smallest corner index covering the cell entirely
    a_min = (pos * G + n - 1) // n
    b_min = (vals * G + n - 1) // n
    hist = np.bincount(a_min * (G + 1) + b_min, minlength=(G + 1) ** 2)
    dom = hist.reshape(G + 1, G + 1).cumsum(axis=0).cumsum(axis=1)

    grid = np.arange(G + 1, dtype=np.int64)
    k = grid * n // G  # cells fully covered at each corner
    u_star = grid * n - k * G  # width of the single partial cell, in 1/(nG)

    # column partially cut by the vertical line a/G, and its value
    col_val = vals[np.minimum(k, n - 1)]  # only used where k < n, u_star > 0
    col_thresh = (col_val * G + n - 1) // n
    # row partially cut by the horizontal line b/G, and its position
    inv = np.empty(n, dtype=np.int64)
    inv[vals - 1] = pos
    row_pos = inv[np.minimum(k, n - 1)]
    row_thresh = (row_pos * G + n - 1) // n

    numer = G * G * dom
    numer += (G * u_star)[:, None] * (grid[None, :] >= col_thresh[:, None])
    numer += (G * u_star)[None, :] * (grid[:, None] >= row_thresh[None, :])
    numer += (
        u_star[:, None]
        * u_star[None, :]
        * (k[None, :] == (col_val - 1)[:, None])
    )
    return GridCdf(G=G, numer=numer, denom=n * G * G)


def box_distance_grid(p: Sequence[int] | np.ndarray, z: float, G: int) -> float:
    """Largest mass discrepancy over grid rectangles between ``p`` and ``mu^z``.

    A lower bound for the sup over all rectangles: snapping each side to
    the grid moves either measure by at most ``1/G`` per side (uniform
    marginals), so the true sup exceeds this by less than ``4/G``.
    """
    if G < 2:
        raise ValueError("need at least a 2x2 grid")
    emp = grid_cdf(p, G).table
    lim = np.empty_like(emp)
    for a in range(G + 1):
        for b in range(G + 1):
            lim[a, b] = mu_z_rect(z, (0.0, a / G, 0.0, b / G))
    diff = emp - lim
    best = 0.0
    for a1 in range(G):
        rows = diff[a1 + 1 :] - diff[a1]
        spread = rows.max(axis=1) - rows.min(axis=1)
        best = max(best, float(spread.max()))
    return best


def _sample_points(
    z: float, m: int, gen: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    cum = np.array([z / 2.0, 0.5, 1.0 - z / 2.0, 1.0])
    segs = np.array(_segments(z))
    idx = np.searchsorted(cum, gen.random(m), side="right")
    x_lo, x_hi = segs[idx, 0], segs[idx, 1]
    x = x_lo + gen.random(m) * (x_hi - x_lo)
    y = segs[idx, 2] + segs[idx, 3] * x
    return x, y


def sample_point_mu_z(
    z: float, rng: np.random.Generator | int | None = None
) -> tuple[float, float]:
    """One point of the rectangle permuton: a segment picked by mass, then
    a uniform point along it."""
    if not 0.0 <= z <= 1.0:
        raise ValueError("z must lie in [0, 1]")
    x, y = _sample_points(z, 1, ensure_rng(rng))
    return float(x[0]), float(y[0])


def sample_pattern_mu_z(
    z: float, k: int, rng: np.random.Generator | int | None = None
) -> tuple[int, ...]:
    """Pattern of ``k`` independent points of the rectangle permuton.

    Points are sorted by x and the pattern is the rank order of their
    heights.  Coordinate ties have probability zero; a tied point is
    redrawn outright.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError("z must lie in [0, 1]")
    if k < 1:
        raise ValueError("pattern size must be positive")
    gen = ensure_rng(rng)
    xs, ys = _sample_points(z, k, gen)

    def tied(vals: np.ndarray) -> np.ndarray:
        uniq, counts = np.unique(vals, return_counts=True)
        return np.isin(vals, uniq[counts > 1])

    for _ in range(64):
        bad = tied(xs) | tied(ys)
        if not bad.any():
            break
        xs[bad], ys[bad] = _sample_points(z, int(bad.sum()), gen)
    else:
        raise RuntimeError("could not break coordinate ties")
    order = np.argsort(xs)
    ranks = np.argsort(np.argsort(ys[order])) + 1
    return tuple(int(v) for v in ranks)


def lambda_estimate(
    pi: Sequence[int],
    z: float,
    trials: int,
    rng: np.random.Generator | int | None = None,
) -> tuple[float, float]:
    """Monte Carlo frequency of a pattern among rectangle-permuton samples,
    with its binomial standard error."""
    pi = as_permutation(pi)
    if trials < 1:
        raise ValueError("need at least one trial")
    gen = ensure_rng(rng)
    hits = sum(sample_pattern_mu_z(z, len(pi), gen) == pi for _ in range(trials))
    est = hits / trials
    return est, math.sqrt(est * (1.0 - est) / trials)


@dataclass(frozen=True)
class RectPermuton:
    """The four-segment permuton with corner parameter ``z``."""

    z: float  # corner offset in [0, 1]

    def __post_init__(self) -> None:
        if not 0.0 <= self.z <= 1.0:
            raise ValueError("z must lie in [0, 1]")

    def rect_mass(self, r: Rect | Sequence[float]) -> float:
        return mu_z_rect(self.z, r)

    def sample_point(
        self, rng: np.random.Generator | int | None = None
    ) -> tuple[float, float]:
        return sample_point_mu_z(self.z, rng)

    def sample_pattern(
        self, k: int, rng: np.random.Generator | int | None = None
    ) -> tuple[int, ...]:
        return sample_pattern_mu_z(self.z, k, rng)
