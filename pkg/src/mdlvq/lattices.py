"""Lattice geometry for the supported quantizer families: Z^1, Z^2 and the
hexagonal lattice A2.

All distances use the dimension-normalized squared norm (mean of squared
components), so every distortion in the package is a per-dimension quantity.
Integer lattice coordinates are the source of truth; embeddings are derived by
multiplying coordinates with the generator matrix.  Membership and tie
decisions that must be exact are made on a doubled Gram form, which has
integer entries for all three families (the A2 form is 2*(c1^2+c1*c2+c2^2),
clearing the sqrt(3) from the embedding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT3 = math.sqrt(3.0)

#: Normalized second moments of the supported Voronoi cells.
G_INTERVAL = 1.0 / 12.0
G_SQUARE = 1.0 / 12.0
G_HEXAGON = 5.0 / (36.0 * SQRT3)


@dataclass(frozen=True, eq=False)
class Lattice:
    """One of the supported base lattices.

    Attributes:
        name: "Z1", "Z2" or "A2".
        dim: embedding dimension (1 or 2).
        basis: generator matrix, one generator per row.
        cell_volume: |det basis|.
        second_moment: dimensionless normalized second moment of the cell.
        gram2: 2 * basis @ basis.T, exact integer entries.
    """

    name: str
    dim: int
    basis: np.ndarray
    cell_volume: float
    second_moment: float
    gram2: np.ndarray

    def embed(self, coords) -> np.ndarray:
        """Map integer coordinates (..., dim) to points in R^dim."""
        return np.asarray(coords, dtype=float) @ self.basis

    def point(self, coords) -> "LatticePoint":
        coords = tuple(int(c) for c in np.atleast_1d(coords))
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(coords)}")
        return LatticePoint(coords, self.embed(coords))


@dataclass(frozen=True)
class LatticePoint:
    """A lattice point: integer coordinates plus the derived embedding.

    Equality and hashing use the integer coordinates only.
    """

    coords: tuple
    embedding: np.ndarray = field(compare=False, repr=False)


_CACHE: dict[str, Lattice] = {}


def lattice(name: str) -> Lattice:
    """Return the named lattice ("Z1", "Z2" or "A2"); instances are cached."""
    if name in _CACHE:
        return _CACHE[name]
    if name == "Z1":
        lat = Lattice("Z1", 1, np.eye(1), 1.0, G_INTERVAL,
                      np.array([[2]], dtype=np.int64))
    elif name == "Z2":
        lat = Lattice("Z2", 2, np.eye(2), 1.0, G_SQUARE,
                      np.array([[2, 0], [0, 2]], dtype=np.int64))
    elif name == "A2":
        basis = np.array([[1.0, 0.0], [0.5, SQRT3 / 2.0]])
        lat = Lattice("A2", 2, basis, SQRT3 / 2.0, G_HEXAGON,
                      np.array([[2, 1], [1, 2]], dtype=np.int64))
    else:
        raise ValueError(f"unsupported lattice {name!r}; expected Z1, Z2 or A2")
    _CACHE[name] = lat
    return lat


def dnorm2(x) -> float:
    """Dimension-normalized squared norm: (1/L) * sum of squared components."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("dnorm2 expects a nonempty 1-D vector")
    return float(v @ v) / v.size


def dnorm2_rows(x) -> np.ndarray:
    """dnorm2 applied along the last axis of an array."""
    v = np.asarray(x, dtype=float)
    return np.mean(v * v, axis=-1)


def round_half_away(x) -> np.ndarray:
    """Round to nearest integer, halves away from zero (deterministic ties)."""
    x = np.asarray(x, dtype=float)
    return np.floor(np.abs(x) + 0.5) * np.sign(x)


def _a2_nearest_coords(x: np.ndarray) -> np.ndarray:
    # A2 as two rectangular cosets: points (a, b*sqrt3) and the same shifted
    # by (1/2, sqrt3/2).  Componentwise rounding is exact per coset; ties
    # across cosets prefer the lexicographically smaller integer coordinates.
    x0, x1 = x[..., 0], x[..., 1]
    a0 = round_half_away(x0)
    b0 = round_half_away(x1 / SQRT3)
    d0 = (x0 - a0) ** 2 + (x1 - b0 * SQRT3) ** 2
    a1 = round_half_away(x0 - 0.5)
    b1 = round_half_away(x1 / SQRT3 - 0.5)
    d1 = (x0 - a1 - 0.5) ** 2 + (x1 - (b1 + 0.5) * SQRT3) ** 2
    c0 = np.stack([a0 - b0, 2 * b0], axis=-1).astype(np.int64)
    c1 = np.stack([a1 - b1, 2 * b1 + 1], axis=-1).astype(np.int64)
    lex0 = (c0[..., 0] < c1[..., 0]) | (
        (c0[..., 0] == c1[..., 0]) & (c0[..., 1] <= c1[..., 1]))
    take0 = (d0 < d1) | ((d0 == d1) & lex0)
    return np.where(take0[..., None], c0, c1)


def nearest_coords(lat: Lattice, x) -> np.ndarray:
    """Integer coordinates of the nearest lattice point(s), batched.

    x has shape (..., dim).  Exact for Z^L (componentwise rounding with
    halves away from zero) and for A2 (minimum over its two rectangular
    cosets).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != lat.dim:
        raise ValueError(f"expected vectors of length {lat.dim}")
    if lat.name == "A2":
        return _a2_nearest_coords(x)
    return round_half_away(x).astype(np.int64)


def nearest_point(lat: Lattice, x) -> LatticePoint:
    """The lattice point minimizing dnorm2(x - point)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (lat.dim,):
        raise ValueError(f"expected a vector of length {lat.dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input vector must be finite")
    return lat.point(nearest_coords(lat, x))


def norm2_doubled(lat: Lattice, coords) -> np.ndarray:
    """2 * squared Euclidean embedding length of integer coordinates.

    Exact integer arithmetic for all supported families; this is the form
    used for cleanness decisions and Voronoi membership.
    """
    c = np.asarray(coords, dtype=np.int64)
    return np.einsum("...i,ij,...j->...", c, lat.gram2, c)


def coords_in_ball(lat: Lattice, radius: float) -> np.ndarray:
    """Integer coordinates of all lattice points with embedding norm <= radius.

    Returned in lexicographic coordinate order.  The comparison is done on
    the integer doubled form, so boundary points are included exactly.
    """
    if radius < 0:
        return np.empty((0, lat.dim), dtype=np.int64)
    # Integer threshold on the doubled form; the slack absorbs float error
    # in radius itself without ever excluding a true member.
    thresh = math.floor(2.0 * radius * radius * (1.0 + 1e-12) + 1e-9)
    if lat.name == "Z1":
        amax = math.isqrt(thresh // 2)
        a = np.arange(-amax, amax + 1, dtype=np.int64)
        return a[:, None]
    if lat.name == "Z2":
        amax = math.isqrt(thresh // 2)
        rng = np.arange(-amax, amax + 1, dtype=np.int64)
        g0, g1 = np.meshgrid(rng, rng, indexing="ij")
        cand = np.stack([g0.ravel(), g1.ravel()], axis=1)
    else:  # A2:  2*(c1^2 + c1*c2 + c2^2) <= thresh
        r = math.sqrt(thresh / 2.0)
        b2 = math.ceil(2.0 * r / SQRT3) + 1
        b1 = math.ceil(r + b2 / 2.0) + 1
        r1 = np.arange(-b1, b1 + 1, dtype=np.int64)
        r2 = np.arange(-b2, b2 + 1, dtype=np.int64)
        g0, g1 = np.meshgrid(r1, r2, indexing="ij")
        cand = np.stack([g0.ravel(), g1.ravel()], axis=1)
    keep = norm2_doubled(lat, cand) <= thresh
    cand = cand[keep]
    order = np.lexsort(cand.T[::-1])
    return cand[order]


def sphere_second_moment(dim: int) -> float:
    """Normalized second moment G(S_L) of the L-dimensional ball."""
    if dim not in (1, 2):
        raise ValueError("sphere second moment supported for dimensions 1 and 2")
    return math.gamma(dim / 2.0 + 1.0) ** (2.0 / dim) / ((dim + 2.0) * math.pi)


def second_moment_mc(lat: Lattice, samples: int, seed: int) -> float:
    """Monte-Carlo estimate of the normalized second moment G(lattice).

    Draws points uniformly on the fundamental parallelepiped and folds them
    into the Voronoi cell of the origin via nearest-point quantization, which
    preserves uniformity.
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples for a meaningful estimate")
    rng = np.random.default_rng(seed)
    u = rng.random((samples, lat.dim)) @ lat.basis
    err = u - nearest_coords(lat, u).astype(float) @ lat.basis
    mean_d = float(np.mean(np.sum(err * err, axis=1))) / lat.dim
    return mean_d / lat.cell_volume ** (2.0 / lat.dim)
