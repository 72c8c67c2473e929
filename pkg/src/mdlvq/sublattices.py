"""Geometrically similar sublattices, cleanness tests and product lattices.

Sublattices are parameterized by an algebraic integer: a plain integer scale
for Z^1, a Gaussian integer a+bi for Z^2 and an Eisenstein-style integer
a+bw (w = exp(i*pi/3), w^2 = w - 1) for A2.  Multiplying the parent by such
an element yields a rotated/scaled copy whose index equals the element's
norm, and products of sublattices become ring products of their elements.

All membership and boundary decisions are taken in exact integer arithmetic
on parent coordinates through the doubled Gram form, so cleanness never
depends on floating-point noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattices import Lattice, LatticePoint, coords_in_ball, norm2_doubled


class NotCleanError(ValueError):
    """A Voronoi boundary of the coarse lattice contains a finer point."""


@dataclass(frozen=True)
class SimilaritySpec:
    """Similarity element a+b*u, with u = i for Z2, u = w for A2, b = 0 for Z1."""

    a: int
    b: int = 0


def similarity_index(lat: Lattice, spec: SimilaritySpec) -> int:
    """Sublattice index realized by the similarity (the element's norm)."""
    a, b = spec.a, spec.b
    if lat.name == "Z1":
        if b != 0:
            raise ValueError("Z1 similarities are plain integer scales (b = 0)")
        if a == 0:
            raise ValueError("zero similarity")
        return abs(a)
    if (a, b) == (0, 0):
        raise ValueError("zero similarity")
    if lat.name == "Z2":
        return a * a + b * b
    return a * a + a * b + b * b  # A2


def similarity_generator(lat: Lattice, spec: SimilaritySpec) -> np.ndarray:
    """Integer generator rows of the sublattice, in parent coordinates."""
    a, b = spec.a, spec.b
    if lat.name == "Z1":
        return np.array([[a]], dtype=np.int64)
    if lat.name == "Z2":
        # rows: (a+bi)*1 and (a+bi)*i
        return np.array([[a, b], [-b, a]], dtype=np.int64)
    # A2 with w^2 = w - 1: rows (a+bw)*1 and (a+bw)*w = -b + (a+b)w
    return np.array([[a, b], [-b, a + b]], dtype=np.int64)


def similarity_compose(lat: Lattice, s: SimilaritySpec, t: SimilaritySpec) -> SimilaritySpec:
    """Ring product of two similarity elements."""
    if lat.name == "Z1":
        return SimilaritySpec(s.a * t.a, 0)
    if lat.name == "Z2":
        return SimilaritySpec(s.a * t.a - s.b * t.b, s.a * t.b + s.b * t.a)
    return SimilaritySpec(s.a * t.a - s.b * t.b,
                          s.a * t.b + s.b * t.a + s.b * t.b)


def _similarity_complex(lat: Lattice, spec: SimilaritySpec) -> complex:
    if lat.name == "Z1":
        return complex(spec.a, 0.0)
    if lat.name == "Z2":
        return complex(spec.a, spec.b)
    return spec.a + spec.b * complex(0.5, math.sqrt(3.0) / 2.0)


@dataclass(frozen=True, eq=False)
class SublatticeSpec:
    """A similar sublattice: similarity element, index, bases and volumes."""

    parent: Lattice
    spec: SimilaritySpec
    index: int
    gen: np.ndarray        # integer generator rows in parent coordinates
    basis: np.ndarray      # embedding basis = gen @ parent.basis
    cell_volume: float

    @property
    def dim(self) -> int:
        return self.parent.dim

    def embed(self, own_coords) -> np.ndarray:
        return np.asarray(own_coords, dtype=float) @ self.basis

    def point(self, own_coords) -> LatticePoint:
        own = tuple(int(c) for c in np.atleast_1d(own_coords))
        return LatticePoint(own, self.embed(own))

    def to_parent(self, own_coords) -> np.ndarray:
        """Own coordinates -> parent coordinates (exact integers)."""
        return np.asarray(own_coords, dtype=np.int64) @ self.gen

    def from_parent(self, parent_coords) -> np.ndarray:
        """Parent coordinates -> own coordinates; raises if not a member."""
        c = np.asarray(parent_coords, dtype=np.int64)
        num = c @ self._adjugate_t()
        if np.any(num % self._det() != 0):
            raise ValueError("point is not in the sublattice")
        return num // self._det()

    def member_mask(self, parent_coords) -> np.ndarray:
        """Boolean mask of which parent-coordinate rows lie in the sublattice."""
        c = np.asarray(parent_coords, dtype=np.int64)
        num = c @ self._adjugate_t()
        return np.all(num % self._det() == 0, axis=-1)

    def _det(self) -> int:
        g = self.gen
        if g.shape[0] == 1:
            return int(g[0, 0])
        return int(g[0, 0]) * int(g[1, 1]) - int(g[0, 1]) * int(g[1, 0])

    def _adjugate_t(self) -> np.ndarray:
        # adjugate of gen, so that coords @ adj / det inverts row-vector gen
        g = self.gen
        if g.shape[0] == 1:
            return np.array([[1]], dtype=np.int64)
        return np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]],
                        dtype=np.int64)

    def scale(self) -> float:
        """Linear magnification of the similarity, index**(1/dim)."""
        return float(self.index) ** (1.0 / self.dim)

    def to_base_frame(self, points: np.ndarray) -> np.ndarray:
        """Divide embeddings by the similarity element.

        Nearest sublattice point to y corresponds exactly to the nearest
        parent-family point to the returned frame of y.
        """
        pts = np.asarray(points, dtype=float)
        xi = _similarity_complex(self.parent, self.spec)
        if self.dim == 1:
            return pts / xi.real
        z = (pts[..., 0] + 1j * pts[..., 1]) / xi
        return np.stack([z.real, z.imag], axis=-1)

    def own_frame(self, points: np.ndarray) -> np.ndarray:
        """Real-valued own coordinates of arbitrary embedding points."""
        w = self.to_base_frame(points)
        return w @ np.linalg.inv(self.parent.basis)


def similar_sublattice(parent: Lattice, spec: SimilaritySpec) -> SublatticeSpec:
    """Construct the sublattice generated by the similarity element."""
    index = similarity_index(parent, spec)
    gen = similarity_generator(parent, spec)
    basis = gen.astype(float) @ parent.basis
    det = abs(np.linalg.det(gen.astype(float)))
    if round(det) != index:
        raise AssertionError("similarity determinant does not match its norm")
    return SublatticeSpec(parent, spec, index, gen, basis,
                          index * parent.cell_volume)


def covering_bound(basis: np.ndarray) -> float:
    """Upper bound on the covering radius: half the sum of generator lengths."""
    return 0.5 * float(np.sum(np.linalg.norm(basis, axis=1)))


def _sub_points_within(sub: SublatticeSpec, radius: float,
                       include_origin: bool) -> np.ndarray:
    """Parent coordinates of sublattice points with embedding norm <= radius."""
    own = coords_in_ball(sub.parent, radius / sub.scale() * (1 + 1e-12))
    pts = own @ sub.gen
    keep = norm2_doubled(sub.parent, pts) <= math.floor(
        2.0 * radius * radius * (1 + 1e-12) + 1e-9)
    pts = pts[keep]
    if not include_origin:
        pts = pts[np.any(pts != 0, axis=1)]
    return pts


def voronoi_classify(sub: SublatticeSpec, parent_coords: np.ndarray,
                     scan_radius: float) -> np.ndarray:
    """Classify parent points against the Voronoi cell of the origin.

    Returns +1 (strict interior), 0 (on a boundary) or -1 (outside) per row.
    Only valid for points with embedding norm <= scan_radius; the neighbor
    set is sized accordingly.
    """
    pts = np.asarray(parent_coords, dtype=np.int64)
    neigh = _sub_points_within(sub, 2.0 * scan_radius * (1 + 1e-9),
                               include_origin=False)
    d0 = norm2_doubled(sub.parent, pts)
    if neigh.shape[0] == 0:
        return np.ones(pts.shape[0], dtype=np.int64)
    diffs = pts[:, None, :] - neigh[None, :, :]
    q = norm2_doubled(sub.parent, diffs)
    dmin = q.min(axis=1)
    out = np.where(d0 < dmin, 1, np.where(d0 == dmin, 0, -1))
    return out


def is_clean(parent: Lattice, sub: SublatticeSpec) -> bool:
    """True iff no parent point lies on a Voronoi boundary of the sublattice.

    Every boundary incidence, translated by the nearest sublattice point,
    yields a parent point on the boundary of the cell around the origin, so
    scanning parent points within the covering-radius bound is exhaustive.
    """
    rad = covering_bound(sub.basis) * (1 + 1e-9)
    pts = coords_in_ball(parent, rad)
    cls = voronoi_classify(sub, pts, rad)
    return not np.any(cls == 0)


def admissible_indices(parent: Lattice, max_index: int) -> dict[int, SimilaritySpec]:
    """All clean-realizable indices up to max_index, with witness similarities.

    Returns a dict ordered by index; the witness is the first clean element
    in (index, a, b) order.
    """
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    cands: list[tuple[int, int, int]] = []
    if parent.name == "Z1":
        cands = [(a, a, 0) for a in range(1, max_index + 1)]
    else:
        top = math.isqrt(max_index)
        for a in range(0, top + 1):
            for b in range(0, max_index + 1):
                if (a, b) == (0, 0):
                    continue
                n = a * a + b * b if parent.name == "Z2" else a * a + a * b + b * b
                if n > max_index:
                    break
                cands.append((n, a, b))
    # prefer pure scalings, then small rotations: witness order (index, b, a)
    cands.sort(key=lambda t: (t[0], t[2], t[1]))
    found: dict[int, SimilaritySpec] = {}
    for n, a, b in cands:
        if n in found:
            continue
        spec = SimilaritySpec(a, b)
        if is_clean(parent, similar_sublattice(parent, spec)):
            found[n] = spec
    return found


def is_sublattice_of(inner: SublatticeSpec, outer: SublatticeSpec) -> bool:
    """Exact check that every inner generator lies in the outer sublattice."""
    return bool(np.all(outer.member_mask(inner.gen)))


def product_lattice(parent: Lattice, subs: list[SublatticeSpec],
                    correct: bool = False) -> SublatticeSpec:
    """Common sublattice generated by the product of the similarity elements.

    Its index is the product of the factor indices, and it is verified to be
    a sublattice of every factor and clean with respect to the parent.  A
    non-clean product raises NotCleanError unless correct=True, in which case
    the element is multiplied by the smallest odd scale that restores
    cleanness (which enlarges the index).
    """
    if not subs:
        raise ValueError("need at least one sublattice")
    for s in subs:
        if s.parent is not parent:
            raise ValueError("all sublattices must share the parent lattice")
    spec = subs[0].spec
    for s in subs[1:]:
        spec = similarity_compose(parent, spec, s.spec)
    prod = similar_sublattice(parent, spec)
    if not is_clean(parent, prod):
        if not correct:
            raise NotCleanError(
                f"product lattice of index {prod.index} is not clean; "
                "adjust the index choices")
        for extra in range(3, 100, 2):
            widened = similar_sublattice(
                parent, similarity_compose(parent, spec, SimilaritySpec(extra)))
            if is_clean(parent, widened):
                prod = widened
                break
        else:
            raise NotCleanError("no odd-scale correction found")
    for s in subs:
        if not is_sublattice_of(prod, s):
            raise AssertionError("product lattice escapes a factor sublattice")
    return prod


def enumerate_in_cell(fine, coarse: SublatticeSpec) -> list[LatticePoint]:
    """Points of the fine lattice inside the coarse Voronoi cell of the origin.

    `fine` is either the parent Lattice or one of its SublatticeSpecs; the
    coarse lattice must be a sublattice of it and clean.  Points come back in
    lexicographic order of their own integer coordinates; a boundary tie
    raises NotCleanError.
    """
    parent = coarse.parent
    if isinstance(fine, Lattice):
        if fine is not parent:
            raise ValueError("fine lattice must be the parent of the coarse one")
        fine_index = 1
        fine_scale = 1.0
        fine_gen = np.eye(parent.dim, dtype=np.int64)
        fine_basis = parent.basis
    else:
        if fine.parent is not parent:
            raise ValueError("fine and coarse must share the parent lattice")
        if not is_sublattice_of(coarse, fine):
            raise ValueError("coarse is not a sublattice of fine")
        fine_index = fine.index
        fine_scale = fine.scale()
        fine_gen = fine.gen
        fine_basis = fine.basis
    if coarse.index % fine_index != 0:
        raise ValueError("coarse index must be a multiple of the fine index")

    scan = covering_bound(coarse.basis) + covering_bound(fine_basis)
    own = coords_in_ball(parent, scan / fine_scale * (1 + 1e-12))
    pts = own @ fine_gen
    cls = voronoi_classify(coarse, pts, scan)
    if np.any(cls == 0):
        raise NotCleanError("a fine point ties between two coarse points")
    own = own[cls == 1]
    expected = coarse.index // fine_index
    if own.shape[0] != expected:
        raise AssertionError(
            f"enumerated {own.shape[0]} points, expected {expected}")
    emb = own.astype(float) @ fine_basis
    return [LatticePoint(tuple(int(v) for v in c), e) for c, e in zip(own, emb)]


# Offsets used to turn a floating candidate into an exact nearest point: the
# true minimizer's own coordinates always land in floor(w) + {-1,0,1,2}^L for
# the supported families.
_WINDOW1 = np.array([[-1], [0], [1], [2]], dtype=np.int64)
_WINDOW2 = np.array([[i, j] for i in (-1, 0, 1, 2) for j in (-1, 0, 1, 2)],
                    dtype=np.int64)


def shift_window(dim: int) -> np.ndarray:
    return _WINDOW1 if dim == 1 else _WINDOW2


def reduce_mod(sub: SublatticeSpec, parent_coords) -> tuple[np.ndarray, np.ndarray]:
    """Reduce parent-lattice points modulo the sublattice, exactly.

    Returns (shift_own, residual_parent): shift_own are own coordinates of
    the sublattice point nearest to each input (unique under cleanness) and
    residual_parent = input - shift lies in the Voronoi cell of the origin.
    """
    c = np.asarray(parent_coords, dtype=np.int64)
    batched = c.ndim == 2
    c2 = c if batched else c[None, :]
    w = sub.own_frame(c2.astype(float) @ sub.parent.basis)
    base = np.floor(w).astype(np.int64)
    cand_own = base[:, None, :] + shift_window(sub.dim)[None, :, :]
    cand_parent = cand_own @ sub.gen
    q = norm2_doubled(sub.parent, c2[:, None, :] - cand_parent)
    best = np.argmin(q, axis=1)
    rows = np.arange(c2.shape[0])
    shift_own = cand_own[rows, best]
    residual = c2 - cand_parent[rows, best]
    if not batched:
        return shift_own[0], residual[0]
    return shift_own, residual


def coords_in_sphere(sub: SublatticeSpec, center: np.ndarray,
                     radius: float) -> np.ndarray:
    """Own coordinates of sublattice points within radius of an embedding point.

    Inclusive of the boundary; lexicographic order.
    """
    center = np.asarray(center, dtype=float)
    w = sub.own_frame(center)
    span = radius / sub.scale() * (1 + 1e-12)
    dim = sub.dim
    if dim == 1:
        lo = math.floor(w[0] - span) - 1
        hi = math.ceil(w[0] + span) + 1
        own = np.arange(lo, hi + 1, dtype=np.int64)[:, None]
    else:
        # own coordinates live in the parent family's geometry; box bounds per
        # coordinate follow from the inverse basis column norms (<= 2/sqrt(3)).
        pad = 2
        lo0 = math.floor(w[0] - 1.2 * span) - pad
        hi0 = math.ceil(w[0] + 1.2 * span) + pad
        lo1 = math.floor(w[1] - 1.2 * span) - pad
        hi1 = math.ceil(w[1] + 1.2 * span) + pad
        r0 = np.arange(lo0, hi0 + 1, dtype=np.int64)
        r1 = np.arange(lo1, hi1 + 1, dtype=np.int64)
        g0, g1 = np.meshgrid(r0, r1, indexing="ij")
        own = np.stack([g0.ravel(), g1.ravel()], axis=1)
    emb = own.astype(float) @ sub.basis
    d2 = np.sum((emb - center) ** 2, axis=1)
    keep = d2 <= radius * radius * (1 + 1e-12) + 1e-9
    own = own[keep]
    order = np.lexsort(own.T[::-1])
    return own[order]
