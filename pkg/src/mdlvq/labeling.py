"""Construction of the shift-invariant labeling between the central lattice
and K-tuples of sublattice points.

The table is built once per Voronoi cell of the product lattice: candidate
tuples are enumerated in spheres around the points of the first sublattice,
reduced to one representative per coset of the product lattice, and matched
to the central points by an exact rectangular min-cost assignment.  Matching
costs combine the distance from a central point to the weighted centroid of a
tuple with the weighted sum of pairwise squared distances (WSPSD) between the
tuple's elements; the centroid term is minimized over coset translates in
closed form (the optimal translate is the product-lattice point nearest to
the centroid defect).

Everything is computed on the unscaled lattice geometry; the physical cell
volume only rescales distortions by scale^2 and never changes the optimal
table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lattices import Lattice, LatticePoint, dnorm2_rows, lattice
from .loss_model import ChannelModel, SubsetWeights, all_weights
from .sublattices import (SublatticeSpec, admissible_indices,
                          coords_in_sphere, enumerate_in_cell,
                          product_lattice, reduce_mod, shift_window,
                          similar_sublattice)

ASSIGNMENT_FORMAT = "mdlvq-assignment v1"

#: Default cap on the number of central points in one product cell; the dense
#: cost matrix grows like N_pi^2.
DEFAULT_NPI_CAP = 10_000

_PROB_FLOOR = 1e-300


class CapExceededError(ValueError):
    """The product-lattice cell holds more central points than allowed."""


@dataclass(frozen=True, eq=False)
class QuantizerSetup:
    """Central lattice, the K side sublattices and their product lattice.

    `nu` is the physical central-cell volume; the geometry itself stays at
    the base scale and `scale()` is the linear factor between the two.
    """

    central: Lattice
    subs: tuple
    product: SublatticeSpec
    nu: float

    @property
    def descriptions(self) -> int:
        return len(self.subs)

    @property
    def indices(self) -> tuple:
        return tuple(s.index for s in self.subs)

    def scale(self) -> float:
        return (self.nu / self.central.cell_volume) ** (1.0 / self.central.dim)


def quantizer_setup(lattice_name: str, indices, nu: float | None = None) -> QuantizerSetup:
    """Build the setup for given side indices using canonical witness
    similarities (the first clean element per index)."""
    central = lattice(lattice_name)
    indices = [int(n) for n in indices]
    witnesses = admissible_indices(central, max(indices))
    subs = []
    for n in indices:
        if n not in witnesses:
            raise ValueError(f"index {n} is not realizable as a clean sublattice "
                             f"of {lattice_name}")
        subs.append(similar_sublattice(central, witnesses[n]))
    product = product_lattice(central, subs)
    if nu is None:
        nu = central.cell_volume
    return QuantizerSetup(central, tuple(subs), product, float(nu))


@dataclass(frozen=True)
class TupleCandidate:
    """One K-tuple of sublattice points with its channel-weighted terms."""

    points: tuple                 # LatticePoint per sublattice (own coords)
    parent_coords: np.ndarray     # (K, dim) integer parent coordinates
    wspsd: float
    centroid_weights: np.ndarray  # combined per-description centroid weights


@dataclass(frozen=True)
class Coset:
    """Orbit of a tuple under product-lattice translations, identified by the
    unique member whose first point lies in the cell around the origin."""

    canonical: TupleCandidate

    def __eq__(self, other):
        return (isinstance(other, Coset)
                and np.array_equal(self.canonical.parent_coords,
                                   other.canonical.parent_coords))

    def __hash__(self):
        return hash(tuple(self.canonical.parent_coords.ravel()))


def coset_of(setup: "QuantizerSetup", tup: TupleCandidate) -> Coset:
    """Canonicalize a tuple: translate it so its first point falls in the
    product cell around the origin (unique under cleanness)."""
    shift_own, _ = reduce_mod(setup.product, tup.parent_coords[0])
    shift_parent = shift_own @ setup.product.gen
    parents = tup.parent_coords - shift_parent[None, :]
    pts = tuple(
        LatticePoint(tuple(int(v) for v in s.from_parent(parents[i])),
                     parents[i].astype(float) @ setup.central.basis)
        for i, s in enumerate(setup.subs))
    return Coset(TupleCandidate(pts, parents, tup.wspsd, tup.centroid_weights))


@dataclass(frozen=True)
class CostModel:
    """Channel-derived weights entering the assignment cost.

    count_probs[k] is the probability of receiving exactly k+1 descriptions,
    centroid_w[k, i] the convex weight of description i in the reception-count
    conditional centroid, pair_w the per-pair WSPSD weights summed over all
    proper reception counts, and combo_w the count-probability mixture of the
    centroid weights (the weights of the overall centroid defect).
    """

    weights: tuple                # SubsetWeights for counts 1..K-1
    count_probs: np.ndarray
    centroid_w: np.ndarray
    pair_w: np.ndarray
    combo_w: np.ndarray
    total_count_prob: float


def cost_model(source: ChannelModel | list | tuple) -> CostModel:
    """Build the cost weights from a channel (or from precomputed per-count
    subset weights covering counts 1..K-1)."""
    if isinstance(source, ChannelModel):
        ws = tuple(all_weights(source)[: source.descriptions - 1])
    else:
        ws = tuple(source)
    k = ws[0].descriptions
    probs = np.array([w.count_prob for w in ws])
    cw = np.zeros((len(ws), k))
    pw = np.zeros((k, k))
    for j, w in enumerate(ws):
        if w.count_prob > _PROB_FLOOR:
            cw[j] = w.desc_prob / (w.kappa * w.count_prob)
            iu, ju = np.triu_indices(k, 1)
            pw[iu, ju] += (w.desc_prob[iu] * w.desc_prob[ju] / w.count_prob
                           - w.pair_prob[iu, ju]) / (w.kappa * w.kappa)
    total = float(probs.sum())
    combo = (probs @ cw) / total if total > _PROB_FLOOR else np.zeros(k)
    return CostModel(ws, probs, cw, pw, combo, total)


def tuple_region_volume(nu: float, indices, psi: float) -> float:
    """Counting bound on the tuple-search region volume.

    The practical enumeration uses twice this volume so the optimal tuples
    are available to the matcher.
    """
    indices = [int(n) for n in indices]
    k = len(indices)
    if k < 2:
        raise ValueError("tuple search needs at least two descriptions")
    if any(n < 1 for n in indices):
        raise ValueError("indices must be positive")
    if psi < 1.0:
        raise ValueError("expansion factor must be >= 1")
    prod = 1.0
    for n in indices:
        prod *= float(n) ** (1.0 / (k - 1))
    return psi * nu * prod


def ball_radius(volume: float, dim: int) -> float:
    """Radius of the dim-ball with the given volume."""
    if dim == 1:
        return volume / 2.0
    return math.sqrt(volume / math.pi)


def build_candidates(setup: QuantizerSetup, model: CostModel,
                     lam0: LatticePoint, radius: float) -> list[TupleCandidate]:
    """All tuples combining lam0 with points of the other sublattices within
    the sphere of the given radius around it, in lexicographic order."""
    parent0 = setup.subs[0].to_parent(np.asarray(lam0.coords, dtype=np.int64))
    center = parent0.astype(float) @ setup.central.basis
    spheres = [coords_in_sphere(s, center, radius) for s in setup.subs[1:]]
    parts = [own @ s.gen for own, s in zip(spheres, setup.subs[1:])]
    counts = [p.shape[0] for p in parts]
    total = int(np.prod(counts)) if counts else 1
    k, dim = setup.descriptions, setup.central.dim
    tparent = np.empty((total, k, dim), dtype=np.int64)
    tparent[:, 0, :] = parent0
    if counts:
        grids = np.meshgrid(*[np.arange(c) for c in counts], indexing="ij")
        for i, (g, p) in enumerate(zip(grids, parts)):
            tparent[:, i + 1, :] = p[g.ravel()]
    wspsd = _wspsd(tparent, model, setup.central.basis)
    out = []
    for t, w in zip(tparent, wspsd):
        pts = tuple(
            LatticePoint(tuple(int(v) for v in s.from_parent(t[i])),
                         t[i].astype(float) @ setup.central.basis)
            for i, s in enumerate(setup.subs))
        out.append(TupleCandidate(pts, t, float(w), model.combo_w))
    return out


def _wspsd(tparent: np.ndarray, model: CostModel, basis: np.ndarray) -> np.ndarray:
    emb = tparent.astype(float) @ basis
    k = tparent.shape[1]
    out = np.zeros(tparent.shape[0])
    for i in range(k - 1):
        for j in range(i + 1, k):
            w = model.pair_w[i, j]
            if w != 0.0:
                out += w * dnorm2_rows(emb[:, i, :] - emb[:, j, :])
    return out


def pair_cost(lam_c: LatticePoint, tup: TupleCandidate,
              ws: list[SubsetWeights] | CostModel,
              product: SublatticeSpec | None = None) -> float:
    """Cost of labeling one central point with one tuple.

    Sums, over every proper reception count, the count probability times the
    squared distance from the central point to the count-conditional weighted
    centroid, plus the tuple's WSPSD term.  When `product` is given the cost
    is minimized over translations of the tuple by product-lattice points
    (the centroid term is quadratic in the translation, so the minimizer is
    the product point nearest to the centroid defect).
    """
    model = ws if isinstance(ws, CostModel) else cost_model(ws)
    dim = tup.parent_coords.shape[1]
    x = np.asarray(lam_c.embedding, dtype=float)
    temb = np.stack([p.embedding for p in tup.points])
    centroids = model.centroid_w @ temb  # (counts, dim)
    w = model.count_probs
    if product is None or model.total_count_prob <= _PROB_FLOOR:
        shifts = np.zeros((1, dim))
    else:
        vbar = x - model.combo_w @ temb
        own = np.floor(product.own_frame(vbar)).astype(np.int64)
        cand = own[None, :] + shift_window(dim)
        shifts = cand.astype(float) @ product.basis
    costs = np.zeros(shifts.shape[0])
    for j in range(w.size):
        diff = x[None, :] - centroids[j][None, :] - shifts
        costs += w[j] * dnorm2_rows(diff)
    return float(costs.min()) + tup.wspsd


@dataclass(frozen=True, eq=False)
class IndexAssignment:
    """The optimal labeling table over one product-lattice cell.

    rows holds the central points of the cell (lexicographic order) and
    tuples_parent/tuples_own the matched tuple per row.  Lookups extend the
    table to the whole lattice by translating with product-lattice points.
    """

    setup: QuantizerSetup
    channel: ChannelModel | None
    psi: float
    rows: np.ndarray           # (N_pi, dim) central parent coords
    tuples_parent: np.ndarray  # (N_pi, K, dim)
    tuples_own: np.ndarray     # (N_pi, K, dim)
    total_cost: float | None   # at the physical scale; None when unknown

    def __post_init__(self):
        lo = self.rows.min(axis=0)
        hi = self.rows.max(axis=0)
        span = hi - lo + 1
        grid = np.full(tuple(int(s) for s in span), -1, dtype=np.int64)
        for r, c in enumerate(self.rows):
            grid[tuple(int(v) for v in (c - lo))] = r
        object.__setattr__(self, "_grid", grid)
        object.__setattr__(self, "_grid_lo", lo)
        inv = {}
        deltas = np.empty_like(self.rows)
        for r in range(self.rows.shape[0]):
            d_own, _ = reduce_mod(self.setup.product, self.tuples_parent[r, 0])
            d_parent = d_own @ self.setup.product.gen
            canon = self.tuples_parent[r] - d_parent[None, :]
            key = tuple(int(v) for v in canon.ravel())
            if key in inv:
                raise AssertionError("two table rows share a tuple coset")
            inv[key] = r
            deltas[r] = d_parent
        object.__setattr__(self, "_inverse", inv)
        object.__setattr__(self, "_deltas", deltas)

    @property
    def table_size(self) -> int:
        return self.rows.shape[0]

    def row_of(self, residual_coords) -> int:
        idx = tuple(int(v) for v in
                    (np.asarray(residual_coords) - self._grid_lo))
        if any(i < 0 or i >= s for i, s in zip(idx, self._grid.shape)):
            raise KeyError(f"{residual_coords} is not a cell point")
        r = int(self._grid[idx])
        if r < 0:
            raise KeyError(f"{residual_coords} is not a cell point")
        return r

    def descriptions_for(self, central_coords) -> np.ndarray:
        """Parent coordinates (K, dim) of the tuple labeling a central point."""
        c = np.asarray(central_coords, dtype=np.int64)
        shift_own, res = reduce_mod(self.setup.product, c)
        r = self.row_of(res)
        return self.tuples_parent[r] + (shift_own @ self.setup.product.gen)[None, :]


def alpha(asg: IndexAssignment, lam_c) -> tuple:
    """The K sublattice points labeling a central point (shift-invariant)."""
    coords = lam_c.coords if isinstance(lam_c, LatticePoint) else lam_c
    parents = asg.descriptions_for(coords)
    out = []
    for i, s in enumerate(asg.setup.subs):
        own = s.from_parent(parents[i])
        out.append(LatticePoint(tuple(int(v) for v in own), s.embed(own)))
    return tuple(out)


def alpha_inverse(asg: IndexAssignment, tup) -> LatticePoint:
    """Recover the central point from its label; raises KeyError otherwise."""
    if isinstance(tup, tuple) and isinstance(tup[0], LatticePoint):
        parents = np.stack([asg.setup.subs[i].to_parent(np.asarray(p.coords))
                            for i, p in enumerate(tup)])
    else:
        parents = np.asarray(tup, dtype=np.int64)
    s_own, _ = reduce_mod(asg.setup.product, parents[0])
    s_parent = s_own @ asg.setup.product.gen
    canon = parents - s_parent[None, :]
    key = tuple(int(v) for v in canon.ravel())
    inv = asg._inverse
    if key not in inv:
        raise KeyError("tuple is not in the image of the labeling")
    r = inv[key]
    coords = asg.rows[r] + s_parent - asg._deltas[r]
    return asg.setup.central.point(coords)


def side_distortion(asg: IndexAssignment, subset) -> float:
    """Cell-averaged squared distance from central points to the mean of the
    listed descriptions, at the physical scale.

    The full subset decodes through the inverse map, so its value is 0 by
    convention; the central-quantizer part is added by callers.
    """
    members = sorted(int(i) for i in set(subset))
    k = asg.setup.descriptions
    if not members:
        raise ValueError("subset must be nonempty")
    if any(i < 0 or i >= k for i in members):
        raise ValueError("description index out of range")
    if len(members) == k:
        return 0.0
    basis = asg.setup.central.basis
    rows_emb = asg.rows.astype(float) @ basis
    mean_emb = asg.tuples_parent[:, members, :].astype(float).mean(axis=1) @ basis
    d = float(np.mean(dnorm2_rows(rows_emb - mean_emb)))
    return d * asg.setup.scale() ** 2


def assign(setup: QuantizerSetup, ch: ChannelModel, psi: float,
           tuples_per_base: int | None = None,
           npi_cap: int = DEFAULT_NPI_CAP) -> IndexAssignment:
    """Solve the labeling problem for the given channel.

    Candidate tuples are generated around each first-sublattice point of the
    product cell with a sphere of twice the counting-bound volume (doubled
    again, at most twice, if some point yields fewer tuples than needed);
    each sphere's tuples are trimmed to the lowest-WSPSD `tuples_per_base`
    before the exact rectangular assignment is solved.
    """
    k = setup.descriptions
    if k < 2:
        raise ValueError("labeling needs at least two descriptions")
    if ch.descriptions != k:
        raise ValueError("channel size does not match the number of sublattices")
    npi = setup.product.index
    if npi > npi_cap:
        raise CapExceededError(
            f"product cell holds {npi} central points, cap is {npi_cap}")
    model = cost_model(ch)
    central = setup.central
    dim = central.dim
    n0 = setup.subs[0].index
    if tuples_per_base is None:
        tuples_per_base = max(2 * n0, n0 + 16)

    rows = np.array([p.coords for p in enumerate_in_cell(central, setup.product)],
                    dtype=np.int64)
    base_pts = enumerate_in_cell(setup.subs[0], setup.product)

    volume = 2.0 * tuple_region_volume(central.cell_volume, setup.indices, psi)
    for attempt in range(3):
        radius = ball_radius(volume, dim)
        blocks = [build_candidates(setup, model, p, radius) for p in base_pts]
        if all(len(b) >= n0 for b in blocks):
            break
        volume *= 2.0
    else:
        raise RuntimeError("insufficient tuple candidates after two radius "
                           "doublings; check the index configuration")

    cand_parent = []
    cand_wspsd = []
    for block in blocks:
        order = sorted(range(len(block)),
                       key=lambda i: (block[i].wspsd,
                                      tuple(block[i].parent_coords.ravel())))
        for i in order[:tuples_per_base]:
            cand_parent.append(block[i].parent_coords)
            cand_wspsd.append(block[i].wspsd)
    tcand = np.stack(cand_parent)           # (M, K, dim)
    wspsd = np.array(cand_wspsd)
    if tcand.shape[0] < npi:
        raise ValueError(
            f"only {tcand.shape[0]} candidate cosets for {npi} central "
            "points; raise tuples_per_base")

    cost = _cost_matrix(setup, model, rows, tcand, wspsd)
    row_ind, col_ind = linear_sum_assignment(cost)
    base_total = float(cost[row_ind, col_ind].sum())

    tuples_parent = np.empty((npi, k, dim), dtype=np.int64)
    tuples_own = np.empty_like(tuples_parent)
    for r, c in zip(row_ind, col_ind):
        member = _best_member(setup, model, rows[r], tcand[c])
        tuples_parent[r] = member
        for i, s in enumerate(setup.subs):
            tuples_own[r, i] = s.from_parent(member[i])

    total = base_total * setup.scale() ** 2
    return IndexAssignment(setup, ch, float(psi), rows,
                           tuples_parent, tuples_own, total)


def _cost_matrix(setup: QuantizerSetup, model: CostModel, rows: np.ndarray,
                 tcand: np.ndarray, wspsd: np.ndarray) -> np.ndarray:
    central, product = setup.central, setup.product
    dim = central.dim
    basis = central.basis
    rows_emb = rows.astype(float) @ basis                  # (R, dim)
    temb = tcand.astype(float) @ basis                     # (M, K, dim)
    centroids = np.einsum("ck,mkd->mcd", model.centroid_w, temb)
    cbar = np.einsum("k,mkd->md", model.combo_w, temb)
    wtot = model.total_count_prob
    R, M = rows_emb.shape[0], temb.shape[0]
    offsets = shift_window(dim)
    o_emb = offsets.astype(float) @ product.basis          # (S, dim)
    osq = np.sum(o_emb * o_emb, axis=1)                    # (S,)
    out = np.empty((R, M))
    block = max(8, int(3e7 // max(1, R * offsets.shape[0])))
    for start in range(0, M, block):
        end = min(M, start + block)
        c_blk = centroids[start:end]                       # (B, counts, dim)
        base0 = np.zeros((R, end - start))
        for j in range(model.count_probs.size):
            diff = rows_emb[:, None, :] - c_blk[None, :, j, :]
            base0 += model.count_probs[j] * np.mean(diff * diff, axis=-1)
        if wtot <= _PROB_FLOOR:
            out[:, start:end] = base0 + wspsd[start:end][None, :]
            continue
        vbar = rows_emb[:, None, :] - cbar[None, start:end, :]   # (R, B, dim)
        f_own = np.floor(product.own_frame(vbar))
        f_emb = f_own @ product.basis
        # penalty(s) = (wtot/dim) * (|F + O_s|^2 - 2 <vbar, F + O_s>)
        fixed = np.sum(f_emb * f_emb, axis=-1) - 2.0 * np.sum(vbar * f_emb, axis=-1)
        cross = 2.0 * np.einsum("rbd,sd->rbs", f_emb - vbar, o_emb)
        pen = (fixed[:, :, None] + osq[None, None, :] + cross).min(axis=2)
        out[:, start:end] = base0 + (wtot / dim) * pen + wspsd[start:end][None, :]
    return out


def _best_member(setup: QuantizerSetup, model: CostModel, row: np.ndarray,
                 tparent: np.ndarray) -> np.ndarray:
    """Matched coset member: the translate minimizing the pair cost, ties
    broken toward lexicographically smallest member coordinates."""
    central, product = setup.central, setup.product
    dim = central.dim
    x = row.astype(float) @ central.basis
    temb = tparent.astype(float) @ central.basis
    if model.total_count_prob <= _PROB_FLOOR:
        return tparent.copy()
    vbar = x - model.combo_w @ temb
    own = np.floor(product.own_frame(vbar)).astype(np.int64)
    cand = own[None, :] + shift_window(dim)
    s_parent = cand @ product.gen
    s_emb = s_parent.astype(float) @ central.basis
    centroids = model.centroid_w @ temb
    costs = np.zeros(s_emb.shape[0])
    for j in range(model.count_probs.size):
        diff = x[None, :] - centroids[j][None, :] - s_emb
        costs += model.count_probs[j] * np.mean(diff * diff, axis=-1)
    best = np.min(costs)
    pick = None
    for i in np.flatnonzero(costs == best):
        member = tparent + s_parent[i][None, :]
        key = tuple(member.ravel())
        if pick is None or key < pick[0]:
            pick = (key, member)
    return pick[1]


def save_assignment(asg: IndexAssignment, path) -> None:
    """Write the table in the text format: a one-line header, then one row
    per central point with its coordinates and each description's own-basis
    coordinates, comma-separated."""
    setup = asg.setup
    witnesses = admissible_indices(setup.central, max(setup.indices))
    for s in setup.subs:
        if witnesses.get(s.index) != s.spec:
            raise ValueError("only canonical-witness sublattices serialize "
                             "unambiguously")
    n_str = ",".join(str(n) for n in setup.indices)
    header = (f"{ASSIGNMENT_FORMAT}; lattice={setup.central.name}; "
              f"K={setup.descriptions}; N={n_str}; nu={asg.setup.nu!r}; "
              f"psi={asg.psi!r}")
    lines = [header]
    for r in range(asg.table_size):
        fields = [str(int(v)) for v in asg.rows[r]]
        for i in range(setup.descriptions):
            fields.extend(str(int(v)) for v in asg.tuples_own[r, i])
        lines.append(",".join(fields))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_assignment(path, ch: ChannelModel | None = None) -> IndexAssignment:
    """Read a table written by save_assignment."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header = lines[0]
    if not header.startswith(ASSIGNMENT_FORMAT):
        raise ValueError(f"unrecognized assignment header: {header!r}")
    meta = {}
    for part in header.split(";")[1:]:
        key, _, val = part.strip().partition("=")
        meta[key] = val
    name = meta["lattice"]
    k = int(meta["K"])
    indices = [int(v) for v in meta["N"].split(",")]
    if len(indices) != k:
        raise ValueError("header K does not match the index list")
    setup = quantizer_setup(name, indices, nu=float(meta["nu"]))
    dim = setup.central.dim
    expected = setup.product.index
    if len(lines) - 1 != expected:
        raise ValueError(f"expected {expected} table rows, found {len(lines) - 1}")
    rows = np.empty((expected, dim), dtype=np.int64)
    tuples_own = np.empty((expected, k, dim), dtype=np.int64)
    tuples_parent = np.empty_like(tuples_own)
    for r, line in enumerate(lines[1:]):
        vals = [int(v) for v in line.split(",")]
        if len(vals) != dim * (k + 1):
            raise ValueError(f"row {r}: expected {dim * (k + 1)} fields")
        rows[r] = vals[:dim]
        for i in range(k):
            own = vals[dim * (i + 1): dim * (i + 2)]
            tuples_own[r, i] = own
            tuples_parent[r, i] = setup.subs[i].to_parent(np.asarray(own))
    return IndexAssignment(setup, ch, float(meta["psi"]), rows,
                           tuples_parent, tuples_own, None)
