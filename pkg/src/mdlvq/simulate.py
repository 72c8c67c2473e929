"""Monte-Carlo verification over an erasure channel.

Source vectors are quantized on the (physically scaled) central lattice,
labeled through the assignment table, sent as K descriptions of which each is
independently erased, and reconstructed per reception count: the inverse map
when everything arrives, the mean of the received points otherwise, and the
source mean (zero) when nothing arrives.

Randomness uses the counter-based Philox generator with two documented
streams derived from the run seed: stream 0 drives the source, stream 1 the
erasures, so either can be reproduced independently.  Gaussian variates come
from the inverse CDF applied to uniform doubles, which pins the exact values
for a given seed.  Vectors are processed in fixed-size chunks and accumulator
merges happen in chunk order, so reports are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .design import DistortionPrediction, SourceModel, predict_distortion
from .labeling import IndexAssignment, alpha, alpha_inverse
from .lattices import LatticePoint, nearest_coords
from .loss_model import ChannelModel

STREAM_SOURCE = 0
STREAM_CHANNEL = 1
CHUNK = 16384

GAUSSIAN_SAMPLER = "inverse-cdf(philox)"


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent, reproducible stream of the run's random state."""
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence((int(seed), int(stream)))))


@dataclass(frozen=True)
class SimConfig:
    count: int
    seed: int
    source: SourceModel
    channel: ChannelModel
    assignment: IndexAssignment
    collect_per_subset: bool = True

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("vector count must be >= 1")
        if self.source.dim != self.assignment.setup.central.dim:
            raise ValueError("source dimension does not match the lattice")
        if self.channel.descriptions != self.assignment.setup.descriptions:
            raise ValueError("channel size does not match the assignment")


@dataclass(frozen=True)
class SubsetStat:
    count: int
    distortion: float
    std_err: float


@dataclass(frozen=True)
class SimReport:
    total: float
    std_err: float
    central: float
    per_subset: dict
    side_entropy: tuple
    predicted: DistortionPrediction
    count: int
    seed: int


def generate(src: SourceModel, count: int, seed: int) -> np.ndarray:
    """Seeded i.i.d. source vectors, (count, dim)."""
    if src.kind != "gaussian":
        raise ValueError(f"cannot generate from source kind {src.kind!r}")
    rng = stream_rng(seed, STREAM_SOURCE)
    u = rng.random((count, src.dim))
    u[u == 0.0] = np.nextafter(0.0, 1.0)
    return ndtri(u) * np.sqrt(src.variance)


def encode(asg: IndexAssignment, x) -> tuple[LatticePoint, tuple]:
    """Quantize one vector to the central lattice and label it.

    Returned points carry base-scale embeddings; physical positions are their
    embeddings times the setup scale.
    """
    x = np.asarray(x, dtype=float)
    scale = asg.setup.scale()
    coords = nearest_coords(asg.setup.central, x / scale)
    central = asg.setup.central.point(coords)
    return central, alpha(asg, central)


def erase(descriptions, ch: ChannelModel, rng: np.random.Generator) -> frozenset:
    """Drop each description independently; returns the received index set."""
    k = len(descriptions)
    u = rng.random(k)
    return frozenset(i for i in range(k) if u[i] >= ch.loss[i])


def decode(asg: IndexAssignment, received, tuples) -> np.ndarray:
    """Reconstruct from the received subset of a label, at physical scale."""
    received = sorted(set(received))
    scale = asg.setup.scale()
    k = asg.setup.descriptions
    if not received:
        return np.zeros(asg.setup.central.dim)
    if len(received) == k:
        return alpha_inverse(asg, tuples).embedding * scale
    pts = np.stack([tuples[i].embedding for i in received])
    return pts.mean(axis=0) * scale


def run(cfg: SimConfig) -> SimReport:
    """Simulate the configured system and report empirical statistics."""
    asg = cfg.assignment
    setup = asg.setup
    central = setup.central
    product = setup.product
    dim = central.dim
    k = setup.descriptions
    scale = setup.scale()
    basis = central.basis
    loss = np.asarray(cfg.channel.loss)

    x_all = generate(cfg.source, cfg.count, cfg.seed)
    u_all = stream_rng(cfg.seed, STREAM_CHANNEL).random((cfg.count, k))

    grid = asg._grid
    grid_lo = asg._grid_lo
    sub_adj = [s._adjugate_t() for s in setup.subs]
    sub_det = [s._det() for s in setup.subs]

    full_mask = (1 << k) - 1
    sums = np.zeros(full_mask + 1)
    sqsums = np.zeros(full_mask + 1)
    counts = np.zeros(full_mask + 1, dtype=np.int64)
    symbol_counts = [dict() for _ in range(k)]
    key_span = np.int64(1) << 21
    key_off = np.int64(1) << 20

    from .sublattices import reduce_mod

    for start in range(0, cfg.count, CHUNK):
        x = x_all[start:start + CHUNK]
        u = u_all[start:start + CHUNK]
        n = x.shape[0]
        coords = nearest_coords(central, x / scale)
        shift_own, resid = reduce_mod(product, coords)
        idx = resid - grid_lo
        rows = grid[idx[:, 0]] if dim == 1 else grid[idx[:, 0], idx[:, 1]]
        shift_parent = shift_own @ product.gen
        desc_parent = asg.tuples_parent[rows] + shift_parent[:, None, :]

        received = u >= loss[None, :]
        mask = (received.astype(np.int64) << np.arange(k)[None, :]).sum(axis=1)

        recon = np.zeros((n, dim))
        for m in np.unique(mask):
            sel = mask == m
            if m == 0:
                pass  # reconstruct with the (zero) source mean
            elif m == full_mask:
                # the label is invertible, so full reception recovers the
                # encoded central point exactly
                recon[sel] = coords[sel].astype(float) @ basis * scale
            else:
                members = [i for i in range(k) if m >> i & 1]
                pts = desc_parent[sel][:, members, :].astype(float).mean(axis=1)
                recon[sel] = pts @ basis * scale
        err = x - recon
        d = np.mean(err * err, axis=1)
        binc = np.bincount(mask, minlength=full_mask + 1)
        sums += np.bincount(mask, weights=d, minlength=full_mask + 1)
        sqsums += np.bincount(mask, weights=d * d, minlength=full_mask + 1)
        counts += binc

        for i in range(k):
            own = (shift_parent @ sub_adj[i]) // sub_det[i] + asg.tuples_own[rows, i]
            if dim == 1:
                keys = own[:, 0] + key_off
            else:
                keys = (own[:, 0] + key_off) * key_span + own[:, 1] + key_off
            uniq, cnt = np.unique(keys, return_counts=True)
            tab = symbol_counts[i]
            for ky, c in zip(uniq.tolist(), cnt.tolist()):
                tab[ky] = tab.get(ky, 0) + int(c)

    total_sum = float(sums.sum())
    total_sq = float(sqsums.sum())
    total = total_sum / cfg.count
    var = max(total_sq / cfg.count - total * total, 0.0)
    std_err = float(np.sqrt(var / cfg.count))

    per_subset = {}
    for m in range(full_mask + 1):
        if counts[m] == 0:
            continue
        c = int(counts[m])
        mean = float(sums[m]) / c
        v = max(float(sqsums[m]) / c - mean * mean, 0.0)
        subset = tuple(i for i in range(k) if m >> i & 1)
        per_subset[subset] = SubsetStat(c, mean, float(np.sqrt(v / c)))

    central_stat = per_subset.get(tuple(range(k)))
    entropies = []
    for i in range(k):
        freq = np.array(list(symbol_counts[i].values()), dtype=float) / cfg.count
        entropies.append(float(-(freq @ np.log2(freq)) / dim))

    predicted = predict_distortion(cfg.source, cfg.channel,
                                   central.second_moment, setup.nu,
                                   setup.indices, asg.psi)
    report = SimReport(total, std_err,
                       central_stat.distortion if central_stat else float("nan"),
                       per_subset if cfg.collect_per_subset else {},
                       tuple(entropies), predicted, cfg.count, cfg.seed)
    return report
