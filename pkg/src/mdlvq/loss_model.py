"""Probability bookkeeping over subsets of descriptions on an erasure channel.

Descriptions are lost independently; subsets of received indices are
represented as bitmasks, enumerated in increasing mask order.  For each
reception count the module aggregates the subset-class probability, the
per-description and per-pair inclusion probabilities, and the covariance-like
coefficient that weights pairwise distances in the assignment cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this mass the per-count weights are treated as empty and the pairwise
# coefficient defined as 0 (it is a covariance of a conditional law with no
# support, so the 0/0 limit is harmless).
_PROB_FLOOR = 1e-300


@dataclass(frozen=True)
class ChannelModel:
    """Independent per-description loss probabilities."""

    loss: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.loss)
        if not p:
            raise ValueError("channel needs at least one description")
        if any(v < 0.0 or v > 1.0 for v in p):
            raise ValueError("loss probabilities must lie in [0, 1]")
        object.__setattr__(self, "loss", p)

    @property
    def receive(self) -> tuple:
        return tuple(1.0 - v for v in self.loss)

    @property
    def descriptions(self) -> int:
        return len(self.loss)


def channel(p) -> ChannelModel:
    return ChannelModel(tuple(float(v) for v in np.atleast_1d(p)))


@dataclass(frozen=True)
class SubsetWeights:
    """Aggregated probabilities over all subsets of a fixed size.

    count_prob is the probability of receiving exactly `kappa` descriptions;
    desc_prob[i] additionally requires description i to be among them, and
    pair_prob[i, j] both i and j.  pairwise_coeff is
    (1/kappa^2) * sum_{i<j} (desc_prob[i]*desc_prob[j]/count_prob - pair_prob[i, j]),
    the channel-only weight of pairwise squared distances.
    """

    descriptions: int
    kappa: int
    count_prob: float
    desc_prob: np.ndarray
    pair_prob: np.ndarray
    pairwise_coeff: float


def subset_prob(ch: ChannelModel, subset) -> float:
    """Probability that exactly the given index subset is received."""
    members = frozenset(int(i) for i in subset)
    k = ch.descriptions
    if any(i < 0 or i >= k for i in members):
        raise ValueError("description index out of range")
    out = 1.0
    for i in range(k):
        out *= ch.receive[i] if i in members else ch.loss[i]
    return out


def _mask_bits(k: int) -> np.ndarray:
    masks = np.arange(2 ** k, dtype=np.uint32)
    return ((masks[:, None] >> np.arange(k)) & 1).astype(np.uint8)


def _mask_probs(ch: ChannelModel, bits: np.ndarray) -> np.ndarray:
    probs = np.ones(bits.shape[0])
    for i in range(ch.descriptions):
        probs *= np.where(bits[:, i] == 1, ch.receive[i], ch.loss[i])
    return probs


def _weights_from_masks(k: int, kappa: int, bits: np.ndarray,
                        probs: np.ndarray) -> SubsetWeights:
    sel = bits.sum(axis=1) == kappa
    b = bits[sel].astype(float)
    p = probs[sel]
    count = float(p.sum())
    desc = b.T @ p
    pair = (b * p[:, None]).T @ b
    if count < _PROB_FLOOR or kappa == k:
        # with kappa == k there is a single subset and every bracket is
        # identically zero; skip the division so the zero is exact
        coeff = 0.0
    else:
        iu, ju = np.triu_indices(k, 1)
        coeff = float(np.sum(desc[iu] * desc[ju] / count - pair[iu, ju]))
        coeff /= kappa * kappa
    return SubsetWeights(k, kappa, count, desc, pair, coeff)


def weights(ch: ChannelModel, kappa: int) -> SubsetWeights:
    """Subset-class weights for receiving exactly `kappa` of K descriptions."""
    k = ch.descriptions
    if not 1 <= kappa <= k:
        raise ValueError(f"kappa must be in 1..{k}")
    if k > 20:
        raise ValueError("subset enumeration supported up to 20 descriptions")
    bits = _mask_bits(k)
    return _weights_from_masks(k, kappa, bits, _mask_probs(ch, bits))


def all_weights(ch: ChannelModel) -> list[SubsetWeights]:
    """weights(ch, kappa) for kappa = 1..K, sharing one subset enumeration."""
    k = ch.descriptions
    if k > 20:
        raise ValueError("subset enumeration supported up to 20 descriptions")
    bits = _mask_bits(k)
    probs = _mask_probs(ch, bits)
    return [_weights_from_masks(k, kappa, bits, probs) for kappa in range(1, k + 1)]


def aggregates(ch: ChannelModel) -> tuple[float, float]:
    """Sum of count probabilities and pairwise coefficients over all counts.

    The first value is the probability that at least one description arrives;
    the second is the total pairwise-distance weight entering the side term
    of the expected distortion.
    """
    ws = all_weights(ch)
    return (float(sum(w.count_prob for w in ws)),
            float(sum(w.pairwise_coeff for w in ws)))
