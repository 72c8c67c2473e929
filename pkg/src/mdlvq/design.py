"""High-resolution design equations: rates, the optimal cell volume, optimal
index values, index snapping with volume rescaling, and the analytic
three-term expected-distortion prediction.

All rates are entropies in bits per dimension.  The side-rate budget fixes
the product of side-cell volumes; the closed-form volume balances the
central-distortion term against the pairwise side term and is exact under the
high-resolution model (it is cross-checked against a numerical minimizer in
the verification suite).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .lattices import Lattice, sphere_second_moment
from .loss_model import ChannelModel, aggregates


class InfeasibleDesignError(ValueError):
    """The requested rate split or channel admits no valid design."""


@dataclass(frozen=True)
class SourceModel:
    """What the design needs to know about the source.

    entropy is the per-dimension differential entropy in bits; mean_power is
    the dimension-normalized second moment.  Sources are zero mean.
    """

    kind: str
    dim: int
    entropy: float
    mean_power: float
    variance: float | None = None


def gaussian_source(dim: int, variance: float = 1.0) -> SourceModel:
    if variance <= 0:
        raise ValueError("variance must be positive")
    h = 0.5 * math.log2(2.0 * math.pi * math.e * variance)
    return SourceModel("gaussian", dim, h, variance, variance)


def custom_source(dim: int, entropy: float, mean_power: float) -> SourceModel:
    if mean_power <= 0:
        raise ValueError("mean power must be positive")
    return SourceModel("custom", dim, entropy, mean_power, None)


@dataclass(frozen=True)
class DistortionPrediction:
    """The three analytic addends of the expected distortion."""

    central_term: float
    zero_term: float
    side_term: float

    @property
    def total(self) -> float:
        return self.central_term + self.zero_term + self.side_term


@dataclass(frozen=True)
class DesignParams:
    """Everything the design pipeline decides for one configuration."""

    rate_target: float
    rate_fractions: tuple
    psi: float
    tau_star: float
    nu_opt: float
    index_opt: tuple
    index_snapped: tuple
    nu_rescaled: float
    central_rate_opt: float
    central_rate: float
    side_rates: tuple
    prediction: DistortionPrediction


def rates(nu: float, indices, src: SourceModel) -> tuple[float, list[float]]:
    """Central and side entropies for a cell volume and index values."""
    if nu <= 0:
        raise ValueError("cell volume must be positive")
    L = src.dim
    rc = src.entropy - math.log2(nu) / L
    ri = [src.entropy - math.log2(n * nu) / L for n in indices]
    return rc, ri


def tau_star(src: SourceModel, descriptions: int, rate_target: float) -> float:
    """Product of side-cell volumes forced by the side-rate budget."""
    if rate_target <= 0:
        raise ValueError("rate target must be positive")
    return 2.0 ** (src.dim * (descriptions * src.entropy - rate_target))


def default_expansion_factor(dim: int, descriptions: int) -> float:
    """Region expansion factor: 1 for two descriptions, the two-dimensional
    closed form for more; other combinations fall back to 1 with a warning."""
    if descriptions == 2:
        return 1.0
    if dim == 2:
        return 2.0 ** ((descriptions - 2) / (descriptions - 1))
    warnings.warn(
        f"no expansion-factor model for dim={dim}, K={descriptions}; using 1.0",
        stacklevel=2)
    return 1.0


def optimal_nu(src: SourceModel, descriptions: int, rate_target: float,
               psi: float, g_central: float, g_sphere: float,
               ch: ChannelModel) -> float:
    """Closed-form distortion-minimizing central cell volume."""
    k = descriptions
    if k < 2:
        raise ValueError("need at least two descriptions")
    p_some, pw_total = aggregates(ch)
    if pw_total <= 0.0 or p_some <= 0.0:
        raise InfeasibleDesignError(
            "degenerate channel: with no loss/no reception tradeoff the "
            "formula does not apply (give all rate to the central quantizer)")
    L = src.dim
    lead = 2.0 ** (L * (src.entropy - rate_target / k))
    inner = (psi ** (2.0 / L)) * (g_sphere / g_central) * (pw_total / p_some) / (k - 1)
    return lead * inner ** (L * (k - 1) / (2.0 * k))


def optimal_indices(src: SourceModel, descriptions: int, rate_target: float,
                    fractions, psi: float, g_central: float, g_sphere: float,
                    ch: ChannelModel) -> list[float]:
    """Unsnapped optimal index values for a feasible rate split."""
    fractions = [float(a) for a in fractions]
    if len(fractions) != descriptions:
        raise ValueError("need one rate fraction per description")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InfeasibleDesignError("rate fractions must sum to 1")
    nu = optimal_nu(src, descriptions, rate_target, psi, g_central, g_sphere, ch)
    rc, _ = rates(nu, [1] * descriptions, src)
    check_rate_fractions(fractions, rate_target, rc)
    L = src.dim
    return [2.0 ** (L * (src.entropy - a * rate_target)) / nu for a in fractions]


def check_rate_fractions(fractions, rate_target: float, central_rate: float,
                         tol: float = 1e-9) -> None:
    """Every side rate must be positive and no larger than the central rate."""
    for i, a in enumerate(fractions):
        r = a * rate_target
        if r <= 0.0:
            raise InfeasibleDesignError(
                f"rate fraction {i} gives nonpositive side rate {r:.6g}")
        if r > central_rate + tol:
            raise InfeasibleDesignError(
                f"rate fraction {i} gives side rate {r:.6g} bits/dim above "
                f"the central rate {central_rate:.6g}")


def snap_and_rescale(index_real, src: SourceModel, descriptions: int,
                     rate_target: float, admissible) -> tuple[list[int], float]:
    """Snap index values to admissible integers (nearest in the log domain)
    and rescale the cell volume so the side rates again sum to the target."""
    options = sorted(int(n) for n in admissible)
    if not options:
        raise ValueError("admissible index list is empty")
    logs = [math.log2(n) for n in options]
    snapped = []
    for n in index_real:
        t = math.log2(n)
        best = min(range(len(options)), key=lambda i: (abs(logs[i] - t), options[i]))
        snapped.append(options[best])
    L = src.dim
    prod = 1.0
    for n in snapped:
        prod *= float(n)
    nu = 2.0 ** (L * (src.entropy - rate_target / descriptions)) * prod ** (-1.0 / descriptions)
    return snapped, nu


def predict_distortion(src: SourceModel, ch: ChannelModel, g_central: float,
                       nu: float, indices, psi: float) -> DistortionPrediction:
    """Analytic expected distortion of a configured quantizer bank."""
    L = src.dim
    k = ch.descriptions
    indices = [int(n) for n in indices]
    if len(indices) != k:
        raise ValueError("need one index per description")
    if nu <= 0:
        raise ValueError("cell volume must be positive")
    p_some, pw_total = aggregates(ch)
    central = g_central * nu ** (2.0 / L) * p_some
    zero = src.mean_power * float(np.prod(ch.loss))
    if k >= 2:
        g_sphere = sphere_second_moment(L)
        prod = 1.0
        for n in indices:
            prod *= float(n) ** (2.0 / (L * (k - 1)))
        side = (psi ** (2.0 / L)) * nu ** (2.0 / L) * g_sphere * prod * pw_total
    else:
        side = 0.0
    return DistortionPrediction(central, zero, side)


def design_quantizers(src: SourceModel, ch: ChannelModel, central: Lattice,
                      rate_target: float, fractions=None,
                      psi: float | None = None,
                      admissible=None) -> DesignParams:
    """Run the full design pipeline for one configuration.

    Feasibility of the rate split is enforced against the pre-snap central
    rate and re-checked (reported, not fatal within tolerance) post-snap;
    both central rates are part of the result.
    """
    from .sublattices import admissible_indices

    k = ch.descriptions
    if fractions is None:
        fractions = [1.0 / k] * k
    if psi is None:
        psi = default_expansion_factor(src.dim, k)
    g_c = central.second_moment
    g_s = sphere_second_moment(src.dim)
    tau = tau_star(src, k, rate_target)
    nu = optimal_nu(src, k, rate_target, psi, g_c, g_s, ch)
    n_opt = optimal_indices(src, k, rate_target, fractions, psi, g_c, g_s, ch)
    if admissible is None:
        max_n = max(8, math.ceil(4.0 * max(n_opt)))
        admissible = list(admissible_indices(central, max_n))
    snapped, nu2 = snap_and_rescale(n_opt, src, k, rate_target, admissible)
    rc_opt, _ = rates(nu, snapped, src)
    rc, ri = rates(nu2, snapped, src)
    check_rate_fractions(fractions, rate_target, rc)
    pred = predict_distortion(src, ch, g_c, nu2, snapped, psi)
    return DesignParams(rate_target, tuple(fractions), float(psi), tau, nu,
                        tuple(n_opt), tuple(snapped), nu2, rc_opt, rc,
                        tuple(ri), pred)
