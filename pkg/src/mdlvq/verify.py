"""Release-gate consistency checks.

Four families of checks, all deterministic given their seeds: the algebraic
identity between the direct subset-sum form of the expected labeling cost and
the centroid+WSPSD expansion used by the matcher; total-probability
normalizations of the loss model; the closed-form optimal cell volume against
a golden-section minimizer of the rate-constrained distortion objective; and
the pairwise-distance trend of optimal tables against the sphere asymptotic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .design import custom_source, optimal_nu
from .labeling import assign, quantizer_setup
from .lattices import G_HEXAGON, G_SQUARE, dnorm2_rows, sphere_second_moment
from .loss_model import all_weights, channel, weights


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict)


def direct_subset_cost(points: np.ndarray, tuples: np.ndarray, loss,
                       kappa: int) -> float:
    """Expected labeling cost summed directly over all reception subsets."""
    k = len(loss)
    mu = [1.0 - p for p in loss]
    total = 0.0
    for members in itertools.combinations(range(k), kappa):
        pl = 1.0
        for i in range(k):
            pl *= mu[i] if i in members else loss[i]
        mean = tuples[:, members, :].mean(axis=1)
        total += pl * float(np.sum(dnorm2_rows(points - mean)))
    return total


def expanded_subset_cost(points: np.ndarray, tuples: np.ndarray, loss,
                         kappa: int, bracket_scale: float = 1.0) -> float:
    """The same cost through the centroid + pairwise-distance expansion.

    bracket_scale multiplies the pairwise brackets; it exists only so the
    release gate can demonstrate that a perturbed expansion is caught.
    """
    w = weights(channel(loss), kappa)
    k = len(loss)
    if w.count_prob <= 0.0:
        return 0.0
    cw = w.desc_prob / (kappa * w.count_prob)
    centroid = np.einsum("k,nkd->nd", cw, tuples)
    total = w.count_prob * float(np.sum(dnorm2_rows(points - centroid)))
    for i in range(k - 1):
        for j in range(i + 1, k):
            br = (w.desc_prob[i] * w.desc_prob[j] / w.count_prob
                  - w.pair_prob[i, j]) * bracket_scale / (kappa * kappa)
            total += br * float(np.sum(dnorm2_rows(tuples[:, i] - tuples[:, j])))
    return total


def sum_identity_check(instances: int = 200, points: int = 50,
                           seed: int = 20260809, tol: float = 1e-9,
                           bracket_scale: float = 1.0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        k = int(rng.integers(2, 6))
        kappa = int(rng.integers(1, k + 1))
        dim = int(rng.integers(1, 3))
        pts = rng.integers(-20, 21, size=(points, dim)).astype(float)
        tups = rng.integers(-20, 21, size=(points, k, dim)).astype(float)
        loss = rng.uniform(0.01, 0.99, size=k).tolist()
        a = direct_subset_cost(pts, tups, loss, kappa)
        b = expanded_subset_cost(pts, tups, loss, kappa, bracket_scale)
        worst = max(worst, abs(a - b) / max(abs(a), 1e-12))
    return CheckResult(
        "subset-sum identity", worst <= tol,
        f"max relative deviation {worst:.3e} over {instances} instances "
        f"(tolerance {tol:.0e})", {"worst": worst})


def normalization_check(channels: int = 1000, max_descriptions: int = 10,
                        seed: int = 20260809, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(channels):
        k = int(rng.integers(1, max_descriptions + 1))
        ch = channel(rng.uniform(0.0, 1.0, size=k))
        ws = all_weights(ch)
        p_none = float(np.prod(ch.loss))
        total = p_none + sum(w.count_prob for w in ws)
        worst = max(worst, abs(total - 1.0))
        p_some = sum(w.count_prob for w in ws)
        worst = max(worst, abs(p_some + p_none - 1.0))
    return CheckResult(
        "probability normalization", worst <= tol,
        f"max |1 - total probability| {worst:.3e} over {channels} channels "
        f"(tolerance {tol:.0e})", {"worst": worst})


def _golden_min(f, lo: float, hi: float, iters: int = 140) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def volume_formula_check(configs: int = 100, seed: int = 20260809,
                         rel_tol: float = 1e-6) -> CheckResult:
    """Closed-form optimal cell volume vs golden-section on the objective."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(configs):
        dim = int(rng.integers(1, 3))
        k = int(rng.integers(2, 5))
        h = float(rng.uniform(0.5, 4.0))
        rate = float(rng.uniform(1.0, 6.0)) * k
        psi = float(rng.uniform(1.0, 2.0))
        g_c = G_SQUARE if dim == 1 else float(rng.choice([G_SQUARE, G_HEXAGON]))
        g_s = sphere_second_moment(dim)
        ch = channel(rng.uniform(0.02, 0.6, size=k))
        ws = all_weights(ch)
        p_some = sum(w.count_prob for w in ws)
        pw_total = sum(w.pairwise_coeff for w in ws)
        tau = 2.0 ** (dim * (k * h - rate))

        def objective(t):
            nu = 2.0 ** t
            return (g_c * nu ** (2.0 / dim) * p_some
                    + psi ** (2.0 / dim) * nu ** (-2.0 / (dim * (k - 1)))
                    * tau ** (2.0 / (dim * (k - 1))) * g_s * pw_total)

        t0 = dim * (h - rate / k)
        t_best = _golden_min(objective, t0 - 10.0, t0 + 10.0)
        closed = optimal_nu(custom_source(dim, h, 1.0), k, rate, psi, g_c, g_s, ch)
        worst = max(worst, abs(2.0 ** t_best - closed) / closed)
    return CheckResult(
        "closed-form cell volume", worst <= rel_tol,
        f"max relative gap to golden-section minimizer {worst:.3e} over "
        f"{configs} configurations (tolerance {rel_tol:.0e})", {"worst": worst})


def pairwise_trend_check(indices=(5, 9, 13, 25, 29),
                         band=(0.8, 1.25)) -> CheckResult:
    """Measured pairwise-distance sums of optimal two-description tables
    against the sphere asymptotic, for growing symmetric index values.

    For two descriptions the optimal table is the same for every symmetric
    channel, so the check uses p = (1/2, 1/2).
    """
    ch = channel([0.5, 0.5])
    g_s = sphere_second_moment(2)
    ratios = []
    lines = []
    for n in indices:
        setup = quantizer_setup("Z2", (n, n))
        asg = assign(setup, ch, psi=1.0)
        d = (asg.tuples_parent[:, 0, :] - asg.tuples_parent[:, 1, :]).astype(float)
        measured = float(np.sum(dnorm2_rows(d)))
        predicted = g_s * (n * n) * (n * n)   # psi = nu = 1
        ratios.append(measured / predicted)
        lines.append(f"  N={n:>3}  measured {measured:12.3f}  "
                     f"sphere prediction {predicted:12.3f}  ratio {ratios[-1]:.4f}")
    ok = band[0] <= ratios[-1] <= band[1]
    return CheckResult(
        "pairwise-distance trend", ok,
        "ratio at the largest index "
        f"{ratios[-1]:.4f} within [{band[0]}, {band[1]}]\n" + "\n".join(lines),
        {"indices": tuple(indices), "ratios": ratios})


def run_all(seed: int = 20260809) -> list[CheckResult]:
    return [
        sum_identity_check(seed=seed),
        normalization_check(seed=seed),
        volume_formula_check(seed=seed),
        pairwise_trend_check(),
    ]
