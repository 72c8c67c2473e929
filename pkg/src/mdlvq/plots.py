"""Figure rendering for the report paths.

Every figure is written next to its CSV with the same stem.  Rendering is
headless (Agg) and carries no timestamps.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .labeling import IndexAssignment, side_distortion  # noqa: E402
from .simulate import SimReport  # noqa: E402


def sweep_figure(points, param_name: str, path) -> None:
    """Empirical vs predicted total distortion across the swept probability."""
    xs = [p.value for p in points]
    emp = [p.report.total for p in points]
    pred = [p.report.predicted.total for p in points]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(xs, pred, "-", color="0.35", label="prediction")
    ax.semilogy(xs, emp, "o", color="C0", markersize=5, label="simulation")
    ax.set_xlabel(f"loss probability {param_name}")
    ax.set_ylabel("expected distortion (per dimension)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def simulate_figure(report: SimReport, asg: IndexAssignment, path,
                    mean_power: float | None = None) -> None:
    """Per-subset conditional distortion, measured against the table values."""
    subsets = sorted(report.per_subset, key=lambda s: (len(s), s))
    labels, emp, err = [], [], []
    pred_pos, pred_val = [], []
    d_c = (asg.setup.central.second_moment
           * asg.setup.nu ** (2.0 / asg.setup.central.dim))
    for i, s in enumerate(subsets):
        stat = report.per_subset[s]
        labels.append("{" + ",".join(map(str, s)) + "}" if s else "none")
        emp.append(stat.distortion)
        err.append(3.0 * stat.std_err)
        if s:
            pred_pos.append(i)
            pred_val.append(d_c + side_distortion(asg, s))
        elif mean_power is not None:
            pred_pos.append(i)
            pred_val.append(mean_power)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    pos = range(len(labels))
    ax.bar(pos, emp, width=0.6, color="C0", alpha=0.8, label="simulation")
    ax.errorbar(pos, emp, yerr=err, fmt="none", ecolor="0.2", capsize=3)
    ax.plot(pred_pos, pred_val, "_", color="C3", markersize=18,
            markeredgewidth=2, label="table prediction")
    ax.set_xticks(list(pos))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("conditional distortion")
    ax.set_yscale("log")
    ax.grid(True, axis="y", which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
