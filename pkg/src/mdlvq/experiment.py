"""Glue between configuration, design, labeling and simulation.

A sweep re-runs the whole pipeline per swept loss value: the cell volume is
recomputed from the closed form, index values re-snapped to admissible ones,
the assignment rebuilt for the new channel and the simulation repeated with
the identical seed protocol (common random numbers across sweep points).
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ExperimentConfig
from .design import (DesignParams, default_expansion_factor, design_quantizers,
                     gaussian_source, SourceModel)
from .labeling import IndexAssignment, QuantizerSetup, assign, quantizer_setup
from .lattices import lattice
from .loss_model import ChannelModel, channel
from .simulate import SimConfig, SimReport, run


def source_for(cfg: ExperimentConfig) -> SourceModel:
    return gaussian_source(cfg.dim, cfg.variance)


def psi_for(cfg: ExperimentConfig) -> float:
    if cfg.psi is not None:
        return cfg.psi
    return default_expansion_factor(cfg.dim, cfg.descriptions)


def design_for(cfg: ExperimentConfig, ch: ChannelModel | None = None) -> DesignParams:
    if cfg.rate_target is None:
        raise ValueError("design needs a rate_target")
    return design_quantizers(source_for(cfg), ch or channel(cfg.loss),
                             lattice(cfg.lattice), cfg.rate_target,
                             cfg.rate_fractions, psi_for(cfg))


def setup_for(cfg: ExperimentConfig,
              design: DesignParams | None = None) -> QuantizerSetup:
    """Resolve the quantizer geometry: explicit indices win over the design."""
    if cfg.indices is not None:
        indices = cfg.indices
        if cfg.nu is not None:
            nu = cfg.nu
        elif cfg.rate_target is not None:
            src = source_for(cfg)
            prod = 1.0
            for n in indices:
                prod *= float(n)
            nu = (2.0 ** (cfg.dim * (src.entropy - cfg.rate_target / len(indices)))
                  * prod ** (-1.0 / len(indices)))
        else:
            nu = lattice(cfg.lattice).cell_volume
    else:
        if design is None:
            design = design_for(cfg)
        indices = design.index_snapped
        nu = cfg.nu if cfg.nu is not None else design.nu_rescaled
    return quantizer_setup(cfg.lattice, indices, nu=nu)


def assignment_for(cfg: ExperimentConfig,
                   design: DesignParams | None = None) -> IndexAssignment:
    if design is None and cfg.indices is None:
        design = design_for(cfg)
    setup = setup_for(cfg, design)
    return assign(setup, channel(cfg.loss), psi_for(cfg), npi_cap=cfg.cap)


def run_experiment(cfg: ExperimentConfig) -> tuple[DesignParams | None,
                                                   IndexAssignment, SimReport]:
    design = None if cfg.indices is not None else design_for(cfg)
    asg = assignment_for(cfg, design)
    sim = SimConfig(cfg.count, cfg.seed, source_for(cfg), channel(cfg.loss), asg)
    return design, asg, run(sim)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    design: DesignParams
    assignment: IndexAssignment
    report: SimReport


def sweep_experiment(cfg: ExperimentConfig, param_index: int,
                     values) -> list[SweepPoint]:
    """Re-design, re-assign and re-simulate for each swept loss probability."""
    k = cfg.descriptions
    if not 0 <= param_index < k:
        raise ValueError(f"swept index must be in 0..{k - 1}")
    if cfg.rate_target is None:
        raise ValueError("sweeps re-derive the design and need a rate_target")
    out = []
    for v in values:
        v = float(v)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"swept probability {v} outside [0, 1]")
        loss = list(cfg.loss)
        loss[param_index] = v
        ch = channel(loss)
        design = design_quantizers(source_for(cfg), ch, lattice(cfg.lattice),
                                   cfg.rate_target, cfg.rate_fractions,
                                   psi_for(cfg))
        setup = quantizer_setup(cfg.lattice, design.index_snapped,
                                nu=design.nu_rescaled)
        asg = assign(setup, ch, psi_for(cfg), npi_cap=cfg.cap)
        sim = SimConfig(cfg.count, cfg.seed, source_for(cfg), ch, asg)
        out.append(SweepPoint(v, design, asg, run(sim)))
    return out
