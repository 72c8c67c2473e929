"""Design and simulation toolkit for n-channel asymmetric multiple-description
lattice vector quantizers."""

__version__ = "0.1.0"

from .design import (DesignParams, DistortionPrediction, InfeasibleDesignError,
                     SourceModel, custom_source, default_expansion_factor,
                     design_quantizers, gaussian_source, optimal_indices,
                     optimal_nu, predict_distortion, rates, snap_and_rescale,
                     tau_star)
from .labeling import (Coset, IndexAssignment, QuantizerSetup, TupleCandidate,
                       alpha, alpha_inverse, assign, build_candidates,
                       coset_of, cost_model, load_assignment, pair_cost,
                       quantizer_setup, save_assignment, side_distortion,
                       tuple_region_volume)
from .lattices import (Lattice, LatticePoint, dnorm2, lattice, nearest_point,
                       second_moment_mc, sphere_second_moment)
from .loss_model import (ChannelModel, SubsetWeights, aggregates, all_weights,
                         channel, subset_prob, weights)
from .simulate import (SimConfig, SimReport, SubsetStat, decode, encode, erase,
                       generate, run)
from .sublattices import (NotCleanError, SimilaritySpec, SublatticeSpec,
                          admissible_indices, enumerate_in_cell, is_clean,
                          product_lattice, similar_sublattice)

__all__ = [name for name in dir() if not name.startswith("_")]
