"""Exact finite-mesh laws of dimer height change on toroidal Temperleyan
graphs, via twisted-Laplacian determinants, with combinatorial and analytic
cross-checks and a Monte Carlo sampler."""

from .crsf import (Crsf, dual_crsf, enumerate_crsfs, enumerate_vector_fields,
                   is_incompressible, make_crsf, mc_height_law, wilson_sample)
from .dimer_height import (Matching, class_of, d_omega, enumerate_matchings,
                           homology_basis_walks, one_form, periods,
                           temperley_back, temperley_forward)
from .distribution import (HeightLaw, char_fun, convergence_sweep,
                           height_law_exact, height_law_spectral, law_to_json,
                           tv_distance, zhat)
from .special_functions import (dedekind_eta, discrete_gaussian,
                                heat_kernel_log_ratio,
                                poisson_identity_residual, signed_gaussian_sum,
                                theta_odd, torsion)
from .torus_graph import (Edge, GraphError, HomologyClass, TemperleyanGraph,
                          TorusGraph, build_square_torus, dual_graph,
                          load_graph, reverse_graph, save_graph, temperleyan)
from .transfer_operator import (CyclePair, TransferMatrices, choose_cycles,
                                fredholm_det, op_norm_inf, poisson_matrices,
                                verify_fred)
from .twisted_laplacian import (Character, LogDet, assemble, det_spectral,
                                determinant, forman_sum)

__version__ = "0.1.0"
