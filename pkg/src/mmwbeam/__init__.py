"""Analog SISO and MIMO beamforming for millimeter-wave matrix and tensor channels."""
from .channel import (BlockPartition, ChannelTensor, as_tensor, beamformed_fir, canonical_phase,
                      mode_multiply, random_gaussian_matrix, random_gaussian_tensor, svd_oracle,
                      tensor_from_json, tensor_to_json)
from .harness import (EnsembleStats, ExperimentSpec, GridOracleSpec, compare_ensembles, grid_oracle,
                      run_ensemble)
from .mimo import (MimoResult, SplitBeamSet, als_shared, als_split_matrix, als_split_tensor,
                   build_det_matrix, capacity_proxy, greedy_pairing, high_snr_capacity, ideal_gain_db)
from .siso import SisoResult, SolverConfig, als_tensor, hopm, power_method

__version__ = "0.1.0"
