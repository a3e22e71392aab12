"""Downlink massive-MIMO channel reconstruction from PMI feedback and one SRS column."""
from .angles import AngleGrid, aod_nullproj_ula, aod_nullproj_upa, dominant_aoas
from .arrays import ArrayConfig, AngleRangeError, DimensionError, ula_response, upa_response
from .channel import ClusterConfig, NoiseModel, random_channel, srs_observe
from .codebook import PmiCodebook, build_dft_codebook, quantize
from .csi_rs import PortConfig, beamforming_matrix, observe_csi_rs, widebeam_weights
from .evaluation import EvalReport, spectral_efficiency, svd_beamformer
from .experiment import ExperimentConfig, ConfigError, load_config, run_experiment
from .reconstruction import TECHNIQUES, ReconInput, ReconParams, reconstruct
from .solver import RegularizedProblem, solve_irls, solve_tikhonov

__version__ = "0.1.0"
