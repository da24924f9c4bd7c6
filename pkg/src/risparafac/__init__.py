"""PARAFAC-based ALS channel estimation for RIS-assisted multi-user MISO downlinks."""

from .channel_model import (
    ChannelPair,
    NoiseSpec,
    ReceivedTensor,
    SystemDims,
    dft_phase,
    generate_channels,
    generate_pilots,
    noiseless_slices,
    observe,
    remove_pilots,
    stack_mode1,
    stack_mode2,
    synthesize_received,
)
from .errors import (
    DegenerateInputError,
    DegenerateScalingError,
    DimensionError,
    FeasibilityError,
    IllPosedUpdateError,
)
from .estimator import (
    AlsConfig,
    EstimationResult,
    als_estimate,
    als_step_h1,
    als_step_h2,
    check_feasibility,
    genie_ls_h1,
    genie_ls_h2,
    init_h1,
)
from .harness import SweepConfig, SweepResult, emit_results, run_sweep, run_trial, trial_seeds
from .metrics import NmseRecord, aligned_nmse, nmse, normalize_first_column
from .tensor_core import khatri_rao, pseudo_inverse, unfold_mode1, unfold_mode2, unfold_mode3

__version__ = "0.1.0"
