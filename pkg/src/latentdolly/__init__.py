"""Deterministic numerical toolkit for training-free noise
initialization in dynamic view synthesis: zero-terminal-SNR schedule
analysis, recursive noise representations with closed forms, DDIM
inversion/sampling, depth-based reprojection, and stochastic latent
modulation over occluded regions."""

from .ddim import (
    Denoiser,
    LinearDenoiser,
    OracleDenoiser,
    StepPlan,
    ZeroDenoiser,
    convert_prediction,
    ddim_invert_step,
    ddim_step,
    invert,
    inversion_plan,
    sample,
    sampling_plan,
)
from .errors import (
    CollapseError,
    ConfigError,
    DegenerateInputError,
    DegenerateScheduleError,
    DimensionError,
    EmptyCloudError,
    FormatError,
    LatentDollyError,
    NoVisibleSourceError,
    ParameterError,
    TimestepIndexError,
    TruncationError,
    UnsupportedFormatError,
)
from .geometry import (
    Intrinsics,
    PointCloud,
    Pose,
    RenderOutput,
    TrajectorySpec,
    canonical_trajectories,
    downsample_mask_to_latent,
    near_depth_mask,
    project_splat,
    render_sequence,
    transform_points,
    unproject,
)
from .krnr import (
    DEFAULT_DELTA,
    DEFAULT_K,
    KrnrCoefficients,
    adaptive_krnr,
    krnr_closed_continuous,
    krnr_closed_discrete,
    krnr_coefficients,
    krnr_recursive,
)
from .pipeline import PipelineConfig, ToyCodec, ablation_sweep, make_toy_scene, run_dvs
from .rng import Rng
from .schedule import (
    NoiseSchedule,
    default_schedule,
    forward_diffuse,
    interpolate_init,
    make_schedule,
    rescale_zero_terminal_snr,
    snr,
    strength_to_index,
)
from .slm import ModulationInputs, modulate, sampling_mask
from .tensor import (
    BinaryMask,
    LatentTensor,
    TensorStats,
    adain,
    cosine,
    gaussian,
    norm_deviation,
    stats,
)

__version__ = "0.1.0"
