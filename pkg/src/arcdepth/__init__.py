"""Single-hydrophone acoustic source depth estimation for Arctic-type
surface-duct waveguides: normal modes, rays, warping-based modal
separation, and three depth estimators."""

from .env import (
    Bathymetry,
    BottomHalfspace,
    Environment,
    SoundSpeedProfile,
    load_environment,
    make_arctic_profile,
    save_environment,
    ssp_at,
)
from .estimate import (
    AmbiguitySurface,
    ApplicabilityReport,
    DepthEstimate,
    applicability_report,
    estimate_depth_amplitude,
    estimate_depth_cutoff,
    estimate_depth_tdoa,
)
from .modes import (
    CutoffCurve,
    DispersionTable,
    Mode,
    ModeSet,
    cutoff_curve,
    dispersion_table,
    eigenfunction_extent,
    group_speed,
    solve_modes,
    synthesize_field,
    warped_tone_guides,
)
from .rays import (
    Arrival,
    ArrivalStructure,
    ClusterTimes,
    RayPath,
    deep_angle_grid,
    find_eigenrays,
    four_ray_cluster,
    tdoa_signature,
    trace_ray,
)
from .sigproc import (
    ModeAmplitudeMatrix,
    ModeSignal,
    PulseSignal,
    Spectrogram,
    UpperLimit,
    WarpingSpec,
    detect_multipath,
    extract_dispersion,
    extract_mode_amplitudes,
    make_pulse,
    mode_upper_limit,
    pulse_spectrum,
    read_signal,
    render_arrivals,
    separate_modes,
    stft_spectrogram,
    unwarp,
    warp,
    write_signal,
)

__version__ = "0.1.0"
