"""modleak: quantifying hidden multi-dimensional modulation in QKD sources.

A phase modulator with finite bandwidth imprints a time-dependent phase
across each optical pulse, coupling the polarization encoding to the
temporal mode.  This package measures the resulting departure from the
qubit model (epsilon), derives the unambiguous-discrimination attack
surface it opens, and propagates certified bounds through a full
decoy-state MDI-QKD key-rate analysis: gain simulation, LP yield
bounds, a phase-error SDP with duality certificates, and distance
sweeps.
"""

from .profiles import (
    ALIGN_CENTROID,
    ALIGN_FIXED,
    ALIGN_MAX_FIDELITY,
    FilterCascadeSpec,
    GaussianPulseSpec,
    ModulatorSpec,
    TemporalProfile,
    TimeGrid,
    align_profiles,
    average_phase,
    default_grid,
    gaussian_intensity,
    load_profile_csv,
    phase_from_intensity,
    spline_resample,
    square_intensity,
    synthesize_phase_profile,
)
from .qstate import (
    EncodedState,
    GramMatrix,
    QubitApproximation,
    epsilon,
    epsilon_scan,
    joint_gram,
    make_bb84_states,
    make_ideal_bb84,
    mode_overlaps,
    overlap,
)
from .usd import (
    FiniteState,
    PovmElement,
    exclusion_projector,
    flawed_three_state,
    linear_independence,
    usd_povm,
)
from .mdi_channel import (
    ChannelParams,
    GainTable,
    IntensitySet,
    gain_table,
    pass_probability,
    single_photon_pass_oracle,
)
from .decoy import (
    MODE_DECOY_LP,
    MODE_ORACLE,
    LpInfeasibleError,
    PassBounds,
    pass_bounds,
    y11_bounds,
)
from .phase_error_sdp import (
    SdpProblem,
    SdpSolution,
    assemble,
    solve,
)
from .keyrate import (
    KeyRatePoint,
    PipelineConfig,
    binary_entropy,
    build_states,
    evaluate_distance,
    find_max_distance,
    key_rate,
    max_distance,
    sweep,
)

__version__ = "0.1.0"
