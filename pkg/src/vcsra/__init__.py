"""Link-level simulator and analytics for virtual-carrier-sensing based
random access in single-cell massive MIMO."""

__version__ = "0.1.0"

from .analytic import (
    AnalyticParams,
    AvailabilityTarget,
    EmpiricalAvailabilityCurve,
    InterferenceTarget,
    asymptotic_rate,
    asymptotic_sinr_cb,
    asymptotic_sinr_zf,
    calibrate_lambda,
    p_av_multi,
    p_av_single,
    pdf_ybar,
    ra_interference_expectation,
)
from .beamforming import BeamformerSet, cb_beamformers, make_beamformers, orthogonal_complement, zf_beamformers
from .channel import (
    ChannelSet,
    PracticalChannelParams,
    SimplifiedChannelParams,
    build_channel_set,
    covariance_traces,
    draw_practical_channel,
    draw_simplified_channel,
    steering_vector,
)
from .config import ScenarioConfig, parse_config
from .montecarlo import (
    ExperimentSpec,
    PavEstimate,
    RateReport,
    estimate_p_av,
    estimate_p_sc_curve,
    estimate_rates,
    reproduce_figure,
    sweep,
)
from .numerics import (
    OrthogonalCode,
    RngStream,
    db_to_linear,
    hadamard,
    linear_to_db,
    orthonormal_real_basis,
    pseudo_inverse_left,
    sample_complex_gaussian,
    upper_incomplete_gamma_int,
)
from .uplink import (
    SinrBreakdown,
    UplinkConfig,
    assigned_sinr_cb,
    assigned_sinr_zf,
    instantaneous_rate,
    ra_sinr,
)
from .vcs import (
    AdmittedRaSample,
    SensingOutcome,
    VcsSignal,
    build_virtual_carrier,
    decide,
    multi_channel_select,
    ra_receive,
    sample_admitted_ra_ues,
    sensing_outcome,
    sensing_strength,
)
