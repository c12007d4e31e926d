"""Empirical sub-GHz LPWAN propagation channel model toolkit.

Fits a log-distance pathloss model plus a two-component fading model
(white small-scale, spatially correlated AR(1) large-scale) from
SigMF-annotated frame datasets, validates the fit, and generates
correlated synthetic SNR traces for simulators.
"""

from ._kernels import USING_NUMBA
from .errors import (
    DecompositionError,
    DegenerateSeriesError,
    FactorizationError,
    InsufficientDataError,
    InvalidRecordError,
    LoraChanError,
    SampleWindowError,
    SigmfParseError,
    SingularDesignError,
    TraceConfigError,
    UnknownReceiverError,
    UnsupportedFormatError,
)
from .fading import (
    FadingModel,
    LargeScaleSeries,
    PhiEstimate,
    SigmaXEstimate,
    autocovariance,
    derive_sigma_y,
    estimate_phi,
    innovation_variance,
    local_average_bins,
    pool_sigma_x,
    rescale_step,
    small_scale_residuals,
)
from .geo import compute_distance, horizontal_distance
from .ingest import (
    ReceiverConfig,
    build_snr_series,
    estimate_snr_from_iq,
    load_dataset,
    load_receiver_config,
)
from .pathloss import (
    PathlossModel,
    fit_gaussian,
    fit_log_distance,
    predict_mean_snr,
    residuals_z,
)
from .pipeline import ScenarioFit, ScenarioValidation, fit_scenario, validate_scenario
from .records import FrameRecord, GeoFix, Scenario, SnrSeries
from .sigmf_io import (
    DEFAULT_FIELD_MAP,
    SigmfParseResult,
    encode_iq,
    load_iq_window,
    parse_sigmf,
    serialize_sigmf,
)
from .synth import synth_series, write_sigmf_dataset
from .tracegen import (
    ChannelTrace,
    ScenarioModel,
    TraceConfig,
    TraceMode,
    build_covariance,
    build_mean,
    generate,
    generate_ar,
    generate_mvn,
    packet_success,
    read_trace_binary,
    write_trace_binary,
    write_trace_csv,
)
from .validation import (
    HATA_OKUMURA_URBAN_EXPONENT,
    ClosureReport,
    ResidualReport,
    acf_with_bounds,
    ar_residuals,
    closure_report,
    normality_stat,
    residual_report,
)

__version__ = "0.1.0"
