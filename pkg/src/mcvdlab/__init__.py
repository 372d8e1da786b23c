"""Diffusive molecular-communication link laboratory.

Channel synthesis (channel), non-coherent per-symbol metrics (metrics),
Gaussian decision theory (bayes), detectors from Parzen-window PNN to
MAP sequence detection (detectors), and seeded Monte Carlo BER
experiments (harness).
"""

from .bayes import (
    BerReport,
    GaussianClassStats,
    compare_dimensions,
    decision_value,
    estimate_stats,
    log_likelihood,
    std_normal_cdf,
    theoretical_ber,
)
from .channel import (
    ChannelParams,
    DiscreteCIR,
    NoiseModel,
    ReceivedTrace,
    TimingConfig,
    cir_eval,
    default_isi_length,
    discretize_cir,
    simulate_rx,
    snr_to_sigma,
)
from .detectors import (
    PatternLayer,
    PilotBlock,
    ViterbiConfig,
    cir_pilot_estimate,
    class_scores,
    gaussian_plugin_detect,
    kernel,
    linear_detect,
    linear_threshold_from_pilot,
    map_viterbi_detect,
    pnn_detect,
    pnn_train,
    smooth_param,
)
from .harness import (
    BerResult,
    ExperimentConfig,
    SweepResult,
    calibrate_stats,
    read_results,
    run_point,
    run_sweep,
    wilson_interval,
    write_results,
)
from .metrics import (
    MetricConfig,
    ReductionMatrix,
    conc_diff,
    extract,
    extract_all,
    inflexion,
    linear_combine,
    reduce,
    rising_edge,
)

__version__ = "0.1.0"
