"""Single-electron-spin detection through a superconducting microwave resonator.

Simulation and inference toolkit covering the full chain from device design
to spin discrimination:

- :mod:`spindetect.spins` — NV-center and bismuth-donor Hamiltonians, level
  diagrams, transition matrix elements, resonance-field searches.
- :mod:`spindetect.device` — nanowire zero-point field, kinetic inductance,
  coupling and measurement-time estimates.
- :mod:`spindetect.dynamics` — spin-resonator master equation, stochastic
  homodyne records, full (spin x cavity) reference model.
- :mod:`spindetect.detection` — integrated-signal thresholding, Bayesian
  filtering, Monte Carlo error curves.
- :mod:`spindetect.cli` — command-line front end (design / levels /
  simulate / ensemble).
"""

from .config import (
    RunConfig,
    config_from_preset,
    load_config,
    parse_config,
    serialize_config,
)
from .constants import CONSTANTS, TWO_PI
from .detection import (
    EnsembleStats,
    IntegratedSignal,
    PosteriorTrace,
    analytic_error,
    bayes_filter,
    bayes_speedup,
    corrected_error,
    error_crossing_time,
    integrate_signal,
    run_ensemble,
    signal_means,
    threshold_classify,
    threshold_value,
    zeta_variances,
)
from .device import (
    NanowireGeometry,
    ResonatorParams,
    design_report,
    efficiency_from_noise_photons,
    field_map,
    kinetic_inductance,
    measurement_time_tau1,
    noise_photons,
    purcell_rate,
    rect_wire_field,
    zero_point_current,
)
from .dynamics import (
    HomodyneRecord,
    ModelParams,
    TrajectoryResult,
    default_sme_dt,
    generate_record,
    output_noise_integral,
    saturation_drive,
    steady_sigma_minus,
    steady_sigma_z,
    steady_state_effective,
)
from .errors import (
    BracketError,
    ConfigError,
    FockTruncationError,
    NumericalFailure,
    PositivityError,
)
from .numerics import GaussianStream, gaussian_increment, hermitian_eig
from .presets import bi_bundle, device_bundle, nv_bundle, sim_model
from .spins import (
    BiParams,
    NVParams,
    bi_hamiltonian,
    coupling_constant,
    find_transition,
    nv_hamiltonian,
    resonance_field_search,
    spin_operators,
    sweep_levels,
    transition_elements,
)

__version__ = "1.0.0"

__all__ = [
    "BiParams",
    "BracketError",
    "CONSTANTS",
    "ConfigError",
    "EnsembleStats",
    "FockTruncationError",
    "GaussianStream",
    "HomodyneRecord",
    "IntegratedSignal",
    "ModelParams",
    "NVParams",
    "NanowireGeometry",
    "NumericalFailure",
    "PositivityError",
    "PosteriorTrace",
    "ResonatorParams",
    "RunConfig",
    "TWO_PI",
    "TrajectoryResult",
    "__version__",
    "analytic_error",
    "bayes_filter",
    "bayes_speedup",
    "bi_bundle",
    "bi_hamiltonian",
    "config_from_preset",
    "corrected_error",
    "coupling_constant",
    "default_sme_dt",
    "design_report",
    "device_bundle",
    "efficiency_from_noise_photons",
    "error_crossing_time",
    "field_map",
    "find_transition",
    "gaussian_increment",
    "generate_record",
    "hermitian_eig",
    "integrate_signal",
    "kinetic_inductance",
    "load_config",
    "measurement_time_tau1",
    "noise_photons",
    "nv_bundle",
    "nv_hamiltonian",
    "output_noise_integral",
    "parse_config",
    "purcell_rate",
    "rect_wire_field",
    "resonance_field_search",
    "run_ensemble",
    "saturation_drive",
    "serialize_config",
    "signal_means",
    "sim_model",
    "spin_operators",
    "steady_sigma_minus",
    "steady_sigma_z",
    "steady_state_effective",
    "sweep_levels",
    "threshold_classify",
    "threshold_value",
    "transition_elements",
    "zero_point_current",
    "zeta_variances",
]
