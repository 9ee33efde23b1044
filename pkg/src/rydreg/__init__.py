"""Phase-encoded Rydberg p-state registers: hiding and recovery by impulsive kicks."""
from .basis import (
    AU_TIME_PS, BasisSet, ConfigurationError, GridSpec, IntegrationError, QuantumDefects,
    RadialFunction, RydbergLevel, build_basis, kepler_period, level_energy, radial_integral,
    radial_wavefunction,
)
from .kick import KickConvergenceError, KickOperator, angular_coupling, first_order_kick, kick_matrix, unitarity_defect
from .register import (
    EncodeSpec, PulseSequence, ReferenceSpec, WavePacket, apply_kick, encode_register, free_evolve,
    holographic_populations, run_sequence,
)
from .measurement import ScanDataset, SsfiModel, TauGrid, add_noise, ssfi_bin, tau_scan
from .analysis import (
    CorrelationFit, InfoReport, analyze, fit_correlation, info_bits, phase_uncertainty,
    predicted_amplitude, total_info, windowed_correlation,
)
from .config import RydregConfig, __version__, load_config
