"""wgmlab: coupled whispering-gallery-mode doublet simulation and analysis.

Forward model: subwavelength Rayleigh scatterers coupling the degenerate
counterpropagating modes of a high-Q microsphere into split standing-wave
doublets.  Inverse tools: Lorentzian doublet fitting, scan regressions,
and scatterer-size inference from the splitting-to-broadening ratio.
"""

from .analysis import (
    DoubletFit,
    ScanSeries,
    fit_doublet,
    fit_gaussian_profile,
    fit_quadratic,
    fit_sinusoid,
    infer_scatterer_radius,
    polarizability_from_ratio,
)
from .config import ExperimentConfig, load_config, save_config
from .engine import (
    Eigenmode,
    Generator,
    ScattererPlacement,
    Spectrum,
    build_generator,
    doublet_splitting,
    eigenmodes,
    spectrum,
    steady_state,
    time_evolution,
)
from .errors import ConfigError, DomainError, EngineError, FitError, WgmlabError
from .geometry import (
    Position,
    WgmMode,
    effective_polarizability,
    equatorial_period,
    mode_amplitude,
    standing_wave_weight,
)
from .physics import (
    OpticalContext,
    Regime,
    ScattererSpec,
    backscatter_budget,
    classify_regime,
    coupling_rates,
    free_space_scattering_rate,
    polarizability,
    purcell_factor,
    radius_from_polarizability,
    rayleigh_cross_section,
)
from .scans import (
    ScanResult,
    ScanRow,
    run_equatorial_scan,
    run_polar_scan,
    run_radial_scan,
    run_spectrum,
    run_weak_to_strong,
)

__version__ = "0.1.0"
