"""Multi-source activity indices and reduced-rank spatial filters for the
EEG/MEG inverse problem: spectrum-based source counting and rank selection,
greedy multi-source localization, and LCMV / MV-PURE reconstruction."""

__version__ = "0.1.0"

from .beamformer import (
    SpatialFilter,
    apply_filter,
    filter_mse,
    make_filter,
    make_lcmv,
    make_mvp,
)
from .indices import (
    IndexKernel,
    KernelFactory,
    build_kernel,
    mai,
    mai_ext,
    mai_mvp,
    mpz,
    mpz_ext,
    mpz_mvp,
)
from .localizer import LocalizationResult, localize_bruteforce, localize_iterative
from .model import (
    Covariance,
    Epochs,
    LeadField,
    Scenario,
    SourceSet,
    regularize,
    sample_covariance,
    simulate_epochs,
    subset_leadfield,
    synth_scenario,
)
from .spectrum import (
    SpectrumReport,
    analyze,
    epsilon_resolution_loss,
    estimate_num_sources,
    rn_eigenvalues,
    suggest_rank,
)

__all__ = [
    "__version__",
    "SpatialFilter",
    "apply_filter",
    "filter_mse",
    "make_filter",
    "make_lcmv",
    "make_mvp",
    "IndexKernel",
    "KernelFactory",
    "build_kernel",
    "mai",
    "mai_ext",
    "mai_mvp",
    "mpz",
    "mpz_ext",
    "mpz_mvp",
    "LocalizationResult",
    "localize_bruteforce",
    "localize_iterative",
    "Covariance",
    "Epochs",
    "LeadField",
    "Scenario",
    "SourceSet",
    "regularize",
    "sample_covariance",
    "simulate_epochs",
    "subset_leadfield",
    "synth_scenario",
    "SpectrumReport",
    "analyze",
    "epsilon_resolution_loss",
    "estimate_num_sources",
    "rn_eigenvalues",
    "suggest_rank",
]
