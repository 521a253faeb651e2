"""Spectra, ground-state constructions and diagnostics for one-dimensional
discrete Schrodinger operators with random and quasi-periodic potentials."""

from .constructor import (
    ConstructorParams,
    GroundStateCertificate,
    construct,
    sweep_interval,
    verify_certificate,
)
from .errors import (
    IllConditionedError,
    InvalidInput,
    NumericFailure,
    ParametersInadmissible,
    PoleError,
    RandschrodError,
    SpectralRegimeError,
)
from .moebius import (
    TrappingIntervals,
    classify_positive_orbit,
    covering_check,
    fixed_points,
    lambda_admissible,
)
from .quasiperiodic import (
    QPBackground,
    QPConstructParams,
    invariant_sections,
    qp_construct,
    qp_sweep_interval,
    top_energy,
)
from .spectrum import (
    MCParams,
    RealizationWindow,
    SiteSupport,
    SpectrumSet,
    anderson_almost_sure_spectrum,
    eigenvalue_count_in_interval,
    mc_essential_spectrum,
    support_monotonicity_check,
    truncated_spectrum,
)
from .weyl import HalfLineWindow, m_function, negativity_monotonicity_scan
from .wordtree import AdmissibleTree, build_tree, dimension_lower_bound, holder_check

__version__ = "0.1.0"

__all__ = [
    "AdmissibleTree",
    "ConstructorParams",
    "GroundStateCertificate",
    "HalfLineWindow",
    "IllConditionedError",
    "InvalidInput",
    "MCParams",
    "NumericFailure",
    "ParametersInadmissible",
    "PoleError",
    "QPBackground",
    "QPConstructParams",
    "RandschrodError",
    "RealizationWindow",
    "SiteSupport",
    "SpectralRegimeError",
    "SpectrumSet",
    "TrappingIntervals",
    "anderson_almost_sure_spectrum",
    "build_tree",
    "classify_positive_orbit",
    "construct",
    "covering_check",
    "dimension_lower_bound",
    "eigenvalue_count_in_interval",
    "fixed_points",
    "holder_check",
    "invariant_sections",
    "lambda_admissible",
    "m_function",
    "mc_essential_spectrum",
    "negativity_monotonicity_scan",
    "qp_construct",
    "qp_sweep_interval",
    "support_monotonicity_check",
    "sweep_interval",
    "top_energy",
    "truncated_spectrum",
    "verify_certificate",
]
