"""Spectral traces of subordinated heat semigroups on model compact manifolds."""

__version__ = "0.1.0"

from .asymptotics import (
    CountingFunction,
    RatioReport,
    RatioRow,
    heat_trace_asymptote,
    laplace_constants,
    ratio_table,
    stable_asymptotes,
    subordinated_counting_asymptote,
    tauberian_check,
    theorem_asymptote,
    weyl_asymptote,
)
from .bernstein import (
    BernsteinFunction,
    GrowthCertificate,
    LevyMeasureSpec,
    psi_eval,
    psi_inverse,
    rv_index_estimate,
    subordinator_density_half,
)
from .errors import (
    DivergentTrace,
    DomainError,
    QuadratureError,
    ResourceExceeded,
    SpecParseError,
    SubtraceError,
)
from .spectra import (
    ManifoldSpectrum,
    SpectralBlock,
    counting,
    counting_upper_bound,
    enumerate_spectrum,
    spectrum_arrays,
    weyl_constant,
)
from .trace_engine import (
    CertifiedValue,
    counting_subordinated,
    diagonal_heat_value,
    partial_trace,
    trace,
    trace_via_subordination,
)

__all__ = [
    "__version__",
    "CountingFunction",
    "RatioReport",
    "RatioRow",
    "heat_trace_asymptote",
    "laplace_constants",
    "ratio_table",
    "stable_asymptotes",
    "subordinated_counting_asymptote",
    "tauberian_check",
    "theorem_asymptote",
    "weyl_asymptote",
    "BernsteinFunction",
    "GrowthCertificate",
    "LevyMeasureSpec",
    "psi_eval",
    "psi_inverse",
    "rv_index_estimate",
    "subordinator_density_half",
    "DivergentTrace",
    "DomainError",
    "QuadratureError",
    "ResourceExceeded",
    "SpecParseError",
    "SubtraceError",
    "ManifoldSpectrum",
    "SpectralBlock",
    "counting",
    "counting_upper_bound",
    "enumerate_spectrum",
    "spectrum_arrays",
    "weyl_constant",
    "CertifiedValue",
    "counting_subordinated",
    "diagonal_heat_value",
    "partial_trace",
    "trace",
    "trace_via_subordination",
]
