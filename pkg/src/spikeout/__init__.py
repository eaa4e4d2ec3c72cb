"""Synthetic high-dimensional outlier models and PCA-limit verification."""

from .errors import (
    CapabilityError,
    ConfigurationError,
    DataError,
    RunError,
    SpikeoutError,
    UnsupportedCaseError,
)
from .geometry import (
    GeometryReport,
    GeometryScenario,
    LimitDistribution,
    build_geometry_spec,
    empirical_geometry,
    limit_distance,
    limit_norm,
    transition_sweep,
)
from .model import (
    Basis,
    DirectionSpec,
    GeneratedDataset,
    MixtureModelSpec,
    build_scale_mixture,
    build_shifted,
    build_variable_specific,
    draw_memberships,
    generate,
)
from .consistency import (
    RegimeReport,
    TierStructure,
    angle_to_subspace,
    asymptotic_eigenvalue,
    classify_regime,
    eigenvalue_checks,
    eigenvector_checks,
    mp_bulk_bounds,
    outlier_score,
    population_eigenvalue,
    singleton_tiers,
    subspace_energy,
)
from .spectra import SpectralDecomposition, ab_split_eigenvalues, sample_covariance_spectrum

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
