"""SINR and rate coverage of millimeter-wave cellular networks.

Two independent routes: numerical evaluation of the coverage integrals
(:mod:`mmcov.analytic`) and Monte-Carlo simulation of the Poisson network
(:mod:`mmcov.montecarlo`).
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DivergenceError,
    DomainError,
    InfiniteMeanCount,
    MmcovError,
    QuadratureError,
    ScenarioError,
)
from .model import (  # noqa: E402
    BallLos,
    DirectivityPmf,
    ExponentialLos,
    FadingParams,
    NetworkConfig,
    PathLossParams,
    SectoredAntenna,
    TabulatedLos,
    directivity_pmf,
    mmwave_config,
)
from .analytic import CoverageCurve, AssocReport  # noqa: E402

__all__ = [
    "__version__",
    "AssocReport",
    "BallLos",
    "CoverageCurve",
    "DirectivityPmf",
    "DivergenceError",
    "DomainError",
    "ExponentialLos",
    "FadingParams",
    "InfiniteMeanCount",
    "MmcovError",
    "NetworkConfig",
    "PathLossParams",
    "QuadratureError",
    "ScenarioError",
    "SectoredAntenna",
    "TabulatedLos",
    "directivity_pmf",
    "mmwave_config",
]
