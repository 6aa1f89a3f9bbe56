"""Classify global dynamics of scalar transition equations.

The package builds scalar fields from expression text, integrates them
with a dense-output Runge-Kutta scheme, recovers hyperbolic solutions of
the limit equations, classifies transition scenarios (tracking versus
tipping) and locates critical parameter values by bisection.
"""

from .bifurcate import (
    CriticalValue,
    TippingPair,
    bisect,
    candidate_brackets,
    find_tipping_pair,
    sweep,
)
from .classify import (
    Classification,
    ClassifyOptions,
    TransitionScenario,
    check_approach,
    classify,
)
from .errors import (
    ApproachToleranceError,
    BisectionError,
    BracketNotFound,
    ClassificationError,
    ConfigError,
    DomainError,
    NoConvergence,
    NonHyperbolicLimit,
    ParseError,
    ScenarioError,
    SeedEscaped,
    SeparationFailure,
    TipcastError,
    UnboundParameterError,
    WrongStabilitySign,
)
from .expr import FieldExpr, ScalarField, parse, parse_field
from .integrate import SolverOptions, Trajectory, integrate
from .limits import (
    HyperbolicEstimate,
    LimitStructure,
    LimitWindow,
    limit_structure,
)
from .scenarios import CATALOG, build, from_config, harvest_threshold
from .transitions import (
    ImpulseSeries,
    ShepherdFactor,
    SplineBump,
    SplineStep,
    shepherd,
    splinebump,
    splinestep,
)

__version__ = "0.1.0"

__all__ = [
    "ApproachToleranceError",
    "BisectionError",
    "BracketNotFound",
    "CATALOG",
    "Classification",
    "ClassificationError",
    "ClassifyOptions",
    "ConfigError",
    "CriticalValue",
    "DomainError",
    "FieldExpr",
    "HyperbolicEstimate",
    "ImpulseSeries",
    "LimitStructure",
    "LimitWindow",
    "NoConvergence",
    "NonHyperbolicLimit",
    "ParseError",
    "ScalarField",
    "ScenarioError",
    "SeedEscaped",
    "SeparationFailure",
    "ShepherdFactor",
    "SolverOptions",
    "SplineBump",
    "SplineStep",
    "TippingPair",
    "TipcastError",
    "Trajectory",
    "TransitionScenario",
    "UnboundParameterError",
    "WrongStabilitySign",
    "bisect",
    "build",
    "candidate_brackets",
    "check_approach",
    "classify",
    "find_tipping_pair",
    "from_config",
    "harvest_threshold",
    "integrate",
    "limit_structure",
    "parse",
    "parse_field",
    "shepherd",
    "splinebump",
    "splinestep",
    "sweep",
    "__version__",
]
