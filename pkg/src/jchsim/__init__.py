"""Simulation and verification toolkit for Jaynes-Cummings-Hubbard lattices."""

__version__ = "0.1.0"

from .bosehubbard import BosonBasis, EffectiveModel, build_effective_bh, build_zeeman
from .dynamics import EvolutionSpec, evolve, floquet_effective, propagator
from .effective import (
    derive_two_site,
    eliminate_driven,
    eliminate_static,
    polariton_analysis,
    raman_effective_field,
)
from .errors import (
    BranchAmbiguityError,
    ConfigError,
    DimensionError,
    FitError,
    HermiticityError,
    JCHError,
    NormDriftError,
    ResonanceError,
    SingularEliminationError,
    ValidityError,
)
from .experiments import SCENARIOS, ExperimentResult, ScenarioSpec, Verdict, run_scenario
from .hilbert import HilbertSpace, ModeSpec, Operator, build_space, project_excitation_number
from .lattice import LatticeSpec, chain, kagome, make_lattice, square
from .model import (
    DriveSpec,
    InterSiteCoupling,
    SiteSpec,
    build_driven_two_site,
    build_jch,
    preset,
    two_spin_site,
)
from .verification import run_verification
