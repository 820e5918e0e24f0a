"""Relative information as a Lyapunov function for replicator dynamics,
Markov processes and reaction networks."""

from .errors import (
    DegeneratePopulationError,
    InfiniteEnergyError,
    IntegrationBudgetError,
    InvalidMatrixError,
    NoEquilibriumError,
    NotMarkovNetworkError,
    NumericalBlowupError,
    ParseError,
    RelInfoError,
    ShapeError,
    ValidationError,
)
from .evogame import (
    FitnessModel,
    GameMatrix,
    Status,
    StrategyVerdict,
    format_game_matrix,
    is_dominant,
    is_ess,
    is_symmetric_nash,
    is_thomas_ess,
    lotka_volterra_field,
    mean_fitness,
    normalize,
    parse_game_matrix,
    relative_info_rate,
    replicator_field,
)
from .infodiv import (
    Population,
    ProbDist,
    population_relative_information,
    relative_information,
    shannon_entropy,
)
from .markov import (
    EnergyModel,
    MarkovProcess,
    boltzmann_distribution,
    energies_from_steady_state,
    format_markov,
    free_energy,
    hamiltonian,
    master_field,
    parse_markov,
    propagator,
    steady_states,
)
from .numcore import IntegratorConfig, Trajectory, integrate, matrix_exp, nullspace
from .reactnet import (
    BalanceReport,
    ReactionNetwork,
    StoichiometricData,
    conservation_laws,
    find_equilibrium,
    format_network,
    is_complex_balanced,
    parse_network,
    rate_field,
    to_markov,
)

__version__ = "0.1.0"
