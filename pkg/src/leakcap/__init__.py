"""Channel capacity of leakage channels under linear prior constraints."""

__version__ = "0.1.0"

from .channel import (
    Channel,
    ChannelError,
    OutputDistribution,
    Prior,
    bits_to_nats,
    entropy,
    mutual_information,
    nats_to_bits,
    output_distribution,
)
from .constraints import (
    ConstraintSet,
    LinearConstraint,
    Relation,
    constraint,
    evaluate,
    feasibility,
    normalize,
)
from .kkt import (
    KktSolution,
    SolverOptions,
    Status,
    capacity_from_multipliers,
    leakage_report,
    solve,
    solve_for_active_set,
    stationarity_residual,
)
from .models import (
    NetworkModel,
    ThreadedProgramParams,
    onion_example_network,
    network_channel,
    threaded_program_channel,
)
from .oracle import blahut_arimoto, constrained_brute_force
