"""Boolean matrix factorization through a nonnegative auxiliary problem."""
from .baselines import nmf_factorize_boolean, nmf_solve
from .booleanize import ThresholdChoice, booleanize, threshold
from .matrix import (
    bool_mat_mul,
    boolean_relative_error,
    frobenius_error,
    hamming_error,
    mat_mul,
)
from .oracle import exhaustive_bmf
from .solver import SolverConfig, SolverState, init_state, project_y, solve, update_h, update_w
from .synth import (
    PlantedInstance,
    SynthSpec,
    apply_flip_noise,
    exact_rank,
    factor_density,
    generate_planted,
    generate_rank_gap_suite,
)

__version__ = "0.1.0"
