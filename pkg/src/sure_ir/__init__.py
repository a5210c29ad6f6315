"""Super-resolution line spectral estimation by iterative reweighted l2.

Joint estimation of the frequencies and complex amplitudes of a sparse
mixture of complex sinusoids from randomly subsampled observations, with
single- and multiple-measurement-vector solvers, an independent oracle
layer and a Monte Carlo benchmark harness.
"""

from .model import (
    TWO_PI,
    ParametricDictionary,
    SpectralInstance,
    atom,
    atom_derivative,
    atoms_matrix,
    build_dictionary,
    circular_distance,
    instance_from_freqs,
    random_instance,
    synthesize,
    uniform_grid,
    wrap_frequency,
)
from .solver import (
    Estimate,
    SolverConfig,
    SolverFailure,
    SolverState,
    WeightMatrix,
    descent_theta,
    f_theta,
    grad_f,
    log_sum_penalty,
    objective_g,
    prune,
    run_sure_ir,
    solve_z,
    surrogate_q,
    update_lambda,
    weight_matrix,
)
from .mmv import (
    RowSparseEstimate,
    f_theta_mmv,
    grad_f_mmv,
    objective_g_mmv,
    run_sure_ir_mmv,
    solve_z_mmv,
    weight_matrix_mmv,
)
from .oracle import (
    OracleError,
    OracleReport,
    check_majorization,
    dense_solve_z,
    exact_recovery_trial,
    fd_gradient,
    run_suites,
    sweep_f_theta_1d,
)
from .bench import (
    SweepSpec,
    TrialParams,
    TrialRecord,
    am_message_signal,
    match_frequencies,
    rsnr,
    run_sweep,
    run_trial,
    segment_reconstruct,
)

__version__ = "0.1.0"
