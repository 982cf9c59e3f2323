"""Dynamic tunneling global optimization for variational quantum
algorithms, with a dense statevector simulator and transverse-field
Ising benchmarks."""

from .sim import (
    Circuit,
    Gate,
    PauliSum,
    StateVector,
    apply_gate,
    cost_and_gradient,
    expectation,
    fidelity,
    hs_distance,
    parameter_shift_gradient,
    run_circuit,
    zero_state,
)
from .models import (
    ChainSpec,
    GridSpec,
    ansatz_chain,
    ansatz_grid,
    exact_ground_energy,
    tfim_chain,
    tfim_grid,
)
from .tunneling import (
    EuclideanDistance,
    HilbertSchmidtDistance,
    StablePoint,
    TunnelConfig,
    TunnelRun,
    dynamic_tunneling,
    energy_function,
    estimate_pole_exponent,
    fista_descent,
    gradient_descent,
    penalty_factor,
    pole_factor,
    same_state,
    tunnel_flow,
)
from .bench import (
    ExperimentConfig,
    HistogramRecord,
    ProfileRecord,
    ToyOracle,
    VQECostOracle,
    preset,
    revisit_statistics,
    run_experiment,
    toy_cost,
    write_histogram,
    write_profile,
)

__version__ = "0.1.0"
