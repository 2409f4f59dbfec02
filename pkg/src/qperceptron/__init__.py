"""Trapped-ion quantum perceptron gate: simulation and weight synthesis.

The package models a driven Ising spin chain in which a dressed target
qubit implements a sigmoid-activation perceptron on classical control
qubits, including the fast quasi-adiabatic (FAQUAD) ramp-down schedule,
pure-dephasing noise, a Ramsey coupling measurement, stacked two-layer
gates (XNOR), and derivative-free synthesis of coupling weights for
arbitrary truth tables.
"""

from .core import (ConfigError, FitError, J_MAX_DEFAULT, NoiseModel,
                   NumericsError, PulseSchedule, RegisterState,
                   SpinChainConfig, T2_DEFAULT, TWO_PI,
                   apply_single_qubit_unitary, constant_schedule, from_hz,
                   make_basis_state, probability_one, to_hz)
from .hamiltonian import (HADAMARD, activation, build_hamiltonian,
                          instantaneous_ground_state, target_field)
from .schedule import (ClosedFormReport, FaquadRamp, FaquadSpec,
                       adiabaticity_margin, adiabaticity_parameter,
                       build_schedule, discretize, faquad_closed_form,
                       faquad_ode, sample_uniform_time, write_pulse_table)
from .evolve import (apply_dephasing_channel, propagate_piecewise,
                     reference_propagator, trajectory_populations)
from .gate import (ExperimentRecord, PerceptronGateSpec, RamseyResult,
                   SweepSeries, measure_coupling_ramsey, perceptron_register,
                   run_gate_on_target, run_perceptron_gate, sweep_activation)
from .network import (GateLayer, GateProgram, TruthTable, TruthTableResult,
                      WeightSynthesis, XNOR_TABLE, evaluate_truth_table,
                      load_program, network_loss, optimize_weights,
                      paper_xnor_program, program_from_dict, program_to_dict,
                      run_network, save_program)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "FitError", "NumericsError",
    "J_MAX_DEFAULT", "T2_DEFAULT", "TWO_PI",
    "from_hz", "to_hz",
    "SpinChainConfig", "NoiseModel", "RegisterState", "PulseSchedule",
    "make_basis_state", "probability_one", "apply_single_qubit_unitary",
    "constant_schedule",
    "HADAMARD", "activation", "build_hamiltonian",
    "instantaneous_ground_state", "target_field",
    "FaquadSpec", "FaquadRamp", "ClosedFormReport",
    "faquad_ode", "faquad_closed_form", "build_schedule", "discretize",
    "sample_uniform_time", "adiabaticity_parameter", "adiabaticity_margin",
    "write_pulse_table",
    "propagate_piecewise", "reference_propagator", "apply_dephasing_channel",
    "trajectory_populations",
    "PerceptronGateSpec", "SweepSeries", "ExperimentRecord", "RamseyResult",
    "perceptron_register", "run_perceptron_gate", "run_gate_on_target",
    "sweep_activation", "measure_coupling_ramsey",
    "GateLayer", "GateProgram", "TruthTable", "TruthTableResult",
    "WeightSynthesis", "XNOR_TABLE",
    "run_network", "evaluate_truth_table", "network_loss", "optimize_weights",
    "program_to_dict", "program_from_dict", "save_program", "load_program",
    "paper_xnor_program",
]
