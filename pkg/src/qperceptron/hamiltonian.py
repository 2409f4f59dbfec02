"""Rotating-frame Hamiltonian of the driven Ising chain and its ground state.

The register couples a driven target qubit to classical controls and an
optional bias qubit:

    H = -1/2 * (Omega sx_t + Theta sz_t sz_b + sz_t * sum_j alpha_j J_j sz_j)
        + sum_k (nu_k / 2) sz_k

For any computational configuration of the controls and bias the target
sees the two-level Hamiltonian -1/2 (Omega sx + x_eff sz) with input field
x_eff = x - nu_t, whose ground state has excitation probability
``activation(x_eff / Omega)``.  The direct interaction between control and
bias qubits only dephases those qubits relative to each other and is
omitted.
"""
from __future__ import annotations

import numpy as np

from .core import (ConfigError, RegisterState, SpinChainConfig,
                   sigma_z_values)

# sigma_z = diag(-1, +1): |1> is the +1 eigenstate.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]])
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)

MAX_DENSE_QUBITS = 12


def activation(u):
    """Sigmoid activation f(u) = (1 + u / sqrt(1 + u^2)) / 2.

    This is the excitation probability of the dressed two-level ground
    state at field-to-drive ratio u = x / Omega: strictly increasing,
    f(-u) = 1 - f(u), with limits 0 and 1.
    """
    u = np.asarray(u, dtype=float)
    out = 0.5 * (1.0 + u / np.hypot(1.0, u))
    return float(out) if out.ndim == 0 else out


def build_hamiltonian(config: SpinChainConfig, omega: float) -> np.ndarray:
    """Dense Hamiltonian matrix (real symmetric, rad/s) at drive `omega`."""
    if omega < 0:
        raise ConfigError("drive amplitude must be non-negative")
    n = config.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ConfigError(f"dense build limited to {MAX_DENSE_QUBITS} qubits")
    dim = config.dim

    z_t = sigma_z_values(n, config.target_index)
    diag = np.zeros(dim)
    for j, amp in config.effective_couplings().items():
        diag += -0.5 * amp * z_t * sigma_z_values(n, j)
    if config.bias_index is not None:
        diag += -0.5 * config.bias_strength * z_t * sigma_z_values(
            n, config.bias_index)
    for k in range(n):
        nu = config.detuning(k)
        if nu != 0.0:
            diag += 0.5 * nu * sigma_z_values(n, k)

    h = np.diag(diag)
    # -Omega/2 sx on the target: couples indices differing in the target bit
    flip = 1 << (n - 1 - config.target_index)
    idx = np.arange(dim)
    h[idx, idx ^ flip] += -0.5 * omega
    return h


def target_field(config: SpinChainConfig, control_bits: str) -> float:
    """Effective z field seen by the target: x - nu_target (rad/s)."""
    return config.field_for(control_bits) - config.detuning(config.target_index)


def instantaneous_ground_state(
    config: SpinChainConfig, omega: float, control_bits: str
) -> tuple[RegisterState, float]:
    """Target-qubit ground state and energy gap for a classical configuration.

    Returns the single-qubit state sqrt(1-f)|0> + sqrt(f)|1> with
    f = activation(x_eff / Omega), and the gap sqrt(Omega^2 + x_eff^2).
    The fully degenerate point Omega = x_eff = 0 is rejected.
    """
    if omega < 0:
        raise ConfigError("drive amplitude must be non-negative")
    x = target_field(config, control_bits)
    gap = float(np.hypot(omega, x))
    if gap == 0.0:
        raise ConfigError("ground state undefined at Omega = x = 0")
    if omega == 0.0:
        f = 1.0 if x > 0 else 0.0
    else:
        f = activation(x / omega)
    amps = np.array([np.sqrt(1.0 - f), np.sqrt(f)], dtype=complex)
    return RegisterState("pure", amps, 1, check=False), gap
