"""Piecewise-constant propagation of the register, with optional dephasing.

Each square pulse applies the exact unitary exp(-i H(Omega_k) dt_k),
obtained from a dense eigendecomposition of the (real symmetric)
Hamiltonian.  Pure dephasing is interleaved per segment: in the
density-matrix picture every coherence between basis states decays by
exp(-dt * n_diff / T2) with n_diff the number of qubits whose bits differ;
in the trajectory picture each qubit suffers a sigma_z flip per segment
with the parity-matched probability (1 - exp(-dt/T2))/2.

`reference_propagator` is a deliberately independent fixed-step
fourth-order integrator used as a verification oracle in tests.
"""
from __future__ import annotations

import math

import numpy as np

from .core import (ConfigError, NoiseModel, NumericsError, PulseSchedule,
                   RegisterState, SpinChainConfig)
from .hamiltonian import build_hamiltonian


def segment_unitary(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) for Hermitian h via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * dt)
    return (v * phases) @ v.conj().T


def _energy_bound(config: SpinChainConfig, omega: float) -> float:
    """Upper bound on the spectral radius of H(omega), rad/s."""
    zz = config.worst_case_field()
    nu = sum(abs(config.detuning(k)) for k in range(config.n_qubits))
    return 0.5 * (omega + zz + nu)


def _coherence_decay_rates(config: SpinChainConfig,
                           noise: NoiseModel) -> np.ndarray:
    """Matrix of summed dephasing rates 1/T2 over qubits whose bits differ."""
    dim = config.dim
    n = config.n_qubits
    rates = np.zeros((dim, dim))
    idx = np.arange(dim)
    for q in range(n):
        bit = (idx >> (n - 1 - q)) & 1
        differs = bit[:, None] != bit[None, :]
        rates += differs / noise.t2_for(q)
    return rates


def propagate_piecewise(state: RegisterState, config: SpinChainConfig,
                        schedule: PulseSchedule,
                        noise: NoiseModel | None = None,
                        seed: int = 0) -> RegisterState:
    """Evolve `state` through every segment of `schedule`.

    Noiseless pure input stays a pure state.  With dephasing the result is
    a density matrix: exact per-segment decay for the density_matrix
    representation, or the average over seeded stochastic trajectories.
    """
    if state.dim != config.dim:
        raise ConfigError("state dimension does not match the register")
    noise = noise or NoiseModel.none()

    if noise.is_noiseless:
        if state.kind == "pure":
            psi = state.data.copy()
            for dt, omega in schedule.segments():
                u = segment_unitary(build_hamiltonian(config, omega), dt)
                psi = u @ psi
            return RegisterState("pure", psi, config.n_qubits, check=False)
        rho = state.data.copy()
        for dt, omega in schedule.segments():
            u = segment_unitary(build_hamiltonian(config, omega), dt)
            rho = u @ rho @ u.conj().T
        return RegisterState("mixed", rho, config.n_qubits, check=False)

    if noise.representation == "trajectories":
        psis = _trajectory_states(state, config, schedule, noise, seed)
        rho = (psis.conj().T @ psis) / psis.shape[0]
        return RegisterState("mixed", rho, config.n_qubits, check=False)

    rho = state.density_matrix().copy()
    rates = _coherence_decay_rates(config, noise)
    for dt, omega in schedule.segments():
        u = segment_unitary(build_hamiltonian(config, omega), dt)
        rho = u @ rho @ u.conj().T
        rho *= np.exp(-dt * rates)
    return RegisterState("mixed", rho, config.n_qubits, check=False)


def _trajectory_states(state: RegisterState, config: SpinChainConfig,
                       schedule: PulseSchedule, noise: NoiseModel,
                       seed: int) -> np.ndarray:
    """Final pure states of all dephasing trajectories, shape (n_traj, dim)."""
    if state.kind != "pure":
        raise ConfigError("trajectory unravelling needs a pure input state")
    rng = np.random.default_rng(seed)
    n = config.n_qubits
    n_traj = noise.n_trajectories
    psis = np.tile(state.data, (n_traj, 1))
    idx = np.arange(config.dim)
    bit_masks = [((idx >> (n - 1 - q)) & 1).astype(bool) for q in range(n)]
    for dt, omega in schedule.segments():
        u = segment_unitary(build_hamiltonian(config, omega), dt)
        psis = psis @ u.T
        for q in range(n):
            # parity of a Poisson flip count over dt reproduces exp(-dt/T2)
            p_flip = 0.5 * (1.0 - math.exp(-dt / noise.t2_for(q)))
            flips = rng.random(n_traj) < p_flip
            if np.any(flips):
                psis[np.ix_(flips, bit_masks[q])] *= -1.0
    return psis


def trajectory_populations(state: RegisterState, config: SpinChainConfig,
                           schedule: PulseSchedule, noise: NoiseModel,
                           qubit: int, seed: int = 0) -> np.ndarray:
    """Per-trajectory P(|1>) of `qubit`; supports standard-error estimates."""
    psis = _trajectory_states(state, config, schedule, noise, seed)
    n = config.n_qubits
    idx = np.arange(config.dim)
    mask = ((idx >> (n - 1 - qubit)) & 1) == 1
    return np.sum(np.abs(psis[:, mask]) ** 2, axis=1)


def apply_dephasing_channel(state: RegisterState, qubit: int,
                            duration: float, t2: float) -> RegisterState:
    """Phase damping on one qubit: coherences times exp(-duration/t2)."""
    if state.kind != "pure" and state.kind != "mixed":
        raise ConfigError(f"unknown state kind {state.kind!r}")
    if state.kind == "pure":
        raise ConfigError("promote the state to a density matrix first")
    if duration < 0:
        raise ConfigError("duration must be non-negative")
    if t2 <= 0:
        raise ConfigError("t2 must be positive")
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise ConfigError("qubit index out of range")
    idx = np.arange(state.dim)
    bit = (idx >> (n - 1 - qubit)) & 1
    differs = bit[:, None] != bit[None, :]
    factor = np.where(differs, math.exp(-duration / t2), 1.0)
    return RegisterState("mixed", state.data * factor, n, check=False)


def reference_propagator(state: RegisterState, config: SpinChainConfig,
                         schedule: PulseSchedule,
                         substeps_per_segment: int | None = None,
                         max_step_angle: float = 0.01,
                         min_substeps: int = 10) -> RegisterState:
    """Fixed-step fourth-order (RK4) integration of the same dynamics.

    Verification oracle: integrates the Schroedinger equation with at
    least `min_substeps` steps per segment and a step small enough that
    the energy bound times the step stays below `max_step_angle` radians.
    Pure states only; rejects any step coarser than 0.1 rad.
    """
    if state.kind != "pure":
        raise ConfigError("reference propagator handles pure states only")
    if state.dim != config.dim:
        raise ConfigError("state dimension does not match the register")
    psi = state.data.astype(complex).copy()
    for dt, omega in schedule.segments():
        if dt == 0.0:
            continue
        h = build_hamiltonian(config, omega)
        bound = _energy_bound(config, omega)
        if substeps_per_segment is None:
            n_sub = max(min_substeps, int(math.ceil(bound * dt / max_step_angle)))
        else:
            n_sub = substeps_per_segment
        step = dt / n_sub
        if bound * step > 0.1:
            raise NumericsError(
                f"integration step too coarse: energy*step = {bound * step:.3f} rad")
        for _ in range(n_sub):
            k1 = -1j * (h @ psi)
            k2 = -1j * (h @ (psi + 0.5 * step * k1))
            k3 = -1j * (h @ (psi + 0.5 * step * k2))
            k4 = -1j * (h @ (psi + step * k3))
            psi = psi + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return RegisterState("pure", psi, config.n_qubits, check=False)
