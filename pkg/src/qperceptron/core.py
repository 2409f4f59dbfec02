"""Shared domain types for the spin-chain perceptron simulator.

Conventions used throughout the package:

* hbar = 1; every Hamiltonian coefficient is an angular frequency in rad/s.
  A coupling quoted as "2*pi x 37.5 Hz" is stored as ``2*pi*37.5``.
* sigma_z eigenvalues: +1 on |1> and -1 on |0>.  With this sign choice a
  large positive input field drives the target qubit to |1>.
* Basis ordering is most-significant-qubit-first: qubit 0 is the leftmost
  character of a bit string, and ``int(bits, 2)`` is the state-vector index.
* Dense representations only.  The systems of interest have 2-4 qubits;
  state vectors are capped at 12 qubits, density matrices at 6.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: Hardware bound on |J| between neighbouring ions: 2*pi x 37.5 Hz.
J_MAX_DEFAULT = TWO_PI * 37.5

#: Ramsey coherence time of the dressed qubit, 20 ms.
T2_DEFAULT = 20e-3

MAX_PURE_QUBITS = 12
MAX_MIXED_QUBITS = 6

NORM_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid configuration or violated precondition (CLI exit code 2)."""


class NumericsError(RuntimeError):
    """Numerical failure during simulation or fitting (CLI exit code 3)."""


class FitError(NumericsError):
    """A curve fit could not determine its parameters (e.g. flat fringe)."""


def from_hz(value_hz: float) -> float:
    """Convert an ordinary frequency in Hz to angular frequency in rad/s."""
    return TWO_PI * value_hz


def to_hz(omega: float) -> float:
    """Convert an angular frequency in rad/s to ordinary frequency in Hz."""
    return omega / TWO_PI


def bit_values(n_qubits: int, index: int) -> tuple[int, ...]:
    """Bits of a basis-state index, qubit 0 first."""
    return tuple((index >> (n_qubits - 1 - k)) & 1 for k in range(n_qubits))


def sigma_z_values(n_qubits: int, qubit: int) -> np.ndarray:
    """Vector of sigma_z eigenvalues (+-1) of `qubit` over all basis states."""
    idx = np.arange(2**n_qubits)
    bits = (idx >> (n_qubits - 1 - qubit)) & 1
    return 2.0 * bits - 1.0


@dataclass(frozen=True)
class SpinChainConfig:
    """Static description of the qubit register.

    Parameters
    ----------
    n_qubits:
        Register size, >= 2.
    target_index:
        The perceptron (output) qubit.
    couplings:
        Map control-qubit index -> Ising coupling J (rad/s) between that
        control and the target.  Couplings may be negative.
    bias_index, bias_strength:
        Optional bias qubit and its coupling Theta (rad/s) to the target.
    coupling_scales:
        Map control index -> effective-coupling factor alpha in [-1, 1].
        The dynamical-decoupling hardware tunes each J continuously over
        [-J, J]; only `alpha * J` enters the Hamiltonian.  Defaults to 1.
    detunings:
        Per-qubit frequency offsets nu (rad/s); all zero in the rotating
        frame.  Nonzero values are supported for Ramsey-style experiments.
    j_max:
        Hardware bound on |alpha * J| (rad/s).
    """

    n_qubits: int
    target_index: int
    couplings: Mapping[int, float] = field(default_factory=dict)
    bias_index: int | None = None
    bias_strength: float = 0.0
    coupling_scales: Mapping[int, float] = field(default_factory=dict)
    detunings: Sequence[float] = ()
    j_max: float = J_MAX_DEFAULT

    def __post_init__(self) -> None:
        if self.n_qubits < 2:
            raise ConfigError("register needs at least 2 qubits")
        if not 0 <= self.target_index < self.n_qubits:
            raise ConfigError("target_index out of range")
        if self.bias_index is not None:
            if not 0 <= self.bias_index < self.n_qubits:
                raise ConfigError("bias_index out of range")
            if self.bias_index == self.target_index:
                raise ConfigError("bias_index must differ from target_index")
        if self.bias_index is None and self.bias_strength != 0.0:
            raise ConfigError("bias_strength set without a bias_index")
        for j in self.couplings:
            if not 0 <= j < self.n_qubits:
                raise ConfigError(f"coupling index {j} out of range")
            if j == self.target_index:
                raise ConfigError("couplings must not include the target qubit")
            if j == self.bias_index:
                raise ConfigError("couplings must not include the bias qubit")
        for j in self.coupling_scales:
            if j not in self.couplings:
                raise ConfigError(f"coupling_scales key {j} has no coupling")
        if self.j_max <= 0:
            raise ConfigError("j_max must be positive")
        for j, amp in self.effective_couplings().items():
            if abs(amp) > self.j_max * (1 + 1e-12):
                raise ConfigError(
                    f"effective coupling {to_hz(amp):.3f} Hz on control {j} "
                    f"exceeds j_max = {to_hz(self.j_max):.3f} Hz"
                )
        if abs(self.bias_strength) > self.j_max * (1 + 1e-12):
            raise ConfigError("bias_strength exceeds j_max")
        if self.detunings and len(self.detunings) != self.n_qubits:
            raise ConfigError("detunings must list one value per qubit")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def scale(self, control: int) -> float:
        return float(self.coupling_scales.get(control, 1.0))

    def effective_couplings(self) -> dict[int, float]:
        """alpha_j * J_j for every control j, in rad/s."""
        return {j: self.scale(j) * J for j, J in self.couplings.items()}

    def detuning(self, qubit: int) -> float:
        return float(self.detunings[qubit]) if self.detunings else 0.0

    def field_for(self, bits: str) -> float:
        """Input field x = sum_j alpha_j J_j z_j + Theta z_b in rad/s.

        `bits` assigns a computational basis state to every qubit (the
        target's own bit is ignored); z = +1 for '1' and -1 for '0'.
        """
        if len(bits) != self.n_qubits or set(bits) - {"0", "1"}:
            raise ConfigError("bits must be a full-register 0/1 string")
        z = [2 * int(b) - 1 for b in bits]
        x = sum(amp * z[j] for j, amp in self.effective_couplings().items())
        if self.bias_index is not None:
            x += self.bias_strength * z[self.bias_index]
        return x

    def worst_case_field(self) -> float:
        """Largest |x| over all control/bias configurations, in rad/s."""
        x = sum(abs(a) for a in self.effective_couplings().values())
        return x + abs(self.bias_strength)


@dataclass
class NoiseModel:
    """Open-system model: none, or Markovian pure dephasing per qubit.

    `t2` is the 1/e decay time of single-qubit coherences; it may be a
    scalar (same for every qubit) or one value per qubit.  The
    density-matrix representation applies the exact per-segment decay;
    the trajectory representation averages stochastic sigma_z flips over
    `n_trajectories` pure-state runs.
    """

    kind: str = "none"
    t2: float | Sequence[float] = T2_DEFAULT
    representation: str = "density_matrix"
    n_trajectories: int = 1024

    def __post_init__(self) -> None:
        if self.kind not in ("none", "dephasing"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.representation not in ("density_matrix", "trajectories"):
            raise ConfigError(f"unknown representation {self.representation!r}")
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be >= 1")
        for t2 in np.atleast_1d(np.asarray(self.t2, dtype=float)):
            if not t2 > 0:
                raise ConfigError("t2 must be positive")

    @property
    def is_noiseless(self) -> bool:
        return self.kind == "none"

    def t2_for(self, qubit: int) -> float:
        arr = np.atleast_1d(np.asarray(self.t2, dtype=float))
        return float(arr[0]) if arr.size == 1 else float(arr[qubit])

    @staticmethod
    def none() -> "NoiseModel":
        return NoiseModel(kind="none")

    @staticmethod
    def dephasing(t2: float | Sequence[float] = T2_DEFAULT,
                  representation: str = "density_matrix",
                  n_trajectories: int = 1024) -> "NoiseModel":
        return NoiseModel(kind="dephasing", t2=t2,
                          representation=representation,
                          n_trajectories=n_trajectories)


class RegisterState:
    """Pure state vector or density matrix over the qubit register."""

    def __init__(self, kind: str, data: np.ndarray, n_qubits: int,
                 check: bool = True):
        self.kind = kind
        self.data = np.asarray(data, dtype=complex)
        self.n_qubits = n_qubits
        if check:
            self.validate()

    # -- constructors -------------------------------------------------

    @staticmethod
    def pure(amplitudes: np.ndarray | Sequence[complex],
             check: bool = True) -> "RegisterState":
        amplitudes = np.asarray(amplitudes, dtype=complex)
        n = int(round(math.log2(amplitudes.size)))
        if 2**n != amplitudes.size:
            raise ConfigError("amplitude vector length must be a power of 2")
        return RegisterState("pure", amplitudes, n, check=check)

    @staticmethod
    def mixed(matrix: np.ndarray, check: bool = True) -> "RegisterState":
        matrix = np.asarray(matrix, dtype=complex)
        n = int(round(math.log2(matrix.shape[0])))
        if matrix.shape != (2**n, 2**n):
            raise ConfigError("density matrix must be square with power-of-2 size")
        return RegisterState("mixed", matrix, n, check=check)

    # -- invariants ----------------------------------------------------

    def validate(self) -> None:
        if self.kind == "pure":
            if self.n_qubits > MAX_PURE_QUBITS:
                raise ConfigError("register too large for a dense state vector")
            norm = float(np.sum(np.abs(self.data) ** 2))
            if abs(norm - 1.0) > NORM_TOL:
                raise ConfigError(f"state norm {norm} deviates from 1")
        elif self.kind == "mixed":
            if self.n_qubits > MAX_MIXED_QUBITS:
                raise ConfigError("register too large for a dense density matrix")
            rho = self.data
            if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
                raise ConfigError("density matrix is not Hermitian")
            tr = float(np.trace(rho).real)
            if abs(tr - 1.0) > NORM_TOL:
                raise ConfigError(f"density matrix trace {tr} deviates from 1")
            if np.min(np.linalg.eigvalsh(rho)) < -NORM_TOL:
                raise ConfigError("density matrix has a negative eigenvalue")
        else:
            raise ConfigError(f"unknown state kind {self.kind!r}")

    # -- views ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def copy(self) -> "RegisterState":
        return RegisterState(self.kind, self.data.copy(), self.n_qubits,
                             check=False)

    def density_matrix(self) -> np.ndarray:
        if self.kind == "mixed":
            return self.data
        return np.outer(self.data, self.data.conj())

    def to_mixed(self) -> "RegisterState":
        return RegisterState("mixed", self.density_matrix(), self.n_qubits,
                             check=False)

    def probability_one(self, qubit: int) -> float:
        """Marginal probability that `qubit` is measured in |1>."""
        if not 0 <= qubit < self.n_qubits:
            raise ConfigError("qubit index out of range")
        mask = ((np.arange(self.dim) >> (self.n_qubits - 1 - qubit)) & 1) == 1
        if self.kind == "pure":
            return float(np.sum(np.abs(self.data[mask]) ** 2))
        return float(np.sum(np.diag(self.data).real[mask]))

    def reduced(self, qubits: Sequence[int]) -> np.ndarray:
        """Reduced density matrix of `qubits` (in the order given)."""
        keep = list(qubits)
        n = self.n_qubits
        rho = self.density_matrix().reshape((2,) * (2 * n))
        drop = [q for q in range(n) if q not in keep]
        for q in sorted(drop, reverse=True):
            rho = np.trace(rho, axis1=q, axis2=q + (rho.ndim // 2))
        # remaining axes are in ascending qubit order; permute to `qubits`
        order = np.argsort(np.argsort(keep))
        m = len(keep)
        rho = rho.transpose(*order, *(order + m))
        return rho.reshape(2**m, 2**m)

    def overlap(self, other: "RegisterState") -> float:
        """|<self|other>| for pure states."""
        if self.kind != "pure" or other.kind != "pure":
            raise ConfigError("overlap is defined for pure states")
        return float(abs(np.vdot(self.data, other.data)))


def make_basis_state(n_qubits: int, bits: str) -> RegisterState:
    """Computational basis state |bits>, qubit 0 leftmost."""
    if len(bits) != n_qubits:
        raise ConfigError(
            f"bit string length {len(bits)} does not match {n_qubits} qubits")
    if set(bits) - {"0", "1"}:
        raise ConfigError("bits must contain only '0' and '1'")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return RegisterState("pure", amps, n_qubits, check=False)


def probability_one(state: RegisterState, qubit: int) -> float:
    """Functional alias for :meth:`RegisterState.probability_one`."""
    return state.probability_one(qubit)


def apply_single_qubit_unitary(state: RegisterState, qubit: int,
                               u: np.ndarray) -> RegisterState:
    """Apply a 2x2 unitary to one qubit of a pure or mixed state."""
    if not 0 <= qubit < state.n_qubits:
        raise ConfigError("qubit index out of range")
    n = state.n_qubits
    if state.kind == "pure":
        psi = state.data.reshape((2,) * n)
        psi = np.tensordot(u, psi, axes=([1], [qubit]))
        psi = np.moveaxis(psi, 0, qubit)
        return RegisterState("pure", psi.reshape(-1), n, check=False)
    rho = state.data.reshape((2,) * (2 * n))
    rho = np.tensordot(u, rho, axes=([1], [qubit]))
    rho = np.moveaxis(rho, 0, qubit)
    rho = np.tensordot(u.conj(), rho, axes=([1], [n + qubit]))
    rho = np.moveaxis(rho, 0, n + qubit)
    return RegisterState("mixed", rho.reshape(state.dim, state.dim), n,
                         check=False)


@dataclass
class PulseSchedule:
    """Drive amplitude over time as a sequence of square pulses.

    `durations[k]` seconds at constant `amplitudes[k]` rad/s.  Metadata
    records the generator tag and the endpoint amplitudes the schedule
    was built for; the first/last segment amplitudes must match them.
    """

    durations: np.ndarray
    amplitudes: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.durations = np.asarray(self.durations, dtype=float)
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.durations.shape != self.amplitudes.shape or self.durations.ndim != 1:
            raise ConfigError("durations and amplitudes must be 1-D and equal length")
        if self.durations.size == 0:
            raise ConfigError("schedule needs at least one segment")
        if np.any(self.durations < 0):
            raise ConfigError("segment durations must be non-negative")
        if np.any(self.amplitudes < 0):
            raise ConfigError("drive amplitudes must be non-negative")
        self.validate()

    def validate(self) -> None:
        t_f = self.metadata.get("t_f")
        if t_f is not None:
            total = float(np.sum(self.durations))
            if abs(total - t_f) > 1e-12 * max(abs(t_f), 1.0):
                raise ConfigError(f"segment durations sum to {total}, not {t_f}")
        for key, amp in (("omega_i", self.amplitudes[0]),
                         ("omega_f", self.amplitudes[-1])):
            want = self.metadata.get(key)
            if want is not None:
                if abs(amp - want) > 1e-9 * max(abs(want), 1.0):
                    raise ConfigError(
                        f"{key} endpoint {amp} deviates from requested {want}")
        if self.metadata.get("ramp_down"):
            if np.any(np.diff(self.amplitudes) > 1e-12 * self.amplitudes[0]):
                raise ConfigError("ramp-down amplitudes must be non-increasing")

    @property
    def n_segments(self) -> int:
        return int(self.durations.size)

    @property
    def total_time(self) -> float:
        return float(np.sum(self.durations))

    @property
    def omega_i(self) -> float:
        return float(self.amplitudes[0])

    @property
    def omega_f(self) -> float:
        return float(self.amplitudes[-1])

    def boundaries(self) -> np.ndarray:
        """Segment boundary times, length n_segments + 1."""
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    def midpoint_times(self) -> np.ndarray:
        b = self.boundaries()
        return 0.5 * (b[:-1] + b[1:])

    def segments(self) -> Iterator[tuple[float, float]]:
        yield from zip(self.durations, self.amplitudes)


def constant_schedule(amplitude: float, duration: float,
                      n_segments: int = 1) -> PulseSchedule:
    """Hold `amplitude` for `duration` seconds (e.g. free evolution at 0)."""
    if duration <= 0:
        raise ConfigError("duration must be positive")
    d = np.full(n_segments, duration / n_segments)
    a = np.full(n_segments, float(amplitude))
    return PulseSchedule(d, a, metadata={
        "generator": "constant", "t_f": duration,
        "omega_i": float(amplitude), "omega_f": float(amplitude),
    })
