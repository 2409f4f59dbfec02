"""The perceptron quantum gate and its virtual experiments.

A gate run: Hadamard on the target, sudden switch-on of the dressing
field at omega_i, quasi-adiabatic ramp-down to omega_f, readout.  The
target ends near the dressed ground state, so its excitation probability
traces ``activation(x / omega_f)`` as the input field x is scanned.

For control/bias qubits held in computational basis states the register
Hamiltonian never mixes their configurations, so the gate reduces exactly
to a driven two-level problem for the target (the controls contribute a
configuration-dependent global phase, and pure dephasing leaves their
basis states invariant).  Sweeps and network layers use that reduction;
`run_perceptron_gate` itself propagates the full register and is checked
against the reduction in the test suite.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import (ConfigError, FitError, NoiseModel, PulseSchedule,
                   RegisterState, SpinChainConfig, apply_single_qubit_unitary,
                   constant_schedule, make_basis_state, to_hz)
from .evolve import propagate_piecewise
from .hamiltonian import HADAMARD, activation, target_field
from .schedule import FaquadSpec, build_schedule

GATE_DRIVE_RATIO_MIN = 100.0


@dataclass(frozen=True)
class PerceptronGateSpec:
    """Register + ramp + noise for one perceptron gate.

    The initial drive must dominate every possible input field by a
    factor >= 100 so the dressed starting state is (|0>+|1>)/sqrt(2) to
    population error <= 1e-4.
    """

    config: SpinChainConfig
    schedule: FaquadSpec
    noise: NoiseModel = field(default_factory=NoiseModel.none)

    def __post_init__(self) -> None:
        worst = self.config.worst_case_field()
        if self.schedule.omega_i < GATE_DRIVE_RATIO_MIN * worst:
            raise ConfigError(
                f"omega_i = {to_hz(self.schedule.omega_i):.1f} Hz is below "
                f"{GATE_DRIVE_RATIO_MIN:.0f} x the worst-case field "
                f"{to_hz(worst):.1f} Hz")

    def x_ref_default(self) -> float:
        worst = self.config.worst_case_field()
        return worst if worst > 0.0 else self.config.j_max

    def resolved_schedule(self) -> PulseSchedule:
        return build_schedule(self.schedule, x_ref_default=self.x_ref_default())


def perceptron_register(couplings: Sequence[float],
                        bias_strength: float | None = None,
                        coupling_scales: Sequence[float] | None = None,
                        j_max: float | None = None,
                        detunings: Sequence[float] = ()) -> SpinChainConfig:
    """Canonical register layout: controls 0..m-1, target m, bias m+1."""
    m = len(couplings)
    n = m + 1 + (1 if bias_strength is not None else 0)
    scales = coupling_scales if coupling_scales is not None else [1.0] * m
    kwargs = dict(
        n_qubits=n,
        target_index=m,
        couplings={j: float(c) for j, c in enumerate(couplings)},
        coupling_scales={j: float(s) for j, s in enumerate(scales)},
        detunings=tuple(detunings),
    )
    if bias_strength is not None:
        kwargs["bias_index"] = m + 1
        kwargs["bias_strength"] = float(bias_strength)
    if j_max is not None:
        kwargs["j_max"] = float(j_max)
    return SpinChainConfig(**kwargs)


def run_perceptron_gate(input_state: RegisterState, spec: PerceptronGateSpec,
                        seed: int = 0) -> RegisterState:
    """Hadamard on the target, then the discretized ramp-down.

    Controls and bias are untouched by the Hadamard; the drive starts at
    omega_i with no transient (sudden quench).
    """
    if input_state.dim != spec.config.dim:
        raise ConfigError("input state does not match the register")
    table = spec.resolved_schedule()
    state = apply_single_qubit_unitary(input_state, spec.config.target_index,
                                       HADAMARD.astype(complex))
    return propagate_piecewise(state, spec.config, table, spec.noise, seed=seed)


# ---------------------------------------------------------------------------
# Exact two-level reduction for classical control configurations
# ---------------------------------------------------------------------------

def _segment_unitaries(amplitudes: np.ndarray, durations: np.ndarray,
                       x: float) -> np.ndarray:
    """Stack of exact 2x2 unitaries exp(i dt (Omega sx + x sz)/2)."""
    half_gap = 0.5 * np.hypot(amplitudes, x)
    angle = half_gap * durations
    c = np.cos(angle)
    s = np.where(half_gap > 0, np.sin(angle), 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        n_x = np.where(half_gap > 0, (-0.5 * amplitudes) / half_gap, 0.0)
        n_z = np.where(half_gap > 0, (0.5 * x) / half_gap, 0.0)
    u = np.empty((amplitudes.size, 2, 2), dtype=complex)
    u[:, 0, 0] = c - 1j * s * n_z
    u[:, 0, 1] = -1j * s * n_x
    u[:, 1, 0] = -1j * s * n_x
    u[:, 1, 1] = c + 1j * s * n_z
    return u


def _chain(mats: np.ndarray) -> np.ndarray:
    """Ordered product mats[-1] @ ... @ mats[0] by pairwise reduction."""
    while mats.shape[0] > 1:
        m = mats.shape[0] // 2
        paired = np.einsum("kij,kjl->kil", mats[1:2 * m:2], mats[0:2 * m:2])
        if mats.shape[0] % 2:
            paired = np.concatenate([paired, mats[-1:]], axis=0)
        mats = paired
    return mats[0]


def run_gate_on_target(x_eff: float, table: PulseSchedule,
                       target_state: RegisterState,
                       noise: NoiseModel | None = None,
                       t2_target: float | None = None) -> RegisterState:
    """One gate on the reduced target qubit at fixed effective field.

    `target_state` is a single-qubit RegisterState.  With dephasing the
    exact per-segment coherence decay of the target (rate 1/t2_target)
    is interleaved; control dephasing has no effect on classical control
    states and is omitted from the reduction.
    """
    if target_state.n_qubits != 1:
        raise ConfigError("reduced gate needs a single-qubit state")
    noise = noise or NoiseModel.none()
    us = _segment_unitaries(table.amplitudes, table.durations, x_eff)
    had = HADAMARD.astype(complex)
    if noise.is_noiseless and target_state.kind == "pure":
        u_total = _chain(us)
        psi = u_total @ (had @ target_state.data)
        return RegisterState("pure", psi, 1, check=False)
    t2 = t2_target if t2_target is not None else noise.t2_for(0)
    rho = apply_single_qubit_unitary(target_state.to_mixed(), 0, had).data
    supers = np.einsum("kab,kcd->kacbd", us, us.conj()).reshape(-1, 4, 4)
    if not noise.is_noiseless:
        g = np.exp(-table.durations / t2)
        decay = np.ones((table.n_segments, 4))
        decay[:, 1] = g
        decay[:, 2] = g
        supers = decay[:, :, None] * supers
    s_total = _chain(supers)
    rho = (s_total @ rho.reshape(4)).reshape(2, 2)
    return RegisterState("mixed", rho, 1, check=False)


# ---------------------------------------------------------------------------
# Activation sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSeries:
    """One swept trace: coupling scales move along `alphas`.

    `control_bits` prepares the control qubits; flipping them scans the
    negative range of the input field.  `theta_scale` rescales the bias
    coupling for the whole series; with `scan_bias` the bias scale also
    follows alpha, which doubles the swept field range (the bias then
    acts as a second control).
    """

    label: str
    alphas: tuple[float, ...]
    control_bits: str = "0"
    bias_bit: int = 0
    theta_scale: float = 0.0
    scan_bias: bool = False


@dataclass
class ExperimentRecord:
    """Tabular results of a virtual experiment, exportable as CSV/JSON."""

    columns: list[str]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow(["" if v is None else repr(v) if
                                 isinstance(v, float) else v for v in row])

    def to_json(self, path) -> None:
        payload = {
            "records": [dict(zip(self.columns, row)) for row in self.rows],
            "metadata": self.metadata,
        }
        with open(path, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


def _series_config(template: SpinChainConfig, alpha: float,
                   series: SweepSeries) -> SpinChainConfig:
    scales = {j: alpha * template.scale(j) for j in template.couplings}
    bias = template.bias_strength * series.theta_scale
    if series.scan_bias:
        bias *= alpha
    return replace(template, coupling_scales=scales, bias_strength=bias)


def _series_bits(config: SpinChainConfig, series: SweepSeries) -> str:
    bits = ["0"] * config.n_qubits
    controls = sorted(config.couplings)
    if len(series.control_bits) != len(controls):
        raise ConfigError("control_bits length must match the control count")
    for b, j in zip(series.control_bits, controls):
        bits[j] = b
    if config.bias_index is not None:
        bits[config.bias_index] = str(series.bias_bit)
    return "".join(bits)


def sweep_activation(template: PerceptronGateSpec,
                     series: Sequence[SweepSeries],
                     shots: int | None = None,
                     seed: int = 0,
                     analytic_only: bool = False) -> ExperimentRecord:
    """Scan the input field and tabulate simulated vs analytic activation.

    One pulse table per series, designed for the series' worst-case
    field (the hardware runs a fixed ramp while the decoupling sequence
    retunes the couplings point by point).  The swept 'x' axis excludes
    the static bias contribution, so biased series appear as displaced
    sigmoids; with `scan_bias` the bias field is part of the sweep axis.
    With `analytic_only` no state is propagated and only the activation
    curve is tabulated.
    """
    cfg = template.config
    omega_f = template.schedule.omega_f
    rows: list[tuple] = []
    rms: dict[str, float] = {}
    seed_seq = np.random.SeedSequence(seed)
    for ser in series:
        table = None
        if not analytic_only:
            alpha_max = max(abs(a) for a in ser.alphas)
            worst = _series_config(cfg, alpha_max, ser).worst_case_field()
            x_ref = worst if worst > 0 else cfg.j_max
            table = build_schedule(template.schedule, x_ref_default=x_ref)
        rng = np.random.default_rng(seed_seq.spawn(1)[0])
        sq_sum = 0.0
        for alpha in ser.alphas:
            point_cfg = _series_config(cfg, alpha, ser)
            bits = _series_bits(point_cfg, ser)
            x_total = target_field(point_cfg, bits)
            x_bias = 0.0
            if point_cfg.bias_index is not None and not ser.scan_bias:
                zb = 2 * int(bits[point_cfg.bias_index]) - 1
                x_bias = point_cfg.bias_strength * zb
            x_scan = x_total - x_bias
            p_ana = activation(x_total / omega_f)
            p_sim = None
            stderr = None
            if not analytic_only:
                target0 = make_basis_state(1, "0")
                out = run_gate_on_target(x_total, table, target0,
                                         template.noise)
                p_sim = out.probability_one(0)
                if shots is not None:
                    p_sim = rng.binomial(shots, p_sim) / shots
                    stderr = math.sqrt(max(p_sim * (1.0 - p_sim), 0.0) / shots)
                sq_sum += (p_sim - p_ana) ** 2
            rows.append((ser.label, alpha, x_scan / omega_f, p_sim, p_ana,
                         stderr))
        if not analytic_only:
            rms[ser.label] = math.sqrt(sq_sum / len(ser.alphas))
    record = ExperimentRecord(
        columns=["series", "alpha", "x_over_omega_f", "p1_simulated",
                 "p1_analytic", "p1_stderr"],
        rows=rows,
        metadata={
            "omega_f_rad_per_s": omega_f,
            "shots": shots,
            "seed": seed,
            "analytic_only": analytic_only,
            "rms_deviation_from_activation": rms,
        },
    )
    return record


# ---------------------------------------------------------------------------
# Ramsey coupling measurement
# ---------------------------------------------------------------------------

def _pulse_half_pi(phase: float) -> np.ndarray:
    """pi/2 rotation about the Bloch axis at `phase` in the xy plane."""
    sigma = np.array([[0.0, np.exp(1j * phase)],
                      [np.exp(-1j * phase), 0.0]])
    return (np.eye(2) - 1j * sigma) / math.sqrt(2.0)


@dataclass
class RamseyFringe:
    control_bit: int
    phases: np.ndarray
    p1: np.ndarray
    fitted_phase: float
    fitted_phase_stderr: float
    contrast: float


@dataclass
class RamseyResult:
    coupling: float
    coupling_stderr: float
    delta_phi: float
    evolve_time: float
    fringes: list[RamseyFringe]


def _fit_fringe(phases: np.ndarray, p1: np.ndarray) -> tuple[float, float, float]:
    """Least-squares cosine fit; returns (phase, phase stderr, contrast)."""
    x = np.column_stack([np.cos(phases), np.sin(phases),
                         np.ones_like(phases)])
    coef, *_ = np.linalg.lstsq(x, p1, rcond=None)
    a, b, _ = coef
    amp2 = a * a + b * b
    contrast = 2.0 * math.sqrt(amp2)
    if contrast < 1e-9:
        raise FitError("flat Ramsey fringe: cannot extract a phase")
    delta = math.atan2(-b, a)
    resid = p1 - x @ coef
    dof = max(len(p1) - 3, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(x.T @ x)
    grad = np.array([b / amp2, -a / amp2, 0.0])
    var = float(grad @ cov @ grad)
    return delta, math.sqrt(max(var, 0.0)), contrast


def measure_coupling_ramsey(config: SpinChainConfig, evolve_time: float,
                            phases: Sequence[float],
                            noise: NoiseModel | None = None,
                            shots: int | None = None,
                            seed: int = 0) -> RamseyResult:
    """Extract the effective target-control coupling from fringe phases.

    Target |0> -> pi/2 pulse -> free Ising evolution for `evolve_time` ->
    probe pi/2 pulse with scanned phase -> P1 fringe.  Repeating with the
    control flipped shifts the fringe by 2 J_eff T, so the coupling is
    delta_phi / (2 T).  The phase difference is wrapped to (-pi, pi];
    choose T with |2 J T| < pi for an unambiguous value.  Any common
    detuning drops out of the difference.
    """
    if evolve_time <= 0:
        raise ConfigError("evolve_time must be positive")
    phases = np.asarray(phases, dtype=float)
    if phases.size < 4 or phases.max() - phases.min() < 2 * math.pi * (1 - 1e-9):
        raise ConfigError("phase grid must cover at least 2*pi")
    noise = noise or NoiseModel.none()
    control = min(config.couplings) if config.couplings else None
    free = constant_schedule(0.0, evolve_time)
    rng = np.random.default_rng(seed)
    fringes = []
    for bit in (0, 1):
        bits = ["0"] * config.n_qubits
        if control is not None:
            bits[control] = str(bit)
        state = make_basis_state(config.n_qubits, "".join(bits))
        state = apply_single_qubit_unitary(state, config.target_index,
                                           _pulse_half_pi(0.0))
        state = propagate_piecewise(state, config, free, noise, seed=seed)
        p1 = np.empty(phases.size)
        for k, phi in enumerate(phases):
            probed = apply_single_qubit_unitary(state, config.target_index,
                                                _pulse_half_pi(phi))
            p1[k] = probed.probability_one(config.target_index)
        if shots is not None:
            p1 = rng.binomial(shots, p1) / shots
        delta, stderr, contrast = _fit_fringe(phases, p1)
        fringes.append(RamseyFringe(bit, phases, p1, delta, stderr, contrast))
    delta_phi = fringes[1].fitted_phase - fringes[0].fitted_phase
    delta_phi = math.remainder(delta_phi, 2 * math.pi)
    stderr = math.hypot(fringes[0].fitted_phase_stderr,
                        fringes[1].fitted_phase_stderr) / (2 * evolve_time)
    return RamseyResult(
        coupling=delta_phi / (2 * evolve_time),
        coupling_stderr=stderr,
        delta_phi=delta_phi,
        evolve_time=evolve_time,
        fringes=fringes,
    )
