"""Layered perceptron-gate networks and truth-table weight synthesis.

A program stacks perceptron gates on one target qubit; every layer
re-applies the Hadamard and runs its own ramp-down with its own
effective couplings.  The target's state (including coherences and the
dynamical phases accumulated against the dressed eigenbasis) is carried
from layer to layer with no reset, which is exactly why a two-layer
stack can realize parity functions a single monotone activation cannot.

Weight synthesis minimizes the squared truth-table error with a
multi-start Nelder-Mead search whose inner forward model is the full
quantum propagation; a classical activation-composition surrogate is
used only to seed one of the starts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .core import (ConfigError, J_MAX_DEFAULT, NoiseModel, RegisterState,
                   SpinChainConfig, TWO_PI, make_basis_state, to_hz)
from .gate import (PerceptronGateSpec, run_gate_on_target,
                   run_perceptron_gate)
from .hamiltonian import activation
from .schedule import FaquadSpec, build_schedule

SCALE_TOL = 1e-9


@dataclass(frozen=True)
class GateLayer:
    """Effective couplings of one gate, as fractions of j_max in [-1, 1]."""

    coupling_scales: tuple[float, ...]
    bias_scale: float = 0.0
    schedule: FaquadSpec = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.schedule is None:
            raise ConfigError("layer needs a ramp schedule")
        for s in (*self.coupling_scales, self.bias_scale):
            if abs(s) > 1.0 + SCALE_TOL:
                raise ConfigError("coupling scale outside [-1, 1]")


@dataclass(frozen=True)
class GateProgram:
    """Ordered perceptron-gate layers over a fixed set of control qubits.

    Effective couplings are `scale * j_max`; the bias qubit (when any
    layer uses it) is prepared in |1>, so a layer's signed bias field is
    `bias_scale * j_max`.
    """

    n_controls: int
    layers: tuple[GateLayer, ...]
    j_max: float = J_MAX_DEFAULT

    def __post_init__(self) -> None:
        if self.n_controls < 1:
            raise ConfigError("need at least one control qubit")
        if len(self.layers) < 1:
            raise ConfigError("need at least one layer")
        for layer in self.layers:
            if len(layer.coupling_scales) != self.n_controls:
                raise ConfigError("layer scale count must match n_controls")
        if self.j_max <= 0:
            raise ConfigError("j_max must be positive")

    @property
    def has_bias(self) -> bool:
        return any(layer.bias_scale != 0.0 for layer in self.layers)

    def layer_field(self, layer: GateLayer, control_bits: str) -> float:
        z = [2 * int(b) - 1 for b in control_bits]
        x = sum(s * zj for s, zj in zip(layer.coupling_scales, z))
        return self.j_max * (x + layer.bias_scale)

    def layer_worst_field(self, layer: GateLayer) -> float:
        return self.j_max * (sum(abs(s) for s in layer.coupling_scales)
                             + abs(layer.bias_scale))

    def layer_config(self, layer: GateLayer) -> SpinChainConfig:
        """Full-register description of one layer (controls, target, bias)."""
        m = self.n_controls
        kwargs = dict(
            n_qubits=m + 1 + (1 if self.has_bias else 0),
            target_index=m,
            couplings={j: self.j_max for j in range(m)},
            coupling_scales={j: float(s) for j, s in
                             enumerate(layer.coupling_scales)},
            j_max=self.j_max,
        )
        if self.has_bias:
            kwargs["bias_index"] = m + 1
            kwargs["bias_strength"] = layer.bias_scale * self.j_max
        return SpinChainConfig(**kwargs)


@dataclass(frozen=True)
class TruthTable:
    """Target excitation probability for every control bit pattern."""

    rows: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ConfigError("truth table is empty")
        n = len(next(iter(self.rows)))
        if len(self.rows) != 2**n:
            raise ConfigError(f"expected {2**n} rows for {n} controls")
        for bits, p in self.rows.items():
            if len(bits) != n or set(bits) - {"0", "1"}:
                raise ConfigError(f"bad truth-table key {bits!r}")
            if not 0.0 <= p <= 1.0:
                raise ConfigError("target probabilities must lie in [0, 1]")

    @property
    def n_controls(self) -> int:
        return len(next(iter(self.rows)))

    def ordered_bits(self) -> list[str]:
        return sorted(self.rows)


XNOR_TABLE = TruthTable({"00": 1.0, "01": 0.0, "10": 0.0, "11": 1.0})


def _check_bits(bits: str, n_controls: int) -> None:
    if len(bits) != n_controls or set(bits) - {"0", "1"}:
        raise ConfigError("control bits must be a 0/1 string, one per control")


def run_network(program: GateProgram, control_bits: str,
                noise: NoiseModel | None = None, seed: int = 0,
                full_register: bool = False) -> float:
    """Final target P(|1>) after all layers, starting from target |0>."""
    _check_bits(control_bits, program.n_controls)
    noise = noise or NoiseModel.none()
    if full_register or (not noise.is_noiseless
                         and noise.representation == "trajectories"):
        return _run_network_full(program, control_bits, noise, seed)
    state = make_basis_state(1, "0")
    for layer in program.layers:
        x = program.layer_field(layer, control_bits)
        worst = program.layer_worst_field(layer)
        table = build_schedule(layer.schedule,
                               x_ref_default=worst if worst > 0 else program.j_max)
        state = run_gate_on_target(x, table, state, noise,
                                   t2_target=noise.t2_for(program.n_controls)
                                   if not noise.is_noiseless else None)
    return state.probability_one(0)


def _run_network_full(program: GateProgram, control_bits: str,
                      noise: NoiseModel, seed: int) -> float:
    bits = control_bits + "0" + ("1" if program.has_bias else "")
    config0 = program.layer_config(program.layers[0])
    state: RegisterState = make_basis_state(config0.n_qubits, bits)
    seeds = np.random.SeedSequence(seed).generate_state(len(program.layers))
    for layer, layer_seed in zip(program.layers, seeds):
        spec = PerceptronGateSpec(program.layer_config(layer), layer.schedule,
                                  noise)
        state = run_perceptron_gate(state, spec, seed=int(layer_seed))
    return state.probability_one(program.n_controls)


@dataclass
class TruthTableResult:
    outputs: dict[str, float]
    control_populations: dict[str, tuple[float, ...]]

    def parity_contrast(self, table: TruthTable) -> float:
        """min over high-target rows minus max over low-target rows."""
        high = [p for bits, p in self.outputs.items() if table.rows[bits] >= 0.5]
        low = [p for bits, p in self.outputs.items() if table.rows[bits] < 0.5]
        if not high or not low:
            raise ConfigError("contrast needs both high and low target rows")
        return min(high) - max(low)


def evaluate_truth_table(program: GateProgram,
                         noise: NoiseModel | None = None, seed: int = 0,
                         full_register: bool = False) -> TruthTableResult:
    """Run every control input; report target and control populations."""
    outputs: dict[str, float] = {}
    controls: dict[str, tuple[float, ...]] = {}
    for idx in range(2**program.n_controls):
        bits = format(idx, f"0{program.n_controls}b")
        if full_register:
            p, pops = _evaluate_row_full(program, bits, noise or NoiseModel.none(),
                                         seed)
        else:
            p = run_network(program, bits, noise, seed=seed)
            pops = tuple(float(int(b)) for b in bits)
        outputs[bits] = p
        controls[bits] = pops
    return TruthTableResult(outputs, controls)


def _evaluate_row_full(program: GateProgram, bits: str, noise: NoiseModel,
                       seed: int) -> tuple[float, tuple[float, ...]]:
    full_bits = bits + "0" + ("1" if program.has_bias else "")
    config0 = program.layer_config(program.layers[0])
    state: RegisterState = make_basis_state(config0.n_qubits, full_bits)
    seeds = np.random.SeedSequence(seed).generate_state(len(program.layers))
    for layer, layer_seed in zip(program.layers, seeds):
        spec = PerceptronGateSpec(program.layer_config(layer), layer.schedule,
                                  noise)
        state = run_perceptron_gate(state, spec, seed=int(layer_seed))
    pops = tuple(state.probability_one(j) for j in range(program.n_controls))
    return state.probability_one(program.n_controls), pops


def network_loss(program: GateProgram, table: TruthTable,
                 noise: NoiseModel | None = None, seed: int = 0) -> float:
    """Sum of squared deviations of the achieved table from the target."""
    if table.n_controls != program.n_controls:
        raise ConfigError("truth table size does not match the program")
    return sum(
        (run_network(program, bits, noise, seed=seed) - p) ** 2
        for bits, p in table.rows.items()
    )


# ---------------------------------------------------------------------------
# Weight synthesis
# ---------------------------------------------------------------------------

@dataclass
class WeightSynthesis:
    program: GateProgram
    loss: float
    n_evaluations: int
    start_losses: list[float]
    seed: int


def classical_surrogate_loss(params: np.ndarray, table: TruthTable,
                             n_layers: int, include_bias: bool,
                             u_max: float) -> float:
    """Activation-composition loss ignoring coherences (seeding only)."""
    per = table.n_controls + (1 if include_bias else 0)
    total = 0.0
    for bits, target in table.rows.items():
        z = np.array([2 * int(b) - 1 for b in bits], dtype=float)
        p = 0.0
        for layer in range(n_layers):
            w = params[layer * per:(layer + 1) * per]
            u = float(w[:table.n_controls] @ z)
            if include_bias:
                u += float(w[-1])
            f = activation(u * u_max)
            p = (1.0 - p) * f + p * (1.0 - f)
        total += (p - target) ** 2
    return total


def _params_to_program(params: np.ndarray, table: TruthTable, n_layers: int,
                       include_bias: bool, j_max: float,
                       schedule: FaquadSpec) -> GateProgram:
    m = table.n_controls
    per = m + (1 if include_bias else 0)
    layers = []
    for k in range(n_layers):
        w = params[k * per:(k + 1) * per]
        layers.append(GateLayer(
            coupling_scales=tuple(float(np.clip(v, -1.0, 1.0)) for v in w[:m]),
            bias_scale=float(np.clip(w[m], -1.0, 1.0)) if include_bias else 0.0,
            schedule=schedule,
        ))
    return GateProgram(n_controls=m, layers=tuple(layers), j_max=j_max)


def optimize_weights(table: TruthTable, n_layers: int,
                     j_max: float = J_MAX_DEFAULT,
                     omega_i: float = TWO_PI * 28e3,
                     omega_f: float = TWO_PI * 37.5,
                     t_f: float = 0.015,
                     n_segments: int = 1000,
                     noise: NoiseModel | None = None,
                     include_bias: bool = False,
                     n_starts: int = 16,
                     pool_size: int = 512,
                     fatol: float = 1e-4,
                     seed: int = 0,
                     threads: int = 1) -> WeightSynthesis:
    """Fit per-layer coupling scales to a target truth table.

    Multi-start derivative-free simplex search: a seeded pool of random
    candidates is screened with the quantum forward model, the best
    `n_starts - 1` plus the classical-surrogate champion seed independent
    Nelder-Mead refinements, and the best refined program wins.  Every
    candidate outside |scale| <= 1 is scored by a constraint penalty
    without being simulated.  Deterministic for a fixed seed at any
    thread count.
    """
    if n_layers < 1:
        raise ConfigError("need at least one layer")
    if j_max <= 0:
        raise ConfigError("infeasible constraints: j_max must be positive")
    if n_starts < 1 or pool_size < n_starts:
        raise ConfigError("need pool_size >= n_starts >= 1")
    noise = noise or NoiseModel.none()
    schedule = FaquadSpec(omega_i, omega_f, t_f, n_segments=n_segments)
    m = table.n_controls
    per = m + (1 if include_bias else 0)
    dim = n_layers * per
    evaluations = 0

    def quantum_loss(params: np.ndarray) -> float:
        nonlocal evaluations
        excess = np.abs(params) - 1.0
        if np.any(excess > 0):
            return 10.0 + 100.0 * float(np.sum(np.clip(excess, 0, None) ** 2))
        evaluations += 1
        program = _params_to_program(params, table, n_layers, include_bias,
                                     j_max, schedule)
        return network_loss(program, table, noise, seed=seed)

    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    pool = rng.uniform(-1.0, 1.0, size=(pool_size, dim))
    pool_losses = np.array([quantum_loss(p) for p in pool])
    order = np.argsort(pool_losses, kind="stable")
    starts = [pool[i] for i in order[:max(n_starts - 1, 1)]]

    surrogate_losses = np.array([
        classical_surrogate_loss(p, table, n_layers, include_bias,
                                 j_max / omega_f) for p in pool])
    starts.append(pool[int(np.argmin(surrogate_losses))])

    def refine(x0: np.ndarray) -> tuple[float, np.ndarray]:
        res = minimize(quantum_loss, x0, method="Nelder-Mead",
                       options={"fatol": fatol, "xatol": 1e-3,
                                "maxfev": 600 * dim, "disp": False})
        return float(res.fun), np.asarray(res.x)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool_exec:
            refined = list(pool_exec.map(refine, starts))
    else:
        refined = [refine(x0) for x0 in starts]

    start_losses = [loss for loss, _ in refined]
    best_idx = min(range(len(refined)), key=lambda i: (refined[i][0], i))
    best_params = refined[best_idx][1]
    program = _params_to_program(best_params, table, n_layers, include_bias,
                                 j_max, schedule)
    final_loss = network_loss(program, table, noise, seed=seed)
    return WeightSynthesis(program=program, loss=final_loss,
                           n_evaluations=evaluations,
                           start_losses=start_losses, seed=seed)


# ---------------------------------------------------------------------------
# Program serialization (frequencies in plain Hz for readability)
# ---------------------------------------------------------------------------

def program_to_dict(program: GateProgram) -> dict:
    return {
        "layers": [
            {
                "couplings_hz": [to_hz(s * program.j_max)
                                 for s in layer.coupling_scales],
                "bias_hz": to_hz(layer.bias_scale * program.j_max),
                "omega_i_hz": to_hz(layer.schedule.omega_i),
                "omega_f_hz": to_hz(layer.schedule.omega_f),
                "t_f_s": layer.schedule.t_f,
                "n_segments": layer.schedule.n_segments,
            }
            for layer in program.layers
        ],
        "j_max_hz": to_hz(program.j_max),
    }


def program_from_dict(data: Mapping) -> GateProgram:
    try:
        j_max_hz = data["j_max_hz"]
        raw_layers = data["layers"]
    except KeyError as exc:
        raise ConfigError(f"program is missing field {exc.args[0]!r}") from exc
    if not raw_layers:
        raise ConfigError("program has no layers")
    j_max = TWO_PI * float(j_max_hz)
    layers = []
    n_controls = None
    for k, raw in enumerate(raw_layers):
        try:
            couplings_hz = raw["couplings_hz"]
            schedule = FaquadSpec(
                omega_i=TWO_PI * float(raw["omega_i_hz"]),
                omega_f=TWO_PI * float(raw["omega_f_hz"]),
                t_f=float(raw["t_f_s"]),
                n_segments=int(raw.get("n_segments", 1000)),
            )
        except KeyError as exc:
            raise ConfigError(
                f"program layer {k} is missing field {exc.args[0]!r}") from exc
        if n_controls is None:
            n_controls = len(couplings_hz)
        scales = tuple(TWO_PI * float(c) / j_max for c in couplings_hz)
        bias_scale = TWO_PI * float(raw.get("bias_hz", 0.0)) / j_max
        layers.append(GateLayer(coupling_scales=scales, bias_scale=bias_scale,
                                schedule=schedule))
    return GateProgram(n_controls=n_controls, layers=tuple(layers),
                       j_max=j_max)


def save_program(program: GateProgram, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(program_to_dict(program), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_program(path) -> GateProgram:
    with open(path) as fh:
        return program_from_dict(json.load(fh))


def paper_xnor_program(omega_i: float = TWO_PI * 28e3,
                       omega_f: float = TWO_PI * 37.5,
                       t_f: float = 0.015,
                       n_segments: int = 1000) -> GateProgram:
    """The published two-layer XNOR weight set (couplings in Hz):
    layer 1: (+20.5, -26.5); layer 2: (+18.9, -32.1); |J| <= 37.5."""
    j_max = J_MAX_DEFAULT
    sched = FaquadSpec(omega_i, omega_f, t_f, n_segments=n_segments)
    mk = lambda a, b: GateLayer(
        coupling_scales=(TWO_PI * a / j_max, TWO_PI * b / j_max),
        schedule=sched)
    return GateProgram(n_controls=2,
                       layers=(mk(20.5, -26.5), mk(18.9, -32.1)),
                       j_max=j_max)
