"""Command-line front end: named experiments from JSON configs to CSV/JSON.

Verbs: sweep | xnor | optimize | schedule | ramsey.  Every run is
deterministic given (config, --seed); every JSON output embeds the fully
resolved configuration so it can be re-run bit-identically.  Frequencies
in configs are plain Hz (field names carry explicit units; *_ms keys are
rejected), times are seconds.  Exit codes: 0 success, 2 bad
configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .core import (ConfigError, NoiseModel, NumericsError, TWO_PI, to_hz)
from .gate import (ExperimentRecord, PerceptronGateSpec, SweepSeries,
                   measure_coupling_ramsey, perceptron_register,
                   sweep_activation)
from .network import (TruthTable, XNOR_TABLE, evaluate_truth_table,
                      optimize_weights, paper_xnor_program, program_from_dict,
                      program_to_dict)
from .schedule import (FaquadSpec, adiabaticity_parameter, build_schedule,
                       faquad_closed_form, write_pulse_table)

DEFAULT_SWEEP_CONFIG = {
    "register": {
        "couplings_hz": [37.5],
        "bias_hz": 37.5,
        "j_max_hz": 37.5,
    },
    "schedule": {
        "omega_i_hz": 28000.0,
        "omega_f_hz": 75.0,
        "t_f_s": 0.015,
        "n_segments": 1000,
    },
    "noise": {"kind": "none"},
    "sweep": {
        "n_alpha": 21,
        "series": [
            {"label": "theta_zero", "theta_scale": 0.0},
            {"label": "theta_plus", "theta_scale": 1.0, "bias_bit": 1},
            {"label": "theta_minus", "theta_scale": 1.0, "bias_bit": 0},
            {"label": "concurrent", "theta_scale": 1.0, "bias_bit": 1,
             "scan_bias": True},
        ],
    },
}

DEFAULT_RAMSEY_CONFIG = {
    "register": {
        "couplings_hz": [37.5],
        "j_max_hz": 37.5,
    },
    "evolve_time_s": 0.005,
    "n_phases": 25,
    "noise": {"kind": "none"},
}


def _reject_ms_keys(obj, path="") -> None:
    if isinstance(obj, dict):
        for key, val in obj.items():
            where = f"{path}.{key}" if path else key
            if key.endswith("_ms"):
                raise ConfigError(
                    f"config field {where!r}: millisecond fields are not "
                    "accepted, use seconds (*_s)")
            _reject_ms_keys(val, where)
    elif isinstance(obj, list):
        for i, val in enumerate(obj):
            _reject_ms_keys(val, f"{path}[{i}]")


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_ms_keys(data)
    return data


def _atomic_write(path, writer) -> None:
    """Write via a sibling temp file and rename into place."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _dump_json(payload: dict, path) -> None:
    def write(tmp):
        with open(tmp, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _atomic_write(path, write)


def _register_from_config(section: dict):
    try:
        couplings_hz = section["couplings_hz"]
    except KeyError as exc:
        raise ConfigError("register config is missing field 'couplings_hz'") from exc
    bias_hz = section.get("bias_hz")
    return perceptron_register(
        couplings=[TWO_PI * float(c) for c in couplings_hz],
        bias_strength=TWO_PI * float(bias_hz) if bias_hz is not None else None,
        coupling_scales=section.get("coupling_scales"),
        j_max=TWO_PI * float(section["j_max_hz"]) if "j_max_hz" in section else None,
        detunings=[TWO_PI * float(v) for v in section.get("detunings_hz", [])],
    )


def _schedule_from_config(section: dict) -> FaquadSpec:
    try:
        spec = FaquadSpec(
            omega_i=TWO_PI * float(section["omega_i_hz"]),
            omega_f=TWO_PI * float(section["omega_f_hz"]),
            t_f=float(section["t_f_s"]),
            x_ref=(TWO_PI * float(section["x_ref_hz"])
                   if section.get("x_ref_hz") is not None else None),
            n_segments=int(section.get("n_segments", 1000)),
            generator=section.get("generator", "ode_faquad"),
        )
    except KeyError as exc:
        raise ConfigError(
            f"schedule config is missing field {exc.args[0]!r}") from exc
    return spec


def _noise_from_config(section: dict | None) -> NoiseModel:
    if not section:
        return NoiseModel.none()
    kind = section.get("kind", "none")
    if kind == "none":
        return NoiseModel.none()
    return NoiseModel(
        kind=kind,
        t2=section.get("t2_s", 0.020),
        representation=section.get("representation", "density_matrix"),
        n_trajectories=int(section.get("n_trajectories", 1024)),
    )


def _series_from_config(sweep_cfg: dict) -> list[SweepSeries]:
    if "alphas" in sweep_cfg:
        alphas = tuple(float(a) for a in sweep_cfg["alphas"])
    else:
        alphas = tuple(np.linspace(-1.0, 1.0, int(sweep_cfg.get("n_alpha", 21))))
    series = []
    for raw in sweep_cfg.get("series", [{"label": "theta_zero"}]):
        series.append(SweepSeries(
            label=str(raw.get("label", f"series_{len(series)}")),
            alphas=tuple(raw.get("alphas", alphas)),
            control_bits=str(raw.get("control_bits", "0")),
            bias_bit=int(raw.get("bias_bit", 0)),
            theta_scale=float(raw.get("theta_scale", 0.0)),
            scan_bias=bool(raw.get("scan_bias", False)),
        ))
    return series


def _config_echo(config: dict, seed: int) -> dict:
    return {"resolved_config": config, "seed": seed}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_sweep(args) -> int:
    config = load_config(args.config) if args.config else json.loads(
        json.dumps(DEFAULT_SWEEP_CONFIG))
    register = _register_from_config(config.get("register", {}))
    spec = _schedule_from_config(config.get("schedule", {}))
    noise = _noise_from_config(config.get("noise"))
    series = _series_from_config(config.get("sweep", {}))
    shots = config.get("sweep", {}).get("shots")
    gate_spec = PerceptronGateSpec(register, spec, noise)
    record = sweep_activation(gate_spec, series, shots=shots, seed=args.seed,
                              analytic_only=args.analytic_only)
    record.metadata.update(_config_echo(config, args.seed))
    _atomic_write(args.output, record.to_csv)
    _atomic_write(_sidecar(args.output), record.to_json)
    return 0


def cmd_xnor(args) -> int:
    if args.config:
        config = load_config(args.config)
        if "program" in config:
            program = program_from_dict(config["program"])
        elif "program_path" in config:
            program = program_from_dict(load_config(config["program_path"]))
        else:
            raise ConfigError("xnor config is missing field 'program' "
                              "(or 'program_path')")
        noise = _noise_from_config(config.get("noise",
                                              {"kind": "dephasing"}))
        config_echo = config
    else:
        program = paper_xnor_program()
        noise = NoiseModel.dephasing()
        config_echo = {"program": program_to_dict(program),
                       "noise": {"kind": "dephasing", "t2_s": 0.020}}
    if args.noiseless:
        noise = NoiseModel.none()
        config_echo = dict(config_echo, noise={"kind": "none"})

    if program.n_controls != 2:
        raise ConfigError("xnor command expects a 2-control program")
    result = evaluate_truth_table(program, noise, seed=args.seed)
    contrast = result.parity_contrast(XNOR_TABLE)
    rows = []
    for bits in sorted(result.outputs):
        row = [bits, result.outputs[bits]]
        row.extend(result.control_populations[bits])
        rows.append(tuple(row))
    record = ExperimentRecord(
        columns=["input_bits", "p1_target"] +
                [f"p1_control_{j}" for j in range(program.n_controls)],
        rows=rows,
        metadata={"parity_contrast": contrast,
                  "noise_kind": noise.kind,
                  **_config_echo(config_echo, args.seed)})
    _atomic_write(args.output, record.to_csv)
    _atomic_write(_sidecar(args.output), record.to_json)
    print(f"parity contrast: {contrast:.4f}")
    return 0


def cmd_optimize(args) -> int:
    table_data = load_config(args.table)
    if "rows" not in table_data:
        raise ConfigError("truth-table file is missing field 'rows'")
    table = TruthTable({str(k): float(v) for k, v in table_data["rows"].items()})
    noise = _noise_from_config(table_data.get("noise"))
    result = optimize_weights(
        table,
        n_layers=args.layers,
        j_max=TWO_PI * args.j_max_hz,
        omega_i=TWO_PI * args.omega_i_hz,
        omega_f=TWO_PI * args.omega_f_hz,
        t_f=args.t_f_s,
        n_segments=args.n_segments,
        noise=noise,
        include_bias=args.include_bias,
        n_starts=args.starts,
        seed=args.seed,
        threads=args.threads,
    )
    payload = program_to_dict(result.program)
    payload["loss"] = result.loss
    payload["seed"] = result.seed
    payload["start_losses"] = result.start_losses
    payload["n_evaluations"] = result.n_evaluations
    _dump_json(payload, args.output)
    print(f"loss: {result.loss:.6f}")
    return 0


def cmd_schedule(args) -> int:
    spec = FaquadSpec(
        omega_i=TWO_PI * args.omega_i_hz,
        omega_f=TWO_PI * args.omega_f_hz,
        t_f=args.t_f_s,
        x_ref=TWO_PI * args.x_ref_hz if args.x_ref_hz else None,
        n_segments=args.n_segments,
        generator=args.generator,
    )
    if spec.x_ref is None:
        spec = spec.resolved(TWO_PI * 37.5)
    meta: dict = {"generator": spec.generator,
                  "omega_i_hz": to_hz(spec.omega_i),
                  "omega_f_hz": to_hz(spec.omega_f),
                  "t_f_s": spec.t_f,
                  "x_ref_hz": to_hz(spec.x_ref),
                  "n_segments": spec.n_segments,
                  "seed": args.seed}
    if spec.generator == "closed_form":
        table, report = faquad_closed_form(spec)
        meta["boundary_report"] = report.as_dict()
    else:
        table = build_schedule(spec)
        c = adiabaticity_parameter(table, spec.x_ref)
        meta["adiabaticity_parameter_mean"] = float(np.mean(c))
        meta["adiabaticity_parameter_spread"] = float(
            (np.max(c) - np.min(c)) / np.mean(c))
    _atomic_write(args.output, lambda p: write_pulse_table(table, p))
    _dump_json(meta, _sidecar(args.output))
    return 0


def cmd_ramsey(args) -> int:
    config = load_config(args.config) if args.config else json.loads(
        json.dumps(DEFAULT_RAMSEY_CONFIG))
    register = _register_from_config(config.get("register", {}))
    noise = _noise_from_config(config.get("noise"))
    evolve_time = float(args.time if args.time is not None
                        else config.get("evolve_time_s", 0.005))
    n_phases = int(config.get("n_phases", 25))
    phases = np.linspace(0.0, 2.0 * math.pi, n_phases)
    shots = config.get("shots")
    result = measure_coupling_ramsey(register, evolve_time, phases,
                                     noise=noise, shots=shots, seed=args.seed)
    payload = {
        "coupling_hz": to_hz(result.coupling),
        "coupling_stderr_hz": to_hz(result.coupling_stderr),
        "delta_phi_rad": result.delta_phi,
        "evolve_time_s": result.evolve_time,
        "contrasts": [fr.contrast for fr in result.fringes],
        "fringes": [
            {"control_bit": fr.control_bit,
             "phase_rad": list(map(float, fr.phases)),
             "p1": list(map(float, fr.p1))}
            for fr in result.fringes
        ],
        **_config_echo(config, args.seed),
    }
    _dump_json(payload, args.output)
    print(f"coupling: {to_hz(result.coupling):.4f} Hz "
          f"+- {to_hz(result.coupling_stderr):.4f} Hz")
    return 0


def _sidecar(path) -> str:
    base, ext = os.path.splitext(str(path))
    return base + ".json" if ext.lower() != ".json" else base + ".meta.json"


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qperceptron",
        description="Trapped-ion quantum perceptron gate simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0,
                       help="root seed for all randomness (default 0)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for parallel sections")
        p.add_argument("--output", "-o", required=True,
                       help="output file (CSV commands write a JSON sidecar)")

    p = sub.add_parser("sweep", help="activation sweep (sigmoid traces)")
    common(p)
    p.add_argument("--config", help="JSON config; omitted -> built-in defaults")
    p.add_argument("--analytic-only", action="store_true",
                   help="skip propagation, emit the analytic activation curve")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("xnor", help="two-layer XNOR truth-table experiment")
    common(p)
    p.add_argument("--config", help="JSON config with program/program_path")
    p.add_argument("--noiseless", action="store_true",
                   help="disable dephasing")
    p.set_defaults(func=cmd_xnor)

    p = sub.add_parser("optimize", help="synthesize weights for a truth table")
    common(p)
    p.add_argument("--table", required=True, help="truth-table JSON file")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--j-max-hz", type=float, default=37.5)
    p.add_argument("--omega-i-hz", type=float, default=28000.0)
    p.add_argument("--omega-f-hz", type=float, default=37.5)
    p.add_argument("--t-f-s", type=float, default=0.015)
    p.add_argument("--n-segments", type=int, default=1000)
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--include-bias", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("schedule", help="emit a discretized pulse table")
    common(p)
    p.add_argument("--omega-i-hz", type=float, default=28000.0)
    p.add_argument("--omega-f-hz", type=float, default=37.5)
    p.add_argument("--t-f-s", type=float, default=0.015)
    p.add_argument("--x-ref-hz", type=float, default=None)
    p.add_argument("--n-segments", type=int, default=1000)
    p.add_argument("--generator", default="ode_faquad",
                   choices=["ode_faquad", "closed_form", "linear"])
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("ramsey", help="virtual coupling measurement")
    common(p)
    p.add_argument("--config", help="JSON register config")
    p.add_argument("--time", "-T", type=float, default=None,
                   help="free evolution time in seconds")
    p.set_defaults(func=cmd_ramsey)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
