"""FAQUAD ramp-down synthesis and square-pulse discretization.

The fast quasi-adiabatic ramp holds the adiabaticity parameter

    c(t) = |d theta/dt| / (2 sqrt(Omega^2 + x_ref^2)),   theta = arctan(Omega/x_ref)

constant in time.  Substituting u = Omega / sqrt(Omega^2 + x_ref^2) gives
the identity c = |du/dt| / (2 x_ref), so the constant-c ramp is exactly the
curve whose u is linear in t; that closed form of the ODE solution is what
`faquad_ode` evaluates.

A published closed-form expression for the same ramp is provided behind
`faquad_closed_form`.  As printed it does not meet its own boundary
condition at s = 1 under any unit reading we tried (evaluated with
amplitudes in units of omega_i, it ends at omega_f^2/omega_i instead of
omega_f), so it ships with an automatic boundary report instead of being
the default generator.

Schedules are discretized DDS-style into square pulses of variable length
with a uniform amplitude step between consecutive segments.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, PulseSchedule

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

GENERATORS = ("ode_faquad", "closed_form", "linear")


@dataclass(frozen=True)
class FaquadSpec:
    """Ramp-down request: omega_i -> omega_f over t_f seconds.

    x_ref is the input field (rad/s) the adiabaticity is optimized for;
    if None it is resolved by the caller to the register's worst-case
    field.  n_segments is the DDS square-pulse count.
    """

    omega_i: float
    omega_f: float
    t_f: float
    x_ref: float | None = None
    n_segments: int = 1000
    generator: str = "ode_faquad"

    def __post_init__(self) -> None:
        if not self.omega_i >= self.omega_f >= 0.0:
            raise ConfigError("need omega_i >= omega_f >= 0")
        if not self.t_f > 0.0:
            raise ConfigError("t_f must be positive")
        if self.n_segments < 2:
            raise ConfigError("n_segments must be >= 2")
        if self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.x_ref is not None and self.x_ref <= 0.0:
            raise ConfigError("x_ref must be positive")

    def resolved(self, x_ref_default: float) -> "FaquadSpec":
        if self.x_ref is not None:
            return self
        return FaquadSpec(self.omega_i, self.omega_f, self.t_f,
                          x_ref=x_ref_default, n_segments=self.n_segments,
                          generator=self.generator)


# ---------------------------------------------------------------------------
# Continuous ramp profiles (each knows its exact inverse)
# ---------------------------------------------------------------------------

class FaquadRamp:
    """Constant-adiabaticity ramp: u = Omega/sqrt(Omega^2+x_ref^2) linear in t."""

    def __init__(self, omega_i: float, omega_f: float, t_f: float, x_ref: float):
        if x_ref <= 0:
            raise ConfigError("FAQUAD ramp degenerates at x_ref = 0")
        self.omega_i, self.omega_f = float(omega_i), float(omega_f)
        self.t_f, self.x_ref = float(t_f), float(x_ref)
        self.u_i = self._u(omega_i)
        self.u_f = self._u(omega_f)

    def _u(self, omega):
        return omega / np.hypot(omega, self.x_ref)

    def omega_at(self, t):
        s = np.clip(np.asarray(t, dtype=float) / self.t_f, 0.0, 1.0)
        u = self.u_i + (self.u_f - self.u_i) * s
        return self.x_ref * u / np.sqrt(1.0 - u * u)

    def time_at(self, omega):
        if self.u_i == self.u_f:
            raise ConfigError("constant ramp has no unique inverse")
        u = self._u(np.asarray(omega, dtype=float))
        return self.t_f * (u - self.u_i) / (self.u_f - self.u_i)

    @property
    def adiabaticity(self) -> float:
        """The constant c = |du/dt| / (2 x_ref)."""
        return abs(self.u_f - self.u_i) / self.t_f / (2.0 * self.x_ref)


class LinearRamp:
    def __init__(self, omega_i: float, omega_f: float, t_f: float):
        self.omega_i, self.omega_f, self.t_f = float(omega_i), float(omega_f), float(t_f)

    def omega_at(self, t):
        s = np.clip(np.asarray(t, dtype=float) / self.t_f, 0.0, 1.0)
        return self.omega_i + (self.omega_f - self.omega_i) * s

    def time_at(self, omega):
        if self.omega_i == self.omega_f:
            raise ConfigError("constant ramp has no unique inverse")
        omega = np.asarray(omega, dtype=float)
        return self.t_f * (omega - self.omega_i) / (self.omega_f - self.omega_i)


class ClosedFormRamp:
    """Published closed-form ramp, amplitudes in units of omega_i.

    With w = omega_f/omega_i and g the golden ratio, the curve is the
    Moebius function of dimensionless time s:

        Omega(s)/omega_i = (4 w^4 g s + w^2 + (1-s) 4 g w^2)
                           / ((1-s) w^2 + s + 4 g w^2)
    """

    def __init__(self, omega_i: float, omega_f: float, t_f: float):
        self.omega_i, self.omega_f, self.t_f = float(omega_i), float(omega_f), float(t_f)
        w2 = (omega_f / omega_i) ** 2
        g4 = 4.0 * GOLDEN_RATIO
        # Omega_hat(s) = (a s + b) / (c s + d)
        self.a = g4 * w2 * (w2 - 1.0)
        self.b = w2 * (1.0 + g4)
        self.c = 1.0 - w2
        self.d = w2 * (1.0 + g4)

    def omega_at(self, t):
        s = np.clip(np.asarray(t, dtype=float) / self.t_f, 0.0, 1.0)
        return self.omega_i * (self.a * s + self.b) / (self.c * s + self.d)

    def time_at(self, omega):
        w = np.asarray(omega, dtype=float) / self.omega_i
        return self.t_f * (self.d * w - self.b) / (self.a - self.c * w)

    @property
    def achieved_omega_f(self) -> float:
        return float(self.omega_at(self.t_f))


@dataclass
class ClosedFormReport:
    """Boundary check of the closed-form ramp against the requested endpoints."""

    omega_i_requested: float
    omega_f_requested: float
    omega_at_start: float
    omega_at_end: float
    start_rel_error: float
    end_rel_error: float
    boundary_ok: bool
    max_rel_deviation_from_ode: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


# ---------------------------------------------------------------------------
# Discretization
# ---------------------------------------------------------------------------

def discretize(ramp, t_f: float, n_segments: int,
               metadata: dict | None = None) -> PulseSchedule:
    """Quantize a continuous monotone ramp into square pulses.

    Amplitudes are the n uniformly spaced levels from the ramp's start
    value to its end value, so every step |Omega_{k+1} - Omega_k| is the
    same and both endpoints are kept exactly.  Each segment lasts as long
    as the continuous curve stays nearest to its level: boundaries are the
    crossing times of the midpoints between adjacent levels (so the first
    and last segments cover half-width amplitude cells).
    """
    if n_segments < 2:
        raise ConfigError("n_segments must be >= 2")
    start = float(np.asarray(ramp.omega_at(0.0)))
    end = float(np.asarray(ramp.omega_at(t_f)))
    meta = {"t_f": t_f, "omega_i": start, "omega_f": end,
            "ramp_down": start >= end}
    if metadata:
        meta.update(metadata)

    if start == end:
        durations = np.full(n_segments, t_f / n_segments)
        amplitudes = np.full(n_segments, start)
        return PulseSchedule(durations, amplitudes, meta)

    levels = np.linspace(start, end, n_segments)
    probe = ramp.omega_at(np.linspace(0.0, t_f, 257))
    diffs = np.diff(probe)
    if np.any(diffs > 1e-9 * max(abs(start), abs(end))) and np.any(
            diffs < -1e-9 * max(abs(start), abs(end))):
        raise ConfigError("discretize requires a monotone ramp")

    midlevels = 0.5 * (levels[:-1] + levels[1:])
    crossings = np.asarray(ramp.time_at(midlevels), dtype=float)
    bounds = np.concatenate([[0.0], crossings, [t_f]])
    if np.any(np.diff(bounds) < 0):
        raise ConfigError("ramp inverse produced decreasing boundary times")
    durations = np.diff(bounds)
    # guard against float round-off accumulating in the total time
    durations[-1] = t_f - float(np.sum(durations[:-1]))
    return PulseSchedule(durations, levels, meta)


def sample_uniform_time(ramp, t_f: float, n_segments: int,
                        metadata: dict | None = None) -> PulseSchedule:
    """Equal-duration square pulses sampled at segment midpoints.

    Unlike :func:`discretize` this does not pin the endpoint amplitudes;
    it is a reference quantization used to approach the continuum limit
    in convergence studies.
    """
    edges = np.linspace(0.0, t_f, n_segments + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    amplitudes = np.asarray(ramp.omega_at(mids), dtype=float)
    meta = {"t_f": t_f}
    if metadata:
        meta.update(metadata)
    return PulseSchedule(np.diff(edges), amplitudes, meta)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def faquad_ode(spec: FaquadSpec) -> PulseSchedule:
    """Constant-adiabaticity ramp-down, discretized DDS-style."""
    if spec.x_ref is None:
        raise ConfigError("faquad_ode needs x_ref (resolve the spec first)")
    if spec.omega_i == spec.omega_f:
        ramp = LinearRamp(spec.omega_i, spec.omega_f, spec.t_f)
    else:
        ramp = FaquadRamp(spec.omega_i, spec.omega_f, spec.t_f, spec.x_ref)
    return discretize(ramp, spec.t_f, spec.n_segments,
                      metadata={"generator": "ode_faquad",
                                "x_ref": spec.x_ref})


def linear(spec: FaquadSpec) -> PulseSchedule:
    """Straight-line ramp (mostly a reference for comparisons)."""
    ramp = LinearRamp(spec.omega_i, spec.omega_f, spec.t_f)
    return discretize(ramp, spec.t_f, spec.n_segments,
                      metadata={"generator": "linear"})


def faquad_closed_form(spec: FaquadSpec) -> tuple[PulseSchedule, ClosedFormReport]:
    """Published closed-form ramp plus its boundary-check report.

    The schedule's recorded final amplitude is the value the formula
    actually reaches; the report compares both boundaries against the
    requested omega_i / omega_f and, when x_ref is available, records the
    largest relative deviation from the constant-adiabaticity ramp.
    Boundary mismatch is reported, never raised.
    """
    ramp = ClosedFormRamp(spec.omega_i, spec.omega_f, spec.t_f)
    start = float(ramp.omega_at(0.0))
    end = ramp.achieved_omega_f
    report = ClosedFormReport(
        omega_i_requested=spec.omega_i,
        omega_f_requested=spec.omega_f,
        omega_at_start=start,
        omega_at_end=end,
        start_rel_error=abs(start - spec.omega_i) / spec.omega_i,
        end_rel_error=abs(end - spec.omega_f) / spec.omega_f,
        boundary_ok=(abs(start - spec.omega_i) <= 1e-9 * spec.omega_i
                     and abs(end - spec.omega_f) <= 1e-9 * spec.omega_f),
    )
    if spec.x_ref is not None and spec.omega_i > spec.omega_f:
        ode = FaquadRamp(spec.omega_i, spec.omega_f, spec.t_f, spec.x_ref)
        t = np.linspace(0.0, spec.t_f, 513)
        a, b = ramp.omega_at(t), ode.omega_at(t)
        report.max_rel_deviation_from_ode = float(
            np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
    sched = discretize(ramp, spec.t_f, spec.n_segments,
                       metadata={"generator": "closed_form",
                                 "omega_f_requested": spec.omega_f,
                                 "boundary_report": report.as_dict()})
    return sched, report


def build_schedule(spec: FaquadSpec, x_ref_default: float | None = None) -> PulseSchedule:
    """Dispatch on the spec's generator tag; resolves x_ref if needed."""
    if spec.x_ref is None and x_ref_default is not None:
        spec = spec.resolved(x_ref_default)
    if spec.generator == "ode_faquad":
        return faquad_ode(spec)
    if spec.generator == "linear":
        return linear(spec)
    sched, _ = faquad_closed_form(spec)
    return sched


# ---------------------------------------------------------------------------
# Adiabaticity diagnostics
# ---------------------------------------------------------------------------

def adiabaticity_parameter(schedule: PulseSchedule, x: float) -> np.ndarray:
    """c evaluated on the interior segments of an emitted table.

    Uses the exact identity c = |du/dt| / (2x) with
    u = Omega/sqrt(Omega^2+x^2).  Under the uniform-amplitude
    discretization, segment k spans the curve's passage between the
    adjacent level midpoints, so du across segment k divided by its dwell
    time recovers the local du/dt.  The first and last segments touch the
    schedule boundaries rather than midpoint crossings and are excluded.
    """
    if x == 0:
        raise ConfigError("adiabaticity parameter undefined at x = 0")
    a = schedule.amplitudes
    d = schedule.durations
    if a.size < 3:
        raise ConfigError("need at least 3 segments for interior estimates")
    if np.any(d[1:-1] <= 0):
        raise ConfigError("zero-duration interior segment")
    mid = 0.5 * (a[:-1] + a[1:])
    u = mid / np.hypot(mid, x)
    return np.abs(np.diff(u)) / (2.0 * abs(x) * d[1:-1])


def adiabaticity_margin(schedule: PulseSchedule, x: float) -> float:
    """Worst local Landau-Zener ratio max |dOmega/dt| / (Omega^2 + x^2).

    The slope is taken between segment midpoints; the denominator uses
    the amplitude midway across each step.  Zero for a constant schedule;
    decreases as |x| grows.  Note that a front-loaded quasi-adiabatic
    ramp intentionally has a large value at its steep start: this metric
    bounds sudden-step behaviour, it is not the adiabaticity parameter c.
    """
    if not np.isfinite(x):
        raise ConfigError("x must be finite")
    d = schedule.durations
    a = schedule.amplitudes
    if np.any(d <= 0):
        raise ConfigError("zero-duration segment")
    if a.size < 2:
        return 0.0
    dt_mid = 0.5 * (d[:-1] + d[1:])
    rate = np.abs(np.diff(a)) / dt_mid
    mid = 0.5 * (a[:-1] + a[1:])
    return float(np.max(rate / (mid**2 + x**2)))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def write_pulse_table(schedule: PulseSchedule, path) -> None:
    """CSV pulse table: segment_index, duration_s, amplitude_rad_per_s."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["segment_index", "duration_s", "amplitude_rad_per_s"])
        for k, (dur, amp) in enumerate(schedule.segments()):
            writer.writerow([k, repr(float(dur)), repr(float(amp))])
