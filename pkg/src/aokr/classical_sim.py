"""Classical Monte Carlo ensembles under a resolved pulse timeline.

Each trajectory starts from a thermal (phi, rho) draw, carries a fixed
kick-strength factor sampled from the beam/cloud geometry and magnetic
sublevel, and alternates free streaming with exact pendulum steps over
the piecewise-constant envelope grid.  Spontaneous emission adds a
uniform recoil in [-kbar/2, kbar/2) with probability eta per pulse.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constants import thermal_sigma_recoils
from .elliptic import _pendulum_step_arrays, _wrap_angle, pendulum_step
from .parallel import chunk_bounds, chunked_map
from .pulse_train import ResolvedTimeline
from .streams import ENGINE_CLASSICAL, trajectory_stream

SE_PER_RESULTANT = "per_resultant"
SE_PER_CONSTITUENT = "per_constituent"

DEFAULT_CHUNK_SIZE = 1024


@dataclass(frozen=True)
class ClassicalState:
    """One trajectory: scaled angle, scaled momentum, kick-strength factor."""

    phi: float
    rho: float
    kick_factor: float = 1.0


@dataclass(frozen=True)
class EnsembleParams:
    """Initial-condition and noise model shared by both engines.

    sublevel_factors is a discrete distribution of kick-strength
    multipliers given as (factor, weight) pairs; the default single
    factor 1.0 turns the sublevel spread off.  cloud_sigma_mm = 0 puts
    every atom at the beam centre (kick factor 1), temperature_uk = 0
    starts every atom at rest.
    """

    kbar: float
    temperature_uk: float = 5.0
    cloud_sigma_mm: float = 0.5
    beam_sigma_mm: float = 0.72
    eta_per_pulse: float = 0.0
    sublevel_factors: tuple = ((1.0, 1.0),)
    rng_seed: int = 0
    se_mode: str = SE_PER_RESULTANT

    def __post_init__(self):
        if self.kbar <= 0:
            raise ValueError(f"kbar must be positive, got {self.kbar}")
        if self.temperature_uk < 0:
            raise ValueError("temperature_uk must be >= 0")
        if self.cloud_sigma_mm < 0 or self.beam_sigma_mm < 0:
            raise ValueError("cloud/beam sigmas must be >= 0")
        if self.cloud_sigma_mm > 0 and self.beam_sigma_mm <= 0:
            raise ValueError("beam_sigma_mm must be positive when cloud_sigma_mm > 0")
        if not (0.0 <= self.eta_per_pulse < 1.0):
            raise ValueError(f"eta_per_pulse must lie in [0, 1), got {self.eta_per_pulse}")
        if self.se_mode not in (SE_PER_RESULTANT, SE_PER_CONSTITUENT):
            raise ValueError(f"unknown se_mode {self.se_mode!r}")
        if not self.sublevel_factors:
            raise ValueError("sublevel_factors must be non-empty")
        for factor, weight in self.sublevel_factors:
            if not (0.0 < factor <= 1.0):
                raise ValueError(f"sublevel factor {factor} outside (0, 1]")
            if weight <= 0:
                raise ValueError("sublevel weights must be positive")

    @property
    def sigma_n(self) -> float:
        """Thermal momentum spread in two-photon-recoil units."""
        return thermal_sigma_recoils(self.temperature_uk)


@dataclass(frozen=True)
class MomentumSamples:
    """Final trajectory momenta in two-photon-recoil units (rho / kbar)."""

    values: np.ndarray

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("MomentumSamples requires at least one trajectory")

    @property
    def count(self) -> int:
        return len(self.values)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("# units: momentum=two-photon-recoils\n")
            fh.write("momentum\n")
            for v in self.values:
                fh.write(f"{v:.17g}\n")


def _draw_sublevel(params: EnsembleParams, rng) -> float:
    factors = params.sublevel_factors
    if len(factors) == 1:
        return factors[0][0]
    weights = np.array([w for _, w in factors], dtype=float)
    weights /= weights.sum()
    u = rng.random()
    return factors[int(np.searchsorted(np.cumsum(weights), u))][0]


def sample_initial_classical(params: EnsembleParams, rng) -> ClassicalState:
    """Thermal initial state with a beam/cloud/sublevel kick factor.

    phi ~ Uniform[-pi, pi); rho = kbar * n with n Gaussian of width
    sigma_n; the kick factor is the standing-wave intensity (Gaussian of
    width beam_sigma) at a cloud position drawn Gaussian with
    cloud_sigma, times the sublevel multiplier.
    """
    phi = rng.uniform(-math.pi, math.pi)
    n = params.sigma_n * rng.standard_normal()
    x = params.cloud_sigma_mm * rng.standard_normal()
    sub = _draw_sublevel(params, rng)
    if params.cloud_sigma_mm > 0:
        intensity = math.exp(-(x**2) / (2.0 * params.beam_sigma_mm**2))
    else:
        intensity = 1.0
    return ClassicalState(phi=phi, rho=params.kbar * n, kick_factor=intensity * sub)


def free_evolve(state: ClassicalState, dtau: float) -> ClassicalState:
    """Free streaming: phi advances by dtau * rho (wrapped), rho unchanged."""
    if dtau < 0:
        raise ValueError("dtau must be >= 0")
    phi = state.phi + dtau * state.rho
    if not (-math.pi <= phi < math.pi):
        phi = float(_wrap_angle(phi))
    return ClassicalState(phi=phi, rho=state.rho, kick_factor=state.kick_factor)


def maybe_spontaneous_emission(state: ClassicalState, eta: float, rng, kbar: float) -> ClassicalState:
    """With probability eta add a recoil uniform in [-kbar/2, kbar/2).

    Both the trigger and the recoil are always drawn so that a
    trajectory's stream position does not depend on the outcome.
    """
    if not (0.0 <= eta < 1.0):
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    trigger = rng.random()
    u = rng.uniform(-0.5 * kbar, 0.5 * kbar)
    if trigger < eta:
        return ClassicalState(state.phi, state.rho + u, state.kick_factor)
    return state


def _se_check_steps(pulse, se_mode: str):
    """Step indices after which an emission check happens (may repeat)."""
    if se_mode == SE_PER_RESULTANT:
        return [pulse.n_steps // 2 - 1 if pulse.n_steps > 1 else 0]
    steps = []
    for _, center in pulse.constituents:
        idx = int((center - pulse.start) / pulse.step)
        steps.append(min(max(idx, 0), pulse.n_steps - 1))
    return steps


def evolve_pulse(state: ClassicalState, pulse, rng, params: EnsembleParams) -> ClassicalState:
    """Propagate one trajectory through one resultant pulse.

    Piecewise-constant evolution: each grid step applies the exact
    pendulum flow with rate kick_factor * k(tau_mid), with spontaneous
    emission checks scheduled by params.se_mode.
    """
    phi, rho = state.phi, state.rho
    checks = _se_check_steps(pulse, params.se_mode)
    h = pulse.step
    for j in range(pulse.n_steps):
        phi, rho = pendulum_step(phi, rho, state.kick_factor * pulse.k_mid[j], h)
        for _ in range(checks.count(j)):
            kicked = maybe_spontaneous_emission(
                ClassicalState(phi, rho, state.kick_factor), params.eta_per_pulse, rng, params.kbar
            )
            phi, rho = kicked.phi, kicked.rho
    return ClassicalState(phi, rho, state.kick_factor)


def _total_checks(timeline: ResolvedTimeline, se_mode: str) -> int:
    if se_mode == SE_PER_RESULTANT:
        return timeline.n_res
    return sum(p.n_constituents for p in timeline.pulses)


def _classical_chunk(job):
    """Evolve one chunk of trajectories; returns (lo, final momenta in recoils)."""
    timeline, params, sweep_index, lo, hi = job
    n = hi - lo
    kbar = params.kbar
    streams = [
        trajectory_stream(params.rng_seed, sweep_index, ENGINE_CLASSICAL, i)
        for i in range(lo, hi)
    ]
    phi = np.empty(n)
    rho = np.empty(n)
    kf = np.empty(n)
    n_checks = _total_checks(timeline, params.se_mode)
    triggers = np.empty((n, n_checks)) if n_checks else np.empty((n, 0))
    recoils = np.empty_like(triggers)
    for i, s in enumerate(streams):
        st = sample_initial_classical(params, s)
        phi[i], rho[i], kf[i] = st.phi, st.rho, st.kick_factor
        for c in range(n_checks):
            triggers[i, c] = s.random()
            recoils[i, c] = s.uniform(-0.5 * kbar, 0.5 * kbar)

    eta = params.eta_per_pulse
    check_cursor = 0
    prev_end = None
    for pulse in timeline.pulses:
        if prev_end is not None:
            gap = pulse.start - prev_end
            phi = _wrap_angle(phi + gap * rho)
        checks = _se_check_steps(pulse, params.se_mode)
        h = pulse.step
        for j in range(pulse.n_steps):
            phi, rho = _pendulum_step_arrays(phi, rho, kf * pulse.k_mid[j], h)
            for _ in range(checks.count(j)):
                fire = triggers[:, check_cursor] < eta
                rho = np.where(fire, rho + recoils[:, check_cursor], rho)
                check_cursor += 1
        prev_end = pulse.end
    return lo, rho / kbar


def run_classical_ensemble(
    timeline: ResolvedTimeline,
    params: EnsembleParams,
    n_traj: int,
    *,
    sweep_index: int = 0,
    n_workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> MomentumSamples:
    """Evolve n_traj independent trajectories through the timeline.

    Deterministic for a fixed (rng_seed, sweep_index) regardless of
    n_workers: trajectories are split into fixed-size chunks, each chunk
    is computed as one vectorised unit, and chunks are reassembled in
    order.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    jobs = [
        (timeline, params, sweep_index, lo, hi) for lo, hi in chunk_bounds(n_traj, chunk_size)
    ]
    results = chunked_map(_classical_chunk, jobs, n_workers)
    out = np.empty(n_traj)
    for lo, values in results:
        out[lo : lo + len(values)] = values
    return MomentumSamples(values=out)
