"""Outer alternating-optimization loops and benchmark variants.

One outer iteration updates, in order: the MMSE decoders and inverse-MSE
weights (closed form), the precoders (convex subproblem), and the reflection
vector (penalized SCA in the general case, price-mechanism SCA with a single
PU).  Every block either solves its subproblem exactly or descends it with
the other blocks fixed, so the reported weighted sum rate is non-decreasing;
a defensive guard keeps the previous block iterate whenever numerics would
say otherwise.  The reported rate is always recomputed from the committed
(unit-modulus) reflection vector, never from a surrogate.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleProblemError, InfeasibleThetaStepError, NumericalError
from .model import interference_power, transmit_power, wmmse_update, wsr
from .precoding import (
    build_precoder_qcqp,
    precoder_objective,
    precoder_quadratics,
    stack_precoders,
    unstack_precoders,
)
from .qcqp import solve_qcqp_barrier
from .reflect import build_theta_problem, modulus_residual, penalty_theta_solve
from .scenario import ChannelSet, ScenarioConfig
from .single_pu import build_theta_single, sca_precoder_solve, sca_theta_solve_single

logger = logging.getLogger(__name__)

ALGORITHMS = ("ao-general", "ao-fast", "no-irs", "fixed-irs")

OUTER_TOL = 1e-4      # bits/s/Hz change that stops the outer loop
MAX_OUTER_ITERS = 100


@dataclass
class BeamformingState:
    """The AO iterate: precoders, reflection vector, decoders, weights."""

    precoders: list
    theta: np.ndarray
    decoders: list = field(default_factory=list)
    mse_weights: list = field(default_factory=list)


@dataclass(frozen=True)
class IterationRecord:
    index: int
    wsr_bits: float
    power_w: float
    max_interference_w: float
    modulus_residual: float
    wall_ms: float


@dataclass
class SolveReport:
    algorithm: str
    records: list
    final_state: BeamformingState
    termination: str

    @property
    def wsr_trace(self) -> list:
        return [r.wsr_bits for r in self.records]

    @property
    def final_wsr(self) -> float:
        return self.records[-1].wsr_bits

    @property
    def iterations(self) -> int:
        return self.records[-1].index

    @property
    def total_wall_ms(self) -> float:
        return float(sum(r.wall_ms for r in self.records))


def initialize(channels: ChannelSet, cfg: ScenarioConfig, rng) -> BeamformingState:
    """Random feasible starting point.

    Phases are uniform on the torus; precoders are complex Gaussian scaled to
    the full power budget, then shrunk uniformly until every interference cap
    holds (interference scales with the square of the shrink factor, so such
    a factor always exists).
    """
    m = channels.num_elements
    theta = np.exp(2j * np.pi * rng.random(m))
    shape = (cfg.sap_antennas, cfg.streams_per_su)
    precoders = [
        (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        for _ in range(cfg.num_sus)
    ]
    scale = np.sqrt(cfg.max_power_w / transmit_power(precoders))
    precoders = [scale * f for f in precoders]
    shrink = 1.0
    for k, cap in enumerate(cfg.interference_caps_w):
        it_k = interference_power(channels, precoders, theta, k)
        if it_k > 0:
            shrink = min(shrink, np.sqrt(cap / it_k) * (1.0 - 1e-9))
    precoders = [shrink * f for f in precoders]
    return BeamformingState(precoders=precoders, theta=theta)


def _general_precoder_step(channels, cfg, theta, decoders, mse_weights, precoders):
    problem = build_precoder_qcqp(
        channels, theta, decoders, mse_weights, cfg.su_weights,
        cfg.max_power_w, cfg.interference_caps_w,
    )
    result = solve_qcqp_barrier(problem, z0=stack_precoders(precoders))
    candidate = unstack_precoders(
        result.z, cfg.num_sus, cfg.sap_antennas, cfg.streams_per_su
    )
    # The barrier solves a convex problem the incumbent is feasible for; an
    # objective regression can only be numerical noise.
    x0, y_list, _ = precoder_quadratics(channels, theta, decoders, mse_weights, cfg.su_weights)
    if precoder_objective(x0, y_list, candidate) > precoder_objective(x0, y_list, precoders):
        return precoders
    return candidate


def _fast_precoder_step(channels, cfg, theta, decoders, mse_weights, precoders):
    return sca_precoder_solve(
        channels, theta, decoders, mse_weights, cfg.su_weights,
        cfg.max_power_w, cfg.interference_caps_w[0], precoders,
    )


def _general_theta_step(channels, cfg, theta, decoders, mse_weights, precoders):
    data = build_theta_problem(
        channels, precoders, decoders, mse_weights, cfg.su_weights, cfg.interference_caps_w
    )
    if any(cap <= 0 for cap in data.caps):
        logger.info("direct-link interference exhausts a cap; keeping previous theta")
        return theta
    try:
        candidate = penalty_theta_solve(data, theta)
    except (InfeasibleThetaStepError, InfeasibleProblemError, NumericalError) as exc:
        logger.info("reflection update skipped: %s", exc)
        return theta
    if data.objective(candidate) > data.objective(theta) or not data.feasible(candidate):
        return theta
    return candidate


def _fast_theta_step(channels, cfg, theta, decoders, mse_weights, precoders):
    data = build_theta_single(
        channels, precoders, decoders, mse_weights, cfg.su_weights,
        cfg.interference_caps_w[0],
    )
    if data.caps[0] <= 0:
        logger.info("direct-link interference exhausts the cap; keeping previous theta")
        return theta
    try:
        candidate = sca_theta_solve_single(data, theta)
    except (InfeasibleThetaStepError, InfeasibleProblemError, NumericalError) as exc:
        logger.info("reflection update skipped: %s", exc)
        return theta
    if data.objective(candidate) > data.objective(theta) or not data.feasible(candidate):
        return theta
    return candidate


def _record(channels, cfg, state, index, wall_ms) -> IterationRecord:
    max_it = max(
        interference_power(channels, state.precoders, state.theta, k)
        for k in range(channels.num_pus)
    )
    return IterationRecord(
        index=index,
        wsr_bits=wsr(channels, state.precoders, state.theta, cfg.su_weights, cfg.noise_power_su_w),
        power_w=transmit_power(state.precoders),
        max_interference_w=max_it,
        modulus_residual=modulus_residual(state.theta),
        wall_ms=wall_ms,
    )


def _ao_loop(channels, cfg, state, precoder_step, theta_step, algorithm,
             tol, max_iters) -> SolveReport:
    state = BeamformingState(
        [np.asarray(f, dtype=complex) for f in state.precoders],
        np.asarray(state.theta, dtype=complex),
        list(state.decoders),
        list(state.mse_weights),
    )
    start = time.perf_counter()
    records = [_record(channels, cfg, state, 0, (time.perf_counter() - start) * 1e3)]
    termination = "max_iterations"
    for n in range(1, max_iters + 1):
        tick = time.perf_counter()
        decoders, mse_weights = wmmse_update(
            channels, state.precoders, state.theta, cfg.noise_power_su_w
        )
        state.decoders, state.mse_weights = decoders, mse_weights
        precoders = precoder_step(
            channels, cfg, state.theta, decoders, mse_weights, state.precoders
        )
        theta = (
            theta_step(channels, cfg, state.theta, decoders, mse_weights, precoders)
            if theta_step is not None and channels.num_elements > 0
            else state.theta
        )
        previous_wsr = records[-1].wsr_bits
        candidate = BeamformingState(precoders, theta, decoders, mse_weights)
        candidate_wsr = wsr(channels, precoders, theta, cfg.su_weights, cfg.noise_power_su_w)
        if candidate_wsr < previous_wsr - 1e-10 * (1.0 + abs(previous_wsr)):
            logger.warning(
                "iteration %d would reduce the weighted sum rate (%.9f -> %.9f); stopping",
                n, previous_wsr, candidate_wsr,
            )
            termination = "stalled"
            break
        state = candidate
        records.append(_record(channels, cfg, state, n, (time.perf_counter() - tick) * 1e3))
        if abs(candidate_wsr - previous_wsr) <= tol:
            termination = "converged"
            break
    return SolveReport(
        algorithm=algorithm,
        records=records,
        final_state=state,
        termination=termination,
    )


def solve_general(channels: ChannelSet, cfg: ScenarioConfig, init: BeamformingState = None,
                  rng=None, tol: float = OUTER_TOL, max_iters: int = MAX_OUTER_ITERS,
                  update_theta: bool = True) -> SolveReport:
    """Alternating optimization with the interior-point precoder step and the
    penalty-based reflection step; handles any number of PUs."""
    state = init if init is not None else initialize(channels, cfg, rng or np.random.default_rng())
    return _ao_loop(
        channels, cfg, state, _general_precoder_step,
        _general_theta_step if update_theta else None,
        "ao-general", tol, max_iters,
    )


def solve_fast(channels: ChannelSet, cfg: ScenarioConfig, init: BeamformingState = None,
               rng=None, tol: float = OUTER_TOL, max_iters: int = MAX_OUTER_ITERS,
               update_theta: bool = True) -> SolveReport:
    """Low-complexity alternating optimization; requires exactly one PU."""
    if cfg.num_pus != 1 or channels.num_pus != 1:
        raise ValueError("the fast solver requires exactly one PU")
    state = init if init is not None else initialize(channels, cfg, rng or np.random.default_rng())
    return _ao_loop(
        channels, cfg, state, _fast_precoder_step,
        _fast_theta_step if update_theta else None,
        "ao-fast", tol, max_iters,
    )


def solve_baseline(channels: ChannelSet, cfg: ScenarioConfig, choice: str,
                   init: BeamformingState = None, rng=None, tol: float = OUTER_TOL,
                   max_iters: int = MAX_OUTER_ITERS) -> SolveReport:
    """Benchmark variants with the reflection step disabled.

    ``no-irs`` removes the surface entirely (zero-element channels);
    ``fixed-irs`` pins every reflection coefficient to phase zero.
    """
    if choice == "no-irs":
        channels = channels.without_irs()
        theta = np.zeros(0, dtype=complex)
    elif choice == "fixed-irs":
        theta = np.ones(channels.num_elements, dtype=complex)
    else:
        raise ValueError(f"unknown baseline {choice!r}; expected 'no-irs' or 'fixed-irs'")
    state = init if init is not None else initialize(
        channels, cfg, rng or np.random.default_rng()
    )
    # The pinned reflection vector changes the interference the initial
    # precoders cause; shrink them back inside the caps.
    precoders = state.precoders
    shrink = 1.0
    for k, cap in enumerate(cfg.interference_caps_w):
        it_k = interference_power(channels, precoders, theta, k)
        if it_k > 0:
            shrink = min(shrink, np.sqrt(cap / it_k) * (1.0 - 1e-9))
    state = BeamformingState([min(shrink, 1.0) * f for f in precoders], theta)
    report = _ao_loop(
        channels, cfg, state, _general_precoder_step, None, choice, tol, max_iters
    )
    return report


def solve(channels: ChannelSet, cfg: ScenarioConfig, algorithm: str, **kwargs) -> SolveReport:
    """Dispatch by algorithm name (one of ALGORITHMS)."""
    if algorithm == "ao-general":
        return solve_general(channels, cfg, **kwargs)
    if algorithm == "ao-fast":
        return solve_fast(channels, cfg, **kwargs)
    if algorithm in ("no-irs", "fixed-irs"):
        return solve_baseline(channels, cfg, algorithm, **kwargs)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
