"""Reflection-coefficient subproblem: penalty method over SCA-convexified programs.

With precoders, decoders and weights fixed, the weighted-MSE objective is a
Hermitian quadratic in the reflection vector theta.  Using the diagonal-trace
identity Tr(B diag(t) C diag(t)^H) = t^H (B o C^T) t, the block update is

    min_theta   theta^H U0 theta + 2 Re(theta . d0)
    s.t.        theta^H U_k theta + 2 Re(theta . d_k) <= cap_k    per PU k
                |theta_m| = 1

The unit-modulus set is handled by relaxing to |theta_m| <= 1, subtracting a
penalty lam * theta^H theta, linearizing that concave term at the current
iterate (one convex QCQP per inner step) and escalating lam until the moduli
reach the unit circle, then snapping phases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleThetaStepError
from .linalg import hadamard_psd, max_eigenvalue
from .model import pu_channels, su_channels
from .qcqp import BarrierSettings, QcqpProblem, QuadConstraint, solve_qcqp_barrier
from .scenario import ChannelSet

logger = logging.getLogger(__name__)

MODULUS_TOL = 1e-6        # stop escalating once sum(|theta_m| - 1)^2 falls below
PENALTY_GROWTH = 10.0
MAX_ESCALATIONS = 8
FEAS_REL_TOL = 1e-6       # post-snap constraint tolerance, relative to each cap


@dataclass(frozen=True)
class ThetaProblemData:
    """Quadratic data of the reflection subproblem.

    ``caps`` holds cap_k = Gamma_k - Tr(H_sap_pu_k Q_s H_sap_pu_k^H): the
    direct-path interference is theta-independent and moves to the right-hand
    side.  A nonpositive cap means the direct links alone exhaust PU k's
    budget; the update is then skipped for this round.
    """

    upsilon0: np.ndarray
    d0: np.ndarray
    upsilon_k: tuple
    d_k: tuple
    caps: tuple

    @property
    def num_elements(self) -> int:
        return self.d0.shape[0]

    def objective(self, theta) -> float:
        theta = np.asarray(theta, dtype=complex)
        return float((theta.conj() @ self.upsilon0 @ theta).real
                     + 2.0 * (theta @ self.d0).real)

    def constraint_value(self, theta, k: int) -> float:
        theta = np.asarray(theta, dtype=complex)
        return float((theta.conj() @ self.upsilon_k[k] @ theta).real
                     + 2.0 * (theta @ self.d_k[k]).real)

    def feasible(self, theta, rel_tol: float = FEAS_REL_TOL) -> bool:
        return all(
            self.constraint_value(theta, k) <= cap + rel_tol * max(1e-30, abs(cap))
            for k, cap in enumerate(self.caps)
        )


def build_theta_problem(channels: ChannelSet, precoders, decoders, mse_weights,
                        su_weights, interference_caps) -> ThetaProblemData:
    """Assemble the quadratic data from the current precoders and WMMSE state."""
    m = channels.num_elements
    n_sa = channels.sap_antennas
    q_s = np.zeros((n_sa, n_sa), dtype=complex)
    for f in precoders:
        q_s += f @ f.conj().T

    h_sr = channels.sap_to_irs
    c = h_sr @ q_s @ h_sr.conj().T

    b0 = np.zeros((m, m), dtype=complex)
    d0_mat = np.zeros((m, m), dtype=complex)
    for l, (om, u, w, f) in enumerate(zip(su_weights, decoders, mse_weights, precoders)):
        h_rl = channels.irs_to_su[l]
        h_sl = channels.sap_to_su[l]
        uwu = u @ w @ u.conj().T
        b0 += om * h_rl.conj().T @ uwu @ h_rl
        d0_mat += om * (h_sr @ q_s @ h_sl.conj().T @ uwu @ h_rl
                        - h_sr @ f @ w @ u.conj().T @ h_rl)

    upsilon_k = []
    d_k = []
    caps = []
    for k, gamma in enumerate(interference_caps):
        h_rk = channels.irs_to_pu[k]
        h_sk = channels.sap_to_pu[k]
        bk = h_rk.conj().T @ h_rk
        dk_mat = h_sr @ q_s @ h_sk.conj().T @ h_rk
        upsilon_k.append(hadamard_psd(bk, c))
        d_k.append(np.diagonal(dk_mat).copy())
        caps.append(float(gamma) - float(np.trace(h_sk @ q_s @ h_sk.conj().T).real))

    return ThetaProblemData(
        upsilon0=hadamard_psd(b0, c),
        d0=np.diagonal(d0_mat).copy(),
        upsilon_k=tuple(upsilon_k),
        d_k=tuple(d_k),
        caps=tuple(caps),
    )


def theta_objective_direct(channels: ChannelSet, precoders, decoders, mse_weights,
                           su_weights, theta) -> float:
    """The un-reduced block objective (used to cross-check the quadratic data):

    sum_l w_l Tr(W_l U_l^H G_l Q_s G_l^H U_l) - 2 sum_l w_l Re Tr(W_l U_l^H G_l F_l)
    """
    q_s = np.zeros((channels.sap_antennas, channels.sap_antennas), dtype=complex)
    for f in precoders:
        q_s += f @ f.conj().T
    g_su = su_channels(channels, theta)
    val = 0.0
    for om, g, u, w, f in zip(su_weights, g_su, decoders, mse_weights, precoders):
        wu = w @ u.conj().T
        val += om * float(np.trace(wu @ g @ q_s @ g.conj().T @ u).real)
        val -= 2.0 * om * float(np.trace(wu @ g @ f).real)
    return val


def _feasible_start(data: ThetaProblemData, theta: np.ndarray) -> np.ndarray:
    """Shrink theta toward the origin until strictly inside the relaxed set."""
    theta = 0.99 * np.asarray(theta, dtype=complex)
    for _ in range(60):
        strict = np.all(np.abs(theta) < 1.0 - 1e-12) and all(
            data.constraint_value(theta, k) < cap * (1.0 - 1e-9) if cap > 0
            else data.constraint_value(theta, k) < cap
            for k, cap in enumerate(data.caps)
        )
        if strict:
            return theta
        theta = 0.5 * theta
    return np.zeros_like(theta)


def sca_theta_inner(data: ThetaProblemData, penalty: float, theta_start,
                    tol: float = 1e-6, max_iters: int = 40,
                    settings: BarrierSettings | None = None) -> np.ndarray:
    """Minimize the penalized relaxation for a fixed penalty weight.

    Each pass linearizes -penalty * theta^H theta at the incumbent and solves
    the resulting convex QCQP (box |theta_m| <= 1 plus the interference
    quadratics).  The penalized objective is non-increasing across passes.
    """
    theta = np.asarray(theta_start, dtype=complex).copy()
    if data.num_elements == 0:
        return theta
    constraints = tuple(
        QuadConstraint(a=data.upsilon_k[k], b=data.d_k[k].conj(), r=cap)
        for k, cap in enumerate(data.caps)
    )

    def penalized(th):
        return data.objective(th) - penalty * float(np.vdot(th, th).real)

    current = penalized(theta)
    for _ in range(max_iters):
        problem = QcqpProblem(
            a0=data.upsilon0,
            b0=penalty * theta - data.d0.conj(),
            c0=0.0,
            constraints=constraints,
            unit_box=True,
        )
        result = solve_qcqp_barrier(problem, settings, z0=_feasible_start(data, theta))
        candidate = result.z
        value = penalized(candidate)
        if value > current + 1e-12 * (1.0 + abs(current)):
            break  # numerical stall; keep the incumbent
        theta, improvement = candidate, current - value
        current = value
        if improvement <= tol * (1.0 + abs(current)):
            break
    return theta


def modulus_residual(theta) -> float:
    """sum_m (|theta_m| - 1)^2; zero on the unit torus."""
    theta = np.asarray(theta, dtype=complex)
    if theta.size == 0:
        return 0.0
    return float(np.sum((np.abs(theta) - 1.0) ** 2))


def snap_to_torus(theta) -> np.ndarray:
    """Project each coordinate to the unit circle, keeping its phase."""
    theta = np.asarray(theta, dtype=complex)
    mags = np.abs(theta)
    out = np.ones_like(theta)
    nz = mags > 0
    out[nz] = theta[nz] / mags[nz]
    return out


def penalty_theta_solve(data: ThetaProblemData, theta0,
                        mod_tol: float = MODULUS_TOL,
                        max_escalations: int = MAX_ESCALATIONS,
                        inner_tol: float = 1e-6) -> np.ndarray:
    """Drive the relaxed solution onto the unit torus by escalating the penalty.

    The committed output is the best feasible snapped iterate encountered; if
    the snap breaks feasibility for every iterate the step is reported as
    infeasible so the caller can keep its previous reflection vector.
    """
    theta0 = np.asarray(theta0, dtype=complex)
    if data.num_elements == 0:
        return theta0.copy()
    if np.any(np.abs(theta0) > 1.0 + 1e-9):
        raise ValueError("theta0 must satisfy |theta_m| <= 1")

    lam = 10.0 * max_eigenvalue(data.upsilon0)
    if lam <= 0.0:
        lam = 1.0

    candidates = []
    snapped0 = snap_to_torus(theta0)
    if modulus_residual(theta0) <= mod_tol and data.feasible(snapped0):
        candidates.append(snapped0)

    theta = theta0
    for _ in range(max_escalations + 1):
        theta = sca_theta_inner(data, lam, theta, tol=inner_tol)
        snapped = snap_to_torus(theta)
        if data.feasible(snapped):
            candidates.append(snapped)
        if modulus_residual(theta) <= mod_tol:
            break
        lam *= PENALTY_GROWTH
    else:
        logger.warning("penalty escalation exhausted with modulus residual %.3e",
                       modulus_residual(theta))

    if not candidates:
        raise InfeasibleThetaStepError(
            "no snapped iterate satisfies the interference caps"
        )
    best = min(candidates, key=data.objective)
    return best
