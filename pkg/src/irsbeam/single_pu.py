"""Low-complexity solver blocks for the single-PU scenario.

The precoder block replaces the interference quadratic sum_l Tr(F_l^H Xp F_l)
by the touching upper bound built from Zp = lam_p * I (lam_p the largest
eigenvalue of Xp):

    f_tilde(F | F_ref) = sum_l Tr(F_l^H Zp F_l)
                       + sum_l Tr(F_ref_l^H (Zp - Xp) F_ref_l)
                       - 2 sum_l Re Tr(F_ref_l^H (Zp - Xp) F_l)

which agrees with the true quadratic at F_ref, shares its gradient there and
dominates it everywhere.  Each convexified subproblem then has a closed-form
solution per Lagrange multiplier, found by bisection on a monotone scalar
function; eigendecomposing X0 once removes every per-multiplier inversion.

The reflection block majorizes both Hermitian forms the same way, reducing
each pass to maximizing Re(theta^H q0) under Re(theta^H qp) >= threshold on
the unit torus, solved globally by phase alignment plus a price search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleProblemError,
    InfeasibleThetaStepError,
    NumericalError,
)
from .linalg import EIG_TOL, hermitian_eig, max_eigenvalue
from .model import transmit_power
from .precoding import precoder_objective, precoder_quadratics
from .reflect import ThetaProblemData, build_theta_problem
from .scenario import ChannelSet

logger = logging.getLogger(__name__)

BISECT_TOL = 1e-8          # absolute bracket width on every multiplier
BRACKET_DOUBLINGS = 60
SCA_TOL = 1e-6             # relative objective change stopping the outer loops


# ---------------------------------------------------------------------------
# Precoder block
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MajorizedPrecoderData:
    """Frozen per-iteration data of the majorized precoder subproblem."""

    x0: np.ndarray
    eigvals: np.ndarray          # eigenvalues of X0, descending
    eigvecs: np.ndarray
    xp: np.ndarray
    lam_p: float                 # max eigenvalue of Xp (Zp = lam_p * I)
    y_list: tuple                # Y_l, each (d, n_sa)
    f_ref: tuple                 # SCA reference point
    t_list: tuple                # (Zp - Xp) F_ref_l, precomputed
    qy_list: tuple               # Q^H Y_l^H
    qt_list: tuple               # Q^H T_l
    gamma_tilde: float           # Gamma_p - sum_l Tr(F_ref^H (Zp - Xp) F_ref)
    gamma_frown: float           # lam_p * P_max - gamma_tilde
    p_max: float

    @property
    def power_scale(self) -> float:
        return max(abs(self.gamma_tilde), self.lam_p * self.p_max, 1e-30)


def build_majorized_precoder(channels: ChannelSet, theta, decoders, mse_weights,
                             su_weights, max_power: float, interference_cap: float,
                             f_ref) -> MajorizedPrecoderData:
    x0, y_list, xk_list = precoder_quadratics(channels, theta, decoders, mse_weights, su_weights)
    if len(xk_list) != 1:
        raise ValueError(f"single-PU solver requires exactly one PU, got {len(xk_list)}")
    xp = xk_list[0]
    lam_p = max_eigenvalue(xp)
    eigvals, eigvecs = hermitian_eig(x0)
    f_ref = tuple(np.asarray(f, dtype=complex) for f in f_ref)
    t_list = tuple(lam_p * f - xp @ f for f in f_ref)
    correction = sum(float(np.trace(f.conj().T @ t).real) for f, t in zip(f_ref, t_list))
    qy_list = tuple(eigvecs.conj().T @ y.conj().T for y in y_list)
    qt_list = tuple(eigvecs.conj().T @ t for t in t_list)
    gamma_tilde = float(interference_cap) - correction
    return MajorizedPrecoderData(
        x0=x0,
        eigvals=eigvals,
        eigvecs=eigvecs,
        xp=xp,
        lam_p=lam_p,
        y_list=tuple(y_list),
        f_ref=f_ref,
        t_list=t_list,
        qy_list=qy_list,
        qt_list=qt_list,
        gamma_tilde=gamma_tilde,
        gamma_frown=lam_p * float(max_power) - gamma_tilde,
        p_max=float(max_power),
    )


def _apply_shifted_pinv(data: MajorizedPrecoderData, shift: float, rhs_pairs):
    """Map each rhs through (X0 + shift * I)^dagger using the cached eigenbasis.

    ``rhs_pairs`` yields vectors already rotated into the eigenbasis; small
    shifted eigenvalues are zeroed exactly like :func:`linalg.pinv_psd`.
    """
    shifted = data.eigvals + shift
    cutoff = EIG_TOL * max(float(shifted.max(initial=0.0)), 0.0)
    inv = np.where(shifted > cutoff, 1.0, 0.0) / np.where(shifted > cutoff, shifted, 1.0)
    return [data.eigvecs @ (inv[:, None] * rot) for rot in rhs_pairs]


def precoder_closed_form_case1(data: MajorizedPrecoderData, mu: float) -> list:
    """F_hat_l(mu) = (X0 + mu Zp)^dagger (Y_l^H + mu (Zp - Xp) F_ref_l).

    Uses the eigendecomposition shortcut: only matrix products per call, no
    fresh factorization.
    """
    if mu < 0:
        raise ValueError("multiplier must be nonnegative")
    rotated = [qy + mu * qt for qy, qt in zip(data.qy_list, data.qt_list)]
    return _apply_shifted_pinv(data, mu * data.lam_p, rotated)


def majorized_interference(data: MajorizedPrecoderData, precoders) -> float:
    """Left side of the majorized interference constraint at the given precoders."""
    val = 0.0
    for f, t in zip(precoders, data.t_list):
        val += data.lam_p * float(np.linalg.norm(f, "fro") ** 2)
        val -= 2.0 * float(np.trace(t.conj().T @ f).real)
    return val


def j_of_mu(data: MajorizedPrecoderData, mu: float) -> float:
    """Majorized interference evaluated at the case-1 closed form (non-increasing in mu)."""
    return majorized_interference(data, precoder_closed_form_case1(data, mu))


def _bracket_decreasing(fun, target: float, what: str):
    """Find upper such that fun(upper) <= target, doubling from 1."""
    upper = 1.0
    for _ in range(BRACKET_DOUBLINGS):
        if fun(upper) <= target:
            return upper
        upper *= 2.0
    raise NumericalError(f"could not bracket {what}: value still above target at {upper:.3e}")


def bisect_case1(data: MajorizedPrecoderData, eps: float = BISECT_TOL):
    """Multiplier search for the interference-only subproblem.

    Returns (mu, precoders).  mu = 0 short-circuits when the unconstrained
    minimizer already satisfies the majorized constraint; otherwise bisection
    drives J(mu) onto gamma_tilde from the feasible side.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    f0 = precoder_closed_form_case1(data, 0.0)
    if data.lam_p <= 0.0 or majorized_interference(data, f0) <= data.gamma_tilde:
        return 0.0, f0
    target = data.gamma_tilde
    scale = data.power_scale
    mu_hi = _bracket_decreasing(lambda m: j_of_mu(data, m), target, "the interference multiplier")
    mu_lo = 0.0
    for _ in range(200):
        if mu_hi - mu_lo <= eps * max(1.0, mu_hi):
            break
        mid = 0.5 * (mu_lo + mu_hi)
        j_mid = j_of_mu(data, mid)
        if abs(j_mid - target) <= 1e-12 * scale:
            mu_hi = mid
            break
        if j_mid > target:
            mu_lo = mid
        else:
            mu_hi = mid
    return mu_hi, precoder_closed_form_case1(data, mu_hi)


def _case2_solution(data: MajorizedPrecoderData, lam: float, mu: float) -> list:
    rotated = [qy + mu * qt for qy, qt in zip(data.qy_list, data.qt_list)]
    return _apply_shifted_pinv(data, lam, rotated)


def mu_closed_form_case2(data: MajorizedPrecoderData, lam: float) -> float:
    """Inner multiplier of the power-active subproblem, in closed form.

    The constraint is linear in F there, so complementary slackness yields a
    ratio; the zero branch applies when the unconstrained-in-mu solution
    already meets the threshold.  A vanishing denominator means Zp = Xp
    (Xp is a scaled identity), for which this decomposition degenerates.
    """
    if lam < 0:
        raise ValueError("multiplier must be nonnegative")
    f_zero = _case2_solution(data, lam, 0.0)
    lhs = sum(2.0 * float(np.trace(t.conj().T @ f).real)
              for t, f in zip(data.t_list, f_zero))
    if lhs >= data.gamma_frown:
        return 0.0
    rotated_t = _apply_shifted_pinv(data, lam, data.qt_list)
    den = sum(2.0 * float(np.trace(t.conj().T @ at).real)
              for t, at in zip(data.t_list, rotated_t))
    if den <= 1e-12 * max(data.power_scale, 1e-30):
        raise NumericalError(
            "degenerate interference direction (Xp is a scaled identity); "
            "the power-active decomposition does not apply"
        )
    mu = (data.gamma_frown - lhs) / den
    if mu < 0:
        logger.warning("negative inner multiplier %.3e clamped to zero", mu)
        mu = 0.0
    return mu


def p_of_lambda(data: MajorizedPrecoderData, lam: float):
    """Transmit power of the case-2 solution (non-increasing in lambda)."""
    mu = mu_closed_form_case2(data, lam)
    precoders = _case2_solution(data, lam, mu)
    return transmit_power(precoders), precoders


def bisect_case2(data: MajorizedPrecoderData, eps: float = BISECT_TOL):
    """Outer multiplier search for the power-active subproblem.

    Returns (lam, precoders) with the transmit power driven onto P_max from
    the feasible side (or lam = 0 when the cap is already slack).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    power0, f0 = p_of_lambda(data, 0.0)
    if power0 <= data.p_max:
        return 0.0, f0
    lam_hi = _bracket_decreasing(lambda lm: p_of_lambda(data, lm)[0], data.p_max,
                                 "the power multiplier")
    lam_lo = 0.0
    for _ in range(200):
        if lam_hi - lam_lo <= eps * max(1.0, lam_hi):
            break
        mid = 0.5 * (lam_lo + lam_hi)
        p_mid, _ = p_of_lambda(data, mid)
        if abs(p_mid - data.p_max) <= 1e-12 * data.p_max:
            lam_hi = mid
            break
        if p_mid > data.p_max:
            lam_lo = mid
        else:
            lam_hi = mid
    p_final, f_final = p_of_lambda(data, lam_hi)
    return lam_hi, f_final


def sca_precoder_solve(channels: ChannelSet, theta, decoders, mse_weights, su_weights,
                       max_power: float, interference_cap: float, f0,
                       tol: float = SCA_TOL, max_iters: int = 100,
                       bisect_eps: float = BISECT_TOL) -> list:
    """Convexify-and-solve loop for the precoder block (single PU).

    ``f0`` must satisfy both constraints; every iterate does too, and the
    objective is non-increasing because each subproblem is solved exactly and
    its feasible set contains the reference point.
    """
    f = [np.asarray(x, dtype=complex) for x in f0]
    if transmit_power(f) > max_power * (1.0 + 1e-9):
        raise InfeasibleProblemError("initial precoders exceed the power budget")

    x0, y_list, xk_list = precoder_quadratics(channels, theta, decoders, mse_weights, su_weights)
    if len(xk_list) != 1:
        raise ValueError(f"single-PU solver requires exactly one PU, got {len(xk_list)}")
    true_interference = sum(float(np.trace(g.conj().T @ xk_list[0] @ g).real) for g in f)
    if true_interference > interference_cap * (1.0 + 1e-9):
        raise InfeasibleProblemError("initial precoders exceed the interference cap")

    obj = precoder_objective(x0, y_list, f)
    for _ in range(max_iters):
        data = build_majorized_precoder(
            channels, theta, decoders, mse_weights, su_weights,
            max_power, interference_cap, f
        )
        _, candidate = bisect_case1(data, bisect_eps)
        if transmit_power(candidate) > max_power * (1.0 + 1e-9):
            _, candidate = bisect_case2(data, bisect_eps)
        new_obj = precoder_objective(x0, y_list, candidate)
        if new_obj > obj + 1e-10 * (1.0 + abs(obj)):
            break  # numerical stall; keep the incumbent
        converged = abs(new_obj - obj) <= tol * (1.0 + abs(obj))
        f, obj = candidate, new_obj
        if converged:
            break
    return f


# ---------------------------------------------------------------------------
# Reflection block
# ---------------------------------------------------------------------------

def build_theta_single(channels: ChannelSet, precoders, decoders, mse_weights,
                       su_weights, interference_cap: float) -> ThetaProblemData:
    """Reflection subproblem data for the single-PU scenario."""
    data = build_theta_problem(channels, precoders, decoders, mse_weights,
                               su_weights, (interference_cap,))
    if len(data.caps) != 1:
        raise ValueError("single-PU reflection step requires exactly one PU")
    return data


@dataclass(frozen=True)
class ThetaMajorizedData:
    """Eigen-bound data for the reflection majorization (computed once)."""

    upsilon0: np.ndarray
    upsilon_p: np.ndarray
    lam0_max: float
    lamp_max: float
    d0: np.ndarray
    d_p: np.ndarray
    cap: float

    @classmethod
    def from_problem(cls, data: ThetaProblemData) -> "ThetaMajorizedData":
        return cls(
            upsilon0=data.upsilon0,
            upsilon_p=data.upsilon_k[0],
            lam0_max=max_eigenvalue(data.upsilon0),
            lamp_max=max_eigenvalue(data.upsilon_k[0]),
            d0=data.d0,
            d_p=data.d_k[0],
            cap=data.caps[0],
        )

    def prices(self, theta_ref):
        """Linearization at theta_ref: (q0, qp, threshold).

        q0 = (lam0_max I - U0) theta_ref - conj(d0), likewise qp; the
        constraint of the linearized pass reads Re(theta^H qp) >= threshold.
        """
        theta_ref = np.asarray(theta_ref, dtype=complex)
        m = theta_ref.shape[0]
        q0 = self.lam0_max * theta_ref - self.upsilon0 @ theta_ref - self.d0.conj()
        qp = self.lamp_max * theta_ref - self.upsilon_p @ theta_ref - self.d_p.conj()
        quad_ref = float((theta_ref.conj() @ self.upsilon_p @ theta_ref).real)
        threshold = 0.5 * (2.0 * m * self.lamp_max - quad_ref - self.cap)
        return q0, qp, threshold


def theta_price_point(q0, qp, alpha: float) -> np.ndarray:
    """Global maximizer of Re(theta^H (q0 + alpha qp)) on the unit torus.

    Phase alignment coordinatewise; a coordinate where q0 + alpha qp vanishes
    is free, so it is pinned to 1.
    """
    if alpha < 0:
        raise ValueError("price must be nonnegative")
    w = np.asarray(q0, dtype=complex) + alpha * np.asarray(qp, dtype=complex)
    out = np.ones_like(w)
    mags = np.abs(w)
    nz = mags > 0
    out[nz] = w[nz] / mags[nz]
    return out


def _g_of_alpha(q0, qp, alpha: float) -> float:
    theta = theta_price_point(q0, qp, alpha)
    return float((theta.conj() @ qp).real)


def bisect_alpha(q0, qp, threshold: float, eps: float = BISECT_TOL):
    """Price search for the linearized reflection pass.

    Returns (alpha, theta).  alpha = 0 applies when unconstrained phase
    alignment already meets the threshold; otherwise bisection uses the
    non-decreasing constraint value g(alpha) = Re(theta(alpha)^H qp).  When
    even full alignment with qp cannot reach the threshold the pass is
    infeasible.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    qp = np.asarray(qp, dtype=complex)
    if _g_of_alpha(q0, qp, 0.0) >= threshold:
        return 0.0, theta_price_point(q0, qp, 0.0)
    g_sup = float(np.abs(qp).sum())
    scale = max(abs(threshold), g_sup, 1e-30)
    if g_sup < threshold - 1e-12 * scale:
        raise InfeasibleThetaStepError(
            f"constraint unattainable: sup g = {g_sup:.6e} < threshold {threshold:.6e}"
        )
    alpha_hi = 1.0
    for _ in range(BRACKET_DOUBLINGS):
        if _g_of_alpha(q0, qp, alpha_hi) >= threshold:
            break
        alpha_hi *= 2.0
    else:
        raise NumericalError("could not bracket the price (threshold met only asymptotically)")
    alpha_lo = 0.0
    for _ in range(200):
        if alpha_hi - alpha_lo <= eps * max(1.0, alpha_hi):
            break
        mid = 0.5 * (alpha_lo + alpha_hi)
        if _g_of_alpha(q0, qp, mid) >= threshold:
            alpha_hi = mid
        else:
            alpha_lo = mid
    return alpha_hi, theta_price_point(q0, qp, alpha_hi)


def sca_theta_solve_single(data: ThetaProblemData, theta0,
                           tol: float = SCA_TOL, max_iters: int = 200,
                           bisect_eps: float = BISECT_TOL) -> np.ndarray:
    """Majorize-and-align loop for the reflection block (single PU).

    ``theta0`` must be unit modulus and satisfy the interference constraint;
    every iterate stays on the torus and feasible, and the block objective is
    non-increasing (each pass solves its linearized problem globally and the
    reference point is feasible for it).
    """
    theta = np.asarray(theta0, dtype=complex).copy()
    if data.num_elements == 0:
        return theta
    if np.max(np.abs(np.abs(theta) - 1.0)) > 1e-8:
        raise ValueError("theta0 must be unit modulus")
    if not data.feasible(theta, rel_tol=1e-9):
        raise InfeasibleProblemError("theta0 violates the interference constraint")

    maj = ThetaMajorizedData.from_problem(data)
    obj = data.objective(theta)
    for _ in range(max_iters):
        q0, qp, threshold = maj.prices(theta)
        _, candidate = bisect_alpha(q0, qp, threshold, eps=bisect_eps)
        new_obj = data.objective(candidate)
        if new_obj > obj + 1e-10 * (1.0 + abs(obj)):
            break  # numerical stall; keep the incumbent
        converged = abs(new_obj - obj) <= tol * (1.0 + abs(obj))
        theta, obj = candidate, new_obj
        if converged:
            break
    return theta
