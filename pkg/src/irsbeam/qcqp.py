"""Log-barrier interior-point solver for convex complex QCQPs.

Problems are stated over a complex vector z:

    minimize    z^H A0 z - 2 Re(b0^H z) + c0
    subject to  z^H A_i z + 2 Re(z^H b_i) <= r_i          (Hermitian PSD A_i)
                |z_j| <= 1 for every coordinate            (optional box)

Internally the problem is rewritten over x = [Re z; Im z]; a Hermitian PSD
form z^H A z becomes x^T M x with the real symmetric PSD embedding
M = [[Re A, -Im A], [Im A, Re A]].  The centering path uses damped Newton
steps with backtracking; the barrier parameter grows geometrically until the
duality-gap bound m/t falls below the outer tolerance.

Problem data spans many decades in this package (Watt-scale powers against
1e-7 W noise floors), so the objective and each constraint are rescaled to
O(1) before solving; reported KKT residuals refer to the rescaled data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, InfeasibleProblemError, NumericalError

_SLACK_FLOOR = 1e-14  # minimum normalized slack accepted as "strictly feasible"


@dataclass(frozen=True)
class QuadConstraint:
    """z^H a z + 2 Re(z^H b) <= r with Hermitian PSD ``a`` (None means zero)."""

    a: Optional[np.ndarray]
    b: Optional[np.ndarray]
    r: float


@dataclass(frozen=True)
class QcqpProblem:
    a0: np.ndarray
    b0: np.ndarray
    c0: float
    constraints: tuple
    unit_box: bool = False

    @property
    def dim(self) -> int:
        return self.b0.shape[0]

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=complex)
        quad = float((z.conj() @ self.a0 @ z).real)
        return quad - 2.0 * float((self.b0.conj() @ z).real) + self.c0

    def constraint_values(self, z) -> np.ndarray:
        """f_i(z) - r_i for the quadratic constraints (<= 0 when feasible)."""
        z = np.asarray(z, dtype=complex)
        vals = []
        for con in self.constraints:
            v = 0.0
            if con.a is not None:
                v += float((z.conj() @ con.a @ z).real)
            if con.b is not None:
                v += 2.0 * float((z.conj() @ con.b).real)
            vals.append(v - con.r)
        return np.asarray(vals)

    def max_violation(self, z) -> float:
        viol = 0.0
        vals = self.constraint_values(z)
        if vals.size:
            viol = max(viol, float(vals.max()))
        if self.unit_box:
            viol = max(viol, float((np.abs(np.asarray(z)) ** 2 - 1.0).max(initial=0.0)))
        return max(viol, 0.0)


@dataclass(frozen=True)
class BarrierSettings:
    t0: float = 1.0
    mu: float = 10.0
    newton_tol: float = 1e-9
    outer_tol: float = 1e-8
    max_newton: int = 200
    max_outer: int = 60

    def __post_init__(self):
        if self.t0 <= 0 or self.mu <= 1 or self.newton_tol <= 0 or self.outer_tol <= 0:
            raise ValueError("barrier settings require t0 > 0, mu > 1, positive tolerances")


@dataclass
class BarrierResult:
    z: np.ndarray
    objective: float
    stationarity_residual: float
    comp_slack_residual: float
    max_violation: float
    barrier_t: float
    newton_steps: int
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _realify_matrix(a: np.ndarray) -> np.ndarray:
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def _realify_vector(b: np.ndarray) -> np.ndarray:
    return np.concatenate([b.real, b.imag])


class _RealProblem:
    """Realified, rescaled problem data plus barrier calculus."""

    def __init__(self, problem: QcqpProblem):
        n = problem.dim
        a0 = np.asarray(problem.a0, dtype=complex)
        if a0.shape != (n, n):
            raise DimensionMismatchError(f"objective matrix {a0.shape} vs vector dim {n}")
        self.n = n
        self.m0 = _realify_matrix(0.5 * (a0 + a0.conj().T))
        self.g0 = _realify_vector(np.asarray(problem.b0, dtype=complex))
        obj_scale = max(float(np.trace(self.m0)) / max(2 * n, 1), float(np.linalg.norm(self.g0)), 1e-30)
        self.obj_scale = obj_scale
        self.m0 /= obj_scale
        self.g0 /= obj_scale

        self.cons = []
        for con in problem.constraints:
            mi = None
            if con.a is not None:
                ai = np.asarray(con.a, dtype=complex)
                if ai.shape != (n, n):
                    raise DimensionMismatchError(f"constraint matrix {ai.shape} vs dim {n}")
                mi = _realify_matrix(0.5 * (ai + ai.conj().T))
            gi = _realify_vector(np.asarray(con.b, dtype=complex)) if con.b is not None else None
            scale = max(
                abs(con.r),
                float(np.trace(mi)) if mi is not None else 0.0,
                2.0 * float(np.linalg.norm(gi)) if gi is not None else 0.0,
                1e-30,
            )
            self.cons.append(
                (
                    mi / scale if mi is not None else None,
                    gi / scale if gi is not None else None,
                    con.r / scale,
                )
            )
        self.unit_box = problem.unit_box
        self.num_ineq = len(self.cons) + (n if problem.unit_box else 0)

    # -- barrier pieces ----------------------------------------------------
    def f0(self, x) -> float:
        return float(x @ self.m0 @ x - 2.0 * self.g0 @ x)

    def slacks(self, x) -> np.ndarray:
        vals = []
        for mi, gi, ri in self.cons:
            v = -ri
            if mi is not None:
                v += float(x @ mi @ x)
            if gi is not None:
                v += 2.0 * float(gi @ x)
            vals.append(-v)
        if self.unit_box:
            u, v = x[: self.n], x[self.n:]
            vals.extend((1.0 - u * u - v * v).tolist())
        return np.asarray(vals)

    def strictly_feasible(self, x) -> bool:
        s = self.slacks(x)
        return bool(s.size == 0 or s.min() > _SLACK_FLOOR)

    def barrier_value(self, x, t: float) -> float:
        s = self.slacks(x)
        if s.size and s.min() <= 0:
            return np.inf
        return t * self.f0(x) - float(np.log(s).sum()) if s.size else t * self.f0(x)

    def grad_hess(self, x, t: float):
        n2 = 2 * self.n
        grad = t * (2.0 * self.m0 @ x - 2.0 * self.g0)
        hess = (2.0 * t) * self.m0.copy()
        for mi, gi, ri in self.cons:
            fval = -ri
            gvec = np.zeros(n2)
            if mi is not None:
                mx = mi @ x
                fval += float(x @ mx)
                gvec += 2.0 * mx
            if gi is not None:
                fval += 2.0 * float(gi @ x)
                gvec += 2.0 * gi
            s = -fval
            grad += gvec / s
            if mi is not None:
                hess += (2.0 / s) * mi
            hess += np.outer(gvec, gvec) / (s * s)
        if self.unit_box:
            n = self.n
            u, v = x[:n], x[n:]
            s = 1.0 - u * u - v * v
            grad[:n] += 2.0 * u / s
            grad[n:] += 2.0 * v / s
            idx = np.arange(n)
            inv_s = 1.0 / s
            inv_s2 = inv_s * inv_s
            hess[idx, idx] += 2.0 * inv_s + 4.0 * u * u * inv_s2
            hess[idx + n, idx + n] += 2.0 * inv_s + 4.0 * v * v * inv_s2
            cross = 4.0 * u * v * inv_s2
            hess[idx, idx + n] += cross
            hess[idx + n, idx] += cross
        return grad, hess


# A Newton decrement this small puts the iterate deep inside the quadratic
# convergence region, where the m/t duality-gap bound already applies; used
# to accept a point whose barrier value can no longer improve in float64.
_CENTERED_DECREMENT = 1e-4


def _newton_center(real_prob: _RealProblem, x: np.ndarray, t: float,
                   settings: BarrierSettings) -> tuple:
    steps = 0
    stalls = 0
    for _ in range(settings.max_newton):
        grad, hess = real_prob.grad_hess(x, t)
        damp = 0.0
        while True:
            try:
                dx = np.linalg.solve(
                    hess + damp * np.eye(hess.shape[0]) if damp else hess, -grad
                )
                break
            except np.linalg.LinAlgError:
                damp = max(10.0 * damp, 1e-12 * max(float(np.trace(hess)), 1.0))
                if damp > 1e12:
                    raise NumericalError("Newton system is numerically singular")
        decrement = float(-grad @ dx)
        if decrement < 0:  # damped/indefinite fallback: steepest descent
            dx = -grad
            decrement = float(grad @ grad)
        if decrement / 2.0 <= settings.newton_tol:
            return x, steps
        psi0 = real_prob.barrier_value(x, t)
        # At large t, |psi| can exceed the decrement's scale by more than the
        # float64 resolution; once improvements fall below what psi can even
        # represent, the point is as centered as the arithmetic allows.
        resolution = 8.0 * np.finfo(float).eps * abs(psi0)
        slope = float(grad @ dx)
        step = 1.0
        accepted = False
        while step >= 1e-18:
            xn = x + step * dx
            if real_prob.strictly_feasible(xn) and \
                    real_prob.barrier_value(xn, t) <= psi0 + 0.25 * step * slope + resolution:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if decrement / 2.0 <= _CENTERED_DECREMENT:
                return x, steps
            raise NumericalError(
                f"line search failed at t={t:.3e}, decrement={decrement:.3e}"
            )
        if psi0 - real_prob.barrier_value(xn, t) <= resolution:
            stalls += 1
            if stalls >= 2 and decrement / 2.0 <= _CENTERED_DECREMENT:
                return xn, steps + 1
        else:
            stalls = 0
        x = xn
        steps += 1
    if float(-grad @ dx) / 2.0 <= _CENTERED_DECREMENT:
        return x, steps
    raise NumericalError(
        f"Newton centering did not converge within {settings.max_newton} steps at t={t:.3e}"
    )


def _starting_point(real_prob: _RealProblem, z0, n: int) -> np.ndarray:
    candidates = []
    if z0 is not None:
        z0 = np.asarray(z0, dtype=complex)
        candidates.extend(_realify_vector(z0 * (0.99 * 0.5 ** j)) for j in range(40))
    candidates.append(np.zeros(2 * n))
    for x in candidates:
        if real_prob.strictly_feasible(x):
            return x
    raise InfeasibleProblemError("no strictly feasible starting point found")


def solve_qcqp_barrier(problem: QcqpProblem, settings: Optional[BarrierSettings] = None,
                       z0=None) -> BarrierResult:
    """Solve a convex QCQP to the barrier settings' accuracy.

    ``z0`` (optionally scaled toward the origin) must yield a strictly
    feasible start; the origin is tried last, which covers every problem with
    all r_i > 0.  Returns the primal point together with scale-relative KKT
    residuals: stationarity of the Lagrangian with the barrier multipliers
    1/(t s_i), the complementary-slackness bound m/t, and the primal violation.
    """
    settings = settings or BarrierSettings()
    real_prob = _RealProblem(problem)
    n = problem.dim
    x = _starting_point(real_prob, z0, n)

    m = real_prob.num_ineq
    t = settings.t0
    total_steps = 0
    if m == 0:
        # Unconstrained quadratic: one exact Newton solve on the objective.
        x = np.linalg.lstsq(2.0 * real_prob.m0, 2.0 * real_prob.g0, rcond=None)[0]
        t = np.inf
    else:
        for _ in range(settings.max_outer):
            x, steps = _newton_center(real_prob, x, t, settings)
            total_steps += steps
            if m / t < settings.outer_tol:
                break
            t *= settings.mu
        else:
            raise NumericalError("barrier loop exhausted max_outer stages")

    z = x[:n] + 1j * x[n:]
    slacks = real_prob.slacks(x)
    lam = 1.0 / (t * slacks) if m else np.zeros(0)
    grad = 2.0 * real_prob.m0 @ x - 2.0 * real_prob.g0
    for (mi, gi, ri), lam_i in zip(real_prob.cons, lam[: len(real_prob.cons)]):
        gvec = np.zeros(2 * n)
        if mi is not None:
            gvec += 2.0 * mi @ x
        if gi is not None:
            gvec += 2.0 * gi
        grad += lam_i * gvec
    if real_prob.unit_box:
        lam_box = lam[len(real_prob.cons):]
        u, v = x[:n], x[n:]
        grad[:n] += lam_box * 2.0 * u
        grad[n:] += lam_box * 2.0 * v
    return BarrierResult(
        z=z,
        objective=problem.objective(z),
        stationarity_residual=float(np.linalg.norm(grad)),
        comp_slack_residual=(m / t) if np.isfinite(t) else 0.0,
        max_violation=problem.max_violation(z),
        barrier_t=t,
        newton_steps=total_steps,
        multipliers=lam,
    )
