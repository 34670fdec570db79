"""Precoder subproblem: quadratic forms and the stacked convex program.

With decoders U and weights W fixed, minimizing the weighted MSE over the
precoders is the convex program

    min_F  sum_l Tr(F_l^H X0 F_l) - 2 sum_l Re Tr(Y_l F_l)
    s.t.   sum_l Tr(F_l^H F_l) <= P_max
           sum_l Tr(F_l^H X_k F_l) <= Gamma_k            for every PU k

where X0 = sum_m w_m G_m^H U_m W_m U_m^H G_m, X_k = G_k^H G_k and
Y_l = w_l W_l U_l^H G_l.  Stacking the columns of all F_l turns it into a
standard QCQP over one complex vector.
"""

from __future__ import annotations

import numpy as np

from .model import pu_channels, su_channels
from .qcqp import QcqpProblem, QuadConstraint
from .scenario import ChannelSet


def precoder_quadratics(channels: ChannelSet, theta, decoders, mse_weights, su_weights):
    """Return (X0, [Y_l], [X_k]) for the current reflection vector."""
    g_su = su_channels(channels, theta)
    g_pu = pu_channels(channels, theta)
    n_sa = channels.sap_antennas
    x0 = np.zeros((n_sa, n_sa), dtype=complex)
    y_list = []
    for l, (g, u, w, om) in enumerate(zip(g_su, decoders, mse_weights, su_weights)):
        uwu = u @ w @ u.conj().T
        x0 += om * g.conj().T @ uwu @ g
        y_list.append(om * w @ u.conj().T @ g)
    x0 = 0.5 * (x0 + x0.conj().T)
    xk_list = [0.5 * ((g.conj().T @ g) + (g.conj().T @ g).conj().T) for g in g_pu]
    return x0, y_list, xk_list


def precoder_objective(x0, y_list, precoders) -> float:
    """OP-objective sum_l Tr(F^H X0 F) - 2 sum_l Re Tr(Y_l F_l)."""
    val = 0.0
    for y, f in zip(y_list, precoders):
        val += float(np.trace(f.conj().T @ x0 @ f).real) - 2.0 * float(np.trace(y @ f).real)
    return val


def stack_precoders(precoders) -> np.ndarray:
    """Concatenate the columns of every F_l into one complex vector."""
    return np.concatenate([np.asarray(f).ravel(order="F") for f in precoders])


def unstack_precoders(z, num_sus: int, n_sa: int, d: int) -> list:
    """Inverse of :func:`stack_precoders`."""
    z = np.asarray(z, dtype=complex)
    block = n_sa * d
    return [z[l * block:(l + 1) * block].reshape((n_sa, d), order="F") for l in range(num_sus)]


def build_precoder_qcqp(channels: ChannelSet, theta, decoders, mse_weights, su_weights,
                        max_power: float, interference_caps) -> QcqpProblem:
    """Stacked QCQP whose solution is the optimal precoder block update.

    Constraint 0 is the transmit-power cap; constraints 1..K are the per-PU
    interference caps.  The objective equals sum_l w_l Tr(W_l E_l) up to an
    F-independent constant.
    """
    x0, y_list, xk_list = precoder_quadratics(channels, theta, decoders, mse_weights, su_weights)
    num_sus = channels.num_sus
    d = y_list[0].shape[0]
    n_sa = channels.sap_antennas
    dim = num_sus * n_sa * d

    blocks = num_sus * d
    a0 = np.kron(np.eye(blocks), x0)
    # Re(b0^H z) must reproduce sum_l Re Tr(Y_l F_l): column c of F_l pairs
    # with the conjugated row c of Y_l, i.e. b0 stacks vec(Y_l^H).
    b0 = np.concatenate([y.conj().T.ravel(order="F") for y in y_list])

    constraints = [QuadConstraint(a=np.eye(dim, dtype=complex), b=None, r=float(max_power))]
    for xk, cap in zip(xk_list, interference_caps):
        constraints.append(QuadConstraint(a=np.kron(np.eye(blocks), xk), b=None, r=float(cap)))
    return QcqpProblem(a0=a0, b0=b0, c0=0.0, constraints=tuple(constraints), unit_box=False)
