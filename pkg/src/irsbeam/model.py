"""Objective machinery: effective channels, rates, interference, WMMSE updates.

Every exposed rate is in bits/s/Hz (base-2 logs).  The downlink signal model:
the SAP transmits sum_l F_l s_l; user l sees y_l = G_l x + n_l through the
composite channel G_l = H_direct + H_reflect diag(theta) H_sap_irs, and a
linear decoder U_l estimates s_l.  The primary network's own signal is
absorbed into the SU noise power.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, NotPsdError
from .linalg import logdet_hermitian, solve_hermitian
from .scenario import ChannelSet


def effective_channel(h_direct, h_reflect, h_sap_irs, theta) -> np.ndarray:
    """Composite link H_direct + H_reflect diag(theta) H_sap_irs."""
    h_direct = np.asarray(h_direct, dtype=complex)
    h_reflect = np.asarray(h_reflect, dtype=complex)
    h_sap_irs = np.asarray(h_sap_irs, dtype=complex)
    theta = np.asarray(theta, dtype=complex).ravel()
    m = theta.shape[0]
    if h_reflect.shape[1] != m or h_sap_irs.shape[0] != m:
        raise DimensionMismatchError(
            f"reflect {h_reflect.shape} / sap_irs {h_sap_irs.shape} inconsistent with {m} elements"
        )
    if h_reflect.shape[0] != h_direct.shape[0] or h_sap_irs.shape[1] != h_direct.shape[1]:
        raise DimensionMismatchError(
            f"direct {h_direct.shape} inconsistent with reflected path"
        )
    if m == 0:
        return h_direct.copy()
    return h_direct + (h_reflect * theta) @ h_sap_irs


def su_channels(channels: ChannelSet, theta) -> list:
    """Effective channels SAP -> each SU for the given reflection vector."""
    return [
        effective_channel(channels.sap_to_su[l], channels.irs_to_su[l], channels.sap_to_irs, theta)
        for l in range(channels.num_sus)
    ]


def pu_channels(channels: ChannelSet, theta) -> list:
    """Effective channels SAP -> each PU for the given reflection vector."""
    return [
        effective_channel(channels.sap_to_pu[k], channels.irs_to_pu[k], channels.sap_to_irs, theta)
        for k in range(channels.num_pus)
    ]


def _interference_noise_cov(g, precoders, l, noise_power) -> np.ndarray:
    n_rx = g.shape[0]
    j = noise_power * np.eye(n_rx, dtype=complex)
    for i, f in enumerate(precoders):
        if i == l:
            continue
        gf = g @ f
        j += gf @ gf.conj().T
    return j


def user_rate(channels: ChannelSet, precoders, theta, l: int, noise_power: float) -> float:
    """Achievable rate of SU l in bits/s/Hz:
    log2 det(I + G F_l F_l^H G^H J_l^{-1}) with J_l the interference-plus-noise
    covariance.  Requires noise_power > 0 so J_l is invertible.
    """
    g = su_channels(channels, theta)[l]
    gf = g @ precoders[l]
    j = _interference_noise_cov(g, precoders, l, noise_power)
    # det(I + A A^H J^-1) = det(I_d + A^H J^-1 A): work in the d x d form.
    inner = gf.conj().T @ solve_hermitian(j, gf)
    d = inner.shape[0]
    return logdet_hermitian(np.eye(d) + inner)


def wsr(channels: ChannelSet, precoders, theta, weights, noise_power: float) -> float:
    """Weighted sum rate sum_l w_l R_l in bits/s/Hz."""
    return float(
        sum(w * user_rate(channels, precoders, theta, l, noise_power) for l, w in enumerate(weights))
    )


def interference_power(channels: ChannelSet, precoders, theta, k: int) -> float:
    """Received interference power at PU k in Watts: sum_l ||G_k F_l||_F^2."""
    g = pu_channels(channels, theta)[k]
    return float(sum(np.linalg.norm(g @ f, "fro") ** 2 for f in precoders))


def transmit_power(precoders) -> float:
    """Total transmit power sum_l Tr(F_l^H F_l) in Watts."""
    return float(sum(np.linalg.norm(f, "fro") ** 2 for f in precoders))


def mse_matrix(channels: ChannelSet, precoders, theta, decoders, l: int, noise_power: float) -> np.ndarray:
    """Symbol-estimate error covariance E_l for SU l (Hermitian PSD, d x d):

    E_l = (U^H G F_l - I)(U^H G F_l - I)^H
        + sum_{i != l} U^H G F_i F_i^H G^H U + noise * U^H U
    """
    g = su_channels(channels, theta)[l]
    u = decoders[l]
    d = precoders[l].shape[1]
    err = u.conj().T @ g @ precoders[l] - np.eye(d, dtype=complex)
    e = err @ err.conj().T + noise_power * (u.conj().T @ u)
    for i, f in enumerate(precoders):
        if i == l:
            continue
        cross = u.conj().T @ g @ f
        e += cross @ cross.conj().T
    return 0.5 * (e + e.conj().T)


def optimal_decoder(channels: ChannelSet, precoders, theta, l: int, noise_power: float) -> np.ndarray:
    """Linear MMSE receiver U_l = (J_l + G F_l F_l^H G^H)^{-1} G F_l."""
    g = su_channels(channels, theta)[l]
    gf = g @ precoders[l]
    cov = _interference_noise_cov(g, precoders, l, noise_power) + gf @ gf.conj().T
    return solve_hermitian(cov, gf)


def mmse_error_matrix(channels: ChannelSet, precoders, theta, l: int, noise_power: float) -> np.ndarray:
    """Error covariance with the MMSE receiver substituted in:
    E_hat = I - F^H G^H (J + G F F^H G^H)^{-1} G F.
    """
    g = su_channels(channels, theta)[l]
    gf = g @ precoders[l]
    cov = _interference_noise_cov(g, precoders, l, noise_power) + gf @ gf.conj().T
    d = gf.shape[1]
    e = np.eye(d, dtype=complex) - gf.conj().T @ solve_hermitian(cov, gf)
    return 0.5 * (e + e.conj().T)


def optimal_weight(e_hat) -> np.ndarray:
    """Auxiliary weight W_l = E_hat^{-1}.

    E_hat is positive definite whenever the noise power is positive; a
    singular E_hat signals misuse (zero noise).
    """
    e_hat = np.asarray(e_hat, dtype=complex)
    d = e_hat.shape[0]
    w = np.linalg.eigvalsh(0.5 * (e_hat + e_hat.conj().T))
    if w[0] <= 0:
        raise NotPsdError(f"error matrix not positive definite (min eigenvalue {w[0]:.3e})")
    inv = solve_hermitian(e_hat, np.eye(d, dtype=complex))
    return 0.5 * (inv + inv.conj().T)


def wmmse_update(channels: ChannelSet, precoders, theta, noise_power: float):
    """Closed-form block update: MMSE decoders and matching inverse-MSE weights."""
    decoders = [
        optimal_decoder(channels, precoders, theta, l, noise_power)
        for l in range(channels.num_sus)
    ]
    mse_weights = [
        optimal_weight(mmse_error_matrix(channels, precoders, theta, l, noise_power))
        for l in range(channels.num_sus)
    ]
    return decoders, mse_weights


def surrogate_h(mse_weights, decoders, precoders, theta, channels: ChannelSet, l: int,
                noise_power: float) -> float:
    """Rate surrogate h_l = log2 det(W_l) - Tr(W_l E_l) + d.

    Touches the true rate exactly when (U, W) are the MMSE decoder and
    inverse-MSE weight for the current precoders.
    """
    w = np.asarray(mse_weights[l], dtype=complex)
    e = mse_matrix(channels, precoders, theta, decoders, l, noise_power)
    d = e.shape[0]
    return logdet_hermitian(w) - float(np.trace(w @ e).real) + d
