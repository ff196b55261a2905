"""Vectorized numpy fallback for the per-edge hot kernels.

Every function here has a signature-identical counterpart in the compiled
``_core`` extension. Inputs are C-contiguous arrays: ``senders`` and
``receivers`` are int64 0-based node indices of length M; per-node and
per-cluster arrays are float64. Structural clusters are indexed 0..K-1
(the noise component never enters these kernels).
"""

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


def _eta_matrix(senders, receivers, S2, R2, beta, U, V, lam):
    # eta[m, k] = beta_k + S2_i + R2_j + sum_d U_id lam_kd V_jd
    return (
        beta[None, :]
        + S2[senders][:, None]
        + R2[receivers][:, None]
        + np.einsum("mp,kp,mp->mk", U[senders], lam, V[receivers])
    )


def structural_scores(
    senders,
    receivers,
    w_lin,
    log_jac,
    logit_u,
    logit_v,
    log_f_u,
    log_denom,
    S2,
    R2,
    beta,
    phi,
    U,
    V,
    lam,
    include_weights,
):
    """Per-edge, per-cluster structural log densities, shape (M, K).

    Column k holds log pi(sender|k) + log pi(receiver|sender,k) and, when
    ``include_weights``, the weight log density at the canonical parameter.
    ``w_lin`` is the (possibly log-transformed) weight entering the linear
    term and ``log_jac`` the transform's Jacobian contribution.
    """
    scores = (
        logit_u[senders, :]
        - log_f_u[None, :]
        + logit_v[receivers, :]
        - log_denom[senders, :]
    )
    if include_weights:
        eta = _eta_matrix(senders, receivers, S2, R2, beta, U, V, lam)
        phi2 = phi * phi
        scores = scores + (
            -np.log(phi)[None, :]
            - 0.5 * _LOG_2PI
            - (w_lin * w_lin)[:, None] / (2.0 * phi2)[None, :]
            + (eta * w_lin[:, None] - 0.5 * eta * eta) / phi2[None, :]
            + log_jac[:, None]
        )
    return np.ascontiguousarray(scores)


def weighted_score_sum(
    senders,
    receivers,
    w_lin,
    log_jac,
    resp_struct,
    logit_u,
    logit_v,
    log_f_u,
    log_denom,
    S2,
    R2,
    beta,
    phi,
    U,
    V,
    lam,
    include_weights,
):
    """sum_m sum_k resp[m, k] * structural_scores[m, k] without keeping M x K."""
    scores = structural_scores(
        senders,
        receivers,
        w_lin,
        log_jac,
        logit_u,
        logit_v,
        log_f_u,
        log_denom,
        S2,
        R2,
        beta,
        phi,
        U,
        V,
        lam,
        include_weights,
    )
    return float(np.sum(resp_struct * scores))


def weight_gradients(senders, receivers, w_lin, resp_struct, S2, R2, beta, phi, U, V, lam, n):
    """Data terms of the weight-model gradients, accumulated over edges.

    Returns (dS2, dR2, dU, dV, dlam, dbeta, dphi); prior terms and the
    count-model contributions to dU/dV are added by the caller.
    """
    p = U.shape[1]
    Us = U[senders]
    Vr = V[receivers]
    eta = _eta_matrix(senders, receivers, S2, R2, beta, U, V, lam)
    phi2 = phi * phi
    rr = resp_struct * (w_lin[:, None] - eta) / phi2[None, :]
    rsum = rr.sum(axis=1)
    dS2 = np.bincount(senders, weights=rsum, minlength=n)
    dR2 = np.bincount(receivers, weights=rsum, minlength=n)
    rl = rr @ lam
    TU = rl * Vr
    TV = rl * Us
    dU = np.empty((n, p))
    dV = np.empty((n, p))
    for d in range(p):
        dU[:, d] = np.bincount(senders, weights=TU[:, d], minlength=n)
        dV[:, d] = np.bincount(receivers, weights=TV[:, d], minlength=n)
    dlam = rr.T @ (Us * Vr)
    dbeta = rr.sum(axis=0)
    phi3 = phi2 * phi
    t = (
        (w_lin * w_lin)[:, None] / phi3[None, :]
        - (1.0 / phi)[None, :]
        - (eta * w_lin[:, None] - 0.5 * eta * eta) * (2.0 / phi3)[None, :]
    )
    dphi = (resp_struct * t).sum(axis=0)
    return dS2, dR2, dU, dV, dlam, dbeta, dphi


def scatter_columns(senders, receivers, resp_struct, n):
    """Per-node responsibility sums: p_send[i, k], p_recv[j, k], each (n, K)."""
    K = resp_struct.shape[1]
    p_send = np.empty((n, K))
    p_recv = np.empty((n, K))
    for k in range(K):
        p_send[:, k] = np.bincount(senders, weights=resp_struct[:, k], minlength=n)
        p_recv[:, k] = np.bincount(receivers, weights=resp_struct[:, k], minlength=n)
    return p_send, p_recv
