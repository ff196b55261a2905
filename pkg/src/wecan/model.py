"""Model parameters and every factor of the edge-cluster likelihood.

An edge belongs either to the noise component (index 0), whose sender and
receiver are uniform over ordered pairs and whose weight is exponential,
or to a structural cluster k in 1..K, whose sender and receiver follow
propensity-plus-latent-feature softmaxes and whose weight follows the
exponential-family law at canonical parameter

    eta_ijk = beta_k + S2_i + R2_j + U_i Lambda_k V_j'.

Structural clusters are stored 0-based in arrays; the public cluster index
convention throughout is 0 = noise, 1..K = structural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln, logsumexp, multigammaln

from . import _kernels
from .family import NoiseLaw, WeightFamily
from .graph import Network

__all__ = [
    "ModelParams",
    "PriorConfig",
    "Precompute",
    "DENOM_EPS",
    "eta",
    "sender_log_prob",
    "receiver_log_prob",
    "edge_cluster_log_density",
    "complete_log_likelihood",
    "build_node_state",
    "refresh_precompute",
    "data_log_density_matrix",
    "log_param_prior",
    "params_to_dict",
    "params_from_dict",
]

# Receiver-denominator guard: clamp f_vk - exp(...) below eps * f_vk.
DENOM_EPS = 1e-12


@dataclass
class ModelParams:
    """All continuous unknowns of the model.

    Shapes: propensities S1, R1, S2, R2 are (n,); latent features U, V are
    (n, p); cluster features Y and interaction diagonals lam are (K, p);
    beta, phi are (K,) with phi > 0. The three 2x2 covariance blocks are
    SPD; lambda_lam and alpha_conc are positive scalars.
    """

    S1: np.ndarray
    R1: np.ndarray
    S2: np.ndarray
    R2: np.ndarray
    U: np.ndarray
    V: np.ndarray
    Y: np.ndarray
    lam: np.ndarray
    beta: np.ndarray
    phi: np.ndarray
    sigma_sr1: np.ndarray
    sigma_sr2: np.ndarray
    sigma_uv: np.ndarray
    lambda_lam: float
    alpha_conc: float

    def __post_init__(self):
        for name in ("S1", "R1", "S2", "R2", "U", "V", "Y", "lam", "beta", "phi",
                     "sigma_sr1", "sigma_sr2", "sigma_uv"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))

    @property
    def n_nodes(self) -> int:
        return int(self.S1.shape[0])

    @property
    def k_max(self) -> int:
        return int(self.Y.shape[0])

    @property
    def p(self) -> int:
        return int(self.Y.shape[1])

    def copy(self) -> "ModelParams":
        return ModelParams(
            **{
                name: np.array(getattr(self, name), copy=True)
                for name in ("S1", "R1", "S2", "R2", "U", "V", "Y", "lam", "beta", "phi",
                             "sigma_sr1", "sigma_sr2", "sigma_uv")
            },
            lambda_lam=self.lambda_lam,
            alpha_conc=self.alpha_conc,
        )

    def validate(self) -> None:
        n, K, p = self.n_nodes, self.k_max, self.p
        expected = {
            "S1": (n,), "R1": (n,), "S2": (n,), "R2": (n,),
            "U": (n, p), "V": (n, p), "Y": (K, p), "lam": (K, p),
            "beta": (K,), "phi": (K,),
            "sigma_sr1": (2, 2), "sigma_sr2": (2, 2), "sigma_uv": (2, 2),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if not np.all(self.phi > 0):
            raise ValueError("phi must be strictly positive")
        if not (self.lambda_lam > 0 and self.alpha_conc > 0):
            raise ValueError("lambda_lam and alpha_conc must be positive")
        for name in ("sigma_sr1", "sigma_sr2", "sigma_uv"):
            sig = getattr(self, name)
            if not np.allclose(sig, sig.T) or np.linalg.eigvalsh(sig)[0] <= 0:
                raise ValueError(f"{name} must be symmetric positive definite")


def _default_scale() -> np.ndarray:
    return np.eye(2)


@dataclass
class PriorConfig:
    """Hyperparameters of all priors plus the model-structure sizes.

    ``p`` and ``k_max`` live here so that one object pins the model shape;
    ``lambda_a`` is the noise rate used when no explicit noise law is given
    (None means derive it from the data).
    """

    p: int = 4
    k_max: int = 10
    psi0_sr1: np.ndarray = field(default_factory=_default_scale)
    psi0_sr2: np.ndarray = field(default_factory=_default_scale)
    psi0_uv: np.ndarray = field(default_factory=_default_scale)
    nu0_sr1: float = 4.0
    nu0_sr2: float = 4.0
    nu0_uv: float = 4.0
    a0: float = 3.0
    b0: float = 2.0
    a_alpha: float = 1.0
    b_alpha: float = 10.0
    c0: float = 1.0
    d0: float = 1.0
    nu0_t: float = 3.0
    eta0_t: float = 2.5
    lambda_a: float | None = None

    def validate(self) -> None:
        if self.p < 1 or self.k_max < 1:
            raise ValueError("p and k_max must be at least 1")
        for name in ("nu0_sr1", "nu0_sr2", "nu0_uv"):
            if getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must exceed dimension - 1 = 1")
        for name in ("a0", "b0", "a_alpha", "b_alpha", "c0", "d0", "nu0_t", "eta0_t"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lambda_a is not None and self.lambda_a <= 0:
            raise ValueError("lambda_a must be positive")


@dataclass
class Precompute:
    """Aggregates that cut gradient evaluation from O(nM) to O(n + M).

    Node-level quantities (shape (n, K) unless noted): ``logit_u[i,k]`` is
    S1_i + U_i.Y_k and ``logit_v`` its receiver analogue; ``log_f_u`` and
    ``log_f_v`` (K,) are the log-sum-exp normalizers; ``softmax_u`` and
    ``softmax_v`` the normalized exponentials; ``one_minus_ratio`` holds
    1 - exp(logit_v - log_f_v) clamped at DENOM_EPS, and ``log_denom`` the
    matching log(f_vk - exp(logit_v)). ``su_norm``/``sv_norm`` (K, p) are
    the softmax-weighted feature sums s_uk/f_uk and s_vk/f_vk.

    Responsibility aggregates: ``p_send[i,k]`` / ``p_recv[i,k]`` sum the
    responsibilities of edges sent/received by node i, ``p_dot`` their
    column totals, and ``h_tilde[k]`` = f_vk * H_k with
    H_k = sum_m p_mk / (f_vk - exp(logit_v[sender_m, k])).

    Raw-scale views f_u, f_v, s_u, s_v, H are exposed as properties.
    """

    logit_u: np.ndarray
    logit_v: np.ndarray
    log_f_u: np.ndarray
    log_f_v: np.ndarray
    softmax_u: np.ndarray
    softmax_v: np.ndarray
    one_minus_ratio: np.ndarray
    log_denom: np.ndarray
    su_norm: np.ndarray
    sv_norm: np.ndarray
    p_send: np.ndarray | None = None
    p_recv: np.ndarray | None = None
    p_dot: np.ndarray | None = None
    h_tilde: np.ndarray | None = None

    @property
    def f_u(self) -> np.ndarray:
        return np.exp(self.log_f_u)

    @property
    def f_v(self) -> np.ndarray:
        return np.exp(self.log_f_v)

    @property
    def s_u(self) -> np.ndarray:
        return self.su_norm * self.f_u[:, None]

    @property
    def s_v(self) -> np.ndarray:
        return self.sv_norm * self.f_v[:, None]

    @property
    def H(self) -> np.ndarray:
        return self.h_tilde / self.f_v


def build_node_state(params: ModelParams) -> Precompute:
    """Parameter-only aggregates (responsibility fields left unset)."""
    logit_u = params.S1[:, None] + params.U @ params.Y.T
    logit_v = params.R1[:, None] + params.V @ params.Y.T
    log_f_u = logsumexp(logit_u, axis=0)
    log_f_v = logsumexp(logit_v, axis=0)
    softmax_u = np.exp(logit_u - log_f_u[None, :])
    softmax_v = np.exp(logit_v - log_f_v[None, :])
    one_minus_ratio = -np.expm1(np.minimum(logit_v - log_f_v[None, :], 0.0))
    one_minus_ratio = np.maximum(one_minus_ratio, DENOM_EPS)
    log_denom = log_f_v[None, :] + np.log(one_minus_ratio)
    su_norm = softmax_u.T @ params.U
    sv_norm = softmax_v.T @ params.V
    return Precompute(
        logit_u=np.ascontiguousarray(logit_u),
        logit_v=np.ascontiguousarray(logit_v),
        log_f_u=log_f_u,
        log_f_v=log_f_v,
        softmax_u=softmax_u,
        softmax_v=softmax_v,
        one_minus_ratio=one_minus_ratio,
        log_denom=np.ascontiguousarray(log_denom),
        su_norm=su_norm,
        sv_norm=sv_norm,
    )


def refresh_precompute(params: ModelParams, resp_struct: np.ndarray, net: Network) -> Precompute:
    """Rebuild all aggregates for the current parameters and responsibilities.

    ``resp_struct`` is the (M, K) structural block of the responsibility
    matrix (noise column excluded). Cost O(nKp + MK).
    """
    pre = build_node_state(params)
    p_send, p_recv = _kernels.scatter_columns(
        net.senders, net.receivers, np.ascontiguousarray(resp_struct), params.n_nodes
    )
    pre.p_send = p_send
    pre.p_recv = p_recv
    pre.p_dot = resp_struct.sum(axis=0)
    pre.h_tilde = (p_send / pre.one_minus_ratio).sum(axis=0)
    return pre


def eta(params: ModelParams, i: int, j: int, k: int) -> float:
    """Canonical weight parameter for edge (i, j) in structural cluster k >= 1."""
    if not 1 <= k <= params.k_max:
        raise ValueError(f"structural cluster index must be in 1..{params.k_max}")
    kk = k - 1
    return float(
        params.beta[kk]
        + params.S2[i]
        + params.R2[j]
        + np.dot(params.U[i] * params.lam[kk], params.V[j])
    )


def sender_log_prob(params: ModelParams, pre: Precompute, i: int, k: int) -> float:
    """log pi(sender = i | cluster k); k = 0 is the noise component."""
    if k == 0:
        return -math.log(params.n_nodes)
    return float(pre.logit_u[i, k - 1] - pre.log_f_u[k - 1])


def receiver_log_prob(params: ModelParams, pre: Precompute, j: int, i: int, k: int) -> float:
    """log pi(receiver = j | sender = i, cluster k); -inf when j == i."""
    if j == i:
        return -math.inf
    if k == 0:
        return -math.log(params.n_nodes - 1)
    return float(pre.logit_v[j, k - 1] - pre.log_denom[i, k - 1])


def edge_cluster_log_density(
    params: ModelParams,
    fam: WeightFamily,
    law: NoiseLaw,
    pre: Precompute,
    sender: int,
    receiver: int,
    weight: float,
    k: int,
) -> float:
    """Log density of one edge under component k (0 = noise)."""
    from .family import structural_log_density

    n = params.n_nodes
    if k == 0:
        return -math.log(n) - math.log(n - 1) + float(law.log_density(weight))
    e = eta(params, sender, receiver, k)
    return (
        sender_log_prob(params, pre, sender, k)
        + receiver_log_prob(params, pre, receiver, sender, k)
        + float(structural_log_density(fam, weight, e, params.phi[k - 1]))
    )


def data_log_density_matrix(
    params: ModelParams,
    fam: WeightFamily,
    law: NoiseLaw | None,
    net: Network,
    pre: Precompute | None = None,
    include_weights: bool = True,
    include_noise: bool = True,
) -> np.ndarray:
    """Per-edge log densities for every component.

    Shape (M, K+1) with column 0 = noise when ``include_noise``, else
    (M, K). Edges with non-positive weight get -inf in the noise column:
    they cannot be noise under the exponential law.
    """
    if pre is None:
        pre = build_node_state(params)
    w = net.weights
    if include_weights:
        fam.check_support(w)
        w_lin = np.ascontiguousarray(fam.transform(w), dtype=np.float64)
        log_jac = (
            np.ascontiguousarray(-np.log(w)) if fam.kind == "lognormal" else np.zeros_like(w)
        )
    else:
        w_lin = np.zeros_like(w)
        log_jac = np.zeros_like(w)
    scores = _kernels.structural_scores(
        net.senders,
        net.receivers,
        w_lin,
        log_jac,
        pre.logit_u,
        pre.logit_v,
        pre.log_f_u,
        pre.log_denom,
        params.S2,
        params.R2,
        params.beta,
        params.phi,
        params.U,
        params.V,
        params.lam,
        include_weights,
    )
    if not include_noise:
        return scores
    if law is None:
        raise ValueError("a noise law is required when include_noise=True")
    n = params.n_nodes
    noise_col = -math.log(n) - math.log(n - 1) + law.log_density_or_neginf(w)
    out = np.empty((net.n_edges, params.k_max + 1))
    out[:, 0] = noise_col
    out[:, 1:] = scores
    return out


def complete_log_likelihood(
    params: ModelParams,
    fam: WeightFamily,
    law: NoiseLaw,
    net: Network,
    z_hard: np.ndarray,
    mix: tuple[float, np.ndarray],
) -> float:
    """Complete-data log likelihood at hard assignments.

    ``mix`` is (t0, t) with t indexed by structural label - 1; labels in
    ``z_hard`` are 0 (noise) or 1..len(t). Structural densities are taken
    from the matching columns of the fitted parameter arrays, so ``t`` may
    cover fewer clusters than params.k_max only if labels agree with the
    parameter columns.
    """
    z_hard = np.asarray(z_hard, dtype=np.int64)
    t0, t = mix
    t = np.asarray(t, dtype=np.float64)
    D = data_log_density_matrix(params, fam, law, net, include_noise=True)
    dens = np.take_along_axis(D, z_hard[:, None], axis=1)[:, 0]
    log_mix = np.where(
        z_hard == 0,
        math.log(t0),
        math.log1p(-t0) + np.log(np.where(z_hard == 0, 1.0, t[np.maximum(z_hard - 1, 0)])),
    )
    return float(np.sum(log_mix + dens))


def _logdet(sig: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(sig)
    if sign <= 0:
        raise ValueError("covariance block is not positive definite")
    return float(val)


def _mvn2_block_logpdf(x1: np.ndarray, x2: np.ndarray, sig: np.ndarray) -> float:
    """Sum of log N((x1_i, x2_i); 0, sig) over i (full constants)."""
    n = x1.shape[0] if x1.ndim == 1 else x1.size
    inv = np.linalg.inv(sig)
    quad = (
        inv[0, 0] * float(np.sum(x1 * x1))
        + 2.0 * inv[0, 1] * float(np.sum(x1 * x2))
        + inv[1, 1] * float(np.sum(x2 * x2))
    )
    return -n * math.log(2.0 * math.pi) - 0.5 * n * _logdet(sig) - 0.5 * quad


def _invwishart_logpdf(sig: np.ndarray, psi: np.ndarray, nu: float) -> float:
    d = 2
    return (
        0.5 * nu * _logdet(psi)
        - 0.5 * nu * d * math.log(2.0)
        - multigammaln(0.5 * nu, d)
        - 0.5 * (nu + d + 1) * _logdet(sig)
        - 0.5 * float(np.trace(psi @ np.linalg.inv(sig)))
    )


def _half_t_logpdf(phi: np.ndarray, nu: float, scale: float) -> float:
    const = (
        math.log(2.0)
        + gammaln(0.5 * (nu + 1))
        - gammaln(0.5 * nu)
        - 0.5 * math.log(nu * math.pi)
        - math.log(scale)
    )
    return float(
        phi.size * const - 0.5 * (nu + 1) * np.sum(np.log1p(phi * phi / (nu * scale * scale)))
    )


def log_param_prior(params: ModelParams, prior: PriorConfig, weighted: bool = True) -> float:
    """Log prior density of all continuous parameters.

    The concentration prior is the unnormalized form
    a_alpha * log(alpha) - b_alpha * alpha; everything else carries its
    normalizing constants. With ``weighted=False`` the blocks that only
    matter for the weight model (S2/R2, Lambda, beta, phi, their
    hyperpriors) are omitted.
    """
    n, K, p = params.n_nodes, params.k_max, params.p
    total = _mvn2_block_logpdf(params.S1, params.R1, params.sigma_sr1)
    total += _invwishart_logpdf(params.sigma_sr1, prior.psi0_sr1, prior.nu0_sr1)
    # (U_i, V_i) ~ MVN(0, sigma_uv kron I_p): p iid 2-vectors per node.
    inv = np.linalg.inv(params.sigma_uv)
    quad = (
        inv[0, 0] * float(np.sum(params.U * params.U))
        + 2.0 * inv[0, 1] * float(np.sum(params.U * params.V))
        + inv[1, 1] * float(np.sum(params.V * params.V))
    )
    total += -n * p * math.log(2.0 * math.pi) - 0.5 * n * p * _logdet(params.sigma_uv) - 0.5 * quad
    total += _invwishart_logpdf(params.sigma_uv, prior.psi0_uv, prior.nu0_uv)
    # Y_k ~ MVN(0, I_p)
    total += -0.5 * K * p * math.log(2.0 * math.pi) - 0.5 * float(np.sum(params.Y * params.Y))
    # concentration: unnormalized Gamma-style term
    total += prior.a_alpha * math.log(params.alpha_conc) - prior.b_alpha * params.alpha_conc
    if weighted:
        total += _mvn2_block_logpdf(params.S2, params.R2, params.sigma_sr2)
        total += _invwishart_logpdf(params.sigma_sr2, prior.psi0_sr2, prior.nu0_sr2)
        lam_var = params.lambda_lam
        total += (
            -0.5 * K * p * math.log(2.0 * math.pi * lam_var)
            - 0.5 * float(np.sum(params.lam * params.lam)) / lam_var
        )
        # lambda ~ inverse-gamma(a0, b0)
        total += (
            prior.a0 * math.log(prior.b0)
            - gammaln(prior.a0)
            - (prior.a0 + 1.0) * math.log(lam_var)
            - prior.b0 / lam_var
        )
        total += _half_t_logpdf(params.phi, prior.nu0_t, prior.eta0_t)
    return float(total)


def params_to_dict(params: ModelParams) -> dict:
    return {
        "n_nodes": params.n_nodes,
        "k_max": params.k_max,
        "p": params.p,
        "S1": params.S1.tolist(),
        "R1": params.R1.tolist(),
        "S2": params.S2.tolist(),
        "R2": params.R2.tolist(),
        "U": params.U.tolist(),
        "V": params.V.tolist(),
        "Y": params.Y.tolist(),
        "lambda_diag": params.lam.tolist(),
        "beta": params.beta.tolist(),
        "phi": params.phi.tolist(),
        "sigma_sr1": params.sigma_sr1.tolist(),
        "sigma_sr2": params.sigma_sr2.tolist(),
        "sigma_uv": params.sigma_uv.tolist(),
        "lambda_lam": params.lambda_lam,
        "alpha_conc": params.alpha_conc,
    }


def params_from_dict(doc: dict) -> ModelParams:
    return ModelParams(
        S1=np.array(doc["S1"]),
        R1=np.array(doc["R1"]),
        S2=np.array(doc["S2"]),
        R2=np.array(doc["R2"]),
        U=np.array(doc["U"]),
        V=np.array(doc["V"]),
        Y=np.array(doc["Y"]),
        lam=np.array(doc["lambda_diag"]),
        beta=np.array(doc["beta"]),
        phi=np.array(doc["phi"]),
        sigma_sr1=np.array(doc["sigma_sr1"]),
        sigma_sr2=np.array(doc["sigma_sr2"]),
        sigma_uv=np.array(doc["sigma_uv"]),
        lambda_lam=float(doc["lambda_lam"]),
        alpha_conc=float(doc["alpha_conc"]),
    )
