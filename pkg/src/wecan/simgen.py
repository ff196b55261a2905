"""Synthetic network generator following the model's generative process.

Node propensity pairs are bivariate normal; latent feature directions come
from a mixture of von Mises-Fisher distributions centered on the cluster
feature rows (which sit equally spaced on a circle), with gamma-distributed
magnitudes. Structural edges draw sender and receiver through the softmax
factors and a normal weight at the canonical parameter; noise edges pick a
uniform ordered pair and a small gamma weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .graph import Network, network_from_arrays

__all__ = ["SimConfig", "sample_vmf", "generate"]


@dataclass
class SimConfig:
    n_nodes: int = 150
    n_edges: int = 1200
    k_true: int = 4
    noise_prop: float = 0.15
    p: int = 2
    prop_var: float = 2.0
    prop_corr: float = 0.75
    vmf_kappa: float = 50.0
    mag_shape: float = 150.0
    mag_rate: float = 40.0
    beta_pool: tuple[float, ...] = (-1.0, -2.0, 1.0, 2.0)
    lam_magnitude: float = 0.4
    noise_shape: float = 2.0
    noise_rate: float = 20.0
    phi_low: float = 0.05
    phi_high: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.n_nodes < 2 or self.n_edges < 1:
            raise ValueError("need at least 2 nodes and 1 edge")
        if not 0.0 <= self.noise_prop < 1.0:
            raise ValueError("noise_prop must be in [0, 1)")
        if self.p < 2:
            raise ValueError("latent dimension must be at least 2")
        if self.k_true < 1 or self.k_true > len(self.beta_pool):
            raise ValueError("k_true must be in 1..len(beta_pool) (sampling without replacement)")
        if self.vmf_kappa < 0:
            raise ValueError("vmf_kappa must be nonnegative")


def sample_vmf(mu: np.ndarray, kappa: float, rng: np.random.Generator, size: int | None = None):
    """Draw unit vectors from a von Mises-Fisher distribution.

    Uses the standard rejection scheme for the cosine against the mean
    direction plus a uniform tangent component. ``kappa = 0`` reduces to
    the uniform distribution on the sphere. Returns shape (p,) for
    ``size=None`` else (size, p).
    """
    mu = np.asarray(mu, dtype=float)
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    norm = np.linalg.norm(mu)
    if not np.isclose(norm, 1.0, atol=1e-8):
        raise ValueError("mu must be a unit vector")
    mu = mu / norm
    d = mu.shape[0]
    n = 1 if size is None else int(size)

    b = (d - 1) / (2.0 * kappa + np.sqrt(4.0 * kappa * kappa + (d - 1) ** 2))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + (d - 1) * np.log(1.0 - x0 * x0)

    w = np.empty(n)
    pending = np.arange(n)
    while pending.size:
        z = rng.beta(0.5 * (d - 1), 0.5 * (d - 1), size=pending.size)
        cand = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=pending.size)
        accept = kappa * cand + (d - 1) * np.log1p(-x0 * cand) - c >= np.log(u)
        w[pending[accept]] = cand[accept]
        pending = pending[~accept]

    # Uniform tangent directions orthogonal to mu.
    v = rng.normal(size=(n, d))
    v -= np.outer(v @ mu, mu)
    v /= np.linalg.norm(v, axis=1)[:, None]
    out = w[:, None] * mu[None, :] + np.sqrt(np.maximum(1.0 - w * w, 0.0))[:, None] * v
    out /= np.linalg.norm(out, axis=1)[:, None]
    return out[0] if size is None else out


def _sign_patterns(k: int, p: int) -> np.ndarray:
    patterns = list(product((1.0, -1.0), repeat=p))
    # Order for p = 2: (+,+), (+,-), (-,+), (-,-) to cycle the four
    # interaction signatures across clusters.
    return np.array([patterns[i % len(patterns)] for i in range(k)])


def generate(config: SimConfig):
    """Sample (network, truth, true_params) from the generative process.

    ``truth[m]`` is 0 for noise edges and 1..k_true for structural ones.
    Exactly ``n_edges`` edges are drawn.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n, M, K, p = config.n_nodes, config.n_edges, config.k_true, config.p

    cov = config.prop_var * np.array([[1.0, config.prop_corr], [config.prop_corr, 1.0]])
    S1, R1 = rng.multivariate_normal([0.0, 0.0], cov, size=n).T
    S2, R2 = rng.multivariate_normal([0.0, 0.0], cov, size=n).T

    offset = rng.uniform(0.0, 2.0 * np.pi)
    angles = offset + 2.0 * np.pi * np.arange(K) / K
    Y = np.zeros((K, p))
    Y[:, 0] = np.cos(angles)
    Y[:, 1] = np.sin(angles)

    component = rng.integers(0, K, size=n)
    dir_u = np.empty((n, p))
    dir_v = np.empty((n, p))
    for k in range(K):
        idx = np.nonzero(component == k)[0]
        if idx.size:
            dir_u[idx] = sample_vmf(Y[k], config.vmf_kappa, rng, size=idx.size)
            dir_v[idx] = sample_vmf(Y[k], config.vmf_kappa, rng, size=idx.size)
    mag_u = rng.gamma(config.mag_shape, 1.0 / config.mag_rate, size=n)
    mag_v = rng.gamma(config.mag_shape, 1.0 / config.mag_rate, size=n)
    U = mag_u[:, None] * dir_u
    V = mag_v[:, None] * dir_v

    beta = rng.choice(np.asarray(config.beta_pool, dtype=float), size=K, replace=False)
    lam = config.lam_magnitude * _sign_patterns(K, p)
    phi = rng.uniform(config.phi_low, config.phi_high, size=K)

    probs = np.concatenate(([config.noise_prop], np.full(K, (1.0 - config.noise_prop) / K)))
    truth = rng.choice(K + 1, size=M, p=probs)

    send_p = np.empty((K, n))
    recv_p = np.empty((K, n))
    for k in range(K):
        lu = S1 + U @ Y[k]
        lv = R1 + V @ Y[k]
        send_p[k] = np.exp(lu - lu.max())
        send_p[k] /= send_p[k].sum()
        recv_p[k] = np.exp(lv - lv.max())
        recv_p[k] /= recv_p[k].sum()

    senders = np.empty(M, dtype=np.int64)
    receivers = np.empty(M, dtype=np.int64)
    weights = np.empty(M)
    for m in range(M):
        z = truth[m]
        if z == 0:
            i = int(rng.integers(n))
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            w = rng.gamma(config.noise_shape, 1.0 / config.noise_rate)
        else:
            k = z - 1
            i = int(rng.choice(n, p=send_p[k]))
            pr = recv_p[k].copy()
            pr[i] = 0.0
            pr /= pr.sum()
            j = int(rng.choice(n, p=pr))
            eta = beta[k] + S2[i] + R2[j] + float(np.dot(U[i] * lam[k], V[j]))
            w = rng.normal(eta, phi[k])
        senders[m], receivers[m], weights[m] = i, j, w

    net = network_from_arrays(n, senders, receivers, weights)
    true_params = {
        "S1": S1, "R1": R1, "S2": S2, "R2": R2,
        "U": U, "V": V, "Y": Y, "lam": lam, "beta": beta, "phi": phi,
        "noise_shape": config.noise_shape, "noise_rate": config.noise_rate,
        "component": component,
    }
    return net, truth.astype(np.int64), true_params
