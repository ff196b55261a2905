"""Starting values: count-only pre-fit, weighted-degree heuristics, defaults.

The count-structure parameters (S1, R1, U, V, Y) come from fitting the
unweighted sub-model (the weight factor dropped and no noise component)
with the same GEM engine. Weight propensities use log-transformed degree
weight sums; dispersions use the empirical standard deviation of the
(possibly log-transformed) weights.
"""

from __future__ import annotations

import numpy as np

from .family import WeightFamily
from .graph import Network
from .model import ModelParams, PriorConfig
from .estimation import (
    UNWEIGHTED,
    FitOptions,
    VariationalState,
    run_gem,
    state_from_resp,
)

__all__ = ["init_unweighted", "init_weight_params", "init_remaining", "initialize"]

PHI_FLOOR = 1e-3


def _signed_log1p(x: np.ndarray) -> np.ndarray:
    # log(1 + s) for nonnegative sums, extended symmetrically so that
    # negative weight totals (possible under the normal family) stay finite.
    return np.sign(x) * np.log1p(np.abs(x))


def _blank_params(n: int, prior: PriorConfig, rng: np.random.Generator) -> ModelParams:
    K, p = prior.k_max, prior.p
    return ModelParams(
        S1=np.zeros(n),
        R1=np.zeros(n),
        S2=np.zeros(n),
        R2=np.zeros(n),
        U=rng.normal(scale=0.5, size=(n, p)),
        V=rng.normal(scale=0.5, size=(n, p)),
        Y=rng.normal(size=(K, p)),
        lam=np.zeros((K, p)),
        beta=np.zeros(K),
        phi=np.ones(K),
        sigma_sr1=prior.psi0_sr1 / (prior.nu0_sr1 + 3.0),
        sigma_sr2=prior.psi0_sr2 / (prior.nu0_sr2 + 3.0),
        sigma_uv=prior.psi0_uv / (prior.nu0_uv + 3.0),
        lambda_lam=prior.b0 / (prior.a0 + 1.0),
        alpha_conc=prior.a_alpha / prior.b_alpha,
    )


def init_unweighted(
    net: Network,
    prior: PriorConfig,
    options: FitOptions,
    seed: int | np.random.Generator,
):
    """Fit the count-only sub-model and return its parameters and responsibilities.

    The sub-model shares the sender/receiver factors of the full model
    symbol for symbol; its responsibilities have one column per structural
    cluster (no noise column).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n, K = net.n_nodes, prior.k_max
    params = _blank_params(n, prior, rng)
    out_deg = np.bincount(net.senders, minlength=n).astype(float)
    in_deg = np.bincount(net.receivers, minlength=n).astype(float)
    params.S1 = np.log1p(out_deg) - np.log1p(out_deg).mean()
    params.R1 = np.log1p(in_deg) - np.log1p(in_deg).mean()
    resp = rng.dirichlet(np.ones(K), size=net.n_edges)
    state = state_from_resp(resp, prior, params.alpha_conc, noise=False,
                            mixture_mode=options.mixture_mode)
    max_outer = options.prefit_max_outer or options.max_outer
    params, state, _, _, _ = run_gem(
        params, state, None, None, net, prior, options,
        variant=UNWEIGHTED, max_outer=max_outer,
    )
    return params, state.resp


def init_weight_params(net: Network, fam: WeightFamily):
    """(S2, R2, phi) start values from weighted degrees and weight spread."""
    fam.check_support(net.weights)
    w = np.asarray(fam.transform(net.weights), dtype=float)
    n = net.n_nodes
    out_sum = np.bincount(net.senders, weights=w, minlength=n)
    in_sum = np.bincount(net.receivers, weights=w, minlength=n)
    S2 = _signed_log1p(out_sum)
    R2 = _signed_log1p(in_sum)
    S2 -= S2.mean()
    R2 -= R2.mean()
    phi = float(w.std(ddof=1)) if w.size > 1 else 0.0
    return S2, R2, max(phi, PHI_FLOOR)


def init_remaining(prior: PriorConfig, rng: np.random.Generator, weight_center: float):
    """Interaction, intercept, covariance, and concentration start values."""
    K, p = prior.k_max, prior.p
    return {
        "lam": np.zeros((K, p)),
        "beta": rng.normal(loc=weight_center, scale=0.1, size=K),
        "sigma_sr1": prior.psi0_sr1 / (prior.nu0_sr1 + 3.0),
        "sigma_sr2": prior.psi0_sr2 / (prior.nu0_sr2 + 3.0),
        "sigma_uv": prior.psi0_uv / (prior.nu0_uv + 3.0),
        "lambda_lam": prior.b0 / (prior.a0 + 1.0),
        "alpha_conc": prior.a_alpha / prior.b_alpha,
    }


def initialize(
    net: Network,
    fam: WeightFamily,
    prior: PriorConfig,
    options: FitOptions,
    seed: int,
) -> tuple[ModelParams, VariationalState]:
    """Full starting point for the weighted fit with a noise component."""
    rng = np.random.default_rng(seed)
    params, resp_struct = init_unweighted(net, prior, options, rng)
    S2, R2, phi = init_weight_params(net, fam)
    params.S2 = S2
    params.R2 = R2
    params.phi = np.full(prior.k_max, phi)
    w_center = float(np.mean(fam.transform(net.weights)))
    for name, value in init_remaining(prior, rng, w_center).items():
        setattr(params, name, value)
    resp = np.hstack([np.zeros((net.n_edges, 1)), resp_struct])
    state = state_from_resp(resp, prior, params.alpha_conc, noise=True,
                            mixture_mode=options.mixture_mode)
    return params, state
