"""Variational-Bayes generalized EM: E-step, M-step, convergence, restarts.

The E-step runs mean-field coordinate ascent over the edge assignments and
the stick/weight variables (t0, t) until the bound stabilizes. The M-step
first applies the closed-form covariance/shrinkage updates, then improves
the remaining parameters by a few nonlinear conjugate-gradient iterations
with a backtracking line search, so the expected log posterior Q never
decreases (generalized EM). Multi-restart fits are ranked by a
BIC-penalized complete-data likelihood (ICL).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import betaln, digamma, gammaln, logsumexp, polygamma, xlogy

from . import _kernels
from .family import NoiseLaw, WeightFamily
from .graph import Network
from .model import (
    ModelParams,
    Precompute,
    PriorConfig,
    build_node_state,
    complete_log_likelihood,
    data_log_density_matrix,
    log_param_prior,
    refresh_precompute,
)

__all__ = [
    "ModelVariant",
    "VariationalState",
    "FitOptions",
    "FitResult",
    "state_from_resp",
    "update_responsibilities",
    "e_step",
    "q_value",
    "elbo",
    "m_step_gradients",
    "m_step",
    "check_convergence",
    "prune_and_count",
    "icl",
    "hard_assignments",
    "map_mixture_from_counts",
    "fit_single_seed",
    "fit",
    "FitError",
]

WEIGHTED = True


class FitError(RuntimeError):
    """Raised when every restart of a fit fails."""


@dataclass(frozen=True)
class ModelVariant:
    """Which parts of the model are active.

    The full model has weights and a noise component; the unweighted
    variant (weight density forced to 0, no noise column) is the count-only
    sub-model used for initialization.
    """

    weighted: bool = True
    noise: bool = True


FULL = ModelVariant(True, True)
UNWEIGHTED = ModelVariant(False, False)


@dataclass
class VariationalState:
    """Mean-field state: responsibilities plus the (t0, t) factors.

    ``resp`` has shape (M, K+1) with column 0 = noise when the variant has
    a noise component, else (M, K). ``beta_t0`` holds the variational Beta
    parameters for t0 (None without noise); ``dir_t`` the variational
    Dirichlet parameters for the structural weights. The digamma-based
    expectations are cached. ``mixture_mode`` is "vb" for the variational
    treatment or "map" for the point-estimated Dirichlet-MAP alternative
    (then ``e_log_t`` caches log of the point weights).
    """

    resp: np.ndarray
    dir_t: np.ndarray
    beta_t0: tuple[float, float] | None
    e_log_t0: float
    e_log_1mt0: float
    e_log_t: np.ndarray
    mixture_mode: str = "vb"

    @property
    def has_noise(self) -> bool:
        return self.beta_t0 is not None

    @property
    def struct_resp(self) -> np.ndarray:
        return self.resp[:, 1:] if self.has_noise else self.resp

    @property
    def k_max(self) -> int:
        return int(self.dir_t.shape[0])

    def mixture_log_weights(self) -> np.ndarray:
        """Row of expected log mixture weights aligned with resp columns."""
        if self.has_noise:
            return np.concatenate(([self.e_log_t0], self.e_log_t + self.e_log_1mt0))
        return self.e_log_t.copy()


def state_from_resp(
    resp: np.ndarray,
    prior: PriorConfig,
    alpha: float,
    noise: bool,
    mixture_mode: str = "vb",
) -> VariationalState:
    """Build the (t0, t) factors and expectations from responsibilities."""
    resp = np.ascontiguousarray(resp, dtype=np.float64)
    M = resp.shape[0]
    if noise:
        s0 = float(resp[:, 0].sum())
        a_q = prior.c0 + s0
        b_q = prior.d0 + M - s0
        e_log_t0 = float(digamma(a_q) - digamma(a_q + b_q))
        e_log_1mt0 = float(digamma(b_q) - digamma(a_q + b_q))
        beta_t0 = (a_q, b_q)
        col_sums = resp[:, 1:].sum(axis=0)
    else:
        beta_t0 = None
        e_log_t0 = 0.0
        e_log_1mt0 = 0.0
        col_sums = resp.sum(axis=0)
    K = col_sums.shape[0]
    if mixture_mode == "map":
        # Point-estimated weights: alpha plays the role of the fixed
        # Dirichlet prior concentration of the count-only construction.
        raw = np.maximum(alpha + col_sums - 1.0, 1e-12)
        t_point = raw / raw.sum()
        dir_t = alpha + col_sums
        e_log_t = np.log(t_point)
    else:
        dir_t = alpha + col_sums
        e_log_t = digamma(dir_t) - digamma(dir_t.sum())
    return VariationalState(
        resp=resp,
        dir_t=dir_t,
        beta_t0=beta_t0,
        e_log_t0=e_log_t0,
        e_log_1mt0=e_log_1mt0,
        e_log_t=np.asarray(e_log_t, dtype=np.float64),
        mixture_mode=mixture_mode,
    )


def update_responsibilities(D: np.ndarray, state: VariationalState) -> np.ndarray:
    """Normalized responsibilities from data log densities and mixture expectations."""
    scores = D + state.mixture_log_weights()[None, :]
    with np.errstate(invalid="ignore"):
        lse = logsumexp(scores, axis=1)
        resp = np.exp(scores - lse[:, None])
    resp /= resp.sum(axis=1)[:, None]
    return resp


def _entropy_categorical(resp: np.ndarray) -> float:
    return float(-np.sum(xlogy(resp, resp)))


def _entropy_beta(a: float, b: float) -> float:
    return float(
        betaln(a, b)
        - (a - 1.0) * digamma(a)
        - (b - 1.0) * digamma(b)
        + (a + b - 2.0) * digamma(a + b)
    )


def _entropy_dirichlet(d: np.ndarray) -> float:
    d0 = float(d.sum())
    K = d.shape[0]
    log_b = float(np.sum(gammaln(d)) - gammaln(d0))
    return float(log_b + (d0 - K) * digamma(d0) - np.sum((d - 1.0) * digamma(d)))


def _entropy_total(state: VariationalState) -> float:
    total = _entropy_categorical(state.resp)
    if state.has_noise:
        total += _entropy_beta(*state.beta_t0)
    if state.mixture_mode == "vb":
        total += _entropy_dirichlet(state.dir_t)
    return total


def _safe_weighted_sum(resp: np.ndarray, D: np.ndarray) -> float:
    with np.errstate(invalid="ignore"):
        prod = np.where(resp > 0, resp * D, 0.0)
    return float(prod.sum())


def _mixture_terms(state: VariationalState, prior: PriorConfig, alpha: float) -> float:
    """Expected log of the mixture-assignment and (t0, t) prior factors."""
    resp = state.resp
    col_sums = state.struct_resp.sum(axis=0)
    K = col_sums.shape[0]
    total = float(np.dot(col_sums, state.e_log_t))
    if state.has_noise:
        s0 = float(resp[:, 0].sum())
        total += s0 * state.e_log_t0 + float(col_sums.sum()) * state.e_log_1mt0
        total += (
            (prior.c0 - 1.0) * state.e_log_t0
            + (prior.d0 - 1.0) * state.e_log_1mt0
            - float(betaln(prior.c0, prior.d0))
        )
    if state.mixture_mode == "map":
        total += float((alpha - 1.0) * np.sum(state.e_log_t))
    else:
        total += float(
            gammaln(K * alpha) - K * gammaln(alpha) + (alpha - 1.0) * np.sum(state.e_log_t)
        )
    return total


def q_value(
    params: ModelParams,
    fam: WeightFamily,
    law: NoiseLaw | None,
    net: Network,
    state: VariationalState,
    prior: PriorConfig,
    variant: ModelVariant = FULL,
) -> float:
    """Expected complete log posterior E_q[log f(theta, Z, t | data)]."""
    D = data_log_density_matrix(
        params,
        fam,
        law,
        net,
        include_weights=variant.weighted,
        include_noise=variant.noise,
    )
    return (
        _safe_weighted_sum(state.resp, D)
        + _mixture_terms(state, prior, params.alpha_conc)
        + log_param_prior(params, prior, weighted=variant.weighted)
    )


def elbo(
    params: ModelParams,
    fam: WeightFamily,
    law: NoiseLaw | None,
    net: Network,
    state: VariationalState,
    prior: PriorConfig,
    variant: ModelVariant = FULL,
) -> float:
    """Evidence lower bound: expected log posterior plus entropy of q."""
    return q_value(params, fam, law, net, state, prior, variant) + _entropy_total(state)


def e_step(
    params: ModelParams,
    fam: WeightFamily,
    law: NoiseLaw | None,
    net: Network,
    state: VariationalState,
    prior: PriorConfig,
    tol: float = 1e-6,
    max_iter: int = 100,
    variant: ModelVariant = FULL,
    return_trace: bool = False,
):
    """Mean-field coordinate ascent over (Z, t0, t) to a fixed point.

    The per-edge data log densities are fixed during the whole E-step, so
    they are computed once. Each cycle updates the responsibilities, then
    the Beta factor for t0, then the Dirichlet factor for t, then the
    cached digamma expectations; cycles stop when the bound changes by
    less than ``tol`` in relative terms. The returned state's bound is
    never below the input state's.
    """
    D = data_log_density_matrix(
        params, fam, law, net, include_weights=variant.weighted, include_noise=variant.noise
    )
    if np.isnan(D).any() or np.isposinf(D).any():
        bad = int(np.argwhere(np.isnan(D) | np.isposinf(D))[0][0])
        raise FloatingPointError(f"non-finite log density at edge {bad}")

    def core(st: VariationalState) -> float:
        return (
            _safe_weighted_sum(st.resp, D)
            + _mixture_terms(st, prior, params.alpha_conc)
            + _entropy_total(st)
        )

    trace = [core(state)]
    for _ in range(max_iter):
        resp = update_responsibilities(D, state)
        state = state_from_resp(
            resp, prior, params.alpha_conc, variant.noise, mixture_mode=state.mixture_mode
        )
        trace.append(core(state))
        if abs(trace[-1] - trace[-2]) <= tol * (1.0 + abs(trace[-1])):
            break
    if return_trace:
        return state, trace
    return state


# ---------------------------------------------------------------------------
# M-step: gradients, conjugate gradient, analytical updates
# ---------------------------------------------------------------------------


def m_step_gradients(
    params: ModelParams,
    fam: WeightFamily,
    net: Network,
    state: VariationalState,
    prior: PriorConfig,
    variant: ModelVariant = FULL,
    pre: Precompute | None = None,
) -> dict[str, np.ndarray]:
    """Gradient of Q with respect to every conjugate-gradient block.

    Aggregates are rebuilt from scratch (cost O(nKp + MKp)); the result
    matches the naive per-edge differentiation of Q exactly.
    """
    resp_struct = np.ascontiguousarray(state.struct_resp)
    if pre is None:
        pre = refresh_precompute(params, resp_struct, net)
    n, K, p = params.n_nodes, params.k_max, params.p

    cu = pre.p_send - pre.p_dot[None, :] * pre.softmax_u
    send_ratio = pre.p_send / pre.one_minus_ratio
    cv = pre.p_recv - pre.softmax_v * (pre.h_tilde[None, :] - send_ratio)

    inv1 = np.linalg.inv(params.sigma_sr1)
    grads: dict[str, np.ndarray] = {}
    grads["S1"] = cu.sum(axis=1) - (inv1[0, 0] * params.S1 + inv1[0, 1] * params.R1)
    grads["R1"] = cv.sum(axis=1) - (inv1[1, 1] * params.R1 + inv1[0, 1] * params.S1)
    grads["Y"] = (
        pre.p_send.T @ params.U
        + pre.p_recv.T @ params.V
        - pre.p_dot[:, None] * pre.su_norm
        - (pre.h_tilde[:, None] * pre.sv_norm - (send_ratio * pre.softmax_v).T @ params.V)
        - params.Y
    )
    inv_uv = np.linalg.inv(params.sigma_uv)
    dU = cu @ params.Y
    dV = cv @ params.Y

    if variant.weighted:
        w_lin = np.ascontiguousarray(fam.transform(net.weights), dtype=np.float64)
        dS2, dR2, dUw, dVw, dlam, dbeta, dphi = _kernels.weight_gradients(
            net.senders,
            net.receivers,
            w_lin,
            resp_struct,
            params.S2,
            params.R2,
            params.beta,
            params.phi,
            params.U,
            params.V,
            params.lam,
            n,
        )
        inv2 = np.linalg.inv(params.sigma_sr2)
        grads["S2"] = dS2 - (inv2[0, 0] * params.S2 + inv2[0, 1] * params.R2)
        grads["R2"] = dR2 - (inv2[1, 1] * params.R2 + inv2[0, 1] * params.S2)
        dU = dU + dUw
        dV = dV + dVw
        grads["lam"] = dlam - params.lam / params.lambda_lam
        nu, sc = prior.nu0_t, prior.eta0_t
        grads["phi"] = dphi - (nu + 1.0) * params.phi / (nu * sc * sc + params.phi**2)
        grads["beta"] = dbeta
    grads["U"] = dU - (inv_uv[0, 0] * params.U + inv_uv[0, 1] * params.V)
    grads["V"] = dV - (inv_uv[1, 1] * params.V + inv_uv[0, 1] * params.U)
    return grads


_CG_BLOCKS_WEIGHTED = ("S1", "R1", "S2", "R2", "U", "V", "Y", "lam", "beta", "log_phi")
_CG_BLOCKS_UNWEIGHTED = ("S1", "R1", "U", "V", "Y")


def _cg_layout(params: ModelParams, variant: ModelVariant):
    n, K, p = params.n_nodes, params.k_max, params.p
    shapes = {
        "S1": (n,), "R1": (n,), "S2": (n,), "R2": (n,),
        "U": (n, p), "V": (n, p), "Y": (K, p), "lam": (K, p),
        "beta": (K,), "log_phi": (K,),
    }
    names = _CG_BLOCKS_WEIGHTED if variant.weighted else _CG_BLOCKS_UNWEIGHTED
    layout = []
    offset = 0
    for name in names:
        size = int(np.prod(shapes[name]))
        layout.append((name, shapes[name], offset, offset + size))
        offset += size
    return layout, offset


def _pack(params: ModelParams, layout, size) -> np.ndarray:
    x = np.empty(size)
    for name, shape, lo, hi in layout:
        arr = np.log(params.phi) if name == "log_phi" else getattr(params, name)
        x[lo:hi] = np.asarray(arr).ravel()
    return x


def _unpack(x: np.ndarray, template: ModelParams, layout) -> ModelParams:
    params = template.copy()
    for name, shape, lo, hi in layout:
        block = x[lo:hi].reshape(shape)
        if name == "log_phi":
            params.phi = np.exp(block)
        else:
            setattr(params, name, block.copy())
    return params


def _pack_grads(grads: dict, params: ModelParams, layout, size) -> np.ndarray:
    g = np.empty(size)
    for name, shape, lo, hi in layout:
        if name == "log_phi":
            g[lo:hi] = (grads["phi"] * params.phi).ravel()  # chain rule for phi = exp(x)
        else:
            g[lo:hi] = grads[name].ravel()
    return g


@dataclass(frozen=True)
class LineSearchConfig:
    c: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 30


def _armijo(x, f, g, d, value_fn, cfg: LineSearchConfig):
    norm = float(np.linalg.norm(d))
    if norm == 0.0 or not math.isfinite(norm):
        return x, f, False
    dn = d / norm
    slope = float(g @ dn)
    if slope <= 0.0:
        return x, f, False
    t = 1.0
    for _ in range(cfg.max_backtracks + 1):
        x_new = x + t * dn
        f_new = value_fn(x_new)
        if math.isfinite(f_new) and f_new >= f + cfg.c * t * slope:
            return x_new, f_new, True
        t *= cfg.shrink
    return x, f, False


def _cg_ascend(x0, value_fn, grad_fn, n_iters, cfg: LineSearchConfig):
    """Polak-Ribiere+ ascent with restart on non-ascent directions."""
    x = x0
    f = value_fn(x)
    g = grad_fn(x)
    d = g.copy()
    for _ in range(n_iters):
        if float(g @ d) <= 0.0:
            d = g.copy()
        x_new, f_new, ok = _armijo(x, f, g, d, value_fn, cfg)
        if not ok:
            if np.shares_memory(d, g) or np.array_equal(d, g):
                break
            d = g.copy()
            x_new, f_new, ok = _armijo(x, f, g, d, value_fn, cfg)
            if not ok:
                break
        g_new = grad_fn(x_new)
        denom = float(g @ g)
        beta_pr = 0.0 if denom == 0.0 else max(0.0, float(g_new @ (g_new - g)) / denom)
        d = g_new + beta_pr * d
        x, f, g = x_new, f_new, g_new
    return x, f


def _sigma_hat(x1: np.ndarray, x2: np.ndarray, psi0: np.ndarray, nu0: float) -> np.ndarray:
    """Mode of the inverse-Wishart full conditional for a 2x2 block."""
    s11 = float(np.sum(x1 * x1))
    s12 = float(np.sum(x1 * x2))
    s22 = float(np.sum(x2 * x2))
    psi_n = psi0 + np.array([[s11, s12], [s12, s22]])
    count = x1.size
    return psi_n / (nu0 + count + 3.0)


def _newton_alpha(alpha: float, K: int, sum_e_log_t: float, prior: PriorConfig) -> float:
    """1-D Newton ascent of the concentration objective; never decreases it."""
    T = sum_e_log_t
    pa, pb = prior.a_alpha, prior.b_alpha

    def g(a):
        return gammaln(K * a) - K * gammaln(a) + (a - 1.0) * T + pa * math.log(a) - pb * a

    def g1(a):
        return K * digamma(K * a) - K * digamma(a) + T + pa / a - pb

    def g2(a):
        return K * K * polygamma(1, K * a) - K * polygamma(1, a) - pa / (a * a)

    a = float(alpha)
    f = g(a)
    for _ in range(100):
        d1, d2 = g1(a), g2(a)
        if not math.isfinite(d1) or abs(d1) < 1e-12:
            break
        step = -d1 / d2 if (math.isfinite(d2) and d2 < 0) else math.copysign(0.1 * a, d1)
        a_new = a + step
        backtracks = 0
        while (a_new <= 0 or not math.isfinite(g(a_new)) or g(a_new) < f) and backtracks < 50:
            step *= 0.5
            a_new = a + step
            backtracks += 1
        if backtracks >= 50 or abs(step) < 1e-14 * max(1.0, a):
            break
        a = a_new
        f = g(a)
    return a


def m_step(
    params: ModelParams,
    fam: WeightFamily,
    law: NoiseLaw | None,
    net: Network,
    state: VariationalState,
    prior: PriorConfig,
    cg_iters: int = 5,
    ls: LineSearchConfig | None = None,
    variant: ModelVariant = FULL,
) -> ModelParams:
    """One generalized M-step: analytical block, then conjugate gradient.

    The analytical block sets each covariance block and the interaction
    shrinkage to the exact maximizer of its Q slice and moves the
    concentration by safeguarded Newton; the CG block then increases Q
    over the remaining parameters. Q never decreases.
    """
    ls = ls or LineSearchConfig()
    params = params.copy()
    n, K, p = params.n_nodes, params.k_max, params.p

    params.sigma_sr1 = _sigma_hat(params.S1, params.R1, prior.psi0_sr1, prior.nu0_sr1)
    params.sigma_uv = _sigma_hat(params.U, params.V, prior.psi0_uv, prior.nu0_uv)
    if variant.weighted:
        params.sigma_sr2 = _sigma_hat(params.S2, params.R2, prior.psi0_sr2, prior.nu0_sr2)
        params.lambda_lam = (prior.b0 + 0.5 * float(np.sum(params.lam * params.lam))) / (
            prior.a0 + 0.5 * K * p + 1.0
        )
    if state.mixture_mode == "vb":
        params.alpha_conc = _newton_alpha(
            params.alpha_conc, K, float(np.sum(state.e_log_t)), prior
        )

    # Constant (within the CG block) pieces of Q: noise data term + mixture.
    const = _mixture_terms(state, prior, params.alpha_conc)
    if variant.noise:
        noise_col = data_log_density_matrix(params, fam, law, net)[:, 0]
        with np.errstate(invalid="ignore"):
            const += float(
                np.sum(np.where(state.resp[:, 0] > 0, state.resp[:, 0] * noise_col, 0.0))
            )
    resp_struct = np.ascontiguousarray(state.struct_resp)
    w = net.weights
    if variant.weighted:
        w_lin = np.ascontiguousarray(fam.transform(w), dtype=np.float64)
        log_jac = np.ascontiguousarray(-np.log(w)) if fam.kind == "lognormal" else np.zeros_like(w)
    else:
        w_lin = np.zeros_like(w)
        log_jac = np.zeros_like(w)

    layout, size = _cg_layout(params, variant)

    def value_fn(x: np.ndarray) -> float:
        trial = _unpack(x, params, layout)
        pre = build_node_state(trial)
        data = _kernels.weighted_score_sum(
            net.senders,
            net.receivers,
            w_lin,
            log_jac,
            resp_struct,
            pre.logit_u,
            pre.logit_v,
            pre.log_f_u,
            pre.log_denom,
            trial.S2,
            trial.R2,
            trial.beta,
            trial.phi,
            trial.U,
            trial.V,
            trial.lam,
            variant.weighted,
        )
        return data + log_param_prior(trial, prior, weighted=variant.weighted) + const

    def grad_fn(x: np.ndarray) -> np.ndarray:
        trial = _unpack(x, params, layout)
        grads = m_step_gradients(trial, fam, net, state, prior, variant)
        return _pack_grads(grads, trial, layout, size)

    x0 = _pack(params, layout, size)
    x_best, _ = _cg_ascend(x0, value_fn, grad_fn, cg_iters, ls)
    return _unpack(x_best, params, layout)


# ---------------------------------------------------------------------------
# Convergence, pruning, scoring, orchestration
# ---------------------------------------------------------------------------


def hard_assignments(state: VariationalState) -> np.ndarray:
    """Row-wise argmax with ties to the lowest index; 0 = noise if present."""
    return np.argmax(state.resp, axis=1).astype(np.int64)


def check_convergence(prev_assign, new_assign, iteration: int, max_iter: int) -> str:
    """'converged' when assignments repeat, else 'continue' or 'max_iter_reached'."""
    if prev_assign is not None:
        prev = np.asarray(prev_assign)
        new = np.asarray(new_assign)
        if prev.shape != new.shape:
            raise ValueError("assignment vectors must have equal length")
        if np.array_equal(prev, new):
            return "converged"
    if iteration >= max_iter:
        return "max_iter_reached"
    return "continue"


def prune_and_count(state: VariationalState, mass_threshold: float = 1.0):
    """Occupied-cluster count and dense relabeling map.

    A structural cluster is occupied when its expected edge mass is at
    least ``mass_threshold``. Returns (k_effective, new_label) where
    new_label[k] is the 1-based dense label of old structural cluster k
    (0-based), or 0 if pruned.
    """
    p_dot = state.struct_resp.sum(axis=0)
    occupied = p_dot >= mass_threshold
    new_label = np.zeros(p_dot.shape[0], dtype=np.int64)
    new_label[occupied] = np.arange(1, int(occupied.sum()) + 1)
    return int(occupied.sum()), new_label


def map_mixture_from_counts(
    assignments: np.ndarray, k_max: int, alpha: float, prior: PriorConfig
):
    """Posterior-mode mixture weights from hard assignment counts.

    t0 is the Beta mode; the structural weights are the Dirichlet mode
    restricted to clusters that received at least one edge (so adding an
    empty cluster changes nothing). Unoccupied clusters get weight 0.
    """
    assignments = np.asarray(assignments, dtype=np.int64)
    M = assignments.shape[0]
    counts = np.bincount(assignments, minlength=k_max + 1)
    m0 = counts[0]
    denom = prior.c0 + prior.d0 + M - 2.0
    t0 = (prior.c0 + m0 - 1.0) / denom if denom > 0 else 0.5
    t0 = min(max(t0, 1e-12), 1.0 - 1e-12)
    struct = counts[1:].astype(np.float64)
    raw = np.where(struct > 0, np.maximum(alpha + struct - 1.0, 1e-12), 0.0)
    total = raw.sum()
    t = raw / total if total > 0 else raw
    return t0, t


def icl(
    params: ModelParams,
    fam: WeightFamily,
    law: NoiseLaw,
    net: Network,
    assignments: np.ndarray,
    mix: tuple[float, np.ndarray],
    k_effective: int,
    p: int,
) -> float:
    """BIC-penalized complete-data log likelihood at hard assignments.

    The free-parameter count d covers the propensities (4n), the latent
    features (2np), per occupied cluster its feature row, interaction
    diagonal, intercept and dispersion (2p + 2 each), the occupied mixture
    weights, and t0.
    """
    ll = complete_log_likelihood(params, fam, law, net, assignments, mix)
    n = net.n_nodes
    d = 4 * n + 2 * n * p + k_effective * (2 * p + 2) + k_effective + 1
    return float(ll - 0.5 * d * math.log(net.n_edges))


@dataclass
class FitOptions:
    """Procedural knobs of the fit; model shape lives in PriorConfig."""

    seeds: int = 15
    seed_base: int = 0
    e_tol: float = 1e-6
    e_max_iter: int = 100
    max_outer: int = 500
    prefit_max_outer: int | None = None
    cg_iters: int = 5
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    mass_threshold: float = 1.0
    alpha_update: str = "newton"  # or "dirichlet_map"
    threads: int = 1

    @property
    def mixture_mode(self) -> str:
        return "map" if self.alpha_update == "dirichlet_map" else "vb"


@dataclass
class FitResult:
    """Outcome of one fit (or the best of several restarts)."""

    assignments: np.ndarray
    k_effective: int
    params: ModelParams
    elbo_trace: list[float]
    icl: float
    n_outer_iterations: int
    converged: bool
    seed: int
    mixture: tuple[float, np.ndarray]
    occupied_clusters: np.ndarray

    @property
    def noise_edge_count(self) -> int:
        return int(np.sum(self.assignments == 0))


def run_gem(
    params: ModelParams,
    state: VariationalState,
    fam: WeightFamily,
    law: NoiseLaw | None,
    net: Network,
    prior: PriorConfig,
    options: FitOptions,
    variant: ModelVariant,
    max_outer: int | None = None,
):
    """Alternate E- and M-steps until assignments stop changing."""
    max_outer = max_outer or options.max_outer
    trace: list[float] = []
    prev = None
    converged = False
    iteration = 0
    while iteration < max_outer:
        iteration += 1
        state = e_step(
            params, fam, law, net, state, prior,
            tol=options.e_tol, max_iter=options.e_max_iter, variant=variant,
        )
        trace.append(elbo(params, fam, law, net, state, prior, variant))
        assign = hard_assignments(state)
        decision = check_convergence(prev, assign, iteration, max_outer)
        if decision == "converged":
            converged = True
            break
        if decision == "max_iter_reached":
            break
        prev = assign
        params = m_step(
            params, fam, law, net, state, prior,
            cg_iters=options.cg_iters, ls=options.line_search, variant=variant,
        )
    return params, state, trace, iteration, converged


def fit_single_seed(
    net: Network,
    fam: WeightFamily,
    law: NoiseLaw,
    prior: PriorConfig,
    options: FitOptions,
    seed: int,
) -> FitResult:
    """Initialize, run the full GEM loop, prune, and score one restart."""
    from .init import initialize

    params, state = initialize(net, fam, prior, options, seed)
    params, state, trace, n_iter, converged = run_gem(
        params, state, fam, law, net, prior, options, variant=FULL
    )
    k_eff, new_label = prune_and_count(state, options.mass_threshold)
    # Restrict the argmax to the noise column plus occupied clusters.
    scores = state.resp.copy()
    scores[:, 1:][:, new_label == 0] = -1.0
    assign_full = np.argmax(scores, axis=1).astype(np.int64)
    mix = map_mixture_from_counts(assign_full, prior.k_max, params.alpha_conc, prior)
    score = icl(params, fam, law, net, assign_full, mix, k_eff, prior.p)
    relabeled = np.where(assign_full == 0, 0, new_label[np.maximum(assign_full - 1, 0)])
    return FitResult(
        assignments=relabeled.astype(np.int64),
        k_effective=k_eff,
        params=params,
        elbo_trace=trace,
        icl=score,
        n_outer_iterations=n_iter,
        converged=converged,
        seed=seed,
        mixture=mix,
        occupied_clusters=np.nonzero(new_label > 0)[0] + 1,
    )


def _fit_one(args) -> FitResult:
    return fit_single_seed(*args)


def fit(
    net: Network,
    fam: WeightFamily,
    law: NoiseLaw,
    prior: PriorConfig,
    options: FitOptions | None = None,
) -> FitResult:
    """Multi-restart fit; returns the restart with the highest ICL.

    Restarts use seeds seed_base .. seed_base + seeds - 1 and are
    independent, so results are reproducible for a fixed seed base at any
    worker count. If every restart fails, a FitError aggregates the
    per-seed causes.
    """
    options = options or FitOptions()
    prior.validate()
    seeds = [options.seed_base + s for s in range(options.seeds)]
    results: list[FitResult] = []
    failures: list[tuple[int, Exception]] = []
    if options.threads > 1 and len(seeds) > 1:
        from concurrent.futures import ProcessPoolExecutor

        jobs = [(net, fam, law, prior, options, s) for s in seeds]
        with ProcessPoolExecutor(max_workers=options.threads) as pool:
            futures = list(pool.map(_fit_one, jobs))
        for s, res in zip(seeds, futures):
            results.append(res)
    else:
        for s in seeds:
            try:
                results.append(fit_single_seed(net, fam, law, prior, options, s))
            except Exception as exc:  # noqa: BLE001 - per-seed diagnostics
                failures.append((s, exc))
    if not results:
        lines = "; ".join(f"seed {s}: {type(e).__name__}: {e}" for s, e in failures)
        raise FitError(f"all {len(seeds)} restarts failed: {lines}")
    best = max(results, key=lambda r: (r.icl, -r.seed))
    return best
