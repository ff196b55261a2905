"""Weight laws for structural edges and the exponential noise law.

Structural edge weights follow an exponential-family density

    h(w, phi) * exp((eta * u(w) - A(eta)) / a(phi)) / Pr(w != 0 | eta)

where ``u`` is the identity for the normal family and ``log`` for the
log-normal family (which is the normal family applied to log-weights with
a parameter-free Jacobian folded into ``h``). Both shipped families are
continuous, so the zero-probability term is identically 1; the hooks are
kept for future discrete families.

Noise-edge weights follow an exponential density ``lambda_a * exp(-lambda_a w)``
on w > 0 with a user-defined rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightFamily",
    "NoiseLaw",
    "get_family",
    "structural_log_density",
    "noise_log_density",
    "family_derivatives",
    "default_noise_rate",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class WeightFamily:
    """Exponential-family weight law, normal-core on a transformed weight.

    ``kind`` is "normal" (support: all reals) or "lognormal" (support:
    w > 0, model applied to log w). All member functions accept scalars
    or numpy arrays.
    """

    kind: str

    @property
    def positive_support(self) -> bool:
        return self.kind == "lognormal"

    def check_support(self, w) -> None:
        w = np.asarray(w)
        if self.positive_support and np.any(w <= 0):
            raise ValueError(f"{self.kind} family requires strictly positive weights")

    def transform(self, w):
        """Weight as it enters the linear term: w itself, or log w."""
        if self.kind == "lognormal":
            return np.log(w)
        return w

    def log_h(self, w, phi):
        """log h(w, phi); for lognormal includes the -log w Jacobian."""
        y = self.transform(w)
        base = -np.log(phi) - 0.5 * _LOG_2PI - y * y / (2.0 * phi * phi)
        if self.kind == "lognormal":
            return base - y
        return base

    def A(self, eta):
        return eta * eta / 2.0

    def dA_deta(self, eta):
        return eta

    def a(self, phi):
        return phi * phi

    def da_dphi(self, phi):
        return 2.0 * phi

    def dlogh_dphi(self, w, phi):
        y = self.transform(w)
        return y * y / phi**3 - 1.0 / phi

    # Zero-probability hooks: identically 1 for both continuous families.
    def log_pr_nonzero(self, eta):
        return np.zeros_like(np.asarray(eta, dtype=float))

    def dlogpr_deta(self, eta):
        return np.zeros_like(np.asarray(eta, dtype=float))

    def dlogpr_dphi(self, eta, phi):
        return np.zeros_like(np.asarray(eta, dtype=float))


_FAMILIES = {"normal": WeightFamily("normal"), "lognormal": WeightFamily("lognormal")}


def get_family(kind: str) -> WeightFamily:
    try:
        return _FAMILIES[kind]
    except KeyError:
        raise ValueError(f"unknown weight family {kind!r}; choose from {sorted(_FAMILIES)}") from None


@dataclass(frozen=True)
class NoiseLaw:
    """Exponential law on noise-edge weights: density rate * exp(-rate * w), w > 0."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("noise rate must be positive and finite")

    def log_density(self, w):
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0):
            raise ValueError("noise law requires w > 0")
        return math.log(self.rate) - self.rate * w

    def log_density_or_neginf(self, w):
        """Vectorized log-density with log(0) = -inf for w <= 0.

        The mixture model needs noise scores for every edge even when the
        structural family admits non-positive weights; such edges simply
        cannot be noise.
        """
        w = np.asarray(w, dtype=float)
        out = np.full(w.shape, -np.inf)
        pos = w > 0
        out[pos] = math.log(self.rate) - self.rate * w[pos]
        return out if out.ndim else float(out)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.exponential(scale=1.0 / self.rate, size=size)


def structural_log_density(fam: WeightFamily, w, eta, phi):
    """Log density of a structural edge weight at canonical parameter eta."""
    fam.check_support(w)
    y = fam.transform(w)
    return fam.log_h(w, phi) + (eta * y - fam.A(eta)) / fam.a(phi) - fam.log_pr_nonzero(eta)


def noise_log_density(law: NoiseLaw, w):
    return law.log_density(w)


def family_derivatives(fam: WeightFamily, w, eta, phi):
    """(d/d eta, d/d phi) of ``structural_log_density`` at (w, eta, phi)."""
    fam.check_support(w)
    y = fam.transform(w)
    a = fam.a(phi)
    d_eta = (y - fam.dA_deta(eta)) / a - fam.dlogpr_deta(eta)
    d_phi = (
        fam.dlogh_dphi(w, phi)
        - (eta * y - fam.A(eta)) * fam.da_dphi(phi) / (a * a)
        - fam.dlogpr_dphi(eta, phi)
    )
    return d_eta, d_phi


def default_noise_rate(weights) -> float:
    """Data-driven default rate: 10 / mean(bottom decile of weights).

    The mean is floored at machine epsilon, so data whose smallest weights
    are non-positive yield an extremely large rate (noise effectively
    impossible); pass an explicit rate for such data.
    """
    w = np.sort(np.asarray(weights, dtype=float))
    k = max(1, w.size // 10)
    bottom_mean = float(w[:k].mean())
    return 10.0 / max(bottom_mean, float(np.finfo(float).eps))
