"""Model-based clustering of weighted directed edges with noise filtering.

Edges of a directed weighted multigraph are grouped into latent clusters;
an overfitted sparse mixture selects the number of clusters automatically
and a uniform-pair exponential-weight component absorbs noise edges.
Fitting uses variational-Bayes generalized EM with multi-restart selection
by a penalized complete-data likelihood.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .estimation import FitOptions, FitResult, fit, fit_single_seed
from .evaluate import cluster_summary, nmi, noise_report
from .family import NoiseLaw, default_noise_rate, get_family
from .graph import Network, load_edge_list, summarize, write_edge_list
from .model import ModelParams, PriorConfig
from .simgen import SimConfig, generate, sample_vmf

__all__ = [
    "KERNEL_BACKEND",
    "FitOptions",
    "FitResult",
    "fit",
    "fit_single_seed",
    "cluster_summary",
    "nmi",
    "noise_report",
    "NoiseLaw",
    "default_noise_rate",
    "get_family",
    "Network",
    "load_edge_list",
    "summarize",
    "write_edge_list",
    "ModelParams",
    "PriorConfig",
    "SimConfig",
    "generate",
    "sample_vmf",
    "__version__",
]
