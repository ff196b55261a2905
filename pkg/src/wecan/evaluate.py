"""Partition scoring and cluster/noise reporting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Network

__all__ = ["nmi", "noise_report", "cluster_summary", "NoiseReport", "ClusterRecord"]


def nmi(a, b) -> float:
    """Normalized mutual information between two partitions, in [0, 1].

    Mutual information is normalized by the arithmetic mean of the two
    label entropies. Two one-cluster partitions agree trivially (1.0); a
    one-cluster partition against anything else carries no information
    (0.0). Labels may be arbitrary hashable integers; the noise label
    participates like any other cluster.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("partitions must be 1-D vectors of equal length")
    if a.size < 1:
        raise ValueError("partitions must be non-empty")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    na = int(ia.max()) + 1
    nb = int(ib.max()) + 1
    counts = np.bincount(ia * nb + ib, minlength=na * nb).reshape(na, nb)
    m = float(a.size)
    pij = counts / m
    pi = pij.sum(axis=1)
    pj = pij.sum(axis=0)
    ha = float(-np.sum(pi[pi > 0] * np.log(pi[pi > 0])))
    hb = float(-np.sum(pj[pj > 0] * np.log(pj[pj > 0])))
    if ha == 0.0 and hb == 0.0:
        return 1.0
    nz = pij > 0
    info = float(np.sum(pij[nz] * (np.log(pij[nz]) - np.log(np.outer(pi, pj)[nz]))))
    return info / (0.5 * (ha + hb))


@dataclass(frozen=True)
class NoiseReport:
    """Cross-tabulation of model noise labels against a weight cutoff."""

    cutoff: float
    noise_low: int
    noise_high: int
    structural_low: int
    structural_high: int
    n_noise: int
    mean_noise_weight: float


def noise_report(assignments, net: Network, cutoff: float = 1.0) -> NoiseReport:
    """Compare model-identified noise edges with the weight <= cutoff rule."""
    z = np.asarray(assignments)
    if z.shape[0] != net.n_edges:
        raise ValueError("assignment length must equal the edge count")
    is_noise = z == 0
    low = net.weights <= cutoff
    n_noise = int(is_noise.sum())
    return NoiseReport(
        cutoff=cutoff,
        noise_low=int(np.sum(is_noise & low)),
        noise_high=int(np.sum(is_noise & ~low)),
        structural_low=int(np.sum(~is_noise & low)),
        structural_high=int(np.sum(~is_noise & ~low)),
        n_noise=n_noise,
        mean_noise_weight=float(net.weights[is_noise].mean()) if n_noise else float("nan"),
    )


@dataclass(frozen=True)
class ClusterRecord:
    label: int
    n_edges: int
    mean_weight: float
    sd_weight: float
    top_senders: list[str]
    top_receivers: list[str]


def cluster_summary(assignments, net: Network, top: int = 3) -> list[ClusterRecord]:
    """Per-cluster edge counts, weight statistics, and most active nodes.

    One record per label present in the assignments (noise first when
    present); records' edge counts sum to the number of edges.
    """
    z = np.asarray(assignments)
    if z.shape[0] != net.n_edges:
        raise ValueError("assignment length must equal the edge count")
    records = []
    for label in np.unique(z):
        mask = z == label
        w = net.weights[mask]
        send_counts = np.bincount(net.senders[mask], minlength=net.n_nodes)
        recv_counts = np.bincount(net.receivers[mask], minlength=net.n_nodes)
        top_s = np.argsort(-send_counts, kind="stable")[:top]
        top_r = np.argsort(-recv_counts, kind="stable")[:top]
        records.append(
            ClusterRecord(
                label=int(label),
                n_edges=int(mask.sum()),
                mean_weight=float(w.mean()),
                sd_weight=float(w.std(ddof=1)) if w.size > 1 else 0.0,
                top_senders=[net.node_labels[i] for i in top_s if send_counts[i] > 0],
                top_receivers=[net.node_labels[i] for i in top_r if recv_counts[i] > 0],
            )
        )
    return records
