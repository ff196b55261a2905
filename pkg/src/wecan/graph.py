"""Directed weighted edge lists: loading, validation, indexing, summaries.

A network is an immutable edge list over densely indexed nodes. Node
identifiers in input files may be arbitrary strings; they are re-indexed
in first-appearance order and the original labels are kept so that output
files can be written back in terms of the user's identifiers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Edge",
    "Network",
    "NetworkSummary",
    "EdgeListError",
    "load_edge_list",
    "write_edge_list",
    "network_from_arrays",
    "summarize",
]


class EdgeListError(ValueError):
    """Raised for malformed edge-list files or invalid edge data."""


@dataclass(frozen=True)
class Edge:
    """One directed weighted edge. Node indices are 0-based and dense."""

    sender: int
    receiver: int
    weight: float


@dataclass(frozen=True)
class Network:
    """Immutable directed multigraph held as parallel edge arrays.

    Attributes
    ----------
    n_nodes : int
        Number of nodes; node indices run 0..n_nodes-1.
    senders, receivers : int64 arrays of shape (M,)
        Edge endpoints. Self-loops are rejected at construction.
    weights : float64 array of shape (M,)
        Edge weights; finite. Duplicate (sender, receiver) pairs are
        allowed: the model treats edges as i.i.d. draws, not node pairs.
    node_labels : list of str
        Original node identifiers, index-aligned.
    """

    n_nodes: int
    senders: np.ndarray
    receivers: np.ndarray
    weights: np.ndarray
    node_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        senders = np.ascontiguousarray(self.senders, dtype=np.int64)
        receivers = np.ascontiguousarray(self.receivers, dtype=np.int64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        for name, arr in (("senders", senders), ("receivers", receivers), ("weights", weights)):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)
        if self.n_nodes < 1:
            raise EdgeListError("network must have at least one node")
        if senders.shape != receivers.shape or senders.shape != weights.shape:
            raise EdgeListError("edge arrays must have identical length")
        if self.n_edges < 1:
            raise EdgeListError("network must have at least one edge")
        if senders.min() < 0 or senders.max() >= self.n_nodes:
            raise EdgeListError("sender index out of range")
        if receivers.min() < 0 or receivers.max() >= self.n_nodes:
            raise EdgeListError("receiver index out of range")
        loops = np.nonzero(senders == receivers)[0]
        if loops.size:
            raise EdgeListError(f"self-loop at edge index {loops[0]}")
        if not np.all(np.isfinite(weights)):
            bad = int(np.nonzero(~np.isfinite(weights))[0][0])
            raise EdgeListError(f"non-finite weight at edge index {bad}")
        if not self.node_labels:
            object.__setattr__(self, "node_labels", [str(i) for i in range(self.n_nodes)])
        elif len(self.node_labels) != self.n_nodes:
            raise EdgeListError("node_labels length must equal n_nodes")

    @property
    def n_edges(self) -> int:
        return int(self.senders.shape[0])

    def edge(self, m: int) -> Edge:
        return Edge(int(self.senders[m]), int(self.receivers[m]), float(self.weights[m]))

    def edges(self):
        """Iterate over Edge records."""
        for m in range(self.n_edges):
            yield self.edge(m)


@dataclass(frozen=True)
class NetworkSummary:
    n_nodes: int
    n_edges: int
    mean_weight: float
    sd_weight: float
    density: float
    n_duplicate_pairs: int


def network_from_arrays(n_nodes, senders, receivers, weights, node_labels=None) -> Network:
    return Network(
        n_nodes=int(n_nodes),
        senders=np.asarray(senders, dtype=np.int64),
        receivers=np.asarray(receivers, dtype=np.int64),
        weights=np.asarray(weights, dtype=np.float64),
        node_labels=list(node_labels) if node_labels is not None else [],
    )


def _parse_weight(token: str, row_no: int) -> float:
    try:
        w = float(token)
    except ValueError:
        raise EdgeListError(f"row {row_no}: cannot parse weight {token!r}") from None
    if not math.isfinite(w):
        raise EdgeListError(f"row {row_no}: non-finite weight {token!r}")
    return w


def load_edge_list(path, format: str = "csv", has_header: bool = False) -> Network:
    """Read a (sender, receiver, weight) edge list from a CSV or TSV file.

    Nodes are re-indexed densely 0..n-1 in first-appearance order; the
    original identifiers are retained as ``node_labels``.

    Raises
    ------
    EdgeListError
        On malformed rows, self-loops, or non-finite weights; the message
        reports the 1-based data row number.
    FileNotFoundError
        If ``path`` does not exist.
    """
    if format not in ("csv", "tsv"):
        raise ValueError(f"unknown edge-list format {format!r}")
    delim = "," if format == "csv" else "\t"
    index: dict[str, int] = {}
    labels: list[str] = []
    senders: list[int] = []
    receivers: list[int] = []
    weights: list[float] = []

    def node_id(token: str) -> int:
        idx = index.get(token)
        if idx is None:
            idx = len(labels)
            index[token] = idx
            labels.append(token)
        return idx

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delim)
        if has_header:
            next(reader, None)
        row_no = 0
        for raw in reader:
            row = [tok.strip() for tok in raw]
            if not row or all(tok == "" for tok in row):
                continue
            row_no += 1
            if len(row) != 3:
                raise EdgeListError(f"row {row_no}: expected 3 columns, got {len(row)}")
            s_tok, r_tok, w_tok = row
            if s_tok == r_tok:
                raise EdgeListError(f"row {row_no}: self-loop {s_tok!r} -> {r_tok!r}")
            senders.append(node_id(s_tok))
            receivers.append(node_id(r_tok))
            weights.append(_parse_weight(w_tok, row_no))
    if not senders:
        raise EdgeListError(f"{path}: no edges found")
    return network_from_arrays(len(labels), senders, receivers, weights, labels)


def write_edge_list(net: Network, path, format: str = "csv", header: bool = False) -> None:
    """Write the edge list back out; weights use 17 significant digits."""
    if format not in ("csv", "tsv"):
        raise ValueError(f"unknown edge-list format {format!r}")
    delim = "," if format == "csv" else "\t"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delim)
        if header:
            writer.writerow(["sender", "receiver", "weight"])
        for m in range(net.n_edges):
            writer.writerow(
                [
                    net.node_labels[net.senders[m]],
                    net.node_labels[net.receivers[m]],
                    format_weight(float(net.weights[m])),
                ]
            )


def format_weight(w: float) -> str:
    return f"{w:.17g}"


def summarize(net: Network) -> NetworkSummary:
    """Basic network statistics.

    Density counts each distinct ordered pair once regardless of edge
    multiplicity; duplicate (sender, receiver) occurrences are reported
    separately.
    """
    w = net.weights
    pairs = net.senders * np.int64(net.n_nodes) + net.receivers
    n_pairs = int(np.unique(pairs).size)
    denom = net.n_nodes * (net.n_nodes - 1)
    return NetworkSummary(
        n_nodes=net.n_nodes,
        n_edges=net.n_edges,
        mean_weight=float(w.mean()),
        sd_weight=float(w.std(ddof=1)) if net.n_edges > 1 else 0.0,
        density=(n_pairs / denom) if denom > 0 else 0.0,
        n_duplicate_pairs=net.n_edges - n_pairs,
    )
