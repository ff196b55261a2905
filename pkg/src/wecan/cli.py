"""Command-line entry points: fit, simulate, eval.

Exit codes: 0 on success, 1 on numerical failure, 2 on usage errors.
Existing output files are never overwritten unless --force is given.
File formats are documented in docs/output_formats.md.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimation import FitError, FitOptions, FitResult, fit
from .evaluate import cluster_summary, nmi, noise_report
from .family import NoiseLaw, default_noise_rate, get_family
from .graph import format_weight, load_edge_list, write_edge_list
from .model import PriorConfig, params_to_dict
from .simgen import SimConfig, generate


class UsageError(Exception):
    pass


def _check_outputs(paths, force: bool) -> None:
    for path in paths:
        if Path(path).exists() and not force:
            raise UsageError(f"output file exists (use --force to overwrite): {path}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {path}")
    with open(p, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    return doc


def _apply_config(obj, doc: dict, keys) -> None:
    for key in keys:
        if key in doc:
            value = doc[key]
            if isinstance(getattr(obj, key), np.ndarray):
                value = np.asarray(value, dtype=float)
            setattr(obj, key, value)


_PRIOR_KEYS = (
    "psi0_sr1", "psi0_sr2", "psi0_uv", "nu0_sr1", "nu0_sr2", "nu0_uv",
    "a0", "b0", "a_alpha", "b_alpha", "c0", "d0", "nu0_t", "eta0_t", "lambda_a",
)
_OPTION_KEYS = (
    "e_tol", "e_max_iter", "max_outer", "prefit_max_outer", "cg_iters",
    "mass_threshold", "alpha_update",
)


def cmd_fit(args) -> int:
    in_path = Path(args.edgelist)
    if not in_path.exists():
        raise UsageError(f"edge list not found: {in_path}")
    out = args.out
    out_json = f"{out}.json"
    out_csv = f"{out}_assignments.csv"
    _check_outputs([out_json, out_csv], args.force)

    config = _load_config(args.config)
    net = load_edge_list(in_path, format=args.format, has_header=args.has_header)
    fam = get_family(args.family)
    prior = PriorConfig(p=args.p, k_max=args.kmax)
    _apply_config(prior, config, _PRIOR_KEYS)
    options = FitOptions(seeds=args.seeds, seed_base=args.seed_base, threads=args.threads)
    if args.max_iter is not None:
        options.max_outer = args.max_iter
    _apply_config(options, config, _OPTION_KEYS)
    rate = args.noise_rate if args.noise_rate is not None else prior.lambda_a
    if rate is None:
        rate = default_noise_rate(net.weights)
    law = NoiseLaw(rate=float(rate))

    try:
        result = fit(net, fam, law, prior, options)
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return 1

    doc = fit_result_to_dict(result)
    doc["run"] = {
        "input": str(in_path),
        "family": args.family,
        "noise_rate": law.rate,
        "k_max": prior.k_max,
        "p": prior.p,
        "seeds": options.seeds,
        "seed_base": options.seed_base,
        "version": __version__,
    }
    with open(out_json, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["edge_index", "sender", "receiver", "weight", "cluster"])
        for m in range(net.n_edges):
            writer.writerow(
                [
                    m,
                    net.node_labels[net.senders[m]],
                    net.node_labels[net.receivers[m]],
                    format_weight(float(net.weights[m])),
                    int(result.assignments[m]),
                ]
            )
    print(
        f"fit: K_effective={result.k_effective} icl={result.icl:.6f} "
        f"noise_edges={result.noise_edge_count} seed={result.seed} -> {out_json}"
    )
    return 0


def fit_result_to_dict(result: FitResult) -> dict:
    t0, t = result.mixture
    return {
        "assignments": result.assignments.tolist(),
        "k_effective": result.k_effective,
        "icl": result.icl,
        "elbo_trace": [float(v) for v in result.elbo_trace],
        "n_outer_iterations": result.n_outer_iterations,
        "converged": bool(result.converged),
        "seed": int(result.seed),
        "mixture": {"t0": float(t0), "t": np.asarray(t).tolist()},
        "occupied_clusters": np.asarray(result.occupied_clusters).tolist(),
        "params": params_to_dict(result.params),
    }


def cmd_simulate(args) -> int:
    if args.preset == "paper":
        config = SimConfig(n_nodes=400, n_edges=7065, k_true=4, p=2)
    elif args.preset == "desk":
        config = SimConfig(n_nodes=150, n_edges=1200, k_true=4, p=2)
    else:
        config = SimConfig()
    if args.nodes is not None:
        config.n_nodes = args.nodes
    if args.edges is not None:
        config.n_edges = args.edges
    if args.clusters is not None:
        config.k_true = args.clusters
    if args.noise is not None:
        config.noise_prop = args.noise
    if args.p is not None:
        config.p = args.p
    config.seed = args.seed
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    out = args.out
    paths = {
        "edges": f"{out}_edges.csv",
        "truth": f"{out}_truth.csv",
        "params": f"{out}_params.json",
        "manifest": f"{out}_manifest.json",
    }
    _check_outputs(paths.values(), args.force)

    net, truth, true_params = generate(config)
    write_edge_list(net, paths["edges"], header=True)
    with open(paths["truth"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["edge_index", "cluster"])
        for m, z in enumerate(truth):
            writer.writerow([m, int(z)])
    with open(paths["params"], "w", encoding="utf-8") as fh:
        json.dump(
            {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in true_params.items()},
            fh,
            indent=2,
        )
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump({"config": vars(config), "version": __version__}, fh, indent=2)
    print(f"simulated n={config.n_nodes} M={config.n_edges} -> {paths['edges']}")
    return 0


def _read_truth(path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"truth file not found: {path}")
    labels = []
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    start = 1 if rows and not rows[0][-1].lstrip("-").isdigit() else 0
    for row in rows[start:]:
        if not row:
            continue
        labels.append(int(row[-1]))
    return np.asarray(labels, dtype=np.int64)


def cmd_eval(args) -> int:
    fit_path = Path(args.fit)
    if not fit_path.exists():
        raise UsageError(f"fit file not found: {fit_path}")
    with open(fit_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    assignments = np.asarray(doc["assignments"], dtype=np.int64)
    truth = _read_truth(args.truth)
    if truth.shape[0] != assignments.shape[0]:
        raise UsageError(
            f"length mismatch: fit has {assignments.shape[0]} edges, truth has {truth.shape[0]}"
        )
    score = nmi(assignments, truth)
    print(f"NMI {score:.6f}")
    print(f"K_effective {doc.get('k_effective')}")
    if args.out:
        summary_path = f"{args.out}_cluster_summary.csv"
        report_path = f"{args.out}_noise_report.csv"
        _check_outputs([summary_path, report_path], args.force)
        if args.edgelist is None:
            raise UsageError("--edgelist is required to write summaries")
        net = load_edge_list(args.edgelist, format=args.format, has_header=args.has_header)
        if net.n_edges != assignments.shape[0]:
            raise UsageError("edge list does not match the fit's edge count")
        with open(summary_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["cluster", "n_edges", "mean_weight", "sd_weight", "top_senders", "top_receivers"]
            )
            for rec in cluster_summary(assignments, net):
                writer.writerow(
                    [
                        rec.label,
                        rec.n_edges,
                        f"{rec.mean_weight:.6g}",
                        f"{rec.sd_weight:.6g}",
                        "|".join(rec.top_senders),
                        "|".join(rec.top_receivers),
                    ]
                )
        rep = noise_report(assignments, net, cutoff=args.cutoff)
        with open(report_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "cutoff", "noise_low", "noise_high", "structural_low",
                    "structural_high", "n_noise", "mean_noise_weight",
                ]
            )
            writer.writerow(
                [
                    rep.cutoff, rep.noise_low, rep.noise_high, rep.structural_low,
                    rep.structural_high, rep.n_noise, f"{rep.mean_noise_weight:.6g}",
                ]
            )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wecan",
        description="Weighted directed edge clustering with noise filtering.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit the edge-cluster model to an edge list")
    p_fit.add_argument("edgelist", help="CSV/TSV file with sender,receiver,weight rows")
    p_fit.add_argument("--format", choices=["csv", "tsv"], default="csv")
    p_fit.add_argument("--has-header", action="store_true")
    p_fit.add_argument("--family", choices=["normal", "lognormal"], default="normal")
    p_fit.add_argument("--kmax", type=int, default=10, help="overfitted cluster budget")
    p_fit.add_argument("--p", type=int, default=4, help="latent dimension")
    p_fit.add_argument("--seeds", type=int, default=15, help="number of restarts")
    p_fit.add_argument("--seed-base", type=int, default=0)
    p_fit.add_argument("--noise-rate", type=float, default=None)
    p_fit.add_argument("--max-iter", type=int, default=None, help="outer iteration cap")
    p_fit.add_argument("--threads", type=int, default=1, help="restart worker count")
    p_fit.add_argument("--config", default=None, help="JSON file of prior/fit options")
    p_fit.add_argument("--out", default="fit", help="output path prefix")
    p_fit.add_argument("--force", action="store_true")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="generate a synthetic network with ground truth")
    p_sim.add_argument("--preset", choices=["paper", "desk"], default=None)
    p_sim.add_argument("--nodes", type=int, default=None)
    p_sim.add_argument("--edges", type=int, default=None)
    p_sim.add_argument("--clusters", type=int, default=None)
    p_sim.add_argument("--noise", type=float, default=None)
    p_sim.add_argument("--p", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default="sim", help="output path prefix")
    p_sim.add_argument("--force", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_eval = sub.add_parser("eval", help="score a fit against a ground-truth partition")
    p_eval.add_argument("--fit", required=True, help="fit JSON written by 'wecan fit'")
    p_eval.add_argument("--truth", required=True, help="truth CSV (edge_index, cluster)")
    p_eval.add_argument("--edgelist", default=None, help="edge list for summary output")
    p_eval.add_argument("--format", choices=["csv", "tsv"], default="csv")
    p_eval.add_argument("--has-header", action="store_true")
    p_eval.add_argument("--cutoff", type=float, default=1.0)
    p_eval.add_argument("--out", default=None, help="summary output prefix")
    p_eval.add_argument("--force", action="store_true")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
