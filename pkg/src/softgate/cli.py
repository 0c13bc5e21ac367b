"""Command-line front end.

One subcommand per analysis: synth, calibrate, gate, sweep, exclusion,
density, cluster, exemplars, serve. Every flag can be overridden by an
environment variable named SOFTGATE_<FLAG> (upper-cased, dashes to
underscores). Exit codes: 0 success, 1 usage error, 2 data/validation
error, 3 internal error.
"""

import argparse
import json
import math
import os
import sys
from contextlib import contextmanager

import numpy as np

from softgate import __version__
from softgate.analysis import (
    DEFAULT_BOUNDARIES,
    DEFAULT_GRID,
    emit_report,
    exclusion_table,
    nearest_exemplars,
    shell_density,
    threshold_sweep,
)
from softgate.calibration import (
    build_artifact,
    compute_centroids,
    compute_thresholds,
    load_calibration,
    pairwise_centroid_stats,
    save_calibration,
)
from softgate.clustering import assign_all, fidelity, kmeans
from softgate.errors import SoftgateError
from softgate.gate import gate_batch, write_decisions_jsonl
from softgate.ingest import (
    SyntheticSpec,
    ValidationPolicy,
    parse_prediction_csv,
    split_by_correctness,
    synthesize_dataset,
    write_prediction_csv,
)

ENV_PREFIX = "SOFTGATE_"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract says 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _env(name, fallback):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), fallback)


def _parse_grid(text):
    grid = [float(v) for v in text.split(",") if v.strip()]
    return grid


@contextmanager
def _out_stream(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            yield f


def _say(args, message):
    if not args.quiet:
        print(message, file=sys.stderr)


def build_parser():
    parser = _Parser(prog="softgate", description=__doc__)
    parser.add_argument("--version", action="version", version=f"softgate {__version__}")
    parser.add_argument("--quiet", action="store_true",
                        default=_env("quiet", "") not in ("", "0", "false"))
    parser.add_argument("--format", choices=("csv", "json"),
                        default=_env("format", "csv"))
    parser.add_argument("--threads", type=int, default=int(_env("threads", "0")),
                        help="internal parallelism hint; results are identical for any value")
    parser.add_argument("--seed", type=int, default=int(_env("seed", "0")))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic prediction CSV")
    p.add_argument("--k", type=int, default=int(_env("k", "10")))
    p.add_argument("--per-class", type=int, default=int(_env("per_class", "100")))
    p.add_argument("--concentration", type=float,
                   default=float(_env("concentration", "10")))
    p.add_argument("--noise", type=float, default=float(_env("noise", "0.05")))
    p.add_argument("--out", default=_env("out", "-"))

    p = sub.add_parser("calibrate", help="build centroids and thresholds from a training CSV")
    p.add_argument("--train", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--fallback", choices=("max-correct", "infinite"),
                   default=_env("fallback", "max-correct"))
    p.add_argument("--group-by", choices=("predicted", "true"),
                   default=_env("group_by", "predicted"))
    p.add_argument("--out", required=True, help="calibration artifact JSON path")

    p = sub.add_parser("gate", help="gate a prediction CSV against an artifact")
    p.add_argument("--input", required=True)
    p.add_argument("--artifact", required=True)
    p.add_argument("--mode", choices=("per-class", "global"),
                   default=_env("mode", "per-class"))
    p.add_argument("--t", type=float, default=None, help="global-mode threshold")
    p.add_argument("--out", default=_env("out", "-"), help="JSON-lines decisions")

    for name, help_text in (
        ("sweep", "retention / accuracy / ratio vs threshold"),
        ("exclusion", "below vs at-or-above percentages per dataset"),
        ("density", "hypersphere shell densities"),
        ("exemplars", "nearest OOD exemplar per centroid class"),
    ):
        p = sub.add_parser(name, help=help_text)
        if name == "exclusion":
            p.add_argument("--input", action="append", required=True,
                           metavar="NAME=PATH",
                           help="repeatable; named dataset CSVs")
        else:
            p.add_argument("--input", required=True)
        p.add_argument("--artifact", required=True)
        if name in ("sweep", "exclusion"):
            p.add_argument("--grid", default=_env("grid", ""),
                           help="comma-separated descending thresholds")
        if name == "density":
            p.add_argument("--boundaries", default=_env("boundaries", ""),
                           help="comma-separated descending shell boundaries")
            p.add_argument("--inner-radius", type=float, default=None)
        p.add_argument("--out", default=_env("out", "-"))

    p = sub.add_parser("cluster", help="k-means from the artifact centroids, with fidelity")
    p.add_argument("--input", required=True)
    p.add_argument("--artifact", required=True)
    p.add_argument("--max-iter", type=int, default=int(_env("max_iter", "100")))
    p.add_argument("--tol", type=float, default=float(_env("tol", "1e-6")))
    p.add_argument("--out", default=_env("out", "-"))

    p = sub.add_parser("serve", help="run the gating sidecar HTTP service")
    p.add_argument("--artifact", required=True)
    p.add_argument("--host", default=_env("host", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(_env("port", "8901")))

    return parser


def _load_set(path, k):
    return parse_prediction_csv(path, k=k, policy=ValidationPolicy())


def cmd_synth(args):
    spec = SyntheticSpec(k=args.k, per_class=args.per_class,
                         concentration=args.concentration, noise_rate=args.noise)
    pset = synthesize_dataset(spec, seed=args.seed)
    with _out_stream(args.out) as f:
        write_prediction_csv(pset, f)
    _say(args, f"wrote {pset.row_count} rows (k={args.k}, seed={args.seed})")
    return EXIT_OK


def cmd_calibrate(args):
    train = _load_set(args.train, args.k)
    correct, incorrect = split_by_correctness(train)
    centroids = compute_centroids(correct)
    thresholds = compute_thresholds(
        incorrect, centroids, fallback=args.fallback, correct=correct,
        group_by=args.group_by,
    )
    artifact = build_artifact(centroids, thresholds, provenance=args.train)
    save_calibration(artifact, args.out)
    if not args.quiet:
        print(f"calibrated k={args.k} from {train.row_count} rows "
              f"({correct.row_count} correct, {incorrect.row_count} incorrect)",
              file=sys.stderr)
        for c in range(args.k):
            t = thresholds.value(c)
            label = "inf (fallback)" if math.isinf(t) else f"{t:.6f}"
            if thresholds.source(c) != "min-incorrect" and math.isfinite(t):
                label += " (fallback)"
            print(f"  class {c}: support={centroids.support[c]} threshold={label} "
                  f"[{thresholds.source(c)}]", file=sys.stderr)
        stats = pairwise_centroid_stats(centroids)
        print(f"  pairwise: d_min={stats.d_min:.4f} d_max={stats.d_max:.4f} "
              f"mean={stats.mean:.4f} std={stats.std:.4f} pairs={stats.pair_count}",
              file=sys.stderr)
    return EXIT_OK


def cmd_gate(args):
    artifact = load_calibration(args.artifact)
    pset = _load_set(args.input, artifact.k)
    decisions, summary = gate_batch(
        pset, artifact, mode=args.mode, global_threshold=args.t
    )
    with _out_stream(args.out) as f:
        write_decisions_jsonl(decisions, f)
    _say(args, f"accepted={summary.accepted} unknown={summary.unknown} "
               f"accept_rate={summary.accept_rate:.4f}")
    return EXIT_OK


def cmd_sweep(args):
    artifact = load_calibration(args.artifact)
    pset = _load_set(args.input, artifact.k)
    grid = _parse_grid(args.grid) if args.grid else list(DEFAULT_GRID)
    rows = threshold_sweep(pset, artifact.centroids, grid=grid)
    with _out_stream(args.out) as f:
        emit_report(rows, args.format, f)
    _say(args, f"swept {len(rows)} thresholds over {pset.row_count} rows")
    return EXIT_OK


def cmd_exclusion(args):
    artifact = load_calibration(args.artifact)
    named = []
    for item in args.input:
        if "=" not in item:
            raise _UsageError(f"--input expects NAME=PATH, got {item!r}")
        name, path = item.split("=", 1)
        named.append((name, _load_set(path, artifact.k)))
    grid = _parse_grid(args.grid) if args.grid else list(DEFAULT_GRID)
    table = exclusion_table(named, artifact.centroids, grid=grid)
    with _out_stream(args.out) as f:
        emit_report(table, args.format, f)
    _say(args, f"exclusion table for {len(named)} dataset(s)")
    return EXIT_OK


def cmd_density(args):
    artifact = load_calibration(args.artifact)
    pset = _load_set(args.input, artifact.k)
    boundaries = (
        _parse_grid(args.boundaries) if args.boundaries else list(DEFAULT_BOUNDARIES)
    )
    report = shell_density(pset, artifact.centroids, boundaries=boundaries,
                           inner_radius=args.inner_radius)
    with _out_stream(args.out) as f:
        emit_report(report, args.format, f)
    _say(args, f"{len(report.shells)} shells + inner sphere over {pset.row_count} rows")
    return EXIT_OK


def cmd_cluster(args):
    artifact = load_calibration(args.artifact)
    pset = _load_set(args.input, artifact.k)
    result = kmeans(pset, artifact.centroids, max_iter=args.max_iter, tol=args.tol)
    final_fid = fidelity(result, pset)
    init_clusters, _ = assign_all(pset.probs, artifact.centroids)
    correct = pset.true_labels == pset.predicted_labels
    init_matching = int(np.sum(correct & (init_clusters == pset.true_labels)))
    init_fid = init_matching / correct.sum() if correct.sum() else None
    doc = {
        "iterations": result.iterations,
        "converged": result.converged,
        "inertia": result.inertia,
        "fidelity_final": final_fid.fidelity,
        "fidelity_initial": init_fid,
        "total_correct": final_fid.total_correct,
        "matching_final": final_fid.matching,
        "matching_initial": init_matching,
    }
    with _out_stream(args.out) as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    _say(args, f"converged={result.converged} in {result.iterations} iteration(s); "
               f"fidelity final={final_fid.fidelity} initial={init_fid}")
    return EXIT_OK


def cmd_exemplars(args):
    artifact = load_calibration(args.artifact)
    # OOD probe rows keep their source-domain class in true_label, which
    # may exceed k
    pset = parse_prediction_csv(
        args.input, k=artifact.k, policy=ValidationPolicy(), foreign_true_labels=True
    )
    report = nearest_exemplars(pset, artifact.centroids)
    with _out_stream(args.out) as f:
        emit_report(report, args.format, f)
    _say(args, f"nearest exemplars for {len(report.per_class)} classes")
    return EXIT_OK


def cmd_serve(args):
    from softgate.server import serve

    artifact = load_calibration(args.artifact)
    serve(artifact, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "synth": cmd_synth,
    "calibrate": cmd_calibrate,
    "gate": cmd_gate,
    "sweep": cmd_sweep,
    "exclusion": cmd_exclusion,
    "density": cmd_density,
    "cluster": cmd_cluster,
    "exemplars": cmd_exemplars,
    "serve": cmd_serve,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SoftgateError, FileNotFoundError, PermissionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
