"""Command-line front end.

Subcommands:

* ``test``      sum test of one hypothesis set (centered quantile + verdict)
* ``tdp``       discovery bounds for many sets at once
* ``largest``   largest prefix of an ordering with TDP bound >= gamma
* ``simulate``  Monte Carlo study grid from a JSON config
* ``verify``    cross-check the engine against the exhaustive reference

User-facing column indices are 1-based everywhere (set specs, order files,
trace output); the conversion to internal 0-based indices happens here and
only here.  Every run writes a manifest (command, configuration, versions,
input checksums, wall time) next to ``--out``, or to stderr when results go
to stdout, so any result file can be traced back to its exact inputs.

Exit codes: 0 success, 1 internal error or verification mismatch, 2 usage or
input error.
"""

import argparse
import csv
import hashlib
import io
import json
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__
from .combiners import (
    COMBINER_KINDS,
    Combiner,
    TruncationRule,
    apply_combiner,
    threshold_from_rank,
    truncate,
)
from .generators import TransformationScheme, row_permutation_matrix, sign_flip_matrix
from .inference import discoveries, largest_subset
from .oracle import RejectionTable
from .reduction import reduce_columns
from .shortcut import SumTestProblem, TraceLog
from .statmatrix import (
    StatisticMatrix,
    TestConfig,
    center,
    read_data_csv,
    read_statistic_csv,
    reject,
    subset_quantile,
    validate_subset,
)

_SCHEMES = {"sign-flip": "sign_flip", "permute": "row_permutation"}


class InputError(ValueError):
    """User-correctable problem: bad file, bad flag combination, bad spec."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sumtdp",
        description=(
            "Simultaneous lower confidence bounds on true discoveries via "
            "sum-based permutation tests"
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, with_input=True):
        p.add_argument("--alpha", type=float, default=None,
                       help="significance level (default 0.05)")
        p.add_argument("--seed", type=int, default=None,
                       help="generator seed (used when --data is given)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent queries (default 1)")
        p.add_argument("--out", default=None,
                       help="write results here (default stdout); the manifest "
                            "goes to <out>.manifest.json")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       help="output format (default json; simulate defaults to csv)")
        p.add_argument("--trace", default=None, metavar="PATH",
                       help="write per-size bound/path audit rows as CSV "
                            "(tdp subcommand)")
        if with_input:
            src = p.add_mutually_exclusive_group(required=True)
            src.add_argument("--stats", default=None,
                             help="statistic matrix CSV (header; first data row observed)")
            src.add_argument("--data", default=None,
                             help="raw data CSV (observations x variables, header)")
            p.add_argument("--b", type=int, default=200,
                           help="transformations to generate from --data, "
                                "identity included (default 200)")
            p.add_argument("--scheme", choices=sorted(_SCHEMES), default="sign-flip",
                           help="transformation scheme for --data (default sign-flip)")
            p.add_argument("--one-sided", action="store_true",
                           help="signed t statistics instead of absolute values")
            p.add_argument("--combiner", default=None, metavar="KIND",
                           help="p-value transform: "
                                + "|".join(k for k in COMBINER_KINDS if k != "generalized_mean")
                                + "|vw:<r> (entries must be p-values; with --data, "
                                "statistics are converted to p-values first)")
            p.add_argument("--truncate", type=float, default=None, metavar="T",
                           help="floor entries below T to the ground value")
            p.add_argument("--truncate-rank", type=int, default=None, metavar="K",
                           help="use the K-th greatest matrix entry as the threshold")
            p.add_argument("--ground", type=float, default=0.0,
                           help="ground value for truncation (default 0)")

    p_test = sub.add_parser("test", help="sum test of one hypothesis set")
    add_common(p_test)
    p_test.add_argument("--set", default=None, metavar="SPEC",
                        help="hypothesis set: JSON list or comma-separated 1-based "
                             "indices/names (default: all columns)")

    p_tdp = sub.add_parser("tdp", help="discovery bounds for many sets")
    add_common(p_tdp)
    p_tdp.add_argument("--sets", required=True, metavar="SPEC",
                       help="JSON list of lists (inline or file path), or a file "
                            "with one comma-separated set per line; 1-based "
                            "indices or header names")
    p_tdp.add_argument("--max-iter", type=int, default=50, metavar="H",
                       help="branch-and-bound scans per overlap level (default 50)")
    p_tdp.add_argument("--total-budget", type=int, default=None, metavar="N",
                       help="overall scan budget per query, roots included")
    p_tdp.add_argument("--reduce", choices=("on", "off"), default=None,
                       help="drop/merge inert columns outside each query set "
                            "(default on when truncation is active)")

    p_largest = sub.add_parser("largest",
                               help="largest prefix with TDP bound >= gamma")
    add_common(p_largest)
    p_largest.add_argument("--gamma", type=float, required=True,
                           help="TDP target in [0, 1]")
    p_largest.add_argument("--order", default=None, metavar="FILE",
                           help="permutation of all columns (JSON list or lines "
                                "of 1-based indices/names; default natural order)")
    p_largest.add_argument("--max-iter", type=int, default=50, metavar="H")
    p_largest.add_argument("--total-budget", type=int, default=None, metavar="N")

    p_sim = sub.add_parser("simulate", help="Monte Carlo study grid")
    add_common(p_sim, with_input=False)
    p_sim.add_argument("--config", required=True,
                       help="JSON study configuration (see README for the schema)")
    p_sim.add_argument("--full-scale", action="store_true",
                       help="full-scale defaults (1000 variables, 1000 replications) "
                            "instead of desk scale (100/200)")

    p_verify = sub.add_parser("verify",
                              help="cross-check against the exhaustive reference")
    add_common(p_verify)

    return parser


# ---------------------------------------------------------------------------
# input plumbing


def _alpha(args) -> float:
    return 0.05 if args.alpha is None else args.alpha


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def _load_matrix(args, inputs: dict) -> StatisticMatrix:
    """Load or generate the statistic matrix, then combine and truncate."""
    if args.stats is not None:
        inputs[args.stats] = _sha256(args.stats)
        stats = read_statistic_csv(args.stats)
        n_obs = None
    else:
        inputs[args.data] = _sha256(args.data)
        names, data = read_data_csv(args.data)
        scheme = TransformationScheme(
            kind=_SCHEMES[args.scheme], n_transforms=args.b, seed=args.seed
        )
        build = sign_flip_matrix if scheme.kind == "sign_flip" else row_permutation_matrix
        from .generators import one_sample_t

        def statistic(arr):
            return one_sample_t(arr, two_sided=not args.one_sided)

        stats = build(data, scheme, statistic=statistic)
        stats = StatisticMatrix(stats.values, names=names)
        n_obs = data.shape[0]

    if args.combiner is not None:
        comb = Combiner.parse(args.combiner)
        values = stats.values
        if args.data is not None:
            # Generated t statistics become two-sided (or one-sided)
            # p-values before combining.
            from scipy import stats as scipy_stats

            if args.one_sided:
                values = scipy_stats.t.sf(values, n_obs - 1)
            else:
                values = 2.0 * scipy_stats.t.sf(values, n_obs - 1)
            stats = StatisticMatrix(values, names=stats.names)
        stats = apply_combiner(stats, comb)

    if args.truncate is not None and args.truncate_rank is not None:
        raise InputError("--truncate and --truncate-rank are mutually exclusive")
    threshold = args.truncate
    if args.truncate_rank is not None:
        threshold = threshold_from_rank(stats, args.truncate_rank)
    if threshold is not None:
        stats = truncate(stats, TruncationRule(threshold=threshold, ground=args.ground))
    return stats


def _parse_tokens(tokens, stats: StatisticMatrix):
    """1-based indices or header names -> sorted validated 0-based tuple."""
    names = list(stats.column_names())
    out = []
    for tok in tokens:
        if isinstance(tok, str):
            tok = tok.strip()
            if not tok:
                continue
            if tok in names:
                out.append(names.index(tok))
                continue
            try:
                tok = int(tok)
            except ValueError:
                raise InputError(f"unknown column {tok!r}") from None
        if isinstance(tok, float):
            if not tok.is_integer():
                raise InputError(f"column index {tok} is not an integer")
            tok = int(tok)
        if not 1 <= tok <= stats.n_hyps:
            raise InputError(
                f"column index {tok} out of range 1..{stats.n_hyps} (indices are 1-based)"
            )
        out.append(tok - 1)
    return validate_subset(out, stats.n_hyps)


def _read_spec_text(spec: str) -> str:
    """Inline JSON passes through; anything else is a file path."""
    if spec.lstrip().startswith("["):
        return spec
    with open(spec) as fh:
        return fh.read()


def _parse_set_lists(spec: str, inputs: dict):
    """--sets: JSON list of lists, or one comma-separated set per line."""
    if not spec.lstrip().startswith("[") :
        inputs[spec] = _sha256(spec)
    text = _read_spec_text(spec)
    try:
        loaded = json.loads(text)
    except json.JSONDecodeError:
        loaded = [
            [tok for tok in line.replace(",", " ").split()]
            for line in text.splitlines()
            if line.strip()
        ]
    if not isinstance(loaded, list) or not loaded:
        raise InputError("--sets must supply a nonempty list of sets")
    if not all(isinstance(entry, list) for entry in loaded):
        loaded = [loaded]  # a single flat list means one set
    return loaded


def _parse_order(spec, stats: StatisticMatrix, inputs: dict):
    if spec is None:
        return None
    inputs[spec] = _sha256(spec)
    with open(spec) as fh:
        text = fh.read()
    try:
        tokens = json.loads(text)
    except json.JSONDecodeError:
        tokens = [tok for tok in text.replace(",", " ").split()]
    order = []
    names = list(stats.column_names())
    for tok in tokens:
        if isinstance(tok, str) and tok in names:
            order.append(names.index(tok))
        else:
            try:
                idx = int(tok)
            except (TypeError, ValueError):
                raise InputError(f"bad order token {tok!r}") from None
            if not 1 <= idx <= stats.n_hyps:
                raise InputError(f"order index {idx} out of range 1..{stats.n_hyps}")
            order.append(idx - 1)
    if sorted(order) != list(range(stats.n_hyps)):
        raise InputError("--order must list every column exactly once")
    return tuple(order)


# ---------------------------------------------------------------------------
# output plumbing


def _one_based(indices):
    return ";".join(str(i + 1) for i in indices) if indices else ""


def _write_trace(rows, path):
    columns = (
        "set_id", "kind", "index", "overlap", "size", "value", "verdict",
        "window_lo", "window_hi", "forced", "excluded", "witness", "pivot",
    )
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            out = {key: "" for key in columns}
            out["set_id"] = row.get("set_id", "")
            out["kind"] = row.get("kind", "")
            for key in ("index", "overlap", "size", "value"):
                if row.get(key) is not None:
                    out[key] = row[key]
            if row.get("verdict") is not None:
                out["verdict"] = row["verdict"].value
            window = row.get("window")
            if window is not None:
                out["window_lo"], out["window_hi"] = window
            for key in ("forced", "excluded", "witness"):
                if row.get(key):
                    out[key] = _one_based(row[key])
            if row.get("pivot") is not None:
                out["pivot"] = row["pivot"] + 1
            writer.writerow(out)


def _emit(args, payload, csv_rows, csv_columns, default_format="json"):
    fmt = args.format or default_format
    if fmt == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=csv_columns)
        writer.writeheader()
        for row in csv_rows:
            writer.writerow({key: row.get(key, "") for key in csv_columns})
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_manifest(args, inputs: dict, started: float, extra=None):
    config = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in ("subcommand",) and not key.startswith("_")
    }
    manifest = {
        "command": ["sumtdp"] + list(getattr(args, "_argv", sys.argv[1:])),
        "subcommand": args.subcommand,
        "config": config,
        "seed": getattr(args, "seed", None),
        "versions": {
            "sumtdp": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "inputs": inputs,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    if extra:
        manifest.update(extra)
    text = json.dumps(manifest, indent=2, default=str) + "\n"
    if args.out:
        with open(args.out + ".manifest.json", "w") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_test(args) -> int:
    started = time.perf_counter()
    inputs = {}
    stats = _load_matrix(args, inputs)
    cfg = TestConfig(_alpha(args), stats.n_transforms)
    if args.set is None:
        subset = tuple(range(stats.n_hyps))
    else:
        tokens = json.loads(args.set) if args.set.lstrip().startswith("[") \
            else args.set.replace(",", " ").split()
        subset = _parse_tokens(tokens, stats)
    centered = center(stats)
    quantile = subset_quantile(centered, subset, cfg)
    payload = {
        "size": len(subset),
        "quantile": quantile,
        "critical_rank": cfg.crit_rank,
        "reject": reject(centered, subset, cfg),
    }
    _emit(args, payload, [payload], list(payload))
    _emit_manifest(args, inputs, started)
    return 0


def _run_tdp_entry(stats, cfg, subset, args, reduction_ground, want_trace):
    trace = TraceLog() if want_trace else None
    extra = {}
    if reduction_ground is not None:
        red = reduce_columns(stats, subset, ground=reduction_ground)
        prob = SumTestProblem.from_matrix(red.stats, cfg)
        res = discoveries(
            prob, red.subset,
            total_budget=args.total_budget, step_budget=args.max_iter,
            trace=trace,
        )
        extra = {
            "m_reduced": red.stats.n_hyps,
            "removed": len(red.removed),
            "collapsed": len(red.collapsed),
        }
    else:
        prob = SumTestProblem.from_matrix(stats, cfg)
        res = discoveries(
            prob, subset,
            total_budget=args.total_budget, step_budget=args.max_iter,
            trace=trace,
        )
    entry = {
        "set_id": None,  # filled by the caller
        "size": len(subset),
        "d": res.discoveries,
        "tdp": res.tdp,
        "converged": res.converged,
        "iterations": res.evals,
    }
    entry.update(extra)
    return entry, (trace.rows if trace else [])


def _cmd_tdp(args) -> int:
    started = time.perf_counter()
    inputs = {}
    stats = _load_matrix(args, inputs)
    cfg = TestConfig(_alpha(args), stats.n_transforms)
    truncation_active = args.truncate is not None or args.truncate_rank is not None
    if args.reduce == "on" and not truncation_active:
        sys.stderr.write(
            "sumtdp: --reduce on has no effect without truncation; skipping reduction\n"
        )
    reduce_on = truncation_active and args.reduce != "off"
    reduction_ground = args.ground if reduce_on else None

    raw_sets = _parse_set_lists(args.sets, inputs)
    jobs = []
    for idx, tokens in enumerate(raw_sets, start=1):
        try:
            jobs.append((idx, _parse_tokens(tokens, stats), None))
        except (InputError, ValueError) as exc:
            jobs.append((idx, None, str(exc)))

    want_trace = args.trace is not None

    def run(job):
        idx, subset, error = job
        if error is not None:
            return {"set_id": idx, "error": error}, []
        try:
            entry, trace_rows = _run_tdp_entry(
                stats, cfg, subset, args, reduction_ground, want_trace
            )
        except ValueError as exc:
            return {"set_id": idx, "error": str(exc)}, []
        entry["set_id"] = idx
        for row in trace_rows:
            row["set_id"] = idx
        return entry, trace_rows

    if args.threads > 1 and len(jobs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    entries = [entry for entry, _ in outcomes]
    if want_trace:
        all_rows = [row for _, rows in outcomes for row in rows]
        _write_trace(all_rows, args.trace)

    columns = ["set_id", "size", "d", "tdp", "converged", "iterations",
               "m_reduced", "removed", "collapsed", "error"]
    _emit(args, entries, entries, columns)
    _emit_manifest(args, inputs, started)
    return 0


def _cmd_largest(args) -> int:
    started = time.perf_counter()
    inputs = {}
    stats = _load_matrix(args, inputs)
    cfg = TestConfig(_alpha(args), stats.n_transforms)
    order = _parse_order(args.order, stats, inputs)
    prob = SumTestProblem.from_matrix(stats, cfg)
    res = largest_subset(
        prob, args.gamma, order=order,
        total_budget=args.total_budget, step_budget=args.max_iter,
    )
    names = stats.column_names()
    payload = {
        "size": res.size,
        "tdp": res.result.tdp if res.result is not None else 0.0,
        "members": [names[i] for i in res.subset],
    }
    csv_row = {**payload, "members": ";".join(payload["members"])}
    _emit(args, payload, [csv_row], list(payload))
    _emit_manifest(args, inputs, started)
    return 0


def _cmd_verify(args) -> int:
    started = time.perf_counter()
    inputs = {}
    stats = _load_matrix(args, inputs)
    cfg = TestConfig(_alpha(args), stats.n_transforms)
    centered = center(stats)
    table = RejectionTable(centered, cfg)
    prob = SumTestProblem.from_matrix(stats, cfg)
    m = stats.n_hyps
    subsets = []
    for mask in range(1, 1 << m):
        subsets.append(tuple(i for i in range(m) if mask >> i & 1))

    def check(subset):
        expected = len(subset) - table.max_nonrejected_overlap(subset)
        got = discoveries(prob, subset).discoveries
        return subset, expected, got

    if args.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            checks = list(pool.map(check, subsets))
    else:
        checks = [check(subset) for subset in subsets]

    mismatches = [
        {"set": _one_based(subset), "expected": expected, "got": got}
        for subset, expected, got in checks
        if expected != got
    ]
    payload = {
        "subsets_checked": len(subsets),
        "mismatches": len(mismatches),
        "details": mismatches[:20],
    }
    rows = [{"subsets_checked": len(subsets), "mismatches": len(mismatches)}]
    _emit(args, payload, rows, ["subsets_checked", "mismatches"])
    _emit_manifest(args, inputs, started)
    return 0 if not mismatches else 1


_GRID_ONLY_KEYS = {"cells", "combiners"}


def _build_cells(config: dict, full_scale: bool, args):
    from .simharness import SimulationConfig

    defaults = {"n_hyps": 1000, "n_reps": 1000} if full_scale else {}
    top = {key: value for key, value in config.items() if key not in _GRID_ONLY_KEYS}
    combiners = config.get("combiners")
    cell_dicts = config.get("cells", [{}])
    if not isinstance(cell_dicts, list) or not all(isinstance(c, dict) for c in cell_dicts):
        raise InputError("config key 'cells' must be a list of objects")
    cells = []
    for cell in cell_dicts:
        merged = {**defaults, **top, **cell}
        if args.alpha is not None and "alpha" not in merged:
            merged["alpha"] = args.alpha
        if args.seed is not None:
            merged["seed"] = args.seed
        tokens = combiners or [merged.get("combiner", "fisher")]
        for token in tokens:
            try:
                cells.append(SimulationConfig.from_dict({**merged, "combiner": token}))
            except (TypeError, ValueError) as exc:
                raise InputError(f"bad simulation config: {exc}") from None
    return cells


def _cmd_simulate(args) -> int:
    from .simharness import GRID_COLUMNS, run_grid

    started = time.perf_counter()
    inputs = {}
    if args.config.endswith(".toml"):
        raise InputError(
            "TOML configs are not supported on this Python version; "
            "please provide the same keys as JSON"
        )
    inputs[args.config] = _sha256(args.config)
    with open(args.config) as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON ({exc})") from None
    if not isinstance(config, dict):
        raise InputError(f"{args.config}: top level must be an object")
    cells = _build_cells(config, args.full_scale, args)
    rows = run_grid(cells, threads=args.threads)
    payload = [
        {key: (None if value == "" else value) for key, value in row.items()}
        for row in rows
    ]
    _emit(args, payload, rows, list(GRID_COLUMNS), default_format="csv")
    _emit_manifest(args, inputs, started, extra={"cells": len(cells)})
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = list(argv) if argv is not None else sys.argv[1:]
    handlers = {
        "test": _cmd_test,
        "tdp": _cmd_tdp,
        "largest": _cmd_largest,
        "simulate": _cmd_simulate,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.subcommand](args)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"sumtdp: error: {exc}\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(f"sumtdp: error: {exc}\n")
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        sys.stderr.write(f"sumtdp: internal error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
