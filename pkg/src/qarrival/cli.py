"""Command-line interface: run scenarios, compare histograms, emit oracle
tables, and run the Dirac suite.

Errors exit nonzero with a machine-readable JSON object on stderr that
points at the offending config key where applicable.
"""

import argparse
import json
import os
import sys
import time

from . import __version__
from .config import (ConfigError, SCENARIOS, config_hash, load_config,
                     validate_scenario)
from .errors import QArrivalError
from .histogram import DetectionHistogram
from .metrics import ks_statistic_binned, tv_distance


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qarrival",
        description="detection-time laboratory: absorbing and Zeno detector "
                    "models, cross-section oracles, Bohmian trajectories, "
                    "Dirac asymptotics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--deterministic", action="store_true",
                       help="bit-identical artifacts (zeroed runtime columns)")

    p_cmp = sub.add_parser("compare", help="compare two histogram CSVs")
    p_cmp.add_argument("--histogram", required=True)
    p_cmp.add_argument("--against", required=True,
                       help="oracle or second histogram CSV")

    p_orc = sub.add_parser("oracle", help="emit an oracle table")
    p_orc.add_argument("--config", required=True)
    p_orc.add_argument("--out", default=None)

    p_dir = sub.add_parser("dirac", help="run the Dirac suite")
    p_dir.add_argument("--config", required=True)
    p_dir.add_argument("--out", default=None)
    p_dir.add_argument("--seed", type=int, default=None)

    sub.add_parser("list-scenarios", help="list known scenario kinds")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        _fail({"error": "config", "key": exc.key, "message": str(exc)})
        return 2
    except QArrivalError as exc:
        _fail({"error": type(exc).__name__, "message": str(exc)})
        return 1


def _fail(payload):
    json.dump(payload, sys.stderr)
    sys.stderr.write("\n")


def _dispatch(args):
    if args.command == "list-scenarios":
        for name, desc in SCENARIOS.items():
            print(f"{name}: {desc}")
        return 0
    if args.command == "compare":
        return _compare(args)
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if args.command == "oracle":
        cfg.setdefault("scenario", "oracle-table")
    if args.command == "dirac":
        cfg.setdefault("scenario", "dirac-suite")
    kind = validate_scenario(cfg)
    out_dir = args.out or cfg.get("output_dir") or "qarrival-out"
    deterministic = bool(getattr(args, "deterministic", False))
    threads = int(getattr(args, "threads", 1))

    from .scenarios import run_scenario
    t0 = time.perf_counter()
    result = run_scenario(kind, cfg, out_dir, deterministic=deterministic,
                          threads=threads)
    wall = time.perf_counter() - t0
    manifest = {
        "scenario": kind,
        "config_hash": config_hash(cfg),
        "code_version": __version__,
        "wall_time_seconds": 0.0 if deterministic else wall,
        "outputs": [os.path.relpath(p, out_dir)
                    for p in result.get("artifacts", [])],
        "warnings": result.get("warnings", []),
        "summary": {k: v for k, v in result.items()
                    if k not in ("artifacts", "warnings")},
    }
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    print(path)
    return 0


def _hist_table(path):
    rows = DetectionHistogram.read_csv_weights(path)
    table = {}
    for r in rows:
        key = (r["u_bin_id"], r["rho_lo"], r["rho_hi"], r["tau_lo"], r["tau_hi"])
        table[key] = table.get(key, 0.0) + r["weight"]
    return table


def _check_binning(a, b):
    import numpy as np
    def tau_grid(table):
        edges = sorted({k[3] for k in table} | {k[4] for k in table})
        diffs = np.diff(edges)
        return np.array(edges), diffs[diffs > 1e-12].min()
    ea, wa = tau_grid(a)
    eb, wb = tau_grid(b)
    if abs(wa - wb) > 1e-9 * max(wa, wb):
        raise QArrivalError(
            f"binning mismatch: tau widths {wa} vs {wb}")
    # offsets must agree modulo the shared width
    ra = (ea[0] / wa) % 1.0
    rb = (eb[0] / wb) % 1.0
    if min(abs(ra - rb), 1 - abs(ra - rb)) > 1e-6:
        raise QArrivalError("binning mismatch: tau grids are offset")


def _compare(args):
    import numpy as np
    a = _hist_table(args.histogram)
    b = _hist_table(args.against)
    _check_binning(a, b)
    # align on the union of (u, tau) cells; rho is marginalized out since
    # oracles concentrate at rho = 1
    def marg(table):
        out = {}
        for (u, rlo, rhi, tlo, thi), w in table.items():
            out[(u, tlo, thi)] = out.get((u, tlo, thi), 0.0) + w
        return out
    ma, mb = marg(a), marg(b)
    keys = sorted(set(ma) | set(mb))
    va = np.array([ma.get(k, 0.0) for k in keys])
    vb = np.array([mb.get(k, 0.0) for k in keys])
    tv = tv_distance(va, vb)
    # KS on the tau marginal
    taus = sorted({(k[1], k[2]) for k in keys})
    u_ids = {k[0] for k in keys}
    ta = np.array([sum(ma.get((u, lo, hi), 0.0) for u in u_ids)
                   for lo, hi in taus])
    tb = np.array([sum(mb.get((u, lo, hi), 0.0) for u in u_ids)
                   for lo, hi in taus])
    ks = ks_statistic_binned(ta, tb)
    # chi-square against the second histogram as the expectation
    from .metrics import chi_square_pvalue
    try:
        scale = 10000.0
        chi_p = chi_square_pvalue(va / max(va.sum(), 1e-300) * scale,
                                  expected_probs=vb)
    except QArrivalError:
        chi_p = float("nan")
    print(json.dumps({"tv": tv, "ks_tau": ks, "chi2_p": chi_p}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
