"""Command-line entry point: ``ssa-sim {verify,simulate,trace,energy,sweep}``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
configuration error.  The default config path can be set with the
``SSA_SIM_CONFIG`` environment variable.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .cost_model import REFERENCE_TABLE_UJ, compare_architectures
from .exceptions import SsaError
from .fileio import load_config, read_matrix, write_matrix
from .functional import SsaConfig, decode_output, ssa_run, ssa_run_independent
from .lif import QkvWeights
from .oracle import linear_ssa_expectation
from .sau_array import SsaBlockState, run_stream
from .verify import random_spike_stream, run_all

log = logging.getLogger("ssa_sim")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _provenance(cfg, command):
    return {"command": command, "config": cfg.source, "config_hash": cfg.config_hash(),
            "seed": cfg.ssa.global_seed, "version": __version__}


# -- verify ------------------------------------------------------------------

def cmd_verify(args, cfg):
    opts = cfg.verify
    if args.quick:
        opts = replace(opts, seeds=min(opts.seeds, 3), stat_t=min(opts.stat_t, 1024),
                       bitexact_t=min(opts.bitexact_t, 16), sc_seeds=min(opts.sc_seeds, 2))
    results = []
    for res in run_all(opts, base_seed=cfg.ssa.global_seed):
        print(res.line(), flush=True)
        results.append(res)
    passed = all(r.passed for r in results)
    report = _provenance(cfg, "verify")
    report.update(passed=passed, checks=[
        {"name": r.name, "passed": r.passed, "stats": r.stats} for r in results])
    if args.out:
        _write_json(args.out / "verify_report.json", report)
    print(f"effective seed: {cfg.ssa.global_seed}")
    print("ALL CHECKS PASSED" if passed else "SOME CHECKS FAILED")
    return EXIT_OK if passed else EXIT_FAIL


# -- simulate / trace ---------------------------------------------------------

def _inputs(args, cfg):
    ssa = cfg.ssa
    rng = ssa.input_range
    shape_w = (ssa.d, ssa.d_k)
    if args.x:
        x = read_matrix(args.x)
    elif args.synthetic == "ones":
        x = np.full((ssa.n, ssa.d), rng.hi)
    elif args.synthetic == "zeros":
        x = np.full((ssa.n, ssa.d), rng.lo)
    else:
        rs = np.random.default_rng(cfg.weight_seed)
        x = rng.lo + (rng.hi - rng.lo) * rs.random((ssa.n, ssa.d))
    if args.wq or args.wk or args.wv:
        if not (args.wq and args.wk and args.wv):
            raise SsaError("--wq, --wk and --wv must be given together")
        weights = QkvWeights(read_matrix(args.wq), read_matrix(args.wk), read_matrix(args.wv))
    elif args.synthetic == "ones":
        # every neuron crosses threshold at every step
        weights = QkvWeights(*(np.full(shape_w, cfg.lif.v_threshold) for _ in range(3)))
    else:
        weights = QkvWeights.random(ssa.d, ssa.d_k, scale=cfg.weight_scale,
                                    random_state=cfg.weight_seed)
    return x, weights


def _functional_run(args, cfg):
    ssa = cfg.ssa
    if args.independent:
        rs = np.random.default_rng(cfg.weight_seed)
        probs = [rs.random((ssa.n, ssa.d_k)) for _ in range(3)]
        return ssa_run_independent(*probs, ssa), probs
    x, weights = _inputs(args, cfg)
    return ssa_run(x, weights, cfg.lif, ssa), None


def cmd_simulate(args, cfg):
    ssa = cfg.ssa
    out = args.out
    outputs, probs = _functional_run(args, cfg)
    summary = _provenance(cfg, "simulate")
    summary.update(n=ssa.n, d=ssa.d, d_k=ssa.d_k, t=ssa.t, pipelined=args.pipelined,
                   independent=args.independent)
    if not outputs:
        summary["note"] = "T = 0, nothing simulated"
        _write_json(out / "summary.json", summary)
        return EXIT_OK
    decoded = decode_output(outputs)
    if args.engine in ("cycle", "both"):
        state = SsaBlockState.from_seed(ssa.n, ssa.d_k, ssa.global_seed,
                                        sharing=ssa.rng_sharing, exact=ssa.exact)
        sim, trace = run_stream(state, [o.qkv for o in outputs], pipelined=args.pipelined)
        summary["cycles"] = len(trace)
        summary["cycle_model_matches_functional"] = all(
            np.array_equal(o.attn, s) for o, s in zip(outputs, sim))
        if args.engine == "cycle":
            decoded = np.mean(sim, axis=0)
    write_matrix(out / "decoded.ssam", decoded, kind="real64")
    rates = {name: float(np.mean([o.qkv[i].mean() for o in outputs]))
             for i, name in enumerate(("q", "k", "v"))}
    rates["s"] = float(np.mean([o.s.mean() for o in outputs]))
    rates["attn"] = float(decoded.mean())
    summary["spike_rates"] = rates
    if probs is not None:
        summary["max_abs_error_vs_expectation"] = float(
            np.abs(decoded - linear_ssa_expectation(*probs)).max())
    if args.spikes:
        spikes = out / "spikes"
        spikes.mkdir(exist_ok=True)
        for t, o in enumerate(outputs):
            write_matrix(spikes / f"attn_t{t:05d}.ssam", o.attn, kind="bits")
            write_matrix(spikes / f"s_t{t:05d}.ssam", o.s, kind="bits")
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_trace(args, cfg):
    ssa = cfg.ssa
    outputs, _ = _functional_run(args, cfg)
    steps = [o.qkv for o in outputs][: args.steps] if args.steps else [o.qkv for o in outputs]
    state = SsaBlockState.from_seed(ssa.n, ssa.d_k, ssa.global_seed,
                                    sharing=ssa.rng_sharing, exact=ssa.exact)
    _, trace = run_stream(state, steps, pipelined=args.pipelined, full_trace=args.full_trace)
    path = args.out / "trace.jsonl"
    with open(path, "w") as fh:
        trace.write_jsonl(fh)
    print(f"wrote {len(trace)} cycles to {path} "
          f"(and_ops={trace.and_ops}, rng_draws={trace.rng_draws}, row_adds={trace.row_adds})")
    return EXIT_OK


# -- energy --------------------------------------------------------------------

def cmd_energy(args, cfg):
    if cfg.energy is None:
        raise SsaError(f"{cfg.source}: no [energy] section with per-operation constants")
    n = args.n or cfg.ssa.n
    d_k = args.d_k or cfg.ssa.d_k
    t = cfg.ssa.t if args.t is None else args.t
    rows = compare_architectures(n, d_k, t, cfg.energy, softmax_weight=cfg.softmax_weight)

    crosscheck = None
    if t > 0 and not args.no_crosscheck:
        _, trace = run_stream(SsaBlockState.from_seed(n, d_k, cfg.ssa.global_seed),
                              random_spike_stream(cfg.ssa.global_seed, n, d_k, t))
        c = rows["ssa"][0]
        crosscheck = {"and_ops": trace.and_ops, "rng_draws": trace.rng_draws,
                      "agrees": (trace.and_ops, trace.rng_draws) == (c.and_ops, c.rng_draws)}

    header = f"{'architecture':<12} {'processing_uJ':>14} {'memory_uJ':>12} {'total_uJ':>12}"
    print(f"N={n} D_K={d_k} T={t}   energies: {cfg.energy.provenance}")
    print(header)
    for name, (_, rep) in rows.items():
        print(f"{name:<12} {rep.processing_uj:>14.6g} {rep.memory_uj:>12.6g} {rep.total_uj:>12.6g}")
    print("reference anchors (published, external constants, T=10):")
    for name, (p, m, tot) in REFERENCE_TABLE_UJ.items():
        print(f"{name:<12} {p:>14.2f} {m:>12.2f} {tot:>12.2f}")

    report = _provenance(cfg, "energy")
    report.update(n=n, d_k=d_k, t=t, energy_provenance=cfg.energy.provenance,
                  rows={name: {"counts": c.as_dict(), "processing_uj": r.processing_uj,
                               "memory_uj": r.memory_uj, "total_uj": r.total_uj,
                               "breakdown_uj": r.breakdown_uj}
                        for name, (c, r) in rows.items()},
                  reference_uj={k: dict(zip(("processing", "memory", "total"), v))
                                for k, v in REFERENCE_TABLE_UJ.items()},
                  trace_crosscheck=crosscheck)
    _write_json(args.out / "energy.json", report)
    with open(args.out / "energy.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["architecture", "processing_uj", "memory_uj", "total_uj"])
        for name, (_, r) in rows.items():
            w.writerow([name, repr(r.processing_uj), repr(r.memory_uj), repr(r.total_uj)])
    if crosscheck is not None and not crosscheck["agrees"]:
        return EXIT_FAIL
    return EXIT_OK


# -- sweep ---------------------------------------------------------------------

def _sweep_cell(cell):
    n, d_k, seed, t, check_sim = cell
    rs = np.random.default_rng(seed)
    probs = [rs.random((n, d_k)) for _ in range(3)]
    cfg = SsaConfig(n=n, d=d_k, d_k=d_k, t=t, global_seed=seed)
    outputs = ssa_run_independent(*probs, cfg)
    err = np.abs(decode_output(outputs) - linear_ssa_expectation(*probs))
    row = {"n": n, "d_k": d_k, "seed": seed, "t": t,
           "mean_abs_err": float(err.mean()), "max_abs_err": float(err.max()),
           "pipelined_cycles": d_k * (t + 1), "unpipelined_cycles": 2 * d_k * t}
    if check_sim:
        sim, trace = run_stream(SsaBlockState.from_seed(n, d_k, seed), [o.qkv for o in outputs])
        row["bit_exact"] = all(np.array_equal(o.attn, s) for o, s in zip(outputs, sim))
        row["pipelined_cycles"] = len(trace)
    return row


def cmd_sweep(args, cfg):
    sw = cfg.sweep
    base = cfg.ssa.global_seed
    cells = [(n, d_k, base + s, sw.t, args.check_sim)
             for n in sw.n_values for d_k in sw.d_k_values for s in range(sw.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    path = args.out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} cells to {path}")
    if args.check_sim and not all(r["bit_exact"] for r in rows):
        return EXIT_FAIL
    return EXIT_OK


# -- entry point -----------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="ssa-sim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", type=Path, help="INI config (default: $SSA_SIM_CONFIG or packaged default)")
    common.add_argument("-o", "--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="override the global seed")
    common.add_argument("-v", "--verbose", action="store_true")

    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("--x", type=Path, help="input matrix file, N x D")
    run_opts.add_argument("--wq", type=Path)
    run_opts.add_argument("--wk", type=Path)
    run_opts.add_argument("--wv", type=Path)
    run_opts.add_argument("--synthetic", choices=("random", "ones", "zeros"), default="random")
    run_opts.add_argument("--independent", action="store_true",
                          help="bypass LIF; drive Q/K/V from independent Bernoulli encoders")
    run_opts.add_argument("--pipelined", action=argparse.BooleanOptionalAction, default=True)

    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run the verification suite")
    v.add_argument("--quick", action="store_true", help="reduced seeds and horizons")

    s = sub.add_parser("simulate", parents=[common, run_opts], help="run the SSA block")
    s.add_argument("--engine", choices=("functional", "cycle", "both"), default="both")
    s.add_argument("--spikes", action="store_true", help="write per-step spike matrices")

    t = sub.add_parser("trace", parents=[common, run_opts], help="export a cycle trace")
    t.add_argument("--full-trace", action="store_true", help="dump counters and score registers")
    t.add_argument("--steps", type=int, help="limit the number of time steps traced")

    e = sub.add_parser("energy", parents=[common], help="three-way energy comparison")
    e.add_argument("--n", type=int)
    e.add_argument("--d-k", type=int)
    e.add_argument("--t", type=int)
    e.add_argument("--no-crosscheck", action="store_true")

    w = sub.add_parser("sweep", parents=[common], help="accuracy/cycle sweep over dimensions")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--check-sim", action="store_true", help="also check cycle-model bit-exactness")
    return p


COMMANDS = {"verify": cmd_verify, "simulate": cmd_simulate, "trace": cmd_trace,
            "energy": cmd_energy, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg)
    except (SsaError, OverflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
