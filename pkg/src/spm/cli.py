"""Command line interface.

Exit codes: 0 success, 1 I/O or flag errors, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import io
from .driver import SpmConfig, decompose, decompose_btd
from .ensembles import PRESETS, preset, synth
from .errors import FormatError, NumericalError
from .experiments import (BenchRecord, bench, reconstruction_error,
                          sweep_landscape, sweep_maxrank, sweep_noise)
from .gpca import SubspaceArrangement, classify, fit_subspaces
from .power import PowerConfig
from .spectral import RankPolicy


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on flag errors; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self.exit_code_for_errors)

    exit_code_for_errors = 1


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)


def _add_solver_flags(p):
    p.add_argument("--rank-tol", type=float, default=1e-10,
                   help="relative eigenvalue cutoff for rank detection")
    p.add_argument("--rank", type=int, default=None,
                   help="override the detected flattening rank")
    p.add_argument("--null-tol", type=float, default=1e-8,
                   help="nullspace eigenvalue cutoff of the local component step")
    p.add_argument("--block-dim", type=int, default=None,
                   help="fixed block dimension (overrides --null-tol counting)")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--restarts", type=int, default=3,
                   help="maximum power method restarts")
    p.add_argument("--membership-tol", type=float, default=1e-6)


def _config_from(args) -> SpmConfig:
    return SpmConfig(
        rank_policy=RankPolicy(relative_tol=args.rank_tol, fixed_rank=args.rank),
        power=PowerConfig(max_iters=args.max_iters, max_restarts=args.restarts,
                          seed=args.seed),
        membership_tol=args.membership_tol,
        null_tol=args.null_tol,
        block_dim=args.block_dim,
    )


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="spm", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate an ensemble tensor")
    p.add_argument("--ensemble", required=True,
                   help=f"one of {', '.join(sorted(PRESETS))}")
    p.add_argument("--output", required=True)
    p.add_argument("--truth", default=None, help="also write ground truth JSON")
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--R", type=int, default=None)
    p.add_argument("--m", type=int, default=None, help="tensor order (2n)")
    _add_common(p)

    p = sub.add_parser("decompose", help="CP decomposition of an STF1 tensor")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_solver_flags(p)
    _add_common(p)

    p = sub.add_parser("btd", help="block term decomposition of an STF1 tensor")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_solver_flags(p)
    _add_common(p)

    p = sub.add_parser("gpca", help="fit subspaces to a point cloud")
    p.add_argument("--input", required=True, help="PTS1 binary or CSV points")
    p.add_argument("--output", required=True, help="model JSON")
    p.add_argument("--labels", default=None, help="also write labels CSV")
    p.add_argument("--sigma", type=float, default=None,
                   help="known noise level (estimated when omitted)")
    _add_solver_flags(p)
    _add_common(p)

    p = sub.add_parser("bench", help="timing/error records for an ensemble")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--output", required=True)
    _add_common(p)

    p = sub.add_parser("sweep-landscape", help="single-pass convergence frequency")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--ranks", type=_int_list, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--output", required=True)
    _add_common(p)

    p = sub.add_parser("sweep-maxrank", help="full-pipeline success frequency grid")
    p.add_argument("--lengths", type=_int_list, required=True)
    p.add_argument("--ranks", type=_int_list, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--output", required=True)
    _add_common(p)

    p = sub.add_parser("sweep-noise", help="error under symmetric Gaussian noise")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--sigmas", type=_float_list, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--output", required=True)
    _add_common(p)

    return top


def _cmd_synth(args) -> int:
    overrides = {"seed": args.seed}
    if args.L is not None:
        overrides["L"] = args.L
    if args.R is not None:
        overrides["R"] = args.R
    if args.m is not None:
        overrides["m"] = args.m
    spec = preset(args.ensemble, **overrides)
    T, truth = synth(spec)
    io.save_stf(args.output, T)
    if args.truth:
        if spec.block_dims:
            io.dump_json(args.truth, io.btd_to_dict(truth, ensemble=spec.name))
        else:
            io.dump_json(args.truth,
                         io.decomposition_to_dict(truth, ensemble=spec.name))
    return 0


def _cmd_decompose(args) -> int:
    T = io.load_stf(args.input)
    cfg = _config_from(args)
    d = decompose(T, cfg)
    err = reconstruction_error(T, d)
    io.dump_json(args.output, io.decomposition_to_dict(
        d, error=err,
        iterations=d.stats.mean_iterations,
        restarts=d.stats.restarts,
        seconds=d.stats.total_seconds))
    return 0


def _cmd_btd(args) -> int:
    T = io.load_stf(args.input)
    cfg = _config_from(args)
    d = decompose_btd(T, cfg)
    err = reconstruction_error(T, d)
    io.dump_json(args.output, io.btd_to_dict(
        d, error=err, restarts=d.stats.restarts,
        seconds=d.stats.total_seconds))
    return 0


def _cmd_gpca(args) -> int:
    Y = io.load_points(args.input)
    cfg = _config_from(args)
    arrangement = fit_subspaces(Y, cfg, sigma=args.sigma)
    io.dump_json(args.output, {
        "sigma_hat": arrangement.sigma,
        "subspaces": [{"dim": B.shape[1], "basis": B.tolist()}
                      for B in arrangement.bases],
    })
    if args.labels:
        labels = classify(Y, arrangement)
        with open(args.labels, "w") as fh:
            fh.writelines(f"{int(v)}\n" for v in labels)
    return 0


def _cmd_bench(args) -> int:
    records = bench(args.ensemble, repeat=args.repeat, seed=args.seed)
    _write_csv(args.output, BenchRecord.FIELDS, [r.row() for r in records])
    return 0


def _rows_csv(path, rows: list[dict]) -> None:
    header = list(rows[0].keys())
    _write_csv(path, header, [[r[k] for k in header] for r in rows])


def _cmd_sweep_landscape(args) -> int:
    rows = sweep_landscape(args.L, args.ranks, args.trials, args.seed, args.n)
    _rows_csv(args.output, rows)
    return 0


def _cmd_sweep_maxrank(args) -> int:
    rows = sweep_maxrank(args.lengths, args.ranks, args.trials, args.seed, args.n)
    _rows_csv(args.output, rows)
    return 0


def _cmd_sweep_noise(args) -> int:
    rows = sweep_noise(args.L, args.R, args.sigmas, args.trials, args.seed, args.n)
    _rows_csv(args.output, rows)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "decompose": _cmd_decompose,
    "btd": _cmd_btd,
    "gpca": _cmd_gpca,
    "bench": _cmd_bench,
    "sweep-landscape": _cmd_sweep_landscape,
    "sweep-maxrank": _cmd_sweep_maxrank,
    "sweep-noise": _cmd_sweep_noise,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"spm: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError, ValueError) as exc:
        print(f"spm: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
