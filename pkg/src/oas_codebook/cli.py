"""Command line entry point: ``oas sweep | single | baseline``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace

from . import harness
from .engine import OASConfig, run_oas
from .errors import InvalidArgumentError, SingularMatrixError
from .estimators import SparseGaussianPrior
from .linalg import Codebook, generate_codebook
from .presets import PRESETS, preset
from .selection import STRATEGIES

log = logging.getLogger("oas_codebook")


def _base_spec(args) -> harness.ExperimentSpec:
    if args.config and args.preset:
        raise InvalidArgumentError("give either --config or --preset, not both")
    if args.config:
        spec = harness.load_spec(args.config)
    elif args.preset:
        spec = preset(args.preset)
    else:
        spec = harness.ExperimentSpec()
    if args.seed is not None:
        spec.seed = args.seed
    if getattr(args, "trials", None) is not None:
        spec.trials = args.trials
    if getattr(args, "workers", None) is not None:
        spec.workers = args.workers
    if getattr(args, "fixed_codebook", False):
        spec.fixed_codebook = True
    return spec


def _override_settings(spec: harness.ExperimentSpec, args) -> harness.ExperimentSpec:
    st = spec.base
    changes = {k: getattr(args, k) for k in ("N", "K", "L", "M", "S", "sigma2", "rho")
               if getattr(args, k, None) is not None}
    if args.codebook_variance is not None:
        changes["codebook_variance"] = args.codebook_variance
    st = replace(st, **changes)
    if args.R is not None:
        st = st.with_param("R", args.R)
    spec.base = st
    return spec


def _write(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(result: harness.SweepResult, args) -> int:
    if args.out:
        harness.emit_results(result, args.format, args.out)
        log.info("wrote %d rows to %s", len(result.rows), args.out)
    else:
        sys.stdout.write(harness.format_results(result, args.format))
    bad = result.invalid_rows
    for row in bad:
        log.error("invalid cell %s=%s %s: %d of %d trials failed",
                  row.swept_param, row.value, row.method, row.failed, row.failed + row.trials)
    return 1 if bad else 0


def cmd_sweep(args) -> int:
    spec = _base_spec(args)
    if args.strategy:
        spec.strategies = args.strategy
    spec = _override_settings(spec, args)
    done = [0]

    def progress(cell, t):
        done[0] += 1
        if args.verbose and done[0] % 50 == 0:
            log.info("%d trials done", done[0])

    return _report(harness.run_sweep(spec, progress), args)


def cmd_baseline(args) -> int:
    spec = _base_spec(args)
    spec = _override_settings(spec, args)
    # one-shot baselines never use L; keep it valid for whatever K was asked for
    spec.base = replace(spec.base, L=min(spec.base.L, spec.base.K))
    spec.sweep_param, spec.sweep_values = None, ()
    spec.strategies = []
    spec.baselines = args.method or ["lasso"]
    return _report(harness.run_sweep(spec), args)


def cmd_single(args) -> int:
    spec = _override_settings(_base_spec(args), args)
    st = spec.base
    st.validate()
    seeds = harness._child_seeds(spec.seed, 4)
    x = harness.generate_signal(st.N, st.true_rho, seeds[0])
    if args.codebook:
        codebook = Codebook.load(args.codebook)
    else:
        codebook = generate_codebook(st.S, st.N, st.entry_variance, seeds[1])
    if args.save_codebook:
        codebook.save(args.save_codebook)
    strategy = (args.strategy or spec.strategies or ["random"])[0]
    config = OASConfig(st.N, st.K, st.L, st.M, st.sigma2, SparseGaussianPrior(st.rho), strategy, seeds[2])
    try:
        res = run_oas(config, x, codebook, seeds[3])
    except SingularMatrixError as exc:
        log.error("subframe %s: %s (codewords %s)", exc.subframe, exc, exc.source_indices)
        return 1

    rows = [{
        "subframe": r.m + 1,
        "mse_db": max(harness.to_db(float(mse)), harness.NEG_INF_DB),
        "interference_power": r.interference_power,
        "projected_interference": r.projected_interference,
        "mean_noise_variance": float(r.noise_variance.mean()),
    } for r, mse in zip(res.records, res.mse_trajectory)]
    if args.format == "json":
        text = json.dumps({"final_mse_db": rows[-1]["mse_db"], "subframes": rows}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    _write(text, args.out)
    log.info("final MSE %.3f dB after %d subframes", rows[-1]["mse_db"], st.M)
    return 0


def _settings_flags(p):
    g = p.add_argument_group("settings (override the config or preset)")
    g.add_argument("--N", type=int)
    g.add_argument("--K", type=int)
    g.add_argument("--R", type=int, help="compression rate N/K; sets K")
    g.add_argument("--L", type=int)
    g.add_argument("--M", type=int)
    g.add_argument("--S", type=int)
    g.add_argument("--sigma2", type=float, help="full-frame noise variance")
    g.add_argument("--rho", type=float)
    g.add_argument("--codebook-variance", help="'1/K', '1/sqrtK' or a number")


def _common_flags(p, trials=True):
    p.add_argument("--config", help="YAML experiment spec")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, help="master seed")
    if trials:
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int, help="worker processes (default: $OAS_WORKERS or 1)")
        p.add_argument("--fixed-codebook", action="store_true",
                       help="reuse one codebook across trials instead of redrawing per trial")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    _settings_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oas", description="Oversampled adaptive sensing with a codebook")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    _common_flags(p)
    p.add_argument("--strategy", action="append", choices=STRATEGIES,
                   help="selection strategy (repeatable; overrides the spec)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("single", help="run one OAS trial and print its MSE trajectory")
    _common_flags(p, trials=False)
    p.add_argument("--strategy", action="append", choices=STRATEGIES)
    p.add_argument("--codebook", help="load the codebook from a text matrix file")
    p.add_argument("--save-codebook", help="write the codebook used to a text matrix file")
    p.set_defaults(func=cmd_single)

    p = sub.add_parser("baseline", help="evaluate non-adaptive baselines")
    _common_flags(p)
    p.add_argument("--method", action="append", choices=harness.BASELINES)
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (InvalidArgumentError, KeyError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
