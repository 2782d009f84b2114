"""Command-line interface.

Subcommands
-----------
run
    One scenario: print the per-iteration trace of the total-MSE design.
sweep
    Run an experiment spec file.
verify
    Run the identity suite.
preset NAME
    Run a named figure preset (fig2, fig3, fig4, fig5, fig6).

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 verification
failure.
"""
import argparse
import json
import logging
import os
import sys

from . import harness
from .model import ConfigError, SystemConfig, load_config

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario (run) or experiment spec (sweep)")
    common.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    common.add_argument("--trials", type=int, default=None,
                        help="trials per grid point (verify: number of cases)")
    common.add_argument("--out", help="output path")
    common.add_argument("--format", choices=("csv", "structured"), default="csv")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--method", choices=("literal", "restricted"), default=None,
                        help="precoder-update rule of the total-MSE design")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="mimo-secrecy", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="single scenario trace")
    run.add_argument("--snr", type=float, default=25.0, help="SNR in dB")
    run.add_argument("--max-iters", type=int, default=50)
    sub.add_parser("sweep", parents=[common], help="run an experiment spec")
    ver = sub.add_parser("verify", parents=[common], help="identity suite")
    ver.add_argument("--no-kkt", action="store_true", help="skip the KKT check")
    pre = sub.add_parser("preset", parents=[common], help="figure preset")
    pre.add_argument("name", choices=sorted(harness.PRESETS))
    return p


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args):
    cfg = (load_config(args.config) if args.config
           else SystemConfig.symmetric(K=3, n=4, m_eve=6, d=2, epsilon=1.5))
    opts = harness.mt.MTMSEOptions(max_iters=args.max_iters,
                                   method=args.method or "literal")
    state, trace = harness.run_convergence_trace(cfg, args.snr, args.seed or 0, opts)
    cols, rows = harness.trace_rows(trace)
    _emit(harness._csv_text(cols, rows), args.out)
    print(f"status: {trace.status} after {trace.iterations} iterations", file=sys.stderr)
    for note in state.flags:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK


def _sweep_and_write(spec, args, out):
    res = harness.run_sweep(spec, jobs=args.jobs)
    if out:
        harness.write_results(res, out, args.format)
        print(f"wrote {len(res.rows)} rows to {out}", file=sys.stderr)
    else:
        acols, arows = res.aggregate()
        sys.stdout.write(harness._csv_text(acols, arows))


def _overrides(spec, args):
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.method is not None:
        changes["method"] = args.method
    return harness.replace(spec, **changes).validate()


def _cmd_sweep(args):
    if not args.config:
        raise ConfigError("sweep needs --config <spec.json>")
    spec = _overrides(harness.load_spec(args.config), args)
    _sweep_and_write(spec, args, args.out)
    return EXIT_OK


def _cmd_preset(args):
    specs = harness.preset_specs(args.name, args.trials, args.seed, args.method)
    for label, spec in specs:
        out = args.out
        if out and label:
            root, ext = os.path.splitext(out)
            out = f"{root}_{label}{ext}"
        if not out:
            print(f"# {args.name} {label}".rstrip())
        _sweep_and_write(spec, args, out)
    return EXIT_OK


def _cmd_verify(args):
    n = args.trials if args.trials is not None else 100
    if n < 1:
        raise ConfigError("--trials must be >= 1")
    rep = harness.run_identity_suite(seed=args.seed or 0, n_cases=n,
                                     kkt=not args.no_kkt,
                                     method=args.method or "literal")
    text = "\n".join(rep.lines()) + "\n"
    if args.out:
        _emit(json.dumps({"seed": rep.seed, "n_cases": rep.n_cases,
                          "checks": rep.checks}, indent=1) + "\n", args.out)
    sys.stdout.write(text)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "verify": _cmd_verify,
               "preset": _cmd_preset}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
