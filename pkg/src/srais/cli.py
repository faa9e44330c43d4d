"""Command line interface.

Subcommands:

- ``run``            execute a run config or preset, write traces/figures
- ``verify-emd``     check the mirror descent contraction bound
- ``property-suite`` run the statistical invariant batteries
- ``presets``        list bundled configs or show one as TOML

Exit codes: 0 success, 1 usage or validation error, 2 runtime failure.
"""

import argparse
import os
import sys
from dataclasses import replace

from . import __version__
from .config import EmdConfig, PRESETS, load_config
from .errors import ConfigError, SraisError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="srais",
        description="Safe and regularized adaptive importance sampling",
    )
    parser.add_argument("--version", action="version", version=f"srais {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config or preset")
    run_p.add_argument("--config", required=True, help="TOML file path or preset name")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out-dir", default=None, help="output directory (default: $SRAIS_OUT or ./srais_out/<label>)")
    run_p.add_argument("--replicates", type=int, default=None, help="override replicate count")
    run_p.add_argument("--dataset", default=None, help="override the dataset path (blr runs)")
    run_p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    emd_p = sub.add_parser("verify-emd", help="verify the contraction bound on a grid")
    emd_p.add_argument("--config", required=True, help="TOML file path or preset name")
    emd_p.add_argument("--out-dir", default=None)
    emd_p.add_argument("--no-figures", action="store_true")

    prop_p = sub.add_parser("property-suite", help="run the statistical invariant batteries")
    prop_p.add_argument("--quiet", action="store_true")

    presets_p = sub.add_parser("presets", help="inspect bundled configs")
    presets_sub = presets_p.add_subparsers(dest="presets_command", required=True)
    presets_sub.add_parser("list", help="print preset names")
    show_p = presets_sub.add_parser("show", help="print a preset as TOML")
    show_p.add_argument("name")
    return parser


def _resolve_out_dir(flag_value, config):
    if flag_value:
        return flag_value
    if getattr(config, "out_dir", None):
        return config.out_dir
    env = os.environ.get("SRAIS_OUT")
    if env:
        return env
    return os.path.join("srais_out", config.label)


def _cmd_run(args):
    from .experiments import run_experiment

    config = load_config(args.config, dataset=args.dataset)
    if isinstance(config, EmdConfig):
        raise ConfigError(["this config describes a grid verification; use verify-emd"])
    config = config.with_overrides(seed=args.seed, replicates=args.replicates)
    if args.no_figures:
        config = config.with_overrides(figures=False)
    out_dir = _resolve_out_dir(args.out_dir, config)
    result = run_experiment(config, out_dir=out_dir)
    done = len(result.completed)
    print(f"{config.label}: {done}/{config.replicates} replicates ok -> {result.out_dir}")
    return 0


def _cmd_verify_emd(args):
    from .experiments import verify_emd

    config = load_config(args.config)
    if not isinstance(config, EmdConfig):
        raise ConfigError(["this config describes a sampling run; use the run subcommand"])
    if args.no_figures:
        config = replace(config, figures=False)
    out_dir = _resolve_out_dir(args.out_dir, config)
    reports = verify_emd(config, out_dir=out_dir)
    for label, steps in reports.items():
        worst = min(r.slack for r in steps)
        print(f"{label}: {len(steps)} steps, minimum slack {worst:.3e}")
    print(f"bound verified -> {out_dir}")
    return 0


def _cmd_property_suite(args):
    from .properties import run_all

    results = run_all(verbose=not args.quiet)
    failed = [r for r in results if not r.passed]
    if args.quiet:
        for r in failed:
            print(f"[FAIL] {r.name}: {r.detail}")
    print(f"{len(results) - len(failed)}/{len(results)} property batteries passed")
    return 0 if not failed else 2


def _cmd_presets(args):
    if args.presets_command == "list":
        for name in sorted(PRESETS):
            print(name)
        return 0
    if args.name not in PRESETS:
        raise ConfigError([f"unknown preset {args.name!r}"])
    print(PRESETS[args.name].lstrip("\n"), end="")
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; fold that into the validation code
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify-emd":
            return _cmd_verify_emd(args)
        if args.command == "property-suite":
            return _cmd_property_suite(args)
        return _cmd_presets(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SraisError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
