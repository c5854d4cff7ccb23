"""Command-line interface.

Exit codes: 0 success / suite pass, 1 runtime or suite failure, 2 config
error.  Every subcommand accepts --config (JSON file) plus the shared
override flags; command-specific knobs live in the config file.
"""

from __future__ import annotations

import argparse
import sys

from . import io, runner
from ._version import __version__
from .errors import ConfigError, DriftlabError

_COMMANDS = ("simulate", "estimate-direction", "trap-scan", "threat-scan",
             "density", "verify", "mixing-scan")

# verify embeds its own fixed environments; give the config a harmless
# default so a bare `driftlab verify <suite>` works.
_DEFAULT_ENV = {"family": "constant",
                "kernels": [[0.25, 0.25, 0.25, 0.25]]}


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="driftlab",
        description="Random walks in random environments on the lattice: "
                    "simulation, direction estimation, trap/threat scans, "
                    "and property verification.")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--workers", type=int, help="worker process count")
        p.add_argument("--cap", type=int, help="per-walk step cap")
        p.add_argument("--out", help="output directory")
        if name == "verify":
            p.add_argument("suite", choices=runner.VERIFY_SUITES)
            p.add_argument("--trials", type=int,
                           help="trial count (suite-specific default otherwise)")
            p.add_argument("--corrupt", action="store_true",
                           help="barrier suite negative control: break the "
                                "left walk's counter coupling")
    return top


def _resolve_config(args) -> runner.ExperimentConfig:
    raw = io.load_config(args.config) if args.config else {}
    if args.command == "verify" and "environment" not in raw:
        raw = dict(raw)
        raw["environment"] = _DEFAULT_ENV
    overrides = {"seed": args.seed, "workers": args.workers,
                 "cap": args.cap, "out": args.out}
    return runner.ExperimentConfig.from_dict(raw, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "verify":
            rep = runner.cmd_verify(cfg, args.suite, trials=args.trials,
                                    corrupt=args.corrupt)
            for line in rep.lines:
                print(line)
            return 0 if rep.passed else 1
        cmd = {
            "simulate": runner.cmd_simulate,
            "estimate-direction": runner.cmd_estimate_direction,
            "trap-scan": runner.cmd_trap_scan,
            "threat-scan": runner.cmd_threat_scan,
            "density": runner.cmd_density,
            "mixing-scan": runner.cmd_mixing_scan,
        }[args.command]
        written = cmd(cfg)
        for kind, path in written.items():
            print(f"{kind}: {path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    except DriftlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
