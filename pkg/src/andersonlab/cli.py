"""anderson-lab command line interface.

Exit status: 0 on success with no violated bounds, 2 when any bound's
violated flag is set, 1 on usage or configuration errors.
"""

import argparse
import json
import re
import sys

from .harness import EnsembleConfig, execute

_SUBCOMMAND_KIND = {
    "minami": "minami",
    "moment": "factorial-moment",
    "chain": "chain",
    "lemma2": "lemma2",
    "lemma1": "lemma1",
    "gaps": "gaps",
    "covering": "covering",
    "incompat": "incompat",
    "solver-validate": "solver-validate",
}


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # values like "-1,1" (interval bounds) must parse as arguments
        self._negative_number_matcher = re.compile(r"^-\d|^-\.\d")

    # usage/config problems exit 1 (argparse defaults to 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _dist(text: str):
    try:
        family, params = text.split(":", 1)
        a, b = (float(p) for p in params.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected FAMILY:a,b (e.g. uniform:-2,2), got {text!r}"
        )
    if family != "uniform":
        raise argparse.ArgumentTypeError(f"unsupported family {family!r}")
    return family, a, b


def _pair(text: str):
    try:
        lo, hi = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return lo, hi


def _floats(text: str):
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list, got {text!r}")


def _ints(text: str):
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list, got {text!r}")


def _add_common(sub):
    sub.add_argument("--dim", type=int, default=None, help="lattice dimension d")
    sub.add_argument("--sites", type=int, default=None, help="sites per side n")
    sub.add_argument("--dist", type=_dist, default=None,
                     help="potential distribution, e.g. uniform:-2,2")
    sub.add_argument("--samples", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--out", type=str, default=None,
                     help="output path (.jsonl for ensembles, .csv for tables)")
    sub.add_argument("--workers", type=int, default=None)
    sub.add_argument("--config", type=str, default=None,
                     help="JSON config file; explicit flags override it")


def build_parser() -> _Parser:
    parser = _Parser(prog="anderson-lab")
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs.required = True

    for name in ("minami", "moment"):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.add_argument("--center", type=float, default=None)
        sub.add_argument("--halfwidth", type=float, default=None)
        sub.add_argument("--sweep", type=_floats, default=None,
                         help="extra half-widths counted per trial")

    sub = subs.add_parser("chain")
    _add_common(sub)
    sub.add_argument("--center", type=float, default=None)
    sub.add_argument("--halfwidth", type=float, default=None)
    sub.add_argument("--etas", type=_floats, default=None,
                     help="eta grid for the resolvent forms")

    sub = subs.add_parser("lemma2")
    _add_common(sub)
    sub.add_argument("--interval", type=_pair, default=None, metavar="LO,HI")
    sub.add_argument("--q", type=float, default=None)

    sub = subs.add_parser("lemma1")
    _add_common(sub)
    sub.add_argument("--beta", type=float, default=None)
    sub.add_argument("--c", type=float, default=None,
                     help="chain constant; omit to measure it")
    sub.add_argument("--schedule", type=_ints, default=None, metavar="L1,L2,...")
    sub.add_argument("--mode", choices=("synthetic", "anderson"), default=None)
    sub.add_argument("--center", type=float, default=None,
                     help="target energy (anderson mode)")

    sub = subs.add_parser("gaps")
    _add_common(sub)
    sub.add_argument("--interval", type=_pair, default=None, metavar="LO,HI")

    sub = subs.add_parser("covering")
    _add_common(sub)
    sub.add_argument("--interval", type=_pair, default=None, metavar="LO,HI")
    sub.add_argument("--q", type=float, default=None)

    sub = subs.add_parser("incompat")
    _add_common(sub)
    sub.add_argument("--beta", type=float, default=None)
    sub.add_argument("--q", type=float, default=None)
    sub.add_argument("--kmax", type=int, default=None)
    sub.add_argument("--c", type=float, default=None)
    sub.add_argument("--interval", type=_pair, default=None, metavar="LO,HI")

    sub = subs.add_parser("solver-validate")
    _add_common(sub)

    return parser


def config_from_args(args) -> EnsembleConfig:
    base = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as handle:
            base = json.load(handle)
    base["kind"] = _SUBCOMMAND_KIND[args.command]

    def put(key, value):
        if value is not None:
            base[key] = value

    put("dimension", getattr(args, "dim", None))
    put("sites", getattr(args, "sites", None))
    dist = getattr(args, "dist", None)
    if dist is not None:
        base["dist_family"], base["dist_a"], base["dist_b"] = dist
    put("samples", getattr(args, "samples", None))
    put("master_seed", getattr(args, "seed", None))
    put("out", getattr(args, "out", None))
    put("workers", getattr(args, "workers", None))
    put("center", getattr(args, "center", None))
    put("halfwidth", getattr(args, "halfwidth", None))
    put("halfwidth_sweep", getattr(args, "sweep", None))
    interval = getattr(args, "interval", None)
    if interval is not None:
        base["interval_lo"], base["interval_hi"] = interval
    put("q", getattr(args, "q", None))
    put("etas", getattr(args, "etas", None))
    put("beta", getattr(args, "beta", None))
    put("c", getattr(args, "c", None))
    put("schedule", getattr(args, "schedule", None))
    put("kmax", getattr(args, "kmax", None))
    put("mode", getattr(args, "mode", None))
    return EnsembleConfig.from_dict(base)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"anderson-lab: config error: {exc}", file=sys.stderr)
        return 1
    try:
        result = execute(config)
    except (ValueError, OSError) as exc:
        print(f"anderson-lab: error: {exc}", file=sys.stderr)
        return 1
    for line in result.lines:
        print(line)
    if result.violated:
        print("anderson-lab: at least one bound was violated", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
