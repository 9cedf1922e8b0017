"""Command-line entry point.

Subcommands: rates, sweep, simulate, leakage, codebook-dump.  Flags
mirror config-file keys one-to-one and override them.  Exit codes:
0 success, 2 config/domain error, 3 I/O error, 4 resource-cap error.
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from . import adversary, bounds
from .core import DemandVector, SchemeConfig, SchemeId, derive_seed
from .codebook import EmbedSpec, FORWARD, REVERSE, build_codebook, dump_codebook
from .errors import (
    AlphaOutOfRange,
    BadD,
    BlocklengthTooLarge,
    BudgetTooLarge,
    CachetapError,
    ConfigError,
    EnumerationTooLarge,
)
from .schemes import SchemeRunner, layout_for

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_RESOURCE = 4

CONFIG_KEYS = ("n", "D", "mu", "mu1", "mu2", "eps_bits", "scheme", "seed")


def read_config_file(path: str) -> dict:
    """Parse a flat key=value config file; '#' starts a comment line."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r} in line {line!r}")
            out[key] = value if key == "scheme" else int(value)
    return out


def build_config(args) -> SchemeConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key, attr in (
        ("n", "n"),
        ("D", "d"),
        ("mu", "mu"),
        ("mu1", "mu1"),
        ("mu2", "mu2"),
        ("eps_bits", "eps_bits"),
        ("seed", "seed"),
    ):
        flag = getattr(args, attr, None)
        if flag is not None:
            values[key] = flag
    if getattr(args, "scheme", None) is not None:
        values["scheme"] = args.scheme
    for key in ("n", "D", "mu", "scheme"):
        if key not in values:
            raise ValueError(f"missing required config key {key!r}")
    return SchemeConfig(
        n=values["n"],
        D=values["D"],
        mu=values["mu"],
        scheme=SchemeId(values["scheme"]),
        mu1=values.get("mu1"),
        mu2=values.get("mu2"),
        eps_bits=values.get("eps_bits", 0),
        seed=values.get("seed", 0),
    )


@contextmanager
def _out_stream(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _parse_d_range(text: str) -> list:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


def _parse_demand(text: str) -> DemandVector:
    d1, d2 = (int(x) for x in text.split(","))
    return DemandVector(d1, d2)


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_rates(args) -> int:
    point = bounds.rate_point(Fraction(args.alpha), args.d)
    for name in ("lower", "upper", "capacity", "chain_rate", "uncoded_ub"):
        value = getattr(point, name)
        if value is not None:
            print(f"{name}={float(value)!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    points = bounds.sweep([Fraction(args.alpha)], _parse_d_range(args.d))
    with _out_stream(args.out) as fh:
        bounds.write_sweep_csv(points, fh)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    runner = SchemeRunner(cfg)
    if args.all_demands:
        demands = [DemandVector(a, b) for a in range(1, cfg.D + 1) for b in range(1, cfg.D + 1)]
    else:
        demands = [_parse_demand(args.demand) if args.demand else DemandVector(1, 2)]
    transcripts, successes, total = [], 0, 0
    for trial in range(args.trials):
        library, keys = runner.draw(label=str(trial))
        for demand in demands:
            record = runner.round(library, keys, demand)
            per_receiver = [
                record.decoded[j - 1] == library.file(demand.request(j)) for j in (1, 2)
            ]
            ok = all(per_receiver)
            successes += sum(per_receiver)
            total += 2
            transcripts.append({**record.to_dict(), "trial": trial, "decode_ok": ok})
    payload = {
        "summary": {
            "trials": args.trials,
            "demands": len(demands),
            "receiver_decodes": total,
            "successes": successes,
        },
        "transcripts": transcripts,
    }
    with _out_stream(args.out) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def cmd_leakage(args) -> int:
    cfg = build_config(args)
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [cfg.seed]
    demand = _parse_demand(args.demand) if args.demand else None
    reports = []
    for seed in seeds:
        report = adversary.max_leakage(cfg.with_seed(seed), args.strategy, demand=demand)
        reports.append(report)
    worst = [r.worst_bits for r in reports]
    payload = {
        "reports": [r.to_dict() for r in reports],
        "aggregate": {
            "seeds": seeds,
            "mean_worst_bits": float(np.mean(worst)),
            "max_worst_bits": float(np.max(worst)),
        },
    }
    with _out_stream(args.out) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def cmd_codebook_dump(args) -> int:
    if args.n > 16:
        raise BlocklengthTooLarge(f"dumps are limited to n <= 16, got n={args.n}")
    if args.scheme is not None:
        cfg = build_config(args)
        lay = layout_for(cfg.scheme, cfg)
        spec = lay.placement_spec if args.phase == "placement" else lay.delivery_spec
        if spec is None:
            raise ValueError(f"{cfg.scheme.value} sends the {args.phase} phase unsecured")
        seed = derive_seed(cfg.seed, f"{args.phase}-codebook")
    else:
        labels = tuple(args.embed_labels.split(",")) if args.embed_labels else ()
        spec = EmbedSpec(args.bin_bits, labels, args.leaf_bits, order=args.order)
        seed = args.seed if args.seed is not None else 0
    cb = build_codebook(args.n, spec, seed)
    with _out_stream(args.out) as fh:
        dump_codebook(cb, fh)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring.
# ---------------------------------------------------------------------------


def _add_config_flags(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--mu", type=int)
    p.add_argument("--mu1", type=int)
    p.add_argument("--mu2", type=int)
    p.add_argument("--eps-bits", type=int, dest="eps_bits")
    p.add_argument("--scheme", choices=[s.value for s in SchemeId])
    p.add_argument("--seed", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachetap",
        description="Two-receiver caching broadcast schemes under a symbol-tapping adversary",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="print every bound at one (alpha, D)")
    p.add_argument("--alpha", required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("sweep", help="emit a CSV of bounds over a D range")
    p.add_argument("--alpha", required=True)
    p.add_argument("--d", required=True, help="range like 3..10 or list like 3,5,7")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="run encode/decode rounds and report decode success")
    _add_config_flags(p)
    p.add_argument("--demand", help="d1,d2")
    p.add_argument("--all-demands", action="store_true", dest="all_demands")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("leakage", help="exact worst-case leakage over a pattern strategy")
    _add_config_flags(p)
    p.add_argument("--strategy", default="exhaustive",
                   help="exhaustive | phase-split:a,b | random:k | contiguous")
    p.add_argument("--seeds", help="comma-separated master seeds")
    p.add_argument("--demand", help="d1,d2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("codebook-dump", help="dump a codebook's full index table")
    _add_config_flags(p)
    p.add_argument("--phase", choices=["placement", "delivery"], default="placement")
    p.add_argument("--bin-bits", type=int, dest="bin_bits", default=0)
    p.add_argument("--embed-labels", dest="embed_labels")
    p.add_argument("--leaf-bits", type=int, dest="leaf_bits", default=0)
    p.add_argument("--order", choices=[FORWARD, REVERSE], default=FORWARD)
    p.add_argument("--out")
    p.set_defaults(func=cmd_codebook_dump)

    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EnumerationTooLarge, BudgetTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, AlphaOutOfRange, BadD, BlocklengthTooLarge, CachetapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
