"""Command-line interface.

Subcommands:
  vns run --config file.toml [--preset NAME] [--time.dt 1e-3 ...]
  vns fit --input timeseries.csv --column H --model exp --window 2:10
  vns compare-oracle --config file.toml [--preset NAME] [overrides...]

Any config key can be overridden with a flag of its dotted name.  Exit
codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, PRESETS, apply_overrides, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _split_overrides(extra: list[str]) -> list[tuple[str, str]]:
    """Interpret leftover ``--dotted.key value`` (or ``=``-joined) flags."""
    pairs = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r} (expected --section.key value)")
        body = tok[2:]
        if "=" in body:
            key, value = body.split("=", 1)
            i += 1
        else:
            key = body
            if i + 1 >= len(extra):
                raise ConfigError(f"flag --{key} is missing a value")
            value = extra[i + 1]
            i += 2
        pairs.append((key, value))
    return pairs


def _load(args, extra) -> "SimConfig":
    overrides = apply_overrides(_split_overrides(extra))
    return load_config(args.config, args.preset, overrides)


def cmd_run(args, extra) -> int:
    from .run import NumericalError, Runner

    cfg = _load(args, extra)
    runner = Runner(cfg)
    try:
        result = runner.run()
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        try:
            runner.flush_partial(exc)
        except OSError as io_exc:
            print(f"i/o failure while flushing partial outputs: {io_exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_NUMERICAL
    s = result.summary
    print(f"preset={s.get('preset')} mode={s['mode']} steps={s['steps']} rows={s['rows']}")
    print(
        "u_inf=({:.6g}, {:.6g})  E0={:.6g}  H0={:.6g}".format(
            s["u_inf"][0], s["u_inf"][1], s["E0"], s["H0"]
        )
    )
    if "conservation" in s:
        c = s["conservation"]
        print(
            "max residuals: energy={:.3e} modulated={:.3e} mass={:.3e} "
            "momentum={:.3e} identity={:.3e}".format(
                c["max_energy_residual"],
                c["max_modulated_residual"],
                c["max_mass_drift"],
                c["max_momentum_drift"],
                c["max_uinftybis_residual"],
            )
        )
    for name, fit in s.get("fits", {}).items():
        print(
            f"fit {name}: model={fit['model']} rate={fit['rate']:.6g} "
            f"R2={fit['r_squared']:.4f} window={fit['window']}"
        )
    if result.csv_path:
        print(f"wrote {result.csv_path}")
        print(f"wrote {result.summary_path}")
    return EXIT_OK


def cmd_fit(args, extra) -> int:
    if extra:
        raise ConfigError(f"unexpected arguments: {extra}")
    from .diagnostics import fit_decay
    from .output import read_timeseries

    data = read_timeseries(args.input)
    if args.column not in data:
        raise ConfigError(
            f"column {args.column!r} not in {args.input} (have: {', '.join(data)})"
        )
    window = None
    if args.window:
        lo, _, hi = args.window.partition(":")
        try:
            window = (float(lo), float(hi))
        except ValueError:
            raise ConfigError(f"window must look like a:b, got {args.window!r}")
    res = fit_decay(data["t"], data[args.column], args.model, window)
    print(
        json.dumps(
            {
                "column": args.column,
                "model": res.model,
                "rate": res.rate,
                "r_squared": res.r_squared,
                "n_points": res.n_points,
                "floored": res.floored,
            },
            indent=1,
        )
    )
    return EXIT_OK


def cmd_compare_oracle(args, extra) -> int:
    from .run import compare_oracle

    cfg = _load(args, extra)
    report = compare_oracle(cfg)
    print(json.dumps(report, indent=1, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vns",
        description="2D periodic fluid-kinetic drag-coupling simulator and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation")
    p_run.add_argument("--config", default=None, help="TOML config file")
    p_run.add_argument(
        "--preset", default=None, choices=sorted(PRESETS), help="scenario preset"
    )

    p_fit = sub.add_parser("fit", help="decay-rate fit on a written time series")
    p_fit.add_argument("--input", required=True, help="timeseries.csv path")
    p_fit.add_argument("--column", default="H")
    p_fit.add_argument("--model", default="exp", choices=["exp", "exponential", "alg", "algebraic"])
    p_fit.add_argument("--window", default=None, help="time window a:b")

    p_cmp = sub.add_parser(
        "compare-oracle", help="particle vs phase-space-grid moment comparison"
    )
    p_cmp.add_argument("--config", default=None)
    p_cmp.add_argument("--preset", default=None, choices=sorted(PRESETS))

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    handlers = {
        "run": cmd_run,
        "fit": cmd_fit,
        "compare-oracle": cmd_compare_oracle,
    }
    try:
        return handlers[args.command](args, extra)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
