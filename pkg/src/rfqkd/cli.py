"""Command line front end: sweep, single, keyrate and selftest subcommands.

Configuration is a JSON key-value file (see README for the schema); every
field can be omitted and individual flags override file values.  All
randomness is controlled by one seed, so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Optional

import numpy as np

from .detection import NoiseConfig, simulate_session
from .harness import DEFAULT_SEED, ExperimentConfig, emit, run_sweep, selftest
from .protocol import TallyCounts
from .security import report


def _load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    if getattr(args, "preset", None):
        noise = NoiseConfig.one_km() if args.preset == "1km" else NoiseConfig.four_meter()
        data["noise"] = dataclasses.asdict(noise)
    cfg = ExperimentConfig.from_dict(data)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "scheme", None):
        updates["schemes"] = tuple(args.scheme)
    if getattr(args, "duration_scale", None) is not None:
        updates["duration_s"] = cfg.duration_s * args.duration_scale
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _print_rows(rows) -> None:
    header = "idx scheme     conclusive_hz  norm_coinc   qber      p_S     key_rate"
    print(header)
    for r in rows:
        print(
            f"{r.setting_index:>3} {r.scheme:<10} {r.conclusive_rate_hz:>12.4f} "
            f"{r.normalized_coincidence:>10.4f} {r.qber:>8.4f} {r.p_S:>8.4f} "
            f"{r.key_rate_fraction:>9.4f}"
        )


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    rows = run_sweep(cfg)
    path = args.out or "sweep_results." + args.format
    emit(rows, format=args.format, path=path, config=cfg)
    _print_rows(rows)
    print(f"wrote {path}")
    return 0


def _cmd_single(args) -> int:
    cfg = _load_config(args)
    cfg.validate()
    if not 0 <= args.setting < len(cfg.settings):
        raise SystemExit(
            f"setting index {args.setting} out of range (0..{len(cfg.settings) - 1})"
        )
    setting = cfg.settings[args.setting]
    scheme = cfg.schemes[0]
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    tally = simulate_session(cfg.noise, setting, scheme, cfg.duration_s, rng)
    payload = {"config": cfg.to_dict(), "setting_index": args.setting,
               "scheme": scheme, "tally": dataclasses.asdict(tally)}
    path = args.out or "session_tally.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"setting {args.setting} scheme {scheme}: "
          f"{tally.conclusive} conclusive, {tally.sifted} sifted, {tally.errors} errors")
    _print_report(tally)
    print(f"wrote {path}")
    return 0


def _print_report(tally: TallyCounts) -> None:
    try:
        rep = report(tally)
    except ValueError as exc:
        print(f"security report unavailable: {exc}")
        return
    print(
        f"p_S = {rep.p_S:.4f}  e_x = {rep.e_x:.4f}  e_x_S <= {rep.e_x_S:.4f}  "
        f"key fraction = {rep.rate_fraction:.4f}  secret bits/s = {rep.secret_bits_per_s:.4f}"
    )


def _cmd_keyrate(args) -> int:
    with open(args.tally, encoding="utf-8") as fh:
        payload = json.load(fh)
    data = payload.get("tally", payload)
    tally = TallyCounts(**data)
    _print_report(tally)
    return 0


def _cmd_selftest(args) -> int:
    ok = selftest(seed=args.seed if args.seed is not None else DEFAULT_SEED)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfqkd",
        description="Simulator for reference-frame-free entangled-photon QKD",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        if preset:
            p.add_argument("--preset", choices=("4m", "1km"),
                           help="noise preset overriding the config file")
            p.add_argument("--scheme", action="append",
                           choices=("none", "flip_half", "haar"),
                           help="compensation scheme(s); repeatable")
            p.add_argument("--duration-scale", type=float, default=None,
                           help="multiply the configured per-setting duration")

    p_sweep = sub.add_parser("sweep", help="run the rotator sweep and emit a table")
    common(p_sweep)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--out", help="output path (default sweep_results.<fmt>)")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_single = sub.add_parser("single", help="run one session and write its tally")
    common(p_single)
    p_single.add_argument("--setting", type=int, default=0, help="sweep setting index")
    p_single.add_argument("--out", help="output path (default session_tally.json)")
    p_single.set_defaults(fn=_cmd_single)

    p_rate = sub.add_parser("keyrate", help="evaluate the key-rate bound on a tally file")
    p_rate.add_argument("tally", help="JSON tally file produced by `single`")
    p_rate.set_defaults(fn=_cmd_keyrate)

    p_self = sub.add_parser("selftest", help="run the invariant suites")
    common(p_self, preset=False)
    p_self.set_defaults(fn=_cmd_selftest)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
