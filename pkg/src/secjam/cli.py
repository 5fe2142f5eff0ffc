"""Command-line entry point.

Exit codes: 0 on success, 1 when an audit or oracle check fails,
2 on configuration errors, 3 on I/O errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .channel import channel_set_from_dict
from .config import PowerLimits
from .harness import (ConfigError, ExperimentConfig, emit_results, fig2_configs,
                      fig3_configs, fig4_configs, load_config, run_experiment)
from .metrics import (SecrecySpec, audit_known_ecsi, audit_unknown_ecsi,
                      build_eve_statistics)
from .oracle import run_all
from .precoding import precoder_set_from_dict
from .metrics import PowerAllocation


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed overriding the config/preset value")
    parser.add_argument("--realizations", type=int, default=None,
                        help="realizations (or blocks) per grid point")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel worker processes")
    parser.add_argument("--full", action="store_true",
                        help="full-scale run (2000 realizations; 3000 blocks)")
    parser.add_argument("--rx-search", choices=("common", "per_bob"), default=None,
                        help="randomization-rate search mode")
    parser.add_argument("--dump-realizations", action="store_true",
                        help="write per-realization JSON dumps for auditing")


def _apply_overrides(config: ExperimentConfig, args, full_scale: int) -> ExperimentConfig:
    from dataclasses import replace
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.realizations is not None:
        updates["num_realizations"] = args.realizations
    elif args.full:
        updates["num_realizations"] = full_scale
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.rx_search is not None:
        updates["rx_search"] = args.rx_search
    if args.dump_realizations:
        updates["dump_realizations"] = True
    if args.out is not None:
        updates["out_dir"] = args.out
    return replace(config, **updates)


def _run_single(config: ExperimentConfig) -> None:
    result = run_experiment(config)
    emit_results(result, config.out_dir)
    feasible = sum(1 for r in result.rows if r.feasible)
    print(f"wrote {len(result.rows)} rows ({feasible} feasible) to "
          f"{os.path.join(config.out_dir, 'results.csv')}")


def _run_preset(factory, args, full_scale: int) -> int:
    out_root = args.out or "results"
    kwargs = {}
    if args.variants:
        kwargs["variants"] = args.variants
    configs = factory(**kwargs)
    for label, config in configs:
        config = _apply_overrides(config, args, full_scale)
        config = ExperimentConfig(**{**config.__dict__,
                                     "out_dir": os.path.join(out_root, label)})
        print(f"[{label}] regime={config.regime} placement="
              f"{config.topology.eve_placement} rhos={config.rhos}")
        _run_single(config)
    return 0


def _cmd_audit(path: str) -> int:
    with open(path) as fh:
        dump = json.load(fh)
    channels = channel_set_from_dict(dump["channels"])
    precoders = precoder_set_from_dict(dump["precoders"])
    if not dump.get("feasible", False):
        print("realization was recorded infeasible; nothing to audit")
        return 0
    alloc_d = dump["allocation"]
    alloc = PowerAllocation(info_w=np.asarray(alloc_d["info_w"]),
                            txfj_w=np.asarray(alloc_d["txfj_w"]),
                            rxfj_w=np.asarray(alloc_d["rxfj_w"]),
                            objective_w=float(sum(alloc_d["info_w"])
                                              + sum(alloc_d["txfj_w"])
                                              + sum(alloc_d["rxfj_w"])),
                            feasible=True)
    limits = PowerLimits(alice_max_w=dump["limits"]["alice_max_w"],
                         bob_max_w=dump["limits"]["bob_max_w"])
    spec = SecrecySpec.uniform(channels.num_bobs, dump["rate"],
                               eps=dump["outage_budget"],
                               rho=channels.topology.correlation)
    spec = spec.with_randomization(np.asarray(dump["chosen_rx"]))
    if dump["regime"] == "unknown_ecsi":
        eve_stats = build_eve_statistics(channels, spec,
                                         dump.get("eve_stats_mode", "last_known"))
        audit = audit_unknown_ecsi(channels, precoders, alloc, spec, eve_stats,
                                   limits, alpha=dump["alpha"])
    else:
        audit = audit_known_ecsi(channels, precoders, alloc, spec, limits,
                                 alpha=dump["alpha"])
    if audit.passed:
        print(f"PASS {path}: all wiretap and budget checks hold")
        return 0
    print(f"FAIL {path}:")
    for failure in audit.failures:
        print(f"  {failure}")
    return 1


def _cmd_oracle(num_instances: int) -> int:
    checks = run_all(num_instances=num_instances)
    failed = [c for c in checks if not c.passed]
    for check in checks:
        mark = "PASS" if check.passed else "FAIL"
        print(f"{mark} {check.name}: {check.detail}")
    print(f"{len(checks) - len(failed)}/{len(checks)} oracle checks passed")
    return 0 if not failed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="secjam",
        description="Minimum-power secure multiuser downlink simulations",
        epilog="Config defaults: 8 transmit antennas, 3 Bobs, 3 Eves, 30 m "
               "cell, 24 dBm access-point / 10 dBm receiver power budgets, "
               "-95 dBm noise, 5260 MHz carrier, antenna gain 4.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a sweep described by a config file",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    run_p.add_argument("--config", required=True, help="INI config file")
    _add_common(run_p)

    for name, descr in (("fig2", "known-CSI scheme comparison"),
                        ("fig3", "statistical-CSI scheme comparison"),
                        ("fig4", "scheduled-subset study")):
        p = sub.add_parser(name, help=descr,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.add_argument("--variants", default=None,
                       help="placement variants to run (subset of 'abcd')")
        _add_common(p)

    audit_p = sub.add_parser("audit", help="re-check a dumped realization")
    audit_p.add_argument("dump", help="realization JSON written with --dump-realizations")

    oracle_p = sub.add_parser("oracle", help="run independent solver cross-checks")
    oracle_p.add_argument("--instances", type=int, default=20)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            config = _apply_overrides(config, args, full_scale=2000)
            _run_single(config)
            return 0
        if args.command == "fig2":
            return _run_preset(fig2_configs, args, full_scale=2000)
        if args.command == "fig3":
            return _run_preset(fig3_configs, args, full_scale=2000)
        if args.command == "fig4":
            return _run_preset(fig4_configs, args, full_scale=3000)
        if args.command == "audit":
            return _cmd_audit(args.dump)
        if args.command == "oracle":
            return _cmd_oracle(args.instances)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
