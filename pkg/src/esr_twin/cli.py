"""Virtual CW ESR spectrometer: sensitivity tables, sweeps and noise budgets.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CalibrationRangeError, ConfigError, DomainError
from .config import RunConfig, list_presets, load_config
from .io import matrix_csv, spectrum_csv, write_manifest, write_text
from .sensitivity import (apply_ledger, cumulative_ledger, sensitivity_table,
                          spin_sensitivity, table_to_csv)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("esr_twin")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _add_common(p):
    p.add_argument("--config", type=Path, help="YAML run configuration (or a run manifest)")
    p.add_argument("--preset", help=f"bundled configuration: {', '.join(list_presets())}")
    p.add_argument("--seed", type=int, help="override the master RNG seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--no-noise", action="store_true", help="disable additive noise")
    p.add_argument("--workers", type=int, help="threads for sweep points (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="esr-twin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"esr-twin {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sensitivity-table", help="theoretical N_min over B0 x T")
    _add_common(p)
    p.set_defaults(func=cmd_sensitivity_table)

    p = sub.add_parser("sweep", help="run a virtual field, frequency or 2D sweep")
    _add_common(p)
    p.add_argument("--mode", choices=("field", "frequency", "2d"),
                   help="sweep type (default: from the config)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("noise-budget", help="degrade the theoretical N_min by a dB ledger")
    _add_common(p)
    p.set_defaults(func=cmd_noise_budget)
    return parser


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config, args.preset)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["output_dir"] = str(args.out)
    if args.no_noise:
        over["sweep.noise"] = False
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    if getattr(args, "mode", None):
        over["sweep.mode"] = args.mode
    return cfg.override(**over) if over else cfg


def _reproducible(cfg: RunConfig) -> dict:
    # worker count never changes results, so it is not part of the recipe
    d = cfg.to_dict()
    d["workers"] = None
    return d


def cmd_sensitivity_table(args) -> int:
    cfg = _resolve(args)
    tb = cfg["table"]
    if not tb["fields_T"] or not tb["temperatures_K"]:
        raise ConfigError("table: fields_T and temperatures_K must both be non-empty")
    fields, temps = tb["fields_T"], tb["temperatures_K"]
    grid = sensitivity_table(fields, temps, tb["R_ohm"], tb["d_mm"] * 1e-3, cfg.constants())
    out = Path(cfg["output_dir"])
    outputs = {
        "sensitivity_table.csv": write_text(out / "sensitivity_table.csv",
                                            table_to_csv(fields, temps, grid)),
        "sensitivity_table_full.csv": write_text(out / "sensitivity_table_full.csv",
                                                 table_to_csv(fields, temps, grid, full_precision=True)),
    }
    write_manifest(out / "sensitivity_table.manifest.json", "sensitivity-table",
                   _reproducible(cfg), outputs)
    print(f"N_min (spins/sqrt(Hz)), R = {tb['R_ohm']:g} ohm, d = {tb['d_mm']:g} mm")
    print("B0 [T] \\ T [K]".ljust(16) + "".join(f"{t:>12g}" for t in temps))
    for b, row in zip(fields, grid):
        print(f"{b:<16g}" + "".join(f"{v:>12.2e}" for v in row))
    print(f"wrote {out / 'sensitivity_table.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import crossing_locus, extract_pp_linewidth, run_sweep
    from .errors import NoLineFound

    cfg = _resolve(args)
    sw = cfg["sweep"]
    if sw["excitation_pct"] is None and sw["frequency_GHz"] is None:
        raise ConfigError("sweep: no axis configured (excitation_pct and/or frequency_GHz)")
    plan = cfg.plan()
    exp = cfg.experiment()
    spec = run_sweep(plan, exp, workers=cfg["workers"])
    out = Path(cfg["output_dir"])
    stem = f"sweep_{plan.mode}"
    outputs = {f"{stem}.csv": write_text(out / f"{stem}.csv", spectrum_csv(spec))}
    summary = {"points": int(np.size(spec.I))}
    if spec.is_2d:
        outputs[f"{stem}_matrix.csv"] = write_text(out / f"{stem}_matrix.csv", matrix_csv(spec))
        nu, E = crossing_locus(spec)
        if len(nu) >= 2:
            slope, icpt = np.polyfit(E, nu * 1e-9, 1)
            summary.update(locus_slope_GHz_per_pct=float(slope), locus_intercept_GHz=float(icpt),
                           locus_columns=len(nu))
    else:
        summary["zero_crossing"] = spec.metadata.get("zero_crossing")
        try:
            summary["pp_width_axis_units"] = extract_pp_linewidth(spec)
        except NoLineFound:
            summary["pp_width_axis_units"] = None
    write_manifest(out / f"{stem}.manifest.json", "sweep", _reproducible(cfg), outputs,
                   extra={"plan": spec.metadata["plan"], "derived": spec.metadata["derived"],
                          "seed": plan.rng_seed, "summary": summary})
    print(f"{plan.mode} sweep: {summary['points']} points, seed {plan.rng_seed}, "
          f"noise {'on' if plan.noise_enabled else 'off'}")
    for k, v in summary.items():
        if k != "points":
            print(f"  {k}: {v}")
    for flag in spec.metadata.get("flags", []):
        print(f"  warning: {flag}")
    print(f"wrote {out / (stem + '.csv')}")
    return EXIT_OK


def cmd_noise_budget(args) -> int:
    cfg = _resolve(args)
    b = cfg["budget"]
    ledger = cfg.ledger()
    theory = spin_sensitivity(b["B0_T"], b["temperature_K"], b["R_ohm"], b["d_mm"] * 1e-3,
                              cfg.constants())
    print(f"theoretical N_min at B0 = {b['B0_T']:g} T, T = {b['temperature_K']:g} K, "
          f"R = {b['R_ohm']:g} ohm, d = {b['d_mm']:g} mm: {theory:.3e} spins/sqrt(Hz)")
    rows = cumulative_ledger(theory, ledger)
    if rows:
        w = max(len(r["stage"]) for r in rows)
        print(f"  {'stage'.ljust(w)}  {'dB':>6}  {'cum dB':>7}  {'N_min':>10}")
        for r in rows:
            print(f"  {r['stage'].ljust(w)}  {r['dB']:>6.2f}  {r['cumulative_dB']:>7.2f}  {r['n_min']:>10.3e}")
    print(f"total degradation: {ledger.total_db:.2f} dB, coupling efficiency {ledger.coupling_efficiency:g}")
    print(f"degraded N_min: {apply_ledger(theory, ledger):.3e} spins/sqrt(Hz)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CalibrationRangeError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
