"""Command-line driver: ``pdola calibrate``, ``pdola simulate`` and ``pdola gains``.

Exit codes: 0 success, 2 configuration error, 3 calibrated MCS table missing,
4 ON/OFF results without their partner.  The default output directory is
``$PDOLA_OUTPUT_DIR`` (falling back to ``./pdola_out``); ``--output-dir`` and
the config's ``output.dir`` take precedence in that order.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from importlib import metadata
from pathlib import Path

from . import config as cfgmod
from .exceptions import CalibrationError, InvalidParameterError
from .link_simulator import Adaptation, read_results_csv, run_scenario, throughput_gain, write_results_csv
from .mcs_mapping import McsTable, calibrate, load_base_table

log = logging.getLogger("pdola")

EXIT_OK, EXIT_CONFIG, EXIT_NO_TABLE, EXIT_UNPAIRED = 0, 2, 3, 4
OUTPUT_ENV = "PDOLA_OUTPUT_DIR"
GAINS_FILE = "gains.csv"


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _output_dir(args, cfg) -> Path:
    chosen = args.output_dir or cfg["output"]["dir"] or os.environ.get(OUTPUT_ENV) or "pdola_out"
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args) -> dict:
    if args.config is None and args.preset is None:
        raise cfgmod.ConfigError("<args>", "give a config file or --preset")
    cfg = cfgmod.load_config(args.config, args.preset) if args.config else cfgmod.resolve(None, args.preset)
    if args.seed is not None:
        if args.seed < 0:
            raise cfgmod.ConfigError("--seed", "must be >= 0")
        cfg["calibration" if args.command == "calibrate" else "simulation"]["seed"] = args.seed
    return cfg


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    out = _output_dir(args, cfg)
    cal = cfg["calibration"]
    try:
        result = calibrate(
            load_base_table(), cfgmod.error_model(cfg), cal["target_bler"], cal["tol"], cal["drops"], cal["seed"]
        )
    except CalibrationError as exc:
        log.error("%s: %s", exc, json.dumps(exc.diagnostics, default=str))
        return EXIT_CONFIG
    table_path = out / cfg["output"]["table"]
    result.table.save(table_path)
    report = {
        "table": table_path.name,
        "target_bler": result.target_bler,
        "drops": result.drops,
        "seed": cal["seed"],
        "error_model": {"kind": "logistic", "slope": cal["slope"], "gap": cal["gap"]},
        "thresholds": [round(float(t), 10) for t in result.thresholds],
        "achieved_bler": [round(float(b), 10) for b in result.achieved_bler],
        "raw_thresholds": [round(float(t), 10) for t in result.diagnostics["raw_thresholds"]],
    }
    _dump_json(table_path.with_suffix(".report.json"), report)
    print(f"wrote {table_path} ({len(result.table)} MCS entries)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _output_dir(args, cfg)
    table_path = Path(args.table) if args.table else out / cfg["output"]["table"]
    if not table_path.is_file():
        log.error("calibrated MCS table %s not found; run 'pdola calibrate' first", table_path)
        return EXIT_NO_TABLE
    table = McsTable.load(table_path)

    started = time.perf_counter()
    scenarios = cfgmod.scenarios(cfg)
    by_id: dict = {}
    for sc in scenarios:
        log.info("running %s %s (%d drops x %d SNRs)", sc.scenario_id, sc.adaptation.value, sc.drops, len(sc.snr_grid_db))
        by_id.setdefault(sc.scenario_id, []).append(run_scenario(sc, table))

    outputs = []
    for sid, results in by_id.items():
        path = out / f"{sid}.csv"
        write_results_csv(path, results)
        outputs.append(path)
        if args.svg:
            from .plotting import write_svg

            outputs.append(write_svg(out / f"{sid}.svg", results))
    manifest = {
        "version": _version(),
        "config": cfg,
        "seed": cfg["simulation"]["seed"],
        "mcs_table": {"path": str(table_path), "sha256": _sha256(table_path)},
        "outputs": {p.name: _sha256(p) for p in outputs},
        "duration_s": round(time.perf_counter() - started, 3),
    }
    name = cfg["scenario"]["name"]
    _dump_json(out / f"{name}.manifest.json", manifest)
    for p in outputs:
        print(f"wrote {p}")
    return EXIT_OK


def _setting(scenario_id: str) -> str:
    head, sep, _ = scenario_id.rpartition("_pdo")
    return head if sep else scenario_id


def _fmt_gain(g: float) -> str:
    return "inf" if math.isinf(g) else f"{100.0 * g:.1f}%"


def cmd_gains(args) -> int:
    root = Path(args.results_dir)
    if not root.is_dir():
        log.error("results directory %s does not exist", root)
        return EXIT_CONFIG
    pairs: dict = {}
    for path in sorted(root.glob("*.csv")):
        if path.name == GAINS_FILE:
            continue
        for res in read_results_csv(path):
            pairs.setdefault(res.scenario_id, {})[res.adaptation] = res
    if not pairs:
        log.error("no result CSVs in %s", root)
        return EXIT_UNPAIRED
    missing = [
        f"{sid}: missing {mode.value}" for sid, modes in sorted(pairs.items()) for mode in Adaptation if mode not in modes
    ]
    if missing:
        log.error("unpaired results:\n  %s", "\n  ".join(missing))
        return EXIT_UNPAIRED

    rows = []
    for sid, modes in pairs.items():
        on, off = modes[Adaptation.ON], modes[Adaptation.OFF]
        rows.append((_setting(sid), on.pdo_db, sid, throughput_gain(on, off)))
    rows.sort(key=lambda r: (r[0], r[1]))

    with open(root / GAINS_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario_id", "setting", "pdo_db", "gain"])
        for setting, pdo, sid, g in rows:
            w.writerow([sid, setting, f"{pdo:g}", "inf" if math.isinf(g) else f"{g:.10g}"])

    pdos = sorted({r[1] for r in rows})
    settings = sorted({r[0] for r in rows})
    lookup = {(r[0], r[1]): r[3] for r in rows}
    width = max(len(s) for s in settings + ["setting"])
    print("Average throughput gain of PDO adaptation (ON vs OFF)")
    print(f"{'setting':<{width}}" + "".join(f"{f'PDO {p:+g} dB':>14}" for p in pdos))
    for s in settings:
        cells = "".join(f"{_fmt_gain(lookup[(s, p)]) if (s, p) in lookup else '-':>14}" for p in pdos)
        print(f"{s:<{width}}{cells}")
    print(f"wrote {root / GAINS_FILE}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdola", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", nargs="?", help="YAML scenario config")
        p.add_argument("--preset", help="start from a named preset, e.g. setting1 or setting1_pdo+3")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or ./pdola_out)")

    common(sub.add_parser("calibrate", help="calibrate MI thresholds of the MCS table"))
    sim = sub.add_parser("simulate", help="run BLER/throughput curves with adaptation ON and OFF")
    common(sim)
    sim.add_argument("--table", help="calibrated MCS table (default: <output-dir>/<output.table>)")
    sim.add_argument("--svg", action="store_true", help="also write an SVG plot per scenario")
    gains = sub.add_parser("gains", help="tabulate ON-vs-OFF throughput gains from result CSVs")
    gains.add_argument("results_dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"calibrate": cmd_calibrate, "simulate": cmd_simulate, "gains": cmd_gains}[args.command]
    try:
        return handler(args)
    except InvalidParameterError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
