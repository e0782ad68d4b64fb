"""Scenario configuration files and named presets.

A config is a YAML mapping with the sections ``scenario``, ``channel``,
``grid``, ``power``, ``adaptation``, ``simulation``, ``calibration`` and
``output``.  Every section is optional; missing keys fall back to
``DEFAULTS``.  ``scenario.preset`` (or the CLI ``--preset`` flag) starts from
one of ``PRESETS`` before the file's own values are applied.

Two settings are predefined:
``setting1`` is 4x4 EPA5 with comb-4 SRS, ``setting2`` is 2x2 EVA20 with
comb-2 SRS.  A suffix such as ``_pdo+3`` or ``_pdo-10`` pins a single PDO.
"""

from __future__ import annotations

import copy
import math
import re
from pathlib import Path

import yaml

from .channel_model import GridConfig, load_profiles, preset as channel_preset
from .exceptions import InvalidParameterError
from .link_simulator import Adaptation, Scenario
from .mcs_mapping import LogisticErrorModel
from .power_control import DynamicPowerState, Kind, PowerParams, TxRecord, compute_pdo, tx_power

__all__ = ["ConfigError", "DEFAULTS", "PRESETS", "load_config", "resolve", "scenarios", "error_model", "power_pdo"]

DEFAULTS = {
    "scenario": {"name": "custom", "preset": None},
    "channel": {"model": "EPA5", "n_tx": 4, "n_rx": 4},
    "grid": {
        "n_rbg": 8,
        "rbs_per_rbg": 4,
        "subcarrier_spacing_hz": 30000.0,
        "srs_comb": 4,
        "srs_symbols": 4,
    },
    "power": None,
    "adaptation": {"modes": ["ON", "OFF"], "alpha_scale": math.sqrt(10.0), "clamp": True},
    "simulation": {
        "pdo_db": [3.0, -3.0],
        "snr_grid_db": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        "drops": 500,
        "seed": 1,
        "pusch_rbgs": [0, 1],
        "k2": 3,
        "srs_to_pusch_slots": 4,
        "data_symbols": 12,
    },
    "calibration": {
        "target_bler": 0.1,
        "tol": 0.01,
        "drops": 20000,
        "seed": 0,
        "slope": 0.2,
        "gap": 0.1,
    },
    "output": {"dir": None, "table": "mcs_table.txt"},
}

PRESETS = {
    "setting1": {
        "scenario": {"name": "setting1"},
        "channel": {"model": "EPA5", "n_tx": 4, "n_rx": 4},
        "grid": {"srs_comb": 4},
    },
    "setting2": {
        "scenario": {"name": "setting2"},
        "channel": {"model": "EVA20", "n_tx": 2, "n_rx": 2},
        "grid": {"srs_comb": 2},
    },
    # full-band scale: 68 SRS RBGs
    "setting1_full": {
        "scenario": {"name": "setting1_full"},
        "channel": {"model": "EPA5", "n_tx": 4, "n_rx": 4},
        "grid": {"srs_comb": 4, "n_rbg": 68},
    },
    "setting2_full": {
        "scenario": {"name": "setting2_full"},
        "channel": {"model": "EVA20", "n_tx": 2, "n_rx": 2},
        "grid": {"srs_comb": 2, "n_rbg": 68},
    },
}

_POWER_KEYS = {"p_cmax_dbm", "p_o_dbm", "alpha_pc", "mu", "n_rb", "n_re_per_rb", "delta_tf_db", "closed_loop_db"}
_PRESET_RE = re.compile(r"^(?P<base>[a-z0-9_]+?)(?:_pdo(?P<pdo>[+-]?\d+(?:\.\d+)?))?$")


class ConfigError(InvalidParameterError):
    """Invalid configuration; ``field`` is the dotted key, ``line`` 1-based when known."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field, self.line = field, line
        where = f" (line {line})" if line else ""
        super().__init__(f"{field}{where}: {message}")


def _deep_update(base: dict, extra: dict) -> dict:
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = copy.deepcopy(v)
    return base


def _line_index(text: str) -> dict:
    """Dotted key path -> 1-based line number of that key in the YAML text."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                lines[path] = key.start_mark.line + 1
                walk(value, path)

    try:
        walk(yaml.compose(text), "")
    except yaml.YAMLError:
        pass
    return lines


def _preset(name: str) -> dict:
    m = _PRESET_RE.match(name)
    if not m or m["base"] not in PRESETS:
        raise ConfigError("scenario.preset", f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    cfg = copy.deepcopy(PRESETS[m["base"]])
    if m["pdo"] is not None:
        cfg.setdefault("simulation", {})["pdo_db"] = [float(m["pdo"])]
        cfg["scenario"]["name"] = name
    return cfg


def resolve(user: dict | None = None, preset: str | None = None, lines: dict | None = None) -> dict:
    """Merge defaults, an optional preset and user values, then validate."""
    user = copy.deepcopy(user or {})
    lines = lines or {}
    if not isinstance(user, dict):
        raise ConfigError("<root>", "config must be a mapping of sections")
    for section, body in user.items():
        if section not in DEFAULTS:
            raise ConfigError(section, f"unknown section; expected one of {sorted(DEFAULTS)}", lines.get(section))
        if body is not None and not isinstance(body, dict):
            raise ConfigError(section, "section must be a mapping", lines.get(section))
        if DEFAULTS[section] is not None and body:
            for key in body:
                if key not in DEFAULTS[section]:
                    raise ConfigError(f"{section}.{key}", "unknown key", lines.get(f"{section}.{key}"))

    cfg = copy.deepcopy(DEFAULTS)
    preset = preset or (user.get("scenario") or {}).get("preset")
    if preset:
        _deep_update(cfg, _preset(preset))
        cfg["scenario"]["preset"] = preset
    _deep_update(cfg, user)
    _validate(cfg, lines)
    return cfg


def load_config(path, preset: str | None = None) -> dict:
    """Read and validate a YAML scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from None
    try:
        user = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<yaml>", str(exc).splitlines()[0], mark.line + 1 if mark else None) from None
    return resolve(user, preset, _line_index(text))


def _validate(cfg: dict, lines: dict) -> None:
    def fail(field, msg):
        raise ConfigError(field, msg, lines.get(field))

    def number(field, value, lo=-math.inf, hi=math.inf, integer=False, lo_open=False, hi_open=False):
        kind = int if integer else (int, float)
        if isinstance(value, bool) or not isinstance(value, kind):
            fail(field, f"expected {'an integer' if integer else 'a number'}, got {value!r}")
        if not math.isfinite(value):
            fail(field, "must be finite")
        if value < lo or value > hi or (lo_open and value == lo) or (hi_open and value == hi):
            lo_b, hi_b = "(" if lo_open else "[", ")" if hi_open else "]"
            fail(field, f"{value} outside {lo_b}{lo}, {hi}{hi_b}")

    ch, grid, sim, cal, ad = cfg["channel"], cfg["grid"], cfg["simulation"], cfg["calibration"], cfg["adaptation"]
    base = str(ch["model"]).rstrip("0123456789.")
    if base not in load_profiles():
        fail("channel.model", f"unknown channel model {ch['model']!r}")
    for key in ("n_tx", "n_rx"):
        number(f"channel.{key}", ch[key], 1, 8, integer=True)
    if ch["n_tx"] not in (1, 2, 4):
        fail("channel.n_tx", "codebooks exist for 1, 2 or 4 transmit ports only")

    number("grid.n_rbg", grid["n_rbg"], 1, 1000, integer=True)
    number("grid.rbs_per_rbg", grid["rbs_per_rbg"], 1, 16, integer=True)
    number("grid.subcarrier_spacing_hz", grid["subcarrier_spacing_hz"], 0, 1e6, lo_open=True)
    if grid["srs_comb"] not in (2, 4):
        fail("grid.srs_comb", "must be 2 or 4")
    if grid["srs_symbols"] not in (1, 2, 4):
        fail("grid.srs_symbols", "must be 1, 2 or 4")

    modes = ad["modes"]
    if not isinstance(modes, list) or not modes or any(m not in ("ON", "OFF") for m in modes):
        fail("adaptation.modes", "must be a non-empty list drawn from ON, OFF")
    number("adaptation.alpha_scale", ad["alpha_scale"], 1.0, 1e3)
    if not isinstance(ad["clamp"], bool):
        fail("adaptation.clamp", "must be true or false")

    pdos = sim["pdo_db"]
    if pdos is None and cfg["power"] is None:
        fail("simulation.pdo_db", "give a PDO list or a power section to derive it from")
    if pdos is not None:
        if not isinstance(pdos, list) or not pdos:
            fail("simulation.pdo_db", "must be a non-empty list")
        for v in pdos:
            number("simulation.pdo_db", v, -40, 40)
    snrs = sim["snr_grid_db"]
    if not isinstance(snrs, list) or not snrs:
        fail("simulation.snr_grid_db", "must be a non-empty list")
    for v in snrs:
        number("simulation.snr_grid_db", v, -50, 60)
    number("simulation.drops", sim["drops"], 1, 10**7, integer=True)
    number("simulation.seed", sim["seed"], 0, 2**63 - 1, integer=True)
    number("simulation.k2", sim["k2"], 0, 32, integer=True)
    number("simulation.srs_to_pusch_slots", sim["srs_to_pusch_slots"], sim["k2"] + 1, 1000, integer=True)
    number("simulation.data_symbols", sim["data_symbols"], 1, 14, integer=True)
    rbgs = sim["pusch_rbgs"]
    if not isinstance(rbgs, list) or not rbgs or any(
        isinstance(b, bool) or not isinstance(b, int) or not 0 <= b < grid["n_rbg"] for b in rbgs
    ):
        fail("simulation.pusch_rbgs", f"must list RBG indices in [0, {grid['n_rbg']})")

    number("calibration.target_bler", cal["target_bler"], 0, 1, lo_open=True, hi_open=True)
    number("calibration.tol", cal["tol"], 0, 1, lo_open=True)
    number("calibration.drops", cal["drops"], 1, 10**8, integer=True)
    number("calibration.seed", cal["seed"], 0, 2**63 - 1, integer=True)
    number("calibration.slope", cal["slope"], 0, 10, lo_open=True)
    number("calibration.gap", cal["gap"], -5, 5)

    power = cfg["power"]
    if power is not None:
        for key in ("pusch", "srs"):
            if not isinstance(power.get(key), dict):
                fail(f"power.{key}", "missing or not a mapping")
            extra = set(power[key]) - _POWER_KEYS
            if extra:
                fail(f"power.{key}.{sorted(extra)[0]}", "unknown key")
        try:
            power_pdo(power)
        except (InvalidParameterError, KeyError, TypeError) as exc:
            fail("power", str(exc))


def power_pdo(power: dict) -> float:
    """PDO implied by the PUSCH and SRS power control settings of a config."""
    pathloss = power.get("pathloss_db", 0.0)
    records = []
    for kind, key in ((Kind.PUSCH, "pusch"), (Kind.SRS, "srs")):
        p = power[key]
        params = PowerParams(p["p_cmax_dbm"], p["p_o_dbm"], p.get("alpha_pc", 1.0), p.get("mu", 0))
        state = DynamicPowerState(pathloss, p.get("delta_tf_db", 0.0) if kind is Kind.PUSCH else 0.0,
                                  p.get("closed_loop_db", 0.0))
        n_rb = p["n_rb"]
        records.append(TxRecord(0, kind, tx_power(params, state, n_rb), n_rb, p["n_re_per_rb"]))
    return compute_pdo(*records)


def error_model(cfg: dict) -> LogisticErrorModel:
    cal = cfg["calibration"]
    return LogisticErrorModel(slope=float(cal["slope"]), gap=float(cal["gap"]))


def scenarios(cfg: dict) -> list[Scenario]:
    """One ``Scenario`` per (PDO, adaptation mode) in the config."""
    ch, g, sim, ad = cfg["channel"], cfg["grid"], cfg["simulation"], cfg["adaptation"]
    profile = channel_preset(ch["model"], ch["n_tx"], ch["n_rx"])
    grid = GridConfig(g["n_rbg"], g["rbs_per_rbg"], float(g["subcarrier_spacing_hz"]), g["srs_comb"], g["srs_symbols"])
    pdos = sim["pdo_db"] if sim["pdo_db"] is not None else [power_pdo(cfg["power"])]
    base = cfg["scenario"]["name"]
    out = []
    for pdo in pdos:
        for mode in ad["modes"]:
            out.append(
                Scenario(
                    profile,
                    grid,
                    float(pdo),
                    tuple(float(s) for s in sim["snr_grid_db"]),
                    Adaptation(mode),
                    sim["drops"],
                    sim["seed"],
                    name=base if len(pdos) == 1 and "_pdo" in base else f"{base}_pdo{float(pdo):+g}",
                    pusch_rbgs=tuple(sim["pusch_rbgs"]),
                    alpha_scale=float(ad["alpha_scale"]),
                    clamp=ad["clamp"],
                    data_symbols=sim["data_symbols"],
                    k2=sim["k2"],
                    srs_to_pusch_slots=sim["srs_to_pusch_slots"],
                    error_model=error_model(cfg),
                )
            )
    return out
