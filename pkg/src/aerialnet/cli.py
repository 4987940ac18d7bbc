"""``aerialnet`` command line.

Every subcommand reads an optional JSON config (the scenario format, with a
section per command), applies ``--set key=value`` overrides and writes plain
text tables whose ``#`` header lines echo every effective parameter.

Exit codes: 0 success, 2 invalid arguments or config, 3 malformed input data.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import deployment, linkbudget, rem, sensing
from ._accel import backend_name
from .errors import DomainError, ReportError, ScenarioError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

_LINK_KEYS = {
    "carrier_freq_hz": 795.5e6,
    "bandwidth_hz": 10e6,
    "tx_power_dbm": 30.0,
    "tx_antenna_gain_dbi": 3.0,
    "ue_antenna_gain_dbi": 0.0,
    "ue_noise_figure_db": 7.0,
    "fading_margin_db": 4.0,
    "temperature_k": 293.15,
}

SCHEMAS = {
    "coverage": {
        **_LINK_KEYS,
        "altitude_m": 300.0,
        "x_m": 0.0,
        "y_m": 0.0,
        "half_extent_m": 8000.0,
        "spacing_m": 40.0,
        "levels": [20.0, 25.0, 30.0, 35.0, 40.0],
        "max_cells": linkbudget.DEFAULT_MAX_CELLS,
        "workers": 1,
    },
    "roc": {
        "n_samples": 10,
        "noise_power": 1.0,
        "snr_linear": 1.0,
        "k_nodes": [1, 2, 4, 8],
        "rules": ["OR"],
        "pfa_points": [round(0.01 * i, 2) for i in range(1, 100)],
        "simulate": False,
        "trials": 100_000,
    },
    "fuse": {
        "k_nodes": 2,
        "p_d": 0.9,
        "p_fa": 0.1,
    },
    "rem": {
        "rule": "OR",
        "horizon_s": rem.DEFAULT_HORIZON_S,
        "threshold_dbm": rem.DEFAULT_ENERGY_THRESHOLD_DBM,
        "thresholds_dbm": {},
        "channels": [],
        "map": False,
        "map_spacing_m": 10.0,
        "map_margin_m": 100.0,
    },
    "scenario": {
        "workers": 1,
    },
}


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


# -- config handling --------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _coerce(key, value, default):
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                if value.lower() not in {"true", "false", "1", "0"}:
                    raise ValueError
                return value.lower() in {"true", "1"}
            return bool(value)
        if isinstance(default, int):
            out = int(value)
            if out != float(value):
                raise ValueError
            return out
        if isinstance(default, float):
            if isinstance(value, bool):
                raise ValueError
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
            return out
        if isinstance(default, list):
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            if not isinstance(value, list):
                value = [value]
            if default:
                return [_coerce(key, v, default[0]) for v in value]
            return list(value)
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ValueError
            return dict(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key!r}: {value!r}") from None


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def effective_params(command: str, config: dict, overrides) -> dict:
    """Schema defaults < config ``defaults`` < config section < ``--set``."""
    schema = SCHEMAS[command]
    params = dict(schema)
    section = config.get(command, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {command!r} must be an object")
    shared = {k: v for k, v in config.get("defaults", {}).items() if k in schema}
    for source in (shared, section):
        for k, v in source.items():
            if k not in schema:
                raise ConfigError(f"unknown {command} parameter {k!r}")
            params[k] = _coerce(k, v, schema[k])
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if k not in schema:
            raise ConfigError(f"unknown {command} parameter {k!r}")
        params[k] = _coerce(k, _parse_value(v.strip()), schema[k])
    return params


def _header(command, args, params) -> dict:
    head = {"command": command, "seed": args.seed}
    head.update({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                 for k, v in params.items()})
    return head


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# -- commands ---------------------------------------------------------------

def cmd_coverage(args, config) -> int:
    params = effective_params("coverage", config, args.set)
    if args.levels is not None:
        params["levels"] = _coerce("levels", args.levels, SCHEMAS["coverage"]["levels"])
    try:
        lb = linkbudget.LinkBudgetParams(**{k: params[k] for k in _LINK_KEYS})
        platform = linkbudget.AerialPlatform((params["x_m"], params["y_m"]), params["altitude_m"])
        grid = linkbudget.snr_grid(platform, lb, params["half_extent_m"], params["spacing_m"],
                                   max_cells=params["max_cells"], workers=params["workers"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    head = _header("coverage", args, params)
    head["thermal_noise_dbm"] = f"{linkbudget.thermal_noise_dbm(lb.bandwidth_hz, lb.temperature_k):.6f}"
    head["nadir_snr_db"] = f"{linkbudget.snr_db(lb, platform.altitude_m):.6f}"
    out = Path(args.out)
    _write(out / "snr_grid.csv", grid.to_text(head))
    written = [out / "snr_grid.csv"]
    if params["levels"]:
        isolines = linkbudget.extract_isolines(grid, params["levels"])
        _write(out / "isolines.txt", linkbudget.isolines_to_text(isolines, head))
        written.append(out / "isolines.txt")
    for p in written:
        print(p)
    return EXIT_OK


def cmd_roc(args, config) -> int:
    params = effective_params("roc", config, args.set)
    if args.simulate:
        params["simulate"] = True
    try:
        det = sensing.EnergyDetector(params["n_samples"], params["noise_power"])
        rules = [sensing.FusionRule.parse(r) for r in params["rules"]]
        curves = {(k, r): sensing.roc_curve(det, k, params["snr_linear"], r, params["pfa_points"])
                  for k in params["k_nodes"] for r in rules}
        if params["simulate"] and params["trials"] < 1:
            raise DomainError("trials must be >= 1")
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    extra = ()
    if params["simulate"]:
        sim_pfa, sim_pd = {}, {}
        for idx, ((k, r), pts) in enumerate(curves.items()):
            sim_pfa[(k, r)], sim_pd[(k, r)] = [], []
            for j, pt in enumerate(pts):
                if not pt.reachable:
                    sim_pfa[(k, r)].append(math.nan)
                    sim_pd[(k, r)].append(math.nan)
                    continue
                stream = 1000 + 2 * (idx * len(pts) + j)
                kw = dict(k_nodes=k, rule=r, seed=args.seed)
                sim_pfa[(k, r)].append(sensing.simulate_detection(
                    det, pt.threshold, 0.0, params["trials"], stream=stream, **kw))
                sim_pd[(k, r)].append(sensing.simulate_detection(
                    det, pt.threshold, params["snr_linear"], params["trials"],
                    stream=stream + 1, **kw))
        extra = (("sim_global_pfa", sim_pfa), ("sim_global_pd", sim_pd))
    path = Path(args.out) / "roc.csv"
    _write(path, sensing.roc_to_text(curves, _header("roc", args, params), extra_columns=extra))
    print(path)
    return EXIT_OK


def cmd_fuse(args, config) -> int:
    params = effective_params("fuse", config, args.set)
    try:
        rows = []
        for rule in sensing.FusionRule:
            model = sensing.FusionModel(params["k_nodes"], params["p_d"], params["p_fa"], rule)
            rows.append((rule.value, *sensing.fusion_probs_closed_form(model)))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    lines = [f"# {k}={v}" for k, v in _header("fuse", args, params).items()]
    lines.append("rule,miss,false_alarm")
    lines.extend(f"{r},{m:.6f},{f:.6f}" for r, m, f in rows)
    print("\n".join(lines))
    return EXIT_OK


def cmd_rem(args, config) -> int:
    params = effective_params("rem", config, args.set)
    if args.map:
        params["map"] = True
    if args.input is None:
        raise ConfigError("rem needs --input <report file>")
    try:
        rule = sensing.FusionRule.parse(params["rule"])
        store = rem.ReportStore(horizon_s=params["horizon_s"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    try:
        reports = rem.read_reports(args.input)
    except OSError as exc:
        raise DataError(f"cannot read report file {args.input}: {exc.strerror}") from None
    except ReportError as exc:
        raise DataError(str(exc)) from None
    for r in reports:
        store.ingest(r)
    table = rem.build_occupancy_table(
        store, rule, params["horizon_s"], channels=params["channels"],
        thresholds_dbm=params["thresholds_dbm"], default_threshold_dbm=params["threshold_dbm"])
    head = _header("rem", args, params)
    head["input"] = args.input
    out = Path(args.out)
    written = [out / "occupancy.csv"]
    _write(written[0], table.to_text(head))
    if params["map"]:
        snap = store.snapshot()
        xs = [r.position[0] for r in snap]
        ys = [r.position[1] for r in snap]
        margin, step = params["map_margin_m"], params["map_spacing_m"]
        if not step > 0 or margin < 0:
            raise ConfigError("map_spacing_m must be positive and map_margin_m non-negative")
        x0, y0 = min(xs) - margin, min(ys) - margin
        spec = rem.GridSpec((x0, y0), step,
                            int(math.floor((max(xs) + margin - x0) / step)) + 1,
                            int(math.floor((max(ys) + margin - y0) / step)) + 1)
        channels = sorted({r.channel_id for r in snap}, key=rem.id_key)
        for ch in channels:
            grid = rem.interpolate_map(store, ch, spec, params["horizon_s"])
            path = out / f"rem_channel_{ch}.csv"
            _write(path, rem.map_to_text(grid, {**head, "channel_id": ch}))
            written.append(path)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_scenario(args, config) -> int:
    params = effective_params("scenario", config, args.set)
    source = args.input or args.config
    if source is None:
        raise ConfigError("scenario needs --config or --input <scenario.json>")
    data = config if args.input is None else load_config(args.input)
    try:
        scenario = deployment.Scenario.from_dict(data)
        report = deployment.evaluate_scenario(scenario, workers=params["workers"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    head = {"command": "scenario", "seed": args.seed, "input": source}
    path = Path(args.out) / "scenario_report.csv"
    _write(path, report.to_text(head))
    print(path)
    return EXIT_OK


COMMANDS = {
    "coverage": cmd_coverage,
    "roc": cmd_roc,
    "fuse": cmd_fuse,
    "rem": cmd_rem,
    "scenario": cmd_scenario,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config / scenario file")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a parameter (repeatable)")

    parser = argparse.ArgumentParser(prog="aerialnet", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s ({backend_name()} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coverage", parents=[common], help="SNR grid and isolines of an airborne cell")
    p.add_argument("--levels", help="comma-separated isoline levels in dB; empty for none")

    p = sub.add_parser("roc", parents=[common], help="cooperative energy-detection ROC curves")
    p.add_argument("--simulate", action="store_true", help="add Monte Carlo columns")

    sub.add_parser("fuse", parents=[common], help="closed-form fusion probabilities per rule")

    p = sub.add_parser("rem", parents=[common], help="occupancy table and power maps from reports")
    p.add_argument("--input", help="report file")
    p.add_argument("--map", action="store_true", help="also write interpolated power maps")

    p = sub.add_parser("scenario", parents=[common], help="evaluate a deployment scenario")
    p.add_argument("--input", help="scenario JSON (defaults to --config)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed < 0:
        parser.error("--seed must be non-negative")
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except (ConfigError, ScenarioError) as exc:
        print(f"aerialnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"aerialnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
