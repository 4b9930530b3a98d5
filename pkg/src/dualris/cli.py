"""Command line front end: config ingestion, CSV emission, subcommands.

Exit codes: 0 success, 2 configuration error, 3 calibration failure,
4 infeasible optimization. Output files are written via a temporary file and
an atomic rename, so partial files are never left behind.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import os
import sys
import tempfile
from datetime import datetime, timezone

from . import __version__
from .channels import OpticalParams, RfParams
from .experiments import (
    CalibrationAnchors,
    CalibrationError,
    RunConfig,
    SweepSpec,
    build_channel_state,
    calibrate,
    chi_square_uniform,
    delta_metrics,
    evaluate_point,
    phase_histogram,
    sweep_elevation,
    _solve_point,
)
from .geometry import GeometryParams
from .metrics import Calibration, CostWeights
from .qubo import build_qubo, export_qubo
from .ris import RisConfig
from .solvers import SolverConfig, trace_csv_lines

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CALIBRATION = 3
EXIT_INFEASIBLE = 4

SWEEP_COLUMNS = ("elevation_deg", "n_elements", "snr_db", "ber", "qber",
                 "skr_bits_s", "cost", "feasible", "solver_evals",
                 "dsnr_db", "dqber_pp")
HISTOGRAM_COLUMNS = ("att", "quantum_bin", "classical_bin", "count")


class ConfigError(ValueError):
    pass


_SECTION_TYPES = {
    "geometry": GeometryParams,
    "optical": OpticalParams,
    "rf": RfParams,
    "ris": RisConfig,
    "weights": CostWeights,
    "solver": SolverConfig,
    "sweep": SweepSpec,
}
_RUN_KEYS = ("seed", "output_dir")


def _parse_scalar(raw: str, typ) -> object:
    raw = raw.strip()
    if typ is float or typ == "float":
        return float(raw)
    if typ is int or typ == "int":
        return int(raw)
    if typ is bool or typ == "bool":
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def _parse_sequence(raw: str, item_type) -> tuple:
    raw = raw.strip()
    if ":" in raw and "," not in raw:   # start:stop:step inclusive grid
        parts = [float(p) for p in raw.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"bad range spec {raw!r}")
        start, stop, step = parts
        count = int(round((stop - start) / step)) + 1
        values = [start + i * step for i in range(count) if start + i * step <= stop + 1e-9]
        return tuple(item_type(v) for v in values)
    return tuple(item_type(_parse_scalar(p, float)) for p in raw.split(",") if p.strip())


def _coerce_field(field: dataclasses.Field, raw: str):
    typ = field.type
    if "tuple" in str(typ):
        item = int if "int" in str(typ) else float
        return _parse_sequence(raw, item)
    if "int" in str(typ) and "float" not in str(typ):
        return _parse_scalar(raw, int)
    if "float" in str(typ):
        return _parse_scalar(raw, float)
    if "bool" in str(typ):
        return _parse_scalar(raw, bool)
    if "None" in str(typ):  # optional float (initial_temp)
        return None if raw.strip().lower() in ("none", "") else float(raw)
    return raw.strip()


def load_config(path: str) -> RunConfig:
    """Read a RunConfig from an INI-style key=value file.

    Unknown sections or keys are rejected so typos cannot silently fall back
    to defaults.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    kwargs = {}
    for section in parser.sections():
        if section == "run":
            for key, raw in parser.items("run"):
                if key not in _RUN_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [run]")
                kwargs[key] = int(raw) if key == "seed" else raw.strip()
            continue
        if section not in _SECTION_TYPES:
            raise ConfigError(f"unknown config section [{section}]")
        cls = _SECTION_TYPES[section]
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            if key not in fields:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                values[key] = _coerce_field(fields[key], raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
        try:
            kwargs[section] = cls(**values)
        except ValueError as exc:
            raise ConfigError(f"invalid [{section}] settings: {exc}") from exc
    try:
        return RunConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _metadata_lines(cfg: RunConfig, cal: Calibration, with_timestamp: bool) -> list[str]:
    lines = [
        f"# dualris {__version__}",
        f"# seed: {cfg.seed}",
        "# rng: numpy-pcg64",
        "# calibration: " + " ".join(
            f"{name}={getattr(cal, name):.17g}"
            for name in ("raw_rate_scale", "effective_visibility", "h_ref_sq",
                         "rf_gain_offset_db", "element_amp_scale", "rf_element_scale")),
    ]
    if with_timestamp:
        lines.append(f"# timestamp: {datetime.now(timezone.utc).isoformat()}")
    return lines


def write_sweep_csv(path: str, cfg: RunConfig, cal: Calibration,
                    rows, with_timestamp: bool = True) -> None:
    lines = _metadata_lines(cfg, cal, with_timestamp)
    lines.append(",".join(SWEEP_COLUMNS))
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, col)) for col in SWEEP_COLUMNS))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_histogram_csv(path: str, cfg: RunConfig, cal: Calibration,
                        grids, with_timestamp: bool = True) -> None:
    lines = _metadata_lines(cfg, cal, with_timestamp)
    lines.append(",".join(HISTOGRAM_COLUMNS))
    for att, grid in grids.items():
        for q in range(grid.shape[0]):
            for c in range(grid.shape[1]):
                lines.append(f"{_fmt(att)},{q},{c},{grid[q, c]}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _calibration_lines(cal: Calibration) -> list[str]:
    return [f"{name} = {getattr(cal, name):.17g}"
            for name in ("raw_rate_scale", "effective_visibility", "h_ref_sq",
                         "rf_gain_offset_db", "element_amp_scale", "rf_element_scale")]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualris",
        description="Dual-band RIS satellite link simulator and phase optimizer")
    parser.add_argument("--config", help="INI run configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("link-budget", help="metrics for a single configuration")
    p.add_argument("--elevation", type=float, required=True)
    p.add_argument("--n", type=int, default=0, help="RIS element count")
    p.add_argument("--att", type=float, default=1.0)

    p = sub.add_parser("calibrate", help="fit and print the calibration constants")
    p.add_argument("--out", help="also write constants to this file")

    p = sub.add_parser("sweep", help="elevation sweep CSV")
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--no-timestamp", action="store_true")

    p = sub.add_parser("histogram", help="joint phase histogram CSV")
    p.add_argument("--out", default="histogram.csv")
    p.add_argument("--elevation", type=float, default=45.0)
    p.add_argument("--no-timestamp", action="store_true")

    p = sub.add_parser("optimize", help="optimize a single scenario")
    p.add_argument("--elevation", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--att", type=float, default=1.0)
    p.add_argument("--trace", help="write the solver trace CSV here")

    p = sub.add_parser("qubo-export", help="export the quadratic model")
    p.add_argument("--elevation", type=float, default=45.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default="model.qubo")
    return parser


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        cal = calibrate(cfg, CalibrationAnchors())
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION

    out_dir = cfg.output_dir

    if args.command == "calibrate":
        for line in _calibration_lines(cal):
            print(line)
        if args.out:
            _atomic_write(os.path.join(out_dir, args.out),
                          "\n".join(_calibration_lines(cal)) + "\n")
        return EXIT_OK

    if args.command == "link-budget":
        row, _ = evaluate_point(cfg, cal, args.elevation, args.n, args.att)
        print(f"elevation_deg: {row.elevation_deg:g}")
        print(f"n_elements:    {row.n_elements}")
        print(f"snr_db:        {row.snr_db:.3f}")
        print(f"ber:           {row.ber:.6e}")
        print(f"qber:          {row.qber:.6f}")
        print(f"skr_bits_s:    {row.skr_bits_s:.2f}")
        print(f"cost:          {row.cost:.6e}")
        print(f"feasible:      {row.feasible}")
        return EXIT_OK

    if args.command == "sweep":
        rows = delta_metrics(sweep_elevation(cfg, cal))
        path = os.path.join(out_dir, args.out)
        write_sweep_csv(path, cfg, cal, rows, with_timestamp=not args.no_timestamp)
        print(f"wrote {path} ({len(rows)} rows)")
        return EXIT_OK

    if args.command == "histogram":
        grids = phase_histogram(cfg, cal, elevation_deg=args.elevation)
        path = os.path.join(out_dir, args.out)
        write_histogram_csv(path, cfg, cal, grids, with_timestamp=not args.no_timestamp)
        for att, grid in grids.items():
            print(f"att={att:g}: counts sum {grid.sum()}, "
                  f"chi2-to-uniform {chi_square_uniform(grid):.2f}")
        print(f"wrote {path}")
        return EXIT_OK

    if args.command == "optimize":
        result, objective = _solve_point(cfg, cal, args.elevation, args.n,
                                         att=args.att)
        if not result.feasible:
            print("no feasible phase assignment (QBER above security threshold)",
                  file=sys.stderr)
            return EXIT_INFEASIBLE
        m = objective.metrics_of(result.best_bits)
        print("x*:", "".join(str(int(b)) for b in result.best_bits))
        print(f"cost: {result.best_value:.6e}   evaluations: {result.evaluations}")
        print(f"snr_db: {m.snr_db:.3f}  qber: {m.qber:.6f}  "
              f"skr_bits_s: {m.skr_bits_s:.2f}")
        if args.trace:
            _atomic_write(os.path.join(out_dir, args.trace),
                          "\n".join(trace_csv_lines(result)) + "\n")
        return EXIT_OK

    if args.command == "qubo-export":
        state, ris_cfg, _ = build_channel_state(cfg, cal, args.elevation, args.n)
        model = build_qubo(state, cfg.weights, cal, cfg.optical, cfg.rf, ris_cfg)
        path = os.path.join(out_dir, args.out)
        comments = [f"dualris {__version__}", f"seed {cfg.seed}",
                    f"elevation_deg {args.elevation:g}", f"n_elements {args.n}"]
        directory = os.path.dirname(os.path.abspath(path)) or "."
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
        os.close(fd)
        try:
            export_qubo(model, tmp, comments=comments)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        print(f"wrote {path} (dim {model.dim}, {len(model.pair_w)} pair terms)")
        return EXIT_OK

    return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
