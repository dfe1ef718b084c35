"""Command-line entry point: ``zeeman-qgt {fields,charge,response,symmetry,validate}``.

A run is described by a JSON or YAML config (see ``DEFAULTS`` for the schema);
``--set key.path=value`` overrides single entries. Every output file echoes
the resolved config and the package version, so the numbers can be
regenerated from the file alone. The worker count is deliberately kept out
of the echoed config: results do not depend on it.
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, ValidationFailure, ZeemanQGTError
from .fields import QUANTITIES, Contour, Grid2D, sample_field, topological_charges
from .model import model_from_dict
from .parallel import WORKERS_ENV
from .response import (
    CHANNELS,
    IntegrationDomain,
    OccupationSpec,
    Prefactors,
    frequency_sweep,
    response_spectrum,
)
from . import symmetry
from .validate import MUTATIONS, run_validation

DEFAULTS = {
    "fields": {
        "model": {"model": "massive_dirac", "m": 0.0},
        "grid": {"kind": "polar", "r_min": 0.05, "r_max": 2.0, "nr": 64, "ntheta": 64},
        "quantities": ["OmegaA", "winding_field"],
        "band": 1,
    },
    "charge": {
        "model": {"model": "massive_dirac", "m": 1e-4},
        "contour": {"kind": "circle", "center": [0.0, 0.0], "radius": 1.0, "samples": 1024},
        "band": 1,
    },
    "response": {
        "model": {"model": "massive_dirac", "m": 1.0},
        "occupation": {"mu": 0.0, "T": 0.0},
        "domain": {"cutoff": None, "nr": 400, "ntheta": 256, "log_radial": True},
        "frequencies": {"lo": 1e-4, "hi": 1e-3, "n": 8, "log": True},
        "prefactors": {"g_muB": 1.0, "charge": 1.0},
        "tolerances": {"convergence_rtol": 0.05},
        "check_convergence": True,
        "fit_window": None,
        "zero_sectors": [],
    },
}


# ---------------------------------------------------------------------------
# config handling


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping at top level")
    return data


# sections whose keys depend on a variant name; a config file replaces them whole
WHOLE_SECTIONS = ("model", "grid", "contour")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key not in WHOLE_SECTIONS:
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def apply_override(cfg: dict, assignment: str) -> None:
    """``a.b.c=value``; the value is parsed as YAML so numbers, lists and null work."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {assignment!r} is not of the form key.path=value")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from exc
    node = cfg
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} descends into a non-mapping")
    node[parts[-1]] = value


def resolve_config(command: str, path=None, overrides=()) -> dict:
    cfg = _merge(DEFAULTS.get(command, {}), load_config(path) if path else {})
    for item in overrides:
        apply_override(cfg, item)
    return cfg


def _section(cfg, key, builder):
    try:
        return builder(cfg[key])
    except ZeemanQGTError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad {key!r} section: {exc}") from exc


# ---------------------------------------------------------------------------
# serialization


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _envelope(command: str, cfg: dict, result) -> dict:
    return {"version": __version__, "command": command, "config": _jsonable(cfg), "result": _jsonable(result)}


def write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def write_csv(path: Path, header, table, meta: dict) -> Path:
    buf = io.StringIO()
    buf.write(f"# zeeman_qgt {__version__}\n")
    buf.write("# config: " + json.dumps(_jsonable(meta), sort_keys=True) + "\n")
    np.savetxt(buf, np.asarray(table, float), delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    path.write_text(buf.getvalue())
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_fields(cfg: dict, out_dir: Path, workers=None) -> list[Path]:
    model = _section(cfg, "model", model_from_dict)
    grid = _section(cfg, "grid", Grid2D.from_dict)
    quantities = cfg["quantities"]
    if isinstance(quantities, str):
        quantities = [quantities]
    bad = [q for q in quantities if q not in QUANTITIES]
    if bad:
        raise ConfigError(f"unknown quantities {bad}; expected a subset of {QUANTITIES}")
    paths = []
    for q in quantities:
        field = sample_field(model, grid, q, band=int(cfg["band"]), workers=workers)
        header, table = field.flat_table()
        paths.append(write_csv(out_dir / f"field_{q}.csv", header, table, cfg))
    return paths


def cmd_charge(cfg: dict, out_dir: Path, workers=None) -> tuple[Path, dict]:
    model = _section(cfg, "model", model_from_dict)
    contour = _section(cfg, "contour", Contour.from_dict)
    charges = topological_charges(model, contour, band=int(cfg["band"]))
    result = charges.to_dict()
    return write_json(out_dir / "charges.json", _envelope("charge", cfg, result)), result


def _omegas(cfg: dict) -> np.ndarray:
    if cfg.get("omegas") is not None:
        return np.asarray(cfg["omegas"], float)
    f = cfg["frequencies"]
    return frequency_sweep(float(f["lo"]), float(f["hi"]), int(f["n"]), bool(f.get("log", True)))


def cmd_response(cfg: dict, out_dir: Path, workers=None) -> tuple[list[Path], dict]:
    model = _section(cfg, "model", model_from_dict)
    occupation = _section(cfg, "occupation", lambda s: OccupationSpec(**s))
    domain = _section(cfg, "domain", lambda s: IntegrationDomain(**s))
    prefactors = _section(cfg, "prefactors", lambda s: Prefactors(**s))
    omegas = _section(cfg, "frequencies", lambda _: _omegas(cfg))
    if np.any(omegas < 0) or not np.all(np.isfinite(omegas)):
        raise ConfigError("frequencies must be finite and non-negative")
    spec = response_spectrum(
        model,
        occupation,
        domain,
        omegas=omegas,
        prefactors=prefactors,
        workers=workers,
        convergence_rtol=float(cfg["tolerances"]["convergence_rtol"]),
        check_convergence=bool(cfg["check_convergence"]),
        fit_window=cfg.get("fit_window"),
        zero_sectors=tuple(cfg.get("zero_sectors") or ()),
    )
    result = spec.to_dict()
    result["channels"] = {c: np.asarray(spec.channels[c]).tolist() for c in CHANNELS}
    jpath = write_json(out_dir / "response.json", _envelope("response", cfg, result))
    table = np.column_stack([spec.omegas] + [spec.channels[c] for c in CHANNELS])
    cpath = write_csv(out_dir / "response.csv", ["omega", *CHANNELS], table, cfg)
    return [jpath, cpath], result


def cmd_symmetry(group=None, sector=None) -> dict:
    if group is not None:
        return {"group": group, "allowed": sorted(symmetry.allowed_sectors(group), key=symmetry.SECTOR_NAMES.index)}
    if sector is not None:
        labels = symmetry.group_labels()
        try:
            allowing = symmetry.groups_allowing(sector)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return {"sector": sector, "groups": [g for g in labels if g in allowing]}
    return symmetry.as_dict()


def cmd_validate(out_dir: Path | None = None, mutation=None, seed=20240601) -> dict:
    report = run_validation(mutation=mutation, seed=seed)
    if out_dir is not None:
        write_json(out_dir / "validation.json", _jsonable(report))
    _raise_on_failure(report)
    return report


def _raise_on_failure(report):
    if not report["passed"]:
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        raise ValidationFailure(f"validation failed: {', '.join(failed)}")


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zeeman-qgt", description="Zeeman quantum geometry of two-band models")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("config", nargs="?", help="JSON or YAML run config (defaults are used if omitted)")
            p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                           help="override a config entry, e.g. --set model.m=0.5")
            p.add_argument("--workers", type=int, default=None,
                           help=f"worker threads (default: ${WORKERS_ENV} or 1)")
        p.add_argument("--output-dir", type=Path, default=Path("."), help="directory for output files")

    common(sub.add_parser("fields", help="sample geometric fields on a grid, one CSV per quantity"))
    common(sub.add_parser("charge", help="Gauss index, winding number and Berry flux on a contour"))
    common(sub.add_parser("response", help="gyrotropic / kinetic magnetoelectric frequency sweep"))

    p = sub.add_parser("symmetry", help="query the magnetic point group table")
    p.add_argument("group", nargs="?", help="group label, e.g. \"4m'm'\"")
    p.add_argument("--sector", choices=symmetry.SECTOR_NAMES, help="list the groups allowing a sector")
    p.add_argument("--output-dir", type=Path, default=None, help="also write symmetry.json here")

    p = sub.add_parser("validate", help="run the invariant suite")
    p.add_argument("--mutation", choices=MUTATIONS, default=None, help="inject a known defect")
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--output-dir", type=Path, default=None, help="also write validation.json here")
    return parser


def _prepare_dir(path):
    if path is None:
        return None
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from exc
    return path


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = _prepare_dir(args.output_dir)
    if args.command == "symmetry":
        result = _jsonable(cmd_symmetry(args.group, args.sector))
        if out_dir is not None:
            write_json(out_dir / "symmetry.json", {"version": __version__, "result": result})
        print(json.dumps(result, indent=2))
        return 0
    if args.command == "validate":
        report = run_validation(mutation=args.mutation, seed=args.seed)
        if out_dir is not None:
            write_json(out_dir / "validation.json", _jsonable(report))
        print(json.dumps(_summary(report), indent=2))
        _raise_on_failure(report)
        return 0

    cfg = resolve_config(args.command, args.config, args.overrides)
    if args.workers is not None and args.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {args.workers}")
    if args.command == "fields":
        paths = cmd_fields(cfg, out_dir, args.workers)
        print(json.dumps({"written": [str(p) for p in paths]}, indent=2))
    elif args.command == "charge":
        path, result = cmd_charge(cfg, out_dir, args.workers)
        print(json.dumps({"written": str(path), "Q": result["Q"], "C_w": result["C_w"],
                          "berry_flux": result["berry_flux"]}, indent=2))
    else:
        paths, result = cmd_response(cfg, out_dir, args.workers)
        print(json.dumps({"written": [str(p) for p in paths], "convergence": _jsonable(result["convergence"]),
                          "fits": _jsonable(result["fits"])}, indent=2))
    return 0


def _summary(report):
    return {
        "passed": report["passed"],
        "mutation": report["mutation"],
        "checks": {c["name"]: c["passed"] for c in report["checks"]},
    }


def main(argv=None) -> int:
    try:
        return run(argv)
    except ZeemanQGTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
