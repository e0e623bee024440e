"""Command-line driver: ``kmv {solve,oracle,simulate,compare} --config run.json``.

Every CSV starts with a ``#`` header carrying the SHA-256 of the effective
configuration and the seed; numbers are written with 17 significant digits,
so equal configurations give byte-identical files.

Exit codes: 0 success, 1 invalid input or numerical failure, 2 the
fixed-point iteration ran but did not converge.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import fourier
from .core import (
    DRIFT_FAMILIES,
    ConfigurationError,
    DensityField,
    MeanFieldPath,
    NumericalError,
    bump_initial_density,
    make_drift,
    make_space_grid,
    make_time_grid,
)
from .fpk import check_trajectory, mass_history
from .holder import norm_report
from .mean_field import FixedPointConfig, solve_fixed_point
from .particles import sample_initial, simulate_decoupled, simulate_interacting


EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2
SUBCOMMANDS = ("solve", "oracle", "simulate", "compare")

_pos_int = {"type": "integer", "minimum": 1}
_pos_num = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "kmv run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["grid"],
    "properties": {
        "subcommand": {"enum": list(SUBCOMMANDS)},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["M", "T", "n_t"],
            "properties": {
                "M": {"type": "integer", "minimum": 3},
                "T": _pos_num,
                "n_t": _pos_int,
            },
        },
        "drift": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": list(DRIFT_FAMILIES)},
                "coefficients": {"type": "object"},
            },
        },
        "initial_density": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["bump", "tabulated"]},
                "path": {"type": "string"},
            },
        },
        "moment_order": _pos_int,
        "fixed_point": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "theta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "epsilon": _pos_num,
                "max_iterations": _pos_int,
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"N_modes": _pos_int},
        },
        "particles": {
            "type": "object",
            "additionalProperties": False,
            "required": ["N"],
            "properties": {
                "N": _pos_int,
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "mode": {"enum": ["decoupled", "interacting"]},
                "n_t": _pos_int,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv", "json"]}},
                "stride": _pos_int,
            },
        },
        "compare": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "levels": {"type": "array", "items": {"type": "integer", "minimum": 3}},
                "dt_factor": _pos_num,
                "checkpoints": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "reference": {"enum": ["oracle", "self"]},
            },
        },
    },
}


class ConfigError(Exception):
    """Bad configuration; the message names the offending field."""


class GridMismatchError(ConfigError):
    pass


# ---------------------------------------------------------------------------
# config handling


def load_config(path: Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Run:
    """Everything built from one validated config."""

    cfg: dict
    base_dir: Path
    out: Path
    digest: str
    seed: int

    @property
    def p(self) -> int:
        return int(self.cfg.get("moment_order", 1))

    def grid(self, M=None):
        try:
            return make_space_grid(self.cfg["grid"]["M"] if M is None else M)
        except ConfigurationError as exc:
            raise ConfigError(f"grid.M: {exc}") from None

    def tgrid(self, n_t=None):
        g = self.cfg["grid"]
        try:
            return make_time_grid(g["T"], g["n_t"] if n_t is None else n_t)
        except ConfigurationError as exc:
            raise ConfigError(f"grid: {exc}") from None

    def drift(self):
        d = self.cfg.get("drift", {"family": "zero"})
        try:
            return make_drift(d["family"], d.get("coefficients"))
        except ConfigurationError as exc:
            raise ConfigError(f"drift.coefficients: {exc}") from None

    def fixed_point(self):
        fp = self.cfg.get("fixed_point", {})
        try:
            return FixedPointConfig(moment_order=self.p, **fp)
        except ConfigurationError as exc:
            raise ConfigError(f"fixed_point: {exc}") from None

    def n_modes(self) -> int:
        return int(self.cfg.get("oracle", {}).get("N_modes", fourier.DEFAULT_MODES))

    def initial_density(self, grid) -> DensityField:
        spec = self.cfg.get("initial_density", {"kind": "bump"})
        if spec["kind"] == "bump":
            return bump_initial_density(grid)
        if "path" not in spec:
            raise ConfigError("initial_density.path: required for kind 'tabulated'")
        return read_tabulated_density(self.base_dir / spec["path"], grid)

    def formats(self):
        return set(self.cfg.get("output", {}).get("formats", ["csv", "json"]))

    def stride(self, n_t: int) -> int:
        return int(self.cfg.get("output", {}).get("stride", max(1, n_t // 50)))


def read_tabulated_density(path: Path, grid) -> DensityField:
    """Two-column (x, m) table, linearly interpolated onto the grid."""
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"initial_density.path: cannot read {path}: {exc}") from None
    if data.shape[1] < 2:
        raise ConfigError(f"initial_density.path: {path} needs two columns (x, m)")
    order = np.argsort(data[:, 0])
    x, m = data[order, 0], data[order, 1]
    if np.any(m < 0):
        raise ConfigError(f"initial_density.path: {path} contains negative densities")
    values = np.interp(grid.x, x, m, left=0.0, right=0.0)
    values[0] = values[-1] = 0.0
    field = DensityField(grid, values)
    if field.mass > 1.0 + 1e-10:
        raise ConfigError(f"initial_density.path: mass {field.mass:.6g} exceeds 1")
    return field


def oracle_compatible(run: Run, m0: DensityField) -> bool:
    """True when the zero-drift series is the exact answer for this config."""
    spec = run.drift()
    if spec.family == "zero" or not np.any(spec.coeffs):
        return True
    v = m0.values
    even = np.allclose(v, v[::-1], rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(v).max())))
    return spec.vanishes_at_zero_y and run.p % 2 == 1 and even


# ---------------------------------------------------------------------------
# writers


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, run: Run, columns, rows) -> None:
    lines = [f"# kmv config_sha256={run.digest} seed={run.seed}", ",".join(columns)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, run: Run, payload: dict) -> None:
    body = {"config_sha256": run.digest, "seed": run.seed, **payload}
    path.write_text(json.dumps(_jsonable(body), sort_keys=True, indent=2) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    return obj


def _snapshot_indices(n_t: int, stride: int):
    idx = list(range(0, n_t + 1, stride))
    if idx[-1] != n_t:
        idx.append(n_t)
    return idx


def _field_rows(t, x, values, indices):
    for k in indices:
        for xj, mj in zip(x, values[k]):
            yield (t[k], xj, mj)


# ---------------------------------------------------------------------------
# subcommands


def _solve(run: Run):
    grid, tgrid = run.grid(), run.tgrid()
    m0 = run.initial_density(grid)
    traj, beta, report = solve_fixed_point(m0, run.drift(), grid, tgrid, run.fixed_point())
    check_trajectory(traj)
    return grid, tgrid, m0, traj, beta, report


def run_solve(run: Run) -> int:
    grid, tgrid, _m0, traj, beta, report = _solve(run)
    if "csv" in run.formats():
        idx = _snapshot_indices(tgrid.n_t, run.stride(tgrid.n_t))
        write_csv(run.out / "density.csv", run, ("t", "x", "m"), _field_rows(tgrid.t, grid.x, traj.values, idx))
        write_csv(run.out / "beta.csv", run, ("t", "beta"), zip(tgrid.t, beta.values))
    if "json" in run.formats():
        write_json(
            run.out / "report.json",
            run,
            {
                "subcommand": "solve",
                "solve": report.to_dict(),
                "norms": norm_report(beta, 0.5).to_dict(),
                "mass_history": mass_history(traj),
            },
        )
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def run_oracle(run: Run) -> int:
    grid, tgrid = run.grid(), run.tgrid()
    m0 = run.initial_density(grid)
    if not oracle_compatible(run, m0):
        raise ConfigError(
            "drift: the series oracle needs zero drift, or b(x,0)=0 with an even m0 and odd moment_order"
        )
    sol = fourier.project_initial(m0, run.n_modes())
    idx = _snapshot_indices(tgrid.n_t, run.stride(tgrid.n_t))
    exact = fourier.evaluate_on_grid(sol, grid, tgrid.t[idx])
    mass = fourier.oracle_mass(sol, tgrid.t)
    if "csv" in run.formats():
        rows = ((tgrid.t[k], xj, mj) for k, row in zip(idx, exact) for xj, mj in zip(grid.x, row))
        write_csv(run.out / "oracle.csv", run, ("t", "x", "m_exact"), rows)
        write_csv(run.out / "oracle_mass.csv", run, ("t", "mass_exact"), zip(tgrid.t, mass))
    if "json" in run.formats():
        write_json(
            run.out / "report.json",
            run,
            {
                "subcommand": "oracle",
                "n_modes": sol.n_modes,
                "coefficients": sol.coefficients,
                "tail_bound_at_T": sol.tail_bound(tgrid.T),
            },
        )
    return EXIT_OK


def _particle_section(run: Run) -> dict:
    if "particles" not in run.cfg:
        raise ConfigError("particles: section required for this subcommand")
    return run.cfg["particles"]


def _simulate(run: Run, beta_path=None):
    """Returns (stats, fixed-point report or None)."""
    part = _particle_section(run)
    grid = run.grid()
    m0 = run.initial_density(grid)
    ptgrid = run.tgrid(part.get("n_t"))
    ens = sample_initial(m0, part["N"], run.seed)
    spec = run.drift()
    if part.get("mode", "decoupled") == "interacting":
        return simulate_interacting(ens, spec, run.p, ptgrid), None
    report = None
    if beta_path is None:
        _g, _tg, _m0, _traj, beta_path, report = _solve(run)
    beta_p = MeanFieldPath(ptgrid, np.interp(ptgrid.t, beta_path.tgrid.t, beta_path.values))
    return simulate_decoupled(ens, spec, beta_p, ptgrid, run.p), report


def run_simulate(run: Run) -> int:
    stats, report = _simulate(run)
    if "csv" in run.formats():
        write_csv(
            run.out / "particles.csv",
            run,
            ("t", "Y_N", "Z_N", "L", "stderr"),
            zip(stats.t, stats.Y, stats.Z, stats.L, stats.stderr),
        )
    if "json" in run.formats():
        write_json(
            run.out / "report.json",
            run,
            {
                "subcommand": "simulate",
                "mode": _particle_section(run).get("mode", "decoupled"),
                "N": stats.N,
                "moment_order": stats.p,
                "final_survival": float(stats.survival[-1]),
                "solve": report.to_dict() if report else None,
            },
        )
    if report is not None and not report.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _node_index(times: np.ndarray, t: float, label: str, other: str):
    k = int(np.argmin(np.abs(times - t)))
    if abs(times[k] - t) > 1e-9 * max(1.0, abs(t)):
        raise GridMismatchError(f"checkpoint t={t!r} is not a node of the {label} grid ({other})")
    return k


def refinement_study(run: Run, levels, dt_factor: float):
    """Rows (h, dt, linf_error, observed_order) at the final time, oracle as reference."""
    T = run.cfg["grid"]["T"]
    spec, fp = run.drift(), run.fixed_point()
    rows = []
    sol = None
    for M in levels:
        grid = run.grid(M)
        n_t = max(1, int(round(T / (dt_factor * grid.h**2))))
        tgrid = make_time_grid(T, n_t)
        m0 = run.initial_density(grid)
        if sol is None or m0.profile is None:
            sol = fourier.project_initial(m0, run.n_modes())
        traj, _beta, _rep = solve_fixed_point(m0, spec, grid, tgrid, fp)
        err = float(np.max(np.abs(traj.values[-1] - fourier.evaluate(sol, grid.x, T)[0])))
        order = np.nan
        if rows:
            h_prev, _dt, e_prev, _o = rows[-1]
            order = np.log(e_prev / err) / np.log(h_prev / grid.h)
        rows.append((grid.h, tgrid.dt, err, order))
    return rows


def run_compare(run: Run) -> int:
    cmp_cfg = run.cfg.get("compare", {})
    reference = cmp_cfg.get("reference", "oracle")
    grid, tgrid, m0, traj, beta, report = _solve(run)
    desc_solver = f"solver: T={tgrid.T}, n_t={tgrid.n_t}"
    checkpoints = cmp_cfg.get("checkpoints")
    if checkpoints is None:
        checkpoints = tgrid.t[_snapshot_indices(tgrid.n_t, run.stride(tgrid.n_t))]
    solver_mass = mass_history(traj)

    compatible = oracle_compatible(run, m0)
    sol = fourier.project_initial(m0, run.n_modes()) if compatible and reference == "oracle" else None

    stats = None
    if reference == "oracle" and "particles" in run.cfg:
        stats, _ = _simulate(run, beta_path=beta)
        n_p = run.cfg["particles"].get("n_t", tgrid.n_t)
        desc_particles = f"particles: T={tgrid.T}, n_t={n_p}"

    rows = []
    for t in checkpoints:
        k = _node_index(tgrid.t, t, "solver", desc_solver)
        if reference == "self":
            linf, m_ref, y = 0.0, solver_mass[k], beta.values[k]
        else:
            if sol is not None:
                exact = fourier.evaluate(sol, grid.x, float(tgrid.t[k]))[0]
                linf = float(np.max(np.abs(traj.values[k] - exact)))
                m_ref = float(fourier.oracle_mass(sol, tgrid.t[k]))
            else:
                linf = m_ref = np.nan
            y = np.nan
            if stats is not None:
                kp = _node_index(stats.t, t, "particle", f"{desc_particles} vs {desc_solver}")
                y = stats.Y[kp]
        gap = abs(beta.values[k] - y) if np.isfinite(y) else np.nan
        rows.append((tgrid.t[k], linf, solver_mass[k], m_ref, beta.values[k], y, gap))

    conv_rows = []
    if reference == "oracle" and compatible:
        conv_rows = refinement_study(run, cmp_cfg.get("levels", [100, 200, 400]), cmp_cfg.get("dt_factor", 4.0))

    if "csv" in run.formats():
        write_csv(
            run.out / "compare.csv",
            run,
            ("t", "linf_solver_vs_oracle", "mass_solver", "mass_oracle", "beta_solver", "Y_N", "abs_gap"),
            rows,
        )
        write_csv(run.out / "convergence.csv", run, ("h", "dt", "linf_error", "observed_order"), conv_rows)
    if "json" in run.formats():
        write_json(
            run.out / "report.json",
            run,
            {
                "subcommand": "compare",
                "reference": reference,
                "oracle_compatible": bool(compatible),
                "solve": report.to_dict(),
                "norms": norm_report(beta, 0.5).to_dict(),
            },
        )
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


COMMANDS = {"solve": run_solve, "oracle": run_oracle, "simulate": run_simulate, "compare": run_compare}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmv", description=__doc__.split("\n")[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
    parser.add_argument("--seed", type=int, help="particle seed, unsigned 64-bit (overrides particles.seed)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def prepare(args) -> Run:
    cfg = load_config(args.config)
    cfg = copy.deepcopy(cfg)
    cfg["subcommand"] = args.subcommand
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError(f"--seed: must be an unsigned 64-bit integer (got {args.seed})")
        cfg.setdefault("particles", {"N": 1})
        cfg["particles"]["seed"] = args.seed
    out = args.out if args.out is not None else Path(cfg.get("output", {}).get("directory", "."))
    out.mkdir(parents=True, exist_ok=True)
    seed = int(cfg.get("particles", {}).get("seed", 0))
    # the output location does not change results, so it stays out of the hash
    hashed = {k: v for k, v in cfg.items() if k != "output"}
    hashed["output"] = {k: v for k, v in cfg.get("output", {}).items() if k != "directory"}
    return Run(cfg, Path(args.config).resolve().parent, out, config_hash(hashed), seed)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        run = prepare(args)
        return COMMANDS[args.subcommand](run)
    except ConfigError as exc:
        print(f"kmv: config error: {exc}", file=sys.stderr)
    except (ConfigurationError, NumericalError) as exc:
        print(f"kmv: error: {exc}", file=sys.stderr)
    return EXIT_ERROR
