"""Config-driven scenario runner.

Usage::

    rotorctl <command> --config run.ini [--set section.key=value ...]

The config is INI text with units written into the key names (``B_cm1``,
``mu0_D``, ``intensity_TWcm2``, ``peak_Vm``, ``fwhm_fs``, ``T_K``). Every run
writes its CSV outputs under the ``[run] output`` prefix together with
``<prefix>.manifest.ini``. The manifest holds every resolved key, so feeding
it back as the config reproduces the CSVs byte for byte. Its ``[resolved]``
section echoes the derived atomic-unit values and is ignored on input.

Exit status: 0 on success, 2 on configuration errors, 3 on numeric or
convergence failures.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .basis import build_basis
from .dynamics import (
    TimeGrid,
    boltzmann_ensemble,
    default_j_cap,
    propagate,
    propagate_ensemble,
)
from .errors import ConfigError, DomainError, NumericError, UnsupportedInputError
from .oct import OctProblem, optimize
from .pulses import HCP, THZ_SHAPES, FieldSamples, PulseSequence, bipulse_sequence, hcp_train_sequence
from .states import basis_state
from .targets import angular_density, classical_optimum, classical_scan, target_state
from .units import (
    LINEAR,
    MoleculeParams,
    field_au_to_vm,
    field_vm_to_au,
    fs_to_au,
    intensity_to_field,
)

log = logging.getLogger("rotorctl")

FLOAT_FMT = "%.12e"
REQUIRED = object()
RESOLVED = "resolved"
ENSEMBLE_J_CAP = 40

COMMANDS = (
    "classical-scan",
    "target-scan",
    "target-state",
    "free-evolve",
    "optimize",
    "bipulse",
    "train",
    "propagate",
)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(text: str):
        return None if text.strip().lower() in ("", "none") else conv(text)
    return parse


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "run": {"command": (str, None), "output": (str, REQUIRED)},
    "molecule": {
        "name": (str, "molecule"),
        "kind": (str, LINEAR),
        "B_cm1": (float, REQUIRED),
        "mu0_D": (float, REQUIRED),
        "A_cm1": (_optional(float), None),
        "dalpha_au": (_optional(float), None),
    },
    "merit": {"a": (float, 2.0), "j_max": (int, 10)},
    "scan": {
        "a_start": (float, REQUIRED),
        "a_stop": (float, REQUIRED),
        "a_step": (float, REQUIRED),
        "j_start": (int, 1),
        "j_stop": (int, 12),
    },
    "density": {"points": (int, 721)},
    "grid": {
        "periods": (float, 1.0),
        "steps_per_period": (int, 4096),
        "j_cap": (_optional(int), None),
    },
    "thermal": {
        "T_K": (float, 0.0),
        "weight_tail": (float, 1e-6),
        "nuclear_spin": (_bool, False),
    },
    "laser": {"intensity_TWcm2": (float, REQUIRED), "fwhm_fs": (float, REQUIRED)},
    "kick": {"shape": (str, HCP), "peak_Vm": (float, REQUIRED), "fwhm_fs": (float, REQUIRED)},
    "train": {"n_kicks": (int, REQUIRED), "peaks_Vm": (_floats, REQUIRED)},
    "oct": {
        "n_steps": (int, 4096),
        "field_bound_Vm": (_optional(float), None),
        "penalty": (float, 0.0),
        "max_iterations": (int, 5000),
        "goal": (float, 0.99),
        "j_cap": (_optional(int), None),
        "post_periods": (float, 1.0),
    },
    "field": {"file": (str, REQUIRED)},
}

SECTIONS_FOR = {
    "classical-scan": ("run", "scan"),
    "target-scan": ("run", "scan"),
    "target-state": ("run", "merit", "density"),
    "free-evolve": ("run", "molecule", "merit", "grid"),
    "optimize": ("run", "molecule", "merit", "oct"),
    "bipulse": ("run", "molecule", "grid", "thermal", "laser", "kick"),
    "train": ("run", "molecule", "grid", "thermal", "laser", "kick", "train"),
    "propagate": ("run", "molecule", "grid", "thermal", "field"),
}
# sections that may be left out entirely (all keys have defaults)
OPTIONAL_SECTIONS = {"merit", "density", "grid", "thermal", "oct"}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _new_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # keys keep their unit suffix case
    return cp


def load_config(command: str, path: Optional[str], overrides: list[str], field_file: Optional[str] = None) -> dict:
    """Read, override and validate a config; returns ``{section: {key: value}}``."""
    cp = _new_parser()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value.strip())
    if field_file is not None:
        if not cp.has_section("field"):
            cp.add_section("field")
        cp.set("field", "file", field_file)

    for section in cp.sections():
        if section == RESOLVED:
            continue
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    wanted = SECTIONS_FOR[command]
    cfg: dict[str, dict[str, Any]] = {}
    for section in wanted:
        if not cp.has_section(section) and section not in OPTIONAL_SECTIONS:
            raise ConfigError(f"command {command!r} needs a [{section}] section")
        raw = cp[section] if cp.has_section(section) else {}
        values = {}
        for key, (conv, default) in SCHEMA[section].items():
            if key in raw:
                try:
                    values[key] = conv(raw[key])
                except ValueError as exc:
                    raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
            elif default is REQUIRED:
                raise ConfigError(f"missing required key {section}.{key}")
            else:
                values[key] = default
        cfg[section] = values
    declared = cfg["run"]["command"]
    if declared is not None and declared != command:
        raise ConfigError(f"config is for command {declared!r}, not {command!r}")
    cfg["run"]["command"] = command
    return cfg


def _fmt_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def write_manifest(path: Path, cfg: dict, resolved: dict[str, Any]) -> None:
    cp = _new_parser()
    for section, values in cfg.items():
        cp.add_section(section)
        for key, value in values.items():
            cp.set(section, key, _fmt_value(value))
    cp.add_section(RESOLVED)
    cp.set(RESOLVED, "version", __version__)
    for key, value in resolved.items():
        cp.set(RESOLVED, key, _fmt_value(value))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# resolved scenario; re-run with: rotorctl <command> --config <this file>\n")
        cp.write(fh)


def write_csv(path: Path, header: str, columns: list[np.ndarray], int_columns: tuple[int, ...] = ()) -> None:
    """LF-terminated CSV with a header; float columns in ``%.12e``."""
    n = len(columns[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i in range(n):
            cells = [
                str(int(col[i])) if c in int_columns else FLOAT_FMT % float(col[i])
                for c, col in enumerate(columns)
            ]
            fh.write(",".join(cells) + "\n")


def read_field_csv(path: str, period: float) -> FieldSamples:
    """Inverse of the optimized-field export: rows ``t_over_Tper,E_au,E_Vm``."""
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed field file {path}: {exc}") from exc
    if header != "t_over_Tper,E_au,E_Vm" or data.shape[1] != 3 or data.shape[0] < 2:
        raise ConfigError(f"{path} is not a field file with header t_over_Tper,E_au,E_Vm")
    t = data[:, 0] * period
    dt = (t[-1] - t[0]) / (len(t) - 1)
    return FieldSamples(float(t[0]), float(dt), data[:, 1])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def molecule_from_config(cfg: dict) -> MoleculeParams:
    m = cfg["molecule"]
    return MoleculeParams.from_spectroscopic(
        m["name"], m["kind"], m["B_cm1"], m["mu0_D"], A_cm1=m["A_cm1"], dalpha_au=m["dalpha_au"]
    )


def _molecule_info(params: MoleculeParams) -> dict[str, Any]:
    return {"B_au": params.B, "A_au": params.A, "mu0_au": params.mu0, "period_au": params.period}


def _a_grid(scan: dict) -> np.ndarray:
    start, stop, step = scan["a_start"], scan["a_stop"], scan["a_step"]
    if not step > 0 or stop < start:
        raise ConfigError("scan needs a_step > 0 and a_stop >= a_start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _trajectory_csv(path: Path, traj) -> None:
    write_csv(
        path,
        "t_over_Tper,cos_theta,cos2_theta,norm",
        [traj.t_over_period, traj.cos, traj.cos2, traj.norm],
    )


def grid_from_config(cfg: dict, params: MoleculeParams) -> TimeGrid:
    g = cfg["grid"]
    n = int(round(g["periods"] * g["steps_per_period"]))
    if n < 1 or not g["periods"] > 0:
        raise ConfigError("grid needs periods > 0 and at least one step")
    return TimeGrid(0.0, g["periods"] * params.period, n)


def cmd_classical_scan(cfg: dict, prefix: str) -> dict:
    a = _a_grid(cfg["scan"])
    rows = classical_scan(a)
    opts = [classical_optimum(x) for x in a]
    write_csv(
        Path(prefix + ".csv"),
        "a,theta_max,cos_theta,cos2_theta,f_max",
        [a, [o.theta_max for o in opts], [r[1] for r in rows], [r[2] for r in rows], [o.f_max for o in opts]],
    )
    return {"points": len(a)}


def cmd_target_scan(cfg: dict, prefix: str) -> dict:
    scan = cfg["scan"]
    a_vals = _a_grid(scan)
    if scan["j_start"] < 0 or scan["j_stop"] < scan["j_start"]:
        raise ConfigError("scan needs 0 <= j_start <= j_stop")
    cols: list[list[float]] = [[], [], [], [], []]
    for a in a_vals:
        for j in range(scan["j_start"], scan["j_stop"] + 1):
            t = target_state(float(a), j)
            for col, v in zip(cols, (a, j, t.lambda_max, t.cos_exp, t.cos2_exp)):
                col.append(v)
    write_csv(
        Path(prefix + ".csv"),
        "a,j_max,lambda_max,cos_theta,cos2_theta",
        [np.array(c) for c in cols],
        int_columns=(1,),
    )
    return {"points": len(cols[0])}


def cmd_target_state(cfg: dict, prefix: str) -> dict:
    merit = cfg["merit"]
    t = target_state(merit["a"], merit["j_max"])
    write_csv(
        Path(prefix + ".coefficients.csv"),
        "j,coefficient",
        [t.basis.js, t.coefficients],
        int_columns=(0,),
    )
    theta = np.linspace(0.0, math.pi, cfg["density"]["points"])
    write_csv(
        Path(prefix + ".density.csv"),
        "theta_deg,density",
        [np.degrees(theta), angular_density(t, theta)],
    )
    return {"lambda_max": t.lambda_max, "cos_theta": t.cos_exp, "cos2_theta": t.cos2_exp}


def cmd_free_evolve(cfg: dict, prefix: str) -> dict:
    params = molecule_from_config(cfg)
    merit = cfg["merit"]
    t = target_state(merit["a"], merit["j_max"])
    j_cap = cfg["grid"]["j_cap"]
    if j_cap is None:
        cfg["grid"]["j_cap"] = j_cap = default_j_cap(t.j_max)
    _, traj = propagate(t.as_state(j_cap), params, PulseSequence(), grid_from_config(cfg, params))
    _trajectory_csv(Path(prefix + ".trajectory.csv"), traj)
    return _molecule_info(params)


def oct_problem_from_config(cfg: dict) -> OctProblem:
    merit = cfg["merit"]
    o = cfg["oct"]
    bound = None if o["field_bound_Vm"] is None else field_vm_to_au(o["field_bound_Vm"])
    return OctProblem(
        molecule_from_config(cfg),
        target_state(merit["a"], merit["j_max"]),
        n_steps=o["n_steps"],
        field_bound=bound,
        penalty=o["penalty"],
        j_cap=o["j_cap"],
        max_iterations=o["max_iterations"],
        goal=o["goal"],
    )


def cmd_optimize(cfg: dict, prefix: str) -> dict:
    problem = oct_problem_from_config(cfg)
    params = problem.params
    o = cfg["oct"]
    o["j_cap"] = problem.cap
    log.info("optimizing %d samples, j_cap=%d", problem.n_steps, problem.cap)
    res = optimize(problem)
    field = res.field
    times = field.t0 + field.dt * np.arange(len(field.values))
    write_csv(
        Path(prefix + ".field.csv"),
        "t_over_Tper,E_au,E_Vm",
        [times / params.period, field.values, field_au_to_vm(1.0) * field.values],
    )
    write_csv(
        Path(prefix + ".history.csv"),
        "iteration,fidelity,objective",
        [np.arange(len(res.fidelity_history)), res.fidelity_history, res.objective_history],
        int_columns=(0,),
    )
    n_total = problem.n_steps + int(round(o["post_periods"] * params.period / problem.dt))
    grid = TimeGrid(0.0, n_total * problem.dt, n_total)
    psi0 = basis_state(build_basis(LINEAR, problem.cap), 0)
    _, traj = propagate(psi0, params, PulseSequence(override=field), grid)
    _trajectory_csv(Path(prefix + ".trajectory.csv"), traj)
    info = {
        "fidelity": res.fidelity,
        "iterations": res.iterations,
        "converged": res.converged,
        "message": res.message,
        **_molecule_info(params),
    }
    if not res.converged:
        raise _Unconverged(info)
    return info


def sequence_from_config(cfg: dict, params: MoleculeParams, train: bool) -> PulseSequence:
    laser, kick = cfg["laser"], cfg["kick"]
    if params.dalpha is None:
        raise ConfigError("molecule.dalpha_au is required for a laser pulse")
    if kick["shape"] not in THZ_SHAPES:
        raise ConfigError(f"kick.shape must be one of {THZ_SHAPES}")
    seq = bipulse_sequence(
        params,
        params.period,
        intensity_to_field(laser["intensity_TWcm2"] * 1e12) ** 2,
        fs_to_au(laser["fwhm_fs"]),
        field_vm_to_au(kick["peak_Vm"]),
        fs_to_au(kick["fwhm_fs"]),
        kick_shape=kick["shape"],
    )
    if train:
        tr = cfg["train"]
        seq = hcp_train_sequence(seq, tr["n_kicks"], [field_vm_to_au(p) for p in tr["peaks_Vm"]])
    return seq


def _run_thermal(cfg: dict, prefix: str, params: MoleculeParams, seq: PulseSequence) -> dict:
    th = cfg["thermal"]
    if cfg["grid"]["j_cap"] is None:
        cfg["grid"]["j_cap"] = ENSEMBLE_J_CAP
    ens = boltzmann_ensemble(
        params, th["T_K"], weight_tail=th["weight_tail"], j_cap=cfg["grid"]["j_cap"], nuclear_spin=th["nuclear_spin"]
    )
    log.info("propagating %d ensemble members", len(ens))
    _, traj = propagate_ensemble(ens, params, seq, grid_from_config(cfg, params))
    _trajectory_csv(Path(prefix + ".trajectory.csv"), traj)
    info: dict[str, Any] = {"members": len(ens), **_molecule_info(params)}
    for i, p in enumerate(seq.pulses):
        info[f"pulse{i}"] = f"{p.shape} peak={p.peak!r} center={p.center!r} sigma={p.width!r}"
    return info


def cmd_bipulse(cfg: dict, prefix: str) -> dict:
    params = molecule_from_config(cfg)
    return _run_thermal(cfg, prefix, params, sequence_from_config(cfg, params, train=False))


def cmd_train(cfg: dict, prefix: str) -> dict:
    params = molecule_from_config(cfg)
    return _run_thermal(cfg, prefix, params, sequence_from_config(cfg, params, train=True))


def cmd_propagate(cfg: dict, prefix: str) -> dict:
    params = molecule_from_config(cfg)
    field = read_field_csv(cfg["field"]["file"], params.period)
    return _run_thermal(cfg, prefix, params, PulseSequence(override=field))


HANDLERS = {
    "classical-scan": cmd_classical_scan,
    "target-scan": cmd_target_scan,
    "target-state": cmd_target_state,
    "free-evolve": cmd_free_evolve,
    "optimize": cmd_optimize,
    "bipulse": cmd_bipulse,
    "train": cmd_train,
    "propagate": cmd_propagate,
}


class _Unconverged(Exception):
    def __init__(self, info: dict):
        super().__init__(info["message"])
        self.info = info


def run(command: str, config: Optional[str], overrides: list[str], field_file: Optional[str] = None) -> int:
    """Execute one scenario and return the process exit status."""
    try:
        cfg = load_config(command, config, overrides, field_file)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    prefix = cfg["run"]["output"]
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    status = 0
    try:
        info = HANDLERS[command](cfg, prefix)
    except _Unconverged as exc:
        info = exc.info
        log.error("optimization did not converge: %s (fidelity %.6f)", exc, info["fidelity"])
        status = 3
    except (ConfigError, DomainError, UnsupportedInputError) as exc:
        log.error("config error: %s", exc)
        return 2
    except NumericError as exc:
        log.error("numeric error: %s", exc)
        return 3
    write_manifest(Path(prefix + ".manifest.ini"), cfg, info)
    for key, value in info.items():
        print(f"{key} = {_fmt_value(value)}")
    return status


def main(argv: Optional[list[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="rotorctl", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI scenario file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override one config key (repeatable)")
    ap.add_argument("--field-file", help="field CSV for the propagate command")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.field_file is not None and args.command != "propagate":
        log.error("config error: --field-file only applies to the propagate command")
        return 2
    return run(args.command, args.config, args.overrides, args.field_file)


if __name__ == "__main__":
    sys.exit(main())
