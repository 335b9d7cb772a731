"""Strict TOML configuration: reward process files and experiment specs.

Unknown keys are rejected everywhere so silent typos cannot reconfigure a
run. Paths inside a spec resolve relative to the spec file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .categorical import SupportGrid
from .mrp import MarkovRewardProcess, validate
from .schedules import (
    StepSchedule,
    constant_schedule,
    polynomial_schedule,
    two_phase_iid_schedule,
    two_phase_markov_schedule,
)


class ConfigError(Exception):
    """Raised for unreadable, malformed, or strictly invalid config input."""


def load_toml(path) -> dict:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"failed to parse {path}: {exc}") from exc


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ConfigError(f"{context}: missing required key '{key}'")
    return table[key]


def _reject_unknown(table: dict, allowed, context: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{context}: unknown key(s) {', '.join(unknown)}")


def parse_mrp(table: dict, context: str = "mrp") -> MarkovRewardProcess:
    _reject_unknown(table, ("num_states", "transition", "rewards"), context)
    m = _require(table, "num_states", context)
    rows = _require(table, "transition", context)
    if len(rows) != m or any(len(r) != m for r in rows):
        raise ConfigError(f"{context}: transition must be {m} rows of {m} entries")
    transition = np.asarray(rows, dtype=float)
    laws = {}
    for n, entry in enumerate(_require(table, "rewards", context)):
        ectx = f"{context}.rewards[{n}]"
        _reject_unknown(entry, ("from", "to", "atoms"), ectx)
        i = _require(entry, "from", ectx)
        j = _require(entry, "to", ectx)
        atoms = _require(entry, "atoms", ectx)
        values, probs = [], []
        for a, atom in enumerate(atoms):
            actx = f"{ectx}.atoms[{a}]"
            _reject_unknown(atom, ("value", "prob"), actx)
            values.append(float(_require(atom, "value", actx)))
            probs.append(float(_require(atom, "prob", actx)))
        if (i, j) in laws:
            raise ConfigError(f"{ectx}: duplicate reward law for transition ({i}, {j})")
        laws[(i, j)] = (np.asarray(values), np.asarray(probs))
    mrp = MarkovRewardProcess(m, transition, laws)
    return mrp


def load_mrp(path) -> MarkovRewardProcess:
    return parse_mrp(load_toml(path), context=str(path))


def parse_grid(table: dict, context: str = "grid") -> SupportGrid:
    _reject_unknown(table, ("theta_min", "theta_max", "num_atoms"), context)
    theta_min = float(_require(table, "theta_min", context))
    theta_max = float(_require(table, "theta_max", context))
    num_atoms = int(_require(table, "num_atoms", context))
    try:
        return SupportGrid.from_range(theta_min, theta_max, num_atoms)
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def parse_schedule(table: dict, context: str = "schedule") -> StepSchedule:
    _reject_unknown(table, ("kind", "alpha", "a", "a1"), context)
    kind = _require(table, "kind", context)
    try:
        if kind == "constant":
            return constant_schedule(float(_require(table, "alpha", context)))
        if kind == "polynomial":
            return polynomial_schedule(float(_require(table, "a", context)))
        if kind == "two_phase_iid":
            return two_phase_iid_schedule(float(_require(table, "a1", context)))
        if kind == "two_phase_markov":
            return two_phase_markov_schedule(float(_require(table, "a1", context)))
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc
    raise ConfigError(f"{context}: unknown schedule kind {kind!r}")


@dataclass
class RunSpec:
    name: str
    mode: str
    schedule: StepSchedule
    iterations: int
    rho: np.ndarray | None = None
    lam: float | None = None
    g0: float = 0.5
    initial_state: int = 0
    optional: bool = False
    max_final: dict = field(default_factory=dict)
    min_decay: dict = field(default_factory=dict)


@dataclass
class ExperimentSpec:
    name: str
    mrp: MarkovRewardProcess
    grid: SupportGrid
    runs: list
    num_seeds: int
    seed_base: int
    output_dir: str


_RUN_KEYS = (
    "name",
    "mode",
    "schedule",
    "iterations",
    "rho",
    "lam",
    "g0",
    "initial_state",
    "optional",
    "acceptance",
)


def _parse_run(table: dict, num_states: int, context: str) -> RunSpec:
    _reject_unknown(table, _RUN_KEYS, context)
    name = _require(table, "name", context)
    mode = _require(table, "mode", context)
    schedule = parse_schedule(_require(table, "schedule", context), f"{context}.schedule")
    iterations = int(_require(table, "iterations", context))
    rho = table.get("rho")
    if rho is not None:
        if rho == "uniform":
            rho = np.full(num_states, 1.0 / num_states)
        else:
            rho = np.asarray(rho, dtype=float)
            if rho.shape != (num_states,):
                raise ConfigError(f"{context}: rho must have {num_states} entries")
    max_final, min_decay = {}, {}
    acceptance = table.get("acceptance", {})
    _reject_unknown(acceptance, ("max_final", "min_decay"), f"{context}.acceptance")
    for col, val in acceptance.get("max_final", {}).items():
        max_final[col] = float(val)
    for col, val in acceptance.get("min_decay", {}).items():
        min_decay[col] = float(val)
    return RunSpec(
        name=name,
        mode=mode,
        schedule=schedule,
        iterations=iterations,
        rho=rho,
        lam=table.get("lam"),
        g0=float(table.get("g0", 0.5)),
        initial_state=int(table.get("initial_state", 0)),
        optional=bool(table.get("optional", False)),
        max_final=max_final,
        min_decay=min_decay,
    )


def parse_experiment(path, validate_mrp: bool = True) -> ExperimentSpec:
    path = Path(path)
    data = load_toml(path)
    context = str(path)
    _reject_unknown(
        data,
        ("name", "output_dir", "num_seeds", "seed_base", "mrp", "grid", "runs"),
        context,
    )
    name = _require(data, "name", context)
    mrp_table = _require(data, "mrp", context)
    if "path" in mrp_table:
        _reject_unknown(mrp_table, ("path",), f"{context}.mrp")
        mrp_path = Path(mrp_table["path"])
        if not mrp_path.is_absolute():
            mrp_path = path.parent / mrp_path
        mrp = load_mrp(mrp_path)
    else:
        mrp = parse_mrp(mrp_table, f"{context}.mrp")
    grid = parse_grid(_require(data, "grid", context), f"{context}.grid")
    runs = [
        _parse_run(t, mrp.num_states, f"{context}.runs[{n}]")
        for n, t in enumerate(_require(data, "runs", context))
    ]
    names = [r.name for r in runs]
    if len(set(names)) != len(names):
        raise ConfigError(f"{context}: run names must be unique")
    if validate_mrp:
        violations = validate(mrp)
        if violations:
            raise ConfigError(f"{context}: invalid reward process: " + "; ".join(violations))
    return ExperimentSpec(
        name=name,
        mrp=mrp,
        grid=grid,
        runs=runs,
        num_seeds=int(data.get("num_seeds", 20)),
        seed_base=int(data.get("seed_base", 1)),
        output_dir=str(data.get("output_dir", f"out/{name}")),
    )


def bundled_spec_path(name: str) -> Path:
    """Path of a spec shipped inside the package (e.g. 'five_state')."""
    root = Path(__file__).parent / "specs"
    candidate = root / f"{name}.toml"
    if not candidate.exists():
        available = ", ".join(sorted(p.stem for p in root.glob("*.toml")))
        raise ConfigError(f"no bundled spec named {name!r}; available: {available}")
    return candidate
