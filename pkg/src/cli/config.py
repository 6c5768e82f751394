"""
Run configuration: strict YAML parsing and scenario resolution

Precedence, lowest first: config/bounds_config.yaml, the named scenario from
config/scenarios.yaml, the user config file, command-line flags.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from jsonschema import Draft202012Validator

import sys
sys.path.append('src')

from geometry.domains import DOMAIN_KINDS, DomainSpec, domain_from_dict
from mappings.maps import MAPPING_KINDS, CUSP_MAP, MappingSpec, mapping_from_dict
from oracle.eigensolver import FD_BOX, FD_VOXEL_3D, FEM_P1_2D
from transfer.certificates import PAPER_PRINTED, RIGOROUS
from transfer.pipeline import PipelineOptions
from utils.config_loader import get_bounds_config, get_numerics_config, get_scenarios, load_yaml_config
from utils.errors import ConfigError, NeumannBoundsError

logger = logging.getLogger(__name__)

COMMANDS = ("bound", "oracle", "validate", "sweep", "reproduce")
FORMATS = ("csv", "text")
ORACLE_METHODS = (FD_BOX, FEM_P1_2D, FD_VOXEL_3D)
SWEEP_AXES = ("gamma", "a", "r", "p")

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_POSITIVE_LIST = {"type": "array", "items": _POSITIVE}

DOMAIN_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(DOMAIN_KINDS)},
        "dim": {"type": "integer", "minimum": 2},
        "sides": _POSITIVE_LIST,
        "radius": _POSITIVE,
        "semiaxes": _POSITIVE_LIST,
        "exponents": {"type": "array", "items": {"type": "number", "minimum": 1}},
        "vertices": {
            "type": "array",
            "minItems": 3,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
    },
    "required": ["kind"],
    "additionalProperties": False,
}

MAPPING_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(MAPPING_KINDS)},
        "dim": {"type": "integer", "minimum": 2},
        "coefficients": _POSITIVE_LIST,
        "a": _POSITIVE,
        "exponents": {"type": "array", "items": {"type": "number", "minimum": 1}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

ORACLE_SCHEMA = {
    "type": "object",
    "properties": {
        "method": {"enum": list(ORACLE_METHODS)},
        "resolutions": {"type": "array", "items": _POSITIVE, "minItems": 2, "maxItems": 2},
        "k": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "description": {"type": "string"},
        "source": DOMAIN_SCHEMA,
        "mapping": MAPPING_SCHEMA,
        "p": {"type": "number", "exclusiveMinimum": 1},
        "r_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}, "minItems": 1},
        "optimize_a": {"type": "boolean"},
        "mu_base": _POSITIVE,
        "b_override": _POSITIVE,
        "oracle": ORACLE_SCHEMA,
    },
    "required": ["source", "mapping"],
    "additionalProperties": False,
}

NUMERICS_SCHEMA = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "dilatation_method": {"enum": ["analytic", "sampled-sup"]},
        "sampling_density": {"type": "integer", "minimum": 2},
        "sup_rounds": {"type": "integer", "minimum": 0},
        "sup_factor": {"type": "integer", "minimum": 2},
        "sup_budget": {"type": "integer", "minimum": 1},
        "jacobian_method": {"enum": ["closed-form", "quadrature"]},
        "quad_nodes": {"type": "integer", "minimum": 2},
        "quad_tol": _POSITIVE,
        "quad_cap": {"type": "number", "minimum": 1},
        "a_grid_points": {"type": "integer", "minimum": 3},
        "golden_tol": _POSITIVE,
        "a_lower_margin": {"type": "number", "minimum": 0},
        "r_grid_points": {"type": "integer", "minimum": 1},
        "r_grid_eps": _POSITIVE,
        "eig_tol": _POSITIVE,
        "eig_k": {"type": "integer", "minimum": 1},
        "direct_dof_limit": {"type": "integer", "minimum": 1},
        "richardson_order": {"type": "integer", "minimum": 1},
        "slack_factor": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

BOUNDS_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "numerics": NUMERICS_SCHEMA,
        "oracle_defaults": {
            "type": "object",
            "properties": {m: {"type": "array", "items": _POSITIVE, "minItems": 2, "maxItems": 2}
                           for m in ORACLE_METHODS},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "run": {
            "type": "object",
            "properties": {
                "command": {"enum": list(COMMANDS)},
                "p": {"type": "number", "exclusiveMinimum": 1},
                "r_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1},
                           "minItems": 1},
                "optimize_a": {"type": "boolean"},
                "classical": {"type": "boolean"},
                "variant": {"enum": [RIGOROUS, PAPER_PRINTED]},
                "mu_base": _POSITIVE,
                "b_override": _POSITIVE,
                "threads": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "scenario": {"oneOf": [{"type": "string"}, SCENARIO_SCHEMA]},
        "numerics": NUMERICS_SCHEMA,
        "oracle": ORACLE_SCHEMA,
        "sweep": {
            "type": "object",
            "properties": {
                "axis": {"enum": list(SWEEP_AXES)},
                "values": {"type": "array", "items": {"type": "number"}},
                "start": {"type": "number"},
                "stop": {"type": "number"},
                "points": {"type": "integer", "minimum": 0},
                "spacing": {"enum": ["linear", "log"]},
            },
            "required": ["axis"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": list(FORMATS)},
                "plot": {"type": "string"},
                "operator": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def validate_against(data: Any, schema: Dict[str, Any], where: str) -> None:
    """Raise ConfigError naming the first schema violation (by path)"""
    errors = sorted(Draft202012Validator(schema).iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path)
        raise ConfigError(f"{where}{'.' + path if path else ''}: {err.message}")


@dataclass
class OracleSpec:
    method: str
    resolutions: List[float]
    k: int = 1


@dataclass
class SweepSpec:
    axis: str
    values: List[float]


@dataclass
class RunConfig:
    """Fully resolved request for one CLI command"""

    command: str
    source: Optional[DomainSpec] = None
    mapping: Optional[MappingSpec] = None
    scenario_name: Optional[str] = None
    p: float = 2.0
    r_grid: Optional[List[float]] = None
    optimize_a: bool = False
    classical: bool = False
    variant: str = RIGOROUS
    mu_base: Optional[float] = None
    b_override: Optional[float] = None
    oracle: Optional[OracleSpec] = None
    sweep: Optional[SweepSpec] = None
    numerics: Dict[str, Any] = field(default_factory=dict)
    output_path: Optional[str] = None
    output_format: str = "csv"
    plot_path: Optional[str] = None
    operator_path: Optional[str] = None
    threads: int = 1
    seed: int = 0

    @property
    def label(self) -> str:
        return self.scenario_name or "inline"

    def pipeline_options(self) -> PipelineOptions:
        return PipelineOptions.from_config(self.numerics, optimize_a=self.optimize_a,
                                           mu_base=self.mu_base, b_override=self.b_override)

    def require_scenario(self) -> None:
        if self.source is None or self.mapping is None:
            raise ConfigError(f"command '{self.command}' needs a scenario")


def sweep_values(spec: Dict[str, Any]) -> List[float]:
    """Explicit values, or start/stop/points with linear or log spacing"""
    if "values" in spec:
        if any(k in spec for k in ("start", "stop", "points", "spacing")):
            raise ConfigError("sweep: give either values or start/stop/points, not both")
        return [float(v) for v in spec["values"]]
    missing = [k for k in ("start", "stop", "points") if k not in spec]
    if missing:
        raise ConfigError(f"sweep: missing {', '.join(missing)}")
    if spec.get("spacing", "linear") == "log":
        if spec["start"] <= 0 or spec["stop"] <= 0:
            raise ConfigError("sweep: log spacing needs positive start and stop")
        grid = np.geomspace(spec["start"], spec["stop"], spec["points"])
    else:
        grid = np.linspace(spec["start"], spec["stop"], spec["points"])
    return [float(v) for v in grid]


def check_r_grid(r_grid: List[float], n: int, p: float) -> None:
    """Every r must lie in (p, np/(n-p)); the upper end is open only for p < n"""
    upper = n * p / (n - p) if p < n else math.inf
    bad = [r for r in r_grid if not (p < r < upper)]
    if bad:
        raise ConfigError(f"r_grid: {bad} outside ({p:g}, {upper:g}) for n={n}, p={p:g}")


def load_scenarios(config_dir: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """Named scenarios, each validated against the scenario schema"""
    scenarios = get_scenarios(config_dir) if config_dir else get_scenarios()
    for name, body in scenarios.items():
        validate_against(body, SCENARIO_SCHEMA, f"scenarios.{name}")
    return scenarios


def _defaults(config_dir: Optional[str]) -> Dict[str, Any]:
    data = get_bounds_config(config_dir) if config_dir else get_bounds_config()
    validate_against(data, BOUNDS_CONFIG_SCHEMA, "bounds_config")
    return data


def build_run_config(command: str, user: Optional[Dict[str, Any]] = None,
                     scenario: Optional[str] = None, out: Optional[str] = None,
                     fmt: Optional[str] = None, threads: Optional[int] = None,
                     seed: Optional[int] = None, config_dir: Optional[str] = None) -> RunConfig:
    """
    Merge defaults, scenario, user config and flags into a RunConfig.

    Args:
        command: CLI subcommand
        user: Parsed user config (validated here)
        scenario: Scenario name from the command line
        out, fmt, threads, seed: Flag overrides

    Returns:
        RunConfig
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command: {command}")
    user = user or {}
    validate_against(user, RUN_CONFIG_SCHEMA, "config")
    defaults = _defaults(config_dir)
    run = user.get("run", {})
    if run.get("command", command) != command:
        raise ConfigError(f"config is for '{run['command']}', not '{command}'")

    cfg = RunConfig(command=command)
    cfg.numerics = get_numerics_config(config_dir) if config_dir else get_numerics_config()
    cfg.numerics.update(user.get("numerics", {}))

    body: Dict[str, Any] = {}
    chosen = scenario if scenario is not None else user.get("scenario")
    if isinstance(chosen, str):
        presets = load_scenarios(config_dir)
        if chosen not in presets:
            raise ConfigError(f"unknown scenario: {chosen} (known: {', '.join(sorted(presets))})")
        body = presets[chosen]
        cfg.scenario_name = chosen
    elif isinstance(chosen, dict):
        body = chosen

    if body:
        try:
            cfg.source = domain_from_dict(body["source"])
            cfg.mapping = mapping_from_dict(body["mapping"])
        except NeumannBoundsError as exc:
            raise ConfigError(f"scenario {cfg.label}: {exc.reason}") from exc
        except KeyError as exc:
            raise ConfigError(f"scenario {cfg.label}: missing descriptor field {exc}") from exc
        if cfg.source.dim != cfg.mapping.dim:
            raise ConfigError(f"scenario {cfg.label}: source dim {cfg.source.dim} "
                              f"!= mapping dim {cfg.mapping.dim}")
        cfg.p = float(body.get("p", cfg.p))
        cfg.r_grid = body.get("r_grid")
        cfg.optimize_a = bool(body.get("optimize_a", False))
        cfg.mu_base = body.get("mu_base")
        cfg.b_override = body.get("b_override")

    for key in ("p", "r_grid", "optimize_a", "classical", "variant", "mu_base", "b_override"):
        if key in run:
            setattr(cfg, key, run[key])
    cfg.p = float(cfg.p)
    if cfg.r_grid is not None:
        cfg.r_grid = [float(r) for r in cfg.r_grid]
        if cfg.source is not None:
            check_r_grid(cfg.r_grid, cfg.source.dim, cfg.p)

    oracle = dict(body.get("oracle", {}))
    oracle.update(user.get("oracle", {}))
    if oracle:
        method = oracle.get("method")
        if method is None:
            raise ConfigError("oracle: method missing")
        resolutions = oracle.get("resolutions", defaults.get("oracle_defaults", {}).get(method))
        if resolutions is None:
            raise ConfigError(f"oracle: no resolutions for {method}")
        if method in (FD_BOX, FD_VOXEL_3D) and any(float(r) != int(r) for r in resolutions):
            raise ConfigError(f"oracle: {method} resolutions are cell counts")
        cfg.oracle = OracleSpec(method, [float(r) for r in resolutions],
                                int(oracle.get("k", cfg.numerics.get("eig_k", 1))))

    if "sweep" in user:
        spec = user["sweep"]
        cfg.sweep = SweepSpec(spec["axis"], sweep_values(spec))
        if cfg.sweep.axis in ("gamma", "a") and cfg.mapping is not None and cfg.mapping.kind != CUSP_MAP:
            raise ConfigError(f"sweep axis '{cfg.sweep.axis}' needs a cusp mapping")

    output = user.get("output", {})
    cfg.output_path = out if out is not None else output.get("path")
    cfg.output_format = fmt if fmt is not None else output.get("format", "csv")
    cfg.plot_path = output.get("plot")
    cfg.operator_path = output.get("operator")
    cfg.threads = threads if threads is not None else run.get("threads", 1)
    if cfg.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg.threads}")
    cfg.seed = seed if seed is not None else run.get("seed", cfg.numerics.get("seed", 0))
    cfg.numerics["seed"] = cfg.seed
    if not math.isfinite(cfg.p):
        raise ConfigError(f"p must be finite, got {cfg.p}")
    logger.debug("run config: %s", cfg)
    return cfg


def load_run_config(command: str, path: Optional[str] = None, **flags) -> RunConfig:
    """Read the user config file (if any) and resolve it"""
    user = load_yaml_config(path) if path else {}
    return build_run_config(command, user, **flags)
