# FracPot/records.py

import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_SEED, DEFAULT_WALKS, CSV_COMMENT_PREFIX, TOOL_NAME, TOOL_VERSION, default_workers
from geometry import (
    Ball,
    CuspRegion,
    Difference,
    DomainSpec,
    HalfSpace,
    Intersection,
    Puncture,
    ThornPower,
    Union,
    WholeSpace,
    domain_dim,
)
from kernels import StableParams
from sampler import ConstantPayoff, CoordinatePayoff, IndicatorPayoff, LevyWeightPayoff, WalkConfig
from utils import ConfigError, DomainError, format_number, format_point

# লগিং সেটআপ
logger = logging.getLogger(__name__)


def load_json(file_path: str) -> Dict:
    """Load a JSON document; a missing or unreadable file is a config error."""
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        logger.error(f"File {file_path} not found")
        raise ConfigError(f"file not found: {file_path}")
    except json.JSONDecodeError as e:
        logger.error(f"JSON decode error in {file_path}: {e}")
        raise ConfigError(f"not valid JSON ({e})", path=file_path)


# --- Field Helpers ---

def _require(node: Dict, key: str, path: str) -> Any:
    if not isinstance(node, dict):
        raise ConfigError("expected an object", path=path)
    if key not in node:
        raise ConfigError(f"missing field '{key}'", path=path)
    return node[key]


def parse_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path=path)
    return float(value)


def parse_integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path=path)
    return value


def parse_point(value: Any, d: int, path: str) -> Tuple[float, ...]:
    if not isinstance(value, list) or len(value) != d:
        raise ConfigError(f"expected a list of {d} coordinates", path=path)
    return tuple(parse_number(c, f"{path}[{i}]") for i, c in enumerate(value))


def parse_points(value: Any, d: int, path: str) -> List[Tuple[float, ...]]:
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a non-empty list of points", path=path)
    return [parse_point(point, d, f"{path}[{i}]") for i, point in enumerate(value)]


# --- Domain Documents ---

def _parse_node(node: Any, path: str) -> DomainSpec:
    kind = _require(node, "kind", path)
    try:
        if kind == "ball":
            center = _require(node, "center", path)
            if not isinstance(center, list):
                raise ConfigError("expected a list of coordinates", path=f"{path}.center")
            return Ball(tuple(parse_number(c, f"{path}.center[{i}]") for i, c in enumerate(center)),
                        parse_number(_require(node, "radius", path), f"{path}.radius"))
        if kind == "halfspace":
            normal = _require(node, "normal", path)
            if not isinstance(normal, list):
                raise ConfigError("expected a list of coordinates", path=f"{path}.normal")
            return HalfSpace(tuple(parse_number(c, f"{path}.normal[{i}]") for i, c in enumerate(normal)),
                             parse_number(node.get("offset", 0.0), f"{path}.offset"))
        if kind == "thorn":
            return ThornPower(parse_number(_require(node, "gamma", path), f"{path}.gamma"),
                              parse_number(node.get("length", 1.0), f"{path}.length"),
                              parse_number(node.get("width_scale", 1.0), f"{path}.width_scale"),
                              parse_integer(node.get("dim", 2), f"{path}.dim"))
        if kind == "cusp":
            return CuspRegion(parse_number(_require(node, "gamma", path), f"{path}.gamma"))
        if kind == "space":
            return WholeSpace(parse_integer(_require(node, "dim", path), f"{path}.dim"))
        if kind == "puncture":
            point = _require(node, "point", path)
            if not isinstance(point, list):
                raise ConfigError("expected a list of coordinates", path=f"{path}.point")
            return Puncture(tuple(parse_number(c, f"{path}.point[{i}]") for i, c in enumerate(point)))
        if kind in ("union", "intersection"):
            children = _require(node, "children", path)
            if not isinstance(children, list) or not children:
                raise ConfigError("expected a non-empty list", path=f"{path}.children")
            parsed = tuple(_parse_node(child, f"{path}.children[{i}]") for i, child in enumerate(children))
            return Union(parsed) if kind == "union" else Intersection(parsed)
        if kind == "difference":
            return Difference(_parse_node(_require(node, "left", path), f"{path}.left"),
                              _parse_node(_require(node, "right", path), f"{path}.right"))
    except DomainError as e:
        raise ConfigError(str(e), path=path)
    raise ConfigError(f"unknown domain kind '{kind}'", path=f"{path}.kind")


def parse_domain(node: Any, path: str = "domain") -> DomainSpec:
    """Build a domain tree from its document; errors name the offending node path."""
    domain = _parse_node(node, path)
    try:
        domain_dim(domain)
    except DomainError as e:
        raise ConfigError(str(e), path=path)
    return domain


def domain_to_document(D: DomainSpec) -> Dict:
    if isinstance(D, Ball):
        return {"kind": "ball", "center": list(D.center), "radius": D.radius}
    if isinstance(D, HalfSpace):
        return {"kind": "halfspace", "normal": list(D.normal), "offset": D.offset}
    if isinstance(D, ThornPower):
        return {"kind": "thorn", "gamma": D.gamma, "length": D.length, "width_scale": D.width_scale,
                "dim": D.dim}
    if isinstance(D, CuspRegion):
        return {"kind": "cusp", "gamma": D.gamma}
    if isinstance(D, WholeSpace):
        return {"kind": "space", "dim": D.dim}
    if isinstance(D, Puncture):
        return {"kind": "puncture", "point": list(D.point)}
    if isinstance(D, (Union, Intersection)):
        return {"kind": D.kind, "children": [domain_to_document(child) for child in D.children]}
    if isinstance(D, Difference):
        return {"kind": "difference", "left": domain_to_document(D.left), "right": domain_to_document(D.right)}
    raise DomainError(f"unknown domain node {D!r}")


def domain_hash(D: DomainSpec) -> str:
    """sha256 of the canonical domain document."""
    canonical = json.dumps(domain_to_document(D), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- Payoff Documents ---

def parse_payoff(node: Any, p: StableParams, path: str = "payoff"):
    if node is None:
        return ConstantPayoff()
    kind = _require(node, "kind", path)
    if kind == "constant":
        return ConstantPayoff(parse_number(node.get("value", 1.0), f"{path}.value"))
    if kind == "indicator":
        return IndicatorPayoff(parse_domain(_require(node, "region", path), f"{path}.region"))
    if kind == "levy-weight":
        return LevyWeightPayoff(p, parse_point(_require(node, "y0", path), p.d, f"{path}.y0"))
    if kind == "coordinate":
        index = parse_integer(_require(node, "index", path), f"{path}.index")
        if not 0 <= index < p.d:
            raise ConfigError(f"coordinate index must lie in [0, {p.d})", path=f"{path}.index")
        return CoordinatePayoff(index)
    raise ConfigError(f"unknown payoff kind '{kind}'", path=f"{path}.kind")


# --- Run Configuration ---

@dataclass
class RunConfig:
    params: StableParams
    domain: DomainSpec
    seed: int
    walks: int
    workers: int
    output_path: Optional[str]
    as_json: bool
    document: Dict = field(default_factory=dict)

    def points(self, key: str = "points") -> List[Tuple[float, ...]]:
        return parse_points(_require(self.document, key, "config"), self.params.d, key)

    def point(self, key: str) -> Tuple[float, ...]:
        return parse_point(_require(self.document, key, "config"), self.params.d, key)

    def section(self, key: str) -> Dict:
        value = self.document.get(key, {})
        if not isinstance(value, dict):
            raise ConfigError("expected an object", path=key)
        return value


def parse_params(node: Any, path: str = "params") -> StableParams:
    d = parse_integer(_require(node, "d", path), f"{path}.d")
    alpha = parse_number(_require(node, "alpha", path), f"{path}.alpha")
    try:
        return StableParams(d, alpha)
    except DomainError as e:
        raise ConfigError(str(e), path=path)


def load_run_config(args) -> RunConfig:
    """Read the --config document and apply command-line overrides."""
    if not getattr(args, "config", None):
        raise ConfigError("--config is required for this command")
    document = load_json(args.config)
    if not isinstance(document, dict):
        raise ConfigError("run document must be an object", path="config")
    params = parse_params(_require(document, "params", "config"))
    domain = parse_domain(_require(document, "domain", "config"))
    if domain_dim(domain) != params.d:
        raise ConfigError(f"domain dimension {domain_dim(domain)} does not match d={params.d}", path="domain")

    seed = args.seed if getattr(args, "seed", None) is not None else document.get("seed", DEFAULT_SEED)
    walks = args.walks if getattr(args, "walks", None) is not None else document.get("walks", DEFAULT_WALKS)
    seed, walks = parse_integer(seed, "seed"), parse_integer(walks, "walks")
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer", path="seed")
    if walks < 1:
        raise ConfigError("walk budget must be positive", path="walks")
    workers = args.workers if getattr(args, "workers", None) is not None else default_workers()
    logger.info(f"Loaded {args.config}: d={params.d}, alpha={params.alpha}, seed={seed}, walks={walks}")
    return RunConfig(params, domain, seed, walks, max(1, workers), getattr(args, "out", None),
                     bool(getattr(args, "json", False)), document)


# --- Result Output ---

def run_metadata(config: RunConfig, command: str) -> Dict:
    """Everything needed to reproduce a run; deliberately no timestamp or worker count."""
    return {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "command": command,
        "seed": config.seed,
        "d": config.params.d,
        "alpha": config.params.alpha,
        "domain_hash": domain_hash(config.domain),
        "walks": config.walks,
    }


def _cell(value: Any) -> str:
    if isinstance(value, (tuple, list, np.ndarray)):
        return format_point(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, np.integer):
        value = int(value)
    return format_number(value)


def render_csv(metadata: Dict, headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    buffer.write(CSV_COMMENT_PREFIX + json.dumps(metadata, sort_keys=True) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def _jsonable(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def render_json(metadata: Dict, body: Dict) -> str:
    return json.dumps({"metadata": metadata, **body}, indent=2, sort_keys=True, default=_jsonable) + "\n"


def emit(text: str, output_path: Optional[str]) -> bool:
    """Write a result to --out, or to standard output when no path is given."""
    if not output_path:
        sys.stdout.write(text)
        return True
    try:
        directory = os.path.dirname(output_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"Wrote results to {output_path}")
        return True
    except Exception as e:
        logger.error(f"Error writing results to {output_path}: {e}")
        return False


def parse_walk_config(node: Any, path: str = "walk") -> WalkConfig:
    if node is None:
        return WalkConfig()
    if not isinstance(node, dict):
        raise ConfigError("expected an object", path=path)
    defaults = WalkConfig()
    try:
        return WalkConfig(
            shrink=parse_number(node.get("shrink", defaults.shrink), f"{path}.shrink"),
            max_steps=parse_integer(node.get("max_steps", defaults.max_steps), f"{path}.max_steps"),
            min_radius=parse_number(node.get("min_radius", defaults.min_radius), f"{path}.min_radius"),
        )
    except DomainError as e:
        raise ConfigError(str(e), path=path)
