"""JSON experiment configuration: parsing and validation.

Schema (all experiments):
  experiment: "index_table" | "policy_grid" | "sweep"
  servers:    [{"q": 0.5, "d": 2}, ...]     d omitted or "infinite" means PS
  cost:       {"type": "linear", "C": 1.0}
              | {"type": "mean_variance", "beta": ..., "theta": ...}
              or a list with one cost object per server
  p:          0.3 | {"from": 0.05, "to": 0.75, "steps": 15}
  D:          100.0 | "infinite"
  policies:   subset of ["whittle", "jsq", "jsew", "rsa", "optimal"]
  B, epsilon, horizon, warmup, seeds, n_max, output: optional tuning knobs

Validation failures raise ConfigError whose message names the offending
field path.
"""

import json
from dataclasses import dataclass

import numpy as np

from .costs import CostSpec, cost_from_config
from .errors import ConfigError
from .queueing import ServerParams
from .whittle import BlockingCost

KNOWN_POLICIES = ("whittle", "jsq", "jsew", "rsa", "optimal")
KNOWN_KEYS = {
    "experiment", "servers", "cost", "p", "D", "policies",
    "B", "epsilon", "horizon", "warmup", "seeds", "n_max", "output",
}
DEFAULT_SWEEP_POINTS = 20


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    servers: tuple[ServerParams, ...]
    costs: tuple[CostSpec, ...]
    p_values: tuple[float, ...]
    D: BlockingCost
    policies: tuple[str, ...]
    B: int = 20
    epsilon: float = 1e-8
    horizon: int = 200_000
    warmup: int = 20_000
    seeds: tuple[int, ...] = (0,)
    n_max: int = 200
    output: str = ""

    @property
    def q_total(self) -> float:
        return sum(s.q for s in self.servers)


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _number(obj, path, lo=None, hi=None):
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        _fail(path, f"expected a number, got {obj!r}")
    v = float(obj)
    if lo is not None and v < lo:
        _fail(path, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        _fail(path, f"must be <= {hi}, got {v}")
    return v


def _integer(obj, path, lo=None):
    if not isinstance(obj, int) or isinstance(obj, bool):
        _fail(path, f"expected an integer, got {obj!r}")
    if lo is not None and obj < lo:
        _fail(path, f"must be >= {lo}, got {obj}")
    return obj


def _parse_server(obj, path) -> ServerParams:
    if not isinstance(obj, dict):
        _fail(path, "expected an object with fields q and d")
    q = _number(obj.get("q"), f"{path}.q", lo=1e-12, hi=1.0)
    d = obj.get("d")
    if d is None or d == "infinite":
        d_val = None
    else:
        d_val = _integer(d, f"{path}.d", lo=1)
    label = obj.get("label", "")
    try:
        return ServerParams(q=q, d=d_val, label=str(label))
    except ValueError as e:
        _fail(path, str(e))


def _parse_cost(obj, path) -> CostSpec:
    if not isinstance(obj, dict) or "type" not in obj:
        _fail(path, 'expected {"type": ...} cost object')
    try:
        return cost_from_config(obj)
    except (ValueError, KeyError, TypeError) as e:
        _fail(path, str(e))


def _parse_p(obj, path, q_total) -> tuple[float, ...]:
    if isinstance(obj, dict):
        lo = _number(obj.get("from"), f"{path}.from", lo=0.0)
        hi = _number(obj.get("to"), f"{path}.to", hi=1.0)
        steps = _integer(obj.get("steps"), f"{path}.steps", lo=1)
        if not lo < hi:
            _fail(path, f"need from < to, got [{lo}, {hi}]")
        return tuple(np.linspace(lo, hi, steps))
    return (_number(obj, path, lo=0.0, hi=1.0),)


def default_p_grid(q_total: float, points: int = DEFAULT_SWEEP_POINTS) -> tuple[float, ...]:
    """Evenly spaced arrival probabilities inside the stability region."""
    top = min(q_total, 1.0)
    return tuple(top * j / (points + 1) for j in range(1, points + 1))


def load_config(path_or_dict) -> ExperimentConfig:
    if isinstance(path_or_dict, dict):
        raw = path_or_dict
    else:
        try:
            with open(path_or_dict) as f:
                raw = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        _fail(sorted(unknown)[0], "unknown field")

    experiment = raw.get("experiment", "sweep")
    if experiment not in ("index_table", "policy_grid", "sweep"):
        _fail("experiment", f"must be index_table, policy_grid or sweep, got {experiment!r}")

    servers_raw = raw.get("servers")
    if not isinstance(servers_raw, list) or not servers_raw:
        _fail("servers", "expected a non-empty list of {q, d} objects")
    servers = tuple(
        _parse_server(s, f"servers[{i}]") for i, s in enumerate(servers_raw)
    )

    cost_raw = raw.get("cost", {"type": "linear", "C": 1.0})
    if isinstance(cost_raw, list):
        if len(cost_raw) != len(servers):
            _fail("cost", f"need one cost per server ({len(servers)}), got {len(cost_raw)}")
        costs = tuple(_parse_cost(c, f"cost[{i}]") for i, c in enumerate(cost_raw))
    else:
        one = _parse_cost(cost_raw, "cost")
        costs = (one,) * len(servers)

    q_total = sum(s.q for s in servers)
    if "p" in raw:
        p_values = _parse_p(raw["p"], "p", q_total)
    else:
        p_values = default_p_grid(q_total)

    D_raw = raw.get("D", "infinite")
    if D_raw == "infinite":
        D = None
    else:
        D = _number(D_raw, "D", lo=0.0)

    policies_raw = raw.get("policies", ["whittle"])
    if not isinstance(policies_raw, list) or not policies_raw:
        _fail("policies", "expected a non-empty list")
    for i, name in enumerate(policies_raw):
        if name not in KNOWN_POLICIES:
            _fail(f"policies[{i}]", f"unknown policy {name!r}; choose from {KNOWN_POLICIES}")
    if "optimal" in policies_raw and len(servers) > 3:
        _fail("policies", "the exact optimal benchmark is limited to 3 servers")

    cfg = ExperimentConfig(
        experiment=experiment,
        servers=servers,
        costs=costs,
        p_values=p_values,
        D=D,
        policies=tuple(policies_raw),
        B=_integer(raw.get("B", 20), "B", lo=2),
        epsilon=_number(raw.get("epsilon", 1e-8), "epsilon", lo=0.0),
        horizon=_integer(raw.get("horizon", 200_000), "horizon", lo=100),
        warmup=_integer(raw.get("warmup", 20_000), "warmup", lo=0),
        seeds=tuple(
            _integer(s, f"seeds[{i}]", lo=0)
            for i, s in enumerate(raw.get("seeds", [0]))
        ),
        n_max=_integer(raw.get("n_max", 200), "n_max", lo=1),
        output=str(raw.get("output", "")),
    )
    if cfg.warmup >= cfg.horizon:
        _fail("warmup", f"must be below horizon {cfg.horizon}, got {cfg.warmup}")
    return cfg
