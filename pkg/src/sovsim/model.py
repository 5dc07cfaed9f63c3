"""Domain types, configuration loading/saving and random system generation.

A configuration document is TOML with the sections ``[system]``,
``[economy]``, ``[boundaries]`` and either explicit ``[nodes.N]`` tables or a
``[generate]`` table that draws the population from the run seed.  See
``docs/config-schema.md`` for every key.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np
import tomli
import tomli_w

MAX_NODES = 1024
MAX_STEPS = 10**6
SHARE_TOL = 1e-9


class ConfigError(ValueError):
    """Raised for unparseable documents and violated invariants."""


class NodeKind(enum.Enum):
    HUMAN = "human"
    AI = "ai"


class DomainClass(enum.IntEnum):
    IRREVERSIBLE = 0
    CRITICAL_RESOURCE = 1
    ORDINARY = 2


DOMAIN_KEYS = ("irreversible", "critical", "ordinary")
SOVEREIGN_DOMAINS = (DomainClass.IRREVERSIBLE, DomainClass.CRITICAL_RESOURCE)


@dataclass(frozen=True)
class SelfExpansion:
    s_exp: float = 0.0
    approved_budget: float = 0.0
    demand: float = 0.0
    # cumulative growth actually granted; nonzero means the node has used
    # self-expansion authority
    granted_total: float = 0.0


@dataclass(frozen=True)
class DecisionNode:
    """One human or AI decision node.

    ``iota`` and ``phi`` are indexed by :class:`DomainClass`.
    """

    id: int
    kind: NodeKind
    lam: float
    iota: tuple[float, float, float]
    rho: float
    phi: tuple[float, float, float]
    capability: float
    friction: float
    alpha: float
    quality: float
    cost: float
    complementarity: float
    share: float
    expansion: SelfExpansion = field(default_factory=SelfExpansion)
    direct_control_critical: bool = False

    @property
    def is_ai(self) -> bool:
        return self.kind is NodeKind.AI


@dataclass(frozen=True)
class BoundaryConfig:
    b1_active: bool = True
    b2_active: bool = True
    b3_active: bool = True
    epsilon: float = 0.0
    erosion_rate: float = 0.0


@dataclass(frozen=True)
class EconomyParams:
    eta: float = 1.0
    delta: float = 0.05
    psi: float = 0.02
    tau: float = 1.0
    friction_decay: float = 0.0
    friction_floor: float = 0.1
    w_h: float = 1.0
    w_a: float = 0.1
    latency_unit: float = 0.1
    nu: float = 1.0
    p_mean: float = 1e-3
    beta: float = 1.0
    gamma: float = 1.0
    reach_gain: float = 0.0
    domain_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    # "homogeneous" uses p_j = p_mean; "beta" draws p_j ~ Beta with mean p_mean
    p_mode: str = "homogeneous"
    p_concentration: float = 100.0


@dataclass(frozen=True)
class SystemState:
    step: int
    nodes: tuple[DecisionNode, ...]
    boundaries: BoundaryConfig
    economy: EconomyParams
    review_level: float = 1.0
    seed: int = 0
    trace_depth: int = 2
    branch_coeff: float = 0.01

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Generator positioned at this step of the run's stream."""
        return np.random.default_rng([self.seed, self.step, stream])

    def node(self, node_id: int) -> DecisionNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def ai_nodes(self) -> tuple[DecisionNode, ...]:
        return tuple(n for n in self.nodes if n.is_ai)

    @property
    def human_nodes(self) -> tuple[DecisionNode, ...]:
        return tuple(n for n in self.nodes if not n.is_ai)


@dataclass(frozen=True)
class ParamRanges:
    """Closed ``(lo, hi)`` intervals for :func:`generate_random_system`."""

    human_lam: tuple[float, float] = (1.0, 5.0)
    ai_lam: tuple[float, float] = (0.5, 2.0)
    ai_alpha: tuple[float, float] = (0.5, 1.5)
    human_capability: tuple[float, float] = (1.0, 2.0)
    ai_capability: tuple[float, float] = (1.0, 3.0)
    human_friction: tuple[float, float] = (1.0, 2.0)
    ai_friction: tuple[float, float] = (2.0, 6.0)
    iota: tuple[float, float] = (1.0, 3.0)
    rho: tuple[float, float] = (1.0, 3.0)
    quality: tuple[float, float] = (0.5, 1.5)
    cost: tuple[float, float] = (0.5, 1.5)
    complementarity: tuple[float, float] = (0.0, 0.5)
    human_phi: tuple[float, float] = (0.5, 1.0)
    ai_phi_irreversible: tuple[float, float] = (0.0, 0.0)
    ai_phi_critical: tuple[float, float] = (0.0, 0.0)
    ai_phi_ordinary: tuple[float, float] = (0.2, 0.8)
    expansion_demand: tuple[float, float] = (0.0, 0.05)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], lenient: bool = False) -> "ParamRanges":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                _unknown(f"generate.ranges.{key}", lenient)
                continue
            if not (isinstance(value, (list, tuple)) and len(value) == 2):
                raise ConfigError(f"generate.ranges.{key}: expected [lo, hi]")
            kwargs[key] = (float(value[0]), float(value[1]))
        return cls(**kwargs)

    def check(self) -> None:
        for f in fields(self):
            lo, hi = getattr(self, f.name)
            if lo > hi:
                raise ConfigError(f"ranges.{f.name}: inverted bounds ({lo} > {hi})")


# ---------------------------------------------------------------- validation


def _require(ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(message)


def validate_economy(econ: EconomyParams) -> None:
    _require(econ.tau > 0, "economy.tau must be > 0")
    _require(econ.friction_floor > 0, "friction_floor must be > 0")
    _require(econ.friction_decay >= 0, "economy.friction_decay must be >= 0")
    for name in ("eta", "delta", "psi", "w_h", "w_a", "latency_unit", "reach_gain"):
        _require(getattr(econ, name) >= 0, f"economy.{name} must be >= 0")
    _require(econ.nu > 0, "economy.nu must be > 0")
    _require(0 < econ.p_mean < 1, "economy.p_mean must lie in (0, 1)")
    _require(econ.beta > 0, "economy.beta must be > 0")
    _require(econ.gamma > 0, "economy.gamma must be > 0")
    w = econ.domain_weights
    _require(len(w) == 3 and all(x >= 0 for x in w), "economy.domain_weights must be 3 nonnegative values")
    _require(abs(sum(w) - 1) <= 1e-9, "economy.domain_weights must sum to 1")
    _require(econ.p_mode in ("homogeneous", "beta"), "economy.p_mode must be 'homogeneous' or 'beta'")
    _require(econ.p_concentration > 0, "economy.p_concentration must be > 0")


def validate_boundaries(b: BoundaryConfig) -> None:
    _require(b.epsilon >= 0, "boundaries.epsilon must be >= 0")
    _require(b.erosion_rate >= 0, "boundaries.erosion_rate must be >= 0")


def validate_node(n: DecisionNode, econ: EconomyParams, boundaries: BoundaryConfig) -> None:
    p = f"nodes.{n.id}"
    _require(n.lam >= 0, f"{p}.lambda must be >= 0")
    _require(all(x > 0 for x in n.iota), f"{p}.iota must be > 0 in every domain")
    _require(n.rho >= 1, f"{p}.rho must be >= 1")
    _require(all(0 <= x <= 1 for x in n.phi), f"{p}.phi must lie in [0, 1]")
    _require(n.capability >= 0, f"{p}.capability must be >= 0")
    _require(n.friction >= econ.friction_floor, f"{p}.friction must be >= friction_floor")
    _require(n.alpha >= 0, f"{p}.alpha must be >= 0")
    _require(n.quality >= 0, f"{p}.quality must be >= 0")
    _require(n.cost > 0, f"{p}.cost must be > 0")
    _require(n.complementarity >= 0, f"{p}.complementarity must be >= 0")
    _require(0 <= n.share <= 1, f"{p}.share must lie in [0, 1]")
    e = n.expansion
    _require(e.s_exp >= 0 and e.approved_budget >= 0 and e.demand >= 0 and e.granted_total >= 0,
             f"{p}: expansion fields must be >= 0")
    if n.is_ai and boundaries.b1_active:
        _require(n.phi[DomainClass.IRREVERSIBLE] == 0, f"{p}: AI phi[irreversible] must be 0 under B1")
    if n.is_ai and boundaries.b2_active:
        _require(not n.direct_control_critical, f"{p}: AI direct control of critical resources violates B2")


def validate_state(state: SystemState) -> None:
    validate_economy(state.economy)
    validate_boundaries(state.boundaries)
    _require(len(state.nodes) >= 1, "at least one node is required")
    _require(len(state.nodes) <= MAX_NODES, f"node count capped at {MAX_NODES}")
    ids = [n.id for n in state.nodes]
    _require(len(set(ids)) == len(ids), "node ids must be unique")
    for n in state.nodes:
        validate_node(n, state.economy, state.boundaries)
    _require(abs(sum(n.share for n in state.nodes) - 1) <= SHARE_TOL, "shares must sum to 1")
    _require(0 <= state.review_level <= 1, "system.review_level must lie in [0, 1]")
    _require(0 <= state.step <= MAX_STEPS, "step out of range")
    _require(state.trace_depth >= 1, "system.trace_depth must be >= 1")
    _require(state.branch_coeff >= 0, "system.branch_coeff must be >= 0")


def apply_boundary_clamps(nodes, boundaries: BoundaryConfig) -> tuple[DecisionNode, ...]:
    """Zero the authority an active B1/B2 forbids for AI nodes."""
    out = []
    for n in nodes:
        if n.is_ai:
            if boundaries.b1_active and n.phi[DomainClass.IRREVERSIBLE] != 0:
                n = replace(n, phi=(0.0, n.phi[1], n.phi[2]))
            if boundaries.b2_active and n.direct_control_critical:
                n = replace(n, direct_control_critical=False)
        out.append(n)
    return tuple(out)


# ------------------------------------------------------------ generation


def generate_random_system(
    seed: int,
    n_human: int,
    n_ai: int,
    ranges: ParamRanges | None = None,
    economy: EconomyParams | None = None,
    boundaries: BoundaryConfig | None = None,
    review_level: float = 1.0,
) -> SystemState:
    """Draw a validated system; a deterministic function of its arguments.

    Humans get ids ``0..n_human-1`` and AI nodes follow.  Shares start
    uniform.
    """
    if n_human < 1 or n_ai < 1:
        raise ConfigError("population must contain at least one human and one AI node")
    if n_human + n_ai > MAX_NODES:
        raise ConfigError(f"node count capped at {MAX_NODES}")
    ranges = ranges or ParamRanges()
    ranges.check()
    economy = economy or EconomyParams()
    boundaries = boundaries or BoundaryConfig()
    rng = np.random.default_rng(seed)

    def u(bounds):
        return float(rng.uniform(bounds[0], bounds[1]))

    n = n_human + n_ai
    nodes = []
    for i in range(n):
        ai = i >= n_human
        iota = (u(ranges.iota), u(ranges.iota), u(ranges.iota))
        if ai:
            phi = (u(ranges.ai_phi_irreversible), u(ranges.ai_phi_critical), u(ranges.ai_phi_ordinary))
        else:
            phi = (u(ranges.human_phi), u(ranges.human_phi), u(ranges.human_phi))
        node = DecisionNode(
            id=i,
            kind=NodeKind.AI if ai else NodeKind.HUMAN,
            lam=u(ranges.ai_lam if ai else ranges.human_lam),
            iota=iota,
            rho=u(ranges.rho),
            phi=phi,
            capability=u(ranges.ai_capability if ai else ranges.human_capability),
            friction=max(economy.friction_floor, u(ranges.ai_friction if ai else ranges.human_friction)),
            alpha=u(ranges.ai_alpha) if ai else 0.0,
            quality=u(ranges.quality),
            cost=u(ranges.cost),
            complementarity=u(ranges.complementarity),
            share=1.0 / n,
            expansion=SelfExpansion(demand=u(ranges.expansion_demand) if ai else 0.0),
            direct_control_critical=not ai,
        )
        nodes.append(node)
    state = SystemState(
        step=0,
        nodes=apply_boundary_clamps(nodes, boundaries),
        boundaries=boundaries,
        economy=economy,
        review_level=review_level,
        seed=seed,
    )
    validate_state(state)
    return state


def adversarial_ranges() -> ParamRanges:
    """Wide, growth-favouring ranges used to stress boundary enforcement."""
    return ParamRanges(
        ai_lam=(1.0, 20.0),
        ai_alpha=(2.0, 10.0),
        ai_capability=(10.0, 100.0),
        ai_friction=(0.5, 2.0),
        rho=(1.0, 10.0),
        iota=(1.0, 10.0),
        ai_phi_irreversible=(0.5, 1.0),
        ai_phi_critical=(0.5, 1.0),
        ai_phi_ordinary=(0.5, 1.0),
        expansion_demand=(0.5, 2.0),
    )


# ------------------------------------------------------------ config I/O

_ECON_SCALARS = {f.name for f in fields(EconomyParams)} - {"domain_weights"}
_BOUNDARY_KEYS = {f.name for f in fields(BoundaryConfig)}
_SYSTEM_KEYS = {"review_level", "seed", "trace_depth", "branch_coeff"}
_NODE_KEYS = {
    "kind", "lambda", "iota", "rho", "phi", "capability", "friction", "alpha",
    "quality", "cost", "complementarity", "share", "s_exp", "approved_budget",
    "expansion_demand", "granted_total", "direct_control_critical",
}
_TOP_KEYS = {"system", "economy", "boundaries", "nodes", "generate"}

NODE_DEFAULTS: dict[str, Any] = {
    "lambda": 1.0, "iota": [1.0, 1.0, 1.0], "rho": 1.0, "capability": 1.0,
    "friction": 1.0, "quality": 1.0, "cost": 1.0, "complementarity": 0.0,
    "s_exp": 0.0, "approved_budget": 0.0, "expansion_demand": 0.0, "granted_total": 0.0,
}


def _unknown(key: str, lenient: bool) -> None:
    if lenient:
        warnings.warn(f"unknown configuration key '{key}' ignored", stacklevel=3)
    else:
        raise ConfigError(f"unknown configuration key '{key}'")


def _domain_triple(value, where: str) -> tuple[float, float, float]:
    if isinstance(value, Mapping):
        extra = set(value) - set(DOMAIN_KEYS)
        if extra:
            raise ConfigError(f"{where}: unknown domain(s) {sorted(extra)}")
        missing = set(DOMAIN_KEYS) - set(value)
        if missing:
            raise ConfigError(f"{where}: missing domain(s) {sorted(missing)}")
        return tuple(float(value[k]) for k in DOMAIN_KEYS)  # type: ignore[return-value]
    if isinstance(value, (list, tuple)) and len(value) == 3:
        return tuple(float(x) for x in value)  # type: ignore[return-value]
    raise ConfigError(f"{where}: expected three values (irreversible, critical, ordinary)")


def _number(section: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def parse_config(text: str) -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from exc


def state_from_dict(doc: Mapping[str, Any], seed: int | None = None, lenient: bool = False) -> SystemState:
    for key in doc:
        if key not in _TOP_KEYS:
            _unknown(key, lenient)

    system = dict(doc.get("system", {}))
    for key in list(system):
        if key not in _SYSTEM_KEYS:
            _unknown(f"system.{key}", lenient)
            del system[key]
    run_seed = int(seed if seed is not None else system.get("seed", 0))

    econ_kwargs: dict[str, Any] = {}
    for key, value in doc.get("economy", {}).items():
        if key == "domain_weights":
            econ_kwargs[key] = _domain_triple(value, "economy.domain_weights")
        elif key == "p_mode":
            econ_kwargs[key] = str(value)
        elif key in _ECON_SCALARS:
            econ_kwargs[key] = _number("economy", key, value)
        else:
            _unknown(f"economy.{key}", lenient)
    economy = EconomyParams(**econ_kwargs)

    b_kwargs: dict[str, Any] = {}
    for key, value in doc.get("boundaries", {}).items():
        if key not in _BOUNDARY_KEYS:
            _unknown(f"boundaries.{key}", lenient)
        elif key.endswith("_active"):
            if not isinstance(value, bool):
                raise ConfigError(f"boundaries.{key}: expected true/false")
            b_kwargs[key] = value
        else:
            b_kwargs[key] = _number("boundaries", key, value)
    boundaries = BoundaryConfig(**b_kwargs)
    validate_economy(economy)
    validate_boundaries(boundaries)

    review_level = float(system.get("review_level", 1.0))
    extras = dict(
        trace_depth=int(system.get("trace_depth", 2)),
        branch_coeff=float(system.get("branch_coeff", 0.01)),
    )

    if "generate" in doc and "nodes" in doc:
        raise ConfigError("use either [generate] or [nodes.N] sections, not both")
    if "generate" in doc:
        gen = dict(doc["generate"])
        ranges = ParamRanges.from_mapping(gen.pop("ranges", {}), lenient)
        n_human = int(gen.pop("n_human", 1))
        n_ai = int(gen.pop("n_ai", 1))
        for key in gen:
            _unknown(f"generate.{key}", lenient)
        state = generate_random_system(run_seed, n_human, n_ai, ranges, economy, boundaries, review_level)
        state = replace(state, **extras)
        validate_state(state)
        return state

    raw_nodes = doc.get("nodes", {})
    if not raw_nodes:
        raise ConfigError("no nodes: add [nodes.N] sections or a [generate] section")
    nodes = []
    for key in sorted(raw_nodes, key=lambda k: int(k)):
        nodes.append(_node_from_dict(int(key), raw_nodes[key], lenient))
    if any(n.share < 0 for n in nodes):
        if not all(n.share < 0 for n in nodes):
            raise ConfigError("shares must be given for every node or for none")
        nodes = [replace(n, share=1.0 / len(nodes)) for n in nodes]
    state = SystemState(
        step=0,
        nodes=apply_boundary_clamps(nodes, boundaries),
        boundaries=boundaries,
        economy=economy,
        review_level=review_level,
        seed=run_seed,
        **extras,
    )
    validate_state(state)
    return state


def _node_from_dict(node_id: int, data: Mapping[str, Any], lenient: bool) -> DecisionNode:
    where = f"nodes.{node_id}"
    for key in data:
        if key not in _NODE_KEYS:
            _unknown(f"{where}.{key}", lenient)
    kind_raw = str(data.get("kind", "")).lower()
    if kind_raw not in ("human", "ai"):
        raise ConfigError(f"{where}.kind: expected 'human' or 'ai'")
    kind = NodeKind(kind_raw)
    v = {**NODE_DEFAULTS, **data}

    def num(key):
        return _number(where, key, v[key])

    ai = kind is NodeKind.AI
    default_phi = [0.0, 0.0, 1.0] if ai else [1.0, 1.0, 1.0]
    return DecisionNode(
        id=node_id,
        kind=kind,
        lam=num("lambda"),
        iota=_domain_triple(v["iota"], f"{where}.iota"),
        rho=num("rho"),
        phi=_domain_triple(v.get("phi", default_phi), f"{where}.phi"),
        capability=num("capability"),
        friction=num("friction"),
        alpha=_number(where, "alpha", v.get("alpha", 1.0 if ai else 0.0)),
        quality=num("quality"),
        cost=num("cost"),
        complementarity=num("complementarity"),
        share=_number(where, "share", v["share"]) if "share" in v else -1.0,
        expansion=SelfExpansion(
            s_exp=num("s_exp"),
            approved_budget=num("approved_budget"),
            demand=num("expansion_demand"),
            granted_total=num("granted_total"),
        ),
        direct_control_critical=bool(v.get("direct_control_critical", not ai)),
    )


def load_config(text: str, seed: int | None = None, lenient: bool = False) -> SystemState:
    """Parse and validate a configuration document into an initial state.

    ``seed`` overrides ``system.seed``.  With ``lenient`` unknown keys only
    warn.
    """
    return state_from_dict(parse_config(text), seed=seed, lenient=lenient)


def state_to_dict(state: SystemState) -> dict:
    """Explicit-node document describing ``state`` (inverse of loading)."""
    econ = asdict(state.economy)
    econ["domain_weights"] = list(state.economy.domain_weights)
    nodes = {}
    for n in state.nodes:
        nodes[str(n.id)] = {
            "kind": n.kind.value,
            "lambda": n.lam,
            "iota": dict(zip(DOMAIN_KEYS, n.iota)),
            "rho": n.rho,
            "phi": dict(zip(DOMAIN_KEYS, n.phi)),
            "capability": n.capability,
            "friction": n.friction,
            "alpha": n.alpha,
            "quality": n.quality,
            "cost": n.cost,
            "complementarity": n.complementarity,
            "share": n.share,
            "s_exp": n.expansion.s_exp,
            "approved_budget": n.expansion.approved_budget,
            "expansion_demand": n.expansion.demand,
            "granted_total": n.expansion.granted_total,
            "direct_control_critical": n.direct_control_critical,
        }
    return {
        "system": {
            "review_level": state.review_level,
            "seed": state.seed,
            "trace_depth": state.trace_depth,
            "branch_coeff": state.branch_coeff,
        },
        "economy": econ,
        "boundaries": asdict(state.boundaries),
        "nodes": nodes,
    }


def dump_config(state: SystemState) -> str:
    return tomli_w.dumps(state_to_dict(state))


def set_path(doc: dict, path: str, value) -> dict:
    """Copy of ``doc`` with the dotted key ``path`` set to ``value``.

    The key must already resolve in the document or be a known optional key
    of its section.
    """
    import copy

    parts = path.split(".")
    out = copy.deepcopy(doc)
    cur = out
    for i, part in enumerate(parts[:-1]):
        if part not in cur:
            if i == 0 and part in ("economy", "boundaries", "system"):
                cur[part] = {}
            else:
                raise ConfigError(f"unknown parameter path '{path}'")
        cur = cur[part]
        if not isinstance(cur, dict):
            raise ConfigError(f"unknown parameter path '{path}'")
    leaf = parts[-1]
    known = {
        "economy": _ECON_SCALARS | {"domain_weights"},
        "boundaries": _BOUNDARY_KEYS,
        "system": _SYSTEM_KEYS,
    }.get(parts[0]) if len(parts) == 2 else None
    if leaf not in cur and not (known and leaf in known):
        raise ConfigError(f"unknown parameter path '{path}'")
    cur[leaf] = value
    return out


def is_finite_state(state: SystemState) -> bool:
    return all(
        math.isfinite(x)
        for n in state.nodes
        for x in (n.lam, n.rho, n.capability, n.friction, n.quality, n.complementarity, n.share)
    )


def derive_seed(*parts: int) -> int:
    """Stable 63-bit seed from integer parts (independent of call order)."""
    state = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def config_digest(state: SystemState) -> str:
    import hashlib

    return hashlib.sha256(dump_config(state).encode()).hexdigest()[:16]
