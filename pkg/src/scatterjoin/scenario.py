"""Scenario definition, validation, JSON round-tripping, and random generation."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, asdict

from .channel import Position, RadioParams, hears
from .join_scored import ScoreWeights

CI_TIERS_MS = (50.0, 100.0, 200.0, 400.0)
RATE_TIERS_PPS = (0.0, 2.0, 5.0, 20.0)  # the 20 pps tier creates saturated branches


class ScenarioError(ValueError):
    """Scenario file or structure is invalid; message names the offending field."""


class GenerationError(RuntimeError):
    """Random generation could not satisfy the connectivity requirements."""


@dataclass
class NodeSpec:
    id: int
    pos: tuple[float, float]
    ci_ms: float = 100.0
    b_max: int = 30
    slave_capacity: int = 3
    traffic_rate_pps: float = 0.0


@dataclass
class EngineParams:
    t_adv_ms: float = 200.0
    warmup_ms: float = 5000.0
    measure_ms: float = 60000.0
    probe_rate: float = 10.0
    n_ce: int = 4
    max_wait_ms: float = 10000.0


@dataclass
class Thresholds:
    rl_min_dbm: float = -85.0
    b_fair: int = 1
    theta_sat: float = 0.8


@dataclass
class Scenario:
    name: str
    nodes: list[NodeSpec]
    sink_id: int = 1
    new_node_id: int = 2
    radio: RadioParams = field(default_factory=RadioParams)
    engine: EngineParams = field(default_factory=EngineParams)
    weights: ScoreWeights = field(default_factory=ScoreWeights)
    thresholds: Thresholds = field(default_factory=Thresholds)
    declared_unjoinable: bool = False

    def node(self, node_id: int) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


def _check_keys(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ScenarioError(f"unknown field(s) in {where}: {', '.join(sorted(unknown))}")


def _build_block(block: dict, cls, where: str):
    allowed = {f for f in cls.__dataclass_fields__}
    _check_keys(block, allowed, where)
    try:
        return cls(**block)
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"{where}: {e}") from e


def parse_scenario(doc: dict) -> Scenario:
    """Build and validate a Scenario from a parsed JSON document."""
    top = {"name", "nodes", "sink_id", "new_node_id", "radio", "engine",
           "weights", "thresholds", "declared_unjoinable"}
    _check_keys(doc, top, "scenario")
    if "nodes" not in doc:
        raise ScenarioError("scenario: missing nodes")
    nodes = []
    for i, nd in enumerate(doc["nodes"]):
        _check_keys(nd, set(NodeSpec.__dataclass_fields__), f"nodes[{i}]")
        if "id" not in nd or "pos" not in nd:
            raise ScenarioError(f"nodes[{i}]: id and pos are required")
        pos = nd["pos"]
        if not (isinstance(pos, (list, tuple)) and len(pos) == 2):
            raise ScenarioError(f"nodes[{i}].pos: expected [x, y]")
        kwargs = dict(nd)
        kwargs["pos"] = (float(pos[0]), float(pos[1]))
        nodes.append(NodeSpec(**kwargs))
    s = Scenario(
        name=doc.get("name", "unnamed"),
        nodes=nodes,
        sink_id=doc.get("sink_id", 1),
        new_node_id=doc.get("new_node_id", 0),
        radio=_build_block(doc.get("radio", {}), RadioParams, "radio"),
        engine=_build_block(doc.get("engine", {}), EngineParams, "engine"),
        weights=_build_block(doc.get("weights", {}), ScoreWeights, "weights"),
        thresholds=_build_block(doc.get("thresholds", {}), Thresholds, "thresholds"),
        declared_unjoinable=doc.get("declared_unjoinable", False),
    )
    validate_scenario(s)
    return s


def validate_scenario(s: Scenario) -> None:
    seen = set()
    for n in s.nodes:
        if n.id in seen:
            raise ScenarioError(f"nodes: duplicate id {n.id}")
        seen.add(n.id)
        if n.ci_ms <= 0:
            raise ScenarioError(f"nodes[{n.id}].ci_ms: must be > 0")
        if n.b_max < 1:
            raise ScenarioError(f"nodes[{n.id}].b_max: must be >= 1")
        if n.slave_capacity < 0:
            raise ScenarioError(f"nodes[{n.id}].slave_capacity: must be >= 0")
        if n.traffic_rate_pps < 0:
            raise ScenarioError(f"nodes[{n.id}].traffic_rate_pps: must be >= 0")
    if s.sink_id not in seen:
        raise ScenarioError(f"sink_id: node {s.sink_id} missing from nodes")
    if s.sink_id != 1:
        raise ScenarioError("sink_id: the sink carries the reserved id 1")
    if s.new_node_id not in seen:
        raise ScenarioError(f"new_node_id: node {s.new_node_id} missing from nodes")
    if s.new_node_id == s.sink_id:
        raise ScenarioError("new_node_id: must differ from sink_id")

    positions = {n.id: Position(*n.pos) for n in s.nodes}
    existing = [n.id for n in s.nodes if n.id != s.new_node_id]
    if not _connected(existing, positions, s.radio):
        raise ScenarioError("nodes: hearing graph without the new node is disconnected")
    new_pos = positions[s.new_node_id]
    heard = [nid for nid in existing
             if hears(new_pos, positions[nid], s.radio)[0]]
    if not heard and not s.declared_unjoinable:
        raise ScenarioError(
            "new_node_id: new node hears nobody and declared_unjoinable is not set")


def _connected(ids, positions, radio, min_rssi=None) -> bool:
    if not ids:
        return True
    threshold = radio.rx_threshold_dbm if min_rssi is None else min_rssi
    seen = {ids[0]}
    frontier = [ids[0]]
    while frontier:
        cur = frontier.pop()
        for other in ids:
            if other in seen:
                continue
            _, rl = hears(positions[cur], positions[other], radio)
            if rl >= threshold:
                seen.add(other)
                frontier.append(other)
    return len(seen) == len(ids)


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "sink_id": s.sink_id,
        "new_node_id": s.new_node_id,
        "nodes": [{**asdict(n), "pos": list(n.pos)} for n in s.nodes],
        "radio": asdict(s.radio),
        "engine": asdict(s.engine),
        "weights": asdict(s.weights),
        "thresholds": asdict(s.thresholds),
        "declared_unjoinable": s.declared_unjoinable,
    }


def write_scenario(s: Scenario, path) -> None:
    with open(path, "w") as f:
        json.dump(scenario_to_dict(s), f, indent=2)
        f.write("\n")


def load_scenario(path) -> Scenario:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"parse error in {path}: {e}") from e
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    return parse_scenario(doc)


def training11() -> Scenario:
    """Built-in 11-node training network plus the joining device.

    Two branches hang off the sink: branch A ends in a 20 pps generator
    on a slow (400 ms CI) link, so it saturates under load; branch B is
    lightly loaded on fast links. The new node (id 12) hears the tail of
    both branches, slightly favoring the saturated one on raw RSSI.
    """
    n = NodeSpec
    nodes = [
        n(1, (0.0, 0.0), ci_ms=50.0, slave_capacity=4),            # sink
        n(2, (9.0, 0.0), ci_ms=100.0),                             # branch A hop 1
        n(3, (17.0, 4.0), ci_ms=100.0),                            # branch A hop 2
        n(4, (22.0, 11.0), ci_ms=400.0, traffic_rate_pps=20.0),    # branch A tail, hot
        n(5, (26.0, 3.0), ci_ms=100.0),                            # branch A side node
        n(6, (0.0, 9.0), ci_ms=50.0),                              # branch B hop 1
        n(7, (4.0, 17.0), ci_ms=50.0, traffic_rate_pps=2.0),       # branch B hop 2
        n(8, (11.0, 22.0), ci_ms=50.0),                            # branch B tail
        n(9, (-8.0, 5.0), ci_ms=50.0, traffic_rate_pps=2.0),       # branch B side node
        n(10, (-6.0, -7.0), ci_ms=100.0, traffic_rate_pps=2.0),    # leaf
        n(11, (9.0, -9.0), ci_ms=100.0, traffic_rate_pps=2.0),     # leaf
        n(12, (17.8, 17.2), ci_ms=50.0),                           # joining device
    ]
    s = Scenario(name="training11", nodes=nodes, sink_id=1, new_node_id=12)
    validate_scenario(s)
    return s


def gen_random_scenario(n_nodes: int = 16, seed: int = 0, area_m: float = 30.0,
                        radio: RadioParams | None = None,
                        engine: EngineParams | None = None,
                        weights: ScoreWeights | None = None,
                        thresholds: Thresholds | None = None,
                        max_retries: int = 500) -> Scenario:
    """Uniform random layout in an area_m x area_m square, deterministic per seed.

    Nodes are resampled until the hearing graph without the new node is
    connected, the new node hears at least two candidates, and — so the
    scored strategy's RSSI filter cannot strand anyone — the same holds
    over links at or above the filter threshold, with both join strategies
    able to attach every pre-existing node. The usable candidates must
    also sit on at least two distinct branches of the built tree, so every
    trial confronts the joiner with a real choice.
    """
    if n_nodes < 3:
        raise GenerationError("n_nodes must be >= 3")
    radio = radio or RadioParams()
    engine = engine or EngineParams()
    weights = weights or ScoreWeights()
    thresholds = thresholds or Thresholds()
    rng = random.Random(f"scatterjoin-scenario:{seed}")
    new_id = n_nodes

    for _ in range(max_retries):
        nodes = []
        for nid in range(1, n_nodes + 1):
            pos = (rng.uniform(0.0, area_m), rng.uniform(0.0, area_m))
            ci = rng.choice(CI_TIERS_MS)
            rate = 0.0 if nid in (1, new_id) else rng.choice(RATE_TIERS_PPS)
            nodes.append(NodeSpec(nid, pos, ci_ms=ci, traffic_rate_pps=rate))
        s = Scenario(name=f"random{n_nodes}-seed{seed}", nodes=nodes,
                     sink_id=1, new_node_id=new_id, radio=radio, engine=engine,
                     weights=weights, thresholds=thresholds)
        if _acceptable(s):
            validate_scenario(s)
            return s
    raise GenerationError(
        f"no viable layout after {max_retries} tries (seed {seed}); "
        "try a larger area or more nodes")


def _acceptable(s: Scenario) -> bool:
    from .engine import build_trial_network  # local import to avoid a cycle

    positions = {n.id: Position(*n.pos) for n in s.nodes}
    existing = [n.id for n in s.nodes if n.id != s.new_node_id]
    if not _connected(existing, positions, s.radio):
        return False
    if not _connected(existing, positions, s.radio, min_rssi=s.thresholds.rl_min_dbm):
        return False
    new_pos = positions[s.new_node_id]
    usable = [nid for nid in existing
              if hears(new_pos, positions[nid], s.radio)[1] >= s.thresholds.rl_min_dbm]
    if len(usable) < 2:
        return False
    for algo in ("baseline", "scored"):
        net = build_trial_network(s, algo)
        attached = sum(1 for nid in existing if net.nodes[nid].master is not None)
        if attached != len(existing) - 1:  # everyone but the sink
            return False
        # a real decision exists: usable candidates on >= 2 distinct branches
        def branch(nid):
            path = net.path_to_root(nid)
            return path[-2] if len(path) >= 2 else nid
        if len({branch(u) for u in usable}) < 2:
            return False
    return True
