"""Mesh state: nodes, clusters, the master/slave tree, and the packets they exchange."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .channel import Position

SINK_ID = 1


class SlotExhausted(Exception):
    """Target node has no free slave slot."""


class TopologyError(Exception):
    """An attach would violate the cluster-tree structure."""


@dataclass
class DataPacket:
    seq: int
    src: int
    dst: int
    created_at_ms: float
    hops_traversed: int = 0


@dataclass(frozen=True)
class StatusAdvert:
    """Periodic broadcast carrying the sender's live joining inputs.

    rn_dbm is the RSSI of the sender's own uplink to its master, absent
    for cluster roots. children lets a joiner identify this node's slaves
    for the fairness redirect.
    """

    sender: int
    cluster_id: int
    cluster_size: int
    m_slaves: int
    h_hops: int
    b_occupancy: int
    ci_ms: float
    rn_dbm: float | None
    free_out: int
    children: tuple[int, ...]


@dataclass(frozen=True)
class JoinMePacket:
    sender: int
    cluster_id: int
    cluster_size: int
    free_in: int
    free_out: int
    ack_field: int | None = None


@dataclass
class NodeState:
    id: int
    pos: Position
    ci_ms: float = 100.0
    b_max: int = 30
    slave_capacity: int = 3
    traffic_rate_pps: float = 0.0
    cluster_id: int = -1
    cluster_size: int = 1
    master: int | None = None
    slaves: list[int] = field(default_factory=list)
    hops_to_sink: int = 0
    buffer: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.id < 1:
            raise ValueError("node ids are positive integers")
        if self.cluster_id == -1:
            self.cluster_id = self.id

    @property
    def free_out(self) -> int:
        return self.slave_capacity - len(self.slaves)

    @property
    def free_in(self) -> int:
        return 0 if self.master is not None else 1


class Network:
    """Mutable network state owned by a single trial."""

    def __init__(self, nodes, sink_id: int = SINK_ID):
        self.nodes: dict[int, NodeState] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise ValueError(f"duplicate node id {n.id}")
            self.nodes[n.id] = n
        if sink_id not in self.nodes:
            raise ValueError(f"sink id {sink_id} not present")
        self.sink_id = sink_id

    def cluster_members(self, cluster_id: int) -> list[int]:
        return [nid for nid, n in sorted(self.nodes.items()) if n.cluster_id == cluster_id]

    def attach(self, child_id: int, parent_id: int) -> None:
        """Merge the child's cluster under parent: child becomes parent's slave.

        The child must be the root of its own cluster; its whole cluster
        adopts the parent's cluster id and gets its hop counts recomputed.
        """
        child = self.nodes[child_id]
        parent = self.nodes[parent_id]
        if parent.free_out < 1:
            raise SlotExhausted(f"node {parent_id} has no free slave slot")
        if child.master is not None:
            raise TopologyError(f"node {child_id} already has a master")
        if child.cluster_id == parent.cluster_id:
            raise TopologyError(
                f"attaching {child_id} under {parent_id} would create a cycle")

        old_cluster = child.cluster_id
        merged = parent.cluster_size + child.cluster_size
        child.master = parent_id
        parent.slaves.append(child_id)
        for n in self.nodes.values():
            if n.cluster_id in (old_cluster, parent.cluster_id):
                n.cluster_id = parent.cluster_id
                n.cluster_size = merged
        # hop counts for the absorbed subtree
        child.hops_to_sink = parent.hops_to_sink + 1
        stack = [child_id]
        while stack:
            nid = stack.pop()
            for sid in self.nodes[nid].slaves:
                self.nodes[sid].hops_to_sink = self.nodes[nid].hops_to_sink + 1
                stack.append(sid)

    def path_to_root(self, node_id: int) -> list[int]:
        """Node ids from node_id up the master chain to its cluster root."""
        path = [node_id]
        seen = {node_id}
        cur = self.nodes[node_id]
        while cur.master is not None:
            nxt = cur.master
            if nxt in seen:
                raise TopologyError(f"master-link cycle at node {nxt}")
            path.append(nxt)
            seen.add(nxt)
            cur = self.nodes[nxt]
        return path

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural invariant is broken."""
        by_cluster: dict[int, list[NodeState]] = {}
        for n in self.nodes.values():
            by_cluster.setdefault(n.cluster_id, []).append(n)
        total = 0
        for cid, members in by_cluster.items():
            size = len(members)
            total += size
            roots = [n for n in members if n.master is None]
            assert len(roots) == 1, f"cluster {cid} has {len(roots)} roots"
            root = roots[0]
            assert root.hops_to_sink == 0, f"root {root.id} has nonzero hops"
            edges = 0
            for n in members:
                assert n.cluster_size == size, \
                    f"node {n.id} believes cluster size {n.cluster_size}, actual {size}"
                assert n.free_out >= 0, f"node {n.id} over-subscribed slots"
                assert len(n.buffer) <= n.b_max, f"node {n.id} buffer overflow"
                for sid in n.slaves:
                    s = self.nodes[sid]
                    assert s.master == n.id, f"slave {sid} does not point back to {n.id}"
                    assert s.cluster_id == cid
                    assert s.hops_to_sink == n.hops_to_sink + 1, \
                        f"node {sid}: hops {s.hops_to_sink} != parent {n.hops_to_sink}+1"
                    edges += 1
            assert edges == size - 1, f"cluster {cid}: {edges} edges for {size} nodes"
            # tree reachability from the root
            reached = set()
            stack = [root.id]
            while stack:
                nid = stack.pop()
                assert nid not in reached, f"cycle through node {nid}"
                reached.add(nid)
                stack.extend(self.nodes[nid].slaves)
            assert len(reached) == size, f"cluster {cid} is not connected"
        assert total == len(self.nodes)
        sink = self.nodes.get(self.sink_id)
        if sink is not None and sink.master is None:
            for nid in self.cluster_members(sink.cluster_id):
                path = self.path_to_root(nid)
                assert path[-1] == self.sink_id
                assert len(path) - 1 == self.nodes[nid].hops_to_sink


def make_status_advert(node: NodeState, rn_measured: float | None = None) -> StatusAdvert:
    """Snapshot the node's live state into a status broadcast."""
    if node.master is None and rn_measured is not None:
        raise ValueError("rn is only meaningful for nodes with a master")
    if node.master is not None and rn_measured is None:
        raise ValueError("rn_measured required for a node with a master")
    return StatusAdvert(
        sender=node.id,
        cluster_id=node.cluster_id,
        cluster_size=node.cluster_size,
        m_slaves=len(node.slaves),
        h_hops=node.hops_to_sink,
        b_occupancy=len(node.buffer),
        ci_ms=node.ci_ms,
        rn_dbm=rn_measured,
        free_out=node.free_out,
        children=tuple(node.slaves),
    )


def make_joinme(node: NodeState, ack_field: int | None = None) -> JoinMePacket:
    return JoinMePacket(
        sender=node.id,
        cluster_id=node.cluster_id,
        cluster_size=node.cluster_size,
        free_in=node.free_in,
        free_out=node.free_out,
        ack_field=ack_field,
    )
