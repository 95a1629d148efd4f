"""Seeded discrete-event trial: build the mesh, warm it up, measure one join.

A trial runs three phases on one Network owned by one engine instance:
existing nodes form a sink-rooted tree using the selected join strategy,
background traffic warms the buffers up, then the designated new node
listens, decides, attaches, and streams probe packets to the sink while
per-node buffer occupancy is integrated. Identical (scenario, algo, seed)
triples produce bit-identical results; event ties break on
(time, kind, node id).
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import NamedTuple

from .channel import Position, RadioParams, hears
from .join_baseline import CONNECT, HeardJoinMe, baseline_select
from .join_scored import (CandidateInfo, filter_candidates, make_joinme_ack,
                          select_parent)
from .model import DataPacket, Network, NodeState, make_joinme, make_status_advert
from .scenario import Scenario

# event kinds, in tie-break order
KIND_STATUS = 0
KIND_JOINME = 1
KIND_CONN = 2
KIND_GEN = 3
KIND_END = 4

ALGOS = ("baseline", "scored")


class Event(NamedTuple):
    at_ms: float
    kind: int
    node: int
    peer: int = 0


@dataclass
class ProbeRecord:
    seq: int
    created_at_ms: float
    delivered_at_ms: float | None = None
    dropped: bool = False
    hops: int = 0


@dataclass
class TrialResult:
    trial_seed: int
    algo: str
    joined: bool
    chosen_parent: int | None
    join_time_ms: float | None
    hops_at_join: int | None
    path_to_sink: list[int]
    probes: list[ProbeRecord]
    probe_sent: int
    probe_delivered: int
    probe_dropped: int
    probe_in_flight: int
    total_sent: int
    total_delivered: int
    total_dropped: int
    total_in_flight: int
    buffer_avg: dict = field(default_factory=dict)      # node -> mean occupancy, measurement window
    overflow_drops: dict = field(default_factory=dict)  # node -> drops, measurement window
    node_b_max: dict = field(default_factory=dict)
    sat_branch: bool | None = None
    eligible_sat: bool = False
    avoided_sat: bool = False


class ShadowMap:
    """Per-ordered-pair shadowing draws, frozen for the whole trial.

    Drawn eagerly in id order so paired runs of both algorithms on the
    same seed see identical link conditions.
    """

    def __init__(self, seed: int, sigma: float, node_ids):
        self.sigma = sigma
        self._draws = {}
        if sigma > 0:
            rng = random.Random(f"scatterjoin-shadow:{seed}")
            ids = sorted(node_ids)
            for a in ids:
                for b in ids:
                    if a != b:
                        self._draws[(a, b)] = rng.gauss(0.0, 1.0)

    def draw(self, a: int, b: int) -> float:
        if self.sigma == 0:
            return 0.0
        return self._draws[(a, b)]


def link_rssi(net: Network, radio: RadioParams, shadow: ShadowMap | None,
              at_id: int, from_id: int) -> tuple[bool, float]:
    """from_id's signal as received at at_id."""
    noise = shadow.draw(at_id, from_id) if shadow is not None else 0.0
    return hears(net.nodes[at_id].pos, net.nodes[from_id].pos, radio, noise)


def candidate_from_advert(advert, rl_dbm: float) -> CandidateInfo:
    return CandidateInfo(
        id=advert.sender, cluster_id=advert.cluster_id,
        cluster_size=advert.cluster_size, m=advert.m_slaves, h=advert.h_hops,
        b=advert.b_occupancy, ci_ms=advert.ci_ms, rl_dbm=rl_dbm,
        rn_dbm=advert.rn_dbm, free_out=advert.free_out, children=advert.children)


def broadcast_status(node: NodeState, net: Network, radio: RadioParams,
                     shadow: ShadowMap | None = None):
    """Deliver a fresh status advert to every node in range.

    Returns (receiver_id, advert, rl_dbm) triples. The advert snapshots
    the sender's state at emission time, so b_occupancy is instantaneous.
    """
    rn = None
    if node.master is not None:
        _, rn = link_rssi(net, radio, shadow, node.id, node.master)
    advert = make_status_advert(node, rn)
    deliveries = []
    for rid in sorted(net.nodes):
        if rid == node.id:
            continue
        heard, rl = link_rssi(net, radio, shadow, rid, node.id)
        if heard:
            deliveries.append((rid, advert, rl))
    return deliveries


def generate_traffic(rate_pps: float, horizon_ms: float, rng: random.Random) -> list[float]:
    """Poisson arrival times in ms over [0, horizon_ms) from the given stream."""
    if rate_pps <= 0:
        return []
    times = []
    t = 0.0
    scale = 1000.0 / rate_pps
    while True:
        t += rng.expovariate(1.0) * scale
        if t >= horizon_ms:
            return times
        times.append(t)


def connection_event(net: Network, sender_id: int, receiver_id: int, n_ce: int,
                     on_delivered=None, on_dropped=None, now_ms: float = 0.0) -> int:
    """One connection event on a link: move up to n_ce packets.

    Packets leave the sender's buffer head for the receiver's tail, each
    gaining a hop. A packet reaching the sink (its destination) is
    consumed via on_delivered; one meeting a full receiver buffer is lost
    via on_dropped. Returns how many packets left the sender.
    """
    sender = net.nodes[sender_id]
    receiver = net.nodes[receiver_id]
    n = min(n_ce, len(sender.buffer))
    for _ in range(n):
        pkt = sender.buffer.popleft()
        pkt.hops_traversed += 1
        if receiver_id == net.sink_id and pkt.dst == net.sink_id:
            if on_delivered is not None:
                on_delivered(pkt, now_ms)
        elif len(receiver.buffer) >= receiver.b_max:
            if on_dropped is not None:
                on_dropped(pkt, receiver_id)
        else:
            receiver.buffer.append(pkt)
    return n


def _gather_candidates(net, joiner_id, radio, shadow):
    """Live candidate records for every heard member of the sink's cluster."""
    joiner = net.nodes[joiner_id]
    sink_cluster = net.nodes[net.sink_id].cluster_id
    cands = []
    for mid in net.cluster_members(sink_cluster):
        member = net.nodes[mid]
        if member.free_out < 1:
            continue
        heard, rl = link_rssi(net, radio, shadow, joiner_id, mid)
        if not heard:
            continue
        rn = None
        if member.master is not None:
            _, rn = link_rssi(net, radio, shadow, mid, member.master)
        cands.append(candidate_from_advert(make_status_advert(member, rn), rl))
    return cands


def build_network(net: Network, algo: str, radio: RadioParams, weights,
                  thresholds, shadow: ShadowMap | None = None,
                  on_attach=None, exclude=()) -> None:
    """Sink-anchored build-up: unattached roots join the sink's cluster.

    Ascending-id passes, one attach at a time, repeated until a full pass
    makes no progress. Baseline takes the strongest heard member with a
    free slot; scored runs the filter/score pipeline over the same
    candidates. Nodes out of reach of the growing cluster stay roots.
    """
    if algo not in ALGOS:
        raise ValueError(f"unknown algorithm {algo!r}")
    while True:
        progress = False
        for nid in sorted(net.nodes):
            node = net.nodes[nid]
            if nid in exclude or nid == net.sink_id or node.master is not None:
                continue
            if node.cluster_id == net.nodes[net.sink_id].cluster_id:
                continue
            cands = _gather_candidates(net, nid, radio, shadow)
            if not cands:
                continue
            if algo == "baseline":
                parent = max(cands, key=lambda c: (c.rl_dbm, -c.id)).id
            else:
                filtered = filter_candidates(cands, thresholds.rl_min_dbm,
                                             thresholds.b_fair)
                parent = select_parent(filtered, weights)
            if parent is None:
                continue
            net.attach(nid, parent)
            if on_attach is not None:
                on_attach(net, nid, parent)
            progress = True
        if not progress:
            return


def make_network(scenario: Scenario) -> Network:
    nodes = [NodeState(id=sp.id, pos=Position(*sp.pos), ci_ms=sp.ci_ms,
                       b_max=sp.b_max, slave_capacity=sp.slave_capacity,
                       traffic_rate_pps=sp.traffic_rate_pps)
             for sp in scenario.nodes]
    return Network(nodes, sink_id=scenario.sink_id)


def build_trial_network(scenario: Scenario, algo: str,
                        shadow: ShadowMap | None = None, on_attach=None) -> Network:
    """Network after the phase-1 build-up, before any traffic."""
    net = make_network(scenario)
    build_network(net, algo, scenario.radio, scenario.weights,
                  scenario.thresholds, shadow=shadow, on_attach=on_attach,
                  exclude={scenario.new_node_id})
    return net


class _Meter:
    """Piecewise-constant integral of one node's buffer occupancy."""

    __slots__ = ("area", "last_ms", "drops")

    def __init__(self):
        self.area = 0.0
        self.last_ms = 0.0
        self.drops = 0

    def avg_until(self, occupancy: int, now_ms: float) -> float:
        if now_ms <= 0:
            return 0.0
        return (self.area + occupancy * (now_ms - self.last_ms)) / now_ms


class TrialEngine:
    """Single-threaded event loop owning one trial's network and RNG streams."""

    def __init__(self, scenario: Scenario, algo: str, seed: int):
        if algo not in ALGOS:
            raise ValueError(f"unknown algorithm {algo!r}")
        self.scenario = scenario
        self.algo = algo
        self.seed = seed
        self.radio = scenario.radio
        self.net = make_network(scenario)
        self.shadow = ShadowMap(seed, scenario.radio.shadowing_sigma_db,
                                list(self.net.nodes))
        self.meters = {nid: _Meter() for nid in self.net.nodes}
        self.heap: list[Event] = []
        self.heard: dict[int, tuple] = {}  # sender -> (advert, joinme, rl)
        self.probes: list[ProbeRecord] = []
        self._probe_by_seq: dict[int, ProbeRecord] = {}
        self.total_sent = self.total_delivered = self.total_dropped = 0
        self.probe_sent = self.probe_delivered = self.probe_dropped = 0
        self._seq = 0
        self.joined = False
        self.done = False
        self.result: TrialResult | None = None
        self.t_listen = scenario.engine.warmup_ms
        self.t_join: float | None = None
        self.chosen: int | None = None
        self.path: list[int] = []
        self.eligible_sat = False
        self.avoided_sat = False
        self._join_snap_area: dict[int, float] = {}
        self._join_snap_drops: dict[int, int] = {}

    # -- bookkeeping -------------------------------------------------

    def _touch(self, nid: int, now_ms: float) -> None:
        m = self.meters[nid]
        m.area += len(self.net.nodes[nid].buffer) * (now_ms - m.last_ms)
        m.last_ms = now_ms

    def _delivered(self, pkt: DataPacket, now_ms: float) -> None:
        self.total_delivered += 1
        rec = self._probe_by_seq.get(pkt.seq)
        if rec is not None:
            rec.delivered_at_ms = now_ms
            rec.hops = pkt.hops_traversed
            self.probe_delivered += 1

    def _dropped(self, pkt: DataPacket, at_nid: int) -> None:
        self.total_dropped += 1
        self.meters[at_nid].drops += 1
        rec = self._probe_by_seq.get(pkt.seq)
        if rec is not None:
            rec.dropped = True
            self.probe_dropped += 1

    # -- event handlers ----------------------------------------------

    def _on_connection_event(self, now_ms: float, sender_id: int, receiver_id: int) -> None:
        if not self.net.nodes[sender_id].buffer:
            return
        self._touch(sender_id, now_ms)
        self._touch(receiver_id, now_ms)
        connection_event(self.net, sender_id, receiver_id,
                         self.scenario.engine.n_ce,
                         on_delivered=self._delivered,
                         on_dropped=self._dropped, now_ms=now_ms)

    def _on_packet_gen(self, now_ms: float, nid: int, is_probe: bool) -> None:
        node = self.net.nodes[nid]
        self._seq += 1
        pkt = DataPacket(self._seq, nid, self.net.sink_id, now_ms)
        self.total_sent += 1
        if is_probe:
            rec = ProbeRecord(pkt.seq, now_ms)
            self.probes.append(rec)
            self._probe_by_seq[pkt.seq] = rec
            self.probe_sent += 1
        self._touch(nid, now_ms)
        if len(node.buffer) >= node.b_max:
            self._dropped(pkt, nid)
        else:
            node.buffer.append(pkt)

    def _on_status_round(self, now_ms: float) -> None:
        """All existing nodes broadcast; the listening joiner keeps the freshest."""
        new_id = self.scenario.new_node_id
        for nid in sorted(self.net.nodes):
            if nid == new_id:
                continue
            node = self.net.nodes[nid]
            for rid, advert, rl in broadcast_status(node, self.net, self.radio, self.shadow):
                if rid == new_id:
                    self.heard[nid] = (advert, make_joinme(node), rl)

    def _branch_saturated_at(self, cand_id: int, now_ms: float) -> bool:
        """Decision-time label: congested node or drops anywhere up the branch."""
        theta = self.scenario.thresholds.theta_sat
        for nid in self.net.path_to_root(cand_id):
            if nid == self.net.sink_id:
                continue
            node = self.net.nodes[nid]
            m = self.meters[nid]
            if m.drops > 0:
                return True
            if m.avg_until(len(node.buffer), now_ms) >= theta * node.b_max:
                return True
        return False

    def _on_join_round(self, now_ms: float) -> None:
        """The joiner's own joinMe emission: decide, request, attach."""
        eng = self.scenario.engine
        new_id = self.scenario.new_node_id
        new = self.net.nodes[new_id]
        senders = sorted(self.heard)
        parent = None
        if self.algo == "baseline":
            adverts = [HeardJoinMe(self.heard[s][1], self.heard[s][2]) for s in senders]
            decision = baseline_select(adverts, new)
            if decision.kind == CONNECT:
                parent = decision.parent
        else:
            cands = [candidate_from_advert(self.heard[s][0], self.heard[s][2])
                     for s in senders]
            filtered = filter_candidates(cands, self.scenario.thresholds.rl_min_dbm,
                                         self.scenario.thresholds.b_fair)
            pick = select_parent(filtered, self.scenario.weights)
            if pick is not None:
                # broadcast the ack-carrying joinMe; only the named node answers
                parent = make_joinme_ack(new, pick).ack_field

        if parent is None:
            if now_ms - self.t_listen >= eng.max_wait_ms:
                self._finalize_failed(now_ms)
            else:
                heapq.heappush(self.heap, Event(now_ms + eng.t_adv_ms, KIND_STATUS, 0))
                heapq.heappush(self.heap, Event(now_ms + eng.t_adv_ms, KIND_JOINME, new_id))
            return

        labels = {s: self._branch_saturated_at(s, now_ms) for s in senders}
        self.eligible_sat = any(labels.values()) and not all(labels.values())
        self.avoided_sat = self.eligible_sat and not labels[parent]

        self.net.attach(new_id, parent)
        self.joined = True
        self.t_join = now_ms
        self.chosen = parent
        self.path = self.net.path_to_root(new_id)
        for nid in sorted(self.net.nodes):
            self._touch(nid, now_ms)
            self._join_snap_area[nid] = self.meters[nid].area
            self._join_snap_drops[nid] = self.meters[nid].drops

        interval = 1000.0 / eng.probe_rate
        n_probes = int(round(eng.measure_ms * eng.probe_rate / 1000.0))
        for i in range(n_probes):
            heapq.heappush(self.heap, Event(now_ms + i * interval, KIND_GEN, new_id, 1))
        heapq.heappush(self.heap, Event(now_ms + new.ci_ms, KIND_CONN, new_id, parent))
        heapq.heappush(self.heap, Event(now_ms + eng.measure_ms, KIND_END, 0))

    # -- finalization ------------------------------------------------

    def _flush_buffers(self, now_ms: float) -> int:
        in_flight = 0
        for nid in sorted(self.net.nodes):
            self._touch(nid, now_ms)
            in_flight += len(self.net.nodes[nid].buffer)
        return in_flight

    def _finalize_failed(self, now_ms: float) -> None:
        total_in_flight = self._flush_buffers(now_ms)
        self.result = TrialResult(
            trial_seed=self.seed, algo=self.algo, joined=False,
            chosen_parent=None, join_time_ms=None, hops_at_join=None,
            path_to_sink=[], probes=[], probe_sent=0, probe_delivered=0,
            probe_dropped=0, probe_in_flight=0,
            total_sent=self.total_sent, total_delivered=self.total_delivered,
            total_dropped=self.total_dropped, total_in_flight=total_in_flight,
            node_b_max={nid: n.b_max for nid, n in sorted(self.net.nodes.items())})
        self.done = True

    def _finalize(self, now_ms: float) -> None:
        total_in_flight = self._flush_buffers(now_ms)
        measure_ms = now_ms - self.t_join
        buffer_avg = {}
        overflow = {}
        for nid in sorted(self.net.nodes):
            m = self.meters[nid]
            buffer_avg[nid] = (m.area - self._join_snap_area[nid]) / measure_ms
            overflow[nid] = m.drops - self._join_snap_drops[nid]
        theta = self.scenario.thresholds.theta_sat
        sat = False
        for nid in self.path:
            if nid == self.net.sink_id:
                continue
            if overflow[nid] > 0 or buffer_avg[nid] >= theta * self.net.nodes[nid].b_max:
                sat = True
                break
        self.result = TrialResult(
            trial_seed=self.seed, algo=self.algo, joined=True,
            chosen_parent=self.chosen,
            join_time_ms=self.t_join - self.t_listen,
            hops_at_join=self.net.nodes[self.scenario.new_node_id].hops_to_sink,
            path_to_sink=list(self.path),
            probes=self.probes,
            probe_sent=self.probe_sent, probe_delivered=self.probe_delivered,
            probe_dropped=self.probe_dropped,
            probe_in_flight=self.probe_sent - self.probe_delivered - self.probe_dropped,
            total_sent=self.total_sent, total_delivered=self.total_delivered,
            total_dropped=self.total_dropped, total_in_flight=total_in_flight,
            buffer_avg=buffer_avg, overflow_drops=overflow,
            node_b_max={nid: n.b_max for nid, n in sorted(self.net.nodes.items())},
            sat_branch=sat, eligible_sat=self.eligible_sat,
            avoided_sat=self.avoided_sat)
        assert (self.result.total_sent - self.result.total_delivered
                - self.result.total_dropped == total_in_flight)
        self.done = True

    # -- main loop ---------------------------------------------------

    def run(self) -> TrialResult:
        eng = self.scenario.engine
        new_id = self.scenario.new_node_id
        build_network(self.net, self.algo, self.radio, self.scenario.weights,
                      self.scenario.thresholds, shadow=self.shadow,
                      exclude={new_id})

        horizon = eng.warmup_ms + eng.max_wait_ms + eng.measure_ms + 2 * eng.t_adv_ms
        for nid in sorted(self.net.nodes):
            node = self.net.nodes[nid]
            if nid != new_id and node.traffic_rate_pps > 0:
                rng = random.Random(f"scatterjoin-traffic:{self.seed}:{nid}")
                for t in generate_traffic(node.traffic_rate_pps, horizon, rng):
                    heapq.heappush(self.heap, Event(t, KIND_GEN, nid))
            if node.master is not None:
                heapq.heappush(self.heap, Event(node.ci_ms, KIND_CONN, nid, node.master))

        heapq.heappush(self.heap, Event(self.t_listen, KIND_STATUS, 0))
        heapq.heappush(self.heap, Event(self.t_listen + eng.t_adv_ms, KIND_STATUS, 0))
        heapq.heappush(self.heap, Event(self.t_listen + eng.t_adv_ms, KIND_JOINME, new_id))

        while self.heap and not self.done:
            ev = heapq.heappop(self.heap)
            if ev.kind == KIND_END:
                self._finalize(ev.at_ms)
            elif ev.kind == KIND_CONN:
                self._on_connection_event(ev.at_ms, ev.node, ev.peer)
                nxt = ev.at_ms + self.net.nodes[ev.node].ci_ms
                if nxt <= horizon:
                    heapq.heappush(self.heap, Event(nxt, KIND_CONN, ev.node, ev.peer))
            elif ev.kind == KIND_GEN:
                self._on_packet_gen(ev.at_ms, ev.node, bool(ev.peer))
            elif ev.kind == KIND_STATUS:
                if not self.joined:
                    self._on_status_round(ev.at_ms)
            elif ev.kind == KIND_JOINME:
                if not self.joined:
                    self._on_join_round(ev.at_ms)
        if self.result is None:  # heap ran dry before any terminal event
            self._finalize_failed(horizon)
        return self.result


def run_trial(scenario: Scenario, algo: str, seed: int) -> TrialResult:
    """Run one trial; deterministic in (scenario, algo, seed).

    The new node's scenario traffic rate is ignored: during measurement
    its only traffic is the fixed-interval probe stream.
    """
    return TrialEngine(scenario, algo, seed).run()
