"""FruityMesh-style joining: the smaller cluster joins the bigger one.

No link-quality or load awareness beyond picking the strongest signal
inside the biggest advertised cluster, so this is the reference the
scored strategy is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import JoinMePacket, NodeState

CONNECT = "connect_as_child"
WAIT = "wait"
NONE = "none"


@dataclass(frozen=True)
class HeardJoinMe:
    """A joinMe broadcast together with the RSSI it was received at."""

    packet: JoinMePacket
    rl_dbm: float


@dataclass(frozen=True)
class JoinDecision:
    kind: str
    parent: int | None = None


def baseline_select(adverts: list[HeardJoinMe], self_node: NodeState) -> JoinDecision:
    """Pick a master from one discovery window of joinMe broadcasts.

    Eligible senders have a free slave slot and belong to a cluster at
    least as big as ours (equal sizes: the lower cluster id joins the
    higher). Within the biggest eligible cluster the strongest RSSI wins,
    ties going to the lowest sender id.
    """
    if self_node.master is not None:
        return JoinDecision(NONE)
    eligible = []
    for h in adverts:
        p = h.packet
        if p.free_out < 1:
            continue
        if p.cluster_size > self_node.cluster_size or (
                p.cluster_size == self_node.cluster_size
                and p.cluster_id > self_node.cluster_id):
            eligible.append(h)
    if not eligible:
        return JoinDecision(WAIT)
    biggest = max(h.packet.cluster_size for h in eligible)
    pool = [h for h in eligible if h.packet.cluster_size == biggest]
    best = max(pool, key=lambda h: (h.rl_dbm, -h.packet.sender))
    return JoinDecision(CONNECT, best.packet.sender)
