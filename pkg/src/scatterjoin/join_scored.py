"""Scored parent selection over broadcast status data.

A joining node filters the neighbors it heard, scores the survivors on
six inputs (slave count, hops to sink, buffer occupancy, connection
interval, link RSSI, master-link RSSI), and requests the best one inside
the biggest cluster through the joinMe ack field.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import JoinMePacket, NodeState, make_joinme


@dataclass(frozen=True)
class CandidateInfo:
    """One neighbor's scoring record, assembled from its status advert
    plus the RSSI measured when the advert was received."""

    id: int
    cluster_id: int
    cluster_size: int
    m: int                    # current slave count
    h: int                    # hops to the sink
    b: int                    # buffered packets
    ci_ms: float              # connection interval
    rl_dbm: float             # our link to the candidate
    rn_dbm: float | None      # candidate's link to its master (roots: none)
    free_out: int
    children: tuple[int, ...]


@dataclass(frozen=True)
class ScoreWeights:
    """Term weights plus the bounds used to normalize raw inputs to [0,1].

    Defaults emphasize empty buffers and short connection intervals, the
    two inputs that dominate queueing delay; all of it is configurable
    per scenario.
    """

    w_m: float = 0.10
    w_h: float = 0.20
    w_b: float = 0.25
    w_ci: float = 0.20
    w_rl: float = 0.15
    w_rn: float = 0.10
    m_max: int = 3
    b_max: int = 30
    ci_min_ms: float = 7.5
    ci_max_ms: float = 400.0
    rssi_lo: float = -90.0
    rssi_hi: float = -50.0

    def __post_init__(self):
        weights = (self.w_m, self.w_h, self.w_b, self.w_ci, self.w_rl, self.w_rn)
        if any(w < 0 for w in weights):
            raise ValueError("weights must be >= 0")
        if not sum(weights) > 0:
            raise ValueError("weights must not all be zero")
        if not self.ci_min_ms < self.ci_max_ms:
            raise ValueError("ci_min_ms must be below ci_max_ms")
        if not self.rssi_lo < self.rssi_hi:
            raise ValueError("rssi_lo must be below rssi_hi")

    def scaled(self, factor: float) -> "ScoreWeights":
        return ScoreWeights(
            w_m=self.w_m * factor, w_h=self.w_h * factor, w_b=self.w_b * factor,
            w_ci=self.w_ci * factor, w_rl=self.w_rl * factor, w_rn=self.w_rn * factor,
            m_max=self.m_max, b_max=self.b_max,
            ci_min_ms=self.ci_min_ms, ci_max_ms=self.ci_max_ms,
            rssi_lo=self.rssi_lo, rssi_hi=self.rssi_hi)


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def score_candidate(c: CandidateInfo, w: ScoreWeights) -> float:
    """Composite desirability in [0, sum of weights]; higher is better.

    Every term is normalized to [0,1]: fewer slaves, fewer hops, emptier
    buffer and shorter CI raise the score, stronger RSSI on both the
    joiner link and the candidate's uplink raise it too. A root candidate
    has no uplink to degrade, so its rn term counts as perfect.
    """
    def nr(rssi: float) -> float:
        return _clamp01((rssi - w.rssi_lo) / (w.rssi_hi - w.rssi_lo))

    rn_term = 1.0 if c.rn_dbm is None else nr(c.rn_dbm)
    return (
        w.w_m * (1.0 - min(c.m, w.m_max) / w.m_max)
        + w.w_h * (1.0 / (1.0 + c.h))
        + w.w_b * (1.0 - min(c.b, w.b_max) / w.b_max)
        + w.w_ci * (1.0 - _clamp01((c.ci_ms - w.ci_min_ms) / (w.ci_max_ms - w.ci_min_ms)))
        + w.w_rl * nr(c.rl_dbm)
        + w.w_rn * rn_term
    )


def filter_candidates(cands: list[CandidateInfo], rl_min_dbm: float = -85.0,
                      b_fair: int = 1) -> list[CandidateInfo]:
    """Drop unusable neighbors, then apply the fairness redirect.

    Candidates without a free slot or with a link weaker than rl_min_dbm
    go first. A surviving candidate whose buffer holds at least b_fair
    packets is then dropped if one of its children also survived the
    first two rules — load spreads down the tree — but is kept when no
    child was heard, so the joiner is never stranded. Input is assumed
    deduplicated by sender; output is sorted by id.
    """
    alive = [c for c in cands if c.free_out >= 1 and c.rl_dbm >= rl_min_dbm]
    alive_ids = {c.id for c in alive}
    kept = []
    for c in alive:
        if c.b >= b_fair and any(ch in alive_ids for ch in c.children):
            continue
        kept.append(c)
    return sorted(kept, key=lambda c: c.id)


def select_parent(filtered: list[CandidateInfo], w: ScoreWeights) -> int | None:
    """Highest-scored candidate within the biggest cluster present.

    Ties break on stronger link RSSI, then lower id. None means no
    candidate survived filtering and the joiner should wait and rescan.
    """
    if not filtered:
        return None
    biggest = max(c.cluster_size for c in filtered)
    pool = [c for c in filtered if c.cluster_size == biggest]
    best = max(pool, key=lambda c: (score_candidate(c, w), c.rl_dbm, -c.id))
    return best.id


def make_joinme_ack(self_node: NodeState, parent: int) -> JoinMePacket:
    """joinMe broadcast naming the requested parent; only that node answers."""
    return make_joinme(self_node, ack_field=parent)
