import random

import pytest

from scatterjoin.channel import Position
from scatterjoin.model import (DataPacket, Network, NodeState, SlotExhausted,
                               TopologyError, make_joinme, make_status_advert)


def node(nid, **kw):
    return NodeState(id=nid, pos=Position(0.0, 0.0), **kw)


def chain(n):
    """Nodes 1..n attached in a line under node 1."""
    net = Network([node(i) for i in range(1, n + 1)])
    for i in range(2, n + 1):
        net.attach(i, i - 1)
    return net


def test_merge_conserves_members():
    net = Network([node(i) for i in range(1, 9)])
    for child, parent in ((2, 1), (3, 1), (4, 2), (5, 2)):
        net.attach(child, parent)          # cluster of 5 rooted at 1
    for child, parent in ((7, 6), (8, 6)):
        net.attach(child, parent)          # cluster of 3 rooted at 6
    assert net.nodes[1].cluster_size == 5
    assert net.nodes[6].cluster_size == 3
    net.attach(6, 3)
    assert all(net.nodes[i].cluster_size == 8 for i in range(1, 9))
    assert len({net.nodes[i].cluster_id for i in range(1, 9)}) == 1
    net.check_invariants()


def test_child_hops_is_parent_plus_one():
    net = chain(3)
    extra = node(4)
    net.nodes[4] = extra
    assert net.nodes[3].hops_to_sink == 2
    net.attach(4, 3)
    assert net.nodes[4].hops_to_sink == 3
    net.check_invariants()


def test_absorbed_subtree_hops_recomputed():
    net = Network([node(i) for i in range(1, 6)])
    net.attach(5, 4)                 # side cluster: 4 <- 5
    net.attach(2, 1)
    net.attach(3, 2)
    net.attach(4, 3)                 # absorb it three hops down
    assert net.nodes[4].hops_to_sink == 3
    assert net.nodes[5].hops_to_sink == 4
    net.check_invariants()


def test_full_parent_raises_slot_exhausted():
    net = Network([node(1, slave_capacity=0), node(2)])
    with pytest.raises(SlotExhausted):
        net.attach(2, 1)


def test_attach_within_cluster_raises_cycle_error():
    net = chain(2)
    with pytest.raises(TopologyError):
        net.attach(1, 2)


def test_attach_non_root_rejected():
    net = chain(3)
    net.nodes[4] = node(4)
    with pytest.raises(TopologyError):
        net.attach(3, 4)  # 3 already has a master


def test_status_advert_for_sink():
    adv = make_status_advert(node(1))
    assert adv.h_hops == 0
    assert adv.rn_dbm is None
    assert adv.m_slaves == 0
    assert adv.free_out == 3


def test_status_advert_copies_live_fields():
    net = Network([node(1), node(2), node(3)])
    net.attach(2, 1)
    net.attach(3, 1)
    root = net.nodes[1]
    for i in range(4):
        root.buffer.append(DataPacket(i, 2, 1, 0.0))
    adv = make_status_advert(root)
    assert adv.m_slaves == 2
    assert adv.b_occupancy == 4
    assert adv.free_out == 1
    assert adv.children == (2, 3)


def test_status_advert_reports_measured_rn():
    net = chain(2)
    adv = make_status_advert(net.nodes[2], rn_measured=-70.0)
    assert adv.rn_dbm == -70.0


def test_status_advert_rn_consistency_enforced():
    net = chain(2)
    with pytest.raises(ValueError):
        make_status_advert(net.nodes[1], rn_measured=-70.0)  # root has no uplink
    with pytest.raises(ValueError):
        make_status_advert(net.nodes[2])  # slave needs its uplink measured


def test_joinme_snapshot():
    net = chain(2)
    pkt = make_joinme(net.nodes[2], ack_field=7)
    assert pkt.sender == 2
    assert pkt.free_in == 0
    assert pkt.cluster_size == 2
    assert pkt.ack_field == 7


def test_path_to_root():
    net = chain(4)
    assert net.path_to_root(4) == [4, 3, 2, 1]
    assert net.path_to_root(1) == [1]


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        Network([node(3), node(3)])


def test_random_merge_sequences_keep_invariants():
    rng = random.Random(7)
    for _ in range(60):
        net = Network([node(i, slave_capacity=rng.randint(1, 3))
                       for i in range(1, 13)])
        while True:
            roots = [nid for nid, n in net.nodes.items() if n.master is None]
            options = [(c, p) for c in roots for p, pn in net.nodes.items()
                       if pn.cluster_id != net.nodes[c].cluster_id
                       and pn.free_out >= 1]
            if not options:
                break
            child, parent = rng.choice(options)
            net.attach(child, parent)
            net.check_invariants()


def test_cluster_sizes_sum_to_node_count():
    rng = random.Random(11)
    net = Network([node(i) for i in range(1, 10)])
    for _ in range(5):
        roots = [nid for nid, n in net.nodes.items() if n.master is None]
        child = rng.choice(roots)
        parents = [p for p, pn in net.nodes.items()
                   if pn.cluster_id != net.nodes[child].cluster_id and pn.free_out >= 1]
        if not parents:
            break
        net.attach(child, rng.choice(parents))
        seen = {}
        for n in net.nodes.values():
            seen[n.cluster_id] = n.cluster_size
        assert sum(seen.values()) == len(net.nodes)
