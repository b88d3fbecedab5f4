"""Shared fixtures: substrates at each scale and request builders."""

import numpy as np
import pytest

from slicesim import (
    NodeKind,
    SliceRequest,
    SubstrateNetwork,
    build_reference_topology,
)


@pytest.fixture(scope="session")
def full_net_template():
    # session-scoped template; tests that mutate must build their own
    return build_reference_topology("full")


@pytest.fixture
def full_net():
    return build_reference_topology("full")


@pytest.fixture
def small_net():
    return build_reference_topology("small")


@pytest.fixture
def tiny_net():
    return build_reference_topology("tiny")


def make_request(vnfs, vls, uid=0, class_id=0, t=0.0, lifetime=1.0):
    return SliceRequest(uid=uid, class_id=class_id, arrival_time=t,
                        lifetime=lifetime, vnfs=tuple(vnfs), vls=tuple(vls))


def uniform_request(n_vnfs, cpu, ram, bw, **kw):
    """Chain of n identical VNFs joined by identical virtual links."""
    return make_request(((cpu, ram),) * n_vnfs, (bw,) * (n_vnfs - 1), **kw)


def line_net(caps, bw, server_cpu=50.0, server_ram=300.0):
    """Servers on a line: s0 - s1 - ... with the given per-link bandwidth.

    caps overrides (cpu, ram) per server when given as a list of pairs.
    """
    net = SubstrateNetwork()
    n = caps if isinstance(caps, int) else len(caps)
    for i in range(n):
        if isinstance(caps, int):
            cpu, ram = server_cpu, server_ram
        else:
            cpu, ram = caps[i]
        net.add_node(NodeKind.SERVER, dc_id=0, max_cpu=cpu, max_ram=ram)
    bws = [bw] * (n - 1) if np.isscalar(bw) else list(bw)
    for i in range(n - 1):
        net.add_link(i, i + 1, bws[i])
    return net


def random_substrate(rng, max_servers=4, extra_switch=True):
    """Small random connected substrate with integer link bandwidths."""
    n = int(rng.integers(2, max_servers + 1))
    net = SubstrateNetwork()
    for _ in range(n):
        net.add_node(NodeKind.SERVER, dc_id=0,
                     max_cpu=float(rng.integers(2, 8)),
                     max_ram=float(rng.integers(2, 8)))
    nodes = list(range(n))
    if extra_switch and rng.random() < 0.5:
        nodes.append(net.add_node(NodeKind.SWITCH, dc_id=0))
    # random spanning tree keeps it connected, extra edges add path choice
    order = list(rng.permutation(nodes))
    for i in range(1, len(order)):
        j = int(rng.integers(0, i))
        net.add_link(order[i], order[j], float(rng.integers(1, 5)))
    for _ in range(int(rng.integers(0, 3))):
        a, b = rng.choice(nodes, size=2, replace=False)
        key = (min(int(a), int(b)), max(int(a), int(b)))
        if key not in net.links:
            net.add_link(int(a), int(b), float(rng.integers(1, 5)))
    return net
