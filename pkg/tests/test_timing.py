import pytest
from hypothesis import given
from hypothesis import strategies as st

from crtsched.exceptions import InvalidParameterError, TopologyMismatchError
from crtsched.instances import snapshot_from_edges
from crtsched.kpaths import Path
from crtsched.timing import (IMMEDIATE, NEVER, LinkLoadState, NodeParams, drift_collision_time, link_delay,
                             path_fixed_delay, path_wcd, transmission_time, wcd_link, wcd_link_exact)

from conftest import MS, flow

C = 0.12 * MS


def test_transmission_examples():
    assert transmission_time(1500, 100e6) == pytest.approx(0.12 * MS, abs=1e-15)
    assert transmission_time(0, 100e6) == 0.0
    assert transmission_time(127, 100e6) == pytest.approx(10.16e-6, abs=1e-15)
    with pytest.raises(InvalidParameterError):
        transmission_time(1500, 0.0)


def test_link_delay_examples():
    snap = snapshot_from_edges({(0, 1): 3 * MS})
    f, g = flow(0, 0, 1), flow(1, 0, 1)
    assert link_delay(f, (0, 1), snap) == pytest.approx(3.12 * MS, abs=1e-15)
    assert link_delay(f, (0, 1), snap) == link_delay(g, (0, 1), snap)
    with pytest.raises(TopologyMismatchError):
        link_delay(f, (0, 2), snap)
    zero = snapshot_from_edges({(0, 1): 0.0})
    with pytest.raises(InvalidParameterError):
        link_delay(f, (0, 1), zero)


def test_path_fixed_delay_examples():
    snap = snapshot_from_edges({(0, 1): 3 * MS, (1, 2): 4 * MS})
    np_ = NodeParams(d_proc=1 * MS)
    one = Path.from_nodes(snap, (0, 1))
    two = Path.from_nodes(snap, (0, 1, 2))
    assert path_fixed_delay(flow(0, 0, 1), one, snap, np_) == pytest.approx(3.12 * MS, abs=1e-15)
    assert path_fixed_delay(flow(0, 0, 2), two, snap, np_) == pytest.approx(8.24 * MS, abs=1e-15)


@given(st.lists(st.floats(1e-4, 1e-2), min_size=3, max_size=6), st.integers(1, 4))
def test_fixed_delay_additive(delays, cut):
    cut = min(cut, len(delays) - 1)
    snap = snapshot_from_edges({(i, i + 1): d for i, d in enumerate(delays)}, symmetric=False)
    np_ = NodeParams()
    n = len(delays)
    whole = path_fixed_delay(flow(0, 0, n), Path.from_nodes(snap, range(n + 1)), snap, np_)
    left = path_fixed_delay(flow(0, 0, cut), Path.from_nodes(snap, range(cut + 1)), snap, np_)
    right = path_fixed_delay(flow(0, cut, n), Path.from_nodes(snap, range(cut, n + 1)), snap, np_)
    assert whole == pytest.approx(left + right + np_.d_proc, rel=1e-12)


@pytest.mark.parametrize("n, expected", [(1, 0.0), (3, 0.24 * MS), (5, 0.48 * MS)])
def test_wcd_link_examples(n, expected):
    assert wcd_link(n, C) == pytest.approx(expected, abs=1e-15)


@given(st.integers(0, 50), st.integers(0, 50))
def test_wcd_link_monotone(a, b):
    lo, hi = sorted((a, b))
    assert wcd_link(lo, C) <= wcd_link(hi, C)
    assert wcd_link(1, C) == 0.0


@given(st.lists(st.floats(0, C), max_size=10), st.integers(0, 5))
def test_simplified_bound_dominates_exact(tx, spare):
    n_e = len(tx) + 1 + spare
    assert wcd_link_exact(tx) <= wcd_link(n_e, C) + 1e-18


def _three_link():
    snap = snapshot_from_edges({(0, 1): MS, (1, 2): MS, (2, 3): MS})
    return snap, Path.from_nodes(snap, (0, 1, 2, 3))


def test_path_wcd_examples():
    snap, p = _three_link()
    load = LinkLoadState(1)
    load.add(0, p.links, 100)
    assert path_wcd(p, 0, load, C) == 0.0
    load.add(0, [(1, 2), (2, 3)], 101)
    load.add(0, [(2, 3)], 102)
    assert [load.overlap(0, e) for e in p.links] == [1, 2, 3]
    assert path_wcd(p, 0, load, C) == pytest.approx(0.36 * MS, abs=1e-15)
    before = path_wcd(p, 0, load, C)
    load.add(0, [(0, 1)], 103)
    assert path_wcd(p, 0, load, C) - before == pytest.approx(C, abs=1e-15)


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 2)), max_size=30))
def test_overlap_is_distinct_sources(adds):
    links = [(0, 1), (1, 2), (2, 3)]
    load = LinkLoadState(1)
    seen = {}
    for src, li in adds:
        load.add(0, [links[li]], src)
        seen.setdefault(links[li], set()).add(src)
    for e in links:
        assert load.overlap(0, e) == len(seen.get(e, ()))
        assert load.src_on_link(0, e) == frozenset(seen.get(e, ()))


def test_same_source_does_not_grow_overlap():
    load = LinkLoadState(1)
    assert load.add(0, [(0, 1), (1, 2)], 7) == [(0, 1), (1, 2)]
    assert load.add(0, [(0, 1), (1, 2)], 7) == []
    assert load.overlap(0, (0, 1)) == 1
    load.remove(0, [(0, 1), (1, 2)], 7)
    assert load.overlap(0, (0, 1)) == 1
    load.remove(0, [(0, 1), (1, 2)], 7)
    assert load.overlap(0, (0, 1)) == 0 and load.max_overlap() == 0


def test_drift_examples():
    assert drift_collision_time(5 * MS, C, 1e-5) == pytest.approx(488.0, rel=1e-12)
    assert drift_collision_time(0.05 * MS, C, 1e-5) == IMMEDIATE
    assert drift_collision_time(5 * MS, C, 0.0) == NEVER


def test_node_params_validation():
    with pytest.raises(InvalidParameterError):
        NodeParams(d_proc=0.0)
    with pytest.raises(InvalidParameterError):
        NodeParams(d_proc=2e-3, t_buffer_max=1e-3)
