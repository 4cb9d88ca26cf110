import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from kinnet.topology import (END, START, CouplingKind, Condition, ScenarioError, check_coupling_matrix,
                             load_scenario, mirror_halfmoment, node_edge_view, node_local_view, parse_scenario,
                             to_local, uniform_matrix, with_overrides)


def doc(**kw):
    base = {
        "model": "wave", "t_end": 1.0, "cells_per_edge": 10,
        "edges": [{"id": 1, "length": 1.0, "from": 0, "to": None}, {"id": 2, "length": 2.0, "from": 0, "to": None}],
        "nodes": [{"id": 0, "condition": "maxwell", "coupling": "uniform"}],
        "initial": [{"edge": 1, "rho": 1.0}],
        "boundaries": [{"edge": 1, "end": "end", "condition": "free"}, {"edge": 2, "end": "end", "condition": "free"}],
    }
    base.update(kw)
    return base


def test_tripod_loads(tripod):
    sc, net = tripod
    assert sc.name == "tripod"
    node = net.nodes[0]
    assert node.degree == 3
    assert node.attached == ((1, START), (2, START), (3, START))
    np.testing.assert_allclose(node.matrix, [[0, .5, .5], [.5, 0, .5], [.5, .5, 0]])
    assert sc.a == pytest.approx(1 / math.sqrt(3))


def test_single_edge_has_no_nodes():
    sc, net = load_scenario("single_edge")
    assert net.nodes == {}
    assert len(net.edges) == 1
    assert not net.boundaries[(1, START)].free


def test_diamond_orientation(diamond):
    _, net = diamond
    assert len(net.edges) == 7 and len(net.nodes) == 4
    assert all(n.degree == 3 for n in net.nodes.values())
    assert set(net.nodes[1].attached) == {(1, END), (2, START), (3, START)}


def test_uniform_matrix_columns():
    for n in range(2, 8):
        c = uniform_matrix(n)
        assert np.all(np.diag(c) == 0)
        np.testing.assert_allclose(c.sum(axis=0), 1.0, atol=1e-15)
    with pytest.raises(ScenarioError):
        uniform_matrix(1)


def test_bad_column_sum_named():
    c = np.array([[0.0, 0.6], [1.0, 0.5]])
    with pytest.raises(ScenarioError, match="column 1"):
        check_coupling_matrix(c, 7)


def test_negative_entries_rejected():
    with pytest.raises(ScenarioError, match="negative"):
        check_coupling_matrix(np.array([[1.5, 0.0], [-0.5, 1.0]]))


def test_explicit_matrix():
    sc, net = parse_scenario(doc(nodes=[{"id": 0, "condition": "half", "coupling": [0, 1, 1, 0]}]))
    assert net.nodes[0].condition == CouplingKind(Condition.HALF_MOMENT)
    with pytest.raises(ScenarioError, match="4 entries"):
        parse_scenario(doc(nodes=[{"id": 0, "condition": "half", "coupling": [0, 1, 1]}]))


def test_degree_one_node_rejected():
    d = doc(edges=[{"id": 1, "length": 1.0, "from": 0, "to": None}], boundaries=[{"edge": 1, "end": "end"}])
    with pytest.raises(ScenarioError, match="degree 1"):
        parse_scenario(d)


def test_exterior_end_must_be_declared():
    with pytest.raises(ScenarioError, match="no boundary declaration"):
        parse_scenario(doc(boundaries=[{"edge": 1, "end": "end"}]))


def test_bounded_models_force_a():
    with pytest.raises(ScenarioError, match="a\\^2 = 1/3"):
        parse_scenario(doc(model="kinetic", a=1.0))
    parse_scenario(doc(model="wave", a=1.0))


@pytest.mark.parametrize("key,val,msg", [("cfl", 1.5, "cfl"), ("epsilon", 0.0, "epsilon"), ("model", "x", "model")])
def test_scenario_invariants(key, val, msg):
    with pytest.raises(ScenarioError, match=msg):
        parse_scenario(doc(**{key: val}))


def test_json_error_has_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "model": "wave",\n  "edges": [,]\n}')
    with pytest.raises(ScenarioError, match="line 3 column"):
        load_scenario(p)


def test_missing_field_context(tmp_path):
    p = tmp_path / "s.json"
    d = doc()
    del d["edges"][0]["id"]
    p.write_text(json.dumps(d))
    with pytest.raises(ScenarioError, match=r"edges\[0\].*'id'"):
        load_scenario(p)


def test_mirror_examples():
    assert np.array_equal(to_local(np.array([1.0, 0.2]), START, "wave"), [1.0, 0.2])
    assert np.array_equal(to_local(np.array([1.0, 0.2]), END, "wave"), [1.0, -0.2])
    assert np.array_equal(mirror_halfmoment(np.array([1.0, 2.0, 3.0, 4.0])), [3.0, -4.0, 1.0, -2.0])
    f = np.arange(6.0)
    assert np.array_equal(to_local(f, END, "kinetic"), f[::-1])


@given(arrays(float, 8, elements=st.floats(-1e6, 1e6)), st.sampled_from(["kinetic", "halfmoment", "wave"]),
       st.sampled_from([START, END]))
def test_mirror_round_trip(u, kind, end):
    u = u[:4] if kind == "halfmoment" else (u[:2] if kind == "wave" else u)
    assert np.array_equal(to_local(to_local(u, end, kind), end, kind), u)


def test_node_views_invert(diamond):
    _, net = diamond
    node = net.nodes[1]
    traces = {eid: np.array([1.0 + eid, 0.1 * eid]) for eid, _ in node.attached}
    local = node_local_view(node, traces, "wave")
    assert node.attached[0] == (1, END)
    assert local[0][1] == pytest.approx(-0.1)
    back = node_edge_view(node, local, "wave")
    for eid in traces:
        assert np.array_equal(back[eid], traces[eid])
    with pytest.raises(KeyError):
        node_local_view(node, {}, "wave")


def test_with_overrides(tripod):
    sc, net = with_overrides(*tripod, cells=50, model="kinetic", epsilon=0.1)
    assert sc.model == "kinetic" and sc.epsilon == 0.1
    assert all(e.cells == 50 for e in net.edges.values())
    assert tripod[1].edges[1].cells == 400
