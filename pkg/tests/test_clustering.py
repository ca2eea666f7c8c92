import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import LinearConstraint, milp

from avdiar.clustering import assign, cluster_distances, medoid, pmedian_solve, ws_distances
from avdiar.errors import EmptyCluster, InvalidP, OrderMismatch, SizeGuardExceeded
from avdiar.features import DistanceMatrix
from avdiar.synth import oracle_pmedian


def line(*xs):
    x = np.array(xs, float)
    return np.abs(x[:, None] - x[None, :])


def test_two_groups_on_a_line():
    sol = pmedian_solve(line(0, 1, 10, 11), 2)
    assert sol.centers == (0, 2)
    assert sol.objective == 2
    assert sol.assignment == (0, 0, 2, 2)


def test_medoid_of_collinear_points():
    dm = DistanceMatrix((10, 11, 12), line(0, 1, 5))
    assert medoid([10, 11, 12], dm) == 11
    with pytest.raises(EmptyCluster):
        medoid([], dm)


def test_centers_keep_themselves_under_ties():
    d = np.zeros((3, 3))
    assert assign(d, [2, 1]) == (1, 1, 2)


def test_guards():
    with pytest.raises(InvalidP):
        pmedian_solve(line(0, 1), 3)
    with pytest.raises(SizeGuardExceeded):
        pmedian_solve(np.zeros((30, 30)), 3)


def _milp_pmedian(d, p):
    n = len(d)
    c = np.concatenate([np.zeros(n), d.ravel()])
    rows = []
    one = np.zeros((n, n + n * n))
    for i in range(n):
        one[i, n + i * n : n + (i + 1) * n] = 1
    rows.append(LinearConstraint(one, 1, 1))
    rows.append(LinearConstraint(np.concatenate([np.ones(n), np.zeros(n * n)])[None], p, p))
    link = np.zeros((n * n, n + n * n))
    for i in range(n):
        for j in range(n):
            link[i * n + j, n + i * n + j] = 1
            link[i * n + j, j] = -1
    rows.append(LinearConstraint(link, -np.inf, 0))
    res = milp(c, constraints=rows, integrality=np.ones_like(c), bounds=(0, 1))
    return res.fun


@pytest.mark.parametrize("seed", range(5))
def test_agrees_with_integer_program(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(14, 3))
    d = np.round(np.linalg.norm(pts[:, None] - pts[None], axis=2) * 100)
    for p in (1, 2, 3):
        assert pmedian_solve(d, p).objective == pytest.approx(_milp_pmedian(d, p), abs=1e-6)


@given(st.integers(2, 7), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_agrees_with_oracle(n, p, seed):
    p = min(p, n)
    rng = np.random.default_rng(seed)
    raw = rng.integers(0, 20, size=(n, n))
    d = np.triu(raw, 1) + np.triu(raw, 1).T
    sol = pmedian_solve(d, p)
    assert sol.objective == oracle_pmedian(d, p)
    assert len(set(sol.assignment)) == p


def test_cluster_distances_clip_p_and_empty():
    dm = DistanceMatrix((4,), np.zeros((1, 1)))
    assert cluster_distances(dm, 2).clusters == (frozenset({4}),)
    assert cluster_distances(DistanceMatrix((), np.zeros((0, 0))), 2).clusters == ()


def test_ws_blend():
    da = DistanceMatrix((1, 2), np.array([[0, 4.0], [4.0, 0]]))
    dv = DistanceMatrix((1, 2), np.array([[0, 1.0], [1.0, 0]]))
    ws = ws_distances(da, dv, 0.25)
    assert ws.values[0, 1] == pytest.approx(1.0)
    with pytest.raises(OrderMismatch):
        ws_distances(da, DistanceMatrix((2, 1), dv.values))
