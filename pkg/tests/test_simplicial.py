import json

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from pwlpolicy import simplicial as sim
from pwlpolicy.errors import (DegenerateInputError, OutsideHullError,
                              UnsupportedDimensionError)

from oracles import simplex_volume


def cloud(k, m, seed):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(m, k))


def test_one_dimensional_segments_sorted():
    pts = np.array([[0.7], [0.1], [0.4], [0.9]])
    t = sim.build_triangulation(pts)
    assert t.num_simplices == 3
    # consecutive segments in sorted order, no gaps
    spans = sorted(tuple(sorted(t.vertices[s, 0])) for s in t.simplices)
    assert spans == [(0.1, 0.4), (0.4, 0.7), (0.7, 0.9)]


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimensionError):
        sim.build_triangulation(np.zeros((5, 4)))


def test_too_few_points():
    with pytest.raises(DegenerateInputError):
        sim.build_triangulation(np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_affinely_degenerate_cloud_rejected():
    pts = np.array([[float(i), 2.0 * i] for i in range(6)])   # all on a line
    with pytest.raises(DegenerateInputError):
        sim.build_triangulation(pts)


def test_volume_matches_hull_k2_and_k3():
    for k in (2, 3):
        for seed in range(3):
            pts = cloud(k, 24, seed)
            t = sim.build_triangulation(pts, seed=seed)
            total = sum(simplex_volume(t.vertices[s]) for s in t.simplices)
            hull = ConvexHull(pts)
            assert total == pytest.approx(hull.volume, rel=1e-10)


def test_monte_carlo_coverage():
    # every point of the hull interior must land in exactly one simplex
    pts = cloud(2, 30, seed=5)
    t = sim.build_triangulation(pts, seed=5)
    rng = np.random.default_rng(0)
    verts = t.vertices[t.simplices]
    lam = rng.dirichlet(np.ones(3), size=2000)
    picks = rng.integers(t.num_simplices, size=2000)
    queries = np.einsum("tl,tlk->tk", lam, verts[picks])
    idx, lams = sim.locate_many(t, queries)
    assert np.all(idx >= 0)
    assert np.all(lams >= -sim.BARY_TOL)
    assert np.allclose(lams.sum(axis=1), 1.0, atol=1e-9)
    # located simplex reproduces the query point
    rec = np.einsum("tl,tlk->tk", lams, t.vertices[t.simplices[idx]])
    assert np.allclose(rec, queries, atol=1e-9)


def test_facet_to_facet_pairing():
    pts = cloud(2, 25, seed=2)
    t = sim.build_triangulation(pts, seed=2)
    facets = {}
    for j, s in enumerate(t.simplices):
        for drop in range(3):
            f = tuple(sorted(np.delete(s, drop)))
            facets.setdefault(f, []).append(j)
    for owners in facets.values():
        assert len(owners) in (1, 2)      # boundary or exactly one neighbor
    # neighbor table mirrors the facet relation
    for j, nb in enumerate(t.neighbors):
        for v in nb:
            if v >= 0:
                assert j in t.neighbors[v]


def test_locate_outside_raises():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    t = sim.build_triangulation(pts)
    with pytest.raises(OutsideHullError):
        sim.locate(t, [2.0, 2.0])


def test_locate_on_shared_edge_is_lowest_index():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    t = sim.build_triangulation(pts)
    # midpoint of the shared diagonal belongs to both triangles
    mid = t.vertices.mean(axis=0)
    j, lam = sim.locate(t, mid)
    assert j == 0
    assert np.allclose(t.vertices[t.simplices[j]].T @ lam, mid, atol=1e-12)


def test_build_deterministic():
    pts = cloud(2, 40, seed=9)
    a = sim.build_triangulation(pts, seed=1)
    b = sim.build_triangulation(pts, seed=1)
    assert np.array_equal(a.simplices, b.simplices)


def test_mesh_norm_equals_max_diameter():
    pts = cloud(2, 15, seed=3)
    t = sim.build_triangulation(pts, seed=3)
    diams = [sim.simplex_diameter(t, j) for j in range(t.num_simplices)]
    assert sim.mesh_norm(t) == pytest.approx(max(diams))


def test_contains_and_clip():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    t = sim.build_triangulation(pts)
    assert sim.contains(t, [0.5, 0.5])
    assert not sim.contains(t, [1.5, 0.5])
    clipped = sim.clip_to_hull(t, [1.5, 0.5])
    assert np.allclose(clipped, [1.0, 0.5], atol=1e-9)
    inside = sim.clip_to_hull(t, [0.25, 0.5])
    assert np.allclose(inside, [0.25, 0.5], atol=1e-12)


def test_clip_k1():
    t = sim.build_triangulation(np.array([[0.0], [1.0], [2.0]]))
    assert sim.clip_to_hull(t, [-3.0])[0] == 0.0
    assert sim.clip_to_hull(t, [5.0])[0] == 2.0


def test_duplicate_jitter_separation():
    # near-coincident points must still produce a valid triangulation; the
    # sliver pair contributes ~0 volume and is flagged degenerate
    base = cloud(2, 12, seed=4)
    pts = np.vstack([base, base[3] + 1e-10])
    t = sim.build_triangulation(pts, seed=0)
    total = sum(simplex_volume(t.vertices[s]) for s in t.simplices)
    hull = ConvexHull(base)
    assert total == pytest.approx(hull.volume, rel=1e-6)


def test_json_round_trip(tmp_path):
    pts = cloud(3, 16, seed=6)
    t = sim.build_triangulation(pts, seed=6)
    path = tmp_path / "tri.json"
    sim.save_triangulation(t, path)
    u = sim.load_triangulation(path)
    assert np.array_equal(u.simplices, t.simplices)
    assert np.array_equal(u.vertices, t.vertices)
    assert np.array_equal(u.neighbors, t.neighbors)
    obj = json.loads(path.read_text())
    assert {"k", "vertices", "simplices", "seed"} <= set(obj)


def test_barycentric_reconstruction():
    pts = cloud(3, 20, seed=8)
    t = sim.build_triangulation(pts, seed=8)
    rng = np.random.default_rng(1)
    for _ in range(50):
        j = int(rng.integers(t.num_simplices))
        if t.degenerate[j]:
            continue
        lam = rng.dirichlet(np.ones(4))
        theta = lam @ t.vertices[t.simplices[j]]
        got = sim.barycentric_coordinates(t, j, theta)
        assert np.allclose(got @ t.vertices[t.simplices[j]], theta, atol=1e-10)
        assert got.sum() == pytest.approx(1.0, abs=1e-10)
