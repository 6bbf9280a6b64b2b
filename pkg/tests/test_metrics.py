import numpy as np
import pytest
from scipy.stats import chisquare

from mesh_core import MeshError, RawMesh
from metrics import (
    PointCloud,
    avd,
    avd_report,
    chamfer,
    compression_ratio,
    directed_hausdorff,
    fidelity,
    hausdorff,
    point_cloud_from_mesh,
    sample_surface,
    triangle_areas,
    vertex_emission_stream,
)
from tokenizer_baselines import encode_sequence
from tokenizer_bpt import KINDS

# Areas 3 and 1, both in z = 0
TWO_TRIANGLES = RawMesh(
    [[0, 0, 0], [3, 0, 0], [0, 2, 0], [10, 0, 0], [11, 0, 0], [10, 2, 0]],
    [[0, 1, 2], [3, 4, 5]],
)


def barycentric(points, tri):
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    v0, v1, v2 = b - a, c - a, points - a
    d00 = np.einsum('ij,ij->i', v0, v0)
    d01 = np.einsum('ij,ij->i', v0, v1)
    d11 = np.einsum('ij,ij->i', v1, v1)
    d20 = np.einsum('ij,ij->i', v2, v0)
    d21 = np.einsum('ij,ij->i', v2, v1)
    denom = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / denom
    w = (d00 * d21 - d01 * d20) / denom
    return 1.0 - v - w, v, w


# ---------------------------------------------------------------------------
# Compression
# ---------------------------------------------------------------------------

def test_vanilla_ratio_is_one(fixture_meshes, cfg):
    for mesh in fixture_meshes.values():
        assert compression_ratio(encode_sequence(mesh, cfg, 'vanilla'), mesh).ratio == 1.0


def test_single_triangle_ratios(one_block_triangle, cfg):
    bpt = compression_ratio(encode_sequence(one_block_triangle, cfg, 'bpt'), one_block_triangle)
    assert bpt.to_dict() == {'tokens': 4, 'faces': 1, 'ratio': 4 / 9}
    blocked = compression_ratio(encode_sequence(one_block_triangle, cfg, 'blocked'), one_block_triangle)
    assert blocked.ratio == 4 / 9


def test_shared_edge_ratio(grid_mesh, cfg):
    mesh = grid_mesh([[0, 0, 0], [2, 0, 0], [0, 2, 0], [2, 2, 0]], [[0, 1, 3], [0, 3, 2]])
    assert compression_ratio(encode_sequence(mesh, cfg, 'bpt'), mesh).ratio == 5 / 18


# ---------------------------------------------------------------------------
# Locality
# ---------------------------------------------------------------------------

def test_avd_examples():
    stream = [[0, 0, 0], [3, 4, 0], [6, 8, 0]]
    assert avd(stream, 1) == 5.0
    assert avd(stream, 2) == 6.25
    # windows longer than the history use every earlier vertex
    assert avd(stream, 128) == 6.25


def test_avd_of_repeated_vertex_is_zero():
    assert avd(np.ones((10, 3)), 8) == 0.0


def test_avd_rejects_short_streams():
    with pytest.raises(ValueError):
        avd([[0, 0, 0]], 8)
    with pytest.raises(ValueError):
        avd([[0, 0, 0], [1, 1, 1]], 0)


def test_avd_report_keys():
    report = avd_report([[0, 0, 0], [3, 4, 0], [6, 8, 0]], (1, 2))
    assert report == {1: 5.0, 2: 6.25}


def test_emission_stream_lengths(one_block_hexagon, cfg):
    bpt = vertex_emission_stream(encode_sequence(one_block_hexagon, cfg, 'bpt'))
    vanilla = vertex_emission_stream(encode_sequence(one_block_hexagon, cfg, 'vanilla'))
    assert len(bpt) == 8
    assert len(vanilla) == 18


def test_emission_stream_covers_vertices(icospheres, cfg):
    mesh = icospheres[320]
    for kind in KINDS:
        stream = vertex_emission_stream(encode_sequence(mesh, cfg, kind))
        assert len(np.unique(stream, axis=0)) == mesh.num_vertices


# ---------------------------------------------------------------------------
# Surface sampling
# ---------------------------------------------------------------------------

def test_triangle_areas():
    np.testing.assert_allclose(triangle_areas(TWO_TRIANGLES), [3.0, 1.0])


def test_sampling_is_deterministic():
    a = sample_surface(TWO_TRIANGLES, 500, seed=3)
    b = sample_surface(TWO_TRIANGLES, 500, seed=3)
    np.testing.assert_array_equal(a.points, b.points)
    c = sample_surface(TWO_TRIANGLES, 500, seed=4)
    assert not np.array_equal(a.points, c.points)


def test_samples_lie_in_their_triangle():
    cloud = sample_surface(TWO_TRIANGLES, 2000, seed=0)
    assert isinstance(cloud, PointCloud)
    assert len(cloud) == 2000
    u, v, w = barycentric(cloud.points, TWO_TRIANGLES.triangles()[cloud.face_index])
    assert np.all(u >= -1e-12) and np.all(v >= -1e-12) and np.all(w >= -1e-12)
    assert np.all(cloud.points[:, 2] == 0.0)


def test_single_sample_in_triangle():
    tri = RawMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    point = sample_surface(tri, 1, seed=0).points[0]
    assert point[0] >= 0 and point[1] >= 0 and point[0] + point[1] <= 1.0 + 1e-12


def test_sampling_is_area_weighted():
    n = 100_000
    cloud = sample_surface(TWO_TRIANGLES, n, seed=0)
    counts = np.bincount(cloud.face_index, minlength=2)
    assert abs(counts[0] / n - 0.75) < 0.01
    assert chisquare(counts, [0.75 * n, 0.25 * n]).pvalue > 0.01


def test_zero_area_mesh():
    flat = RawMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    with pytest.raises(MeshError):
        sample_surface(flat, 10)


def test_quantized_mesh_sampled_at_cell_centers(icospheres):
    cloud = point_cloud_from_mesh(icospheres[320], 256, seed=1)
    assert cloud.points.min() >= 0.5 / 128 - 1e-12
    assert cloud.points.max() <= 127.5 / 128 + 1e-12


# ---------------------------------------------------------------------------
# Point-set distances
# ---------------------------------------------------------------------------

def test_chamfer_and_hausdorff_examples():
    P = np.array([[0, 0, 0], [1, 0, 0]], dtype=float)
    Q = np.array([[0, 0, 0]], dtype=float)
    assert chamfer(P, Q) == 0.5
    assert chamfer(P, Q, reduction='sum') == 1.0
    assert directed_hausdorff(P, Q) == 1.0
    assert directed_hausdorff(Q, P) == 0.0
    assert hausdorff(P, Q) == 1.0


def test_distances_symmetric_and_bounded():
    rng = np.random.default_rng(2)
    P, Q = rng.random((300, 3)), rng.random((200, 3))
    assert chamfer(P, Q) == chamfer(Q, P)
    assert hausdorff(P, Q) == hausdorff(Q, P)
    assert chamfer(P, Q) <= 2 * hausdorff(P, Q)


def test_translated_cloud_hausdorff():
    d = 1e-3
    P = np.random.default_rng(9).random((200, 3))
    assert hausdorff(P, P + [d, 0, 0]) == pytest.approx(d, rel=1e-9)


def test_unknown_reduction():
    with pytest.raises(ValueError):
        chamfer(np.zeros((1, 3)), np.zeros((1, 3)), reduction='median')


def test_empty_cloud():
    with pytest.raises(ValueError):
        chamfer(np.zeros((0, 3)), np.zeros((1, 3)))


def test_fidelity_of_identical_meshes():
    result = fidelity(TWO_TRIANGLES, TWO_TRIANGLES, n=512, seed=0)
    assert result == {'cd': 0.0, 'hd': 0.0, 'n': 512, 'seed': 0}
