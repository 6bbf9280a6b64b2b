"""
Compression, locality and geometric fidelity metrics.

- compression ratio: content tokens / (9 * faces)
- AVD@t: mean distance between each emitted vertex and its previous t vertices
- Chamfer / Hausdorff distance between surface point clouds
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Union

import numpy as np
from scipy.spatial import cKDTree

from config import AVD_WINDOWS, DEFAULT_POINTS, DEFAULT_SEED
from mesh_core import MeshError, QuantizedMesh, RawMesh, dequantize
from tokenizer_baselines import emission_stream
from tokenizer_bpt import TokenSequence

logger = logging.getLogger(__name__)


# =============================================================================
# COMPRESSION
# =============================================================================

@dataclass
class CompressionReport:
    tokens: int
    faces: int
    ratio: float

    def to_dict(self) -> dict:
        return {'tokens': self.tokens, 'faces': self.faces, 'ratio': self.ratio}


def compression_ratio(seq: TokenSequence, mesh: QuantizedMesh) -> CompressionReport:
    """Content-token count over the 9 tokens per face of the vanilla layout."""
    if mesh.num_faces == 0:
        raise MeshError("compression ratio of a mesh with no faces")
    tokens = len(seq.content)
    return CompressionReport(tokens, mesh.num_faces, tokens / (9 * mesh.num_faces))


# =============================================================================
# LOCALITY
# =============================================================================

def vertex_emission_stream(seq: TokenSequence) -> np.ndarray:
    """(n, 3) grid coordinates in the order the tokenizer emits vertices."""
    return emission_stream(seq)


def avd(stream, t: int) -> float:
    """
    AVD@t = mean over i >= 1 of the mean distance from p_i to
    p_{i-min(t,i)} .. p_{i-1}, in grid units.
    """
    points = np.asarray(stream, dtype=np.float64).reshape(-1, 3)
    if len(points) < 2:
        raise ValueError("AVD needs a stream of at least 2 vertices")
    if t < 1:
        raise ValueError(f"window t must be positive, got {t}")

    n = len(points)
    sums = np.zeros(n)
    for lag in range(1, min(t, n - 1) + 1):
        sums[lag:] += np.linalg.norm(points[lag:] - points[:-lag], axis=1)

    window = np.minimum(np.arange(1, n), t)
    return float(np.mean(sums[1:] / window))


def avd_report(stream, windows: Iterable[int] = AVD_WINDOWS) -> Dict[int, float]:
    """AVD for each window size."""
    return {int(t): avd(stream, t) for t in windows}


# =============================================================================
# SURFACE SAMPLING
# =============================================================================

@dataclass
class PointCloud:
    points: np.ndarray
    seed: int
    face_index: np.ndarray = None

    def __len__(self) -> int:
        return len(self.points)


def triangle_areas(mesh: RawMesh) -> np.ndarray:
    tri = mesh.triangles()
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    return np.linalg.norm(cross, axis=1) / 2.0


def sample_surface(mesh: RawMesh, n: int = DEFAULT_POINTS, seed: int = DEFAULT_SEED) -> PointCloud:
    """
    n points drawn area-proportionally across triangles, uniform within each.
    Deterministic for a given seed.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    areas = triangle_areas(mesh)
    total = areas.sum()
    if not total > 0:
        raise MeshError("mesh has zero surface area")

    rng = np.random.default_rng(seed)
    cumulative = np.cumsum(areas) / total
    face_index = np.searchsorted(cumulative, rng.random(n), side='right')
    face_index = np.minimum(face_index, len(areas) - 1)

    # Fold (u, v) from the unit square into the triangle
    uv = rng.random((n, 2))
    outside = uv.sum(axis=1) > 1.0
    uv[outside] = 1.0 - uv[outside]

    tri = mesh.triangles()[face_index]
    points = (
        tri[:, 0]
        + uv[:, :1] * (tri[:, 1] - tri[:, 0])
        + uv[:, 1:] * (tri[:, 2] - tri[:, 0])
    )
    return PointCloud(points, seed, face_index)


def point_cloud_from_mesh(mesh: Union[RawMesh, QuantizedMesh], n: int = DEFAULT_POINTS,
                          seed: int = DEFAULT_SEED) -> PointCloud:
    """Sample a raw mesh, or a quantized one at its cell centers."""
    if isinstance(mesh, QuantizedMesh):
        mesh = dequantize(mesh)
    return sample_surface(mesh, n, seed)


# =============================================================================
# POINT-SET DISTANCES
# =============================================================================

def _as_points(cloud) -> np.ndarray:
    points = cloud.points if isinstance(cloud, PointCloud) else cloud
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise ValueError("point cloud is empty")
    return points


def nearest_distances(source, target) -> np.ndarray:
    """Exact distance from every source point to its nearest target point."""
    distances, _ = cKDTree(_as_points(target)).query(_as_points(source), k=1, workers=-1)
    return distances


def chamfer(P, Q, reduction: str = 'mean') -> float:
    """
    Symmetric Chamfer distance.
    reduction='mean': mean_p min_q |p-q| + mean_q min_p |q-p|
    reduction='sum':  the same with sums instead of means
    """
    d_pq = nearest_distances(P, Q)
    d_qp = nearest_distances(Q, P)
    if reduction == 'mean':
        return float(d_pq.mean() + d_qp.mean())
    if reduction == 'sum':
        return float(d_pq.sum() + d_qp.sum())
    raise ValueError(f"unknown reduction: {reduction}")


def directed_hausdorff(P, Q) -> float:
    """max_p min_q |p - q|"""
    return float(nearest_distances(P, Q).max())


def hausdorff(P, Q) -> float:
    return max(directed_hausdorff(P, Q), directed_hausdorff(Q, P))


def fidelity(a: RawMesh, b: RawMesh, n: int = DEFAULT_POINTS, seed: int = DEFAULT_SEED,
             reduction: str = 'mean') -> dict:
    """CD / HD between two meshes sampled with the same seed."""
    P = sample_surface(a, n, seed)
    Q = sample_surface(b, n, seed)
    return {
        'cd': chamfer(P, Q, reduction),
        'hd': hausdorff(P, Q),
        'n': n,
        'seed': seed,
    }
