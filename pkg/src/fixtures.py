"""
Synthetic meshes for tests, benchmarks and the fixture corpus.

Icosphere construction follows the usual level-0 icosahedron + midpoint
subdivision scheme; each level multiplies the face count by 4
(20, 80, 320, 1280, 5120, 20480).
"""

from typing import Dict

import numpy as np

from mesh_core import RawMesh, load_mesh

_T = (1.0 + 5.0 ** 0.5) / 2.0

_ICO_VERTS0 = [
    [-1, _T, 0], [1, _T, 0], [-1, -_T, 0], [1, -_T, 0],
    [0, -1, _T], [0, 1, _T], [0, -1, -_T], [0, 1, -_T],
    [_T, 0, -1], [_T, 0, 1], [-_T, 0, -1], [-_T, 0, 1],
]

_ICO_FACES0 = [
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
]


def triangle() -> RawMesh:
    return RawMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


def quad() -> RawMesh:
    """Planar quad, fan-triangulated by the OBJ reader into 2 faces."""
    return load_mesh(b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")


def hexagon_fan(closed: bool = True) -> RawMesh:
    """6 faces around a raised hub; open drops the last face."""
    # Rim symmetric to the bit so the hub and rim grid cells are exact.
    h = np.sqrt(3.0) / 2.0
    rim = np.array([[1.0, 0.0, 0.0], [0.5, h, 0.0], [-0.5, h, 0.0],
                    [-1.0, 0.0, 0.0], [-0.5, -h, 0.0], [0.5, -h, 0.0]])
    positions = np.vstack([[[0.0, 0.0, 0.25]], rim])
    faces = [[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)]
    if not closed:
        faces = faces[:-1]
    return RawMesh(positions, faces)


def cube() -> RawMesh:
    return RawMesh(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
         [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
        [[0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7], [0, 1, 5], [0, 5, 4],
         [1, 2, 6], [1, 6, 5], [2, 3, 7], [2, 7, 6], [3, 0, 4], [3, 4, 7]],
    )


def icosphere(level: int = 1) -> RawMesh:
    """Unit icosphere with 20 * 4^level faces."""
    verts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in _ICO_VERTS0]
    faces = [list(f) for f in _ICO_FACES0]

    for _ in range(level):
        midpoints = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoints:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                midpoints[key] = len(verts) - 1
            return midpoints[key]

        subdivided = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            subdivided += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = subdivided

    return RawMesh(np.array(verts), np.array(faces))


def bowtie() -> RawMesh:
    """Two triangles meeting at a single (non-manifold) vertex."""
    return RawMesh(
        [[0, 0, 0], [1, -0.5, 0], [1, 0.5, 0], [-1, -0.5, 0.2], [-1, 0.5, 0.2]],
        [[0, 1, 2], [0, 4, 3]],
    )


def fin() -> RawMesh:
    """Three faces on one edge, two of them with the same edge direction."""
    return RawMesh(
        [[0, 0, 0], [0, 0, 1], [1, 0, 0.5], [-1, 0.2, 0.5], [0, 1, 0.5]],
        [[0, 1, 2], [1, 0, 3], [0, 1, 4]],
    )


def heightfield(rng: np.random.Generator, nx: int, ny: int) -> RawMesh:
    """Jittered grid with random heights and random quad diagonals."""
    xs, ys = np.meshgrid(np.arange(nx, dtype=np.float64), np.arange(ny, dtype=np.float64), indexing='ij')
    jitter = rng.uniform(-0.2, 0.2, size=(nx, ny, 2))
    heights = rng.uniform(0.0, 0.3 * max(nx, ny), size=(nx, ny))
    positions = np.stack([xs + jitter[..., 0], ys + jitter[..., 1], heights], axis=-1).reshape(-1, 3)

    def vid(i, j):
        return i * ny + j

    faces = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if rng.random() < 0.5:
                faces += [[a, b, c], [a, c, d]]
            else:
                faces += [[a, b, d], [b, c, d]]
    return RawMesh(positions, faces)


def jittered_icosphere(rng: np.random.Generator, level: int) -> RawMesh:
    """Icosphere with radial noise under a random rotation."""
    sphere = icosphere(level)
    radii = rng.uniform(0.85, 1.15, size=(len(sphere.positions), 1))
    rotation, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return RawMesh((sphere.positions * radii) @ rotation.T, sphere.faces)


def random_manifold(rng: np.random.Generator) -> RawMesh:
    """One fuzz mesh: an open heightfield or a closed jittered sphere."""
    if rng.random() < 0.5:
        return heightfield(rng, int(rng.integers(2, 11)), int(rng.integers(2, 11)))
    return jittered_icosphere(rng, int(rng.integers(0, 3)))


def permuted(mesh: RawMesh, rng: np.random.Generator) -> RawMesh:
    """Same surface with shuffled vertices, shuffled faces and rotated face triples."""
    perm = rng.permutation(len(mesh.positions))
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(len(perm))
    faces = inverse[mesh.faces][rng.permutation(mesh.num_faces)]
    shifts = rng.integers(0, 3, size=len(faces))
    faces = np.take_along_axis(faces, (shifts[:, None] + np.arange(3)) % 3, axis=1)
    return RawMesh(mesh.positions[perm], faces)


def fixture_corpus() -> Dict[str, RawMesh]:
    """Named fixtures; icosphere_<faces> covers 80 to 5120 faces."""
    corpus = {
        'triangle': triangle(),
        'quad': quad(),
        'hexagon_fan': hexagon_fan(closed=True),
        'hexagon_fan_open': hexagon_fan(closed=False),
        'cube': cube(),
        'bowtie': bowtie(),
        'fin': fin(),
    }
    for level in range(1, 5):
        corpus[f"icosphere_{20 * 4 ** level}"] = icosphere(level)
    return corpus
