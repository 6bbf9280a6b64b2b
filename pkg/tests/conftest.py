import numpy as np
import pytest

from fixtures import fixture_corpus, icosphere
from mesh_core import canonicalize, prepare_mesh
from tokenizer_bpt import BptConfig

# Grid meshes that sit inside block 0 at (B, O) = (8, 16)
HEX_RIM = [[4, 2, 0], [3, 4, 0], [1, 4, 0], [0, 2, 0], [1, 0, 0], [3, 0, 0]]
HEX_HUB = [2, 2, 1]


@pytest.fixture
def cfg():
    return BptConfig.from_blocks(8, 7)


@pytest.fixture
def grid_mesh():
    """Canonical 7-bit mesh from integer vertices and faces."""
    def build(vertices, faces, bits=7):
        mesh, _ = canonicalize(np.array(vertices), np.array(faces), bits)
        return mesh
    return build


@pytest.fixture
def one_block_triangle(grid_mesh):
    return grid_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


@pytest.fixture
def one_block_hexagon(grid_mesh):
    """Closed 6-face fan around a raised hub."""
    return grid_mesh(HEX_RIM + [HEX_HUB], [[6, k, (k + 1) % 6] for k in range(6)])


@pytest.fixture
def one_block_fan(grid_mesh):
    """Fan of k faces around the hub; k = 6 closes it."""
    def build(k):
        faces = [[6, i, (i + 1) % 6] for i in range(k)]
        used = sorted({v for f in faces for v in f})
        remap = {v: i for i, v in enumerate(used)}
        vertices = [(HEX_RIM + [HEX_HUB])[v] for v in used]
        return grid_mesh(vertices, [[remap[v] for v in f] for f in faces])
    return build


@pytest.fixture(scope='session')
def fixture_meshes():
    return {name: prepare_mesh(raw, 7)[0] for name, raw in fixture_corpus().items()}


@pytest.fixture(scope='session')
def icospheres():
    """faces -> canonical 7-bit icosphere, 80 to 5120 faces."""
    meshes = {}
    for level in range(1, 5):
        mesh, _ = prepare_mesh(icosphere(level), 7)
        meshes[20 * 4 ** level] = mesh
    return meshes
