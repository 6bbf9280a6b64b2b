"""
Triangle mesh ingestion, normalization, quantization and canonical ordering.

Every tokenizer consumes the canonical form produced here: integer vertices on
a 2^bits grid sorted by z-y-x, each face rotated so its lowest vertex comes
first, and faces ordered by their lowest vertex.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from config import DEFAULT_BITS, MAX_BITS, NORMALIZE_EPS

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    """Invalid or empty geometry."""


class ObjParseError(MeshError):
    """Malformed OBJ record. Carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


# =============================================================================
# TYPES
# =============================================================================

@dataclass
class RawMesh:
    """Real-valued triangle mesh: (n, 3) float positions, (m, 3) int faces."""
    positions: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.positions)):
            raise MeshError(
                f"face index out of range for {len(self.positions)} positions"
            )

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    def triangles(self) -> np.ndarray:
        """(m, 3, 3) corner positions per face."""
        return self.positions[self.faces]


@dataclass(frozen=True, eq=False)
class QuantizedMesh:
    """
    Canonical integer mesh.

    vertices: (n, 3) int64 grid coordinates in [0, 2^bits - 1], strictly
        ascending in (z, y, x)
    faces: (m, 3) int64 vertex indices, lowest index first, sorted by
        (a, min(b, c), max(b, c), b)
    """
    vertices: np.ndarray
    faces: np.ndarray
    bits: int = DEFAULT_BITS

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantizedMesh):
            return NotImplemented
        return (
            self.bits == other.bits
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.faces, other.faces)
        )

    __hash__ = None

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    @property
    def resolution(self) -> int:
        return 1 << self.bits

    def face_coordinates(self) -> np.ndarray:
        """(m, 3, 3) integer corner coordinates in face order."""
        return self.vertices[self.faces]


@dataclass
class CanonicalizationReport:
    merged_vertices: int = 0
    dropped_degenerate_faces: int = 0
    dropped_duplicate_faces: int = 0
    dropped_unreferenced_vertices: int = 0

    def to_dict(self) -> dict:
        return {
            'merged_vertices': self.merged_vertices,
            'dropped_degenerate_faces': self.dropped_degenerate_faces,
            'dropped_duplicate_faces': self.dropped_duplicate_faces,
            'dropped_unreferenced_vertices': self.dropped_unreferenced_vertices,
        }


# =============================================================================
# OBJ I/O
# =============================================================================

def _resolve_obj_index(ref: str, vertex_count: int, line_number: int) -> int:
    """OBJ vertex reference (`i`, `i/t`, `i//n`, `i/t/n`) -> 0-based index."""
    head = ref.split('/', 1)[0]
    try:
        index = int(head)
    except ValueError:
        raise ObjParseError(line_number, f"bad vertex reference {ref!r}") from None

    if index > 0:
        return index - 1
    if index < 0:
        resolved = vertex_count + index
        if resolved < 0:
            raise ObjParseError(line_number, f"relative index {index} before first vertex")
        return resolved
    raise ObjParseError(line_number, "vertex index 0 is not valid in OBJ")


def load_mesh(data: Union[bytes, str], format: str = 'obj') -> RawMesh:
    """
    Parse mesh file content. Only OBJ is supported.
    Polygons are fan-triangulated from their first listed vertex.
    """
    if format != 'obj':
        raise MeshError(f"unsupported mesh format: {format}")

    if isinstance(data, bytes):
        try:
            text = data.decode('utf-8')
        except UnicodeDecodeError as e:
            raise ObjParseError(1, f"not UTF-8 text ({e.reason})") from None
    else:
        text = data

    positions = []
    faces = []
    face_lines = []

    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        record = parts[0]

        if record == 'v':
            if len(parts) < 4:
                raise ObjParseError(line_number, "vertex needs 3 coordinates")
            try:
                positions.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError:
                raise ObjParseError(line_number, f"bad vertex coordinates {parts[1:4]}") from None

        elif record == 'f':
            if len(parts) < 4:
                raise ObjParseError(line_number, "face needs at least 3 vertices")
            refs = [_resolve_obj_index(p, len(positions), line_number) for p in parts[1:]]
            for i in range(1, len(refs) - 1):
                faces.append((refs[0], refs[i], refs[i + 1]))
                face_lines.append(line_number)

        # vt, vn, g, o, s, usemtl, mtllib, l, ... are ignored

    for (a, b, c), line_number in zip(faces, face_lines):
        if max(a, b, c) >= len(positions):
            raise ObjParseError(
                line_number,
                f"face index {max(a, b, c) + 1} out of range ({len(positions)} vertices)",
            )

    if not faces:
        raise MeshError("mesh has no faces")

    return RawMesh(np.array(positions, dtype=np.float64), np.array(faces, dtype=np.int64))


def load_obj_file(path: Union[str, Path]) -> RawMesh:
    """Read and parse an OBJ file from disk."""
    return load_mesh(Path(path).read_bytes(), format='obj')


def write_obj(mesh: RawMesh) -> str:
    """OBJ text: `v` lines at full precision, then 1-based `f` lines, LF endings."""
    lines = [
        f"v {float(x)!r} {float(y)!r} {float(z)!r}"
        for x, y, z in mesh.positions
    ]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    return '\n'.join(lines) + '\n'


def save_obj(mesh: RawMesh, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='\n') as f:
        f.write(write_obj(mesh))
    return path


# =============================================================================
# NORMALIZATION AND QUANTIZATION
# =============================================================================

def normalize(mesh: RawMesh, eps: float = NORMALIZE_EPS) -> RawMesh:
    """
    Center the bounding box at (0.5, 0.5, 0.5) and scale uniformly so the
    longest side is 1 - eps. All output coordinates lie in [0, 1).
    """
    positions = mesh.positions
    if len(positions) == 0:
        raise MeshError("mesh has no vertices")
    if not np.all(np.isfinite(positions)):
        raise MeshError("mesh has non-finite coordinates")

    lo = positions.min(axis=0)
    hi = positions.max(axis=0)
    extent = float((hi - lo).max())
    if extent <= 0.0:
        raise MeshError("bounding box has zero extent on all axes")

    center = (lo + hi) / 2.0
    scale = (1.0 - eps) / extent
    normalized = (positions - center) * scale + 0.5
    return RawMesh(normalized, mesh.faces.copy())


def quantize_positions(positions: np.ndarray, bits: int = DEFAULT_BITS) -> np.ndarray:
    """Map coordinates in [0, 1) to grid cells clamp(floor(p * 2^bits), 0, 2^bits - 1)."""
    if not 1 <= bits <= MAX_BITS:
        raise MeshError(f"bits must be in [1, {MAX_BITS}], got {bits}")
    positions = np.asarray(positions, dtype=np.float64)
    if positions.size and (positions.min() < 0.0 or positions.max() >= 1.0):
        raise MeshError("coordinates must lie in [0, 1); normalize the mesh first")

    resolution = 1 << bits
    cells = np.floor(positions * resolution).astype(np.int64)
    return np.clip(cells, 0, resolution - 1)


def quantize(mesh: RawMesh, bits: int = DEFAULT_BITS) -> QuantizedMesh:
    """Quantize a normalized mesh and return its canonical form."""
    quantized, _ = canonicalize(quantize_positions(mesh.positions, bits), mesh.faces, bits)
    return quantized


def dequantize(mesh: QuantizedMesh) -> RawMesh:
    """Cell-center reconstruction: q -> (q + 0.5) / 2^bits."""
    positions = (mesh.vertices.astype(np.float64) + 0.5) / mesh.resolution
    return RawMesh(positions, mesh.faces.copy())


def prepare_mesh(mesh: RawMesh, bits: int = DEFAULT_BITS) -> Tuple[QuantizedMesh, CanonicalizationReport]:
    """normalize -> quantize -> canonicalize, keeping the report."""
    normalized = normalize(mesh)
    return canonicalize(quantize_positions(normalized.positions, bits), normalized.faces, bits)


# =============================================================================
# CANONICALIZATION
# =============================================================================

def zyx_order(vertices: np.ndarray) -> np.ndarray:
    """Indices sorting integer vertices ascending by z, then y, then x."""
    return np.lexsort((vertices[:, 0], vertices[:, 1], vertices[:, 2]))


def canonicalize(vertices, faces, bits: int = DEFAULT_BITS) -> Tuple[QuantizedMesh, CanonicalizationReport]:
    """
    Build the canonical mesh from integer vertices and index faces.

    Duplicate vertices are merged, faces with fewer than 3 distinct vertices
    and exact oriented duplicates are dropped, unreferenced vertices are
    removed. Faces keep their winding and are rotated so the z-y-x lowest
    vertex comes first.
    """
    vertices = np.asarray(vertices, dtype=np.int64).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    resolution = 1 << bits
    report = CanonicalizationReport()

    if vertices.size and (vertices.min() < 0 or vertices.max() >= resolution):
        raise MeshError(f"vertex coordinates outside [0, {resolution - 1}]")
    if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
        raise MeshError("face index out of range")
    if len(faces) == 0:
        raise MeshError("mesh has no faces")

    # Merge duplicate grid points; rank = position in z-y-x order
    order = zyx_order(vertices)
    sorted_vertices = vertices[order]
    is_first = np.ones(len(sorted_vertices), dtype=bool)
    is_first[1:] = np.any(sorted_vertices[1:] != sorted_vertices[:-1], axis=1)
    unique_vertices = sorted_vertices[is_first]
    remap = np.empty(len(vertices), dtype=np.int64)
    remap[order] = np.cumsum(is_first) - 1
    report.merged_vertices = len(vertices) - len(unique_vertices)

    faces = remap[faces]
    degenerate = (
        (faces[:, 0] == faces[:, 1])
        | (faces[:, 1] == faces[:, 2])
        | (faces[:, 0] == faces[:, 2])
    )
    report.dropped_degenerate_faces = int(degenerate.sum())
    faces = faces[~degenerate]
    if len(faces) == 0:
        raise MeshError("all faces were dropped during canonicalization")

    # Cyclic rotation keeps winding
    shift = np.argmin(faces, axis=1)
    rotation = (shift[:, None] + np.arange(3)) % 3
    faces = np.take_along_axis(faces, rotation, axis=1)

    unique_faces = np.unique(faces, axis=0)
    report.dropped_duplicate_faces = len(faces) - len(unique_faces)
    faces = unique_faces

    used = np.zeros(len(unique_vertices), dtype=bool)
    used[faces.ravel()] = True
    report.dropped_unreferenced_vertices = int((~used).sum())
    compact = np.cumsum(used) - 1
    faces = compact[faces]
    unique_vertices = unique_vertices[used]

    low = np.minimum(faces[:, 1], faces[:, 2])
    high = np.maximum(faces[:, 1], faces[:, 2])
    faces = faces[np.lexsort((faces[:, 1], high, low, faces[:, 0]))]

    logger.debug(
        "canonicalized %d vertices / %d faces: %s",
        len(unique_vertices), len(faces), report.to_dict(),
    )
    return QuantizedMesh(unique_vertices, faces, bits), report


if __name__ == '__main__':
    cube = RawMesh(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
         [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
        [[0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7], [0, 1, 5], [0, 5, 4],
         [1, 2, 6], [1, 6, 5], [2, 3, 7], [2, 7, 6], [3, 0, 4], [3, 4, 7]],
    )
    quantized, report = prepare_mesh(cube)
    print(f"Vertices: {quantized.num_vertices}, faces: {quantized.num_faces}")
    print(f"Report: {report.to_dict()}")
    print(quantized.vertices)
