"""
Blocked and Patchified Tokenization (BPT).

Vertices are indexed as (block, offset) pairs on a B^3 x O^3 split of the
quantization grid. Faces are aggregated into fan patches around the vertex
with the most unvisited faces. A patch is written as

    center-block, center-offset, [common-block] offset, [common-block] offset, ...

where a common-block token is emitted only when the block changes. The
center-block vocabulary is disjoint from the common one, so it doubles as the
patch separator.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_BITS, DEFAULT_BLOCKS, MAX_BITS
from mesh_core import MeshError, QuantizedMesh, canonicalize

logger = logging.getLogger(__name__)

KIND_BPT = 'bpt'
KIND_VANILLA = 'vanilla'
KIND_BLOCKED = 'blocked'
KINDS = (KIND_BPT, KIND_VANILLA, KIND_BLOCKED)


class ConfigError(ValueError):
    """Inconsistent (B, O, bits) or a config that does not match the data."""


class MalformedSequence(ValueError):
    """Token stream that cannot be decoded."""


# =============================================================================
# CONFIG AND VOCABULARY
# =============================================================================

@dataclass(frozen=True)
class BptConfig:
    """B blocks and O offsets per axis on a 2^bits grid; B * O == 2^bits."""
    blocks: int = DEFAULT_BLOCKS
    offsets: int = (1 << DEFAULT_BITS) // DEFAULT_BLOCKS
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if not 1 <= self.bits <= MAX_BITS:
            raise ConfigError(f"bits must be in [1, {MAX_BITS}], got {self.bits}")
        if self.blocks < 1 or self.offsets < 1:
            raise ConfigError("blocks and offsets must be >= 1")
        if self.blocks * self.offsets != 1 << self.bits:
            raise ConfigError(
                f"blocks * offsets must equal 2^bits: "
                f"{self.blocks} * {self.offsets} != {1 << self.bits}"
            )

    @classmethod
    def from_blocks(cls, blocks: int = DEFAULT_BLOCKS, bits: int = DEFAULT_BITS) -> 'BptConfig':
        """Derive O = 2^bits / B."""
        if not 1 <= bits <= MAX_BITS:
            raise ConfigError(f"bits must be in [1, {MAX_BITS}], got {bits}")
        resolution = 1 << bits
        if blocks < 1 or resolution % blocks:
            raise ConfigError(f"{blocks} blocks do not divide the {resolution}-cell grid")
        return cls(blocks, resolution // blocks, bits)

    @property
    def resolution(self) -> int:
        return 1 << self.bits

    @property
    def block_vocab(self) -> int:
        return self.blocks ** 3

    @property
    def offset_vocab(self) -> int:
        return self.offsets ** 3

    def to_dict(self) -> dict:
        return {'blocks': self.blocks, 'offsets': self.offsets, 'bits': self.bits}


@dataclass(frozen=True)
class TokenLayout:
    """
    Half-open id ranges of one tokenizer kind.
    For vanilla, `offset` holds the coordinate ids and the block ranges are empty.
    """
    kind: str
    offset: Tuple[int, int]
    common: Tuple[int, int]
    center: Tuple[int, int]
    bos: int
    eos: int
    pad: int

    @property
    def total(self) -> int:
        return self.pad + 1

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'offset': list(self.offset),
            'common': list(self.common),
            'center': list(self.center),
            'bos': self.bos,
            'eos': self.eos,
            'pad': self.pad,
            'total': self.total,
        }


def token_layout(cfg: BptConfig, kind: str = KIND_BPT) -> TokenLayout:
    """
    bpt / blocked: offsets [0, O^3), common [O^3, O^3+B^3),
    center [O^3+B^3, O^3+2B^3), then BOS, EOS, PAD.
    vanilla: coordinates [0, 2^bits), then BOS, EOS, PAD.
    """
    if kind == KIND_VANILLA:
        r = cfg.resolution
        return TokenLayout(kind, (0, r), (r, r), (r, r), r, r + 1, r + 2)
    if kind not in (KIND_BPT, KIND_BLOCKED):
        raise ConfigError(f"unknown tokenizer kind: {kind}")

    o3 = cfg.offset_vocab
    b3 = cfg.block_vocab
    bos = o3 + 2 * b3
    return TokenLayout(kind, (0, o3), (o3, o3 + b3), (o3 + b3, bos), bos, bos + 1, bos + 2)


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class Patch:
    """
    Fan around `center`. Faces are (center, ring[i], ring[i+1]).
    Closed fans repeat the first ring vertex at the end.
    """
    center: int
    ring: Tuple[int, ...]
    closed: bool = False

    @property
    def num_faces(self) -> int:
        return len(self.ring) - 1

    def faces(self) -> List[Tuple[int, int, int]]:
        return [(self.center, self.ring[i], self.ring[i + 1]) for i in range(len(self.ring) - 1)]


@dataclass(frozen=True, eq=False)
class TokenSequence:
    tokens: np.ndarray
    config: BptConfig
    kind: str = KIND_BPT

    def __post_init__(self):
        object.__setattr__(self, 'tokens', np.asarray(self.tokens, dtype=np.int64).ravel())

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenSequence):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.config == other.config
            and np.array_equal(self.tokens, other.tokens)
        )

    __hash__ = None

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def layout(self) -> TokenLayout:
        return token_layout(self.config, self.kind)

    @property
    def content(self) -> np.ndarray:
        """Token ids with BOS/EOS/PAD removed."""
        return self.tokens[self.tokens < self.layout.bos]


# =============================================================================
# BLOCK-WISE INDEXING
# =============================================================================

def block_index(v, cfg: BptConfig):
    """
    b = (x//O)*B^2 + (y//O)*B + z//O
    o = (x%O)*O^2 + (y%O)*O + z%O

    Accepts one vertex (returns two ints) or an (n, 3) array (returns two arrays).
    """
    v = np.asarray(v, dtype=np.int64)
    B, O = cfg.blocks, cfg.offsets
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    b = (x // O) * B * B + (y // O) * B + z // O
    o = (x % O) * O * O + (y % O) * O + z % O
    if v.ndim == 1:
        return int(b), int(o)
    return b, o


def inverse_block_index(b, o, cfg: BptConfig) -> np.ndarray:
    """Exact inverse of block_index: (b, o) -> (x, y, z)."""
    b = np.asarray(b, dtype=np.int64)
    o = np.asarray(o, dtype=np.int64)
    B, O = cfg.blocks, cfg.offsets
    x = (b // (B * B)) * O + o // (O * O)
    y = ((b // B) % B) * O + (o // O) % O
    z = (b % B) * O + o % O
    return np.stack([x, y, z], axis=-1)


def naive_index(v, bits: int = DEFAULT_BITS):
    """Single index x*r^2 + y*r + z over the full r^3 grid."""
    v = np.asarray(v, dtype=np.int64)
    r = 1 << bits
    index = v[..., 0] * r * r + v[..., 1] * r + v[..., 2]
    if v.ndim == 1:
        return int(index)
    return index


# =============================================================================
# PATCH AGGREGATION
# =============================================================================

def _fan_link(face: Sequence[int], center: int) -> Tuple[int, int]:
    """(u, w) such that (center, u, w) is a cyclic rotation of the face."""
    a, b, c = face
    if a == center:
        return b, c
    if b == center:
        return c, a
    return a, b


def _fan_patch(center: int, seed: int, faces: List[List[int]],
               incident: List[List[int]], visited: List[bool]) -> Tuple[Patch, List[int]]:
    """
    Walk the fan component around `center` that contains `seed`.
    Returns the patch and its faces in ring order.

    Each unvisited face (center, u, w) is a directed link u -> w. Where several
    links leave or enter one ring vertex, the earliest face in canonical order
    is taken and the rest stay unvisited.
    """
    links: Dict[int, Tuple[int, int]] = {}
    outgoing = defaultdict(list)
    incoming = defaultdict(list)
    for fi in incident[center]:
        if visited[fi]:
            continue
        u, w = _fan_link(faces[fi], center)
        links[fi] = (u, w)
        outgoing[u].append(fi)
        incoming[w].append(fi)

    used = {seed}
    backward = []
    closed = False
    start = links[seed][0]
    while True:
        prev = next((fi for fi in incoming[start] if fi == seed or fi not in used), None)
        if prev is None:
            break
        if prev == seed:
            closed = True
            break
        used.add(prev)
        backward.append(prev)
        start = links[prev][0]

    if closed:
        chain = [seed] + backward[::-1]
    else:
        chain = backward[::-1] + [seed]
        end = links[seed][1]
        while True:
            nxt = next((fi for fi in outgoing[end] if fi not in used), None)
            if nxt is None:
                break
            used.add(nxt)
            chain.append(nxt)
            end = links[nxt][1]

    ring = [links[chain[0]][0]] + [links[fi][1] for fi in chain]
    return Patch(center, tuple(ring), closed), chain


def aggregate_patches(mesh: QuantizedMesh) -> List[Patch]:
    """
    Cover every face of a canonical mesh with exactly one fan patch.

    The first unvisited face in canonical order seeds each patch; its vertex
    with the most unvisited faces (lowest z-y-x on ties) becomes the center.
    """
    faces = mesh.faces.tolist()
    incident = [[] for _ in range(mesh.num_vertices)]
    for fi, face in enumerate(faces):
        for v in face:
            incident[v].append(fi)

    unvisited = [len(fs) for fs in incident]
    visited = [False] * len(faces)
    patches = []
    cursor = 0

    while True:
        while cursor < len(faces) and visited[cursor]:
            cursor += 1
        if cursor == len(faces):
            break

        seed_face = faces[cursor]
        center = max(seed_face, key=lambda v: (unvisited[v], -v))
        patch, members = _fan_patch(center, cursor, faces, incident, visited)

        for fi in members:
            visited[fi] = True
            for v in faces[fi]:
                unvisited[v] -= 1
        patches.append(patch)

    return patches


def patch_statistics(patches: List[Patch]) -> dict:
    """Patch count, closed count, mean faces per patch, single-face fraction."""
    if not patches:
        return {'patches': 0, 'closed': 0, 'mean_faces': 0.0, 'single_face_fraction': 0.0}
    sizes = np.array([p.num_faces for p in patches])
    return {
        'patches': len(patches),
        'closed': sum(p.closed for p in patches),
        'mean_faces': float(sizes.mean()),
        'single_face_fraction': float(np.mean(sizes == 1)),
    }


def patch_stream(patches: List[Patch], mesh: QuantizedMesh) -> np.ndarray:
    """Vertex coordinates in emission order: center, then ring, per patch."""
    order = []
    for p in patches:
        order.append(p.center)
        order.extend(p.ring)
    return mesh.vertices[np.array(order, dtype=np.int64)]


# =============================================================================
# ENCODE / DECODE
# =============================================================================

def check_config(mesh: QuantizedMesh, cfg: BptConfig) -> None:
    if mesh.num_faces == 0:
        raise MeshError("cannot tokenize an empty mesh")
    if cfg.bits != mesh.bits:
        raise ConfigError(f"config is for {cfg.bits}-bit grids, mesh is {mesh.bits}-bit")


def encode(mesh: QuantizedMesh, cfg: BptConfig) -> TokenSequence:
    """Tokenize a canonical mesh: BOS, patches, EOS."""
    check_config(mesh, cfg)
    layout = token_layout(cfg, KIND_BPT)
    blocks, offsets = block_index(mesh.vertices, cfg)
    blocks = blocks.tolist()
    offsets = offsets.tolist()
    common_base = layout.common[0]
    center_base = layout.center[0]

    tokens = [layout.bos]
    for patch in aggregate_patches(mesh):
        state = blocks[patch.center]
        tokens.append(center_base + state)
        tokens.append(offsets[patch.center])
        for v in patch.ring:
            if blocks[v] != state:
                state = blocks[v]
                tokens.append(common_base + state)
            tokens.append(offsets[v])
    tokens.append(layout.eos)

    return TokenSequence(np.array(tokens, dtype=np.int64), cfg, KIND_BPT)


def split_content(tokens: Sequence[int], layout: TokenLayout) -> List[int]:
    """
    Validate BOS ... EOS [PAD ...] framing and vocabulary membership.
    Returns the content ids.
    """
    tokens = [int(t) for t in tokens]
    for t in tokens:
        if t < 0 or t >= layout.total:
            raise MalformedSequence(f"token id {t} out of vocabulary (size {layout.total})")
    if not tokens or tokens[0] != layout.bos:
        raise MalformedSequence("sequence must start with BOS")
    try:
        end = tokens.index(layout.eos)
    except ValueError:
        raise MalformedSequence("truncated sequence: no EOS") from None
    if any(t != layout.pad for t in tokens[end + 1:]):
        raise MalformedSequence("only PAD may follow EOS")

    content = tokens[1:end]
    if any(t >= layout.bos for t in content):
        raise MalformedSequence("special token inside content")
    return content


def parse_patches(seq: TokenSequence) -> List[Tuple[Tuple[int, int, int], List[Tuple[int, int, int]]]]:
    """
    Decoder front end: token ids -> [(center_xyz, [ring_xyz, ...]), ...].
    Dispatches on vocabulary range; never needs lookahead.
    """
    if seq.kind != KIND_BPT:
        raise MalformedSequence(f"expected a bpt sequence, got {seq.kind}")
    cfg = seq.config
    layout = token_layout(cfg, KIND_BPT)
    content = split_content(seq.tokens, layout)
    if content and not layout.center[0] <= content[0] < layout.center[1]:
        raise MalformedSequence("first content token must be a center-block id")

    patches = []
    center_block: Optional[int] = None
    center = None
    ring = []
    state = None

    def close_patch():
        if center is None:
            raise MalformedSequence("patch has no center offset")
        if len(ring) < 2:
            raise MalformedSequence(f"patch ring has {len(ring)} vertices, needs >= 2")
        patches.append((center, ring))

    for t in content:
        if layout.center[0] <= t < layout.center[1]:
            if center_block is not None:
                close_patch()
            center_block = t - layout.center[0]
            center = None
            ring = []
            state = center_block
        elif layout.common[0] <= t < layout.common[1]:
            if center is None:
                raise MalformedSequence("block id before the center offset")
            state = t - layout.common[0]
        else:
            if center_block is None:
                raise MalformedSequence("offset before any block context")
            xyz = tuple(int(c) for c in inverse_block_index(state, t, cfg))
            if center is None:
                center = xyz
            else:
                ring.append(xyz)

    if center_block is None:
        raise MalformedSequence("sequence has no patches")
    close_patch()
    return patches


def decode(seq: TokenSequence, cfg: Optional[BptConfig] = None) -> QuantizedMesh:
    """Rebuild the canonical mesh from a BPT token sequence."""
    if cfg is not None and cfg != seq.config:
        raise ConfigError(f"sequence config {seq.config} does not match {cfg}")

    index: Dict[Tuple[int, int, int], int] = {}
    faces = []

    def vertex_id(xyz):
        if xyz not in index:
            index[xyz] = len(index)
        return index[xyz]

    for center, ring in parse_patches(seq):
        c = vertex_id(center)
        ids = [vertex_id(v) for v in ring]
        for a, b in zip(ids[:-1], ids[1:]):
            if len({c, a, b}) < 3:
                raise MalformedSequence("patch encodes a degenerate face")
            faces.append((c, a, b))

    vertices = np.array(list(index.keys()), dtype=np.int64)
    mesh, _ = canonicalize(vertices, np.array(faces, dtype=np.int64), seq.config.bits)
    return mesh


def sequence_length(mesh: QuantizedMesh, cfg: BptConfig) -> int:
    """Length of encode(mesh, cfg) including BOS and EOS."""
    return len(encode(mesh, cfg))


def emission_stream(seq: TokenSequence) -> np.ndarray:
    """Vertices in emission order: center then ring, per decoded patch."""
    points = []
    for center, ring in parse_patches(seq):
        points.append(center)
        points.extend(ring)
    return np.array(points, dtype=np.int64).reshape(-1, 3)
