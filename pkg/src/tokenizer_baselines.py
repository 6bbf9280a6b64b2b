"""
Reference tokenizers that isolate the two BPT compression stages.

vanilla: 9 coordinate tokens per face, the ratio-1.00 baseline.
blocked: the same face stream with (block, offset) vertices and adjacent
         block merging, no patches.

Also hosts the kind dispatch used by the CLI, corpus and metrics.
"""

import logging
from typing import Optional

import numpy as np

from config import DEFAULT_BLOCKS
from mesh_core import QuantizedMesh, canonicalize
import tokenizer_bpt
from tokenizer_bpt import (
    KIND_BLOCKED,
    KIND_BPT,
    KIND_VANILLA,
    KINDS,
    BptConfig,
    ConfigError,
    MalformedSequence,
    TokenSequence,
    block_index,
    check_config,
    inverse_block_index,
    split_content,
    token_layout,
)

logger = logging.getLogger(__name__)


def default_config(bits: int) -> BptConfig:
    """(B, O) for a bit depth: 8 blocks where the grid allows it."""
    return BptConfig.from_blocks(min(DEFAULT_BLOCKS, 1 << bits), bits)


def _faces_from_stream(points: np.ndarray, bits: int) -> QuantizedMesh:
    """Flattened face-order vertex coordinates -> canonical mesh."""
    if len(points) == 0 or len(points) % 3:
        raise MalformedSequence(f"{len(points)} vertices do not form whole triangles")
    vertices, inverse = np.unique(points, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3)
    if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])):
        raise MalformedSequence("sequence encodes a degenerate face")
    mesh, _ = canonicalize(vertices, faces, bits)
    return mesh


# =============================================================================
# VANILLA
# =============================================================================

def encode_vanilla(mesh: QuantizedMesh, cfg: Optional[BptConfig] = None) -> TokenSequence:
    """x, y, z per vertex in face order; coordinate value is the token id."""
    cfg = cfg or default_config(mesh.bits)
    check_config(mesh, cfg)
    layout = token_layout(cfg, KIND_VANILLA)
    body = mesh.face_coordinates().reshape(-1)
    tokens = np.concatenate([[layout.bos], body, [layout.eos]]).astype(np.int64)
    return TokenSequence(tokens, cfg, KIND_VANILLA)


def vanilla_stream(seq: TokenSequence) -> np.ndarray:
    if seq.kind != KIND_VANILLA:
        raise MalformedSequence(f"expected a vanilla sequence, got {seq.kind}")
    content = split_content(seq.tokens, token_layout(seq.config, KIND_VANILLA))
    if len(content) == 0 or len(content) % 9:
        raise MalformedSequence(f"vanilla content length {len(content)} is not a multiple of 9")
    return np.array(content, dtype=np.int64).reshape(-1, 3)


def decode_vanilla(seq: TokenSequence) -> QuantizedMesh:
    return _faces_from_stream(vanilla_stream(seq), seq.config.bits)


# =============================================================================
# BLOCKED
# =============================================================================

def encode_blocked(mesh: QuantizedMesh, cfg: BptConfig) -> TokenSequence:
    """Face stream of (block, offset) vertices; a block id only when it changes."""
    check_config(mesh, cfg)
    layout = token_layout(cfg, KIND_BLOCKED)
    blocks, offsets = block_index(mesh.vertices, cfg)
    blocks = blocks.tolist()
    offsets = offsets.tolist()
    common_base = layout.common[0]

    tokens = [layout.bos]
    state = None
    for v in mesh.faces.ravel().tolist():
        if blocks[v] != state:
            state = blocks[v]
            tokens.append(common_base + state)
        tokens.append(offsets[v])
    tokens.append(layout.eos)
    return TokenSequence(np.array(tokens, dtype=np.int64), cfg, KIND_BLOCKED)


def blocked_stream(seq: TokenSequence) -> np.ndarray:
    if seq.kind != KIND_BLOCKED:
        raise MalformedSequence(f"expected a blocked sequence, got {seq.kind}")
    layout = token_layout(seq.config, KIND_BLOCKED)
    content = split_content(seq.tokens, layout)

    blocks = []
    offsets = []
    state = None
    dangling = False
    for t in content:
        if layout.common[0] <= t < layout.common[1]:
            state = t - layout.common[0]
            dangling = True
        elif layout.center[0] <= t < layout.center[1]:
            raise MalformedSequence("center-block ids are not used by the blocked tokenizer")
        else:
            if state is None:
                raise MalformedSequence("offset before any block context")
            blocks.append(state)
            offsets.append(t)
            dangling = False
    if dangling:
        raise MalformedSequence("block id without a following offset")

    if not offsets:
        return np.zeros((0, 3), dtype=np.int64)
    return inverse_block_index(np.array(blocks), np.array(offsets), seq.config)


def decode_blocked(seq: TokenSequence) -> QuantizedMesh:
    return _faces_from_stream(blocked_stream(seq), seq.config.bits)


# =============================================================================
# DISPATCH
# =============================================================================

def encode_sequence(mesh: QuantizedMesh, cfg: BptConfig, kind: str = KIND_BPT) -> TokenSequence:
    if kind == KIND_BPT:
        return tokenizer_bpt.encode(mesh, cfg)
    if kind == KIND_VANILLA:
        return encode_vanilla(mesh, cfg)
    if kind == KIND_BLOCKED:
        return encode_blocked(mesh, cfg)
    raise ConfigError(f"unknown tokenizer kind: {kind} (expected one of {KINDS})")


def decode_sequence(seq: TokenSequence) -> QuantizedMesh:
    if seq.kind == KIND_BPT:
        return tokenizer_bpt.decode(seq)
    if seq.kind == KIND_VANILLA:
        return decode_vanilla(seq)
    if seq.kind == KIND_BLOCKED:
        return decode_blocked(seq)
    raise ConfigError(f"unknown tokenizer kind: {seq.kind}")


def emission_stream(seq: TokenSequence) -> np.ndarray:
    """Vertices in the order the tokenizer emits them, repeats included."""
    if seq.kind == KIND_BPT:
        return tokenizer_bpt.emission_stream(seq)
    if seq.kind == KIND_VANILLA:
        return vanilla_stream(seq)
    if seq.kind == KIND_BLOCKED:
        return blocked_stream(seq)
    raise ConfigError(f"unknown tokenizer kind: {seq.kind}")
