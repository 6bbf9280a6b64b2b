"""
`.bpt` token container, little-endian:

    magic "BPT1" | u8 bits | u16 B | u16 O | u8 kind | u64 count | count x u32 ids

kind: 0 = bpt, 1 = vanilla, 2 = blocked.
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from tokenizer_bpt import (
    KIND_BLOCKED,
    KIND_BPT,
    KIND_VANILLA,
    BptConfig,
    ConfigError,
    MalformedSequence,
    TokenSequence,
    token_layout,
)

MAGIC = b'BPT1'
HEADER = struct.Struct('<4sBHHBQ')

KIND_CODES = {KIND_BPT: 0, KIND_VANILLA: 1, KIND_BLOCKED: 2}
CODE_KINDS = {code: kind for kind, code in KIND_CODES.items()}


class TokenFileError(ValueError):
    """Unreadable container header (bad magic, kind or config)."""


def pack_tokens(seq: TokenSequence) -> bytes:
    cfg = seq.config
    header = HEADER.pack(MAGIC, cfg.bits, cfg.blocks, cfg.offsets, KIND_CODES[seq.kind], len(seq.tokens))
    return header + seq.tokens.astype('<u4').tobytes()


def unpack_tokens(data: bytes) -> TokenSequence:
    """
    Parse a container. Bad magic / header -> TokenFileError;
    truncated payload or out-of-vocabulary ids -> MalformedSequence.
    """
    if data[:len(MAGIC)] != MAGIC:
        raise TokenFileError(f"not a .bpt file (magic {data[:len(MAGIC)]!r})")
    if len(data) < HEADER.size:
        raise MalformedSequence(f"truncated header: {len(data)} of {HEADER.size} bytes")

    _, bits, blocks, offsets, kind_code, count = HEADER.unpack_from(data)
    if kind_code not in CODE_KINDS:
        raise TokenFileError(f"unknown tokenizer kind code {kind_code}")
    try:
        cfg = BptConfig(blocks, offsets, bits)
    except ConfigError as e:
        raise TokenFileError(f"invalid config in header: {e}") from None

    payload = data[HEADER.size:]
    if len(payload) != 4 * count:
        raise MalformedSequence(
            f"payload has {len(payload)} bytes, header declares {count} tokens ({4 * count} bytes)"
        )
    tokens = np.frombuffer(payload, dtype='<u4').astype(np.int64)

    kind = CODE_KINDS[kind_code]
    total = token_layout(cfg, kind).total
    if len(tokens) and tokens.max() >= total:
        raise MalformedSequence(f"token id {int(tokens.max())} out of vocabulary (size {total})")
    return TokenSequence(tokens, cfg, kind)


def write_tokens(seq: TokenSequence, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(pack_tokens(seq))
    return path


def read_tokens(path: Union[str, Path]) -> TokenSequence:
    return unpack_tokens(Path(path).read_bytes())
