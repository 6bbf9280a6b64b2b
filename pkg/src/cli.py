#!/usr/bin/env python3
"""
Command-line entry point for the BPT toolkit.

Usage:
    # Tokenize a mesh into a .bpt container
    python src/cli.py encode cube.obj --out cube.bpt --kind bpt

    # Every mesh under a directory, all kinds, 4 worker processes
    python src/cli.py encode meshes/ --out tokens/ --kind all --workers 4

    # Decode back to OBJ
    python src/cli.py decode cube.bpt --out cube_decoded.obj

    # Check losslessness for every tokenizer kind
    python src/cli.py roundtrip sphere.obj --kind all

    # Ratio / AVD table over meshes or directories
    python src/cli.py stats meshes/ --json

    # Token-length filtering against the context window
    python src/cli.py filter meshes/ --max-len 9600 --manifest manifest.jsonl

    # Chamfer / Hausdorff between two meshes
    python src/cli.py metrics a.obj b.obj --points 1024 --seed 0

stdout carries JSON only; logs go to stderr.
Exit codes: 0 success, 1 usage/parse/config error, 2 round-trip mismatch or
malformed token stream.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from config import (
    AVD_WINDOWS,
    CONTEXT_WINDOW,
    DEFAULT_BITS,
    DEFAULT_BLOCKS,
    DEFAULT_POINTS,
    DEFAULT_SEED,
    OUTPUT_DIR,
    PLOT_WINDOWS,
    setup_logging,
)
from corpus import corpus_stats, discover_meshes, filter_by_length, tokenize_corpus
from fixtures import fixture_corpus, random_manifold
from mesh_core import MeshError, dequantize, load_obj_file, normalize, prepare_mesh, save_obj
from metrics import compression_ratio, fidelity
from token_io import TokenFileError, read_tokens, write_tokens
from tokenizer_baselines import decode_sequence, encode_sequence
from tokenizer_bpt import KINDS, BptConfig, ConfigError, MalformedSequence

logger = logging.getLogger('bpt')

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISMATCH = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; usage errors here are exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def emit(obj) -> None:
    print(json.dumps(obj))


def _config(args) -> BptConfig:
    return BptConfig.from_blocks(args.blocks, args.bits)


def _mesh_paths(inputs: List[str]) -> List[Path]:
    paths = []
    for item in inputs:
        p = Path(item)
        paths.extend(discover_meshes(p) if p.is_dir() else [p])
    return paths


def _kinds(kind: str) -> tuple:
    return KINDS if kind == 'all' else (kind,)


# =============================================================================
# COMMANDS
# =============================================================================

def _encode_directory(args, cfg: BptConfig) -> int:
    root = Path(args.input)
    out = Path(args.out) if args.out else OUTPUT_DIR / 'tokens'
    records = tokenize_corpus(discover_meshes(root), out, cfg, kinds=_kinds(args.kind),
                              root=root, workers=args.workers)
    emit({
        'input': str(root),
        'out': str(out),
        'kinds': list(_kinds(args.kind)),
        'config': cfg.to_dict(),
        'meshes': len(records),
        'failed': [r['path'] for r in records if r['reject_reason']],
    })
    return EXIT_OK


def cmd_encode(args) -> int:
    cfg = _config(args)
    if Path(args.input).is_dir():
        return _encode_directory(args, cfg)
    if args.kind == 'all':
        raise ValueError("--kind all needs a directory input")

    mesh, report = prepare_mesh(load_obj_file(args.input), cfg.bits)
    seq = encode_sequence(mesh, cfg, args.kind)
    out = Path(args.out) if args.out else Path(args.input).with_suffix('.bpt')
    write_tokens(seq, out)
    logger.info("Wrote %d tokens to %s", len(seq), out)

    emit({
        'input': str(args.input),
        'out': str(out),
        'kind': args.kind,
        'config': cfg.to_dict(),
        'tokens': len(seq),
        'content_tokens': len(seq.content),
        'faces': mesh.num_faces,
        'ratio': compression_ratio(seq, mesh).ratio,
        'canonicalization': report.to_dict(),
    })
    return EXIT_OK


def cmd_decode(args) -> int:
    seq = read_tokens(args.input)
    mesh = decode_sequence(seq)
    out = Path(args.out) if args.out else Path(args.input).with_suffix('.obj')
    save_obj(dequantize(mesh), out)
    logger.info("Wrote %d faces to %s", mesh.num_faces, out)

    emit({
        'input': str(args.input),
        'out': str(out),
        'kind': seq.kind,
        'config': seq.config.to_dict(),
        'faces': mesh.num_faces,
        'vertices': mesh.num_vertices,
    })
    return EXIT_OK


def _face_set(mesh) -> set:
    return {tuple(map(tuple, face)) for face in mesh.face_coordinates().tolist()}


def cmd_roundtrip(args) -> int:
    cfg = _config(args)
    mesh, _ = prepare_mesh(load_obj_file(args.input), cfg.bits)
    status = EXIT_OK

    for kind in _kinds(args.kind):
        seq = encode_sequence(mesh, cfg, kind)
        decoded = decode_sequence(seq)
        ok = decoded == mesh
        result = {'input': str(args.input), 'kind': kind, 'ok': ok, 'tokens': len(seq)}
        if not ok:
            status = EXIT_MISMATCH
            original, restored = _face_set(mesh), _face_set(decoded)
            result.update({
                'vertices': [mesh.num_vertices, decoded.num_vertices],
                'faces': [mesh.num_faces, decoded.num_faces],
                'missing_faces': len(original - restored),
                'extra_faces': len(restored - original),
            })
            logger.error("Round trip mismatch for %s (%s)", args.input, kind)
        emit(result)

    return status


def cmd_stats(args) -> int:
    paths = _mesh_paths(args.inputs)
    manifest = corpus_stats(
        paths,
        kinds=_kinds(args.kind),
        cfg=_config(args),
        windows=AVD_WINDOWS,
        workers=args.workers,
    )

    if args.json:
        for record in manifest.records:
            emit(record)
        emit({'summary': manifest.summary})
        return EXIT_OK

    rows = []
    for r in manifest.records:
        for kind, length in r['token_len'].items():
            row = {'path': Path(r['path']).name, 'kind': kind, 'tokens': length,
                   'ratio': round(r['ratio'][kind], 4)}
            for t, v in r['avd'].get(kind, {}).items():
                row[f'avd@{t}'] = round(v, 3)
            rows.append(row)
    if rows:
        print(pd.DataFrame(rows).to_string(index=False), file=sys.stderr)
    emit(manifest.summary)
    return EXIT_OK


def cmd_filter(args) -> int:
    paths = _mesh_paths([args.directory])
    manifest = filter_by_length(paths, _config(args), max_len=args.max_len, workers=args.workers)
    if args.manifest:
        manifest.write_jsonl(args.manifest)
        logger.info("Wrote manifest to %s", args.manifest)
    emit(manifest.summary)
    return EXIT_OK


def cmd_metrics(args) -> int:
    a = load_obj_file(args.a)
    b = load_obj_file(args.b)
    if args.normalize:
        a, b = normalize(a), normalize(b)
    reduction = 'sum' if args.sum else 'mean'
    emit(fidelity(a, b, n=args.points, seed=args.seed, reduction=reduction))
    return EXIT_OK


def cmd_fixtures(args) -> int:
    out = Path(args.out)
    written = [str(save_obj(mesh, out / f"{name}.obj")) for name, mesh in fixture_corpus().items()]

    rng = np.random.default_rng(args.seed)
    for i in range(args.fuzz):
        written.append(str(save_obj(random_manifold(rng), out / f"fuzz_{i:03d}.obj")))

    logger.info("Wrote %d meshes to %s", len(written), out)
    emit({'out': str(out), 'meshes': len(written)})
    return EXIT_OK


def cmd_plot(args) -> int:
    from visualize import plot_avd_curves, plot_utilization

    paths = _mesh_paths(args.inputs)
    manifest = corpus_stats(
        paths,
        kinds=KINDS,
        cfg=_config(args),
        windows=PLOT_WINDOWS,
        max_len=args.max_len,
        workers=args.workers,
    )
    out = Path(args.out)
    plot_avd_curves(manifest.summary.get('avd', {}), out / 'avd_curves.png')
    plot_utilization(manifest, out / 'utilization.png')
    emit({'out': str(out), 'meshes': len(paths)})
    return EXIT_OK


# =============================================================================
# PARSER
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(description="Blocked and Patchified Tokenization of triangle meshes")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="More logging")
    parser.add_argument("--quiet", "-q", action="store_true", help="Warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    def grid_flags(p):
        p.add_argument("--bits", type=int, default=DEFAULT_BITS, help="Quantization bits")
        p.add_argument("--blocks", type=int, default=DEFAULT_BLOCKS,
                       help="Blocks per axis; offsets are 2^bits / blocks")

    p = sub.add_parser("encode", help="Tokenize an OBJ mesh, or every mesh in a directory, into .bpt files")
    p.add_argument("input", help="OBJ file or directory")
    p.add_argument("--out", "-o", help="Output file, or output directory for a directory input")
    p.add_argument("--kind", choices=KINDS + ("all",), default="bpt")
    p.add_argument("--workers", type=int, default=None)
    grid_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="Decode a .bpt file into OBJ")
    p.add_argument("input")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("roundtrip", help="Check decode(encode(M)) == M")
    p.add_argument("input")
    p.add_argument("--kind", choices=KINDS + ("all",), default="bpt")
    grid_flags(p)
    p.set_defaults(func=cmd_roundtrip)

    for name in ("stats", "compare"):
        p = sub.add_parser(name, help="Token length, ratio and AVD per mesh and kind")
        p.add_argument("inputs", nargs="+", help="OBJ files or directories")
        p.add_argument("--kind", choices=KINDS + ("all",), default="all")
        p.add_argument("--json", action="store_true", help="JSONL records plus summary")
        p.add_argument("--workers", type=int, default=None)
        grid_flags(p)
        p.set_defaults(func=cmd_stats)

    p = sub.add_parser("filter", help="Token-length filter against the context window")
    p.add_argument("directory")
    p.add_argument("--max-len", type=int, default=CONTEXT_WINDOW)
    p.add_argument("--manifest", "-m", help="JSONL manifest output path")
    p.add_argument("--workers", type=int, default=None)
    grid_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("metrics", help="Chamfer and Hausdorff distance between two meshes")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--points", type=int, default=DEFAULT_POINTS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--sum", action="store_true", help="Raw-sum Chamfer instead of mean")
    p.add_argument("--normalize", action="store_true", help="Normalize both meshes first")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("fixtures", help="Write the synthetic fixture corpus as OBJ")
    p.add_argument("--out", "-o", default=str(OUTPUT_DIR / "fixtures"))
    p.add_argument("--fuzz", type=int, default=0, help="Random manifold meshes to add")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("plot", help="AVD curves and length-filter plots")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", "-o", default=str(OUTPUT_DIR / "visualizations"))
    p.add_argument("--max-len", type=int, default=CONTEXT_WINDOW)
    p.add_argument("--workers", type=int, default=None)
    grid_flags(p)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    setup_logging(-1 if args.quiet else args.verbose)

    try:
        return args.func(args)
    except MalformedSequence as e:
        logger.error("Malformed token stream: %s", e)
        return EXIT_MISMATCH
    except (MeshError, ConfigError, TokenFileError, OSError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
