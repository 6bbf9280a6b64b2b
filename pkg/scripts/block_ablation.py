#!/usr/bin/env python3
"""
Compression across the three (B, O) block layouts at 7 bits:
(4, 32), (8, 16), (16, 8).

Tokenizes the fixture corpus with every layout and kind, checks each round
trip, and reports vocabulary size, mean ratio and patch statistics.
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / 'src'))

from config import ABLATION_BLOCKS, DEFAULT_BITS, OUTPUT_DIR, REFERENCE_BPT_RATIO  # noqa: E402
from fixtures import fixture_corpus  # noqa: E402
from mesh_core import prepare_mesh  # noqa: E402
from metrics import compression_ratio  # noqa: E402
from tokenizer_baselines import decode_sequence, encode_sequence  # noqa: E402
from tokenizer_bpt import KINDS, BptConfig, aggregate_patches, patch_statistics, token_layout  # noqa: E402

OUTPUT_FILE = OUTPUT_DIR / 'block_ablation.json'


def run_ablation():
    meshes = {name: prepare_mesh(raw, DEFAULT_BITS)[0] for name, raw in fixture_corpus().items()}
    print(f"Loaded {len(meshes)} fixture meshes")

    results = []
    for blocks in ABLATION_BLOCKS:
        cfg = BptConfig.from_blocks(blocks, DEFAULT_BITS)
        row = {
            'blocks': cfg.blocks,
            'offsets': cfg.offsets,
            'vocab': token_layout(cfg).total,
            'ratio': {},
            'lossless': True,
        }
        for kind in KINDS:
            ratios = []
            for mesh in meshes.values():
                seq = encode_sequence(mesh, cfg, kind)
                if decode_sequence(seq) != mesh:
                    row['lossless'] = False
                ratios.append(compression_ratio(seq, mesh).ratio)
            row['ratio'][kind] = float(np.mean(ratios))
        results.append(row)

    patch_stats = {name: patch_statistics(aggregate_patches(mesh)) for name, mesh in meshes.items()}

    print("\n" + "=" * 60)
    print("BLOCK LAYOUT ABLATION (mean compression ratio)")
    print("=" * 60)
    print(f"{'(B, O)':>10} {'vocab':>7} {'vanilla':>8} {'blocked':>8} {'bpt':>8} {'lossless':>9}")
    for row in results:
        layout = f"({row['blocks']}, {row['offsets']})"
        print(f"{layout:>10} {row['vocab']:>7} {row['ratio']['vanilla']:>8.3f} "
              f"{row['ratio']['blocked']:>8.3f} {row['ratio']['bpt']:>8.3f} {str(row['lossless']):>9}")
    print(f"\nReference BPT ratio: {REFERENCE_BPT_RATIO}")

    print("\n--- PATCHES ---")
    for name, stats in patch_stats.items():
        print(f"  {name:20} {stats['patches']:5} patches, "
              f"{stats['mean_faces']:.2f} faces/patch, {stats['closed']} closed")

    OUTPUT_FILE.parent.mkdir(parents=True, exist_ok=True)
    with open(OUTPUT_FILE, 'w') as f:
        json.dump({'layouts': results, 'patches': patch_stats}, f, indent=2)
    print(f"\nResults saved to {OUTPUT_FILE}")


if __name__ == '__main__':
    run_ablation()
