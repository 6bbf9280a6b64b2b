"""
Locality and data-utilization plots.
AVD@t curves per tokenizer, and faces vs BPT length against the context window.
"""

import logging
from pathlib import Path
from typing import Dict, Sequence

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

from config import CONTEXT_WINDOW, OUTPUT_DIR
from corpus import CorpusManifest
from metrics import avd
from tokenizer_bpt import KIND_BPT

logger = logging.getLogger(__name__)

COLORS = {
    'vanilla': '#1976D2',   # Blue
    'blocked': '#7B1FA2',   # Purple
    'bpt': '#E64A19',       # Orange
}


def avd_curves(streams: Dict[str, np.ndarray], windows: Sequence[int]) -> Dict[str, Dict[str, float]]:
    """{kind: {t: AVD@t}} from emission streams."""
    return {kind: {str(t): avd(stream, t) for t in windows} for kind, stream in streams.items()}


def plot_avd_curves(curves: Dict[str, Dict[str, float]],
                    output_path=OUTPUT_DIR / 'visualizations' / 'avd_curves.png') -> None:
    """AVD@t against t, one curve per tokenizer kind."""
    fig, ax = plt.subplots(figsize=(8, 6))
    for kind, values in curves.items():
        windows = sorted(int(t) for t in values)
        ax.plot(windows, [values[str(t)] for t in windows], marker='o',
                color=COLORS.get(kind, '#666666'), label=kind)

    ax.set_xscale('log', base=2)
    ax.set_xlabel('Context length t')
    ax.set_ylabel('AVD@t (grid units)')
    ax.set_title('Average Vertex Distance with Previous t Vertices', fontsize=14)
    ax.legend(loc='upper left', fontsize=10)

    ax.spines['top'].set_visible(False)
    ax.spines['right'].set_visible(False)

    Path(output_path).parent.mkdir(parents=True, exist_ok=True)
    plt.savefig(output_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info("Saved %s", output_path)


def plot_utilization(manifest: CorpusManifest,
                     output_path=OUTPUT_DIR / 'visualizations' / 'utilization.png') -> None:
    """Faces vs BPT sequence length, kept meshes highlighted, window as a line."""
    measured = [r for r in manifest.records if r['faces'] is not None and KIND_BPT in r['token_len']]
    faces = np.array([r['faces'] for r in measured])
    lengths = np.array([r['token_len'][KIND_BPT] for r in measured])
    kept = np.array([r['kept'] for r in measured], dtype=bool)
    window = manifest.summary.get('max_len', CONTEXT_WINDOW)

    fig, ax = plt.subplots(figsize=(10, 6))
    if len(measured):
        ax.scatter(faces[kept], lengths[kept], c='#00796B', s=16, alpha=0.7, label='kept')
        ax.scatter(faces[~kept], lengths[~kept], c='#C2185B', s=16, alpha=0.7, label='rejected')
    ax.axhline(window, color='black', linestyle='--', linewidth=1, label=f'window {window}')

    ax.set_xlabel('Faces')
    ax.set_ylabel('BPT sequence length')
    ax.set_title('Token-Length Filtering', fontsize=14)
    ax.legend(loc='upper left', fontsize=10)

    ax.spines['top'].set_visible(False)
    ax.spines['right'].set_visible(False)

    Path(output_path).parent.mkdir(parents=True, exist_ok=True)
    plt.savefig(output_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info("Saved %s", output_path)
