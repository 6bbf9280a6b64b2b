"""
Batch tokenization of mesh directories.

Each mesh is loaded, normalized, quantized and canonicalized, then measured
per tokenizer kind. The token-length filter keeps meshes whose BPT sequence
fits the context window (inclusive). Per-mesh failures are recorded, never
fatal. Records come out in path order regardless of worker completion order.
"""

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from config import AVD_WINDOWS, CONTEXT_WINDOW, FACE_BINS, REFERENCE_BPT_RATIO
from mesh_core import load_obj_file, prepare_mesh
from metrics import avd_report, compression_ratio, vertex_emission_stream
from token_io import write_tokens
from tokenizer_baselines import encode_sequence
from tokenizer_bpt import KIND_BPT, KINDS, BptConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class CorpusManifest:
    records: List[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write_jsonl(self, path: PathLike) -> Path:
        """One record per line, then a trailing {"summary": ...} object."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='\n') as f:
            for record in self.records:
                f.write(json.dumps(record) + '\n')
            f.write(json.dumps({'summary': self.summary}) + '\n')
        return path

    @classmethod
    def read_jsonl(cls, path: PathLike) -> 'CorpusManifest':
        records = []
        summary = {}
        with open(path) as f:
            for line in f:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if set(obj) == {'summary'}:
                    summary = obj['summary']
                else:
                    records.append(obj)
        return cls(records, summary)


def discover_meshes(directory: PathLike) -> List[Path]:
    """Sorted `*.obj` files under a directory (recursive)."""
    return sorted(Path(directory).rglob('*.obj'))


def within_window(length: int, max_len: int) -> bool:
    """A sequence exactly filling the window is kept."""
    return length <= max_len


def measure_mesh(path: PathLike, cfg: BptConfig, kinds: Sequence[str] = (KIND_BPT,),
                 max_len: Optional[int] = None, windows: Sequence[int] = ()) -> dict:
    """
    Measure one mesh file. Any failure ends up in `reject_reason`.
    Module-level so worker processes can pickle it.
    """
    record = {
        'path': str(path),
        'faces': None,
        'vertices': None,
        'token_len': {},
        'ratio': {},
        'avd': {},
        'kept': False,
        'reject_reason': None,
    }
    try:
        mesh, _ = prepare_mesh(load_obj_file(path), cfg.bits)
        record['faces'] = mesh.num_faces
        record['vertices'] = mesh.num_vertices

        for kind in kinds:
            seq = encode_sequence(mesh, cfg, kind)
            record['token_len'][kind] = len(seq)
            record['ratio'][kind] = compression_ratio(seq, mesh).ratio
            if windows:
                report = avd_report(vertex_emission_stream(seq), windows)
                record['avd'][kind] = {str(t): v for t, v in report.items()}

        if max_len is None:
            record['kept'] = True
        else:
            bpt_len = record['token_len'].get(KIND_BPT)
            if bpt_len is None:
                bpt_len = len(encode_sequence(mesh, cfg, KIND_BPT))
                record['token_len'][KIND_BPT] = bpt_len
            record['kept'] = within_window(bpt_len, max_len)
            if not record['kept']:
                record['reject_reason'] = f"sequence length {bpt_len} exceeds {max_len}"

    except Exception as e:
        record['kept'] = False
        record['reject_reason'] = f"{type(e).__name__}: {e}"
        logger.warning("Rejected %s: %s", path, record['reject_reason'])

    return record


def tokenize_mesh(path: PathLike, out_dir: PathLike, cfg: BptConfig, kinds: Sequence[str] = (KIND_BPT,),
                  root: Optional[PathLike] = None) -> dict:
    """
    Write `<name>.<kind>.bpt` under out_dir for each kind, mirroring the
    layout below root. Failures end up in `reject_reason`.
    """
    path = Path(path)
    name = path.relative_to(root) if root is not None else Path(path.name)
    record = {'path': str(path), 'faces': None, 'tokens': {}, 'outputs': {}, 'reject_reason': None}
    try:
        mesh, _ = prepare_mesh(load_obj_file(path), cfg.bits)
        record['faces'] = mesh.num_faces
        for kind in kinds:
            seq = encode_sequence(mesh, cfg, kind)
            out = write_tokens(seq, Path(out_dir) / name.parent / f"{name.stem}.{kind}.bpt")
            record['tokens'][kind] = len(seq)
            record['outputs'][kind] = str(out)
    except Exception as e:
        record['reject_reason'] = f"{type(e).__name__}: {e}"
        logger.warning("Could not tokenize %s: %s", path, record['reject_reason'])
    return record


def _map_records(paths: List[Path], worker, workers: Optional[int], desc: str = "Measuring meshes") -> List[dict]:
    """Order-preserving map, in-process for a single worker."""
    workers = workers or os.cpu_count() or 1
    progress = dict(total=len(paths), desc=desc, unit="mesh", disable=None)
    if workers <= 1 or len(paths) <= 1:
        return [worker(p) for p in tqdm(paths, **progress)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(tqdm(ex.map(worker, paths, chunksize=4), **progress))


def summarize(records: List[dict], kinds: Iterable[str] = (KIND_BPT,),
              windows: Sequence[int] = ()) -> dict:
    """Counts, face histogram with kept fraction per bin, ratio and AVD statistics."""
    total = len(records)
    kept = sum(1 for r in records if r['kept'])
    summary = {
        'total': total,
        'kept': kept,
        'kept_fraction': kept / total if total else 0.0,
        'failed': sum(1 for r in records if r['faces'] is None),
        'reference_bpt_ratio': REFERENCE_BPT_RATIO,
    }

    measured = [r for r in records if r['faces'] is not None]
    if not measured:
        return summary

    df = pd.DataFrame({
        'faces': [r['faces'] for r in measured],
        'kept': [r['kept'] for r in measured],
    })
    edges = list(FACE_BINS) + [np.inf]
    df['bin'] = pd.cut(df['faces'], bins=edges, right=False)
    histogram = []
    for interval, group in df.groupby('bin', observed=False):
        histogram.append({
            'min_faces': int(interval.left),
            'max_faces': None if np.isinf(interval.right) else int(interval.right),
            'count': int(len(group)),
            'kept_fraction': float(group['kept'].mean()) if len(group) else None,
        })
    summary['face_histogram'] = histogram

    ratios = {}
    for kind in kinds:
        values = pd.Series([r['ratio'][kind] for r in measured if kind in r['ratio']], dtype=float)
        if values.empty:
            continue
        ratios[kind] = {
            'mean': float(values.mean()),
            'p10': float(values.quantile(0.10)),
            'p50': float(values.quantile(0.50)),
            'p90': float(values.quantile(0.90)),
        }
    summary['ratio'] = ratios

    if windows:
        summary['avd'] = {
            kind: {
                str(t): float(np.mean([r['avd'][kind][str(t)] for r in measured if kind in r['avd']]))
                for t in windows
            }
            for kind in kinds
            if any(kind in r['avd'] for r in measured)
        }
    return summary


def filter_by_length(paths: Sequence[PathLike], cfg: BptConfig, max_len: int = CONTEXT_WINDOW,
                     workers: Optional[int] = None) -> CorpusManifest:
    """Keep meshes whose BPT sequence length (BOS/EOS included) is <= max_len."""
    paths = sorted(Path(p) for p in paths)
    if not paths:
        raise ValueError("no mesh paths given")
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")

    worker = partial(measure_mesh, cfg=cfg, kinds=(KIND_BPT,), max_len=max_len)
    records = _map_records(paths, worker, workers)
    summary = summarize(records, (KIND_BPT,))
    summary['max_len'] = max_len
    logger.info("Kept %d of %d meshes (max_len=%d)", summary['kept'], summary['total'], max_len)
    return CorpusManifest(records, summary)


def corpus_stats(paths: Sequence[PathLike], kinds: Sequence[str] = KINDS, cfg: Optional[BptConfig] = None,
                 windows: Sequence[int] = AVD_WINDOWS, max_len: Optional[int] = None,
                 workers: Optional[int] = None) -> CorpusManifest:
    """Per-mesh and aggregate token lengths, ratios and AVD for each kind."""
    paths = sorted(Path(p) for p in paths)
    if not paths:
        raise ValueError("no mesh paths given")
    cfg = cfg or BptConfig()

    worker = partial(measure_mesh, cfg=cfg, kinds=tuple(kinds), max_len=max_len, windows=tuple(windows))
    records = _map_records(paths, worker, workers)
    summary = summarize(records, kinds, windows)
    if max_len is not None:
        summary['max_len'] = max_len
    return CorpusManifest(records, summary)


def tokenize_corpus(paths: Sequence[PathLike], out_dir: PathLike, cfg: Optional[BptConfig] = None,
                    kinds: Sequence[str] = (KIND_BPT,), root: Optional[PathLike] = None,
                    workers: Optional[int] = None) -> List[dict]:
    """Encode every mesh to `.bpt` files; output bytes do not depend on `workers`."""
    paths = sorted(Path(p) for p in paths)
    if not paths:
        raise ValueError("no mesh paths given")
    cfg = cfg or BptConfig()

    worker = partial(tokenize_mesh, out_dir=Path(out_dir), cfg=cfg, kinds=tuple(kinds), root=root)
    records = _map_records(paths, worker, workers, desc="Tokenizing meshes")
    failed = sum(1 for r in records if r['reject_reason'])
    logger.info("Tokenized %d of %d meshes into %s", len(records) - failed, len(records), out_dir)
    return records
