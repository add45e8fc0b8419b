"""Deterministic weighted scatter-sum shared by both view-transform streams.

Accumulation contract: contributions are processed strictly in entry
order (entries are pre-sorted by BEV cell) into float64 accumulators via
``np.add.at``, which applies unbuffered, sequential updates.  A plain
per-entry Python loop therefore reproduces the result bitwise, and
splitting the work across threads by cell ranges cannot change any
cell's value because per-cell entry runs are contiguous and disjoint.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def weighted_scatter(
    feats: np.ndarray,
    depth_w: np.ndarray,
    mask_w: np.ndarray,
    cells: np.ndarray,
    feat_idx: np.ndarray,
    depth_idx: np.ndarray,
    n_cells: int,
    threads: int = 1,
) -> np.ndarray:
    """Accumulate depth_w * mask_w * feature into BEV cells.

    feats:    (C, P) float32, all cameras' feature pixels flattened
    depth_w:  (Q,) float32 flattened depth volumes
    mask_w:   (P,) float32 flattened masks
    cells:    (N,) int64 target cell per entry, sorted ascending
    feat_idx: (N,) int64 index into the P axis
    depth_idx:(N,) int64 index into depth_w
    Returns (n_cells, C) float64 accumulators.
    """
    C = feats.shape[0]
    out = np.zeros((n_cells, C), dtype=np.float64)
    if cells.size == 0:
        return out
    feats_t = np.ascontiguousarray(feats.T)  # (P, C), row gathers are cheap
    if threads <= 1:
        _scatter_range(feats_t, depth_w, mask_w, cells, feat_idx, depth_idx, out)
        return out

    # split at cell boundaries so every worker owns whole cells
    edges = np.linspace(0, n_cells, threads + 1).astype(np.int64)
    splits = np.searchsorted(cells, edges)
    jobs = [
        (splits[i], splits[i + 1])
        for i in range(threads)
        if splits[i] < splits[i + 1]
    ]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(
                _scatter_range,
                feats_t, depth_w, mask_w,
                cells[a:b], feat_idx[a:b], depth_idx[a:b],
                out,
            )
            for a, b in jobs
        ]
        for f in futures:
            f.result()
    return out


def _scatter_range(feats_t, depth_w, mask_w, cells, feat_idx, depth_idx, out):
    w = depth_w[depth_idx].astype(np.float64) * mask_w[feat_idx].astype(np.float64)
    # float32 gather upcasts exactly; contrib matches the float64 reference bitwise
    contrib = w[:, None] * feats_t[feat_idx]
    np.add.at(out, cells, contrib)


def scatter_reference(feats, depth_w, mask_w, cells, feat_idx, depth_idx, n_cells):
    """Per-entry loop oracle with the same order and precision as weighted_scatter."""
    C = feats.shape[0]
    out = np.zeros((n_cells, C), dtype=np.float64)
    for c, fi, di in zip(cells, feat_idx, depth_idx):
        w = np.float64(depth_w[di]) * np.float64(mask_w[fi])
        out[c] += w * feats[:, fi].astype(np.float64)
    return out
