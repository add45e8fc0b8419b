"""Summary statistics and directory diff reports for transform outputs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensors import tensor_read


def cell_energy(f: np.ndarray) -> np.ndarray:
    """(ny, nx) per-cell L2 norm over channels."""
    return np.sqrt(np.sum(f.astype(np.float64) ** 2, axis=0))


def occupancy_stats(f: np.ndarray, gt_bev: np.ndarray) -> dict:
    """Mean cell energy over GT-occupied vs empty cells and their separation."""
    energy = cell_energy(f)
    occ = gt_bev[0] > 0.5
    occupied = float(energy[occ].mean()) if occ.any() else 0.0
    empty = float(energy[~occ].mean()) if (~occ).any() else 0.0
    return {
        "occupied_mean_energy": occupied,
        "empty_mean_energy": empty,
        "separation": occupied - empty,
        "n_occupied": int(occ.sum()),
    }


def summarize_outputs(arrays: dict, gt_bev=None) -> dict:
    summary = {
        name: {
            "shape": list(a.shape),
            "l2": float(np.linalg.norm(a.astype(np.float64))),
            "max_abs": float(np.abs(a).max()) if a.size else 0.0,
        }
        for name, a in arrays.items()
    }
    if gt_bev is not None and "F" in arrays:
        summary["occupancy"] = occupancy_stats(arrays["F"], gt_bev)
    return summary


def diff_directories(dir_a, dir_b) -> dict:
    """Compare every BTSR file the two directories share."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    names = sorted(
        {p.name for p in dir_a.glob("*.btsr")} & {p.name for p in dir_b.glob("*.btsr")}
    )
    report = {"files": {}, "max_abs_diff": 0.0}
    for name in names:
        a = tensor_read(dir_a / name).astype(np.float64)
        b = tensor_read(dir_b / name).astype(np.float64)
        if a.shape != b.shape:
            report["files"][name] = {"error": f"shape {a.shape} vs {b.shape}"}
            report["max_abs_diff"] = float("inf")
            continue
        max_abs = float(np.abs(a - b).max()) if a.size else 0.0
        denom = np.linalg.norm(a)
        rel_l2 = float(np.linalg.norm(a - b) / denom) if denom > 0 else 0.0
        report["files"][name] = {
            "max_abs_diff": max_abs,
            "rel_l2": rel_l2,
            "bitwise_equal": bool(np.array_equal(a, b)),
        }
        report["max_abs_diff"] = max(report["max_abs_diff"], max_abs)
    for d, key in ((dir_a, "a"), (dir_b, "b")):
        summary = d / "summary.json"
        if summary.exists():
            report[f"summary_{key}"] = json.loads(summary.read_text())
    return report
