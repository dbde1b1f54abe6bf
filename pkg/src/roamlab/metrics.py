"""OD matrices, n-gram frequency tables, and cross-run aggregation.

OD matrices are plain (S, S) integer arrays, origin on rows, destination on
columns. The discrepancy between two runs is the total absolute difference
between their OD matrices.
"""

from collections import Counter

import numpy as np


def build_od(paths, store_count: int) -> np.ndarray:
    """Count every consecutive store pair across the given paths."""
    od = np.zeros((store_count, store_count), dtype=np.int64)
    for path in paths:
        for a, b in zip(path[:-1], path[1:]):
            od[a, b] += 1
    return od


def discrepancy(a: np.ndarray, b: np.ndarray) -> float:
    """Total sum of absolute element-wise differences."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a.astype(float) - b.astype(float)).sum())


def ngram_table(paths, n: int = 3) -> Counter:
    """Frequency of every contiguous n-store window across the paths."""
    if n < 1:
        raise ValueError("n must be >= 1")
    table: Counter = Counter()
    for path in paths:
        for i in range(len(path) - n + 1):
            table[tuple(path[i : i + n])] += 1
    return table


def top_k(table, k: int):
    """k most frequent n-grams; ties broken by ascending tuple order."""
    return sorted(table.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def mean_ngram_table(tables) -> dict:
    """Element-wise mean frequency over per-run tables (missing entries = 0)."""
    tables = list(tables)
    total: Counter = Counter()
    for t in tables:
        total.update(t)
    r = len(tables)
    return {gram: count / r for gram, count in total.items()}


def aggregate_runs(od_runs: dict, truth_label: str = "truth") -> dict:
    """Average per-run OD matrices and summarize discrepancies against truth.

    od_runs maps a label to one OD matrix per replicate; every label must
    supply the same replicate count. Two averaging orders are reported for
    each non-truth label: mean of per-run discrepancies (with sample std),
    and the discrepancy of the element-wise mean matrices.
    """
    if truth_label not in od_runs:
        raise ValueError(f"od_runs must contain the {truth_label!r} label")
    counts = {label: len(runs) for label, runs in od_runs.items()}
    if len(set(counts.values())) != 1:
        raise ValueError(f"unequal replicate counts: {counts}")

    mean_od = {
        label: np.mean([np.asarray(od, dtype=float) for od in runs], axis=0)
        for label, runs in od_runs.items()
    }
    truth_runs = od_runs[truth_label]
    result = {"mean_od": mean_od, "labels": {}}
    for label, runs in od_runs.items():
        if label == truth_label:
            continue
        per_run = [discrepancy(od, t_od) for od, t_od in zip(runs, truth_runs)]
        result["labels"][label] = {
            "discrepancy_per_run": per_run,
            "discrepancy_mean": float(np.mean(per_run)),
            "discrepancy_std": float(np.std(per_run, ddof=1)) if len(per_run) > 1 else 0.0,
            "discrepancy_of_mean_od": discrepancy(mean_od[label], mean_od[truth_label]),
        }
    return result
