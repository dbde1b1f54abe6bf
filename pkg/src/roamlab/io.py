"""CSV/JSON serialization of runs, observation products, and aggregates.

All CSV files are UTF-8 with a header row; integers in plain decimal,
averaged values with six decimal places. Zero counts are written explicitly
so files round-trip without shape metadata.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .twin import ObservationRecord, SequencePool


def _open_w(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


def write_obs_counts(path, observations):
    with _open_w(path) as f:
        w = csv.writer(f)
        w.writerow(["step", "store", "count"])
        for obs in observations:
            for store, count in enumerate(obs.inflow):
                w.writerow([obs.step, store, int(count)])


def write_obs_counts_attr(path, observations):
    with _open_w(path) as f:
        w = csv.writer(f)
        w.writerow(["step", "attr", "store", "count"])
        for obs in observations:
            for attr in range(obs.inflow_by_attr.shape[0]):
                for store, count in enumerate(obs.inflow_by_attr[attr]):
                    w.writerow([obs.step, attr, store, int(count)])


def read_observations(counts_path, attr_path):
    """Rebuild the observation trajectory from the two count files."""
    totals = {}
    with open(counts_path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            totals[(int(row["step"]), int(row["store"]))] = int(row["count"])
    by_attr = {}
    with open(attr_path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            key = (int(row["step"]), int(row["attr"]), int(row["store"]))
            by_attr[key] = int(row["count"])
    steps = max(k[0] for k in totals) + 1
    stores = max(k[1] for k in totals) + 1
    attrs = max(k[1] for k in by_attr) + 1
    observations = []
    for t in range(steps):
        inflow = np.array([totals.get((t, s), 0) for s in range(stores)], dtype=np.int64)
        attr = np.array(
            [[by_attr.get((t, g, s), 0) for s in range(stores)] for g in range(attrs)],
            dtype=np.int64,
        )
        observations.append(ObservationRecord(step=t, inflow=inflow, inflow_by_attr=attr))
    return observations


def write_sequence_pool(path, pool: SequencePool):
    length = pool.paths.shape[1]
    with _open_w(path) as f:
        w = csv.writer(f)
        w.writerow(["entry_id", "attr"] + [f"s{i}" for i in range(length)])
        for i in range(pool.size):
            w.writerow([i, int(pool.attrs[i])] + [int(s) for s in pool.paths[i]])


def read_sequence_pool(path) -> SequencePool:
    paths, attrs = [], []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        stores = len(header) - 2
        for row in reader:
            attrs.append(int(row[1]))
            paths.append([int(x) for x in row[2 : 2 + stores]])
    return SequencePool(paths=np.array(paths, dtype=np.int64), attrs=np.array(attrs, dtype=np.int64))


def write_od(path, od: np.ndarray):
    with _open_w(path) as f:
        w = csv.writer(f)
        w.writerow(["origin", "dest", "count"])
        for o in range(od.shape[0]):
            for d in range(od.shape[1]):
                w.writerow([o, d, int(od[o, d])])


def read_od(path) -> np.ndarray:
    cells = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            cells[(int(row["origin"]), int(row["dest"]))] = int(row["count"])
    size = max(max(o, d) for o, d in cells) + 1
    od = np.zeros((size, size), dtype=np.int64)
    for (o, d), c in cells.items():
        od[o, d] = c
    return od


def write_mean_od(path, od: np.ndarray):
    with _open_w(path) as f:
        w = csv.writer(f)
        w.writerow(["origin", "dest", "mean_count"])
        for o in range(od.shape[0]):
            for d in range(od.shape[1]):
                w.writerow([o, d, f"{od[o, d]:.6f}"])


def write_paths(path, agent_paths):
    """agent_paths: (agent_id, group, path) triples, one row per visited store."""
    with _open_w(path) as f:
        w = csv.writer(f)
        w.writerow(["agent_id", "group", "position", "store"])
        for agent_id, group, stores in agent_paths:
            for pos, store in enumerate(stores):
                w.writerow([agent_id, group, pos, store])


def read_paths(path):
    """Return (agent_id, group, path) triples in agent order."""
    rows = {}
    groups = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        i_aid, i_group, i_pos, i_store = (
            header.index(c) for c in ("agent_id", "group", "position", "store")
        )
        for row in reader:
            aid = int(row[i_aid])
            groups[aid] = int(row[i_group])
            rows.setdefault(aid, []).append((int(row[i_pos]), int(row[i_store])))
    out = []
    for aid in sorted(rows):
        stores = [s for _, s in sorted(rows[aid])]
        out.append((aid, groups[aid], tuple(stores)))
    return out


def write_assignments(path, assignments):
    with _open_w(path) as f:
        w = csv.writer(f)
        w.writerow(["step", "agent_id", "entry_id", "attr"])
        for step, agent_id, entry_id, attr in assignments:
            w.writerow([step, agent_id, entry_id, attr])


def read_assignments(path):
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(
                (int(row["step"]), int(row["agent_id"]), int(row["entry_id"]), int(row["attr"]))
            )
    return out


def write_ngram_top(path, rows, n: int):
    """rows: (rank, gram, freq_truth, freq_assim, freq_baseline)."""
    with _open_w(path) as f:
        w = csv.writer(f)
        w.writerow(
            ["rank"] + [f"s{i}" for i in range(n)] + ["freq_truth", "freq_assim", "freq_baseline"]
        )
        for rank, gram, ft, fa, fb in rows:
            w.writerow([rank] + list(gram) + [f"{ft:.6f}", f"{fa:.6f}", f"{fb:.6f}"])


def write_json(path, payload):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)
