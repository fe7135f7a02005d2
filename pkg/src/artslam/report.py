"""Byte-stable CSV and JSON writers.

Floats are written with ``repr`` (shortest round-tripping form) and JSON keys
are sorted, so reruns with the same inputs produce identical files.
"""

import json
import os

import numpy as np

from .errors import MalformedRow
from .geometry import MODELS
from .simulator import pose_csv


def dumps(obj):
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_json(path, obj):
    write_text(path, dumps(obj))


def mu_trace_csv(rows):
    head = "step,landmark_id," + ",".join(f"mu_{m.value}" for m in MODELS)
    lines = [head]
    lines.extend(f"{k},{lid}," + ",".join(repr(float(m)) for m in mu) for k, lid, mu in rows)
    return "\n".join(lines) + "\n"


def write_slam_artifacts(out_dir, run, summary):
    """``poses.csv``, ``mu_trace.csv`` and ``metrics.json`` for one SLAM run."""
    os.makedirs(out_dir, exist_ok=True)
    write_text(os.path.join(out_dir, "poses.csv"), pose_csv(run.poses))
    write_text(os.path.join(out_dir, "mu_trace.csv"), mu_trace_csv(run.mu_trace))
    write_json(os.path.join(out_dir, "metrics.json"), summary)


def read_pose_csv(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "step,x,y,theta":
            raise MalformedRow(1, f"expected header step,x,y,theta, got {header!r}")
        for i, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != 4:
                raise MalformedRow(i, f"expected 4 fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts[1:]])
            except ValueError as exc:
                raise MalformedRow(i, str(exc)) from exc
    return np.array(rows).reshape(-1, 3)
