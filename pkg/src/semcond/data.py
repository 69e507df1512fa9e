"""File formats: delimited activation/label tables and JSON reports.

Activations arrive as CSV with header ``id,a1,...,ak`` and labels as
``id,y1,...,yk``; the two are joined on the id column, with the activation
file defining row order.  Scaling-fit input is ``technique,m,accuracy``.
All writers are deterministic: fixed key order, no timestamps.
"""

from __future__ import annotations

import csv
import json
import pathlib
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentLabelError, InputError
from .inference import Knowledge, knowledge_entails
from .scaling import AccuracyPoint


def _read_rows(path) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _check_header(header: list[str], prefix: str, path) -> int:
    if not header or header[0].strip() != "id":
        raise InputError(f"{path}: first column must be 'id'")
    k = len(header) - 1
    expected = [f"{prefix}{i}" for i in range(1, k + 1)]
    got = [h.strip() for h in header[1:]]
    if k < 1 or got != expected:
        raise InputError(
            f"{path}: expected header id,{prefix}1,...,{prefix}k, got {','.join(header)}"
        )
    return k


def read_activations_csv(path) -> tuple[list[str], np.ndarray]:
    """Parse an ``id,a1,...,ak`` table; returns ids and an (n, k) float matrix."""
    rows = _read_rows(path)
    if not rows:
        raise InputError(f"{path}: empty file")
    k = _check_header(rows[0], "a", path)
    ids, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != k + 1:
            raise InputError(f"{path}:{lineno}: expected {k + 1} columns, got {len(row)}")
        ids.append(row[0].strip())
        try:
            values.append([float(x) for x in row[1:]])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate ids")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size and not np.isfinite(arr).all():
        raise InputError(f"{path}: activations must be finite")
    return ids, arr


def read_labels_csv(path) -> tuple[list[str], np.ndarray]:
    """Parse an ``id,y1,...,yk`` table of 0/1 labels."""
    rows = _read_rows(path)
    if not rows:
        raise InputError(f"{path}: empty file")
    k = _check_header(rows[0], "y", path)
    ids, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != k + 1:
            raise InputError(f"{path}:{lineno}: expected {k + 1} columns, got {len(row)}")
        ids.append(row[0].strip())
        bits = []
        for x in row[1:]:
            x = x.strip()
            if x not in ("0", "1"):
                raise InputError(f"{path}:{lineno}: labels must be 0 or 1, got {x!r}")
            bits.append(int(x))
        values.append(bits)
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate ids")
    return ids, np.asarray(values, dtype=np.uint8)


@dataclass(frozen=True)
class Dataset:
    """Joined activation/label rows in activation-file order."""

    ids: tuple[str, ...]
    activations: np.ndarray
    labels: np.ndarray | None = None


def join_dataset(
    act_ids: list[str],
    activations: np.ndarray,
    label_ids: list[str] | None = None,
    labels: np.ndarray | None = None,
) -> Dataset:
    """Align labels to the activation rows by id; every id must resolve."""
    if label_ids is None or labels is None:
        return Dataset(tuple(act_ids), activations, None)
    if activations.shape[1] != labels.shape[1]:
        raise InputError(
            f"activations have {activations.shape[1]} columns but labels have "
            f"{labels.shape[1]}"
        )
    lookup = {i: n for n, i in enumerate(label_ids)}
    missing = [i for i in act_ids if i not in lookup]
    if missing:
        raise InputError(f"labels missing for ids: {missing[:10]}")
    aligned = labels[[lookup[i] for i in act_ids]]
    return Dataset(tuple(act_ids), activations, aligned)


def validate_labels(kn: Knowledge, dataset: Dataset) -> None:
    """Every label row must satisfy the constraint; offenders are listed."""
    if dataset.labels is None:
        return
    bad = [
        i + 1
        for i, row in enumerate(dataset.labels)
        if not knowledge_entails(kn, row)
    ]
    if bad:
        raise InconsistentLabelError(
            f"label rows violating the constraint (1-based): {bad[:20]}"
        )


def read_points_csv(path, percent: bool = False) -> dict[str, list[AccuracyPoint]]:
    """Parse ``technique,m,accuracy`` rows, optionally converting percent."""
    rows = _read_rows(path)
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header != ["technique", "m", "accuracy"]:
        raise InputError(f"{path}: expected header technique,m,accuracy")
    out: dict[str, list[AccuracyPoint]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 columns")
        name = row[0].strip()
        try:
            m = float(row[1])
            acc = float(row[2])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if percent:
            acc /= 100.0
        out.setdefault(name, []).append(AccuracyPoint(m, acc))
    return out


def write_json(path, payload) -> None:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    text = json.dumps(payload, sort_keys=True, indent=2)
    pathlib.Path(path).write_text(text + "\n", encoding="utf-8")


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
