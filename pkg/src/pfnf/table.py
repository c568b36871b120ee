"""Canonical feature-table formats.

CSV: required ``id`` column; optional ``y``, ``split`` (train/test) or
``fold`` (integer), ``group``; numeric covariates prefixed ``c_``; feature
columns prefixed ``f_``. Empty cells are missing values (imputed downstream,
never here). Covariate columns are appended after the feature columns in
the in-memory matrix, mirroring how they enter the predictors.

Binary sidecar (``.ftbin``) for wide tables: magic ``FTBN``, u32 header
length, UTF-8 JSON header (ids, targets, split/fold/group, column names,
provenance metadata), then the row-major little-endian float32 feature
block. Float32 payloads round-trip bit-exactly.

An optional ``<path>.manifest.json`` written by a featurizer is folded into
the table's provenance metadata (featurize_seconds etc.).
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FTBIN_MAGIC = b"FTBN"
SCHEMA_VERSION = 1


class TableError(ValueError):
    """Malformed feature table; messages carry row/column coordinates."""


@dataclass
class FeatureTable:
    ids: list[str]
    x: np.ndarray                      # (n, d) float64; NaN marks missing
    feature_names: list[str]
    y: np.ndarray | None = None        # NaN where absent
    split: list[str] | None = None     # "train" / "test"
    fold: np.ndarray | None = None
    group: list[str] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.ids)
        if len(set(self.ids)) != n:
            seen = set()
            for i in self.ids:
                if i in seen:
                    raise TableError(f"duplicate id '{i}'")
                seen.add(i)
        if self.x.shape != (n, len(self.feature_names)):
            raise TableError(
                f"feature matrix {self.x.shape} does not match "
                f"{n} rows x {len(self.feature_names)} declared columns")
        for name, col in (("y", self.y), ("fold", self.fold)):
            if col is not None and len(col) != n:
                raise TableError(f"{name} column length mismatch")
        for name, col in (("split", self.split), ("group", self.group)):
            if col is not None and len(col) != n:
                raise TableError(f"{name} column length mismatch")

    @property
    def n_rows(self) -> int:
        return len(self.ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def _parse_float(value: str, row: int, col: str) -> float:
    v = value.strip()
    if v == "" or v.lower() == "nan":
        return float("nan")
    try:
        return float(v)
    except ValueError:
        raise TableError(
            f"row {row}, column '{col}': non-numeric value {value!r}") from None


def _load_csv(path: Path) -> FeatureTable:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise TableError(f"{path}: empty file") from None
        if "id" not in header:
            raise TableError(f"{path}: missing required 'id' column")
        feat_cols = [h for h in header if h.startswith("f_")]
        cov_cols = [h for h in header if h.startswith("c_")]
        known = {"id", "y", "split", "fold", "group"}
        for h in header:
            if h not in known and not h.startswith(("f_", "c_")):
                raise TableError(f"{path}: unrecognized column '{h}'")
        if not feat_cols and not cov_cols:
            raise TableError(f"{path}: no feature (f_*) columns")
        pos = {h: i for i, h in enumerate(header)}

        ids, xs, ys, splits, folds, groups = [], [], [], [], [], []
        for lineno, rowvals in enumerate(reader, start=2):
            if not rowvals:
                continue
            if len(rowvals) != len(header):
                raise TableError(
                    f"row {lineno}: {len(rowvals)} fields, header has {len(header)}")
            ids.append(rowvals[pos["id"]])
            xs.append([_parse_float(rowvals[pos[c]], lineno, c)
                       for c in feat_cols + cov_cols])
            if "y" in pos:
                ys.append(_parse_float(rowvals[pos["y"]], lineno, "y"))
            if "split" in pos:
                s = rowvals[pos["split"]].strip()
                if s not in ("train", "test"):
                    raise TableError(
                        f"row {lineno}, column 'split': expected train/test, got {s!r}")
                splits.append(s)
            if "fold" in pos:
                raw = rowvals[pos["fold"]].strip()
                try:
                    folds.append(int(raw))
                except ValueError:
                    raise TableError(
                        f"row {lineno}, column 'fold': non-integer value {raw!r}") from None
            if "group" in pos:
                groups.append(rowvals[pos["group"]])
    if not ids:
        raise TableError(f"{path}: no data rows")
    return FeatureTable(
        ids=ids,
        x=np.array(xs, dtype=np.float64),
        feature_names=feat_cols + cov_cols,
        y=np.array(ys) if ys else None,
        split=splits or None,
        fold=np.array(folds, dtype=np.int64) if folds else None,
        group=groups or None,
        meta=_sidecar_meta(path),
    )


def _sidecar_meta(path: Path) -> dict:
    manifest = path.with_name(path.name + ".manifest.json")
    if manifest.exists():
        return json.loads(manifest.read_text())
    return {}


def _load_ftbin(path: Path) -> FeatureTable:
    raw = path.read_bytes()
    if raw[:4] != FTBIN_MAGIC:
        raise TableError(f"{path}: bad magic bytes")
    (hlen,) = struct.unpack_from("<I", raw, 4)
    header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    n, d = header["n_rows"], header["n_cols"]
    if len(header["columns"]) != d:
        raise TableError(f"{path}: declared n_cols {d} != header column list")
    block = raw[8 + hlen:]
    if len(block) != 4 * n * d:
        raise TableError(f"{path}: feature block has {len(block)} bytes, "
                         f"expected {4 * n * d}")
    x = np.frombuffer(block, dtype="<f4").reshape(n, d).astype(np.float64)
    meta = dict(header.get("meta", {}))
    meta.update(_sidecar_meta(path))
    return FeatureTable(
        ids=[str(i) for i in header["ids"]],
        x=x,
        feature_names=list(header["columns"]),
        y=None if header.get("y") is None else
            np.array([np.nan if v is None else float(v) for v in header["y"]]),
        split=header.get("split"),
        fold=None if header.get("fold") is None else
            np.array(header["fold"], dtype=np.int64),
        group=header.get("group"),
        meta=meta,
    )


def load_feature_table(path) -> FeatureTable:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix == ".ftbin":
        return _load_ftbin(path)
    return _load_csv(path)


def write_table(table: FeatureTable, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".ftbin":
        _write_ftbin(table, path)
    else:
        _write_csv(table, path)


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def _write_csv(table: FeatureTable, path: Path) -> None:
    header = ["id"]
    if table.y is not None:
        header.append("y")
    if table.split is not None:
        header.append("split")
    if table.fold is not None:
        header.append("fold")
    if table.group is not None:
        header.append("group")
    header += table.feature_names
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for i in range(table.n_rows):
            row = [table.ids[i]]
            if table.y is not None:
                row.append(_fmt(table.y[i]))
            if table.split is not None:
                row.append(table.split[i])
            if table.fold is not None:
                row.append(str(int(table.fold[i])))
            if table.group is not None:
                row.append(table.group[i])
            row += [_fmt(v) for v in table.x[i]]
            w.writerow(row)


def _write_ftbin(table: FeatureTable, path: Path) -> None:
    header = {
        "schema_version": SCHEMA_VERSION,
        "n_rows": table.n_rows,
        "n_cols": table.n_features,
        "columns": table.feature_names,
        "ids": table.ids,
        "y": None if table.y is None else
            [None if np.isnan(v) else float(v) for v in table.y],
        "split": table.split,
        "fold": None if table.fold is None else [int(v) for v in table.fold],
        "group": table.group,
        "meta": table.meta,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(FTBIN_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(np.ascontiguousarray(table.x, dtype="<f4").tobytes())
