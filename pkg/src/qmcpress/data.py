"""Datasets on the unit cube: construction, ingestion, and synthesis.

A DataSet stores N points in [0,1)^s with real responses, plus packed base-b
digit prefixes of every coordinate.  The prefixes are computed once (exactly)
and drive all weight computations; coordinates equal to 1.0 are clamped to
the predecessor float so each point lies in exactly one elementary interval.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import digits
from .rng import ROLE_DATA_X, ROLE_DATA_Y, substream

IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801


class IngestError(ValueError):
    """Malformed input data (CSV rows, IDX payloads, shape mismatches)."""


@dataclass(frozen=True)
class DataSet:
    """N labeled points in [0,1)^s with precomputed digit prefixes."""

    X: np.ndarray  # (N, s) float64 in [0, 1)
    Y: np.ndarray  # (N,) float64
    base: int = 2
    prefix_depth: int = digits.DEPTH_BASE2
    prefixes: np.ndarray | None = None  # (N, s) int64

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        Y = np.ascontiguousarray(self.Y, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be an (N, s) array")
        if Y.shape != (X.shape[0],):
            raise ValueError("Y must have one response per data point")
        if X.size:
            if X.min() < 0.0 or X.max() > 1.0:
                raise ValueError("coordinates must lie in [0, 1]")
            X = np.where(X == 1.0, digits.ONE_MINUS_ULP, X)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if self.prefixes is None:
            object.__setattr__(
                self, "prefixes", digits.pack_prefixes(X, self.base, self.prefix_depth)
            )
        else:
            object.__setattr__(
                self, "prefixes", np.ascontiguousarray(self.prefixes, dtype=np.int64)
            )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def s(self) -> int:
        return self.X.shape[1]

    def y_mean(self) -> float:
        return float(np.mean(self.Y)) if self.n else 0.0

    def y_sq_mean(self) -> float:
        return float(np.mean(self.Y**2)) if self.n else 0.0

    def prefix(self, depth: int) -> np.ndarray:
        """Packed digit prefixes truncated to `depth`."""
        if depth > self.prefix_depth:
            raise ValueError(f"stored prefix depth is {self.prefix_depth}, requested {depth}")
        if self.base == 2:
            return self.prefixes >> (self.prefix_depth - depth)
        return self.prefixes // self.base ** (self.prefix_depth - depth)

    def save(self, path: str) -> None:
        np.savez(path, X=self.X, Y=self.Y, base=self.base, prefix_depth=self.prefix_depth)

    @classmethod
    def load(cls, path: str) -> "DataSet":
        with np.load(path) as z:
            return cls(
                X=z["X"],
                Y=z["Y"],
                base=int(z["base"]),
                prefix_depth=int(z["prefix_depth"]),
            )


def ingest_csv(path: str, s: int, scaling: str = "none", header: bool = False,
               sidecar_path: str | None = None) -> DataSet:
    """Read rows of s features plus a final response column.

    scaling="minmax" affinely maps each feature column's observed range onto
    [0, 1 - ulp] and records the per-column offsets/scales in a JSON sidecar;
    scaling="none" requires features already in [0, 1].  Responses are never
    scaled.
    """
    if scaling not in ("none", "minmax"):
        raise ValueError(f"unknown scaling mode {scaling!r}")
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if lineno == 1 and header:
                continue
            if not line.strip():
                continue
            fields = line.strip().split(",")
            if len(fields) != s + 1:
                raise IngestError(
                    f"row {lineno}: expected {s + 1} fields, got {len(fields)}"
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise IngestError(f"row {lineno}: non-numeric cell") from exc
    if not rows:
        raise IngestError("no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    X, Y = arr[:, :s], arr[:, s]
    scale_info = {"mode": scaling}
    if scaling == "minmax":
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        X = (X - lo) / span * digits.ONE_MINUS_ULP
        scale_info["offset"] = lo.tolist()
        scale_info["span"] = span.tolist()
    elif X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise IngestError("features outside [0, 1]; use minmax scaling")
    if sidecar_path:
        with open(sidecar_path, "w", encoding="ascii") as fh:
            json.dump(scale_info, fh, indent=2)
            fh.write("\n")
    return DataSet(X=X, Y=Y)


def _read_idx(path: str, magic_expected: int) -> tuple[int, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise IngestError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != magic_expected:
        raise IngestError(f"{path}: IDX magic 0x{magic:08x}, expected 0x{magic_expected:08x}")
    count = struct.unpack(">I", raw[4:8])[0]
    if magic_expected == IDX_MAGIC_IMAGES:
        if len(raw) < 16:
            raise IngestError(f"{path}: truncated IDX image header")
        nrow, ncol = struct.unpack(">II", raw[8:16])
        if nrow != 28 or ncol != 28:
            raise IngestError(f"{path}: expected 28x28 images, got {nrow}x{ncol}")
        need = 16 + count * nrow * ncol
        if len(raw) < need:
            raise IngestError(f"{path}: truncated image payload")
        data = np.frombuffer(raw, dtype=np.uint8, offset=16, count=count * nrow * ncol)
        return count, data.reshape(count, nrow, ncol)
    need = 8 + count
    if len(raw) < need:
        raise IngestError(f"{path}: truncated label payload")
    return count, np.frombuffer(raw, dtype=np.uint8, offset=8, count=count)


def pool_images(images: np.ndarray) -> np.ndarray:
    """Center-crop 28x28 images to 20x20 and 2x2 average-pool to 100 features in [0, 1)."""
    crop = images[:, 4:24, 4:24].astype(np.float64)
    pooled = crop.reshape(-1, 10, 2, 10, 2).mean(axis=(2, 4)) / 255.0
    return np.minimum(pooled, digits.ONE_MINUS_ULP)


def ingest_mnist(images_path: str, labels_path: str, limit: int | None = None) -> DataSet:
    """MNIST IDX files -> 100-dimensional pooled features with digit labels."""
    n_img, images = _read_idx(images_path, IDX_MAGIC_IMAGES)
    n_lab, labels = _read_idx(labels_path, IDX_MAGIC_LABELS)
    if n_img != n_lab:
        raise IngestError(f"image count {n_img} != label count {n_lab}")
    if limit is not None:
        images = images[:limit]
        labels = labels[:limit]
    X = pool_images(images)
    return DataSet(X=X.reshape(len(images), 100), Y=labels.astype(np.float64))


def synth_regression(seed: int, n: int, s: int) -> DataSet:
    """Synthetic regression data: |standard normal| features scaled onto the
    unit cube per coordinate (column max maps to 1 - ulp), uniform responses."""
    gx = substream(seed, ROLE_DATA_X)
    gy = substream(seed, ROLE_DATA_Y)
    g = np.abs(gx.standard_normal((n, s)))
    colmax = g.max(axis=0)
    colmax[colmax == 0.0] = 1.0
    X = g / colmax * digits.ONE_MINUS_ULP
    Y = gy.uniform(0.0, 1.0, size=n)
    return DataSet(X=X, Y=Y)
