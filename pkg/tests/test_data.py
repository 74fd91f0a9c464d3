import math
import struct

import numpy as np
import pytest

from qmcpress.data import (
    DataSet,
    IngestError,
    ingest_csv,
    ingest_mnist,
    pool_images,
    synth_regression,
)
from qmcpress.digits import ONE_MINUS_ULP


def write_idx_images(path, images):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        fh.write(np.asarray(images, dtype=np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, len(labels)))
        fh.write(np.asarray(labels, dtype=np.uint8).tobytes())


def test_dataset_validation_and_clamping():
    ds = DataSet(X=np.array([[0.0], [1.0]]), Y=np.array([0.0, 1.0]))
    assert ds.X[1, 0] == ONE_MINUS_ULP
    with pytest.raises(ValueError):
        DataSet(X=np.array([[1.2]]), Y=np.array([0.0]))
    with pytest.raises(ValueError):
        DataSet(X=np.zeros((2, 1)), Y=np.zeros(3))


def test_dataset_prefixes_match_digits():
    from qmcpress.digits import prefix_int

    rng = np.random.default_rng(0)
    ds = DataSet(X=rng.random((20, 2)), Y=np.zeros(20))
    for d in (1, 5, 20):
        pref = ds.prefix(d)
        for i in range(20):
            for j in range(2):
                assert pref[i, j] == prefix_int(float(ds.X[i, j]), 2, d)


def test_dataset_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    ds = DataSet(X=rng.random((30, 3)), Y=rng.standard_normal(30))
    path = tmp_path / "d.npz"
    ds.save(str(path))
    again = DataSet.load(str(path))
    assert np.array_equal(ds.X, again.X)
    assert np.array_equal(ds.Y, again.Y)
    assert np.array_equal(ds.prefixes, again.prefixes)


def test_ingest_csv_minmax_endpoints(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("0,0\n1,1\n")
    ds = ingest_csv(str(path), s=1, scaling="minmax")
    assert ds.X[0, 0] == 0.0
    assert ds.X[1, 0] == ONE_MINUS_ULP
    assert list(ds.Y) == [0.0, 1.0]


def test_ingest_csv_header_and_sidecar(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b,y\n0.5,2.0,1.0\n0.25,4.0,2.0\n")
    sidecar = tmp_path / "scale.json"
    ds = ingest_csv(str(path), s=2, scaling="minmax", header=True, sidecar_path=str(sidecar))
    assert ds.n == 2
    import json

    info = json.loads(sidecar.read_text())
    assert info["mode"] == "minmax"
    assert info["offset"] == [0.25, 2.0]


def test_ingest_csv_errors(tmp_path):
    ragged = tmp_path / "r.csv"
    ragged.write_text("0.1,0.2,1\n0.1,1\n")
    with pytest.raises(IngestError, match="row 2"):
        ingest_csv(str(ragged), s=2)
    bad = tmp_path / "b.csv"
    bad.write_text("0.1,x,1\n")
    with pytest.raises(IngestError, match="non-numeric"):
        ingest_csv(str(bad), s=2)
    out_of_range = tmp_path / "o.csv"
    out_of_range.write_text("1.5,0\n")
    with pytest.raises(IngestError, match="minmax"):
        ingest_csv(str(out_of_range), s=1, scaling="none")


def test_pool_geometry():
    # all-zero image -> zero features; all-255 -> clamped just below 1
    zeros = np.zeros((1, 28, 28), dtype=np.uint8)
    full = np.full((1, 28, 28), 255, dtype=np.uint8)
    assert not pool_images(zeros).any()
    assert np.all(pool_images(full) == ONE_MINUS_ULP)
    # a single bright pixel inside the crop contributes 1/4 of its value
    one = np.zeros((1, 28, 28), dtype=np.uint8)
    one[0, 4, 4] = 200
    pooled = pool_images(one)
    assert pooled[0, 0, 0] == pytest.approx(200 / 255 / 4)
    assert pooled.sum() == pooled[0, 0, 0]


def test_ingest_mnist_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    images = rng.integers(0, 256, size=(7, 28, 28)).astype(np.uint8)
    labels = rng.integers(0, 10, size=7).astype(np.uint8)
    ipath, lpath = tmp_path / "img", tmp_path / "lab"
    write_idx_images(ipath, images)
    write_idx_labels(lpath, labels)
    ds = ingest_mnist(str(ipath), str(lpath))
    assert (ds.n, ds.s) == (7, 100)
    assert np.array_equal(ds.Y, labels.astype(float))
    ds2 = ingest_mnist(str(ipath), str(lpath), limit=3)
    assert ds2.n == 3


def test_ingest_mnist_errors(tmp_path):
    ipath, lpath = tmp_path / "img", tmp_path / "lab"
    write_idx_images(ipath, np.zeros((2, 28, 28), dtype=np.uint8))
    write_idx_labels(lpath, np.zeros(3, dtype=np.uint8))
    with pytest.raises(IngestError, match="count"):
        ingest_mnist(str(ipath), str(lpath))
    # magic mismatch
    with pytest.raises(IngestError, match="magic"):
        ingest_mnist(str(lpath), str(ipath))
    # truncated payload
    raw = ipath.read_bytes()
    ipath.write_bytes(raw[:-10])
    write_idx_labels(lpath, np.zeros(2, dtype=np.uint8))
    with pytest.raises(IngestError, match="truncated"):
        ingest_mnist(str(ipath), str(lpath))


def test_synth_regression_properties():
    a = synth_regression(123, 500, 4)
    b = synth_regression(123, 500, 4)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)
    assert a.X.min() >= 0.0 and a.X.max() < 1.0
    assert np.all(a.Y >= 0.0) and np.all(a.Y <= 1.0)
    # per-coordinate maximum is scaled to the top of the cube
    assert np.all(a.X.max(axis=0) >= 1.0 - 2 * math.ulp(1.0))
    c = synth_regression(124, 500, 4)
    assert not np.array_equal(a.X, c.X)
