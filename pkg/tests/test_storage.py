import datetime as dt
import json

import numpy as np
import pytest

from hybridload.calendar import classify_day
from hybridload.datagen import ScenarioConfig, generate
from hybridload.pipeline import FitConfig, HybridForecaster, RegressorSpec
from hybridload.storage import StoreError, load_store, save_store

D = dt.date


@pytest.fixture(scope="module")
def fitted():
    s, w, truth = generate(ScenarioConfig(years=3, seed=9))
    fc = HybridForecaster(s, w, RegressorSpec("H4"), FitConfig(), "trend2", truth.holidays)
    snap = fc.fit(D(1998, 4, 6))
    return fc, snap


def test_roundtrip_is_bit_identical(tmp_path, fitted):
    fc, snap = fitted
    p = tmp_path / "store.json"
    save_store(p, {snap.cutoff: snap}, {"variant": "H4"})
    snaps, meta = load_store(p)
    assert meta == {"variant": "H4"}
    back = snaps[snap.cutoff]
    assert set(back.registry.models) == set(snap.registry.models)
    for k in range(21):
        d = D(1998, 4, 6) + dt.timedelta(days=k)
        a = fc.forecast(snap, d, horizon=1)
        b = fc.forecast(back, d, horizon=1)
        assert len(a) == len(b)
        for x, y in zip(a, b):
            assert x.kind == y.kind and x.flags == y.flags
            assert np.array_equal(x.predicted, y.predicted)
    assert back.windows() == snap.windows()


def test_checksum_detects_corruption(tmp_path, fitted):
    _, snap = fitted
    p = tmp_path / "store.json"
    save_store(p, {snap.cutoff: snap}, {})
    doc = json.loads(p.read_text())
    doc["payload"]["snapshots"][0]["cutoff"] = "1998-04-13"
    p.write_text(json.dumps(doc))
    with pytest.raises(StoreError, match="checksum"):
        load_store(p)


def test_version_and_format_checked(tmp_path, fitted):
    _, snap = fitted
    p = tmp_path / "store.json"
    save_store(p, {snap.cutoff: snap}, {})
    doc = json.loads(p.read_text())
    doc["version"] = 99
    p.write_text(json.dumps(doc))
    with pytest.raises(StoreError, match="version"):
        load_store(p)
    p.write_text("{not json")
    with pytest.raises(StoreError):
        load_store(p)
    p.write_text(json.dumps({"format": "other"}))
    with pytest.raises(StoreError, match="not a"):
        load_store(p)


def test_truncated_file(tmp_path, fitted):
    _, snap = fitted
    p = tmp_path / "store.json"
    save_store(p, {snap.cutoff: snap}, {})
    text = p.read_text()
    p.write_text(text[: len(text) // 2])
    with pytest.raises(StoreError):
        load_store(p)
