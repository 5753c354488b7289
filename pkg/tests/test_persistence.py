import struct

import numpy as np
import pytest

from hahn.classifier import fit_svm
from hahn.encoder import LayerSpec, PooledMaps, train_layer
from hahn.persistence import (
    BundleFormatError,
    ModelBundle,
    bundle_from_bytes,
    bundle_to_bytes,
    export_features,
    load_bundle,
    read_features,
    save_bundle,
)


@pytest.fixture(scope="module")
def bundle():
    imgs = np.random.default_rng(0).integers(0, 256, size=(6, 3, 32, 32)).astype(np.uint8)
    l1 = train_layer(imgs, LayerSpec(6, 3, 4), 200, seed=1)
    l2 = train_layer(PooledMaps(l1, imgs), LayerSpec(2, 4, 3, var_floor=1e-3, whiten=False),
                     100, seed=2)
    rng = np.random.default_rng(1)
    clf = fit_svm(rng.standard_normal((20, 28)), np.arange(20) % 3, epochs=2)
    return ModelBundle([[l1, l2]], clf, {"seed": 0, "mode": "two_layer", "patch_counts": [200, 100]})


def states_equal(a, b):
    for la, lb in zip(a.layers, b.layers):
        assert la.spec == lb.spec
        assert la.seed == lb.seed
        for f in ("W", "M", "y_hat"):
            np.testing.assert_array_equal(getattr(la.state, f), getattr(lb.state, f))
        assert la.state.t == lb.state.t
        assert (la.whitening is None) == (lb.whitening is None)
        if la.whitening is not None:
            np.testing.assert_array_equal(la.whitening.transform, lb.whitening.transform)
            np.testing.assert_array_equal(la.whitening.mean, lb.whitening.mean)
            assert la.whitening.epsilon == lb.whitening.epsilon


class TestBundle:
    def test_round_trip(self, bundle, tmp_path):
        path = tmp_path / "m.hahn"
        save_bundle(bundle, path)
        loaded = load_bundle(path)
        states_equal(bundle, loaded)
        np.testing.assert_array_equal(loaded.classifier.weights, bundle.classifier.weights)
        assert loaded.provenance == bundle.provenance
        save_bundle(loaded, tmp_path / "again.hahn")
        assert (tmp_path / "again.hahn").read_bytes() == path.read_bytes()

    def test_header(self, bundle):
        data = bundle_to_bytes(bundle)
        assert data[:4] == b"HAHN"
        assert struct.unpack_from("<I", data, 4)[0] == 1

    def test_bad_magic(self, bundle):
        data = b"XXXX" + bundle_to_bytes(bundle)[4:]
        with pytest.raises(BundleFormatError, match="bad magic"):
            bundle_from_bytes(data)

    def test_unknown_version(self, bundle):
        data = bytearray(bundle_to_bytes(bundle))
        data[4:8] = struct.pack("<I", 99)
        with pytest.raises(BundleFormatError, match="version"):
            bundle_from_bytes(bytes(data))

    def test_dimension_mismatch_names_section(self):
        # W declares 2x3 but holds 5 values
        name = b"res0.layer0.W"
        payload = struct.pack("<II", 2, 3) + np.zeros(5).tobytes()
        data = (b"HAHN" + struct.pack("<II", 1, 2)
                + struct.pack("<H", 4) + b"meta" + struct.pack("<Q", 2) + b"{}"
                + struct.pack("<H", len(name)) + name + struct.pack("<Q", len(payload)) + payload)
        with pytest.raises(BundleFormatError, match="dimension mismatch") as err:
            bundle_from_bytes(data)
        assert err.value.section == "res0.layer0.W"

    def test_inconsistent_shape(self, bundle):
        bad = ModelBundle(bundle.resolutions, None, {})
        data = bundle_to_bytes(bad)
        # shrink the declared neuron count so W no longer fits
        data = data.replace(b'"neurons":4', b'"neurons":5', 1)
        with pytest.raises(BundleFormatError, match="dimension mismatch"):
            bundle_from_bytes(data)

    def test_truncated(self, bundle):
        with pytest.raises(BundleFormatError):
            bundle_from_bytes(bundle_to_bytes(bundle)[:-10])


class TestExportFeatures:
    def test_layout(self, tmp_path):
        path = tmp_path / "f.csv"
        export_features(np.array([[1.0, 2.5, -3.0], [0.1, 0.2, 0.3]]), [4, 7], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        assert lines[0] == "label,f0,f1,f2"
        assert lines[1].startswith("4,")

    def test_round_trip_precision(self, tmp_path):
        X = np.random.default_rng(0).standard_normal((10, 6))
        y = np.arange(10) % 3
        path = tmp_path / "f.csv"
        export_features(X, y, path)
        X2, y2 = read_features(path)
        np.testing.assert_allclose(X2, X, rtol=1e-8, atol=0)
        np.testing.assert_array_equal(y2, y)

    def test_empty(self, tmp_path):
        path = tmp_path / "f.csv"
        export_features(np.empty((0, 3)), np.empty(0), path)
        assert path.read_text() == "label,f0,f1,f2\n"
