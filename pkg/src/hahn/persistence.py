"""Binary model bundles and CSV feature export.

Bundle layout (all integers little-endian)::

    b"HAHN"  u32 version  u32 section_count
    section*: u16 name_len, name (utf-8), u64 payload_len, payload

The first section, ``meta``, is sorted compact JSON describing every
layer and the provenance.  Every other section is a matrix: u32 rows,
u32 cols, then rows*cols float64 values in row-major order.  Vectors are
stored as 1 x k matrices.
"""

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifier import LinearModel
from .core import NetworkState
from .encoder import Layer, LayerSpec
from .preprocessing import WhiteningTransform

MAGIC = b"HAHN"
VERSION = 1


class BundleFormatError(ValueError):
    """Malformed bundle; ``section`` names the offending part of the file."""

    def __init__(self, message, section):
        super().__init__(f"{message} (section {section!r})")
        self.section = section


@dataclass
class ModelBundle:
    """Trained networks, grouped as resolutions -> stacked layers.

    A two-layer model is one resolution with two layers; a multi-resolution
    model is several resolutions with one layer each.
    """

    resolutions: list
    classifier: LinearModel = None
    provenance: dict = field(default_factory=dict)

    @property
    def layers(self):
        return [layer for res in self.resolutions for layer in res]


def _matrix_bytes(a):
    a = np.asarray(a, dtype="<f8")
    if a.ndim == 1:
        a = a[None, :]
    return struct.pack("<II", *a.shape) + np.ascontiguousarray(a).tobytes()


def _read_matrix(name, payload):
    if len(payload) < 8:
        raise BundleFormatError("dimension mismatch: missing matrix header", name)
    rows, cols = struct.unpack_from("<II", payload)
    if len(payload) != 8 + 8 * rows * cols:
        raise BundleFormatError(
            f"dimension mismatch: declared {rows}x{cols} but holds "
            f"{(len(payload) - 8) / 8:g} values", name,
        )
    return np.frombuffer(payload, dtype="<f8", offset=8).reshape(rows, cols).astype(np.float64)


def _sections(bundle):
    meta = {"provenance": bundle.provenance, "resolutions": [], "classifier": None}
    mats = []
    for r, res in enumerate(bundle.resolutions):
        layers_meta = []
        for l, layer in enumerate(res):
            prefix = f"res{r}.layer{l}"
            layers_meta.append({
                "spec": asdict(layer.spec),
                "seed": int(layer.seed),
                "t": int(layer.state.t),
                "whitening_epsilon": None if layer.whitening is None else layer.whitening.epsilon,
            })
            mats += [
                (f"{prefix}.W", layer.state.W),
                (f"{prefix}.M", layer.state.M),
                (f"{prefix}.y_hat", layer.state.y_hat),
            ]
            if layer.whitening is not None:
                mats += [
                    (f"{prefix}.whitening.mean", layer.whitening.mean),
                    (f"{prefix}.whitening.transform", layer.whitening.transform),
                ]
        meta["resolutions"].append(layers_meta)
    if bundle.classifier is not None:
        clf = bundle.classifier
        meta["classifier"] = {"classes": clf.classes, "d": clf.d}
        mats += [
            ("svm.weights", clf.weights),
            ("svm.biases", clf.biases),
            ("svm.feature_mean", clf.feature_mean),
            ("svm.feature_std", clf.feature_std),
        ]
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    return [("meta", meta_bytes)] + [(name, _matrix_bytes(a)) for name, a in mats]


def bundle_to_bytes(bundle):
    sections = _sections(bundle)
    out = [MAGIC, struct.pack("<II", VERSION, len(sections))]
    for name, payload in sections:
        raw = name.encode()
        out.append(struct.pack("<H", len(raw)) + raw + struct.pack("<Q", len(payload)))
        out.append(payload)
    return b"".join(out)


def save_bundle(bundle, path):
    data = bundle_to_bytes(bundle)
    with open(path, "wb") as f:
        f.write(data)
    return path


def _split_sections(data):
    if data[:4] != MAGIC:
        raise BundleFormatError("bad magic", "header")
    if len(data) < 12:
        raise BundleFormatError("truncated header", "header")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise BundleFormatError(f"unsupported version {version}", "header")
    pos = 12
    sections = {}
    for k in range(count):
        try:
            (nlen,) = struct.unpack_from("<H", data, pos)
            name = data[pos + 2:pos + 2 + nlen].decode()
            (plen,) = struct.unpack_from("<Q", data, pos + 2 + nlen)
        except (struct.error, UnicodeDecodeError):
            raise BundleFormatError("truncated section header", f"#{k}") from None
        start = pos + 2 + nlen + 8
        if start + plen > len(data):
            raise BundleFormatError("truncated payload", name)
        if name in sections:
            raise BundleFormatError("duplicate section", name)
        payload = data[start:start + plen]
        sections[name] = payload if name == "meta" else _read_matrix(name, payload)
        pos = start + plen
    if pos != len(data):
        raise BundleFormatError("trailing bytes after last section", "footer")
    return sections


def _take(sections, name, shape):
    if name not in sections:
        raise BundleFormatError("missing section", name)
    a = sections.pop(name)
    if a.shape != shape:
        raise BundleFormatError(f"dimension mismatch: expected {shape}, found {a.shape}", name)
    return a


def _read_layers(meta, sections):
    resolutions = []
    for r, layers_meta in enumerate(meta["resolutions"]):
        res = []
        for l, lm in enumerate(layers_meta):
            prefix = f"res{r}.layer{l}"
            spec = LayerSpec(**lm["spec"])
            n, m = spec.n, spec.neurons
            state = NetworkState(
                W=_take(sections, f"{prefix}.W", (m, n)),
                M=_take(sections, f"{prefix}.M", (m, m)),
                y_hat=_take(sections, f"{prefix}.y_hat", (1, m))[0],
                t=lm["t"],
            )
            whitening = None
            if lm["whitening_epsilon"] is not None:
                whitening = WhiteningTransform(
                    mean=_take(sections, f"{prefix}.whitening.mean", (1, n))[0],
                    transform=_take(sections, f"{prefix}.whitening.transform", (n, n)),
                    epsilon=lm["whitening_epsilon"],
                )
            res.append(Layer(spec, state, whitening, lm["seed"]))
        resolutions.append(res)
    return resolutions


def _read_classifier(meta, sections):
    if meta["classifier"] is None:
        return None
    k, d = meta["classifier"]["classes"], meta["classifier"]["d"]
    return LinearModel(
        weights=_take(sections, "svm.weights", (k, d)),
        biases=_take(sections, "svm.biases", (1, k))[0],
        feature_mean=_take(sections, "svm.feature_mean", (1, d))[0],
        feature_std=_take(sections, "svm.feature_std", (1, d))[0],
    )


def bundle_from_bytes(data):
    sections = _split_sections(data)
    if "meta" not in sections:
        raise BundleFormatError("missing section", "meta")
    try:
        meta = json.loads(sections.pop("meta").decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise BundleFormatError(f"unreadable metadata: {e}", "meta") from None

    try:
        resolutions = _read_layers(meta, sections)
        classifier = _read_classifier(meta, sections)
        provenance = meta["provenance"]
    except (KeyError, TypeError) as e:
        raise BundleFormatError(f"incomplete metadata: {e}", "meta") from None
    if sections:
        raise BundleFormatError("unexpected section", next(iter(sections)))
    return ModelBundle(resolutions, classifier, provenance)


def load_bundle(path):
    with open(path, "rb") as f:
        return bundle_from_bytes(f.read())


def export_features(features, labels, path):
    """CSV with header ``label,f0,f1,...`` and 9 significant digits."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim == 1:
        features = features.reshape(len(labels), -1)
    d = features.shape[1]
    with open(path, "w") as f:
        f.write(",".join(["label"] + [f"f{j}" for j in range(d)]) + "\n")
        for lab, row in zip(labels, features):
            f.write(",".join([str(int(lab))] + [f"{v:.9g}" for v in row]) + "\n")
    return path


def read_features(path):
    """Inverse of :func:`export_features`: (features, labels)."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = [line.strip().split(",") for line in f if line.strip()]
    d = len(header) - 1
    if not rows:
        return np.empty((0, d)), np.empty(0, dtype=np.int64)
    arr = np.array(rows, dtype=np.float64)
    return arr[:, 1:], arr[:, 0].astype(np.int64)
