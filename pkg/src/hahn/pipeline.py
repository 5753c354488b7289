"""End-to-end experiments: train networks, pool features, fit the SVM."""

import time

import numpy as np
from joblib import Parallel, delayed

from .classifier import evaluate, fit_svm, tune_svm
from .encoder import (
    PooledMaps,
    check_bank,
    encode_image,
    encode_multi_resolution,
    encode_two_layer,
    quadrant_pool,
    substream,
    train_layer,
)
from .persistence import ModelBundle

FEATURE_CHOICES = ("phi1", "phi2", "phi1+phi2")


def child_seed(seed, name):
    return int(substream(seed, name).integers(2**31))


def _encode_chunk(fn, images):
    return [np.concatenate([np.ravel(part) for part in _as_tuple(fn(im))]) for im in images]


def _as_tuple(v):
    return v if isinstance(v, tuple) else (v,)


def encode_all(fn, images, n_jobs=1, chunk=256):
    """Stack ``fn(image)`` over images; tuples of vectors are concatenated."""
    if n_jobs == 1:
        rows = _encode_chunk(fn, images)
    else:
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_encode_chunk)(fn, images[i:i + chunk])
            for i in range(0, len(images), chunk)
        )
        rows = [r for part in parts for r in part]
    return np.asarray(rows)


def _single(layer):
    return lambda im: quadrant_pool(encode_image(layer, im))


def _two_layer(layer1, layer2):
    return lambda im: encode_two_layer(layer1, layer2, im)


def _bank(bank):
    return lambda im: encode_multi_resolution(bank, im)


def layer_features(layer, images, n_jobs=1):
    return encode_all(_single(layer), images, n_jobs)


def two_layer_features(layer1, layer2, images, n_jobs=1):
    """(phi1, phi2) feature matrices for a stacked pair of layers."""
    both = encode_all(_two_layer(layer1, layer2), images, n_jobs)
    d1 = 4 * layer1.state.m
    return both[:, :d1], both[:, d1:]


def bank_features(bank, images, n_jobs=1):
    return encode_all(_bank(bank), images, n_jobs)


def select_features(phi1, phi2, which):
    if which == "phi1":
        return phi1
    if which == "phi2":
        return phi2
    if which == "phi1+phi2":
        return np.hstack([phi1, phi2])
    raise ValueError(f"unknown feature choice {which!r}; expected one of {FEATURE_CHOICES}")


def bundle_features(bundle, images, n_jobs=1):
    """Classifier inputs for ``images`` as the bundle's provenance describes."""
    mode = bundle.provenance.get("mode", "single")
    if mode == "two_layer":
        layer1, layer2 = bundle.resolutions[0]
        phi1, phi2 = two_layer_features(layer1, layer2, images, n_jobs)
        return select_features(phi1, phi2, bundle.provenance.get("features", "phi1+phi2"))
    if mode == "multi_resolution":
        return bank_features([res[0] for res in bundle.resolutions], images, n_jobs)
    return layer_features(bundle.resolutions[0][0], images, n_jobs)


def fit_classifier(features, labels, reg=1e-4, epochs=20, tune=False, seed=0, classes=10):
    if tune:
        model, _, _ = tune_svm(features, labels, epochs=epochs, seed=seed, classes=classes)
        return model
    return fit_svm(features, labels, reg, epochs, seed, classes=classes)


def train_networks(cfg, images, log=print):
    """Train the networks described by ``cfg`` on raw (N, C, H, W) images.

    Returns a :class:`ModelBundle` without a classifier.
    """
    seed = cfg.int("experiment", "seed")
    mode = cfg.get("experiment", "mode")
    channels = images.shape[1]
    prov = {"seed": seed, "mode": mode, "patch_counts": []}

    if mode == "single" or mode == "two_layer":
        spec1 = cfg.layer_spec("layer1", channels)
        n1 = cfg.int("layer1", "patches")
        t0 = time.perf_counter()
        layer1 = train_layer(images, spec1, n1, child_seed(seed, "layer1"))
        log(f"layer 1: {spec1.neurons} neurons, rf {spec1.receptive_field}, "
            f"{n1} patches in {time.perf_counter() - t0:.1f}s")
        prov["patch_counts"].append(n1)
        resolutions = [[layer1]]
        if mode == "two_layer":
            spec2 = cfg.layer_spec("layer2", spec1.neurons)
            n2 = cfg.int("layer2", "patches")
            t0 = time.perf_counter()
            layer2 = train_layer(PooledMaps(layer1, images), spec2, n2, child_seed(seed, "layer2"))
            log(f"layer 2: {spec2.neurons} neurons, rf {spec2.receptive_field}, "
                f"{n2} patches in {time.perf_counter() - t0:.1f}s")
            prov["patch_counts"].append(n2)
            prov["features"] = cfg.get("experiment", "features")
            resolutions[0].append(layer2)
    elif mode == "multi_resolution":
        rfs = cfg.list("multi_resolution", "receptive_fields", int)
        neurons = cfg.int("multi_resolution", "neurons")
        n1 = cfg.int("layer1", "patches")
        resolutions = []
        for rf in rfs:
            spec = cfg.layer_spec("layer1", channels, receptive_field=rf, neurons=neurons)
            t0 = time.perf_counter()
            layer = train_layer(images, spec, n1, child_seed(seed, f"resolution{rf}"))
            log(f"resolution {rf}x{rf}: {neurons} neurons, {n1} patches "
                f"in {time.perf_counter() - t0:.1f}s")
            resolutions.append([layer])
            prov["patch_counts"].append(n1)
        check_bank([r[0] for r in resolutions], images.shape[-1])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ModelBundle(resolutions, None, prov)


def online_accuracy(fit_set, eval_set, spec, checkpoints, seed=0, reg=1e-4, epochs=20,
                    n_jobs=1, log=print):
    """Classification accuracy of a single layer at several training lengths.

    The layer is trained once on ``max(checkpoints)`` patches; a snapshot
    taken after each checkpoint is used to encode both sets and fit a fresh
    SVM.  Returns a list of (patches, accuracy).
    """
    checkpoints = sorted(int(c) for c in checkpoints)
    _, snaps = train_layer(fit_set.images, spec, checkpoints[-1], child_seed(seed, "layer1"),
                           checkpoints=checkpoints)
    out = []
    for count, layer in zip(checkpoints, snaps):
        F = layer_features(layer, fit_set.images, n_jobs)
        G = layer_features(layer, eval_set.images, n_jobs)
        model = fit_svm(F, fit_set.labels, reg, epochs, child_seed(seed, "svm"))
        acc = evaluate(model, G, eval_set.labels)
        log(f"after {count} patches: accuracy {acc:.4f}")
        out.append((count, acc))
    return out


def sweep(cfg, train_set, test_set, log=print):
    """Single-layer accuracy over receptive fields x neuron counts x whitening.

    Returns rows of (receptive_field, neurons, whiten, accuracy).
    """
    seed = cfg.int("experiment", "seed")
    n_jobs = cfg.int("experiment", "n_jobs")
    patches = cfg.int("layer1", "patches")
    channels = train_set.images.shape[1]
    rows = []
    for rf in cfg.list("sweep", "receptive_fields", int):
        for m in cfg.list("sweep", "neurons", int):
            for whiten in cfg.bools("sweep", "whiten"):
                spec = cfg.layer_spec("layer1", channels, receptive_field=rf, neurons=m,
                                      whiten=whiten)
                layer = train_layer(train_set.images, spec, patches, child_seed(seed, "layer1"))
                F = layer_features(layer, train_set.images, n_jobs)
                G = layer_features(layer, test_set.images, n_jobs)
                model = fit_svm(F, train_set.labels, cfg.float("svm", "reg"),
                                cfg.int("svm", "epochs"), child_seed(seed, "svm"))
                acc = evaluate(model, G, test_set.labels)
                log(f"rf={rf} neurons={m} whiten={whiten}: {acc:.4f}")
                rows.append((rf, m, whiten, acc))
    return rows
