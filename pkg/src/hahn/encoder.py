"""Image -> feature vector encoding with trained networks.

Feature maps are (height, width, depth) float arrays.  Inputs to a layer
are channel-major (C, H, W) arrays: raw images for the first layer, the
transposed pooled feature map for the second.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import NetworkConfig, infer_batch, init_network, train
from .preprocessing import (
    DEFAULT_EPSILON,
    DEFAULT_VAR_FLOOR,
    PatchSampler,
    apply_whitening,
    fit_whitening,
    normalize_patches,
    sample_patches,
)

DEFAULT_PATCH_COUNT = 200_000
DEFAULT_RESOLUTIONS = (4, 6, 8)


@dataclass(frozen=True)
class LayerSpec:
    receptive_field: int
    channels: int
    neurons: int
    whiten: bool = True
    epsilon: float = DEFAULT_EPSILON
    var_floor: float = DEFAULT_VAR_FLOOR
    train_sweeps: int = 50
    infer_sweeps: int = 10
    cd_tolerance: float = 1e-6
    y_hat_init: float = 1e-3

    def __post_init__(self):
        if self.receptive_field < 1:
            raise ValueError("receptive_field must be >= 1")

    @property
    def n(self):
        return self.channels * self.receptive_field**2

    def network_config(self, seed=0):
        return NetworkConfig(
            n=self.n,
            m=self.neurons,
            train_sweeps=self.train_sweeps,
            infer_sweeps=self.infer_sweeps,
            cd_tolerance=self.cd_tolerance,
            seed=seed,
            y_hat_init=self.y_hat_init,
        )


@dataclass
class Layer:
    """A trained layer: its spec, network state and (optional) whitening."""

    spec: LayerSpec
    state: object
    whitening: object = None
    seed: int = 0

    @property
    def config(self):
        return self.spec.network_config(self.seed)

    def preprocess(self, X):
        X = normalize_patches(X, self.spec.var_floor)
        if self.whitening is not None:
            X = apply_whitening(self.whitening, X)
        return X


def substream(seed, name):
    """Independent generator for a named purpose derived from one seed."""
    key = [int(b) for b in name.encode()]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


def extract_windows(image, rf):
    """All stride-1 valid windows of a (C, H, W) array.

    Returns (H - rf + 1, W - rf + 1, C*rf*rf) with patches flattened
    channel, row, column.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError(f"expected a (C, H, W) array, got shape {image.shape}")
    C, H, W = image.shape
    if rf > H or rf > W:
        raise ValueError(f"receptive field {rf} larger than input {H}x{W}")
    win = sliding_window_view(image, (rf, rf), axis=(1, 2))
    win = win.transpose(1, 2, 0, 3, 4)
    return win.reshape(H - rf + 1, W - rf + 1, C * rf * rf)


def encode_image(layer, image):
    """Sliding-window encoding of one (C, H, W) input into a feature map."""
    rf = layer.spec.receptive_field
    win = extract_windows(image, rf)
    h, w, n = win.shape
    if n != layer.state.n:
        raise ValueError(f"window size {n} does not match network input {layer.state.n}")
    X = layer.preprocess(win.reshape(-1, n))
    cfg = layer.spec
    Y = infer_batch(layer.state, X, cfg.infer_sweeps, cfg.cd_tolerance)
    return Y.reshape(h, w, layer.state.m)


def _check_map(fm):
    fm = np.asarray(fm, dtype=np.float64)
    if fm.ndim != 3:
        raise ValueError(f"expected a (height, width, depth) map, got shape {fm.shape}")
    if fm.shape[0] < 2 or fm.shape[1] < 2:
        raise ValueError(f"map {fm.shape[0]}x{fm.shape[1]} is smaller than 2x2")
    return fm


def quadrant_pool(fm):
    """Per-quadrant channel averages, ordered TL, TR, BL, BR.

    Odd sides split at floor(side / 2); the extra row and column go to the
    bottom and right quadrants.
    """
    fm = _check_map(fm)
    h, w, _ = fm.shape
    hs, ws = h // 2, w // 2
    quads = (fm[:hs, :ws], fm[:hs, ws:], fm[hs:, :ws], fm[hs:, ws:])
    return np.concatenate([q.mean(axis=(0, 1)) for q in quads])


def avg_pool_2x2(fm):
    """Non-overlapping 2x2 average; an odd trailing row/column is dropped."""
    fm = _check_map(fm)
    h, w, d = fm.shape
    h2, w2 = h // 2, w // 2
    blocks = fm[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2, d)
    return blocks.mean(axis=(1, 3))


def pooled_input(layer1, image):
    """Layer-2 input for an image: 2x2-pooled layer-1 map as (m1, h, w)."""
    return avg_pool_2x2(encode_image(layer1, image)).transpose(2, 0, 1)


def encode_two_layer(layer1, layer2, image):
    """Pooled features of both layers of a stacked network.

    Returns (phi1, phi2); the combined feature is their concatenation.
    """
    if layer2.spec.channels != layer1.state.m:
        raise ValueError(
            f"layer 2 expects {layer2.spec.channels} channels, layer 1 has {layer1.state.m} neurons"
        )
    fm1 = encode_image(layer1, image)
    phi1 = quadrant_pool(fm1)
    fm2 = encode_image(layer2, avg_pool_2x2(fm1).transpose(2, 0, 1))
    return phi1, quadrant_pool(fm2)


def encode_multi_resolution(bank, image):
    """Concatenated quadrant-pooled features of every network in ``bank``."""
    if len(bank) == 0:
        raise ValueError("empty resolution bank")
    image = np.asarray(image)
    for layer in bank:
        if layer.spec.channels != image.shape[0]:
            raise ValueError("bank member channel count does not match the image")
    return np.concatenate([quadrant_pool(encode_image(layer, image)) for layer in bank])


def check_bank(bank, image_side=32):
    rfs = [layer.spec.receptive_field for layer in bank]
    if any(b <= a for a, b in zip(rfs, rfs[1:])):
        raise ValueError(f"receptive fields must be strictly increasing, got {rfs}")
    if rfs and rfs[-1] > image_side - 1:
        raise ValueError(f"receptive field {rfs[-1]} too large for {image_side}px images")


class PooledMaps:
    """Lazy sequence of layer-2 inputs computed from raw images."""

    def __init__(self, layer1, images):
        self.layer1 = layer1
        self.images = images

    def __len__(self):
        return len(self.images)

    def __getitem__(self, i):
        return pooled_input(self.layer1, self.images[i])


def fit_layer(patches, spec, seed=0, checkpoints=None):
    """Normalize and whiten raw patches, then train a fresh network on them.

    Patches are consumed in row order.  If ``checkpoints`` is given (sorted
    patch counts), returns the trained layer and a list of layer snapshots
    taken after that many training patches.
    """
    X = normalize_patches(patches, spec.var_floor)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 patches")
    whitening = fit_whitening(X, spec.epsilon) if spec.whiten else None
    if whitening is not None:
        X = apply_whitening(whitening, X)

    init_seed = int(substream(seed, "init").integers(2**31))
    config = spec.network_config(init_seed)
    state = init_network(config)

    snapshots = []
    done = 0
    for stop in list(checkpoints or []) + [len(X)]:
        stop = min(int(stop), len(X))
        if stop > done:
            state = train(state, X[done:stop], config)
            done = stop
        snapshots.append(Layer(spec, state, whitening, init_seed))
    layer = snapshots.pop()
    if checkpoints is None:
        return layer
    return layer, snapshots


def sample_layer_patches(images, spec, patch_count, seed=0):
    """The raw training patches :func:`train_layer` would use."""
    sampler = PatchSampler(spec.receptive_field, spec.channels, seed)
    return sample_patches(images, sampler, patch_count, rng=substream(seed, "sampling"))


def train_layer(images, spec, patch_count=DEFAULT_PATCH_COUNT, seed=0, checkpoints=None):
    """Sample patches, fit whitening, then train a fresh network online.

    ``images`` yields (C, H, W) inputs; pass :class:`PooledMaps` to train a
    second layer on pooled first-layer maps.  See :func:`fit_layer` for
    ``checkpoints``.
    """
    if patch_count < 2:
        raise ValueError("patch_count must be >= 2")
    X = sample_layer_patches(images, spec, patch_count, seed)
    return fit_layer(X, spec, seed, checkpoints)
