"""Patch sampling, per-patch contrast normalization and ZCA whitening.

Images are channel-major arrays of shape (C, H, W).  A patch is the flat
vector of a (C, r, r) crop in C order: channel, then row, then column.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_VAR_FLOOR = 10.0
DEFAULT_EPSILON = 0.1


@dataclass(frozen=True)
class PatchSampler:
    receptive_field: int
    channels: int
    seed: int = 0

    def __post_init__(self):
        if self.receptive_field < 1:
            raise ValueError("receptive_field must be >= 1")
        if self.channels < 1:
            raise ValueError("channels must be >= 1")

    @property
    def patch_size(self):
        return self.channels * self.receptive_field**2


@dataclass
class WhiteningTransform:
    mean: np.ndarray
    transform: np.ndarray
    epsilon: float

    @property
    def n(self):
        return self.mean.shape[0]

    def __call__(self, X):
        return apply_whitening(self, X)


def sample_patches(images, sampler, count, rng=None):
    """Draw ``count`` crops at uniformly random images and positions.

    ``images`` is anything indexable by an integer that yields (C, H, W)
    arrays of a common shape, e.g. an (N, C, H, W) array.  Each distinct
    image is fetched once, so lazily computed sources stay cheap.
    Returns a (count, C*r*r) float64 array.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    r = sampler.receptive_field
    if count == 0:
        return np.empty((0, sampler.patch_size))
    if len(images) == 0:
        raise ValueError("no images to sample from")
    C, H, W = np.shape(images[0])
    if C != sampler.channels:
        raise ValueError(f"images have {C} channels, sampler expects {sampler.channels}")
    if r > H or r > W:
        raise ValueError(f"receptive field {r} larger than image {H}x{W}")

    if rng is None:
        rng = np.random.default_rng(sampler.seed)
    idx = rng.integers(0, len(images), size=count)
    rows = rng.integers(0, H - r + 1, size=count)
    cols = rng.integers(0, W - r + 1, size=count)

    out = np.empty((count, sampler.patch_size))
    order = np.argsort(idx, kind="stable")
    boundaries = np.flatnonzero(np.diff(idx[order])) + 1
    for group in np.split(order, boundaries):
        img = np.asarray(images[int(idx[group[0]])], dtype=np.float64)
        for k in group:
            crop = img[:, rows[k]:rows[k] + r, cols[k]:cols[k] + r]
            out[k] = crop.reshape(-1)
    return out


def normalize_patches(X, var_floor=DEFAULT_VAR_FLOOR):
    """Per-row brightness and contrast normalization.

    Subtracts each row's mean and divides by sqrt(var + var_floor), where
    var is the unbiased sample variance of the row.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[-1]
    centered = X - X.mean(axis=-1, keepdims=True)
    if n > 1:
        var = np.sum(centered**2, axis=-1, keepdims=True) / (n - 1)
    else:
        var = np.zeros(X.shape[:-1] + (1,))
    return centered / np.sqrt(var + var_floor)


def normalize_patch(x, var_floor=DEFAULT_VAR_FLOOR):
    return normalize_patches(np.asarray(x, dtype=np.float64)[None, :], var_floor)[0]


def fit_whitening(patches, epsilon=DEFAULT_EPSILON):
    """ZCA whitening from the eigendecomposition of the sample covariance.

    transform = U (D + eps I)^(-1/2) U', with U D U' the covariance of the
    mean-subtracted patches (normalized by T - 1).
    """
    X = np.asarray(patches, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 patches to fit whitening")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (X.shape[0] - 1)
    D, U = np.linalg.eigh(cov)
    D = np.clip(D, 0.0, None)
    with np.errstate(divide="ignore"):
        scale = 1.0 / np.sqrt(D + epsilon)
    # epsilon = 0 with a rank-deficient covariance: leave null directions at 0
    scale[~np.isfinite(scale)] = 0.0
    transform = (U * scale) @ U.T
    transform = 0.5 * (transform + transform.T)
    return WhiteningTransform(mean=mean, transform=transform, epsilon=float(epsilon))


def apply_whitening(wt, x):
    """transform @ (x - mean) for one patch or each row of a 2-D array."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != wt.n:
        raise ValueError(f"patch length {x.shape[-1]} does not match whitening size {wt.n}")
    # transform is symmetric, so row-vector form is (x - mean) @ transform
    return (x - wt.mean) @ wt.transform
