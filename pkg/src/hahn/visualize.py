import math

import numpy as np
from PIL import Image


def filter_grid(W, receptive_field, channels, scale=8):
    """Tile the rows of ``W`` as (rf, rf, channels) images in a square grid.

    Each tile is linearly rescaled to [0, 255] on its own and enlarged by
    ``scale`` with nearest-neighbour repetition.  Returns a uint8 array of
    shape (rows*rf*scale, cols*rf*scale, channels).
    """
    W = np.asarray(W, dtype=np.float64)
    m, n = W.shape
    rf = receptive_field
    if n != channels * rf * rf:
        raise ValueError(f"rows of length {n} cannot be {channels}x{rf}x{rf} filters")
    cols = math.ceil(math.sqrt(m))
    rows = math.ceil(m / cols)
    side = rf * scale
    grid = np.zeros((rows * side, cols * side, channels), dtype=np.uint8)
    for k in range(m):
        tile = W[k].reshape(channels, rf, rf).transpose(1, 2, 0)
        lo, hi = tile.min(), tile.max()
        tile = (tile - lo) / (hi - lo) * 255 if hi > lo else np.zeros_like(tile)
        tile = np.repeat(np.repeat(tile, scale, axis=0), scale, axis=1)
        r, c = divmod(k, cols)
        grid[r * side:(r + 1) * side, c * side:(c + 1) * side] = np.round(tile).astype(np.uint8)
    return grid


def save_filter_grid(layer, path, scale=8):
    spec = layer.spec
    grid = filter_grid(layer.state.W, spec.receptive_field, spec.channels, scale)
    img = Image.fromarray(grid[..., 0] if spec.channels == 1 else grid)
    img.save(path, format="PNG")
    return grid.shape
