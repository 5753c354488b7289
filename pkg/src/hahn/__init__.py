"""Online feature learning with Hebbian/anti-Hebbian similarity-matching networks."""

from .classifier import LinearModel, evaluate, fit_svm, predict
from .core import (
    NetworkConfig,
    NetworkState,
    batch_weights_oracle,
    global_objective,
    infer,
    infer_batch,
    init_network,
    train,
    train_step,
)
from .dataset import ImageSet, load_cifar10, load_cifar_batch, subset
from .encoder import (
    Layer,
    LayerSpec,
    PooledMaps,
    avg_pool_2x2,
    encode_image,
    encode_multi_resolution,
    encode_two_layer,
    fit_layer,
    quadrant_pool,
    train_layer,
)
from .pipeline import bank_features, layer_features, two_layer_features
from .persistence import ModelBundle, export_features, load_bundle, save_bundle
from .preprocessing import (
    PatchSampler,
    WhiteningTransform,
    apply_whitening,
    fit_whitening,
    normalize_patch,
    sample_patches,
)

__version__ = "0.1.0"
