"""Shared data helper for the demo scripts."""

import os

from hahn.dataset import load_cifar10, subset, synthetic_images


def demo_data(train=2000, test=500, seed=0):
    """A CIFAR-10 subset when $HAHN_DATA_DIR points at it, else synthetic gratings."""
    if os.environ.get("HAHN_DATA_DIR"):
        train_set, test_set = load_cifar10()
        return subset(train_set, train, seed), subset(test_set, test, seed), "CIFAR-10"
    return (synthetic_images(train // 5, classes=4, seed=seed, noise=150),
            synthetic_images(test // 5, classes=4, seed=seed + 1, noise=150), "synthetic gratings")
