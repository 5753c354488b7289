"""
A bank of receptive fields
==========================

Instead of going deeper, several single-layer networks can look at the
image through windows of different sizes.  Each is trained on its own
patches; their quadrant-pooled codes are concatenated into one feature
vector.  Here we compare every single resolution against the bank of all
three at the same total number of neurons.
"""

import matplotlib.pyplot as plt

from _data import demo_data
from hahn.classifier import evaluate, fit_svm
from hahn.encoder import LayerSpec, train_layer
from hahn.pipeline import bank_features, layer_features

train_set, test_set, source = demo_data()
print(f"data: {source}, {len(train_set)} train / {len(test_set)} test images")


def score(F, G):
    return evaluate(fit_svm(F, train_set.labels), G, test_set.labels)


labels, accs = [], []
for rf in (4, 6, 8):
    layer = train_layer(train_set.images, LayerSpec(rf, 3, 48), 20000, seed=rf)
    labels.append(f"{rf}x{rf}")
    accs.append(score(layer_features(layer, train_set.images), layer_features(layer, test_set.images)))
    print(f"rf {rf}, 48 neurons: {accs[-1]:.3f}")

###############################################################################
# The bank splits the same 48 neurons across three resolutions.

bank = [train_layer(train_set.images, LayerSpec(rf, 3, 16), 20000, seed=rf) for rf in (4, 6, 8)]
labels.append("4+6+8")
accs.append(score(bank_features(bank, train_set.images), bank_features(bank, test_set.images)))
print(f"bank of 3 x 16 neurons: {accs[-1]:.3f}")

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.bar(labels, accs)
ax.set(ylabel="test accuracy", ylim=(0, 1), title="receptive field sizes")
fig.tight_layout()
fig.savefig("multi_resolution.png", dpi=120)
print("wrote multi_resolution.png")
