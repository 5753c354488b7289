"""
Stacking a second layer
=======================

The second network reads 2x2 windows of the first layer's feature map
after 2x2 average pooling.  Its inputs are normalized and whitened with a
transform fitted on those pooled maps, just as the first layer's are on
pixels.  Both layers are quadrant-pooled: phi1 from the first map, phi2 from
the second, and the classifier may use either or their concatenation.
"""

import matplotlib.pyplot as plt

from _data import demo_data
from hahn.classifier import evaluate, fit_svm
from hahn.encoder import LayerSpec, PooledMaps, train_layer
from hahn.pipeline import select_features, two_layer_features

train_set, test_set, source = demo_data()
print(f"data: {source}, {len(train_set)} train / {len(test_set)} test images")

layer1 = train_layer(train_set.images, LayerSpec(6, 3, 32), 20000, seed=0)
layer2 = train_layer(PooledMaps(layer1, train_set.images), LayerSpec(2, 32, 32, var_floor=1e-3),
                     10000, seed=1)

F1, F2 = two_layer_features(layer1, layer2, train_set.images)
G1, G2 = two_layer_features(layer1, layer2, test_set.images)
print(f"phi1 has {F1.shape[1]} features, phi2 has {F2.shape[1]}")

###############################################################################
# Score each feature set with the same linear classifier.

choices = ["phi1", "phi2", "phi1+phi2"]
accs = []
for which in choices:
    model = fit_svm(select_features(F1, F2, which), train_set.labels)
    accs.append(evaluate(model, select_features(G1, G2, which), test_set.labels))
    print(f"{which:10s} test accuracy {accs[-1]:.3f}")

fig, ax = plt.subplots(figsize=(4.5, 3.5))
ax.bar(choices, accs)
ax.set(ylabel="test accuracy", ylim=(0, 1), title="two-layer features")
fig.tight_layout()
fig.savefig("two_layer.png", dpi=120)
print("wrote two_layer.png")
