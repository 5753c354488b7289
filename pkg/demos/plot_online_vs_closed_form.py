"""
Online learning reaches the batch solution
==========================================

The network never stores its inputs.  Each patch moves the feed-forward
weights W towards the input and the lateral weights M towards the output
co-activity, with a per-neuron step 1 / sum of past squared activity.  After
T patches the weights equal the batch least-squares solution computed from
all T (input, code) pairs at once.

This script trains a small network, compares the two weight sets as
training proceeds, and tracks the similarity-matching objective
||X'X - Y'Y|| on a held-out batch.
"""

import matplotlib.pyplot as plt
import numpy as np

from hahn.core import NetworkConfig, batch_weights_oracle, global_objective, infer_batch, init_network, train

rng = np.random.default_rng(0)

# Inputs: 8-dimensional data concentrated near a 3-dimensional subspace.
basis = rng.standard_normal((3, 8))
X = rng.standard_normal((3000, 3)) @ basis + 0.1 * rng.standard_normal((3000, 8))
held_out = X[-500:]
X = X[:-500]

# With y_hat_init = 0 the recursion is an exact running average.
config = NetworkConfig(n=8, m=6, y_hat_init=0.0, seed=1)
state, codes = train(init_network(config), X, config, return_codes=True)

###############################################################################
# Compare against the batch solution at several prefix lengths.

lengths = [50, 100, 200, 500, 1000, 2500]
gaps = []
for T in lengths:
    partial = train(init_network(config), X[:T], config)
    W, M = batch_weights_oracle(codes[:T], X[:T])
    gaps.append(max(np.abs(partial.W - W).max(), np.abs(partial.M - M).max()))
    print(f"T={T:5d}: max |online - batch| = {gaps[-1]:.2e}")

###############################################################################
# The objective on held-out data falls as the network learns.

curve = []
for T in lengths:
    partial = train(init_network(config), X[:T], config)
    Y = infer_batch(partial, held_out, sweeps=50)
    curve.append(np.sqrt(global_objective(held_out.T, Y.T)))

fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
a.semilogy(lengths, np.maximum(gaps, 1e-17), "o-")
a.set(xlabel="patches seen", ylabel="max weight difference", title="online vs batch weights")
b.plot(lengths, curve, "o-")
b.set(xlabel="patches seen", ylabel="||X'X - Y'Y||", title="held-out similarity mismatch")
fig.tight_layout()
fig.savefig("online_vs_closed_form.png", dpi=120)
print("wrote online_vs_closed_form.png")
