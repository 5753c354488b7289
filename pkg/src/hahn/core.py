"""Hebbian/anti-Hebbian similarity-matching network.

A layer of ``m`` neurons receives an ``n``-dimensional input through
feed-forward weights ``W`` (m x n) and inhibits itself through lateral
weights ``M`` (m x m, zero diagonal).  For each input the nonnegative code
is the fixed point of

    y_i = max(W_i . x - M_i . y, 0)

found by cyclic coordinate descent.  After every sample the weights are
updated with local rules that keep them equal to normalized running
correlations:

    Yhat_i <- Yhat_i + y_i**2
    W_ij   <- W_ij + y_i * (x_j - W_ij * y_i) / Yhat_i
    M_ij   <- M_ij + y_i * (y_j - M_ij * y_i) / Yhat_i     (i != j)
"""

from dataclasses import dataclass

import numba
import numpy as np

DEFAULT_Y_HAT_INIT = 1e-3


@dataclass(frozen=True)
class NetworkConfig:
    """Size and solver settings of one network.

    ``y_hat_init`` is the starting cumulative activity of every neuron.
    Setting it to 0 skips the update of a neuron until it first fires,
    which makes the recursive weights equal the closed-form ratios exactly.
    """

    n: int
    m: int
    train_sweeps: int = 50
    infer_sweeps: int = 10
    cd_tolerance: float = 1e-6
    seed: int = 0
    y_hat_init: float = DEFAULT_Y_HAT_INIT

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"n and m must be >= 1, got n={self.n}, m={self.m}")
        if self.train_sweeps < 1 or self.infer_sweeps < 1:
            raise ValueError("sweep caps must be >= 1")
        if not self.cd_tolerance > 0:
            raise ValueError("cd_tolerance must be > 0")
        if self.y_hat_init < 0:
            raise ValueError("y_hat_init must be >= 0")


@dataclass
class NetworkState:
    W: np.ndarray
    M: np.ndarray
    y_hat: np.ndarray
    t: int = 0

    @property
    def n(self):
        return self.W.shape[1]

    @property
    def m(self):
        return self.W.shape[0]

    def copy(self):
        return NetworkState(self.W.copy(), self.M.copy(), self.y_hat.copy(), self.t)

    def permuted(self, perm):
        """Return the state with neurons relabelled by ``perm``."""
        perm = np.asarray(perm)
        return NetworkState(
            self.W[perm], self.M[np.ix_(perm, perm)], self.y_hat[perm], self.t
        )


def init_network(config):
    """Unit-norm Gaussian feed-forward rows, no lateral inhibition."""
    rng = np.random.default_rng(config.seed)
    W = rng.standard_normal((config.m, config.n))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    return NetworkState(
        W=W,
        M=np.zeros((config.m, config.m)),
        y_hat=np.full(config.m, float(config.y_hat_init)),
        t=0,
    )


# ---------------------------------------------------------------------------
# compiled kernels
#
# The solver keeps h = M @ y up to date incrementally, so a coordinate that
# does not move costs O(1) and one that does costs O(m).  Sparse codes make
# this much cheaper than recomputing every dot product.


@numba.njit(cache=True)
def _cd_solve(b, M, sweeps, tol, y, h):
    m = b.shape[0]
    for k in range(m):
        y[k] = 0.0
        h[k] = 0.0
    for s in range(sweeps):
        for i in range(m):
            v = b[i] - h[i]
            if v < 0.0:
                v = 0.0
            d = v - y[i]
            if d != 0.0:
                y[i] = v
                for k in range(m):
                    h[k] += M[k, i] * d
        # converged when another update would move no coordinate by tol
        residual = 0.0
        for i in range(m):
            v = b[i] - h[i]
            if v < 0.0:
                v = 0.0
            r = abs(v - y[i])
            if r > residual:
                residual = r
        if residual < tol:
            return s + 1
    return sweeps


@numba.njit(cache=True)
def _cd_solve_batch(B, M, sweeps, tol, Y):
    P, m = B.shape
    h = np.empty(m)
    used = 0
    for p in range(P):
        used += _cd_solve(B[p], M, sweeps, tol, Y[p], h)
    return used


@numba.njit(cache=True)
def _train_kernel(W, M, y_hat, X, sweeps, tol, codes):
    T, n = X.shape
    m = W.shape[0]
    b = np.empty(m)
    h = np.empty(m)
    for t in range(T):
        x = X[t]
        y = codes[t]
        for i in range(m):
            acc = 0.0
            for j in range(n):
                acc += W[i, j] * x[j]
            b[i] = acc
        _cd_solve(b, M, sweeps, tol, y, h)
        for i in range(m):
            yi = y[i]
            yh = y_hat[i] + yi * yi
            y_hat[i] = yh
            if yi == 0.0 or yh <= 0.0:
                continue
            for j in range(n):
                W[i, j] += yi * (x[j] - W[i, j] * yi) / yh
            for j in range(m):
                if j != i:
                    M[i, j] += yi * (y[j] - M[i, j] * yi) / yh


# ---------------------------------------------------------------------------


def _check_patch(state, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != state.n:
        raise ValueError(f"patch has shape {x.shape}, network expects ({state.n},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("patch contains non-finite values")
    return x


def infer(state, x, sweeps=10, tol=1e-6, return_sweeps=False):
    """Nonnegative code of ``x`` with the weights held fixed.

    Cyclic coordinate descent over neurons 0..m-1, starting from y = 0.
    Stops after ``sweeps`` passes, or once re-applying the update to any
    coordinate would move it by less than ``tol``.
    """
    x = _check_patch(state, x)
    b = state.W @ x
    y = np.empty(state.m)
    used = _cd_solve(b, state.M, int(sweeps), float(tol), y, np.empty(state.m))
    if return_sweeps:
        return y, used
    return y


def infer_batch(state, X, sweeps=10, tol=1e-6):
    """Row-wise :func:`infer` for a (P, n) array of patches."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != state.n:
        raise ValueError(f"patches have shape {X.shape}, network expects (P, {state.n})")
    if not np.all(np.isfinite(X)):
        raise ValueError("patches contain non-finite values")
    B = np.ascontiguousarray(X @ state.W.T)
    Y = np.empty_like(B)
    _cd_solve_batch(B, state.M, int(sweeps), float(tol), Y)
    return Y


def fixed_point_residual(state, x, y):
    """max_i |y_i - max(W_i . x - M_i . y, 0)|, computed directly."""
    target = np.maximum(state.W @ x - state.M @ y, 0.0)
    return np.max(np.abs(y - target))


def hebbian_update(state, x, y):
    """Apply the local weight updates for one (patch, code) pair.

    The cumulative activity is updated first; the W and M updates divide
    by the new value and use the old weights on the right-hand side.
    Neurons with y_i = 0 are left untouched.  Returns a new state.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    y_hat = state.y_hat + y**2
    W = state.W.copy()
    M = state.M.copy()
    active = (y != 0.0) & (y_hat > 0.0)
    if np.any(active):
        ya = y[active, None]
        yh = y_hat[active, None]
        W[active] += ya * (x[None, :] - W[active] * ya) / yh
        M[active] += ya * (y[None, :] - M[active] * ya) / yh
        np.fill_diagonal(M, 0.0)
    return NetworkState(W, M, y_hat, state.t + 1)


def train_step(state, x, config):
    """One online step: infer the code, then update the weights.

    Returns the new state and the code.
    """
    x = _check_patch(state, x)
    y = infer(state, x, config.train_sweeps, config.cd_tolerance)
    return hebbian_update(state, x, y), y


def train(state, patches, config, return_codes=False):
    """Run :func:`train_step` over the rows of ``patches`` in order.

    Compiled equivalent of a Python loop over ``train_step``; the input
    state is left untouched.
    """
    X = np.ascontiguousarray(patches, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != state.n:
        raise ValueError(f"patches have shape {X.shape}, network expects (T, {state.n})")
    if not np.all(np.isfinite(X)):
        raise ValueError("patches contain non-finite values")
    out = state.copy()
    codes = np.zeros((X.shape[0], state.m))
    _train_kernel(
        out.W, out.M, out.y_hat, X,
        int(config.train_sweeps), float(config.cd_tolerance), codes,
    )
    out.t += X.shape[0]
    if return_codes:
        return out, codes
    return out


def batch_weights_oracle(codes, patches):
    """Closed-form W and M from a full history of codes and patches.

    W_ij = sum_t y_i x_j / sum_t y_i**2 and M_ij the same with y_j in place
    of x_j, diagonal zero.
    """
    Y = np.asarray(codes, dtype=np.float64)
    X = np.asarray(patches, dtype=np.float64)
    if Y.ndim != 2 or X.ndim != 2 or Y.shape[0] != X.shape[0] or Y.shape[0] == 0:
        raise ValueError("codes and patches must be nonempty (T, m) and (T, n) arrays")
    energy = np.sum(Y**2, axis=0)
    if np.any(energy <= 0):
        dead = np.flatnonzero(energy <= 0).tolist()
        raise ValueError(f"neurons {dead} never fired; closed-form weights undefined")
    W = (Y.T @ X) / energy[:, None]
    M = (Y.T @ Y) / energy[:, None]
    np.fill_diagonal(M, 0.0)
    return W, M


def global_objective(X, Y):
    """Squared Frobenius distance between the Gram matrices X'X and Y'Y.

    ``X`` is n x T and ``Y`` is m x T (samples in columns).
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"sample counts differ: {X.shape[1]} vs {Y.shape[1]}")
    D = X.T @ X - Y.T @ Y
    return float(np.sum(D * D))
