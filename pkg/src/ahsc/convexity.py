"""Strong-convexity proxy, its mini-batch maximum, and the numerical oracles around it.

The proxy for a batch is ``||A|| / (m_b * ||W_L||)`` where ``A`` holds the
penultimate activations of the batch and ``W_L`` is the softmax layer's
weight matrix (both Frobenius norms). It is a ranking heuristic; the
finite-difference Hessian of the loss restricted to ``W_L`` is the quantity
it stands in for.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import spearmanr

from .data import Batch, Dataset, batches
from .errors import ArchitectureError, DegenerateModelError, NumericError, SizeError
from .linalg import frobenius_norm
from .nn import LOG_FLOOR, Model, backward, forward, log_softmax, loss_ce, penultimate

ORACLE_MAX_PARAMS = 512


@dataclass(frozen=True)
class ConvexityRecord:
    config_id: Optional[int]
    per_batch_proxies: tuple
    mu_max: float
    discarded: bool


@dataclass(frozen=True)
class SharpnessParams:
    epsilon: float = 1e-3
    ascent_iters: int = 10
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.ascent_iters < 1 or self.restarts < 1:
            raise ValueError("ascent_iters and restarts must be >= 1")


@dataclass(frozen=True)
class CoveringBoundInput:
    m: int
    t: float
    beta: float
    log_cover: float

    def __post_init__(self):
        if self.m < 1 or self.t < 0 or not self.beta > 0:
            raise ValueError("need m >= 1, t >= 0 and beta > 0")


def _features(batch):
    return batch.X if isinstance(batch, Batch) else np.asarray(batch, dtype=np.float64)


def _last_layer_norm(model: Model, denominator: str) -> float:
    W = model.weights[-1]
    if denominator == "full":
        norm = frobenius_norm(W)
    elif denominator == "column":
        # weights into output unit j; the smallest ratio uses the largest of them
        norm = max(math.sqrt(math.fsum((row * row).tolist())) for row in W)
    else:
        raise ValueError(f"denominator must be 'full' or 'column', got {denominator!r}")
    if norm == 0.0:
        raise DegenerateModelError("last-layer weights are identically zero")
    return norm


def _check_depth(model: Model):
    if model.L < 2:
        raise ArchitectureError("the proxy needs at least one hidden layer (L >= 2)")


def sc_proxy_batch(model: Model, batch, denominator="full") -> float:
    """Proxy value ``||A|| / (m_b ||W_L||)`` for one batch (a ``Batch`` or a feature array)."""
    _check_depth(model)
    A = penultimate(model, _features(batch))
    if A.shape[0] == 0:
        raise ValueError("empty batch")
    return frobenius_norm(A) / A.shape[0] / _last_layer_norm(model, denominator)


def mu_max(model: Model, data: Dataset, batch_size: int, config_id=None, denominator="full") -> ConvexityRecord:
    """Maximum proxy over contiguous, unshuffled batches; ``mu_max <= 0`` marks the config discarded."""
    _check_depth(model)
    wnorm = _last_layer_norm(model, denominator)
    A = penultimate(model, data.features)
    parts = batches(data, batch_size)
    if np.all(np.isfinite(A)):
        proxies = tuple(frobenius_norm(A[b.indices]) / b.size / wnorm for b in parts)
    else:
        proxies = (math.nan,) * len(parts)
    mu = max(proxies)
    # NaN also lands here: a diverged probe is not a candidate
    return ConvexityRecord(config_id, proxies, mu, not mu > 0)


def hessian_fd(f: Callable, x0, eps=1e-4, probe: Optional[Callable] = None) -> np.ndarray:
    """Forward-difference Hessian of a scalar field.

    ``H[i, j] = (f(x + e_i h + e_j h) - f(x + e_i h) - f(x + e_j h) + f(x)) / h^2``,
    symmetrized. ``probe(ii, jj)``, when given, must return ``f`` at
    ``x0 + eps*e_ii + eps*e_jj`` for index arrays (``jj == -1`` meaning no
    second shift); it lets callers vectorize the ``O(n^2)`` evaluations.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    n = x0.size
    if probe is None:

        def probe(ii, jj):
            out = []
            for i, j in zip(ii, jj):
                x = x0.copy()
                x[i] += eps
                if j >= 0:
                    x[j] += eps
                out.append(f(x))
            return np.asarray(out)

    f0 = f(x0)
    if not math.isfinite(float(f0)):
        raise NumericError("non-finite function value", where="x0")
    idx = np.arange(n)
    single = probe(idx, np.full(n, -1))
    bad = np.flatnonzero(~np.isfinite(single))
    if bad.size:
        raise NumericError("non-finite function value", where=f"probe ({bad[0]},)")
    iu, ju = np.triu_indices(n)
    pair = probe(iu, ju)
    bad = np.flatnonzero(~np.isfinite(pair))
    if bad.size:
        raise NumericError("non-finite function value", where=f"probe ({iu[bad[0]]}, {ju[bad[0]]})")
    # differencing runs in the precision the callee returns
    H = np.empty((n, n), dtype=np.result_type(single, pair, f0))
    H[iu, ju] = (pair - single[iu] - single[ju] + f0) / (eps * eps)
    H[ju, iu] = H[iu, ju]
    return ((H + H.T) / 2).astype(np.float64)


def _mean_nll(log_p, floor):
    # extended-precision mean keeps the O(1/eps^2)-amplified differences independent of sample order
    return -np.maximum(log_p, floor).astype(np.longdouble).mean(axis=-1)


def _last_layer_loss_probe(A, W, b, y, eps, chunk_cells=1_000_000):
    """Vectorized loss at ``W + eps*E_i + eps*E_j`` for flattened last-layer indices."""
    m, h = A.shape
    Z = A @ W.T + b
    rows = np.arange(m)
    floor = math.log(LOG_FLOOR)

    def probe(ii, jj):
        ii = np.asarray(ii)
        jj = np.asarray(jj)
        out = np.empty(len(ii), dtype=np.longdouble)
        step = max(1, chunk_cells // max(1, m * Z.shape[1]))
        for s in range(0, len(ii), step):
            ci, fi = np.divmod(ii[s : s + step], h)
            cj, fj = np.divmod(jj[s : s + step], h)
            P = len(ci)
            Zp = np.broadcast_to(Z, (P,) + Z.shape).copy()
            ar = np.arange(P)
            Zp[ar, :, ci] += eps * A[:, fi].T
            has_j = jj[s : s + step] >= 0
            if np.any(has_j):
                sel = ar[has_j]
                Zp[sel, :, cj[has_j]] += eps * A[:, fj[has_j]].T
            s_ = Zp - Zp.max(axis=2, keepdims=True)
            lp = s_ - np.log(np.exp(s_).sum(axis=2, keepdims=True))
            out[s : s + P] = _mean_nll(lp[:, rows, y], floor)
        return out

    return probe


def last_layer_loss_fn(model: Model, batch: Batch):
    """Loss as a function of the flattened softmax-layer weights, everything else frozen."""
    A = penultimate(model, batch.X)
    b = model.biases[-1]
    y = batch.y
    shape = model.weights[-1].shape

    def f(w):
        z = A @ np.asarray(w).reshape(shape).T + b
        return _mean_nll(log_softmax(z)[np.arange(len(y)), y], math.log(LOG_FLOOR))

    return f


def last_layer_hessian(model: Model, batch: Batch, eps=1e-4, limit=ORACLE_MAX_PARAMS) -> np.ndarray:
    W = model.weights[-1]
    if W.size > limit:
        raise SizeError(f"last layer has {W.size} weights (width {W.shape[1]}, {W.shape[0]} classes); oracle limit is {limit}")
    A = penultimate(model, batch.X)
    f = last_layer_loss_fn(model, batch)
    probe = _last_layer_loss_probe(A, W, model.biases[-1], batch.y, eps)
    return hessian_fd(f, W.ravel(), eps, probe=probe)


def last_layer_hessian_norm(model: Model, batch: Batch, eps=1e-4, limit=ORACLE_MAX_PARAMS) -> float:
    return frobenius_norm(last_layer_hessian(model, batch, eps, limit))


def oracle_mu_max(model: Model, data: Dataset, batch_size: int, eps=1e-4, limit=ORACLE_MAX_PARAMS) -> float:
    """Oracle counterpart of ``mu_max``: the largest last-layer Hessian norm over the same batches."""
    return max(last_layer_hessian_norm(model, b, eps, limit) for b in batches(data, batch_size))


def fd_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def sharpness(loss: Callable, w, params: SharpnessParams = SharpnessParams(), grad: Optional[Callable] = None) -> float:
    """Normalized worst-case loss increase over the Euclidean ball of radius ``epsilon`` around ``w``.

    Projected normalized-gradient ascent from ``restarts`` random points on the
    sphere; the result is a lower bound on the true maximum. ``grad`` defaults
    to central differences.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    eps = params.epsilon
    if grad is None:
        h = eps * 1e-3

        def grad(x):
            return fd_gradient(loss, x, h)

    f0 = float(loss(w))
    best = f0
    rng = np.random.default_rng(params.seed)
    for _ in range(params.restarts):
        d = rng.standard_normal(w.size)
        v = eps * d / np.linalg.norm(d)
        best = max(best, float(loss(w + v)))
        for _ in range(params.ascent_iters):
            g = grad(w + v)
            gn = np.linalg.norm(g)
            if not (gn > 0 and math.isfinite(gn)):
                break
            v = v + eps * g / gn
            vn = np.linalg.norm(v)
            if vn > eps:
                v *= eps / vn
            best = max(best, float(loss(w + v)))
    return max(best - f0, 0.0) / (1.0 + f0)


def model_sharpness(model: Model, data: Dataset, params: SharpnessParams = SharpnessParams()) -> float:
    """Sharpness of the full-data loss in parameter space, using analytic gradients."""

    def loss(vec):
        return loss_ce(forward(model.from_vector(vec), data.features).probs, data.labels)

    def grad(vec):
        mdl = model.from_vector(vec)
        g = backward(mdl, forward(mdl, data.features), data.labels)
        return np.concatenate([p.ravel() for gW, gb in zip(g.dW, g.db) for p in (gW, gb)])

    return sharpness(loss, model.to_vector(), params, grad=grad)


def covering_bound(inp: CoveringBoundInput) -> float:
    """``min(1, exp(-m t^2 / (18 beta^2) + log N))``."""
    expo = -inp.m * inp.t**2 / (18.0 * inp.beta**2) + inp.log_cover
    return 1.0 if expo >= 0 else math.exp(expo)


@dataclass(frozen=True)
class LandscapeGrid:
    coords: np.ndarray
    losses: np.ndarray  # losses[i, j] at coords[i] along dir 1, coords[j] along dir 2

    def rows(self):
        n = len(self.coords)
        for i in range(n):
            for j in range(n):
                yield i, j, float(self.losses[i, j])


def _normalized_direction(model: Model, rng):
    out = []
    for W, b in zip(model.weights, model.biases):
        pair = []
        for p in (W, b):
            d = rng.standard_normal(p.shape)
            dn = np.linalg.norm(d)
            pair.append(d * (np.linalg.norm(p) / dn) if dn > 0 else np.zeros_like(p))
        out.append(pair)
    return out


def landscape_slice(model: Model, data: Dataset, grid_n=21, span=1.0, seed=0) -> LandscapeGrid:
    """Loss on a 2-D slice spanned by two random directions, each rescaled layer by layer
    to the Frobenius norm of the matching parameter block."""
    if grid_n < 3 or grid_n % 2 == 0:
        raise ValueError("grid_n must be odd and >= 3")
    if not span > 0:
        raise ValueError("span must be > 0")
    rng = np.random.default_rng(seed)
    d1 = _normalized_direction(model, rng)
    d2 = _normalized_direction(model, rng)
    coords = np.linspace(-span, span, grid_n)
    coords[grid_n // 2] = 0.0
    losses = np.empty((grid_n, grid_n))
    for i, a in enumerate(coords):
        for j, c in enumerate(coords):
            moved = Model(
                [W + a * u[0] + c * v[0] for W, u, v in zip(model.weights, d1, d2)],
                [b + a * u[1] + c * v[1] for b, u, v in zip(model.biases, d1, d2)],
            )
            losses[i, j] = loss_ce(forward(moved, data.features).probs, data.labels)
    return LandscapeGrid(coords, losses)


def rank_correlation(x, y) -> float:
    """Spearman's rho."""
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two equal-length sequences with at least two entries")
    return float(spearmanr(x, y).statistic)
