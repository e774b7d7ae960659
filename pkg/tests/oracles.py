"""Reference computations kept independent of the code paths they check."""
import itertools

import numpy as np

from ahsc.nn import Model


def ce_loss_plain(weights, biases, X, y):
    """Cross-entropy by an explicit per-sample loop, in the dtype of the parameters."""
    L = len(weights)
    total = 0
    for x, t in zip(X, y):
        a = np.asarray(x, dtype=weights[0].dtype)
        for l, (W, b) in enumerate(zip(weights, biases)):
            z = W @ a + b
            a = z if l == L - 1 else np.where(z > 0, z, 0)
        z = a - a.max()
        total += -(z[t] - np.log(np.sum(np.exp(z))))
    return total / len(y)


def central_diff_grad(model: Model, X, y, h=1e-5):
    """Central differences of ``ce_loss_plain`` for every parameter, in Model layout.

    Evaluated in extended precision so roundoff stays far below the
    ``O(h^2)`` truncation error.
    """
    ws = [W.astype(np.longdouble) for W in model.weights]
    bs = [b.astype(np.longdouble) for b in model.biases]
    Xl = np.asarray(X, dtype=np.longdouble)
    hl = np.longdouble(h)
    dW, db = [], []
    for l in range(model.L):
        for params, out in ((ws[l], dW), (bs[l], db)):
            g = np.zeros(params.shape)
            for idx in np.ndindex(params.shape):
                orig = params[idx]
                params[idx] = orig + hl
                fp = ce_loss_plain(ws, bs, Xl, y)
                params[idx] = orig - hl
                fm = ce_loss_plain(ws, bs, Xl, y)
                params[idx] = orig
                g[idx] = float((fp - fm) / (2 * hl))
            out.append(g)
    return dW, db


def softmax_regression_hessian(W, b, X, y=None):
    """Closed form ``(1/m) sum_i (diag(p_i) - p_i p_i^T) kron x_i x_i^T`` for row-major ``W`` (k x n)."""
    X = np.asarray(X, dtype=np.float64)
    m = X.shape[0]
    H = np.zeros((W.size, W.size))
    for x in X:
        z = W @ x + b
        p = np.exp(z - z.max())
        p /= p.sum()
        H += np.kron(np.diag(p) - np.outer(p, p), np.outer(x, x))
    return H / m


def auc_pairs(scores, labels):
    """AUC by enumerating every positive/negative pair."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def quad_max_on_ball(H, eps):
    """max of x^T H x / 2 over ||x|| <= eps."""
    return 0.5 * eps**2 * max(0.0, float(np.max(np.linalg.eigvalsh(H))))


def grad_rel_errors(model: Model, X, y, analytic, h=1e-5, abs_below=1e-8):
    """Per-coordinate errors of ``analytic`` (a Gradients) against central differences.

    Relative error ``|a - n| / |a|``; coordinates with ``|a| < abs_below`` use ``|a - n|``.
    """
    dW, db = central_diff_grad(model, X, y, h)
    errs = []
    for ga, gn in zip(list(analytic.dW) + list(analytic.db), dW + db):
        a, n = ga.ravel(), gn.ravel()
        small = np.abs(a) < abs_below
        e = np.abs(a - n)
        e[~small] /= np.abs(a[~small])
        errs.append(e)
    return np.concatenate(errs)
