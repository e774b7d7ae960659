"""Executable checks of the strong-convexity inequalities on quadratics ``f(x) = x^T H x / 2``.

Each check returns a ``CheckReport``; the violation of an inequality
``lhs >= rhs`` is ``max(0, rhs - lhs) / max(|lhs|, |rhs|, 1e-300)`` so slack is
relative.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NotStronglyConvexError
from .linalg import as_symmetric, sym_eig_extremes

SLACK = 1e-12
DECAY_SLACK = 1e-9


@dataclass(frozen=True)
class QuadraticProblem:
    H: np.ndarray
    mu: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        H = as_symmetric(self.H)
        lo, hi = sym_eig_extremes(H, tol=1e-15)
        if lo < -1e-12 * max(abs(hi), 1.0):
            raise ValueError(f"H is not positive semidefinite (lambda_min = {lo!r})")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "mu", max(lo, 0.0))
        object.__setattr__(self, "beta", hi)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def f(self, x) -> float:
        return 0.5 * float(x @ self.H @ x)

    def grad(self, x) -> np.ndarray:
        return self.H @ x

    @classmethod
    def diag(cls, *values):
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @classmethod
    def random_pd(cls, dim, seed, ridge=0.1):
        rng = np.random.default_rng(seed)
        B = rng.standard_normal((dim, dim))
        H = B @ B.T + ridge * np.eye(dim)
        return cls((H + H.T) / 2.0)


@dataclass(frozen=True)
class CheckReport:
    check: str
    points: int
    max_violation: float
    passed: bool
    slack: float
    witness: Optional[list] = None  # the worst point (or pair / step) when a check fails

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "points": self.points,
            "max_violation": self.max_violation,
            "passed": self.passed,
            "slack": self.slack,
            "witness": self.witness,
        }


def _violation(lhs, rhs):
    """Relative amount by which ``lhs >= rhs`` fails (0 if it holds)."""
    return max(0.0, rhs - lhs) / max(abs(lhs), abs(rhs), 1e-300)


def _report(name, violations, witnesses, slack):
    if not violations:
        return CheckReport(name, 0, 0.0, True, slack)
    worst = int(np.argmax(violations))
    mv = float(violations[worst])
    passed = mv <= slack
    return CheckReport(name, len(violations), mv, passed, slack, None if passed else witnesses[worst])


def _require_sc(p: QuadraticProblem):
    if not p.mu > 0:
        raise NotStronglyConvexError("problem has mu = 0; the inequality needs strong convexity")


def check_pl(p: QuadraticProblem, points, slack=SLACK) -> CheckReport:
    """``||grad f(x)||^2 / 2 >= mu (f(x) - f*)``."""
    _require_sc(p)
    viol, wit = [], []
    for x in points:
        x = np.asarray(x, dtype=np.float64)
        g = p.grad(x)
        viol.append(_violation(0.5 * float(g @ g), p.mu * p.f(x)))
        wit.append(x.tolist())
    return _report("pl", viol, wit, slack)


def check_grad_gap(p: QuadraticProblem, pairs, slack=SLACK) -> CheckReport:
    """``||grad f(x) - grad f(y)|| >= mu ||x - y||``."""
    _require_sc(p)
    viol, wit = [], []
    for x, y in pairs:
        x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
        viol.append(_violation(float(np.linalg.norm(p.grad(x) - p.grad(y))), p.mu * float(np.linalg.norm(x - y))))
        wit.append([x.tolist(), y.tolist()])
    return _report("grad_gap", viol, wit, slack)


def check_cocoercivity(p: QuadraticProblem, pairs, slack=SLACK) -> CheckReport:
    """``(grad f(x) - grad f(y))^T (x - y) <= ||grad f(x) - grad f(y)||^2 / mu``."""
    _require_sc(p)
    viol, wit = [], []
    for x, y in pairs:
        x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
        dg = p.grad(x) - p.grad(y)
        viol.append(_violation(float(dg @ dg) / p.mu, float(dg @ (x - y))))
        wit.append([x.tolist(), y.tolist()])
    return _report("cocoercivity", viol, wit, slack)


def check_sandwich(p: QuadraticProblem, points, slack=SLACK) -> CheckReport:
    """``||grad f(x)||^2 / (2 mu) >= f(x) - f* >= mu ||x - x*||^2 / 2``; both sides checked."""
    _require_sc(p)
    viol, wit = [], []
    for x in points:
        x = np.asarray(x, dtype=np.float64)
        g = p.grad(x)
        gap = p.f(x)
        upper = float(g @ g) / (2.0 * p.mu)
        lower = 0.5 * p.mu * float(x @ x)
        viol.append(max(_violation(upper, gap), _violation(gap, lower)))
        wit.append(x.tolist())
    return _report("sandwich", viol, wit, slack)


def gd_trace(p: QuadraticProblem, x0, steps) -> list:
    """``f(x_k)`` for ``k = 0..steps`` under gradient descent with step ``1/beta``."""
    x = np.asarray(x0, dtype=np.float64)
    vals = [p.f(x)]
    for _ in range(steps):
        x = x - p.grad(x) / p.beta
        vals.append(p.f(x))
    return vals


def gd_convergence(p: QuadraticProblem, x0, steps, slack=SLACK) -> CheckReport:
    """``f(x_k) - f* <= (1 - mu/beta)^k (f(x_0) - f*)`` for every ``k <= steps``."""
    if not p.beta > 0:
        raise ValueError("need beta > 0")
    vals = gd_trace(p, x0, steps)
    rate = 1.0 - p.mu / p.beta
    viol = [_violation(rate**k * vals[0], v) for k, v in enumerate(vals)]
    return _report("gd_convergence", viol, [[k] for k in range(len(vals))], slack)


def epoch_benefit(history, mu, alpha, f0_minus_fstar, slack=DECAY_SLACK) -> CheckReport:
    """Per-step improvement ``f(x_t) - f(x_{t+1}) <= alpha mu exp(-alpha mu t) (f_0 - f*)``.

    This is the magnitude reading of the decaying-benefit bound. It is
    saturated at ``t = 0`` for isotropic ``H`` with ``alpha = 1/beta`` and is
    violated at ``t = 0`` by anisotropic quadratics, where the slowest
    eigen-direction alone already improves by ``(2 alpha mu - (alpha mu)^2)``
    times its share of the gap. ``epoch_benefit_envelope`` checks the weaker
    bound that does hold.
    """
    am = alpha * mu
    viol = []
    for t in range(len(history) - 1):
        gain = history[t] - history[t + 1]
        viol.append(_violation(am * math.exp(-am * t) * f0_minus_fstar, gain))
    return _report("epoch_benefit", viol, [[t] for t in range(len(viol))], slack)


def epoch_benefit_envelope(history, mu, alpha, f0_minus_fstar, slack=DECAY_SLACK) -> CheckReport:
    """Per-step improvement ``<= exp(-alpha mu t) (f_0 - f*)``, which follows from the linear rate."""
    am = alpha * mu
    viol = []
    for t in range(len(history) - 1):
        gain = history[t] - history[t + 1]
        viol.append(_violation(math.exp(-am * t) * f0_minus_fstar, gain))
    return _report("epoch_benefit_envelope", viol, [[t] for t in range(len(viol))], slack)


def sample_points(dim, n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    pts = [np.zeros(dim)] + [scale * rng.standard_normal(dim) for _ in range(n - 1)]
    return pts


def sample_pairs(dim, n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    pairs = [(np.ones(dim), np.ones(dim))]
    pairs += [(scale * rng.standard_normal(dim), scale * rng.standard_normal(dim)) for _ in range(n - 1)]
    return pairs


def run_suite(problems: dict, n_points=50, steps=100, seed=0, decay=False) -> list:
    """Inequality and rate checks on every named problem; ``decay`` adds the two per-step decay checks.

    Returns ``(problem_name, CheckReport)`` pairs.
    """
    out = []
    for name, p in problems.items():
        pts = sample_points(p.dim, n_points, seed)
        pairs = sample_pairs(p.dim, n_points, seed + 1)
        x0 = np.ones(p.dim)
        trace = gd_trace(p, x0, steps)
        alpha = 1.0 / p.beta
        out.append((name, check_pl(p, pts)))
        out.append((name, check_grad_gap(p, pairs)))
        out.append((name, check_cocoercivity(p, pairs)))
        out.append((name, check_sandwich(p, pts)))
        out.append((name, gd_convergence(p, x0, steps)))
        if decay:
            out.append((name, epoch_benefit(trace, p.mu, alpha, trace[0])))
            out.append((name, epoch_benefit_envelope(trace, p.mu, alpha, trace[0])))
    return out


def default_problems(seed=0) -> dict:
    return {
        "identity": QuadraticProblem(np.eye(4)),
        "diag_1_4": QuadraticProblem.diag(1.0, 4.0),
        "random_pd_8": QuadraticProblem.random_pd(8, seed),
    }
