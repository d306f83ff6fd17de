"""Maximum-entropy learners trained with BFGS.

The base learner is a two-outcome (logistic) model that predicts one label's
description degree; the meta learner is a softmax model mapping the ``p``
base predictions to a full label distribution. Both minimize a
Kullback-Leibler loss plus a small L2 penalty on the weights (biases are not
penalized).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.blas import dger
from scipy.special import expit, log_expit, logsumexp, xlogy

TARGET_CLIP = 1e-9
PROB_FLOOR = 1e-15


class OptimizationError(RuntimeError):
    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


@dataclass(frozen=True)
class OptimizerConfig:
    gradient_tolerance: float = 1e-6
    max_iterations: int = 200
    l2_penalty: float = 1e-6

    def __post_init__(self):
        if self.gradient_tolerance <= 0 or self.max_iterations <= 0 or self.l2_penalty <= 0:
            raise ValueError("optimizer settings must all be positive")


@dataclass
class BfgsResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


# --------------------------------------------------------------------------
# line search

def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic matching values and slopes at ``a`` and ``b``, or None."""
    d1 = ga + gb - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = gb - ga + 2 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (gb + d2 - d1) / denom
    return t if np.isfinite(t) else None


def strong_wolfe(phi, f0, g0, step=1.0, c1=1e-4, c2=0.9, max_evals=40, max_step=1e10):
    """Find a step satisfying the strong Wolfe conditions.

    ``phi(a)`` returns ``(value, slope, payload)`` along the search ray.
    Non-finite values count as failing sufficient decrease. Returns
    ``(step, value, payload)`` or ``None`` when no acceptable step was found.
    """
    evals = 0

    def armijo_fails(a, fa):
        return not np.isfinite(fa) or fa > f0 + c1 * a * g0

    def zoom(lo, f_lo, g_lo, pay_lo, hi, f_hi, g_hi):
        nonlocal evals
        while evals < max_evals:
            width = hi - lo
            t = None
            if np.isfinite(f_hi) and np.isfinite(g_hi):
                t = _cubic_min(lo, f_lo, g_lo, hi, f_hi, g_hi)
            lo_edge, hi_edge = sorted((lo + 0.1 * width, hi - 0.1 * width))
            if t is None or not lo_edge <= t <= hi_edge:
                t = lo + 0.5 * width
            ft, gt, pay = phi(t)
            evals += 1
            if armijo_fails(t, ft) or ft >= f_lo:
                hi, f_hi, g_hi = t, ft, gt
            else:
                if abs(gt) <= -c2 * g0:
                    return t, ft, pay
                if gt * (hi - lo) >= 0:
                    hi, f_hi, g_hi = lo, f_lo, g_lo
                lo, f_lo, g_lo, pay_lo = t, ft, gt, pay
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        # sufficient decrease without curvature is still progress
        return (lo, f_lo, pay_lo) if lo > 0 else None

    prev, f_prev, g_prev, pay_prev = 0.0, f0, g0, None
    a = step
    while evals < max_evals:
        fa, ga, pay = phi(a)
        evals += 1
        if armijo_fails(a, fa) or (prev > 0 and fa >= f_prev):
            return zoom(prev, f_prev, g_prev, pay_prev, a, fa, ga)
        if abs(ga) <= -c2 * g0:
            return a, fa, pay
        if ga >= 0:
            return zoom(a, fa, ga, pay, prev, f_prev, g_prev)
        prev, f_prev, g_prev, pay_prev = a, fa, ga, pay
        a = min(2.0 * a, max_step)
    return (prev, f_prev, pay_prev) if prev > 0 else None


# --------------------------------------------------------------------------
# BFGS

def bfgs_minimize(objective, x0, cfg=OptimizerConfig()):
    """Minimize ``objective(x) -> (value, gradient)`` with BFGS.

    Stops when the max-norm of the gradient falls below
    ``cfg.gradient_tolerance`` or after ``cfg.max_iterations`` iterations,
    returning the last (and best) accepted iterate.
    """
    x = np.array(x0, dtype=float)
    f, g = objective(x)
    g = np.asarray(g, dtype=float)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise OptimizationError("objective is not finite at the starting point", x)
    n = x.size
    h = np.eye(n, order="F")
    fresh = True
    history = [float(f)]
    converged = False
    it = 0
    while True:
        if np.max(np.abs(g), initial=0.0) <= cfg.gradient_tolerance:
            converged = True
            break
        if it >= cfg.max_iterations:
            break
        d = -h @ g
        slope = float(g @ d)
        if slope >= 0:
            h, fresh = np.eye(n, order="F"), True
            d = -g
            slope = float(g @ d)

        def phi(a):
            xa = x + a * d
            fa, ga = objective(xa)
            return fa, float(np.dot(ga, d)), (xa, np.asarray(ga, dtype=float))

        step = min(1.0, 1.0 / np.linalg.norm(g)) if fresh else 1.0
        found = strong_wolfe(phi, f, slope, step=step)
        if found is None:
            if fresh:
                break
            h, fresh = np.eye(n, order="F"), True
            continue
        _, f_new, (x_new, g_new) = found
        if not np.isfinite(f_new):
            raise OptimizationError("objective became non-finite", x_new)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            if fresh:
                h *= sy / float(y @ y)
            hy = h @ y
            rho = 1.0 / sy
            # H += c s s' - rho (hy s' + s hy') as two in-place rank-1 updates
            c = (sy + float(y @ hy)) * rho * rho
            h = dger(1.0, s, c * s - rho * hy, a=h, overwrite_a=1)
            h = dger(-rho, hy, s, a=h, overwrite_a=1)
            fresh = False
        x, f, g = x_new, f_new, g_new
        history.append(float(f))
        it += 1
    return BfgsResult(x, float(f), g, it, converged, history)


# --------------------------------------------------------------------------
# two-outcome base learner

@dataclass(frozen=True)
class BaseModel:
    weights: np.ndarray
    bias: float
    label_index: int = 0


def base_objective(params, features, targets, l2_penalty):
    """Two-outcome KL loss of a logistic model and its gradient.

    ``params`` is the weight vector followed by the bias.
    """
    z_mat = np.asarray(features, dtype=float)
    t = np.clip(np.asarray(targets, dtype=float), TARGET_CLIP, 1 - TARGET_CLIP)
    w, b = params[:-1], params[-1]
    z = z_mat @ w + b
    log_q, log_1mq = log_expit(z), log_expit(-z)
    loss = np.sum(xlogy(t, t) + xlogy(1 - t, 1 - t) - t * log_q - (1 - t) * log_1mq)
    loss += l2_penalty * float(w @ w)
    r = expit(z) - t
    grad = np.empty_like(params, dtype=float)
    grad[:-1] = z_mat.T @ r + 2 * l2_penalty * w
    grad[-1] = r.sum()
    return float(loss), grad


def train_base(features, targets, cfg=OptimizerConfig(), label_index=0):
    z = np.asarray(features, dtype=float)
    t = np.asarray(targets, dtype=float).reshape(-1)
    if z.ndim != 2 or z.shape[0] != t.size:
        raise ValueError("features must be (n, d) with one target per row")
    if t.size < 2:
        raise ValueError("need at least 2 training instances")
    if np.any((t < 0) | (t > 1)):
        raise ValueError("targets must lie in [0, 1]")
    res = bfgs_minimize(lambda th: base_objective(th, z, t, cfg.l2_penalty),
                        np.zeros(z.shape[1] + 1), cfg)
    return BaseModel(res.x[:-1].copy(), float(res.x[-1]), label_index)


def predict_base(model, features):
    z = np.asarray(features, dtype=float)
    if z.shape[-1] != model.weights.size:
        raise ValueError(f"feature dimension {z.shape[-1]} does not match model ({model.weights.size})")
    q = expit(z @ model.weights + model.bias)
    return np.clip(q, PROB_FLOOR, 1 - PROB_FLOOR)


# --------------------------------------------------------------------------
# softmax meta learner

@dataclass(frozen=True)
class MetaModel:
    weights: np.ndarray  # (p, p): row j scores label j
    bias: np.ndarray


def meta_objective(params, features, truths, l2_penalty):
    """KL loss of a softmax model and its gradient; ``params`` is ``vec(W)`` then ``b``."""
    f = np.asarray(features, dtype=float)
    y = np.asarray(truths, dtype=float)
    p_out, p_in = y.shape[1], f.shape[1]
    w = params[: p_out * p_in].reshape(p_out, p_in)
    b = params[p_out * p_in:]
    logits = f @ w.T + b
    log_q = logits - logsumexp(logits, axis=1, keepdims=True)
    loss = float(np.sum(xlogy(y, y) - y * log_q)) + l2_penalty * float(np.sum(w * w))
    r = np.exp(log_q) * y.sum(axis=1, keepdims=True) - y
    grad = np.concatenate([(r.T @ f + 2 * l2_penalty * w).ravel(), r.sum(axis=0)])
    return loss, grad


def train_meta(features, truths, cfg=OptimizerConfig()):
    f = np.asarray(features, dtype=float)
    y = np.asarray(truths, dtype=float)
    if f.ndim != 2 or y.ndim != 2 or f.shape[0] != y.shape[0]:
        raise ValueError("features and truths must be 2-D with matching rows")
    n, p = y.shape
    if n < p:
        warnings.warn(f"meta model trained on {n} rows for {p} labels", RuntimeWarning)
    d = f.shape[1]
    res = bfgs_minimize(lambda th: meta_objective(th, f, y, cfg.l2_penalty),
                        np.zeros(p * d + p), cfg)
    return MetaModel(res.x[: p * d].reshape(p, d).copy(), res.x[p * d:].copy())


def predict_meta(model, features):
    f = np.asarray(features, dtype=float)
    if f.shape[-1] != model.weights.shape[1]:
        raise ValueError(f"input dimension {f.shape[-1]} does not match model ({model.weights.shape[1]})")
    logits = f @ model.weights.T + model.bias
    logits = logits - logits.max(axis=-1, keepdims=True)
    q = np.maximum(np.exp(logits), np.finfo(float).tiny)
    return q / q.sum(axis=-1, keepdims=True)
