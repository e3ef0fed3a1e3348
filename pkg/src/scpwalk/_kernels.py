"""Float hot loops: Sobolev-ratio descent and uniformized semigroup rows.

Each kernel is written in plain numpy that numba can also compile. With numba
importable and ``SCPWALK_NUMBA`` unset (or not ``"0"``) the kernels are
``@njit``-compiled; otherwise the same functions run as ordinary numpy code.
The uncompiled function is always reachable as ``kernel.py_func``.
"""

import os

import numpy as np

KIND_PI, KIND_MLSI, KIND_LSI = 0, 1, 2

_flag = os.environ.get("SCPWALK_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


def _kernel(fn):
    if USE_NUMBA:
        return njit(cache=True)(fn)
    fn.py_func = fn
    return fn


@_kernel
def entropy_terms(d):
    """u log u - u + 1 at u = exp(d), accurate for small |d|."""
    direct = d * np.exp(d) - np.expm1(d)
    series = d * d * (0.5 + d * (1.0 / 3.0 + d * (0.125 + d * (1.0 / 30.0 + d * (
        1.0 / 144.0 + d * (1.0 / 840.0 + d * (1.0 / 5760.0 + d / 45360.0)))))))
    return np.where(np.abs(d) < 0.1, series, direct)


@_kernel
def sobolev_ratio(W, pi, g, kind):
    """Ratio L(f)/R(f) at f = exp(g), its gradient in g, and R(f).

    ``W[x, y] = pi(x) Q(x, y)`` (symmetric, zero diagonal). R is the variance
    for ``KIND_PI`` and the entropy otherwise. Differences f(x) - f(y) go
    through expm1 so that nearly constant observables keep full precision.
    """
    n = g.shape[0]
    gs = g - g.max()
    f = np.exp(gs)
    G = gs.reshape((n, 1)) - gs.reshape((1, n))
    fx, fy = f.reshape((n, 1)), f.reshape((1, n))
    small = np.abs(G) < 1.0
    D = np.where(small, fy * np.expm1(np.where(small, G, 0.0)), fx - fy)   # f(x) - f(y)
    F = np.sum(pi * f)
    if kind == KIND_PI:
        dev = f - F
        R = np.sum(pi * dev * dev)
        dR = 2.0 * pi * dev * f
        L = 0.5 * np.sum(W * D * D)
        dL = 2.0 * np.sum(W * D, axis=1) * f
    else:
        d = gs - np.log(F)
        R = F * np.sum(pi * entropy_terms(d))
        dR = pi * f * d
        if kind == KIND_MLSI:
            L = 0.5 * np.sum(W * D * G)
            dL = np.sum(W * (f.reshape((n, 1)) * G + D), axis=1)
        else:
            h = np.exp(0.5 * gs)
            H = np.where(small, h.reshape((1, n)) * np.expm1(np.where(small, 0.5 * G, 0.0)),
                         h.reshape((n, 1)) - h.reshape((1, n)))   # h(x) - h(y)
            L = 0.5 * np.sum(W * H * H)
            dL = np.sum(W * H, axis=1) * h
    if R <= 0.0:
        return np.inf, np.zeros(n), R
    ratio = L / R
    grad = (dL - ratio * dR) / R
    return ratio, grad, R


@_kernel
def descend(W, pi, g0, kind, max_iter, ent_tol):
    """Gradient descent on the ratio in log-coordinates with step halving.

    Returns the best log-observable, its ratio and the number of iterations.
    Steps that lower the entropy below ``ent_tol`` count as failures, which
    keeps the iterate away from the constants where the ratio degenerates.
    """
    g = g0 - np.mean(g0)
    r, grad, R = sobolev_ratio(W, pi, g, kind)
    if not (R >= ent_tol) or not np.isfinite(r):
        return g, np.inf, 0
    gn = np.sqrt(np.sum(grad * grad))
    eta = 0.1 / gn if gn > 0 else 0.0
    it = 0
    while it < max_iter:
        it += 1
        if gn == 0.0 or eta * gn < 1e-16 * (1.0 + np.sqrt(np.sum(g * g))):
            break
        cand = g - eta * grad
        cand = cand - np.mean(cand)
        rc, gc, Rc = sobolev_ratio(W, pi, cand, kind)
        if Rc >= ent_tol and rc < r:
            g, r, grad = cand, rc, gc
            gn = np.sqrt(np.sum(grad * grad))
            eta *= 2.0
        else:
            eta *= 0.5
    return g, r, it


@_kernel
def uniformized_row(P, x, weights):
    """sum_k weights[k] * (e_x P^k)."""
    n = P.shape[0]
    v = np.zeros(n)
    v[x] = 1.0
    out = weights[0] * v
    for k in range(1, weights.shape[0]):
        v = np.dot(v, P)
        out = out + weights[k] * v
    return out
