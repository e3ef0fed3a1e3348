"""Dirichlet forms, variance and entropy, and the Poincare / MLSI / LSI constants."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from ._numeric import is_exact, number_to_json
from .chain import Generator
from .errors import DomainError, EstimationError, ReducibleError
from .lattice_measure import BooleanMeasure, bitstring

KINDS = ("poincare", "mlsi", "lsi")
_KIND_CODE = {"poincare": _kernels.KIND_PI, "mlsi": _kernels.KIND_MLSI, "lsi": _kernels.KIND_LSI}

DEFAULT_RESTARTS = 32
DEFAULT_MAX_ITER = 5000
DEFAULT_TOL = 1e-12


def psi(kind: str, u, v):
    """The two-point integrand whose pi Q average gives each Dirichlet form."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if kind == "poincare":
        return (u - v) ** 2
    if kind == "mlsi":
        return (u - v) * (np.log(u) - np.log(v))
    if kind == "lsi":
        return (np.sqrt(u) - np.sqrt(v)) ** 2
    raise DomainError(f"unknown kind {kind!r}")


def _values(m: BooleanMeasure, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (m.size,):
        raise DomainError(f"observable has shape {f.shape}, support has {m.size} states")
    if not np.all(np.isfinite(f)):
        raise DomainError("observable has non-finite entries")
    return f


def _positive(m, f) -> np.ndarray:
    f = _values(m, f)
    if np.any(f <= 0):
        raise DomainError("observable must be strictly positive")
    return f


def expectation(m: BooleanMeasure, f) -> float:
    return float(np.dot(m.probs, _values(m, f)))


def variance(m: BooleanMeasure, f) -> float:
    f = _values(m, f)
    mean = np.dot(m.probs, f)
    return float(np.dot(m.probs, (f - mean) ** 2))


def entropy(m: BooleanMeasure, f) -> float:
    """Ent(f) = E[f log f] - E f log E f, evaluated without cancellation."""
    f = _positive(m, f)
    top = f.max()
    u = f / top
    F = float(np.dot(m.probs, u))
    d = np.log(u) - math.log(F)
    return float(top * F * np.dot(m.probs, _kernels.entropy_terms(d)))


def dirichlet(Q: Generator, f, g) -> float:
    """E(f, g) = -E_pi[f Q g]."""
    f = _values(Q.measure, f)
    g = _values(Q.measure, g)
    return float(-np.dot(Q.measure.probs * f, Q.dense() @ g))


def local_form(Q: Generator, f, kind: str) -> float:
    """(1/2) sum pi(x) Q(x, y) Psi(f(x), f(y))."""
    f = _values(Q.measure, f) if kind == "poincare" else _positive(Q.measure, f)
    p = Q.measure.probs
    total = 0.0
    for (i, j), r in Q.rates.items():
        total += p[i] * float(r) * float(psi(kind, f[i], f[j]))
    return 0.5 * total


def ratio(Q: Generator, f, kind: str) -> float:
    """Dirichlet form over variance (poincare) or entropy (mlsi, lsi) at f."""
    num = local_form(Q, f, kind)
    den = variance(Q.measure, f) if kind == "poincare" else entropy(Q.measure, f)
    if den <= 0:
        raise DomainError("ratio undefined for a constant observable")
    return num / den


@dataclass
class FormReport:
    dirichlet_ff: float
    dirichlet_flogf: float
    dirichlet_sqrt: float
    variance: float
    entropy: float
    local_forms: dict

    def identity_residual(self) -> float:
        """Largest relative gap between each Dirichlet form and its local form."""
        worst = 0.0
        for name, kind in (("dirichlet_ff", "poincare"), ("dirichlet_flogf", "mlsi"),
                           ("dirichlet_sqrt", "lsi")):
            a, b = getattr(self, name), self.local_forms[kind]
            scale = max(abs(a), abs(b))
            if scale > 0:
                worst = max(worst, abs(a - b) / scale)
        return worst

    def to_dict(self) -> dict:
        return {**{k: v for k, v in self.__dict__.items()}, "identity_residual": self.identity_residual()}


def evaluate_forms(Q: Generator, f) -> FormReport:
    f = _positive(Q.measure, f)
    return FormReport(
        dirichlet_ff=dirichlet(Q, f, f),
        dirichlet_flogf=dirichlet(Q, f, np.log(f)),
        dirichlet_sqrt=dirichlet(Q, np.sqrt(f), np.sqrt(f)),
        variance=variance(Q.measure, f),
        entropy=entropy(Q.measure, f),
        local_forms={k: local_form(Q, f, k) for k in KINDS},
    )


# ---------------------------------------------------------------------------
# constants

@dataclass
class ConstantEstimate:
    kind: str
    value: float
    witness: np.ndarray
    exact: bool
    restarts: int = 0
    iterations: int = 0
    seed: Optional[int] = None
    backend: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": float(self.value),
            "exact": self.exact,
            "witness": [float(x) for x in self.witness],
            "restarts": self.restarts,
            "iterations": self.iterations,
            "seed": self.seed,
            "backend": self.backend,
        }


def communicating_classes(Q: Generator) -> list:
    N = Q.size
    if not Q.rates:
        return [[i] for i in range(N)]
    rows, cols = zip(*Q.rates)
    A = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(N, N))
    k, labels = connected_components(A, directed=True, connection="strong")
    classes = [[] for _ in range(k)]
    for i, c in enumerate(labels):
        classes[c].append(i)
    return sorted(classes)


def _require_irreducible(Q: Generator):
    if Q.size < 2:
        raise DomainError("a single-state chain has no non-constant observable")
    classes = communicating_classes(Q)
    if len(classes) > 1:
        n = Q.measure.n
        named = [[bitstring(Q.measure.support[i], n) for i in c] for c in classes]
        raise ReducibleError(f"generator is reducible; communicating classes: {named}", named)


def _spectral(Q: Generator):
    p = Q.measure.probs
    s = np.sqrt(p)
    A = -(s[:, None] * Q.dense() / s[None, :])
    A = 0.5 * (A + A.T)
    vals, vecs = np.linalg.eigh(A)
    return vals, vecs / s[:, None]


def poincare_exact(Q: Generator) -> ConstantEstimate:
    """Spectral gap of the pi-symmetrized generator."""
    _require_irreducible(Q)
    vals, phis = _spectral(Q)
    phi = phis[:, 1]
    witness = 1.0 + 0.5 * phi / np.abs(phi).max()
    return ConstantEstimate("poincare", float(vals[1]), witness, True)


def _starts(Q: Generator, count: int, rng) -> list:
    """Deterministic prefix (slow direction, near-indicator) then random draws."""
    N = Q.size
    _, phis = _spectral(Q)
    phi = phis[:, 1]
    starts = [1e-3 * phi / np.abs(phi).max()]
    ind = np.full(N, 1e-8)
    ind[int(np.argmin(Q.measure.probs))] = 1.0
    starts.append(np.log(ind))
    scales = (0.5, 1.0, 2.0, 4.0)
    k = 0
    while len(starts) < count:
        starts.append(scales[k % len(scales)] * rng.standard_normal(N))
        k += 1
    return starts[:count]


def sobolev_estimate(Q: Generator, kind: str, restarts: int = DEFAULT_RESTARTS,
                     max_iter: int = DEFAULT_MAX_ITER, seed: int = 0,
                     tol: float = DEFAULT_TOL) -> ConstantEstimate:
    """Best ratio found by multi-start descent: an upper bound on the constant.

    Adding restarts only appends starting points, so the result never gets
    worse as ``restarts`` grows.
    """
    if kind not in ("mlsi", "lsi"):
        raise DomainError(f"kind must be 'mlsi' or 'lsi', got {kind!r}")
    if restarts < 1:
        raise DomainError("need at least one restart")
    _require_irreducible(Q)
    W = Q.flux()
    W = np.ascontiguousarray(0.5 * (W + W.T))
    pi = np.ascontiguousarray(Q.measure.probs, dtype=float)
    code = _KIND_CODE[kind]
    rng = np.random.default_rng(seed)
    best_val, best_g, total_it = math.inf, None, 0
    for g0 in _starts(Q, restarts, rng):
        g, val, it = _kernels.descend(W, pi, np.ascontiguousarray(g0, dtype=float),
                                      code, int(max_iter), float(tol))
        total_it += int(it)
        if val < best_val:
            best_val, best_g = float(val), g
    if best_g is None:
        raise EstimationError(f"all {restarts} restarts were degenerate (entropy below {tol})")
    witness = np.exp(best_g - best_g.max())
    return ConstantEstimate(kind, best_val, witness, False, restarts, total_it, seed,
                            _kernels.BACKEND)


@dataclass
class TwoStateConstants:
    a: object
    b: object
    lam: object
    alpha_interval: tuple
    rho: object
    rho_floor: object
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "a": number_to_json(self.a), "b": number_to_json(self.b),
            "lambda": number_to_json(self.lam),
            "alpha_interval": [number_to_json(x) for x in self.alpha_interval],
            "rho": number_to_json(self.rho), "rho_floor": number_to_json(self.rho_floor),
            "degenerate": self.degenerate,
        }


def two_state_constants(a, b) -> TwoStateConstants:
    """Closed forms for the chain with rates a (0 -> 1) and b (1 -> 0)."""
    if is_exact([a, b]) or all(isinstance(v, int) for v in (a, b)):
        a, b = Fraction(a), Fraction(b)
    else:
        a, b = float(a), float(b)
    if a < 0 or b < 0:
        raise DomainError("rates must be non-negative")
    if a == 0 and b == 0:
        raise DomainError("rates must not both be zero")
    lam = a + b
    interval = (lam, 2 * lam)
    if a == 0 or b == 0:
        zero = Fraction(0) if isinstance(a, Fraction) else 0.0
        return TwoStateConstants(a, b, lam, interval, zero, zero, True)
    if a == b:
        rho = a
    else:
        rho = (float(a) - float(b)) / (math.log(a) - math.log(b))
    return TwoStateConstants(a, b, lam, interval, rho, min(a, b))


def rho_ceiling(m: BooleanMeasure) -> float:
    """min over x of 1 / log(1/pi(x)): no normalized generator has a larger rho."""
    if m.size < 2:
        raise DomainError("rho ceiling needs at least two support states")
    return min(1.0 / -math.log(float(w)) for w in m.weights)
