"""Semigroup evolution by uniformization, total variation, mixing times and bounds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional
import math

import numpy as np
from scipy.stats import poisson

from . import _kernels
from ._numeric import number_to_json
from .chain import Generator
from .errors import ConvergenceError, DomainError
from .functional import communicating_classes
from .lattice_measure import BooleanMeasure, bitstring

POISSON_TAIL = 1e-12
TIME_TOL = 1e-6
MAX_DOUBLINGS = 200


def _start_index(Q: Generator, x) -> int:
    try:
        return Q.measure.index_of(x)
    except (KeyError, IndexError, ValueError) as exc:
        raise DomainError(f"start state {x!r} is not in the support") from exc


def poisson_weights(rate: float, tail: float = POISSON_TAIL) -> np.ndarray:
    """pmf(0..K) of Poisson(rate) with the mass beyond K at most ``tail``."""
    if rate == 0:
        return np.ones(1)
    K = int(poisson.isf(tail, rate)) + 1
    while poisson.sf(K, rate) > tail:
        K += 1
    return poisson.pmf(np.arange(K + 1), rate)


def evolve(Q: Generator, x, t: float) -> np.ndarray:
    """Row x of exp(tQ) as a Poisson mixture of powers of P = I + Q / Delta."""
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    i = _start_index(Q, x)
    N = Q.size
    delta = float(Q.delta)
    if t == 0 or delta == 0:
        out = np.zeros(N)
        out[i] = 1.0
        return out
    P = np.eye(N) + Q.dense() / delta
    np.clip(P, 0.0, None, out=P)
    w = poisson_weights(delta * t)
    return _kernels.uniformized_row(np.ascontiguousarray(P), i, w)


def tv(mu, nu) -> float:
    """Total variation distance, as half the L1 distance."""
    if isinstance(mu, BooleanMeasure):
        mu = mu.probs
    if isinstance(nu, BooleanMeasure):
        nu = nu.probs
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise DomainError(f"distributions live on different index sets: {mu.shape} vs {nu.shape}")
    return 0.5 * float(np.abs(mu - nu).sum())


def distance(Q: Generator, x, t: float) -> float:
    return tv(evolve(Q, x, t), Q.measure.probs)


def mixing_time(Q: Generator, x, eps: float, tol: float = TIME_TOL) -> float:
    """Smallest t with TV(p_t(x, .), pi) <= eps, up to ``tol`` (the value returned
    always satisfies the inequality)."""
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
    if len(communicating_classes(Q)) > 1:
        raise DomainError("mixing time needs an irreducible generator")
    if distance(Q, x, 0.0) <= eps:
        return 0.0
    lo, hi = 0.0, 1.0 / float(Q.delta)
    for _ in range(MAX_DOUBLINGS):
        if distance(Q, x, hi) <= eps:
            break
        lo, hi = hi, 2 * hi
    else:
        raise ConvergenceError(f"TV distance still above {eps} at t = {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if distance(Q, x, mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def _loglog(pi_x: float, floor: bool):
    if not 0 < pi_x < 1:
        raise DomainError(f"pi(x) must lie in (0, 1), got {pi_x}")
    if pi_x >= math.exp(-1):
        if not floor:
            raise DomainError(f"log log(1/pi(x)) is not positive for pi(x) = {pi_x} >= 1/e")
        return 0.0, True
    return math.log(math.log(1 / pi_x)), False


def mixing_bound(kind: str, constant, pi_x, eps, floor_loglog: bool = True) -> float:
    """Mixing-time upper bound from a Poincare ("pi") or MLSI ("mlsi") constant.

    For ``mlsi`` and pi(x) >= 1/e the log log term is floored at 0 (see
    :func:`mixing_bound_detail` for the flag) unless ``floor_loglog`` is False,
    in which case a DomainError is raised.
    """
    return mixing_bound_detail(kind, constant, pi_x, eps, floor_loglog)[0]


def mixing_bound_detail(kind, constant, pi_x, eps, floor_loglog=True):
    constant, pi_x, eps = float(constant), float(pi_x), float(eps)
    if constant <= 0:
        raise DomainError("constant must be positive")
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
    if kind == "pi":
        if not 0 < pi_x <= 1:
            raise DomainError(f"pi(x) must lie in (0, 1], got {pi_x}")
        return (math.log(1 / pi_x) + math.log(1 / (4 * eps * eps))) / (2 * constant), False
    if kind == "mlsi":
        ll, floored = _loglog(pi_x, floor_loglog)
        return (ll + math.log(1 / (2 * eps * eps))) / constant, floored
    raise DomainError(f"kind must be 'pi' or 'mlsi', got {kind!r}")


def corollary_bound(k, n, pi_x, eps) -> float:
    """2kn (log log(1/pi(x)) + log(2/eps^2)), the stated form for the MCMC walk."""
    ll, _ = _loglog(float(pi_x), True)
    return 2 * float(k) * n * (ll + math.log(2 / (float(eps) ** 2)))


@dataclass
class MixingReport:
    start_state: str
    epsilon: float
    t_mix: float
    bound_pi: Optional[float]
    bound_mlsi: Optional[float]
    constants_used: dict = field(default_factory=dict)
    loglog_floored: bool = False

    @property
    def passed(self) -> bool:
        return all(b is None or self.t_mix <= b for b in (self.bound_pi, self.bound_mlsi))

    def to_dict(self) -> dict:
        return {
            "start_state": self.start_state, "epsilon": self.epsilon, "t_mix": self.t_mix,
            "bound_pi": self.bound_pi, "bound_mlsi": self.bound_mlsi,
            "constants_used": self.constants_used, "loglog_floored": self.loglog_floored,
            "passed": self.passed,
        }


def mixing_report(Q: Generator, x, eps, lam=None, alpha=None, lam_source="exact",
                  alpha_source="certificate") -> MixingReport:
    """Measured mixing time next to the two bounds; missing constants are computed
    (lambda exactly, alpha from the recursive certificate)."""
    from .decompose import certify_main
    from .functional import poincare_exact
    i = _start_index(Q, x)
    m = Q.measure
    if lam is None:
        lam = poincare_exact(Q).value
        lam_source = "exact"
    if alpha is None:
        cert = certify_main(m, Q, "alpha")
        alpha = cert.best
        alpha_source = "certificate"
    px = float(m.weights[i])
    t = mixing_time(Q, i, eps)
    b_pi = mixing_bound("pi", lam, px, eps) if float(lam) > 0 else None
    b_ml, floored = mixing_bound_detail("mlsi", alpha, px, eps) if float(alpha) > 0 and px < 1 else (None, False)
    used = {"lambda": {"value": number_to_json(lam), "provenance": lam_source},
            "alpha": {"value": number_to_json(alpha), "provenance": alpha_source}}
    return MixingReport(bitstring(m.support[i], m.n), float(eps), t, b_pi, b_ml, used, floored)
