"""Sub-Gaussian tail bounds checked against exactly enumerated tails."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._numeric import number_to_json
from .chain import Generator
from .errors import DomainError, PreconditionError
from .lattice_measure import BooleanMeasure, homogeneity

METRICS = ("hamming", "flip_swap")
GRID_POINTS = 16
TAIL_SLACK = 1e-12


def quad_variation(Q: Generator, f) -> float:
    """max_x sum_y Q(x, y) (f(y) - f(x))_+^2."""
    f = np.asarray(f, dtype=float)
    if f.shape != (Q.size,):
        raise DomainError(f"observable has shape {f.shape}, support has {Q.size} states")
    v = np.zeros(Q.size)
    for (i, j), r in Q.rates.items():
        rise = f[j] - f[i]
        if rise > 0:
            v[i] += float(r) * rise * rise
    return float(v.max()) if Q.size else 0.0


def _distance(x: int, y: int, metric: str) -> int:
    if metric == "hamming":
        return bin(x ^ y).count("1")
    if metric == "flip_swap":
        # fewest flips and swaps: every swap fixes one raised and one lowered coordinate
        return max(bin(x & ~y).count("1"), bin(y & ~x).count("1"))
    raise DomainError(f"metric must be one of {METRICS}, got {metric!r}")


def lipschitz_constant(f, m: BooleanMeasure, metric: str = "hamming") -> float:
    """max over support pairs of |f(x) - f(y)| / d(x, y)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (m.size,):
        raise DomainError(f"observable has shape {f.shape}, support has {m.size} states")
    if metric not in METRICS:
        raise DomainError(f"metric must be one of {METRICS}, got {metric!r}")
    best = 0.0
    sup = m.support
    for i in range(m.size):
        for j in range(i + 1, m.size):
            best = max(best, abs(f[i] - f[j]) / _distance(sup[i], sup[j], metric))
    return float(best)


def upper_tails(m: BooleanMeasure, f, grid) -> np.ndarray:
    """pi(f >= E f + a) for each a, by enumeration.

    States within a relative 1e-12 of the threshold are counted in the tail,
    which can only make the exact side larger.
    """
    f = np.asarray(f, dtype=float)
    p = m.probs
    mean = float(np.dot(p, f))
    scale = max(1.0, float(np.abs(f).max()) if f.size else 1.0)
    return np.array([p[f >= mean + a - TAIL_SLACK * scale].sum() for a in grid])


def default_grid(f, points: int = GRID_POINTS) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    span = float(f.max() - f.min()) if f.size else 0.0
    return np.linspace(0.0, span, points)


@dataclass
class TailReport:
    kind: str
    f: np.ndarray
    grid: np.ndarray
    exact_tail: np.ndarray
    bound: np.ndarray
    constants: dict
    vacuous: bool = False
    rescaled: Optional[float] = None
    notes: list = field(default_factory=list)

    @property
    def margin(self) -> np.ndarray:
        return self.bound - self.exact_tail

    @property
    def all_pass(self) -> bool:
        return bool(np.all(self.exact_tail <= self.bound))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "f": [float(x) for x in self.f],
            "constants": {k: number_to_json(v) for k, v in self.constants.items()},
            "points": [{"a": float(a), "exact": float(e), "bound": float(b), "margin": float(b - e)}
                       for a, e, b in zip(self.grid, self.exact_tail, self.bound)],
            "all_pass": self.all_pass,
            "vacuous": self.vacuous,
            "rescaled": self.rescaled,
            "notes": self.notes,
        }


def _grid(f, grid):
    g = default_grid(f) if grid is None else np.sort(np.asarray(grid, dtype=float))
    if np.any(g < 0):
        raise DomainError("tail thresholds must be non-negative")
    return g


def herbst_check(m: BooleanMeasure, Q: Generator, f, alpha_lb, grid=None) -> TailReport:
    """Exact upper tails against exp(-alpha a^2 / (4 v(f)))."""
    if Q.measure.support != m.support:
        raise DomainError("generator is not defined on this measure")
    f = np.asarray(f, dtype=float)
    alpha = float(alpha_lb)
    if alpha < 0:
        raise DomainError("alpha lower bound must be non-negative")
    g = _grid(f, grid)
    exact = upper_tails(m, f, g)
    v = quad_variation(Q, f)
    notes = []
    if v == 0:
        bound = np.ones_like(g)
        notes.append("v(f) = 0: bound is vacuous")
    else:
        bound = np.exp(-alpha * g * g / (4 * v))
    return TailReport("herbst", f, g, exact, bound, {"alpha": alpha_lb, "v": v}, v == 0, None, notes)


def pemantle_peres_check(m: BooleanMeasure, f, grid=None, metric: str = "hamming") -> TailReport:
    """Exact upper tails against exp(-a^2 / (8k)) for a 1-Lipschitz f."""
    k = homogeneity(m)
    if k is None:
        raise PreconditionError("Pemantle-Peres bound needs a homogeneous measure")
    f = np.asarray(f, dtype=float)
    L = lipschitz_constant(f, m, metric) if m.size > 1 else 0.0
    notes = [f"Lipschitz constant w.r.t. {metric} distance: {L:.6g}"]
    rescaled = None
    if L > 1 + 1e-12:
        f = f / L
        rescaled = L
        notes.append(f"observable divided by {L:.6g} to make it 1-Lipschitz")
    g = _grid(f, grid)
    exact = upper_tails(m, f, g)
    if k == 0:
        bound = np.where(g == 0, 1.0, 0.0)
    else:
        bound = np.exp(-g * g / (8 * k))
    return TailReport("pemantle_peres", f, g, exact, bound, {"k": k, "lipschitz": L}, False,
                      rescaled, notes)
