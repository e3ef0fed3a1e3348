"""Probability measures on the boolean lattice {0,1}^n.

States are stored as integer bit masks. Coordinate ``i`` (1-based) lives in
bit ``n - i``, so the mask of ``"110"`` is ``0b110`` and ascending mask order
coincides with lexicographic order of the bit strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Mapping, NamedTuple, Optional, Sequence, Union
import math
import warnings

import numpy as np

from ._numeric import REAL_SUM_TOL, as_rational, is_exact, popcount
from .errors import ConstructionError, DomainError, SplitError, ValidationError

LENSEMBLE_DROP_RATIO = 1e-14


def coord_bit(mask: int, i: int, n: int) -> int:
    """Value of coordinate ``i`` (1-based) of ``mask`` in dimension ``n``."""
    return (mask >> (n - i)) & 1


def unit(i: int, n: int) -> int:
    """Mask of the basis vector e_i."""
    return 1 << (n - i)


def bitstring(mask: int, n: int) -> str:
    return format(mask, f"0{n}b") if n else ""


def parse_bitstring(s: str) -> int:
    s = s.strip()
    if s and set(s) - {"0", "1"}:
        raise ValueError(f"not a bit string: {s!r}")
    return int(s, 2) if s else 0


@dataclass(frozen=True, order=True)
class BitVector:
    """An element of {0,1}^n."""

    n: int
    bits: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("BitVector needs n >= 1")
        if not 0 <= self.bits < (1 << self.n):
            raise ValidationError(f"bits {self.bits} do not fit in {self.n} coordinates")

    @classmethod
    def from_str(cls, s: str) -> "BitVector":
        return cls(len(s.strip()), parse_bitstring(s))

    def __getitem__(self, i: int) -> int:
        if not 1 <= i <= self.n:
            raise IndexError(i)
        return coord_bit(self.bits, i, self.n)

    def __str__(self):
        return bitstring(self.bits, self.n)

    @property
    def weight(self) -> int:
        return popcount(self.bits)


@dataclass(frozen=True)
class BooleanMeasure:
    """A probability measure on {0,1}^n, given by its support and weights.

    ``support`` holds distinct masks in ascending order; ``weights`` are aligned
    with it and strictly positive. When every weight is a Fraction the measure
    is exact and the weights sum to exactly one.

    ``n = 0`` is allowed: it is the point mass on the empty vector, which shows
    up when every coordinate has been conditioned away.
    """

    n: int
    support: tuple
    weights: tuple

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError("negative dimension")
        if len(self.support) == 0:
            raise ValidationError("empty support")
        if len(self.support) != len(self.weights):
            raise ValidationError("support and weights have different lengths")
        top = 1 << self.n
        prev = -1
        for s in self.support:
            if not 0 <= s < top:
                raise ValidationError(f"state {s} outside {{0,1}}^{self.n}")
            if s <= prev:
                raise ValidationError("support must be strictly ascending")
            prev = s
        if is_exact(self.weights):
            if any(w <= 0 for w in self.weights):
                raise ValidationError("weights must be strictly positive")
            if sum(self.weights) != 1:
                raise ValidationError(f"weights sum to {sum(self.weights)}, not 1")
        else:
            ws = tuple(float(w) for w in self.weights)
            if any(not (w > 0 and math.isfinite(w)) for w in ws):
                raise ValidationError("weights must be finite and strictly positive")
            if abs(math.fsum(ws) - 1.0) > REAL_SUM_TOL:
                raise ValidationError(f"weights sum to {math.fsum(ws)!r}, not 1")
            object.__setattr__(self, "weights", ws)

    @classmethod
    def from_table(cls, n: int, table: Mapping, normalize: bool = False) -> "BooleanMeasure":
        """Build from ``{state: weight}``; states may be masks, bit strings or BitVectors.

        Zero weights are dropped. Exactness is decided by the inputs: if every
        weight converts to a rational the result is exact.
        """
        items = {}
        for state, w in table.items():
            mask = _to_mask(state, n)
            if mask in items:
                raise ConstructionError(f"state {bitstring(mask, n)} listed twice")
            items[mask] = w
        try:
            weights = {k: as_rational(v) for k, v in items.items()}
        except (TypeError, ValueError):
            weights = {k: float(v) for k, v in items.items()}
        if any(w < 0 for w in weights.values()):
            raise ConstructionError("negative weight")
        weights = {k: w for k, w in weights.items() if w > 0}
        if not weights:
            raise ConstructionError("empty support: no state has positive weight")
        if normalize:
            total = sum(weights.values())
            weights = {k: w / total for k, w in weights.items()}
        support = tuple(sorted(weights))
        return cls(n, support, tuple(weights[s] for s in support))

    @property
    def exact(self) -> bool:
        return is_exact(self.weights)

    @property
    def size(self) -> int:
        return len(self.support)

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.support)}

    @cached_property
    def probs(self) -> np.ndarray:
        p = np.array([float(w) for w in self.weights])
        p.setflags(write=False)
        return p

    def prob(self, state) -> Union[Fraction, float]:
        i = self.index.get(_to_mask(state, self.n))
        if i is None:
            return Fraction(0) if self.exact else 0.0
        return self.weights[i]

    def index_of(self, state) -> int:
        """Support index of a state given as index, mask string, or BitVector."""
        if isinstance(state, (int, np.integer)) and not isinstance(state, bool):
            if not 0 <= state < self.size:
                raise DomainError(f"support index {state} out of range")
            return int(state)
        mask = _to_mask(state, self.n)
        if mask not in self.index:
            raise DomainError(f"state {bitstring(mask, self.n)} is not in the support")
        return self.index[mask]

    def states(self) -> list:
        return [BitVector(self.n, s) for s in self.support] if self.n else []

    def bitstrings(self) -> list:
        return [bitstring(s, self.n) for s in self.support]

    def marginal(self, i: int):
        """P(X_i = 1)."""
        return sum((w for s, w in zip(self.support, self.weights) if coord_bit(s, i, self.n)),
                   Fraction(0) if self.exact else 0.0)

    def is_uniform(self) -> bool:
        if self.exact:
            return len(set(self.weights)) == 1
        return max(self.weights) - min(self.weights) <= REAL_SUM_TOL

    def restrict(self, indices: Sequence[int]) -> "BooleanMeasure":
        """The measure conditioned on a subset of its support (same coordinates)."""
        idx = sorted(set(indices))
        if not idx:
            raise DomainError("cannot restrict to an empty set of states")
        mass = sum(self.weights[i] for i in idx)
        return BooleanMeasure(self.n, tuple(self.support[i] for i in idx),
                              tuple(self.weights[i] / mass for i in idx))

    def __repr__(self):
        body = ", ".join(f"{bitstring(s, self.n)}: {w}" for s, w in
                         list(zip(self.support, self.weights))[:8])
        more = ", ..." if self.size > 8 else ""
        return f"BooleanMeasure(n={self.n}, {{{body}{more}}})"


def _to_mask(state, n: int) -> int:
    if isinstance(state, BitVector):
        if state.n != n:
            raise DomainError(f"dimension mismatch: {state.n} != {n}")
        return state.bits
    if isinstance(state, str):
        if len(state.strip()) != n:
            raise DomainError(f"bit string {state!r} does not have length {n}")
        return parse_bitstring(state)
    return int(state)


# ---------------------------------------------------------------------------
# Specs

@dataclass(frozen=True)
class ExplicitSpec:
    n: int
    table: Mapping


@dataclass(frozen=True)
class ProductSpec:
    p: Sequence


@dataclass(frozen=True)
class ConditionedSumSpec:
    p: Sequence
    k: int


@dataclass(frozen=True)
class LEnsembleSpec:
    L: Sequence


@dataclass(frozen=True)
class SpanningTreeSpec:
    vertices: int
    edges: Sequence


MeasureSpec = Union[ExplicitSpec, ProductSpec, ConditionedSumSpec, LEnsembleSpec, SpanningTreeSpec]


def _check_probabilities(p):
    if len(p) == 0:
        raise ConstructionError("need at least one coordinate")
    try:
        ps = [as_rational(x) for x in p]
    except (TypeError, ValueError) as exc:
        raise ConstructionError(f"bad probability: {exc}") from None
    for i, x in enumerate(ps, 1):
        if not 0 < x < 1:
            raise ConstructionError(f"p_{i} = {x} is not in (0, 1)")
    return ps


def _product_weight(ps, mask, n):
    w = Fraction(1)
    for i, p in enumerate(ps, 1):
        w *= p if coord_bit(mask, i, n) else 1 - p
    return w


def build_measure(spec: MeasureSpec) -> BooleanMeasure:
    """Construct the exact law described by ``spec``."""
    if isinstance(spec, ExplicitSpec):
        return BooleanMeasure.from_table(spec.n, spec.table)

    if isinstance(spec, ProductSpec):
        ps = _check_probabilities(spec.p)
        n = len(ps)
        support = tuple(range(1 << n))
        return BooleanMeasure(n, support, tuple(_product_weight(ps, s, n) for s in support))

    if isinstance(spec, ConditionedSumSpec):
        ps = _check_probabilities(spec.p)
        n = len(ps)
        if not 0 <= spec.k <= n:
            raise ConstructionError(f"empty support: no state of {n} coordinates has {spec.k} ones")
        support = tuple(sorted(sum(unit(i, n) for i in c)
                               for c in combinations(range(1, n + 1), spec.k)))
        raw = [_product_weight(ps, s, n) for s in support]
        total = sum(raw)
        return BooleanMeasure(n, support, tuple(w / total for w in raw))

    if isinstance(spec, LEnsembleSpec):
        return _l_ensemble(spec.L)

    if isinstance(spec, SpanningTreeSpec):
        return _spanning_trees(spec.vertices, spec.edges)

    raise ConstructionError(f"unknown spec type {type(spec).__name__}")


def _l_ensemble(L) -> BooleanMeasure:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] == 0:
        raise ValidationError("L must be a non-empty square matrix")
    n = L.shape[0]
    scale = max(1.0, float(np.abs(L).max()))
    if not np.allclose(L, L.T, rtol=0, atol=1e-12 * scale):
        raise ValidationError("L is not symmetric")
    eig = np.linalg.eigvalsh(L)
    if eig.min() < -1e-10 * scale:
        raise ValidationError(f"L is not positive semidefinite (min eigenvalue {eig.min():.3g})")
    dets = np.empty(1 << n)
    for mask in range(1 << n):
        idx = [i - 1 for i in range(1, n + 1) if coord_bit(mask, i, n)]
        dets[mask] = np.linalg.det(L[np.ix_(idx, idx)]) if idx else 1.0
    z = np.linalg.det(np.eye(n) + L)
    keep = dets > LENSEMBLE_DROP_RATIO * dets.max()
    if not keep.all():
        warnings.warn(f"L-ensemble: dropped {int((~keep).sum())} states with negligible "
                      "weight and renormalized", RuntimeWarning, stacklevel=3)
    support = tuple(int(s) for s in np.flatnonzero(keep))
    w = dets[keep] / z
    w = w / math.fsum(w)
    return BooleanMeasure(n, support, tuple(float(x) for x in w))


def _spanning_trees(vertices: int, edges) -> BooleanMeasure:
    edges = [tuple(int(v) for v in e) for e in edges]
    n = len(edges)
    if vertices < 1:
        raise ConstructionError("graph needs at least one vertex")
    for u, v in edges:
        if not (0 <= u < vertices and 0 <= v < vertices):
            raise ConstructionError(f"edge ({u}, {v}) references a missing vertex")
    if n == 0:
        raise ConstructionError("empty support: graph has no edges")
    trees = []
    for chosen in combinations(range(n), vertices - 1):
        parent = list(range(vertices))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        ok = True
        for e in chosen:
            ru, rv = find(edges[e][0]), find(edges[e][1])
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        if ok:
            trees.append(sum(unit(e + 1, n) for e in chosen))
    if not trees:
        raise ConstructionError("empty support: the graph is disconnected, it has no spanning tree")
    trees.sort()
    w = Fraction(1, len(trees))
    return BooleanMeasure(n, tuple(trees), (w,) * len(trees))


# ---------------------------------------------------------------------------
# Conditioning and splitting

class Conditioned(NamedTuple):
    """Result of :func:`condition`.

    ``coords[j]`` is the original coordinate carried by coordinate ``j + 1`` of
    ``measure``.
    """

    measure: BooleanMeasure
    coords: tuple
    assignment: dict
    parent_n: int

    def lift(self, mask: int) -> int:
        """Map a state of the conditional law back into the parent cube."""
        n_small = len(self.coords)
        out = 0
        for j, c in enumerate(self.coords, 1):
            if coord_bit(mask, j, n_small):
                out |= unit(c, self.parent_n)
        for c, b in self.assignment.items():
            if b:
                out |= unit(c, self.parent_n)
        return out


def _check_assignment(assignment: Mapping, n: int) -> dict:
    out = {}
    for c, b in assignment.items():
        c = int(c)
        if not 1 <= c <= n:
            raise DomainError(f"coordinate {c} outside 1..{n}", payload=dict(assignment))
        if b not in (0, 1):
            raise DomainError(f"coordinate {c} assigned non-bit value {b!r}", payload=dict(assignment))
        out[c] = int(b)
    return out


def condition(m: BooleanMeasure, assignment: Mapping) -> Conditioned:
    """Conditional law of the free coordinates given ``X_c = b`` for ``c, b`` in ``assignment``."""
    assignment = _check_assignment(assignment, m.n)
    fixed_mask = sum(unit(c, m.n) for c in assignment)
    fixed_val = sum(unit(c, m.n) for c, b in assignment.items() if b)
    coords = tuple(c for c in range(1, m.n + 1) if c not in assignment)
    n_small = len(coords)
    picked = [(s, w) for s, w in zip(m.support, m.weights) if s & fixed_mask == fixed_val]
    if not picked:
        shown = {c: assignment[c] for c in sorted(assignment)}
        raise DomainError(f"conditioning event {shown} has probability zero", payload=shown)
    mass = sum(w for _, w in picked)
    table = {}
    for s, w in picked:
        small = 0
        for j, c in enumerate(coords, 1):
            if coord_bit(s, c, m.n):
                small |= unit(j, n_small)
        table[small] = w / mass
    support = tuple(sorted(table))
    cm = BooleanMeasure(n_small, support, tuple(table[s] for s in support))
    return Conditioned(cm, coords, dict(sorted(assignment.items())), m.n)


def homogeneity(m: BooleanMeasure) -> Optional[int]:
    """Common number of ones of the support states, or None."""
    counts = {popcount(s) for s in m.support}
    return counts.pop() if len(counts) == 1 else None


class Split(NamedTuple):
    projection: tuple   # (mass of x_l = 0, mass of x_l = 1)
    block0: BooleanMeasure
    block1: BooleanMeasure
    indices0: tuple     # support indices of each block in the parent
    indices1: tuple


def split(m: BooleanMeasure, coord: int) -> Split:
    """Partition the support by the value of one coordinate."""
    if not 1 <= coord <= m.n:
        raise SplitError(f"coordinate {coord} outside 1..{m.n}")
    idx = ([], [])
    for i, s in enumerate(m.support):
        idx[coord_bit(s, coord, m.n)].append(i)
    for b in (0, 1):
        if not idx[b]:
            raise SplitError(f"splitting on coordinate {coord} leaves block x_{coord}={b} empty")
    p0 = sum(m.weights[i] for i in idx[0])
    p1 = sum(m.weights[i] for i in idx[1])
    return Split((p0, p1), m.restrict(idx[0]), m.restrict(idx[1]), tuple(idx[0]), tuple(idx[1]))


def splittable_coordinates(m: BooleanMeasure) -> list:
    """Coordinates whose two blocks are both non-empty."""
    ones = zeros = 0
    full = (1 << m.n) - 1
    for s in m.support:
        ones |= s
        zeros |= full ^ s
    both = ones & zeros
    return [i for i in range(1, m.n + 1) if coord_bit(both, i, m.n)]
