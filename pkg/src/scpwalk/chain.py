"""Reversible generators on the support of a boolean measure."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
import math

import numpy as np

from ._numeric import is_exact, number_from_json, number_to_json
from .errors import DomainError, PreconditionError, ValidationError
from .lattice_measure import BooleanMeasure, bitstring, homogeneity, parse_bitstring
from .negdep import adjacent_mask

BALANCE_TOL = 1e-12
ROWSUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Generator:
    """Continuous-time rate matrix on ``measure.support``.

    Only the positive off-diagonal rates are stored, keyed by support index
    pairs; the diagonal is implied so that rows sum to zero.
    """

    measure: BooleanMeasure
    rates: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        N = self.measure.size
        for (i, j), r in self.rates.items():
            if i == j:
                continue
            if not (0 <= i < N and 0 <= j < N):
                raise ValidationError(f"rate index {(i, j)} outside the support")
            if r != 0:
                cleaned[(int(i), int(j))] = r
        object.__setattr__(self, "rates", cleaned)

    @classmethod
    def from_dense(cls, measure: BooleanMeasure, Q) -> "Generator":
        Q = np.asarray(Q, dtype=object if _is_object(Q) else float)
        N = measure.size
        if Q.shape != (N, N):
            raise ValidationError(f"rate matrix shape {Q.shape} does not match support size {N}")
        rates = {}
        for i in range(N):
            row = 0
            for j in range(N):
                row += Q[i, j]
                if i != j and Q[i, j] != 0:
                    if Q[i, j] < 0:
                        raise ValidationError(f"negative off-diagonal rate Q[{i},{j}] = {Q[i, j]}")
                    rates[(i, j)] = Q[i, j]
            if (row != 0) if isinstance(row, Fraction) else abs(float(row)) > ROWSUM_TOL:
                raise ValidationError(f"row {i} sums to {row}, not 0")
        return cls(measure, rates)

    @property
    def size(self) -> int:
        return self.measure.size

    @property
    def exact(self) -> bool:
        return self.measure.exact and is_exact(self.rates.values())

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def rate(self, i: int, j: int):
        return self.rates.get((i, j), self._zero())

    @cached_property
    def neighbours(self) -> tuple:
        out = [[] for _ in range(self.size)]
        for (i, j) in sorted(self.rates):
            out[i].append(j)
        return tuple(tuple(x) for x in out)

    @cached_property
    def exit_rates(self) -> tuple:
        out = [self._zero()] * self.size
        for (i, _), r in self.rates.items():
            out[i] += r
        return tuple(out)

    @property
    def delta(self):
        return max(self.exit_rates) if self.size else self._zero()

    def dense(self) -> np.ndarray:
        Q = np.zeros((self.size, self.size))
        for (i, j), r in self.rates.items():
            Q[i, j] = float(r)
        Q[np.diag_indices(self.size)] = -Q.sum(axis=1)
        return Q

    def flux(self) -> np.ndarray:
        """Symmetric matrix of pi(x) Q(x, y), zero diagonal (float)."""
        W = np.zeros((self.size, self.size))
        p = self.measure.probs
        for (i, j), r in self.rates.items():
            W[i, j] = p[i] * float(r)
        return W

    def scaled(self, c) -> "Generator":
        return Generator(self.measure, {k: r * c for k, r in self.rates.items()})

    def with_measure(self, measure: BooleanMeasure) -> "Generator":
        if measure.support != self.measure.support:
            raise ValidationError("support mismatch")
        return Generator(measure, dict(self.rates))

    def to_dict(self) -> dict:
        n = self.measure.n
        sup = self.measure.support
        return {
            "n": n,
            "support": [bitstring(s, n) for s in sup],
            "rates": [{"from": bitstring(sup[i], n), "to": bitstring(sup[j], n),
                       "rate": number_to_json(r)} for (i, j), r in sorted(self.rates.items())],
        }

    def __repr__(self):
        return f"Generator(size={self.size}, nnz={len(self.rates)}, delta={self.delta})"


def _is_object(Q):
    try:
        return any(isinstance(v, Fraction) for row in Q for v in row)
    except TypeError:
        return False


def adjacent_pairs(m: BooleanMeasure):
    """Ordered support index pairs (i, j) with support[i] ~ support[j]."""
    n = m.n
    idx = m.index
    out = []
    for i, x in enumerate(m.support):
        seen = set()
        for a in range(n):
            y = x ^ (1 << a)
            if y in idx:
                seen.add(idx[y])
            if x >> a & 1:
                for b in range(n):
                    if not x >> b & 1:
                        y = x ^ (1 << a) ^ (1 << b)
                        if y in idx:
                            seen.add(idx[y])
        out.extend((i, j) for j in sorted(seen))
    return out


@dataclass
class ChainStats:
    delta: object
    m: object
    M: object
    flip_swap: bool
    normalized: bool
    reversibility_residual: float
    vacuous: bool = False

    def to_dict(self) -> dict:
        return {k: number_to_json(v) if not isinstance(v, bool) else v
                for k, v in self.__dict__.items()}


def validate(Q: Generator) -> ChainStats:
    """Check the generator invariants and compute its summary statistics."""
    exact = Q.exact
    pi = Q.measure.weights
    worst = 0.0
    worst_at = None
    for (i, j), r in Q.rates.items():
        if r < 0:
            raise ValidationError(f"negative off-diagonal rate at "
                                  f"({bitstring(Q.measure.support[i], Q.measure.n)}, "
                                  f"{bitstring(Q.measure.support[j], Q.measure.n)}): {r}")
        back = Q.rate(j, i)
        lhs, rhs = pi[i] * r, pi[j] * back
        if exact:
            if lhs != rhs:
                raise ValidationError(f"detailed balance fails exactly at {(i, j)}: {lhs} != {rhs}")
        else:
            scale = max(abs(float(lhs)), abs(float(rhs)))
            res = abs(float(lhs) - float(rhs)) / scale if scale > 0 else 0.0
            if res > worst:
                worst, worst_at = res, (i, j)
    if worst > BALANCE_TOL:
        i, j = worst_at
        n = Q.measure.n
        raise ValidationError(f"detailed balance violated by relative {worst:.3g} at "
                              f"({bitstring(Q.measure.support[i], n)}, {bitstring(Q.measure.support[j], n)})")

    flip_swap = all(adjacent_mask(Q.measure.support[i], Q.measure.support[j]) for i, j in Q.rates)
    pairs = adjacent_pairs(Q.measure)
    if pairs:
        m = min(Q.rate(i, j) for i, j in pairs)
        M = min(max(Q.rate(i, j), Q.rate(j, i)) for i, j in pairs)
        vacuous = False
    else:
        m = M = math.inf
        vacuous = True
    delta = Q.delta
    return ChainStats(delta, m, M, flip_swap, delta <= 1, worst, vacuous)


def _mcmc_scale(m: BooleanMeasure):
    k = homogeneity(m)
    n = m.n
    if m.exact:
        k = Fraction(k) if k is not None else Fraction(n, 2)
        return 1 / (2 * k * n) if k and n else None
    k = float(k) if k is not None else n / 2
    return 1.0 / (2 * k * n) if k and n else None


def build_mcmc(m: BooleanMeasure) -> Generator:
    """Metropolis chain with rate (1/2kn) min(pi(y)/pi(x), 1) on every x ~ y."""
    scale = _mcmc_scale(m)
    if scale is None:
        return Generator(m, {})
    w = m.weights
    one = Fraction(1) if m.exact else 1.0
    rates = {(i, j): scale * min(w[j] / w[i], one) for i, j in adjacent_pairs(m)}
    return Generator(m, rates)


def build_bases_exchange(m: BooleanMeasure) -> Generator:
    """Rate 1/(2kn) on every adjacent pair of a uniform homogeneous measure."""
    if homogeneity(m) is None:
        raise PreconditionError("bases-exchange walk needs a homogeneous measure")
    if not m.is_uniform():
        raise PreconditionError("bases-exchange walk needs a uniform measure")
    scale = _mcmc_scale(m)
    if scale is None:
        return Generator(m, {})
    return Generator(m, {p: scale for p in adjacent_pairs(m)})


def normalize(Q: Generator) -> Generator:
    """Divide all rates by Delta(Q)."""
    d = Q.delta
    if d <= 0:
        raise DomainError("cannot normalize the zero generator")
    return Q.scaled(1 / d)


def two_state(a, b) -> Generator:
    """Generator on {0, 1} (n = 1) with rate a for 0 -> 1 and b for 1 -> 0.

    The invariant law is (b, a) / (a + b); exactness follows the inputs.
    """
    if is_exact([a, b]) or all(isinstance(v, int) for v in (a, b)):
        a, b = Fraction(a), Fraction(b)
    else:
        a, b = float(a), float(b)
    if a < 0 or b < 0 or a + b == 0:
        raise DomainError("two-state rates must be non-negative and not both zero")
    if a == 0 or b == 0:
        raise DomainError("a two-state chain with a zero rate has a point-mass invariant law")
    s = a + b
    m = BooleanMeasure(1, (0, 1), (b / s, a / s))
    return Generator(m, {(0, 1): a, (1, 0): b})


def generator_from_dict(doc: dict, measure: BooleanMeasure) -> Generator:
    """Inverse of :meth:`Generator.to_dict`, attached to ``measure``."""
    n = doc.get("n", measure.n)
    if n != measure.n:
        raise ValidationError(f"generator dimension {n} != measure dimension {measure.n}")
    if "support" in doc and list(doc["support"]) != measure.bitstrings():
        raise ValidationError("generator support does not match the measure support")
    exact = measure.exact and all(not isinstance(r["rate"], float) for r in doc.get("rates", []))
    idx = measure.index
    rates = {}
    for r in doc.get("rates", []):
        a, b = parse_bitstring(r["from"]), parse_bitstring(r["to"])
        if a not in idx or b not in idx:
            raise ValidationError(f"rate {r['from']}->{r['to']} leaves the support")
        rates[(idx[a], idx[b])] = number_from_json(r["rate"], exact)
    return Generator(measure, rates)
