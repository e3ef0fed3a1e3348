"""Covering relation, stochastic-covering couplings and the SCP check."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional
import math

import numpy as np

from ._flow import transport
from ._numeric import number_to_json, popcount
from .errors import CeilingError, DomainError, InfeasibleCouplingError, ValidationError
from .lattice_measure import (BitVector, BooleanMeasure, bitstring, condition, split)

COVER = "cover"
ADJACENT = "adjacent"
REAL_MARGIN_TOL = 1e-10
DEFAULT_CEILING = 10
DEFAULT_SAMPLES = 10_000


def covers_mask(x: int, y: int) -> bool:
    d = x ^ y
    return d == 0 or (d & (d - 1) == 0 and bool(x & d))


def adjacent_mask(x: int, y: int) -> bool:
    """x ~ y: the states differ by a flip or a swap."""
    d = x ^ y
    pc = popcount(d)
    return pc == 1 or (pc == 2 and popcount(x & d) == 1)


def covers(x: BitVector, y: BitVector) -> bool:
    """True iff x = y or x = y + e_i for a single coordinate i."""
    if x.n != y.n:
        raise DomainError(f"dimension mismatch: {x.n} != {y.n}")
    return covers_mask(x.bits, y.bits)


@dataclass
class Coupling:
    """A joint law of ``left`` and ``right`` with sparse ``mass[(i, j)]``.

    Indices refer to positions in ``left.support`` and ``right.support``.
    """

    left: BooleanMeasure
    right: BooleanMeasure
    mass: dict
    relation: str = COVER

    @property
    def left_support(self):
        return self.left.support

    @property
    def right_support(self):
        return self.right.support

    @property
    def exact(self):
        return all(isinstance(v, Fraction) for v in self.mass.values()) and \
            self.left.exact and self.right.exact

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.left.size, self.right.size))
        for (i, j), w in self.mass.items():
            out[i, j] = float(w)
        return out

    def transpose(self) -> "Coupling":
        return Coupling(self.right, self.left, {(j, i): w for (i, j), w in self.mass.items()},
                        self.relation)

    def pairs(self):
        """Yield ``(x_mask, y_mask, mass)`` for every atom."""
        for (i, j), w in sorted(self.mass.items()):
            yield self.left.support[i], self.right.support[j], w

    def validate(self) -> None:
        rel = covers_mask if self.relation == COVER else adjacent_mask
        exact = self.exact
        rows = [0] * self.left.size
        cols = [0] * self.right.size
        for (i, j), w in self.mass.items():
            if w < 0:
                raise ValidationError(f"negative coupling mass at {(i, j)}")
            x, y = self.left.support[i], self.right.support[j]
            if w > 0 and not rel(x, y):
                raise ValidationError(f"atom ({bitstring(x, self.left.n)}, "
                                      f"{bitstring(y, self.right.n)}) violates the {self.relation} relation")
            rows[i] += w
            cols[j] += w
        for got, want, side in ((rows, self.left.weights, "row"), (cols, self.right.weights, "column")):
            for k, (a, b) in enumerate(zip(got, want)):
                bad = a != b if exact else abs(float(a) - float(b)) > REAL_MARGIN_TOL
                if bad:
                    raise ValidationError(f"{side} {k} sums to {a}, marginal is {b}")

    def to_dict(self) -> dict:
        nl, nr = self.left.n, self.right.n
        return {
            "relation": self.relation,
            "atoms": [{"left": bitstring(x, nl), "right": bitstring(y, nr), "mass": number_to_json(w)}
                      for x, y, w in self.pairs()],
        }


@dataclass
class FlowInstance:
    """An infeasible transportation instance with its Hall-violating set."""

    flow_value: object
    total_mass: object
    blocked: list          # left states whose mass cannot be routed
    blocked_mass: object
    neighbourhood: list    # right states admissible for the blocked set
    neighbourhood_mass: object

    def explain(self) -> str:
        return (f"max flow {float(self.flow_value):.6g} < total mass {float(self.total_mass):.6g}: "
                f"states {self.blocked} carry mass {float(self.blocked_mass):.6g} but their "
                f"admissible partners {self.neighbourhood} carry only {float(self.neighbourhood_mass):.6g}")

    def to_dict(self) -> dict:
        return {
            "flow_value": number_to_json(self.flow_value),
            "total_mass": number_to_json(self.total_mass),
            "blocked": self.blocked,
            "blocked_mass": number_to_json(self.blocked_mass),
            "neighbourhood": self.neighbourhood,
            "neighbourhood_mass": number_to_json(self.neighbourhood_mass),
            "explanation": self.explain(),
        }


def _solve_cover(mu: BooleanMeasure, nu: BooleanMeasure):
    if mu.n != nu.n:
        raise DomainError(f"dimension mismatch: {mu.n} != {nu.n}")
    exact = mu.exact and nu.exact
    arcs = []
    for x in mu.support:
        # y with x |> y: y = x, or y = x - e_i for a raised coordinate of x
        cand = [x] + [x ^ (1 << b) for b in range(mu.n) if x >> b & 1]
        arcs.append([nu.index[y] for y in cand if y in nu.index])
    supply = list(mu.weights) if exact else [float(w) for w in mu.weights]
    demand = list(nu.weights) if exact else [float(w) for w in nu.weights]
    res = transport(supply, demand, arcs, exact)
    total = sum(supply)
    feasible = res.value == total if exact else abs(res.value - total) <= REAL_MARGIN_TOL
    return feasible, res, arcs, supply, demand


def stochastic_cover_coupling(mu: BooleanMeasure, nu: BooleanMeasure) -> Optional[Coupling]:
    """A coupling of ``(mu, nu)`` supported on ``{(x, y): x |> y}``, or None."""
    feasible, res, *_ = _solve_cover(mu, nu)
    if not feasible:
        return None
    return Coupling(mu, nu, dict(res.flows), COVER)


def cover_infeasibility(mu: BooleanMeasure, nu: BooleanMeasure) -> Optional[FlowInstance]:
    """Explain why ``mu |> nu`` fails; None when it holds."""
    feasible, res, arcs, supply, demand = _solve_cover(mu, nu)
    if feasible:
        return None
    blocked = res.source_side_left
    nbhd = sorted({j for i in blocked for j in arcs[i]})
    zero = Fraction(0) if isinstance(res.value, Fraction) else 0.0
    return FlowInstance(
        res.value, sum(supply),
        [bitstring(mu.support[i], mu.n) for i in blocked], sum((supply[i] for i in blocked), zero),
        [bitstring(nu.support[j], nu.n) for j in nbhd], sum((demand[j] for j in nbhd), zero))


# ---------------------------------------------------------------------------
# SCP

@dataclass
class ScpWitness:
    S: tuple        # 1-based coordinates, ascending
    x: str          # bits of x on S, in the order of S
    y: str
    explanation: str
    instance: Optional[FlowInstance] = None

    def to_dict(self) -> dict:
        out = {"S": list(self.S), "x": self.x, "y": self.y, "explanation": self.explanation}
        if self.instance is not None:
            out["flow"] = self.instance.to_dict()
        return out


@dataclass
class SCPReport:
    holds: bool
    checked_triples: int
    mode: str
    witness: Optional[ScpWitness] = None
    seed: Optional[int] = None
    skipped_zero_probability: int = 0
    couplings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "holds": self.holds,
            "checked_triples": self.checked_triples,
            "mode": self.mode,
            "seed": self.seed,
            "skipped_zero_probability": self.skipped_zero_probability,
            "witness": self.witness.to_dict() if self.witness else None,
        }
        if self.couplings:
            out["couplings"] = [{"S": list(S), "x": x, "y": y, "coupling": c.to_dict()}
                                for S, x, y, c in self.couplings]
        return out


def _subset_bits(S, values_mask):
    """Assignment {coord: bit} for a mask over |S| bits (first element of S is the top bit)."""
    k = len(S)
    return {c: (values_mask >> (k - 1 - j)) & 1 for j, c in enumerate(S)}


def _covering_pairs(k):
    """All (x, y) in {0,1}^k with x = y + e_i, ordered by y then i."""
    for y in range(1 << k):
        for j in range(k):
            bit = 1 << (k - 1 - j)
            if not y & bit:
                yield y | bit, y


class _ConditionalCache:
    def __init__(self, m):
        self.m = m
        self.cache = {}

    def get(self, S, values):
        key = (S, values)
        if key not in self.cache:
            try:
                self.cache[key] = condition(self.m, _subset_bits(S, values)).measure
            except DomainError:
                self.cache[key] = None
        return self.cache[key]


def _check_triple(cache, S, x, y, keep):
    cy, cx = cache.get(S, y), cache.get(S, x)
    if cy is None or cx is None:
        return "skip", None
    coupling = stochastic_cover_coupling(cy, cx)
    if coupling is None:
        inst = cover_infeasibility(cy, cx)
        w = ScpWitness(tuple(S), bitstring(x, len(S)), bitstring(y, len(S)),
                       f"conditional law given X_S=y does not cover the one given X_S=x; "
                       f"{inst.explain()}", inst)
        return "fail", w
    return "ok", (coupling if keep else None)


def check_scp(m: BooleanMeasure, mode: str = "full", seed: Optional[int] = None,
              count: int = DEFAULT_SAMPLES, ceiling: int = DEFAULT_CEILING,
              keep_couplings: bool = False) -> SCPReport:
    """Test the stochastic covering property.

    Triples ``(S, x, y)`` with ``x = y + e_i`` are visited in lexicographic
    order (|S|, S, y, i); the first failure is reported. Equal pairs ``x = y``
    are trivially coupled by the identity and are not enumerated.
    """
    cache = _ConditionalCache(m)
    if mode == "full":
        if m.n > ceiling:
            raise CeilingError(f"full SCP check refused for n={m.n} > {ceiling}; "
                               f"use mode='sampled' with a seed")
        checked = skipped = 0
        kept = []
        for size in range(1, m.n + 1):
            for S in combinations(range(1, m.n + 1), size):
                for x, y in _covering_pairs(size):
                    status, info = _check_triple(cache, S, x, y, keep_couplings)
                    if status == "skip":
                        skipped += 1
                        continue
                    checked += 1
                    if status == "fail":
                        return SCPReport(False, checked, "full", info, None, skipped)
                    if keep_couplings:
                        kept.append((S, bitstring(x, size), bitstring(y, size), info))
        return SCPReport(True, checked, "full", None, None, skipped, kept)

    if mode == "sampled":
        if seed is None:
            raise DomainError("sampled mode needs an explicit seed")
        rng = np.random.default_rng(seed)
        n = m.n
        # family size per |S| = s is C(n, s) * s * 2^(s-1)
        sizes = np.arange(1, n + 1)
        w = np.array([math.comb(n, s) * s * 2.0 ** (s - 1) for s in sizes])
        w /= w.sum()
        checked = skipped = 0
        attempts = 0
        while checked < count and attempts < 100 * count:
            attempts += 1
            s = int(rng.choice(sizes, p=w))
            S = tuple(sorted(int(c) + 1 for c in rng.choice(n, size=s, replace=False)))
            # uniform raised coordinate, then the other bits of y uniformly
            j = int(rng.integers(0, s))
            y = int(rng.integers(0, 1 << s)) & ~(1 << (s - 1 - j))
            x = y | (1 << (s - 1 - j))
            status, info = _check_triple(cache, S, x, y, False)
            if status == "skip":
                skipped += 1
                continue
            checked += 1
            if status == "fail":
                return SCPReport(False, checked, "sampled", info, seed, skipped)
        return SCPReport(True, checked, "sampled", None, seed, skipped)

    raise DomainError(f"unknown mode {mode!r}; expected 'full' or 'sampled'")


def flip_swap_coupling(m: BooleanMeasure, coord: int) -> Coupling:
    """Coupling of the two blocks of ``split(m, coord)`` supported on ``~`` pairs.

    The conditional law given ``x_coord = 0`` covers the one given
    ``x_coord = 1`` under the SCP; re-attaching the split coordinate turns each
    covering pair into a flip or a swap.
    """
    sp = split(m, coord)
    c0 = condition(m, {coord: 0})
    c1 = condition(m, {coord: 1})
    inner = stochastic_cover_coupling(c0.measure, c1.measure)
    if inner is None:
        inst = cover_infeasibility(c0.measure, c1.measure)
        raise InfeasibleCouplingError(
            f"no covering coupling across coordinate {coord} (measure is not SCP): {inst.explain()}",
            inst)
    idx0 = sp.block0.index
    idx1 = sp.block1.index
    mass = {}
    for (i, j), w in inner.mass.items():
        x = c0.lift(c0.measure.support[i])
        y = c1.lift(c1.measure.support[j])
        mass[(idx0[x], idx1[y])] = w
    return Coupling(sp.block0, sp.block1, mass, ADJACENT)
