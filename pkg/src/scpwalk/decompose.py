"""Projection/restriction decompositions, coupling quality, the recursive
certificate for the universal bounds, and the averaged flip-swap walk."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional
import math

import numpy as np

from ._numeric import number_to_json
from .chain import Generator, validate
from .errors import DomainError, InfeasibleCouplingError, ValidationError
from .functional import entropy, psi, variance
from .lattice_measure import (BooleanMeasure, bitstring, coord_bit, condition, homogeneity,
                              splittable_coordinates)
from .negdep import Coupling, check_scp, flip_swap_coupling

TARGETS = ("lambda", "alpha", "rho")
IDENTITY_SCALE_FLOOR = 1e-12


def _zero(exact):
    return Fraction(0) if exact else 0.0


def _block_measure(n, nblocks, masses):
    """Projection law on block indices, encoded as masks 0..B-1 of a small cube."""
    d = max(1, (nblocks - 1).bit_length())
    return BooleanMeasure(d, tuple(range(nblocks)), tuple(masses))


@dataclass
class Decomposition:
    generator: Generator
    partition: tuple
    block_mass: tuple
    projection: Generator
    restrictions: tuple
    couplings: dict = field(default_factory=dict)

    def block_of(self) -> list:
        out = [0] * self.generator.size
        for b, block in enumerate(self.partition):
            for i in block:
                out[i] = b
        return out


def project_restrict(Q: Generator, partition, couplings: Optional[dict] = None) -> Decomposition:
    """Projection chain on the blocks and restriction chains inside them."""
    N = Q.size
    blocks = tuple(tuple(sorted(int(i) for i in b)) for b in partition)
    seen = [i for b in blocks for i in b]
    if any(len(b) == 0 for b in blocks):
        raise DomainError("partition has an empty block")
    if sorted(seen) != list(range(N)):
        raise DomainError("partition must cover every support state exactly once")
    exact = Q.exact
    w = Q.measure.weights
    where = {}
    for b, block in enumerate(blocks):
        for i in block:
            where[i] = b
    mass = [sum((w[i] for i in block), _zero(exact)) for block in blocks]
    flow = {}
    for (i, j), r in Q.rates.items():
        bi, bj = where[i], where[j]
        if bi != bj:
            flow[(bi, bj)] = flow.get((bi, bj), _zero(exact)) + w[i] * r
    proj_rates = {k: v / mass[k[0]] for k, v in flow.items()}
    projection = Generator(_block_measure(Q.measure.n, len(blocks), mass), proj_rates)
    # reversibility of the projection is a consequence of that of Q
    for (a, b), r in proj_rates.items():
        lhs, rhs = mass[a] * r, mass[b] * proj_rates.get((b, a), _zero(exact))
        if (lhs != rhs) if exact else abs(float(lhs) - float(rhs)) > 1e-12 * max(abs(float(lhs)), 1e-300):
            raise ValidationError(f"projection chain is not reversible between blocks {a} and {b}")

    restrictions = []
    for block in blocks:
        local = {i: k for k, i in enumerate(block)}
        sub = Q.measure.restrict(block)
        rates = {(local[i], local[j]): r for (i, j), r in Q.rates.items()
                 if i in local and j in local}
        restrictions.append(Generator(sub, rates))

    couplings = dict(couplings or {})
    for (a, b), c in couplings.items():
        if c.left.support != restrictions[a].measure.support or \
                c.right.support != restrictions[b].measure.support:
            raise DomainError(f"coupling for blocks ({a}, {b}) does not match the block supports")
    return Decomposition(Q, blocks, tuple(mass), projection, tuple(restrictions), couplings)


def split_decomposition(Q: Generator, coord: int, coupling: Optional[Coupling] = None) -> Decomposition:
    """Two-block decomposition by ``x_coord`` with the flip-swap coupling and its transpose."""
    m = Q.measure
    part = ([], [])
    for i, s in enumerate(m.support):
        part[coord_bit(s, coord, m.n)].append(i)
    if not part[0] or not part[1]:
        from .errors import SplitError
        raise SplitError(f"coordinate {coord} does not split the support")
    d = project_restrict(Q, part)
    kappa = coupling if coupling is not None else flip_swap_coupling(m, coord)
    if d.projection.rate(0, 1) > 0:
        d.couplings[(0, 1)] = kappa
    if d.projection.rate(1, 0) > 0:
        d.couplings[(1, 0)] = kappa.transpose()
    return d


# ---------------------------------------------------------------------------
# coupling quality

@dataclass
class ChiTerm:
    blocks: tuple
    x: str
    y: str
    ratio: object
    crude_floor: object


@dataclass
class ChiReport:
    value: object
    terms: list
    zero: bool

    def crude_ok(self) -> bool:
        return all(_leq(t.crude_floor, t.ratio) for t in self.terms)

    def to_dict(self) -> dict:
        return {
            "chi": number_to_json(self.value),
            "zero": self.zero,
            "terms": [{"blocks": list(t.blocks), "x": t.x, "y": t.y,
                       "ratio": number_to_json(t.ratio), "crude_floor": number_to_json(t.crude_floor)}
                      for t in self.terms],
        }


def chi(d: Decomposition) -> ChiReport:
    """Minimal ratio pi(x)Q(x,y) / (pibar(i) Qbar(i,j) kappa_ij(x,y)) and the crude floors."""
    Q = d.generator
    m = Q.measure
    w = m.weights
    terms = []
    proj = d.projection
    for (a, b), r in sorted(proj.rates.items()):
        if (a, b) not in d.couplings:
            raise DomainError(f"no coupling supplied for block pair ({a}, {b}) with positive rate")
        kappa = d.couplings[(a, b)]
        ba, bb = d.partition[a], d.partition[b]
        back = proj.rate(b, a)
        for (i, j), k in sorted(kappa.mass.items()):
            if k <= 0:
                continue
            x, y = ba[i], bb[j]
            denom = d.block_mass[a] * r * k
            ratio = w[x] * Q.rate(x, y) / denom
            floor = max(Q.rate(x, y) / r, Q.rate(y, x) / back)
            terms.append(ChiTerm((a, b), bitstring(m.support[x], m.n), bitstring(m.support[y], m.n),
                                 ratio, floor))
    if not terms:
        return ChiReport(math.inf, [], False)
    value = min(t.ratio for t in terms)
    return ChiReport(value, terms, value == 0)


# ---------------------------------------------------------------------------
# decomposition identities

@dataclass
class IdentityReport:
    residuals: dict
    jensen: list

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    @property
    def jensen_ok(self) -> bool:
        return all(ok for *_, ok in self.jensen)

    def to_dict(self) -> dict:
        return {"residuals": self.residuals, "max_residual": self.max_residual,
                "jensen": [{"blocks": list(bl), "kind": k, "lhs": l, "rhs": r, "ok": ok}
                           for bl, k, l, r, ok in self.jensen],
                "jensen_ok": self.jensen_ok}


def _rel(a, b):
    scale = max(abs(a), abs(b), IDENTITY_SCALE_FLOOR)
    return abs(a - b) / scale


def _edges(Q, keep=None):
    items = [(i, j, float(r)) for (i, j), r in Q.rates.items() if keep is None or keep(i, j)]
    if not items:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
    I, J, R = zip(*items)
    return np.array(I), np.array(J), np.array(R)


def _pair_sum(p, edges, f, kind):
    I, J, R = edges
    if I.size == 0:
        return 0.0
    return float(np.sum(p[I] * R * psi(kind, f[I], f[J])))


def _edges_of_coupling(kappa):
    I, J, K = zip(*[(i, j, float(k)) for (i, j), k in kappa.mass.items()])
    return np.array(I), np.array(J), np.array(K)


def identity_check(d: Decomposition, f) -> IdentityReport:
    """Both sides of the variance/entropy split and of the local-form split."""
    Q = d.generator
    f = np.asarray(f, dtype=float)
    if f.shape != (Q.size,) or np.any(f <= 0):
        raise DomainError("identity_check needs a positive observable on the support")
    pbar = np.array([float(x) for x in d.block_mass])
    fbar = np.array([np.dot(d.restrictions[b].measure.probs, f[list(block)])
                     for b, block in enumerate(d.partition)])
    proj_m = d.projection.measure
    res = {}
    inside_var = sum(pbar[b] * variance(d.restrictions[b].measure, f[list(block)])
                     for b, block in enumerate(d.partition))
    res["variance"] = _rel(variance(Q.measure, f), inside_var + variance(proj_m, fbar))
    inside_ent = sum(pbar[b] * entropy(d.restrictions[b].measure, f[list(block)])
                     for b, block in enumerate(d.partition))
    res["entropy"] = _rel(entropy(Q.measure, f), inside_ent + entropy(proj_m, fbar))

    where = d.block_of()
    p = Q.measure.probs
    all_edges = _edges(Q)
    cross = _edges(Q, lambda i, j: where[i] != where[j])
    for kind in ("poincare", "mlsi", "lsi"):
        whole = 0.5 * _pair_sum(p, all_edges, f, kind)
        inside = 0.0
        for b, block in enumerate(d.partition):
            R = d.restrictions[b]
            inside += pbar[b] * 0.5 * _pair_sum(R.measure.probs, _edges(R), f[list(block)], kind)
        res[f"local_{kind}"] = _rel(whole, inside + 0.5 * _pair_sum(p, cross, f, kind))

    jensen = []
    for (a, b), kappa in sorted(d.couplings.items()):
        fa, fb = f[list(d.partition[a])], f[list(d.partition[b])]
        K = _edges_of_coupling(kappa)
        for kind in ("poincare", "mlsi", "lsi"):
            lhs = float(np.sum(K[2] * psi(kind, fa[K[0]], fb[K[1]])))
            rhs = float(psi(kind, fbar[a], fbar[b]))
            jensen.append(((a, b), kind, lhs, rhs, lhs >= rhs - 1e-12 * max(1.0, abs(rhs))))
    return IdentityReport(res, jensen)


# ---------------------------------------------------------------------------
# certificate for the universal bounds

@dataclass
class Check:
    name: str
    lhs: object
    rhs: object
    passed: bool

    def to_dict(self):
        return {"name": self.name, "lhs": number_to_json(self.lhs),
                "rhs": number_to_json(self.rhs), "passed": self.passed}


@dataclass
class CertNode:
    support: list
    coordinate: Optional[int] = None
    chi: object = None
    a: object = None
    b: object = None
    floor: object = None
    M: object = None
    m: object = None
    claimed_bound: object = math.inf
    checks: list = field(default_factory=list)
    children: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def leaf(self) -> bool:
        return self.coordinate is None

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def to_dict(self) -> dict:
        if self.leaf:
            return {"support": self.support, "leaf": True,
                    "claimed_bound": number_to_json(self.claimed_bound)}
        return {
            "support": self.support, "leaf": False, "coordinate": self.coordinate,
            "chi": number_to_json(self.chi),
            "projection": {"a": number_to_json(self.a), "b": number_to_json(self.b),
                           "floor": number_to_json(self.floor)},
            "M": number_to_json(self.M), "m": number_to_json(self.m),
            "claimed_bound": number_to_json(self.claimed_bound),
            "checks": [c.to_dict() for c in self.checks],
            "notes": self.notes,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass
class Certificate:
    """Replay of the recursive proof of the universal bounds.

    ``bound`` is what the node checks establish (M for lambda and alpha, m for
    rho). ``hierarchy_bound`` adds the 2m / 4m branches, which follow from the
    ordering of the three constants rather than from a node check.
    """

    target: str
    bound: object
    hierarchy_bound: object
    M: object
    m: object
    root: CertNode
    passed: bool
    exact: bool

    @property
    def best(self):
        return max(self.bound, self.hierarchy_bound)

    @property
    def vacuous(self) -> bool:
        return self.bound == 0 or self.bound == math.inf

    def failures(self) -> list:
        return [(node.support, c) for node in self.root.walk() for c in node.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "bound": number_to_json(self.bound),
            "hierarchy_bound": number_to_json(self.hierarchy_bound),
            "hierarchy_note": "derived from 2*lambda >= alpha >= 4*rho, not from node checks",
            "M": number_to_json(self.M), "m": number_to_json(self.m),
            "passed": self.passed, "exact": self.exact, "vacuous": self.vacuous,
            "root": self.root.to_dict(),
        }


def _leq(a, b):
    """a <= b, exactly for rationals and up to a relative 1e-12 for floats."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    return float(a) <= float(b) + 1e-12 * max(1.0, abs(float(b)))


def _geq(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a >= b
    return float(a) >= float(b) - 1e-12 * max(1.0, abs(float(b)))


def certify_main(m: BooleanMeasure, Q: Generator, target: str, verify_scp: bool = True,
                 paranoid: bool = False) -> Certificate:
    """Replay the induction behind lambda, alpha >= M(Q) and rho >= m(Q)."""
    if target not in TARGETS:
        raise DomainError(f"target must be one of {TARGETS}, got {target!r}")
    if Q.measure.support != m.support or Q.measure.weights != m.weights:
        raise DomainError("generator is not defined on this measure")
    if verify_scp:
        rep = check_scp(m)
        if not rep.holds:
            raise InfeasibleCouplingError(f"measure fails the SCP: {rep.witness.explanation}", rep.witness)
    stats = validate(Q)
    root = _certify_node(Q, target, paranoid)
    ok = all(c.passed for node in root.walk() for c in node.checks)
    M, mm = stats.M, stats.m
    if stats.vacuous:
        bound = hier = math.inf
    elif target == "rho":
        bound = hier = mm
    else:
        bound = M
        hier = max(M, (2 if target == "lambda" else 4) * mm)
    if not stats.vacuous:
        top = Check("recursive bound >= theorem bound", root.claimed_bound, bound,
                    _geq(root.claimed_bound, bound))
        root.checks.append(top)
        ok = ok and top.passed
    return Certificate(target, bound, hier, M, mm, root, ok, Q.exact)


def _certify_node(Q: Generator, target: str, paranoid: bool) -> CertNode:
    meas = Q.measure
    node = CertNode(meas.bitstrings())
    if meas.size == 1:
        return node
    coords = splittable_coordinates(meas)
    ell = coords[0]
    if paranoid:
        rep = check_scp(meas)
        node.checks.append(Check("node measure has the SCP", rep.holds, True, rep.holds))
    stats = validate(Q)
    node.coordinate, node.M, node.m = ell, stats.M, stats.m
    try:
        d = split_decomposition(Q, ell)
    except InfeasibleCouplingError as exc:
        node.checks.append(Check(f"coupling across x_{ell}: {exc}", 0, 1, False))
        node.claimed_bound = 0
        return node
    a, b = d.projection.rate(0, 1), d.projection.rate(1, 0)
    node.a, node.b = a, b
    if a == 0 or b == 0:
        node.checks.append(Check(f"projection across x_{ell} is irreducible", min(a, b), 0, False))
        node.claimed_bound = _zero(Q.exact)
        return node
    cr = chi(d)
    node.chi = cr.value
    if cr.zero:
        dead = [(t.x, t.y) for t in cr.terms if t.ratio == 0]
        node.notes.append(f"chi = 0: coupled pairs without rate {dead}; the node only supports "
                          f"a zero bound")
    node.floor = a + b if target != "rho" else min(a, b)
    node.checks.append(Check("chi >= crude floor on every coupled pair",
                             cr.value, max(t.crude_floor for t in cr.terms), cr.crude_ok()))
    node.checks.append(Check("chi * max(a, b) >= M", cr.value * max(a, b), stats.M,
                             _geq(cr.value * max(a, b), stats.M)))
    node.checks.append(Check("chi * min(a, b) >= m", cr.value * min(a, b), stats.m,
                             _geq(cr.value * min(a, b), stats.m)))
    ref = stats.m if target == "rho" else stats.M
    node.checks.append(Check(f"chi * projection floor >= {'m' if target == 'rho' else 'M'}",
                             cr.value * node.floor, ref, _geq(cr.value * node.floor, ref)))
    bound = cr.value * node.floor
    for R in d.restrictions:
        child = _certify_node(R, target, paranoid)
        if not child.leaf:
            name = "child m >= parent m" if target == "rho" else "child M >= parent M"
            cv, pv = (child.m, stats.m) if target == "rho" else (child.M, stats.M)
            node.checks.append(Check(name, cv, pv, _geq(cv, pv)))
        node.children.append(child)
        if child.claimed_bound < bound:
            bound = child.claimed_bound
    node.claimed_bound = bound
    return node


# ---------------------------------------------------------------------------
# synthesis of the averaged flip-swap walk

@dataclass
class SynthesisResult:
    per_coordinate: dict      # coordinate -> Generator Q^(l) on the root support
    couplings: dict           # coordinate -> Coupling used across that coordinate
    averaged: Generator
    normalized: Generator
    delta_bound: object
    homogeneity: Optional[int]
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "averaged": self.averaged.to_dict(),
            "normalized": self.normalized.to_dict(),
            "delta": number_to_json(self.averaged.delta),
            "delta_bound": number_to_json(self.delta_bound),
            "homogeneity": self.homogeneity,
            "per_coordinate": {str(k): v.to_dict() for k, v in self.per_coordinate.items()},
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


class _Synth:
    def __init__(self, verify: bool):
        self.cache = {}
        self.checks = []
        self.verify = verify

    def run(self, mu: BooleanMeasure):
        """Return (Q*, per-coordinate walks, couplings) for ``mu``."""
        if mu in self.cache:
            return self.cache[mu]
        exact = mu.exact
        if mu.size == 1:
            out = (Generator(mu, {}), {}, {})
            self.cache[mu] = out
            return out
        free = splittable_coordinates(mu)
        if len(free) < mu.n:
            # constant coordinates: solve on the smaller cube and lift back
            fixed = {c: coord_bit(mu.support[0], c, mu.n) for c in range(1, mu.n + 1) if c not in free}
            small = condition(mu, fixed)
            Qs, _, _ = self.run(small.measure)
            out = (Generator(mu, dict(Qs.rates)), {}, {})
            self.cache[mu] = out
            return out

        n = mu.n
        per, kappas = {}, {}
        total = {}
        for ell in range(1, n + 1):
            Q_ell, kappa = self._one_coordinate(mu, ell)
            per[ell], kappas[ell] = Q_ell, kappa
            for key, r in Q_ell.rates.items():
                total[key] = total.get(key, _zero(exact)) + r
        inv_n = Fraction(1, n) if exact else 1.0 / n
        Qstar = Generator(mu, {k: r * inv_n for k, r in total.items()})
        k = homogeneity(mu)
        bound = min(n, 2 * k) if k is not None else n
        self.checks.append(Check(f"Delta(Q*) <= {bound} on {n}-cube", Qstar.delta, bound,
                                 _geq(bound, Qstar.delta)))
        out = (Qstar, per, kappas)
        self.cache[mu] = out
        return out

    def _one_coordinate(self, mu, ell):
        c0 = condition(mu, {ell: 0})
        c1 = condition(mu, {ell: 1})
        Q0, _, _ = self.run(c0.measure)
        Q1, _, _ = self.run(c1.measure)
        kappa = flip_swap_coupling(mu, ell)
        idx = mu.index
        p0 = sum(mu.weights[idx[c0.lift(s)]] for s in c0.measure.support)
        p1 = 1 - p0
        rates = {}
        for Qi, ci in ((Q0, c0), (Q1, c1)):
            lift = [idx[ci.lift(s)] for s in ci.measure.support]
            for (i, j), r in Qi.rates.items():
                rates[(lift[i], lift[j])] = r
        L0 = kappa.left.support
        R1 = kappa.right.support
        w = mu.weights
        for (i, j), k in kappa.mass.items():
            x, y = idx[L0[i]], idx[R1[j]]
            rates[(x, y)] = p0 * p1 * k / w[x]
            rates[(y, x)] = p0 * p1 * k / w[y]
        Q_ell = Generator(mu, rates)
        if self.verify:
            self._verify(mu, ell, Q_ell, Q0, Q1, kappa, p0, p1)
        return Q_ell, kappa

    def _verify(self, mu, ell, Q_ell, Q0, Q1, kappa, p0, p1):
        tag = f"n={mu.n} |supp|={mu.size} l={ell}"
        exit_ = Q_ell.exit_rates
        lims = []
        for s, q in zip(mu.support, exit_):
            if coord_bit(s, ell, mu.n):
                lim, name = Q1.delta + p0, "diag:1"
            else:
                lim, name = Q0.delta + p1, "diag:0"
            lims.append(lim)
            if not _geq(lim, q):
                self.checks.append(Check(f"{name} at {bitstring(s, mu.n)} ({tag})", q, lim, False))
                return
        self.checks.append(Check(f"diagonal bounds ({tag})", max(exit_), max(lims), True))
        d = split_decomposition(Q_ell, ell, kappa)
        cr = chi(d)
        a, b = d.projection.rate(0, 1), d.projection.rate(1, 0)
        lhs1, lhs2 = p0 / b, p1 / a
        exact = isinstance(cr.value, Fraction) and isinstance(lhs1, Fraction)
        if exact:
            ok = cr.value == lhs1 == lhs2
        else:
            ok = abs(float(cr.value) - float(lhs1)) <= 1e-10 and abs(float(lhs1) - float(lhs2)) <= 1e-10
        self.checks.append(Check(f"chi = pibar(0)/Qbar(1,0) = pibar(1)/Qbar(0,1) ({tag})",
                                 cr.value, lhs1, ok))
        self.checks.append(Check(f"crude floors <= chi ({tag})", cr.value,
                                 max(t.crude_floor for t in cr.terms), cr.crude_ok()))


def synthesize_flip_swap(m: BooleanMeasure, verify: bool = True) -> SynthesisResult:
    """Flip-swap walk with lambda, alpha >= 1 and Delta <= n (or 2k), plus its normalization."""
    if m.size == 1:
        Z = Generator(m, {})
        return SynthesisResult({}, {}, Z, Z, 0, homogeneity(m), [])
    s = _Synth(verify)
    Qstar, per, kappas = s.run(m)
    k = homogeneity(m)
    bound = 2 * k if k is not None else m.n
    checks = list(s.checks)
    st = validate(Qstar)
    checks.append(Check("Q* is a flip-swap walk", st.flip_swap, True, st.flip_swap))
    checks.append(Check(f"Delta(Q*) <= {bound}", Qstar.delta, bound, _geq(bound, Qstar.delta)))
    from .chain import normalize
    return SynthesisResult(per, kappas, Qstar, normalize(Qstar), bound, k, checks)
