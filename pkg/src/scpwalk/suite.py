"""Reference corpus and the acceptance criteria run over it."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
import math
import time

import numpy as np

from .chain import Generator, build_mcmc, two_state, validate
from .concentration import herbst_check, lipschitz_constant, pemantle_peres_check
from .decompose import certify_main, identity_check, split_decomposition, synthesize_flip_swap
from .dynamics import evolve, mixing_bound, mixing_time
from .functional import poincare_exact, ratio, sobolev_estimate
from .lattice_measure import (BooleanMeasure, ConditionedSumSpec, LEnsembleSpec, ProductSpec,
                              SpanningTreeSpec, build_measure, homogeneity, splittable_coordinates)
from .negdep import check_scp

HALF = Fraction(1, 2)
PRODUCT_P = (Fraction(3, 10), Fraction(6, 10), Fraction(8, 10))
CORRELATED = {0b00: Fraction(2, 5), 0b11: Fraction(2, 5), 0b01: Fraction(1, 10), 0b10: Fraction(1, 10)}

# estimator settings used by the suite
RESTARTS = 16
MAX_ITER = 3000


def l5_matrix(seed: int = 0) -> np.ndarray:
    A = np.random.default_rng(seed).standard_normal((5, 5))
    return A @ A.T


def corpus() -> list:
    """(name, measure) pairs; rational wherever the constructor allows it."""
    out = []
    for n in range(1, 5):
        out.append((f"cube{n}", build_measure(ProductSpec([HALF] * n))))
    out.append(("product3", build_measure(ProductSpec(PRODUCT_P))))
    for k in range(4):
        out.append((f"product3_slice{k}", build_measure(ConditionedSumSpec(PRODUCT_P, k))))
    for n, k in ((4, 2), (5, 2), (6, 3)):
        out.append((f"slice{n}{k}", build_measure(ConditionedSumSpec([HALF] * n, k))))
    out.append(("trees_triangle", build_measure(SpanningTreeSpec(3, [(0, 1), (1, 2), (0, 2)]))))
    out.append(("trees_c4", build_measure(SpanningTreeSpec(4, [(0, 1), (1, 2), (2, 3), (0, 3)]))))
    k4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    out.append(("trees_k4", build_measure(SpanningTreeSpec(4, k4))))
    out.append(("dpp5", build_measure(LEnsembleSpec(l5_matrix(0)))))
    return out


def random_lipschitz(m: BooleanMeasure, rng, metric="hamming") -> np.ndarray:
    """Random observable on the support, scaled to Lipschitz constant exactly 1."""
    f = rng.standard_normal(m.size)
    L = lipschitz_constant(f, m, metric) if m.size > 1 else 0.0
    return f / L if L > 0 else f


@dataclass
class Entry:
    name: str
    measure: BooleanMeasure

    @cached_property
    def mcmc(self) -> Generator:
        return build_mcmc(self.measure)

    @cached_property
    def stats(self):
        return validate(self.mcmc)

    @property
    def trivial(self) -> bool:
        return self.measure.size < 2

    @cached_property
    def lam(self):
        return poincare_exact(self.mcmc)

    @cached_property
    def lsi(self):
        return sobolev_estimate(self.mcmc, "lsi", restarts=RESTARTS, max_iter=MAX_ITER)

    @cached_property
    def mlsi(self):
        return sobolev_estimate(self.mcmc, "mlsi", restarts=RESTARTS, max_iter=MAX_ITER)

    @cached_property
    def alpha_cert(self):
        return certify_main(self.measure, self.mcmc, "alpha", verify_scp=False)

    @cached_property
    def synthesis(self):
        return synthesize_flip_swap(self.measure)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str = ""
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d}: {self.title} ({self.detail}; {self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "detail": self.detail, "failures": self.failures[:20]}


class Suite:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.entries = [Entry(n, m) for n, m in corpus()]

    def rng(self, salt: int):
        return np.random.default_rng([self.seed, salt])

    @property
    def chains(self):
        return [e for e in self.entries if not e.trivial]

    # 1
    def two_state(self):
        rng = self.rng(1)
        fails, worst_lam, worst_rho = [], 0.0, 0.0
        for _ in range(25):
            a, b = rng.uniform(0.1, 5.0, size=2)
            Q = two_state(float(a), float(b))
            lam = poincare_exact(Q).value
            rho = sobolev_estimate(Q, "lsi", restarts=RESTARTS, max_iter=MAX_ITER).value
            closed = (a - b) / (math.log(a) - math.log(b))
            worst_lam = max(worst_lam, abs(lam - (a + b)))
            worst_rho = max(worst_rho, abs(rho - closed))
            if abs(lam - (a + b)) > 1e-10 or abs(rho - closed) > 1e-3:
                fails.append({"a": a, "b": b, "lambda": lam, "rho": rho, "rho_closed": closed})
        return not fails, f"max |lambda-(a+b)|={worst_lam:.2e}, max |rho-closed|={worst_rho:.2e}", fails

    # 2
    def hierarchy(self):
        fails, count = [], 0
        for e in self.chains:
            f = e.lsi.witness
            r = {k: ratio(e.mcmc, f, k) for k in ("lsi", "mlsi", "poincare")}
            count += 1
            if not (4 * r["lsi"] <= r["mlsi"] + 1e-9 and r["mlsi"] <= 2 * r["poincare"] + 1e-9):
                fails.append({"measure": e.name, **r})
        return not fails, f"{count} chains", fails

    # 3
    def scp(self):
        fails = []
        for e in self.entries:
            rep = check_scp(e.measure)
            if not rep.holds:
                fails.append({"measure": e.name, "witness": rep.witness.to_dict()})
        bad = BooleanMeasure.from_table(2, CORRELATED)
        rep = check_scp(bad)
        w = rep.witness
        ok_bad = (not rep.holds and w is not None and list(w.S) == [1] and w.x == "1" and w.y == "0")
        if not ok_bad:
            fails.append({"measure": "correlated", "report": rep.to_dict()})
        return not fails, f"{len(self.entries)} corpus measures + correlated counterexample", fails

    # 4
    def main_theorem(self):
        fails = []
        for e in self.chains:
            M, m = float(e.stats.M), float(e.stats.m)
            lam, al, rho = e.lam.value, e.mlsi.value, e.lsi.value
            if lam < max(M, 2 * m) - 1e-10 or al < max(M, 4 * m) - 1e-6 or rho < m - 1e-6:
                fails.append({"measure": e.name, "M": M, "m": m, "lambda": lam, "alpha_est": al,
                              "rho_est": rho})
        return not fails, f"{len(self.chains)} chains", fails

    # 5
    def corollary(self):
        fails, checked = [], 0
        for e in self.chains:
            k = homogeneity(e.measure)
            if k is None:
                continue
            n = e.measure.n
            target = Fraction(1, 2 * k * n)
            cert = e.alpha_cert
            if not (cert.passed and isinstance(cert.bound, Fraction) and cert.bound == target):
                fails.append({"measure": e.name, "bound": str(cert.bound), "expected": str(target)})
            for x, px in enumerate(e.measure.weights):
                if float(px) >= math.exp(-1):
                    continue
                for eps in (0.25, 0.125):
                    t = mixing_time(e.mcmc, x, eps)
                    b = mixing_bound("mlsi", target, float(px), eps)
                    checked += 1
                    if t > b:
                        fails.append({"measure": e.name, "x": x, "eps": eps, "t_mix": t, "bound": b})
        return not fails, f"{checked} (x, eps) mixing checks", fails

    # 6
    def synthesis(self):
        fails = []
        for e in self.entries:
            s = e.synthesis
            m = e.measure
            k = homogeneity(m)
            st = validate(s.averaged)
            cap = 2 * k if k is not None else m.n
            d = s.averaged.delta
            if m.exact:
                delta_ok = d <= cap
            else:
                delta_ok = float(d) <= cap + 1e-12
            gap_ok = True
            gap = None
            if m.size > 1:
                gap = poincare_exact(s.normalized).value
                floor = 1 / (2 * k) if k is not None else 1 / m.n
                gap_ok = gap >= floor - 1e-9
            if not (st.flip_swap and delta_ok and gap_ok and s.passed):
                fails.append({"measure": e.name, "delta": str(d), "cap": cap, "gap": gap,
                              "flip_swap": st.flip_swap, "checks_passed": s.passed})
        return not fails, f"{len(self.entries)} measures", fails

    # 7
    def identities(self):
        rng = self.rng(7)
        fails, worst, count = [], 0.0, 0
        for e in self.chains:
            for ell in splittable_coordinates(e.measure):
                d = split_decomposition(e.mcmc, ell)
                for _ in range(100):
                    f = np.exp(rng.normal(0.0, 1.0, e.measure.size))
                    rep = identity_check(d, f)
                    count += 1
                    worst = max(worst, rep.max_residual)
                    if rep.max_residual > 1e-10 or not rep.jensen_ok:
                        fails.append({"measure": e.name, "coord": ell, "residual": rep.max_residual,
                                      "jensen_ok": rep.jensen_ok})
        return not fails, f"{count} observables, max residual {worst:.2e}", fails

    # 8
    def chi_bookkeeping(self):
        fails, count = [], 0
        for e in self.entries:
            for c in e.synthesis.checks:
                if c.name.startswith("chi =") or c.name.startswith("crude floors"):
                    count += 1
                    if not c.passed:
                        fails.append({"measure": e.name, "check": c.to_dict()})
        return not fails, f"{count} node checks", fails

    # 9
    def concentration(self):
        rng = self.rng(9)
        fails, herbst_n, pp_n = [], 0, 0
        for e in self.chains:
            alpha = e.alpha_cert.best
            for _ in range(20):
                f = random_lipschitz(e.measure, rng)
                for sign in (1, -1):
                    rep = herbst_check(e.measure, e.mcmc, sign * f, alpha)
                    herbst_n += 1
                    if not rep.all_pass:
                        fails.append({"measure": e.name, "kind": "herbst", "report": rep.to_dict()})
            k = homogeneity(e.measure)
            if k is None:
                continue
            for _ in range(20):
                f = random_lipschitz(e.measure, rng)
                rep = pemantle_peres_check(e.measure, f, np.linspace(0.0, 2 * k, 16))
                pp_n += 1
                if not rep.all_pass:
                    fails.append({"measure": e.name, "kind": "pp", "report": rep.to_dict()})
        return not fails, f"{herbst_n} Herbst and {pp_n} Pemantle-Peres reports", fails

    # 10
    def dynamics(self):
        fails, worst = [], 0.0
        for a, b in ((1.0, 1.0), (0.5, 2.0), (3.0, 0.25)):
            Q = two_state(a, b)
            s = a + b
            for t in np.round(np.arange(0.1, 5.0001, 0.1), 10):
                e = math.exp(-s * t)
                closed0 = np.array([b / s + a / s * e, a / s * (1 - e)])
                closed1 = np.array([b / s * (1 - e), a / s + b / s * e])
                err = max(np.abs(evolve(Q, 0, t) - closed0).max(), np.abs(evolve(Q, 1, t) - closed1).max())
                worst = max(worst, err)
                if err > 1e-10:
                    fails.append({"a": a, "b": b, "t": float(t), "err": err})
        Q = two_state(1, 1)
        for eps in (0.05, 0.1, 0.125, 0.25, 0.4):
            t = mixing_time(Q, 0, eps)
            want = 0.5 * math.log(1 / (2 * eps))
            if abs(t - want) > 1e-5:
                fails.append({"eps": eps, "t_mix": t, "closed": want})
        return not fails, f"max semigroup error {worst:.2e}", fails

    CRITERIA = (
        (1, "two-state closed forms", "two_state"),
        (2, "hierarchy at the LSI witness", "hierarchy"),
        (3, "SCP verdicts", "scp"),
        (4, "universal lower bounds vs exact/estimated constants", "main_theorem"),
        (5, "alpha >= 1/(2kn) exactly and mixing-time bound", "corollary"),
        (6, "flip-swap synthesis", "synthesis"),
        (7, "decomposition identities and Jensen step", "identities"),
        (8, "chi bookkeeping in the synthesized walks", "chi_bookkeeping"),
        (9, "Herbst and Pemantle-Peres tails", "concentration"),
        (10, "semigroup and mixing-time oracle", "dynamics"),
    )

    def run_one(self, number: int) -> CriterionResult:
        for num, title, attr in self.CRITERIA:
            if num == number:
                t0 = time.perf_counter()
                try:
                    ok, detail, fails = getattr(self, attr)()
                except Exception as exc:  # a crash is a failed criterion, reported as such
                    ok, detail, fails = False, f"raised {type(exc).__name__}: {exc}", []
                return CriterionResult(num, title, ok, detail, fails, time.perf_counter() - t0)
        raise KeyError(f"no criterion {number}")

    def run(self, numbers=None) -> list:
        numbers = numbers or [c[0] for c in self.CRITERIA]
        return [self.run_one(k) for k in numbers]
