"""Shared fixtures: random elements, the bivector corpus and independent oracles.

The oracles re-implement the ghost algebra with explicit generator lists and
sympy coefficients, so sign conventions are checked against a second, naive
implementation rather than against the packed bitmask code.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import sympy as sp

from bfv import BFVElement, Poly, PoissonBivector, VarTable, parse_element, poly_parse

# -- random data ---------------------------------------------------------------

def random_poly(rng: random.Random, vars: VarTable, max_deg=3, max_terms=3, time=False) -> Poly:
    idx = list(range(vars.ncoords))
    if time and vars.time_index is not None:
        idx.append(vars.time_index)
    out = Poly.zero(vars)
    for _ in range(rng.randint(0, max_terms)):
        deg = rng.randint(0, max_deg)
        m = Poly.const(vars, Fraction(rng.randint(-5, 5), rng.randint(1, 3)))
        for _ in range(deg):
            if idx:
                m = m * Poly.var(vars, rng.choice(idx))
        out = out + m
    return out


def random_word(rng, k, p=None, q=None):
    p = rng.randint(0, k) if p is None else p
    q = rng.randint(0, k) if q is None else q
    return tuple(sorted(rng.sample(range(1, k + 1), p))), tuple(sorted(rng.sample(range(1, k + 1), q)))


def random_element(rng, vars, max_terms=4, max_deg=3, total=None, bidegree=None, time=False) -> BFVElement:
    """Random element; ``total`` fixes the total degree, ``bidegree`` fixes ``(p, q)``."""
    k = vars.k
    out = BFVElement.zero(vars)
    for _ in range(rng.randint(1, max_terms)):
        if bidegree is not None:
            g, m = random_word(rng, k, *bidegree)
        elif total is not None:
            choices = [(p, p - total) for p in range(k + 1) if 0 <= p - total <= k]
            g, m = random_word(rng, k, *rng.choice(choices))
        else:
            g, m = random_word(rng, k)
        coeff = random_poly(rng, vars, max_deg, 2, time)
        if not coeff.terms:
            coeff = Poly.const(vars, rng.choice([-2, -1, 1, 3]))
        out = out + BFVElement.word(vars, g, m, coeff)
    if out.is_zero():
        return random_element(rng, vars, max_terms, max_deg, total, bidegree, time)
    return out


# -- corpus --------------------------------------------------------------------

def _bivector(vars, entries):
    return PoissonBivector.from_names(vars, {pair: poly_parse(p, vars) for pair, p in entries.items()})


def corpus():
    """``(label, bivector, zero section coisotropic?)`` triples."""
    std = VarTable.standard
    ex_a = VarTable(("x",), ("y",), "t")
    out = [
        ("zero-n1k2", PoissonBivector(std(1, 2)), True),
        ("ex-a", _bivector(ex_a, {("x", "y"): "1"}), True),
        ("ex-b", _bivector(std(1, 2), {("y1", "y2"): "y1"}), True),
        ("so3", _bivector(std(0, 3), {("y1", "y2"): "y3", ("y2", "y3"): "y1", ("y3", "y1"): "y2"}), True),
        ("euler", _bivector(std(1, 2), {("x1", "y1"): "y1", ("x1", "y2"): "y2"}), True),
        ("quadratic", _bivector(std(2, 2), {("y1", "y2"): "x1*y1 + y2^2"}), True),
        ("nambu", _bivector(std(1, 3), {("y1", "y2"): "x1*y1*y2", ("y2", "y3"): "x1*y2*y3",
                                        ("y3", "y1"): "x1*y1*y3"}), True),
        ("square", _bivector(std(1, 3), {("y1", "y2"): "y3^2"}), True),
        ("ex-c", _bivector(std(1, 2), {("y1", "y2"): "x1"}), False),
        ("constant", _bivector(std(0, 2), {("y1", "y2"): "1"}), False),
        ("so3-shifted", _bivector(std(0, 3), {("y1", "y2"): "y3 + 1", ("y2", "y3"): "y1",
                                              ("y3", "y1"): "y2"}), False),
        ("affine", _bivector(std(1, 2), {("y1", "y2"): "x1^2 + y1"}), False),
        ("product", _bivector(std(2, 2), {("y1", "y2"): "x1*x2 + y2"}), False),
        ("offdiag", _bivector(std(1, 3), {("y1", "y3"): "x1*y2 + x1^2"}), False),
    ]
    return out


def by_label(label):
    for name, pi, flag in corpus():
        if name == label:
            return pi
    raise KeyError(label)


def el(text, vars):
    return parse_element(text, vars)


# -- sympy-based oracle ----------------------------------------------------------

def symbols(vars):
    return [sp.Symbol(n) for n in vars.names]


def to_sympy(p: Poly):
    syms = symbols(p.vars)
    total = sp.Integer(0)
    for exps, c in p.items():
        term = sp.Rational(c.numerator, c.denominator)
        for s, e in zip(syms, exps):
            term *= s ** e
        total += term
    return sp.expand(total)


class Grassmann:
    """Naive super-algebra: words are tuples of labels ``('e', i)`` / ``('p', i)``."""

    def __init__(self, vars: VarTable, terms=None):
        self.vars = vars
        self.terms = {w: c for w, c in (terms or {}).items() if sp.expand(c) != 0}

    @staticmethod
    def key(label):
        return (0 if label[0] == "e" else 1, label[1])

    @classmethod
    def normal(cls, word):
        """Bubble sort into canonical order, returning ``(sign, word)`` or ``(0, None)``."""
        w = list(word)
        if len(set(w)) != len(w):
            return 0, None
        sign = 1
        for i in range(len(w)):
            for j in range(len(w) - 1 - i):
                if cls.key(w[j]) > cls.key(w[j + 1]):
                    w[j], w[j + 1] = w[j + 1], w[j]
                    sign = -sign
        return sign, tuple(w)

    @classmethod
    def of(cls, a: BFVElement) -> "Grassmann":
        terms = {}
        for mask, f in a.terms.items():
            k = a.vars.k
            word = tuple(("e", i + 1) for i in range(k) if mask >> i & 1) + tuple(
                ("p", j + 1) for j in range(k) if mask >> (k + j) & 1
            )
            terms[word] = to_sympy(f)
        return cls(a.vars, terms)

    def __add__(self, o):
        t = dict(self.terms)
        for w, c in o.terms.items():
            t[w] = t.get(w, 0) + c
        return Grassmann(self.vars, t)

    def __neg__(self):
        return Grassmann(self.vars, {w: -c for w, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-o)

    def scale(self, c):
        return Grassmann(self.vars, {w: c * v for w, v in self.terms.items()})

    def __mul__(self, o):
        t = {}
        for (w1, c1), (w2, c2) in itertools.product(self.terms.items(), o.terms.items()):
            s, w = self.normal(w1 + w2)
            if s:
                t[w] = t.get(w, 0) + s * c1 * c2
        return Grassmann(self.vars, t)

    def left_d(self, label):
        t = {}
        for w, c in self.terms.items():
            if label in w:
                pos = w.index(label)
                t[w[:pos] + w[pos + 1:]] = t.get(w[:pos] + w[pos + 1:], 0) + (-1) ** pos * c
        return Grassmann(self.vars, t)

    def right_d(self, label):
        t = {}
        for w, c in self.terms.items():
            if label in w:
                pos = w.index(label)
                rest = w[:pos] + w[pos + 1:]
                t[rest] = t.get(rest, 0) + (-1) ** (len(w) - 1 - pos) * c
        return Grassmann(self.vars, t)

    def map(self, fn):
        return Grassmann(self.vars, {w: fn(c) for w, c in self.terms.items()})

    def is_zero(self):
        return not self.terms

    def __eq__(self, o):
        return (self - o).is_zero()


def oracle_g_bracket(a: Grassmann, b: Grassmann) -> Grassmann:
    out = Grassmann(a.vars)
    for i in range(1, a.vars.k + 1):
        out = out + a.right_d(("e", i)) * b.left_d(("p", i))
        out = out + a.right_d(("p", i)) * b.left_d(("e", i))
    return out


def oracle_poisson(pi: PoissonBivector, f, g):
    syms = symbols(pi.vars)
    out = 0
    for a in range(pi.vars.ncoords):
        for b in range(pi.vars.ncoords):
            pab = to_sympy(pi[a, b])
            if pab != 0:
                out += pab * sp.diff(f, syms[a]) * sp.diff(g, syms[b])
    return sp.expand(out)


def oracle_bfv_bracket(pi, a: Grassmann, b: Grassmann) -> Grassmann:
    """Poisson part on coefficients with the product sign of the words, plus the pairing part."""
    t = {}
    for (w1, c1), (w2, c2) in itertools.product(a.terms.items(), b.terms.items()):
        s, w = Grassmann.normal(w1 + w2)
        if s:
            t[w] = t.get(w, 0) + s * oracle_poisson(pi, c1, c2)
    return Grassmann(a.vars, t) + oracle_g_bracket(a, b)


# -- acceptance bookkeeping ------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str):
    """Store and print the verdict for acceptance criterion ``n``."""
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok
