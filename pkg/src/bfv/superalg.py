"""The bigraded ghost algebra over polynomial coefficients.

An element is a finite sum ``f * e_I * eps_J`` with ``f`` a :class:`Poly`.
Ghost words are bitmasks over the ``2k`` odd generators: bit ``i`` is
``e_{i+1}`` and bit ``k + j`` is ``eps_{j+1}``.  The canonical order of a word
is ascending bit order, so every ``e`` precedes every ``eps``.

Sign conventions:

* the product sign is the parity of the number of transpositions needed to
  merge two words into ascending order;
* ``[e_i, eps_j]_G = [eps_j, e_i]_G = delta_ij`` and coefficients are central
  for ``[.,.]_G``, which is computed as
  ``sum_i (F d<-/de_i)(d->/deps_i G) + (F d<-/deps_i)(d->/de_i G)``;
* brackets are graded antisymmetric, ``[a, b] = -(-1)^{|a||b|} [b, a]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence, Union

from ._parse import Builder, format_rational, join_signed, parse_with
from .errors import (
    BidegreeError,
    ContextMismatchError,
    NotCertifiableError,
    ParseError,
    WitnessRequiredError,
)
from .poly import Poly, VarTable

Scalar = Union[int, Fraction]


def _popcount(x: int) -> int:
    return bin(x).count("1")


@lru_cache(maxsize=None)
def _merge_sign(a: int, b: int) -> int:
    """Sign of ``word(a) * word(b)`` after sorting; 0 if the words share a generator."""
    if a & b:
        return 0
    s = 0
    j = 0
    bb = b
    while bb:
        if bb & 1:
            s += _popcount(a >> (j + 1))
        bb >>= 1
        j += 1
    return -1 if s & 1 else 1


def _left_sign(mask: int, bit: int) -> int:
    return -1 if _popcount(mask & ((1 << bit) - 1)) & 1 else 1


def _right_sign(mask: int, bit: int) -> int:
    return -1 if _popcount(mask >> (bit + 1)) & 1 else 1


@dataclass(frozen=True)
class GhostWord:
    """Canonical basis word ``e_I eps_J`` with 1-based ascending index tuples."""

    ghosts: tuple[int, ...] = ()
    momenta: tuple[int, ...] = ()

    def __post_init__(self):
        for idx in (self.ghosts, self.momenta):
            if list(idx) != sorted(set(idx)):
                raise ValueError("ghost word indices must be strictly increasing")

    @property
    def bidegree(self) -> tuple[int, int]:
        return len(self.ghosts), len(self.momenta)

    def mask(self, k: int) -> int:
        m = 0
        for i in self.ghosts:
            if not 1 <= i <= k:
                raise ValueError(f"ghost index {i} outside 1..{k}")
            m |= 1 << (i - 1)
        for j in self.momenta:
            if not 1 <= j <= k:
                raise ValueError(f"momentum index {j} outside 1..{k}")
            m |= 1 << (k + j - 1)
        return m

    @classmethod
    def from_mask(cls, mask: int, k: int) -> "GhostWord":
        ghosts = tuple(i + 1 for i in range(k) if mask >> i & 1)
        momenta = tuple(j + 1 for j in range(k) if mask >> (k + j) & 1)
        return cls(ghosts, momenta)

    def text(self) -> str:
        parts = []
        if self.ghosts:
            parts.append("e{" + ",".join(map(str, self.ghosts)) + "}")
        if self.momenta:
            parts.append("eps{" + ",".join(map(str, self.momenta)) + "}")
        return "*".join(parts)


class BFVElement:
    """Element of the ghost algebra: a map from ghost-word masks to polynomials."""

    __slots__ = ("vars", "terms")

    def __init__(self, vars: VarTable, terms: Optional[Mapping[int, Poly]] = None):
        self.vars = vars
        self.terms = {m: p for m, p in (terms or {}).items() if p.terms}

    @classmethod
    def _raw(cls, vars, terms):
        a = cls.__new__(cls)
        a.vars = vars
        a.terms = terms
        return a

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, vars: VarTable) -> "BFVElement":
        return cls._raw(vars, {})

    @classmethod
    def scalar(cls, vars: VarTable, f: Union[Poly, Scalar]) -> "BFVElement":
        if not isinstance(f, Poly):
            f = Poly.const(vars, f)
        return cls._raw(vars, {0: f} if f.terms else {})

    @classmethod
    def word(cls, vars: VarTable, ghosts: Sequence[int] = (), momenta: Sequence[int] = (),
             coeff: Union[Poly, Scalar] = 1) -> "BFVElement":
        """``coeff * e_{ghosts...} * eps_{momenta...}`` in the order given."""
        out = cls.scalar(vars, coeff)
        for i in ghosts:
            out = out * cls.e(vars, i)
        for j in momenta:
            out = out * cls.eps(vars, j)
        return out

    @classmethod
    def e(cls, vars: VarTable, i: int) -> "BFVElement":
        if not 1 <= i <= vars.k:
            raise ValueError(f"ghost index {i} outside 1..{vars.k}")
        return cls._raw(vars, {1 << (i - 1): Poly.const(vars, 1)})

    @classmethod
    def eps(cls, vars: VarTable, j: int) -> "BFVElement":
        if not 1 <= j <= vars.k:
            raise ValueError(f"momentum index {j} outside 1..{vars.k}")
        return cls._raw(vars, {1 << (vars.k + j - 1): Poly.const(vars, 1)})

    # -- grading ------------------------------------------------------------
    @property
    def k(self) -> int:
        return self.vars.k

    def bidegree_of(self, mask: int) -> tuple[int, int]:
        k = self.vars.k
        return _popcount(mask & ((1 << k) - 1)), _popcount(mask >> k)

    def bidegrees(self) -> set[tuple[int, int]]:
        return {self.bidegree_of(m) for m in self.terms}

    def total_degrees(self) -> set[int]:
        return {p - q for p, q in self.bidegrees()}

    def component(self, p: int, q: int) -> "BFVElement":
        return BFVElement._raw(
            self.vars, {m: f for m, f in self.terms.items() if self.bidegree_of(m) == (p, q)}
        )

    def resolution_component(self, r: int) -> "BFVElement":
        k = self.vars.k
        return BFVElement._raw(self.vars, {m: f for m, f in self.terms.items() if _popcount(m >> k) == r})

    def resolution_degrees(self) -> list[int]:
        k = self.vars.k
        return sorted({_popcount(m >> k) for m in self.terms})

    def is_bidegree(self, p: int, q: int) -> bool:
        return all(b == (p, q) for b in self.bidegrees())

    def coefficient(self, ghosts: Sequence[int] = (), momenta: Sequence[int] = ()) -> Poly:
        mask = GhostWord(tuple(ghosts), tuple(momenta)).mask(self.vars.k)
        return self.terms.get(mask, Poly.zero(self.vars))

    def scalar_part(self) -> Poly:
        return self.terms.get(0, Poly.zero(self.vars))

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "BFVElement"):
        if other.vars is not self.vars and other.vars != self.vars:
            raise ContextMismatchError("elements live in different problem contexts")

    def _lift(self, other):
        if isinstance(other, BFVElement):
            self._check(other)
            return other
        if isinstance(other, (Poly, int, Fraction)):
            return BFVElement.scalar(self.vars, other)
        return None

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        terms = dict(self.terms)
        for m, f in o.terms.items():
            g = terms.get(m)
            if g is None:
                terms[m] = f
            else:
                s = g + f
                if s.terms:
                    terms[m] = s
                else:
                    del terms[m]
        return BFVElement._raw(self.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return BFVElement._raw(self.vars, {m: -f for m, f in self.terms.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (Poly, int, Fraction)):
            if isinstance(other, Poly):
                if other.vars != self.vars:
                    raise ContextMismatchError("coefficient over a different variable table")
            terms = {m: f * other for m, f in self.terms.items()}
            return BFVElement._raw(self.vars, {m: f for m, f in terms.items() if f.terms})
        if not isinstance(other, BFVElement):
            return NotImplemented
        self._check(other)
        acc: dict[int, Poly] = {}
        for m1, f1 in self.terms.items():
            for m2, f2 in other.terms.items():
                s = _merge_sign(m1, m2)
                if not s:
                    continue
                prod = f1 * f2
                if s < 0:
                    prod = -prod
                m = m1 | m2
                prev = acc.get(m)
                acc[m] = prod if prev is None else prev + prod
        return BFVElement._raw(self.vars, {m: f for m, f in acc.items() if f.terms})

    def __rmul__(self, other):
        if isinstance(other, (Poly, int, Fraction)):
            return self * other
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        out = BFVElement.scalar(self.vars, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            other = BFVElement.scalar(self.vars, other)
        if not isinstance(other, BFVElement):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # -- coefficient maps ---------------------------------------------------
    def map_coefficients(self, fn: Callable[[Poly], Poly]) -> "BFVElement":
        terms = {m: fn(f) for m, f in self.terms.items()}
        return BFVElement._raw(self.vars, {m: f for m, f in terms.items() if f.terms})

    def subst(self, assignments) -> "BFVElement":
        return self.map_coefficients(lambda f: f.subst(assignments))

    def diff(self, var) -> "BFVElement":
        return self.map_coefficients(lambda f: f.diff(var))

    def integrate(self, var) -> "BFVElement":
        return self.map_coefficients(lambda f: f.integrate(var))

    # -- odd derivatives ----------------------------------------------------
    def left_derivative(self, bit: int) -> "BFVElement":
        """``d->/d theta`` for the odd generator at ``bit``."""
        out = {}
        b = 1 << bit
        for m, f in self.terms.items():
            if m & b:
                out[m ^ b] = f if _left_sign(m, bit) > 0 else -f
        return BFVElement._raw(self.vars, out)

    def right_derivative(self, bit: int) -> "BFVElement":
        out = {}
        b = 1 << bit
        for m, f in self.terms.items():
            if m & b:
                out[m ^ b] = f if _right_sign(m, bit) > 0 else -f
        return BFVElement._raw(self.vars, out)

    # -- text ---------------------------------------------------------------
    def _sorted_masks(self):
        k = self.vars.k

        def key(m):
            w = GhostWord.from_mask(m, k)
            return (len(w.ghosts) + len(w.momenta), w.ghosts, w.momenta)

        return sorted(self.terms, key=key)

    def signed_terms(self) -> list[tuple[Fraction, str]]:
        k = self.vars.k
        parts = []
        for m in self._sorted_masks():
            word = GhostWord.from_mask(m, k).text()
            for c, mono in self.terms[m].signed_terms():
                body = "*".join(s for s in (mono, word) if s)
                parts.append((c, body))
        return parts

    def __str__(self):
        return join_signed(self.signed_terms(), _render_term)

    def __repr__(self):
        return f"BFVElement({str(self)!r})"


def _render_term(c: Fraction, body: str) -> str:
    if not body:
        return format_rational(c)
    if c == 1:
        return body
    return f"{format_rational(c)}*{body}"


# -- text interface -----------------------------------------------------------

class _ElementBuilder(Builder):
    def __init__(self, vars: VarTable):
        self.vars = vars

    def const(self, value):
        return BFVElement.scalar(self.vars, value)

    def var(self, name):
        return BFVElement.scalar(self.vars, Poly.var(self.vars, name))

    def braced(self, name, indices):
        k = self.vars.k
        if name not in ("e", "eps"):
            raise ParseError(f"unknown braced atom {name}{{...}}")
        if any(not 1 <= i <= k for i in indices):
            raise ParseError(f"index out of range 1..{k} in {name}{{...}}")
        make = BFVElement.e if name == "e" else BFVElement.eps
        out = BFVElement.scalar(self.vars, 1)
        for i in indices:
            out = out * make(self.vars, i)
        return out

    def as_constant(self, value):
        if not value.terms:
            return Fraction(0)
        if set(value.terms) == {0}:
            return value.terms[0].constant_value()
        return None


def parse_element(text: str, vars: VarTable) -> BFVElement:
    """Parse ``"y1*e{1} + y2*e{2} - e{1,2}*eps{1}"`` style text."""
    return parse_with(text, _ElementBuilder(vars))


def serialize_element(a: BFVElement) -> str:
    """Canonical text of ``a``; ``parse_element`` inverts it exactly."""
    return str(a)


# -- core operations ------------------------------------------------------------

def bfv_mul(a: BFVElement, b: BFVElement) -> BFVElement:
    return a * b


def g_bracket(a: BFVElement, b: BFVElement) -> BFVElement:
    """The pairing bracket ``[a, b]_G``; coefficients are inert."""
    a._check(b)
    k = a.vars.k
    acc: dict[int, Poly] = {}
    for m1, f1 in a.terms.items():
        for m2, f2 in b.terms.items():
            coeff = None
            for i in range(k):
                ei, epi = i, k + i
                for left_bit, right_bit in ((ei, epi), (epi, ei)):
                    if not (m1 >> left_bit & 1 and m2 >> right_bit & 1):
                        continue
                    r1 = m1 ^ (1 << left_bit)
                    r2 = m2 ^ (1 << right_bit)
                    s = _merge_sign(r1, r2)
                    if not s:
                        continue
                    s *= _right_sign(m1, left_bit) * _left_sign(m2, right_bit)
                    m = r1 | r2
                    if coeff is None:
                        coeff = f1 * f2
                    term = coeff if s > 0 else -coeff
                    prev = acc.get(m)
                    acc[m] = term if prev is None else prev + term
    return BFVElement._raw(a.vars, {m: f for m, f in acc.items() if f.terms})


def tautological_section(vars: VarTable) -> BFVElement:
    """``Omega_0 = sum_i y_i e_i``."""
    out = BFVElement.zero(vars)
    for i, name in enumerate(vars.fiber_vars, start=1):
        out = out + BFVElement.e(vars, i) * Poly.var(vars, name)
    return out


def section_from_coefficients(vars: VarTable, coeffs: Sequence[Union[Poly, Scalar]]) -> BFVElement:
    """``sum_i coeffs[i] e_{i+1}``, e.g. the pull-back ``p*(mu)`` of a section."""
    if len(coeffs) != vars.k:
        raise ContextMismatchError(f"expected {vars.k} section coefficients, got {len(coeffs)}")
    out = BFVElement.zero(vars)
    for i, c in enumerate(coeffs, start=1):
        out = out + BFVElement.e(vars, i) * (c if isinstance(c, Poly) else Poly.const(vars, c))
    return out


def section_coefficients(s: BFVElement) -> list[Poly]:
    if not s.is_bidegree(1, 0):
        raise BidegreeError("not a fiber section (bidegree (1,0))")
    return [s.coefficient((i,)) for i in range(1, s.vars.k + 1)]


def koszul_delta(sigma: BFVElement, a: BFVElement) -> BFVElement:
    """``delta[sigma](a) = [sigma, a]_G`` for a full section ``sigma`` of bidegree (1,0)."""
    if not sigma.is_bidegree(1, 0):
        raise BidegreeError("koszul_delta needs a section of bidegree (1,0)")
    return g_bracket(sigma, a)


def koszul_homotopy(a: BFVElement) -> BFVElement:
    """Contracting homotopy for ``delta[Omega_0]``.

    On the part of ``a`` with fiber-polynomial degree ``m`` and momentum
    degree ``q`` it is ``(m+q)^{-1} sum_i eps_i * d/dy_i`` (zero when
    ``m + q == 0``).
    """
    vars = a.vars
    k = vars.k
    fiber = list(vars.fiber_indices)
    acc: dict[int, Poly] = {}
    for mask, f in a.terms.items():
        q = _popcount(mask >> k)
        for m, part in f.homogeneous_parts(fiber).items():
            if m + q == 0:
                continue
            scale = Fraction(1, m + q)
            for i in range(k):
                bit = 1 << (k + i)
                s = _merge_sign(bit, mask)
                if not s:
                    continue
                d = part.diff(fiber[i])
                if not d.terms:
                    continue
                d = d * (scale * s)
                nm = mask | bit
                prev = acc.get(nm)
                acc[nm] = d if prev is None else prev + d
    return BFVElement._raw(vars, {m: f for m, f in acc.items() if f.terms})


def chain_i(s: BFVElement) -> BFVElement:
    """Constant extension along the fibers (an inclusion of momentum-free, fiber-constant data)."""
    k = s.vars.k
    for mask, f in s.terms.items():
        if mask >> k:
            raise BidegreeError("chain_i input must be momentum-free")
        if f.depends_on(s.vars.fiber_indices):
            raise BidegreeError("chain_i input must be constant along the fibers")
    return s


def chain_pr(a: BFVElement) -> BFVElement:
    """Drop every term with momenta, then restrict to the zero section ``y = 0``."""
    k = a.vars.k
    zero = {i: 0 for i in a.vars.fiber_indices}
    terms = {m: f.restrict(zero) for m, f in a.terms.items() if not m >> k}
    return BFVElement._raw(a.vars, {m: f for m, f in terms.items() if f.terms})


def _check_mu(vars: VarTable, mu: Sequence[Poly]) -> list[Poly]:
    mu = [m if isinstance(m, Poly) else Poly.const(vars, m) for m in mu]
    if len(mu) != vars.k:
        raise ContextMismatchError(f"section needs {vars.k} coefficients, got {len(mu)}")
    for m in mu:
        if m.depends_on(vars.fiber_indices):
            raise BidegreeError("section coefficients must not depend on fiber variables")
    return mu


def shift_automorphism(mu: Sequence[Poly], a: BFVElement) -> BFVElement:
    """Fiber translation ``y_i -> y_i + mu_i(x)`` acting on coefficients.

    Sends ``Omega_0`` to ``Omega_0 + p*(mu)`` and preserves products and ``[.,.]_G``.
    """
    vars = a.vars
    mu = _check_mu(vars, mu)
    if all(not m.terms for m in mu):
        return a
    assignment = {
        idx: Poly.var(vars, idx) + m for idx, m in zip(vars.fiber_indices, mu) if m.terms
    }
    return a.subst(assignment)


def apply_morphism(
    a: BFVElement,
    odd_images: Sequence[BFVElement],
    coefficient_image: Callable[[Poly], BFVElement],
) -> BFVElement:
    """Apply the algebra morphism fixed by images of ``e_1..e_k, eps_1..eps_k``
    and a map on coefficients."""
    vars = a.vars
    word_cache: dict[int, BFVElement] = {0: BFVElement.scalar(vars, 1)}

    def word_image(mask):
        img = word_cache.get(mask)
        if img is None:
            top = mask.bit_length() - 1
            img = word_image(mask ^ (1 << top)) * odd_images[top]
            word_cache[mask] = img
        return img

    out = BFVElement.zero(vars)
    for mask, f in a.terms.items():
        out = out + coefficient_image(f) * word_image(mask)
    return out


# -- endomorphism fields ----------------------------------------------------------

class EndomorphismField:
    """``k x k`` matrix of polynomials acting on sections by ``e_j -> sum_i A[i][j] e_i``."""

    __slots__ = ("vars", "rows")

    def __init__(self, vars: VarTable, rows: Sequence[Sequence[Union[Poly, Scalar]]]):
        k = vars.k
        if len(rows) != k or any(len(r) != k for r in rows):
            raise ContextMismatchError(f"endomorphism field must be {k}x{k}")
        self.vars = vars
        self.rows = tuple(
            tuple(c if isinstance(c, Poly) else Poly.const(vars, c) for c in r) for r in rows
        )

    @classmethod
    def identity(cls, vars: VarTable) -> "EndomorphismField":
        k = vars.k
        return cls(vars, [[1 if i == j else 0 for j in range(k)] for i in range(k)])

    @classmethod
    def from_element(cls, m: BFVElement) -> "EndomorphismField":
        """Read ``M`` off an element of bidegree (1,1).

        The convention is ``M(s) = [s, M]_G``, which makes ``sum_i eps_i e_i``
        the identity.
        """
        if not m.is_bidegree(1, 1):
            raise BidegreeError("endomorphism elements have bidegree (1,1)")
        k = m.vars.k
        return cls(m.vars, [[-m.coefficient((i,), (j,)) for j in range(1, k + 1)] for i in range(1, k + 1)])

    def to_element(self) -> BFVElement:
        vars = self.vars
        out = BFVElement.zero(vars)
        k = vars.k
        for i in range(k):
            for j in range(k):
                c = self.rows[i][j]
                if c.terms:
                    out = out - BFVElement.word(vars, (i + 1,), (j + 1,), c)
        return out

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, EndomorphismField):
            return NotImplemented
        return self.vars == other.vars and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __matmul__(self, other: "EndomorphismField") -> "EndomorphismField":
        k = self.vars.k
        rows = []
        for i in range(k):
            row = []
            for j in range(k):
                acc = Poly.zero(self.vars)
                for l in range(k):
                    acc = acc + self.rows[i][l] * other.rows[l][j]
                row.append(acc)
            rows.append(row)
        return EndomorphismField(self.vars, rows)

    def transpose(self) -> "EndomorphismField":
        k = self.vars.k
        return EndomorphismField(self.vars, [[self.rows[j][i] for j in range(k)] for i in range(k)])

    def map_entries(self, fn) -> "EndomorphismField":
        return EndomorphismField(self.vars, [[fn(c) for c in r] for r in self.rows])

    def det(self) -> Poly:
        return _det([list(r) for r in self.rows], self.vars)

    def certified_det(self) -> Fraction:
        """The determinant as a nonzero constant; raises if it is not one."""
        d = self.det()
        c = d.constant_value()
        if c is None:
            raise NotCertifiableError(
                f"invertibility not certifiable on polynomial data: det = {d}"
            )
        if c == 0:
            raise NotCertifiableError("invertibility not certifiable on polynomial data: det = 0")
        return c

    def inverse(self) -> "EndomorphismField":
        c = self.certified_det()
        k = self.vars.k
        rows = [list(r) for r in self.rows]
        inv = []
        for i in range(k):
            row = []
            for j in range(k):
                minor = [r[:i] + r[i + 1:] for idx, r in enumerate(rows) if idx != j]
                cof = _det(minor, self.vars) if minor else Poly.const(self.vars, 1)
                if (i + j) % 2:
                    cof = -cof
                row.append(cof * (1 / c))
            inv.append(row)
        return EndomorphismField(self.vars, inv)

    def apply(self, s: BFVElement) -> BFVElement:
        """Act on a fiber section."""
        coeffs = section_coefficients(s)
        k = self.vars.k
        new = [Poly.zero(self.vars) for _ in range(k)]
        for j, c in enumerate(coeffs):
            if not c.terms:
                continue
            for i in range(k):
                new[i] = new[i] + self.rows[i][j] * c
        return section_from_coefficients(self.vars, new)

    def __str__(self):
        return "[" + "; ".join(", ".join(str(c) for c in r) for r in self.rows) + "]"

    def __repr__(self):
        return f"EndomorphismField({self})"


def _det(rows: list[list[Poly]], vars: VarTable) -> Poly:
    n = len(rows)
    if n == 0:
        return Poly.const(vars, 1)
    if n == 1:
        return rows[0][0]
    total = Poly.zero(vars)
    for j in range(n):
        if not rows[0][j].terms:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * _det(minor, vars)
        total = total + term if j % 2 == 0 else total - term
    return total


def _endo_images(A: EndomorphismField, Ainv: EndomorphismField) -> list[BFVElement]:
    vars = A.vars
    k = vars.k
    images = []
    for j in range(k):
        img = BFVElement.zero(vars)
        for i in range(k):
            if A.rows[i][j].terms:
                img = img + BFVElement.e(vars, i + 1) * A.rows[i][j]
        images.append(img)
    # eps_j -> sum_i (A^{-T})_{ij} eps_i = sum_i Ainv[j][i] eps_i
    for j in range(k):
        img = BFVElement.zero(vars)
        for i in range(k):
            if Ainv.rows[j][i].terms:
                img = img + BFVElement.eps(vars, i + 1) * Ainv.rows[j][i]
        images.append(img)
    return images


def endo_action(A: EndomorphismField, a: BFVElement) -> BFVElement:
    """Ghosts transform by ``A``, momenta by ``A^{-T}``, coefficients are fixed."""
    Ainv = A.inverse()
    images = _endo_images(A, Ainv)
    vars = a.vars
    return apply_morphism(a, images, lambda f: BFVElement.scalar(vars, f))


# -- contraction data for shifted / conjugated sections ---------------------------

class Contraction:
    """Koszul contraction ``(delta, h, i o pr)`` for ``sigma = A(Omega_0 + p*(mu))``.

    With ``A = id`` and ``mu = 0`` this is the plain Koszul data; otherwise
    every map is conjugated by the fiber shift and the ``A``-action.
    """

    def __init__(self, vars: VarTable, mu: Optional[Sequence[Poly]] = None,
                 A: Optional[EndomorphismField] = None):
        self.vars = vars
        self.mu = _check_mu(vars, mu if mu is not None else [0] * vars.k)
        self.neg_mu = [-m for m in self.mu]
        self.A = A
        if A is not None:
            self.Ainv = A.inverse()
            self._fwd = _endo_images(A, self.Ainv)
            self._bwd = _endo_images(self.Ainv, A)
        base = tautological_section(vars) + section_from_coefficients(vars, self.mu)
        self.section = A.apply(base) if A is not None else base

    @classmethod
    def for_section(cls, sigma: BFVElement, witness=None) -> "Contraction":
        """Contraction for a full section ``Omega_0 + beta_0``.

        ``witness`` is an ``(A, mu)`` pair; without one the section must be
        normalized (its deviation from ``Omega_0`` fiber-independent).
        """
        vars = sigma.vars
        if not sigma.is_bidegree(1, 0):
            raise BidegreeError("contraction needs a section of bidegree (1,0)")
        if witness is not None:
            A, mu = witness
            c = cls(vars, mu, A)
            if c.section != sigma:
                raise WitnessRequiredError("witness does not reproduce the section")
            return c
        deviation = section_coefficients(sigma - tautological_section(vars))
        if any(d.depends_on(vars.fiber_indices) for d in deviation):
            raise WitnessRequiredError(
                "section is not normalized; a geometric witness (A, mu) is required"
            )
        return cls(vars, deviation)

    def _to_standard(self, a):
        if self.A is not None:
            a = apply_morphism(a, self._bwd, lambda f: BFVElement.scalar(self.vars, f))
        return shift_automorphism(self.neg_mu, a)

    def _from_standard(self, a):
        a = shift_automorphism(self.mu, a)
        if self.A is not None:
            a = apply_morphism(a, self._fwd, lambda f: BFVElement.scalar(self.vars, f))
        return a

    def delta(self, a: BFVElement) -> BFVElement:
        return g_bracket(self.section, a)

    def h(self, a: BFVElement) -> BFVElement:
        return self._from_standard(koszul_homotopy(self._to_standard(a)))

    def pr(self, a: BFVElement) -> BFVElement:
        """Restriction to the zero locus, in the standard frame (fiber-constant output)."""
        return chain_pr(self._to_standard(a))

    def i(self, s: BFVElement) -> BFVElement:
        return self._from_standard(chain_i(s))

    def ipr(self, a: BFVElement) -> BFVElement:
        return self.i(self.pr(a))


def conjugated_homotopy(sigma: BFVElement, a: BFVElement, witness=None) -> BFVElement:
    """``h[sigma](a)``: the Koszul homotopy transported to the section ``sigma``."""
    return Contraction.for_section(sigma, witness).h(a)
