"""Exact sparse multivariate polynomials over the rationals.

Monomials are packed into a single ``int``: the exponent of variable ``i``
lives in byte ``i``.  Multiplying monomials is then integer addition.  The
total-degree cap (at most 127) keeps every intermediate exponent below 256.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from ._parse import Builder, format_rational, join_signed, parse_with
from .errors import ContextMismatchError, DegreeCapError, ParseError, UnknownVariableError

Scalar = Union[int, Fraction]

_RESERVED = {"e", "eps"}


@dataclass(frozen=True)
class VarTable:
    """Ordered coordinates of a problem: base ``x``, fiber ``y`` and optional time ``t``."""

    base_vars: tuple[str, ...]
    fiber_vars: tuple[str, ...]
    time_var: Optional[str] = None
    max_degree: int = 64
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "base_vars", tuple(self.base_vars))
        object.__setattr__(self, "fiber_vars", tuple(self.fiber_vars))
        names = self.names
        if len(set(names)) != len(names):
            raise ValueError(f"variable names must be unique: {names}")
        if not self.fiber_vars:
            raise ValueError("fiber rank must be at least 1")
        for name in names:
            if name in _RESERVED or not name.isidentifier():
                raise ValueError(f"invalid variable name {name!r}")
        if not 1 <= self.max_degree <= 127:
            raise ValueError("max_degree must lie in [1, 127]")
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(names)})

    @classmethod
    def standard(cls, n: int, k: int, time: bool = True, max_degree: int = 64) -> "VarTable":
        """``x1..xn``, ``y1..yk`` and ``t``."""
        return cls(
            tuple(f"x{i}" for i in range(1, n + 1)),
            tuple(f"y{i}" for i in range(1, k + 1)),
            "t" if time else None,
            max_degree,
        )

    @property
    def names(self) -> tuple[str, ...]:
        extra = (self.time_var,) if self.time_var is not None else ()
        return self.base_vars + self.fiber_vars + extra

    @property
    def n(self) -> int:
        return len(self.base_vars)

    @property
    def k(self) -> int:
        return len(self.fiber_vars)

    @property
    def nvars(self) -> int:
        return len(self._index)

    @property
    def ncoords(self) -> int:
        """Number of spatial coordinates ``n + k`` (time excluded)."""
        return self.n + self.k

    @property
    def fiber_indices(self) -> range:
        return range(self.n, self.n + self.k)

    @property
    def time_index(self) -> Optional[int]:
        return None if self.time_var is None else self.ncoords

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariableError(f"unknown variable {name!r}") from None

    def resolve(self, var: Union[str, int]) -> int:
        if isinstance(var, str):
            return self.index(var)
        if not 0 <= var < self.nvars:
            raise UnknownVariableError(f"variable index {var} out of range")
        return var


def _mdeg(m: int, nv: int) -> int:
    return sum(m.to_bytes(nv, "little"))


def _exps(m: int, nv: int) -> list[int]:
    return list(m.to_bytes(nv, "little"))


def _pack(exps: Iterable[int]) -> int:
    return int.from_bytes(bytes(exps), "little")


class Poly:
    """Immutable polynomial with :class:`~fractions.Fraction` coefficients.

    ``terms`` maps packed monomials to nonzero coefficients.  Build instances
    with :meth:`const`, :meth:`var`, :func:`poly_parse` or arithmetic.
    """

    __slots__ = ("vars", "terms", "_deg", "_diff")

    def __init__(self, vars: VarTable, terms: Optional[Mapping[int, Scalar]] = None):
        self.vars = vars
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}
        self._deg = None
        self._diff = None

    @classmethod
    def _raw(cls, vars: VarTable, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p.vars = vars
        p.terms = terms
        p._deg = None
        p._diff = None
        return p

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, vars: VarTable) -> "Poly":
        return cls._raw(vars, {})

    @classmethod
    def const(cls, vars: VarTable, c: Scalar) -> "Poly":
        c = Fraction(c)
        return cls._raw(vars, {0: c} if c else {})

    @classmethod
    def var(cls, vars: VarTable, name: Union[str, int]) -> "Poly":
        i = vars.resolve(name)
        return cls._raw(vars, {1 << (8 * i): Fraction(1)})

    @classmethod
    def monomial(cls, vars: VarTable, exps: Mapping[str, int], c: Scalar = 1) -> "Poly":
        e = [0] * vars.nvars
        for name, power in exps.items():
            e[vars.index(name)] += power
        if sum(e) > vars.max_degree:
            raise DegreeCapError(f"monomial degree {sum(e)} exceeds cap {vars.max_degree}")
        return cls(vars, {_pack(e): c})

    # -- inspection ---------------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    def constant_value(self) -> Optional[Fraction]:
        """The value if the polynomial is constant, else ``None``."""
        if not self.terms:
            return Fraction(0)
        if self.is_constant():
            return self.terms[0]
        return None

    def constant_term(self) -> Fraction:
        return self.terms.get(0, Fraction(0))

    def degree(self) -> int:
        if self._deg is None:
            nv = self.vars.nvars
            self._deg = max((_mdeg(m, nv) for m in self.terms), default=-1)
        return self._deg

    def degree_in(self, var: Union[str, int]) -> int:
        shift = 8 * self.vars.resolve(var)
        return max(((m >> shift) & 255 for m in self.terms), default=-1)

    def depends_on(self, indices: Iterable[int]) -> bool:
        mask = 0
        for i in indices:
            mask |= 255 << (8 * i)
        return any(m & mask for m in self.terms)

    def items(self):
        """``(exponent list, coefficient)`` pairs in canonical order."""
        nv = self.vars.nvars
        for m in self._sorted_monomials():
            yield _exps(m, nv), self.terms[m]

    def _sorted_monomials(self):
        nv = self.vars.nvars
        return sorted(self.terms, key=lambda m: (_mdeg(m, nv), _exps(m, nv)[:nv]), reverse=True)

    def homogeneous_parts(self, indices: Iterable[int]) -> dict[int, "Poly"]:
        """Split by total degree in the given variables."""
        indices = list(indices)
        out: dict[int, dict] = {}
        for m, c in self.terms.items():
            d = sum((m >> (8 * i)) & 255 for i in indices)
            out.setdefault(d, {})[m] = c
        return {d: Poly._raw(self.vars, t) for d, t in out.items()}

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> Optional["Poly"]:
        if isinstance(other, Poly):
            if other.vars is not self.vars and other.vars != self.vars:
                raise ContextMismatchError("polynomials live over different variable tables")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.vars, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.terms:
            return self
        terms = dict(self.terms)
        for m, c in o.terms.items():
            v = terms.get(m)
            if v is None:
                terms[m] = c
            else:
                v += c
                if v:
                    terms[m] = v
                else:
                    del terms[m]
        return Poly._raw(self.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.vars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return Poly.zero(self.vars)
            return Poly._raw(self.vars, {m: c * other for m, c in self.terms.items()})
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not self.terms or not o.terms:
            return Poly.zero(self.vars)
        cap = self.vars.max_degree
        if self.degree() + o.degree() > cap:
            nv = self.vars.nvars
            for m1 in self.terms:
                d1 = _mdeg(m1, nv)
                for m2 in o.terms:
                    if d1 + _mdeg(m2, nv) > cap:
                        raise DegreeCapError(f"product exceeds total-degree cap {cap}")
        terms: dict[int, Fraction] = {}
        get = terms.get
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = m1 + m2
                v = get(m)
                terms[m] = c1 * c2 if v is None else v + c1 * c2
        return Poly._raw(self.vars, {m: c for m, c in terms.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Poly.const(self.vars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.constant_value() == other
        if not isinstance(other, Poly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # -- calculus and substitution -------------------------------------------
    def diff(self, var: Union[str, int]) -> "Poly":
        i = self.vars.resolve(var)
        if self._diff is None:
            self._diff = {}
        cached = self._diff.get(i)
        if cached is not None:
            return cached
        shift = 8 * i
        unit = 1 << shift
        terms = {}
        for m, c in self.terms.items():
            e = (m >> shift) & 255
            if e:
                terms[m - unit] = c * e
        out = Poly._raw(self.vars, terms)
        self._diff[i] = out
        return out

    def integrate(self, var: Union[str, int]) -> "Poly":
        """Antiderivative in ``var`` vanishing at ``var = 0``."""
        i = self.vars.resolve(var)
        shift = 8 * i
        unit = 1 << shift
        terms = {}
        for m, c in self.terms.items():
            e = (m >> shift) & 255
            terms[m + unit] = c / (e + 1)
        out = Poly._raw(self.vars, terms)
        if out.degree() > self.vars.max_degree:
            raise DegreeCapError(f"integral exceeds total-degree cap {self.vars.max_degree}")
        return out

    def subst(self, assignments: Mapping[Union[str, int], Union["Poly", Scalar]]) -> "Poly":
        """Simultaneous substitution of variables by polynomials."""
        vars = self.vars
        images: dict[int, Poly] = {}
        for key, val in assignments.items():
            i = vars.resolve(key)
            images[i] = val if isinstance(val, Poly) else Poly.const(vars, val)
            if images[i].vars != vars:
                raise ContextMismatchError("substitution image over a different variable table")
        if not images:
            return self
        nv = vars.nvars
        mask = 0
        for i in images:
            mask |= 255 << (8 * i)
        powers: dict[tuple[int, int], Poly] = {}

        def power(i, e):
            key = (i, e)
            p = powers.get(key)
            if p is None:
                p = images[i] if e == 1 else power(i, e - 1) * images[i]
                powers[key] = p
            return p

        result = Poly.zero(vars)
        acc: dict[int, Fraction] = {}
        for m, c in self.terms.items():
            rest = m & ~mask
            factor = None
            for i in images:
                e = (m >> (8 * i)) & 255
                if e:
                    factor = power(i, e) if factor is None else factor * power(i, e)
            if factor is None:
                acc[rest] = acc.get(rest, 0) + c
                continue
            if rest and factor.degree() + _mdeg(rest, nv) > vars.max_degree:
                raise DegreeCapError(f"substitution exceeds total-degree cap {vars.max_degree}")
            for fm, fc in factor.terms.items():
                mm = fm + rest
                acc[mm] = acc.get(mm, 0) + c * fc
        result = Poly._raw(vars, {m: c for m, c in acc.items() if c})
        return result

    def restrict(self, values: Mapping[Union[str, int], Scalar]) -> "Poly":
        return self.subst({k: Poly.const(self.vars, v) for k, v in values.items()})

    def evaluate(self, point: Mapping[Union[str, int], Scalar]) -> Fraction:
        """Exact value at a point that assigns every variable occurring in ``self``."""
        vals = [None] * self.vars.nvars
        for key, v in point.items():
            vals[self.vars.resolve(key)] = Fraction(v)
        nv = self.vars.nvars
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for i, e in enumerate(_exps(m, nv)):
                if e:
                    if vals[i] is None:
                        raise UnknownVariableError(f"no value for {self.vars.names[i]!r}")
                    term *= vals[i] ** e
            total += term
        return total

    def to_numeric(self) -> tuple[np.ndarray, np.ndarray]:
        """``(coefficients, exponent matrix)`` float arrays for fast evaluation."""
        nv = self.vars.nvars
        mons = list(self.terms)
        coeffs = np.array([float(self.terms[m]) for m in mons], dtype=float)
        exps = np.array([_exps(m, nv) for m in mons], dtype=float).reshape(len(mons), nv)
        return coeffs, exps

    def map_coefficients(self, fn) -> "Poly":
        return Poly(self.vars, {m: fn(c) for m, c in self.terms.items()})

    # -- text ---------------------------------------------------------------
    def monomial_text(self, m: int) -> str:
        names = self.vars.names
        parts = []
        for name, e in zip(names, _exps(m, self.vars.nvars)):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts)

    def signed_terms(self) -> list[tuple[Fraction, str]]:
        return [(self.terms[m], self.monomial_text(m)) for m in self._sorted_monomials()]

    def __str__(self):
        return join_signed(self.signed_terms(), _render_scalar_term)

    def __repr__(self):
        return f"Poly({str(self)!r})"


def _render_scalar_term(c: Fraction, body: str) -> str:
    if not body:
        return format_rational(c)
    if c == 1:
        return body
    return f"{format_rational(c)}*{body}"


class _PolyBuilder(Builder):
    def __init__(self, vars: VarTable):
        self.vars = vars

    def const(self, value):
        return Poly.const(self.vars, value)

    def var(self, name):
        return Poly.var(self.vars, name)

    def as_constant(self, value):
        return value.constant_value()


def poly_parse(text: str, vars: VarTable) -> Poly:
    """Parse ``text`` (e.g. ``"y1*y2 - 3/2*x1^2"``) into a canonical :class:`Poly`."""
    value = parse_with(text, _PolyBuilder(vars))
    if not isinstance(value, Poly):
        raise ParseError("expression did not evaluate to a polynomial")
    return value


def poly_diff(p: Poly, var: Union[str, int]) -> Poly:
    return p.diff(var)


def poly_subst(p: Poly, assignments: Mapping[Union[str, int], Union[Poly, Scalar]]) -> Poly:
    return p.subst(assignments)


def poly_serialize(p: Poly) -> str:
    return str(p)
