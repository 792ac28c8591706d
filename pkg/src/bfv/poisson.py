"""Poisson bivectors on the total space, coisotropy tests and Hamiltonian flows.

Sign convention: ``{f, g} = sum_{a,b} P^{ab} d_a f d_b g`` and the Hamiltonian
vector field satisfies ``X_f(g) = {f, g}``, so its ``a``-th component is
``sum_b P^{ba} d_b f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BidegreeError, ContextMismatchError, FlowBlowupError
from .poly import Poly, VarTable

Scalar = Union[int, Fraction]


class PoissonBivector:
    """Antisymmetric matrix of polynomials over the ``n + k`` spatial coordinates.

    Only entries ``P^{ab}`` with ``a < b`` are stored (0-based coordinate
    indices, base coordinates first).  Entries may not depend on time.
    """

    __slots__ = ("vars", "entries")

    def __init__(self, vars: VarTable, entries: Optional[dict] = None):
        self.vars = vars
        n = vars.ncoords
        store = {}
        for (a, b), p in (entries or {}).items():
            if not (0 <= a < n and 0 <= b < n):
                raise ContextMismatchError(f"bivector index ({a},{b}) outside 0..{n - 1}")
            if a == b:
                if p:
                    raise ValueError("diagonal bivector entries must vanish")
                continue
            if not isinstance(p, Poly):
                p = Poly.const(vars, p)
            if p.vars != vars:
                raise ContextMismatchError("bivector entry over a different variable table")
            if vars.time_index is not None and p.depends_on([vars.time_index]):
                raise ValueError("bivector entries must not depend on time")
            if a > b:
                a, b, p = b, a, -p
            if p.terms:
                store[(a, b)] = store.get((a, b), Poly.zero(vars)) + p
        self.entries = {ab: p for ab, p in store.items() if p.terms}

    @classmethod
    def from_names(cls, vars: VarTable, entries: dict) -> "PoissonBivector":
        """``{("x1", "y1"): poly, ...}`` with ``{x1, y1} = poly``."""
        return cls(vars, {(vars.index(a), vars.index(b)): p for (a, b), p in entries.items()})

    def __getitem__(self, ab) -> Poly:
        a, b = ab
        if a < b:
            return self.entries.get((a, b), Poly.zero(self.vars))
        if a > b:
            return -self.entries.get((b, a), Poly.zero(self.vars))
        return Poly.zero(self.vars)

    def is_zero(self) -> bool:
        return not self.entries

    def bracket(self, f: Poly, g: Poly) -> Poly:
        """``{f, g}``."""
        out = Poly.zero(self.vars)
        if not f.terms or not g.terms:
            return out
        for (a, b), p in self.entries.items():
            fa, fb = f.diff(a), f.diff(b)
            ga, gb = g.diff(a), g.diff(b)
            if (fa.terms and gb.terms) or (fb.terms and ga.terms):
                out = out + p * (fa * gb - fb * ga)
        return out

    def __repr__(self):
        names = self.vars.names
        body = ", ".join(f"{{{names[a]},{names[b]}}}={p}" for (a, b), p in sorted(self.entries.items()))
        return f"PoissonBivector({body})"


@dataclass(frozen=True)
class JacobiWitness:
    """A nonzero component of the Schouten jacobiator."""

    indices: tuple[int, int, int]
    value: Poly

    def __bool__(self):
        return False


@dataclass(frozen=True)
class CoisotropyWitness:
    """Pair ``(i, j)`` (1-based fiber indices) whose bracket does not vanish on the graph."""

    pair: tuple[int, int]
    value: Poly

    def __bool__(self):
        return False


@dataclass(frozen=True)
class SectionMu:
    """Section of the bundle: ``k`` polynomials in the base variables."""

    coeffs: tuple[Poly, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("a section needs at least one coefficient")
        vars = self.coeffs[0].vars
        for c in self.coeffs:
            if c.depends_on(vars.fiber_indices):
                raise BidegreeError("section coefficients must not depend on fiber variables")

    @classmethod
    def of(cls, vars: VarTable, coeffs: Sequence[Union[Poly, Scalar]]) -> "SectionMu":
        if len(coeffs) != vars.k:
            raise ContextMismatchError(f"section needs {vars.k} coefficients, got {len(coeffs)}")
        return cls(tuple(c if isinstance(c, Poly) else Poly.const(vars, c) for c in coeffs))

    @classmethod
    def zero(cls, vars: VarTable) -> "SectionMu":
        return cls.of(vars, [0] * vars.k)

    @property
    def vars(self) -> VarTable:
        return self.coeffs[0].vars

    def __neg__(self):
        return SectionMu(tuple(-c for c in self.coeffs))

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i]

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coeffs) + ")"


@dataclass(frozen=True)
class VectorField:
    components: tuple[Poly, ...]

    def __add__(self, other):
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def is_zero(self) -> bool:
        return all(not c.terms for c in self.components)

    def __call__(self, g: Poly) -> Poly:
        """Derivative of ``g`` along the field."""
        out = Poly.zero(g.vars)
        for a, c in enumerate(self.components):
            if c.terms:
                out = out + c * g.diff(a)
        return out


@dataclass(frozen=True)
class HamiltonianFamily:
    """Time-dependent Hamiltonian ``F(x, y, t)``."""

    F: Poly

    def __str__(self):
        return str(self.F)


def jacobiator(pi: PoissonBivector, a: int, b: int, c: int) -> Poly:
    """``sum_cyclic sum_d P^{ad} d_d P^{bc}``."""
    out = Poly.zero(pi.vars)
    for i, j, l in ((a, b, c), (b, c, a), (c, a, b)):
        for d in range(pi.vars.ncoords):
            p = pi[i, d]
            if p.terms:
                out = out + p * pi[j, l].diff(d)
    return out


def check_jacobi(pi: PoissonBivector):
    """``True`` if the bivector is Poisson, else the first failing :class:`JacobiWitness`."""
    n = pi.vars.ncoords
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                j = jacobiator(pi, a, b, c)
                if j.terms:
                    return JacobiWitness((a, b, c), j)
    return True


def check_coisotropic_section(pi: PoissonBivector, nu: Union[SectionMu, Sequence[Poly]]):
    """Vanishing-ideal test for the graph ``y = nu(x)``.

    The graph ideal is generated by ``g_i = y_i - nu_i``; the graph is
    coisotropic iff every ``{g_i, g_j}`` vanishes after substituting
    ``y = nu``.
    """
    vars = pi.vars
    if not isinstance(nu, SectionMu):
        nu = SectionMu.of(vars, list(nu))
    fiber = list(vars.fiber_indices)
    gens = [Poly.var(vars, fiber[i]) - nu[i] for i in range(vars.k)]
    on_graph = {fiber[i]: nu[i] for i in range(vars.k)}
    for i in range(vars.k):
        for j in range(i + 1, vars.k):
            r = pi.bracket(gens[i], gens[j]).subst(on_graph)
            if r.terms:
                return CoisotropyWitness((i + 1, j + 1), r)
    return True


def hamiltonian_vector_field(pi: PoissonBivector, f: Poly) -> VectorField:
    n = pi.vars.ncoords
    comps = []
    for a in range(n):
        c = Poly.zero(pi.vars)
        for b in range(n):
            p = pi[b, a]
            if p.terms:
                c = c + p * f.diff(b)
        comps.append(c)
    return VectorField(tuple(comps))


# -- numeric companion ------------------------------------------------------------

class _NumericField:
    """Vectorized float evaluation of a polynomial vector field at ``(z, t)``."""

    def __init__(self, field: VectorField):
        self.parts = [c.to_numeric() for c in field.components]
        self.has_time = field.components and field.components[0].vars.time_var is not None

    def __call__(self, z: np.ndarray, t: float) -> np.ndarray:
        pt = np.append(z, t) if self.has_time else z
        out = np.empty(len(self.parts))
        for a, (coeffs, exps) in enumerate(self.parts):
            if coeffs.size == 0:
                out[a] = 0.0
            else:
                out[a] = coeffs @ np.prod(pt ** exps, axis=1)
        return out


def _rk4(field: _NumericField, z0: np.ndarray, t0: float, t1: float, steps: int, record=False):
    h = (t1 - t0) / steps
    z = np.array(z0, dtype=float)
    out = [z.copy()] if record else None
    t = t0
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            k1 = field(z, t)
            k2 = field(z + 0.5 * h * k1, t + 0.5 * h)
            k3 = field(z + 0.5 * h * k2, t + 0.5 * h)
            k4 = field(z + h * k3, t + h)
            z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
            if not np.all(np.isfinite(z)):
                raise FlowBlowupError(f"numeric flow blew up near t = {t:.6g}")
            if record:
                out.append(z.copy())
    return out if record else z


def _point(vars: VarTable, p0) -> np.ndarray:
    p = np.array([float(Fraction(v)) if not isinstance(v, float) else v for v in p0], dtype=float)
    if p.shape != (vars.ncoords,):
        raise ContextMismatchError(f"point must have {vars.ncoords} coordinates")
    return p


def numeric_flow_sample(pi: PoissonBivector, F: Union[HamiltonianFamily, Poly], p0,
                        steps: int = 1000) -> list[np.ndarray]:
    """Fixed-step RK4 trajectory of ``dz/dt = X_{F_t}(z)`` at ``t = 0, 1/steps, ..., 1``."""
    if steps < 1:
        raise ValueError("steps must be positive")
    F = F.F if isinstance(F, HamiltonianFamily) else F
    field = _NumericField(hamiltonian_vector_field(pi, F))
    return _rk4(field, _point(pi.vars, p0), 0.0, 1.0, steps, record=True)


def inverse_flow_point(pi: PoissonBivector, F: Union[HamiltonianFamily, Poly], p, t: float,
                       steps: int = 1000) -> np.ndarray:
    """``phi_t^{-1}(p)``: integrate the flow backwards from time ``t`` to 0."""
    F = F.F if isinstance(F, HamiltonianFamily) else F
    z = _point(pi.vars, p)
    if t == 0:
        return z
    field = _NumericField(hamiltonian_vector_field(pi, F))
    n = max(1, math.ceil(steps * abs(t)))
    return _rk4(field, z, float(t), 0.0, n)
