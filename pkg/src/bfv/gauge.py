"""Gauge flows: integration of inner derivations and gauge homotopies.

A generator ``gamma_t`` (total degree 0, diagonal bidegrees) is integrated by
solving ``d/dt psi_t(g) = -[gamma_t, psi_t(g)]_BFV`` for every algebra
generator ``g``.  The solution is the time-ordered exponential, computed as
the Dyson/Picard series ``Y_{j+1}(t) = int_0^t D_s Y_j(s) ds``.  It is exact
whenever the series terminates, which is what the iteration cap enforces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .charge import Charge, MCElement, bfv_bracket, mc_check
from .errors import (
    BFVError,
    BidegreeError,
    DegreeCapError,
    EndpointMismatchError,
    NilpotencyError,
)
from .poisson import HamiltonianFamily, PoissonBivector
from .poly import Poly, VarTable
from .superalg import BFVElement, EndomorphismField, apply_morphism


class GaugeGenerator:
    """Total-degree-0 element with only diagonal bidegrees ``(m, m)``."""

    __slots__ = ("element",)

    def __init__(self, element: BFVElement):
        for p, q in element.bidegrees():
            if p != q:
                raise BidegreeError(f"gauge generators need diagonal bidegrees, found ({p},{q})")
        self.element = element

    @property
    def vars(self) -> VarTable:
        return self.element.vars

    @property
    def r_min(self) -> Optional[int]:
        """Lowest resolution degree present (``None`` for the zero generator)."""
        degs = self.element.resolution_degrees()
        return degs[0] if degs else None

    def is_pure(self) -> bool:
        r = self.r_min
        return r is None or r >= 1

    def reversed(self) -> "GaugeGenerator":
        """``-gamma_{1-t}``, which integrates to the inverse flow."""
        tv = self.vars.time_var
        one_minus_t = Poly.const(self.vars, 1) - Poly.var(self.vars, tv)
        return GaugeGenerator(-self.element.subst({tv: one_minus_t}))

    def __str__(self):
        return str(self.element)

    def __repr__(self):
        return f"GaugeGenerator({self.element!s})"


def _generator_elements(vars: VarTable) -> list[BFVElement]:
    coords = [BFVElement.scalar(vars, Poly.var(vars, a)) for a in range(vars.ncoords)]
    ghosts = [BFVElement.e(vars, i) for i in range(1, vars.k + 1)]
    momenta = [BFVElement.eps(vars, i) for i in range(1, vars.k + 1)]
    return coords + ghosts + momenta


class MorphismFamily:
    """Algebra automorphisms ``psi_t`` stored as images of the generators.

    ``coords[a]`` is the image of the ``a``-th spatial coordinate and ``odd``
    lists the images of ``e_1..e_k, eps_1..eps_k``.  The time variable is a
    parameter and is never transformed.
    """

    def __init__(self, vars: VarTable, coords: Sequence[BFVElement], odd: Sequence[BFVElement],
                 depth: int = 0, r_min: Optional[int] = None):
        self.vars = vars
        self.coords = tuple(coords)
        self.odd = tuple(odd)
        self.depth = depth
        self.r_min = r_min
        base = _generator_elements(vars)
        self._moved = [a for a in range(vars.ncoords) if self.coords[a] != base[a]]
        self._powers: dict = {}

    @classmethod
    def identity(cls, vars: VarTable) -> "MorphismFamily":
        gens = _generator_elements(vars)
        n = vars.ncoords
        return cls(vars, gens[:n], gens[n:], 0, None)

    def images(self) -> list[BFVElement]:
        return list(self.coords) + list(self.odd)

    def at(self, t: Union[int, Fraction]) -> "MorphismFamily":
        """Evaluate the family at a rational time."""
        tv = self.vars.time_var
        sub = {tv: t}
        return MorphismFamily(
            self.vars,
            [c.subst(sub) for c in self.coords],
            [o.subst(sub) for o in self.odd],
            self.depth,
            self.r_min,
        )

    def ghost_block(self) -> EndomorphismField:
        """Matrix ``B`` with ``(psi(e_j))_{(1,0)} = sum_i B[i][j] e_i``."""
        k = self.vars.k
        rows = [[self.odd[j].coefficient((i + 1,)) for j in range(k)] for i in range(k)]
        return EndomorphismField(self.vars, rows)

    def _power(self, a: int, e: int) -> BFVElement:
        key = (a, e)
        p = self._powers.get(key)
        if p is None:
            p = self.coords[a] if e == 1 else self._power(a, e - 1) * self.coords[a]
            self._powers[key] = p
        return p

    def _coefficient_image(self, f: Poly) -> BFVElement:
        vars = self.vars
        if not self._moved:
            return BFVElement.scalar(vars, f)
        moved_mask = 0
        for a in self._moved:
            moved_mask |= 255 << (8 * a)
        out = BFVElement.zero(vars)
        for m, c in f.terms.items():
            fixed = Poly._raw(vars, {m & ~moved_mask: c})
            factor = BFVElement.scalar(vars, fixed)
            for a in self._moved:
                e = (m >> (8 * a)) & 255
                if e:
                    factor = factor * self._power(a, e)
            out = out + factor
        return out

    def __call__(self, a: BFVElement) -> BFVElement:
        return apply_morphism(a, self.odd, self._coefficient_image)

    def __eq__(self, other):
        if not isinstance(other, MorphismFamily):
            return NotImplemented
        return self.coords == other.coords and self.odd == other.odd


_NOT_NILPOTENT = (
    "generator not locally nilpotent on this input; integration outside the polynomial ring"
)


def _dyson(pi: PoissonBivector, gamma: BFVElement, g: BFVElement, tv: str, nil_cap: int):
    total = g
    term = g
    depth = 0
    while True:
        try:
            term = (-bfv_bracket(pi, gamma, term)).integrate(tv)
        except DegreeCapError as exc:
            raise NilpotencyError(_NOT_NILPOTENT) from exc
        if term.is_zero():
            return total, depth
        depth += 1
        if depth > nil_cap:
            raise NilpotencyError(_NOT_NILPOTENT)
        total = total + term


def integrate_generator(pi: PoissonBivector, gamma: Union[GaugeGenerator, BFVElement],
                        nil_cap: int = 64) -> MorphismFamily:
    """Time-ordered exponential of ``-[gamma_t, .]_BFV`` as a :class:`MorphismFamily`."""
    if not isinstance(gamma, GaugeGenerator):
        gamma = GaugeGenerator(gamma)
    vars = pi.vars
    tv = vars.time_var
    if tv is None:
        raise BFVError("integration needs a time variable in the variable table")
    el = gamma.element
    images = []
    depth = 0
    for g in _generator_elements(vars):
        if el.is_zero():
            images.append(g)
            continue
        img, d = _dyson(pi, el, g, tv, nil_cap)
        images.append(img)
        depth = max(depth, d)
    n = vars.ncoords
    return MorphismFamily(vars, images[:n], images[n:], depth, gamma.r_min)


def ode_residuals(pi: PoissonBivector, gamma: Union[GaugeGenerator, BFVElement],
                  family: MorphismFamily) -> list[BFVElement]:
    """``d/dt psi_t(g) + [gamma_t, psi_t(g)]_BFV`` for every algebra generator ``g``."""
    el = gamma.element if isinstance(gamma, GaugeGenerator) else gamma
    tv = family.vars.time_var
    return [img.diff(tv) + bfv_bracket(pi, el, img) for img in family.images()]


def gauge_act(charge: Charge, psi: MorphismFamily, beta: Union[MCElement, BFVElement],
              t: Union[int, Fraction, None] = 1) -> MCElement:
    """``psi . beta = psi(Omega + beta) - Omega``.

    Pass ``t=None`` to act with the whole family (result polynomial in time).
    A witness ``(A, mu)`` is carried along for pure flows as ``(B A, mu)``
    with ``B`` the ghost block of ``psi``.
    """
    if not isinstance(beta, MCElement):
        beta = MCElement(beta)
    morph = psi if t is None else psi.at(t)
    new = morph(charge.element + beta.beta) - charge.element
    verdict = mc_check(charge, new)
    if verdict is not True:
        raise BFVError(f"gauge action left the Maurer-Cartan set: residual {verdict.residual}")
    witness = None
    pure = psi.r_min is None or psi.r_min >= 1
    if beta.witness is not None and pure:
        A, mu = beta.witness
        witness = (morph.ghost_block() @ A, mu)
    return MCElement(new, witness)


def project_generator(gamma: Union[GaugeGenerator, BFVElement]) -> HamiltonianFamily:
    """The (0,0) component ``F(x, y, t)`` of a generator."""
    el = gamma.element if isinstance(gamma, GaugeGenerator) else gamma
    return HamiltonianFamily(el.scalar_part())


@dataclass(frozen=True)
class Segment:
    generator: GaugeGenerator
    family: MorphismFamily
    end: MCElement


@dataclass(frozen=True)
class GaugeHomotopy:
    """Piecewise gauge homotopy: consecutive segments, each with its own generator."""

    start: MCElement
    segments: tuple = ()

    @property
    def end(self) -> MCElement:
        return self.segments[-1].end if self.segments else self.start

    @property
    def generators(self) -> list[GaugeGenerator]:
        return [s.generator for s in self.segments]

    @classmethod
    def build(cls, charge: Charge, start: Union[MCElement, BFVElement],
              generators: Sequence[Union[GaugeGenerator, BFVElement]], nil_cap: int = 64,
              check_path: bool = True) -> "GaugeHomotopy":
        if not isinstance(start, MCElement):
            start = MCElement(start)
        verdict = mc_check(charge, start)
        if verdict is not True:
            raise BFVError("gauge homotopy must start at a Maurer-Cartan element")
        segments = []
        current = start
        for gen in generators:
            if not isinstance(gen, GaugeGenerator):
                gen = GaugeGenerator(gen)
            family = integrate_generator(charge.pi, gen, nil_cap)
            if check_path:
                gauge_act(charge, family, current, t=None)
            current = gauge_act(charge, family, current)
            segments.append(Segment(gen, family, current))
        return cls(start, tuple(segments))

    def path(self, charge: Charge) -> list[MCElement]:
        """Per-segment families ``beta_t`` (polynomial in time)."""
        out = []
        current = self.start
        for seg in self.segments:
            out.append(gauge_act(charge, seg.family, current, t=None))
            current = seg.end
        return out


def identity_homotopy(beta: Union[MCElement, BFVElement]) -> GaugeHomotopy:
    """One zero segment sitting at ``beta``."""
    if not isinstance(beta, MCElement):
        beta = MCElement(beta)
    vars = beta.vars
    seg = Segment(GaugeGenerator(BFVElement.zero(vars)), MorphismFamily.identity(vars), beta)
    return GaugeHomotopy(beta, (seg,))


def is_pure(h: GaugeHomotopy) -> bool:
    return all(seg.generator.is_pure() for seg in h.segments)


def compose_homotopies(h1: GaugeHomotopy, h2: GaugeHomotopy) -> GaugeHomotopy:
    """Concatenate segment lists; ``h1`` must end where ``h2`` starts."""
    if h1.end.beta != h2.start.beta:
        raise EndpointMismatchError("end of the first homotopy differs from start of the second")
    return GaugeHomotopy(h1.start, h1.segments + h2.segments)


def invert_homotopy(charge: Charge, h: GaugeHomotopy, nil_cap: int = 64) -> GaugeHomotopy:
    """Reverse the segments, each run with the time-reversed generator ``-gamma_{1-t}``."""
    return GaugeHomotopy.build(
        charge, h.end, [seg.generator.reversed() for seg in reversed(h.segments)], nil_cap
    )
