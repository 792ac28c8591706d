"""BFV bracket, charge construction and Maurer-Cartan elements.

The bundle is trivial and the connection flat, so the BFV bracket is the
Poisson bracket of the coefficients (ghosts are Poisson-constant) plus the
pairing bracket ``[.,.]_G``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import (
    BidegreeError,
    FamilyMismatchError,
    IterationBoundError,
    NotCoisotropicError,
    OrientationError,
    WitnessRequiredError,
)
from .poisson import PoissonBivector, SectionMu, check_coisotropic_section
from .poly import Poly, VarTable
from .superalg import (
    BFVElement,
    Contraction,
    EndomorphismField,
    _merge_sign,
    g_bracket,
    section_from_coefficients,
    tautological_section,
)

HALF = Fraction(1, 2)


def poisson_part(pi: PoissonBivector, a: BFVElement, b: BFVElement) -> BFVElement:
    """``sum {f, g} (m * n)`` over terms ``f m`` of ``a`` and ``g n`` of ``b``."""
    a._check(b)
    acc: dict[int, Poly] = {}
    if pi.is_zero():
        return BFVElement.zero(a.vars)
    for m1, f1 in a.terms.items():
        for m2, f2 in b.terms.items():
            s = _merge_sign(m1, m2)
            if not s:
                continue
            p = pi.bracket(f1, f2)
            if not p.terms:
                continue
            if s < 0:
                p = -p
            m = m1 | m2
            prev = acc.get(m)
            acc[m] = p if prev is None else prev + p
    return BFVElement._raw(a.vars, {m: f for m, f in acc.items() if f.terms})


def bfv_bracket(pi: PoissonBivector, a: BFVElement, b: BFVElement) -> BFVElement:
    """``[a, b]_BFV``: graded Poisson bracket of total degree 0."""
    return poisson_part(pi, a, b) + g_bracket(a, b)


@dataclass(frozen=True)
class ObstructionWitness:
    """First obstruction that is not ``delta``-exact.

    ``element`` is the lowest-resolution component of ``1/2 [Omega, Omega]``
    at the failing iteration and ``pr_image`` its nonzero restriction.
    """

    element: BFVElement
    pr_image: BFVElement
    iteration: int

    def __bool__(self):
        return False


@dataclass(frozen=True)
class Charge:
    element: BFVElement
    pi: PoissonBivector
    iterations: int
    trace: tuple = ()

    @property
    def vars(self) -> VarTable:
        return self.element.vars

    def component(self, r: int) -> BFVElement:
        """``Omega_r`` of bidegree ``(r+1, r)``."""
        return self.element.component(r + 1, r)


@dataclass(frozen=True)
class MCResidual:
    """Nonzero value of ``[Omega + beta, Omega + beta]_BFV``."""

    residual: BFVElement

    def __bool__(self):
        return False


@dataclass(frozen=True)
class GeometricDiscrepancy:
    condition: str
    detail: object

    def __bool__(self):
        return False


@dataclass(frozen=True)
class MCElement:
    """Degree +1 element ``beta`` with an optional geometric witness ``(A, mu)``."""

    beta: BFVElement
    witness: Optional[tuple] = None

    @property
    def vars(self) -> VarTable:
        return self.beta.vars

    @property
    def beta0(self) -> BFVElement:
        return self.beta.component(1, 0)

    def __str__(self):
        return str(self.beta)


def _perturb(pi: PoissonBivector, start: BFVElement, contraction: Contraction, bound: int):
    """Homological perturbation of ``start`` towards ``[T, T]_BFV = 0``.

    Returns ``(T, iterations, trace)`` or an :class:`ObstructionWitness`.
    """
    T = start
    trace = []
    for it in range(1, bound + 1):
        R = bfv_bracket(pi, T, T) * HALF
        if R.is_zero():
            return T, it, tuple(trace)
        r = R.resolution_degrees()[0]
        low = R.resolution_component(r)
        image = contraction.pr(low)
        if not image.is_zero():
            return ObstructionWitness(low, image, it)
        trace.append((it, r, low))
        T = T - contraction.h(low)
    raise IterationBoundError(f"perturbation did not converge within {bound} iterations")


def construct_charge(pi: PoissonBivector) -> Union[Charge, ObstructionWitness]:
    """BFV charge ``Omega = Omega_0 + Omega_1 + ...`` or the first obstruction."""
    vars = pi.vars
    out = _perturb(pi, tautological_section(vars), Contraction(vars), vars.k + 1)
    if isinstance(out, ObstructionWitness):
        return out
    omega, iterations, trace = out
    return Charge(omega, pi, iterations, trace)


def _require_degree_one(beta: BFVElement):
    if any(d != 1 for d in beta.total_degrees()):
        raise BidegreeError("Maurer-Cartan candidates must have total degree +1")


def mc_check(charge: Charge, beta: Union[MCElement, BFVElement]):
    """``True`` if ``[Omega + beta, Omega + beta]_BFV = 0``, else an :class:`MCResidual`."""
    if isinstance(beta, MCElement):
        beta = beta.beta
    _require_degree_one(beta)
    total = charge.element + beta
    R = bfv_bracket(charge.pi, total, total)
    return True if R.is_zero() else MCResidual(R)


def lift_normalized_mc(charge: Charge, mu: Union[SectionMu, Sequence[Poly]]) -> MCElement:
    """Extend ``p*(mu)`` to a normalized Maurer-Cartan element.

    Requires ``-mu`` to be coisotropic; ``l_nor`` of the result is ``-mu``.
    """
    vars = charge.vars
    if not isinstance(mu, SectionMu):
        mu = SectionMu.of(vars, list(mu))
    verdict = check_coisotropic_section(charge.pi, -mu)
    if verdict is not True:
        raise NotCoisotropicError(f"-mu is not coisotropic: {verdict}", verdict)
    contraction = Contraction(vars, list(mu))
    start = charge.element + section_from_coefficients(vars, list(mu))
    out = _perturb(charge.pi, start, contraction, vars.k + 1)
    if isinstance(out, ObstructionWitness):
        raise NotCoisotropicError("unexpected obstruction while lifting", out)
    total, _, _ = out
    return MCElement(total - charge.element, (EndomorphismField.identity(vars), mu))


def _beta0(beta) -> BFVElement:
    b = beta.beta if isinstance(beta, MCElement) else beta
    return b.component(1, 0)


def l_nor(beta: Union[MCElement, BFVElement]) -> SectionMu:
    """``beta_0 = p*(mu)`` maps to ``-mu``."""
    b0 = _beta0(beta)
    vars = b0.vars
    coeffs = [b0.coefficient((i,)) for i in range(1, vars.k + 1)]
    if any(c.depends_on(vars.fiber_indices) for c in coeffs):
        raise WitnessRequiredError("beta_0 depends on fiber variables; cannot reconstruct mu without a witness")
    return -SectionMu.of(vars, coeffs)


def verify_geometric_witness(pi: PoissonBivector, beta: Union[MCElement, BFVElement],
                             A: EndomorphismField, mu: Union[SectionMu, Sequence[Poly]]):
    """Check ``Omega_0 + beta_0 = A(Omega_0 + p*(mu))`` and that ``-mu`` is coisotropic."""
    vars = pi.vars
    if not isinstance(mu, SectionMu):
        mu = SectionMu.of(vars, list(mu))
    d = A.certified_det()
    if d < 0:
        raise OrientationError(f"det(A) = {d} < 0: not fiberwise orientation preserving")
    omega0 = tautological_section(vars)
    lhs = omega0 + _beta0(beta)
    rhs = A.apply(omega0 + section_from_coefficients(vars, list(mu)))
    if lhs != rhs:
        return GeometricDiscrepancy("a", lhs - rhs)
    verdict = check_coisotropic_section(pi, -mu)
    if verdict is not True:
        return GeometricDiscrepancy("b", verdict)
    return True


def l_geo(pi: PoissonBivector, beta: MCElement) -> SectionMu:
    """``-mu_beta`` for a geometric element carrying a verified witness."""
    if beta.witness is None:
        raise WitnessRequiredError("l_geo needs a witness (A, mu)")
    A, mu = beta.witness
    verdict = verify_geometric_witness(pi, beta, A, mu)
    if verdict is not True:
        raise WitnessRequiredError(f"witness fails condition ({verdict.condition}): {verdict.detail}")
    return -mu if isinstance(mu, SectionMu) else -SectionMu.of(pi.vars, list(mu))


def connecting_endomorphism(sigma0: BFVElement, sigma_t: BFVElement, witness=None,
                            time_var: Optional[str] = None) -> EndomorphismField:
    """``M_t = h[sigma_0](Omega_0 + sigma_t)`` read as an endomorphism field.

    ``sigma0`` and ``sigma_t`` are deviations from ``Omega_0`` (bidegree
    (1,0)); ``sigma_t`` is polynomial in the time variable.  The family must
    vanish on the zero locus of ``Omega_0 + sigma_0`` for every ``t``,
    otherwise no endomorphism can carry one section to the other.
    """
    vars = sigma0.vars
    tv = time_var or vars.time_var
    if tv is None:
        raise FamilyMismatchError("variable table has no time variable")
    for s in (sigma0, sigma_t):
        if not s.is_zero() and not s.is_bidegree(1, 0):
            raise BidegreeError("sections must have bidegree (1,0)")
    if sigma_t.subst({tv: 0}) != sigma0:
        raise FamilyMismatchError("sigma_t at t = 0 differs from sigma_0")
    omega0 = tautological_section(vars)
    contraction = Contraction.for_section(omega0 + sigma0, witness)
    target = omega0 + sigma_t
    residue = contraction.pr(target)
    if not residue.is_zero():
        raise FamilyMismatchError(
            f"Omega_0 + sigma_t does not vanish on the zero locus of Omega_0 + sigma_0 "
            f"(restriction {residue})"
        )
    M = contraction.h(target)
    if M.is_zero():
        return EndomorphismField(vars, [[0] * vars.k for _ in range(vars.k)])
    return EndomorphismField.from_element(M)
