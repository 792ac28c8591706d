import random

import pytest

from bfv import (
    BFVElement,
    Contraction,
    EndomorphismField,
    Poly,
    VarTable,
    bfv_mul,
    chain_i,
    chain_pr,
    endo_action,
    g_bracket,
    koszul_delta,
    koszul_homotopy,
    parse_element,
    poly_parse,
    serialize_element,
    shift_automorphism,
    tautological_section,
)
from bfv.errors import BidegreeError, NotCertifiableError, ParseError, WitnessRequiredError
from bfv.superalg import conjugated_homotopy

from support import Grassmann, oracle_g_bracket, random_element

V = VarTable.standard(1, 2)


def E(text, vars=V):
    return parse_element(text, vars)


def sgn(a, b):
    return -1 if (a * b) % 2 else 1


def deg(a):
    (d,) = a.total_degrees()
    return d


class TestProduct:
    def test_unit_and_odd_square(self):
        a = E("x1*e{1} + y2*eps{2}")
        assert BFVElement.scalar(V, 1) * a == a
        assert E("e{1}") * E("e{1}") == BFVElement.zero(V)

    def test_anticommutation(self):
        assert bfv_mul(E("e{1}"), E("e{2}")) == -bfv_mul(E("e{2}"), E("e{1}"))
        assert E("eps{2}") * E("e{1}") == -E("e{1}*eps{2}")

    def test_matches_oracle(self):
        rng = random.Random(1)
        for _ in range(40):
            a, b = random_element(rng, V), random_element(rng, V)
            assert Grassmann.of(a * b) == Grassmann.of(a) * Grassmann.of(b)

    def test_associative(self):
        rng = random.Random(2)
        for _ in range(30):
            a, b, c = (random_element(rng, V, max_terms=3, max_deg=2) for _ in range(3))
            assert (a * b) * c == a * (b * c)


class TestPairing:
    def test_values(self):
        assert g_bracket(E("e{1}"), E("eps{1}")) == BFVElement.scalar(V, 1)
        assert g_bracket(E("eps{1}"), E("e{1}")) == BFVElement.scalar(V, 1)
        assert g_bracket(E("y1"), E("x1")) == BFVElement.zero(V)
        assert g_bracket(tautological_section(V), E("eps{1}")) == E("y1")

    def test_matches_oracle(self):
        rng = random.Random(3)
        for _ in range(60):
            a, b = random_element(rng, V), random_element(rng, V)
            assert Grassmann.of(g_bracket(a, b)) == oracle_g_bracket(Grassmann.of(a), Grassmann.of(b))

    def test_graded_antisymmetry_and_jacobi(self):
        rng = random.Random(4)
        W = VarTable.standard(1, 3)
        for _ in range(40):
            a, b, c = (random_element(rng, W, 2, 2, total=rng.randint(-1, 1)) for _ in range(3))
            da, db = deg(a), deg(b)
            assert g_bracket(a, b) == -sgn(da, db) * g_bracket(b, a)
            lhs = g_bracket(a, g_bracket(b, c))
            rhs = g_bracket(g_bracket(a, b), c) + sgn(da, db) * g_bracket(b, g_bracket(a, c))
            assert lhs == rhs


class TestKoszul:
    def test_examples(self):
        omega0 = tautological_section(V)
        assert koszul_delta(omega0, E("eps{1}")) == E("y1")
        assert koszul_delta(omega0, E("x1*e{1,2}")) == BFVElement.zero(V)
        assert koszul_homotopy(BFVElement.scalar(V, 1)) == BFVElement.zero(V)
        assert koszul_homotopy(E("y1*e{1,2}")) == E("e{1,2}*eps{1}")

    def test_delta_squares_to_zero(self):
        rng = random.Random(5)
        for _ in range(30):
            sigma = random_element(rng, V, 3, 2, bidegree=(1, 0))
            a = random_element(rng, V)
            assert koszul_delta(sigma, koszul_delta(sigma, a)).is_zero()

    def test_homotopy_identity_example(self):
        omega0 = tautological_section(V)
        a = E("x1*y2*eps{1}")
        lhs = koszul_homotopy(koszul_delta(omega0, a)) + koszul_delta(omega0, koszul_homotopy(a))
        assert lhs == a - chain_i(chain_pr(a))

    def test_chain_maps(self):
        assert chain_pr(chain_i(E("x1*e{1}"))) == E("x1*e{1}")
        assert chain_pr(E("y1*e{1}")).is_zero()
        assert chain_pr(E("x1*e{1} + y2*e{2} + e{1}*eps{1}")) == E("x1*e{1}")
        with pytest.raises(BidegreeError):
            chain_i(E("y1*e{1}"))
        with pytest.raises(BidegreeError):
            chain_i(E("eps{1}"))

    def test_conjugated_homotopy_identity(self):
        rng = random.Random(6)
        c = Contraction.for_section(tautological_section(V) + E("x1*e{2}"))
        for _ in range(50):
            a = random_element(rng, V)
            lhs = c.h(c.delta(a)) + c.delta(c.h(a))
            assert lhs == a - c.ipr(a)

    def test_geometric_contraction_identity(self):
        rng = random.Random(7)
        A = EndomorphismField(V, [[1, poly_parse("x1", V)], [0, 2]])
        mu = [Poly.zero(V), poly_parse("x1^2", V)]
        sigma = A.apply(tautological_section(V) + E("x1^2*e{2}"))
        c = Contraction.for_section(sigma, (A, mu))
        for _ in range(30):
            a = random_element(rng, V, 3, 2)
            assert c.h(c.delta(a)) + c.delta(c.h(a)) == a - c.ipr(a)
        with pytest.raises(WitnessRequiredError):
            Contraction.for_section(sigma)

    def test_identity_endomorphism_seed(self):
        sigma = tautological_section(V) + E("x1*e{2}")
        m = conjugated_homotopy(sigma, sigma)
        assert EndomorphismField.from_element(m) == EndomorphismField.identity(V)


class TestAutomorphisms:
    def test_shift(self):
        mu = [Poly.zero(V), poly_parse("x1", V)]
        assert shift_automorphism(mu, tautological_section(V)) == E("y1*e{1} + (y2 + x1)*e{2}")
        a = E("y1*y2*e{1}*eps{2} + x1")
        assert shift_automorphism([0, 0], a) == a
        back = [-m for m in mu]
        rng = random.Random(8)
        for _ in range(30):
            a, b = random_element(rng, V), random_element(rng, V)
            assert shift_automorphism(back, shift_automorphism(mu, a)) == a
            assert shift_automorphism(mu, a * b) == shift_automorphism(mu, a) * shift_automorphism(mu, b)
            assert shift_automorphism(mu, g_bracket(a, b)) == g_bracket(
                shift_automorphism(mu, a), shift_automorphism(mu, b)
            )
        with pytest.raises(BidegreeError):
            shift_automorphism([poly_parse("y1", V), 0], a)

    def test_endo_action(self):
        A = EndomorphismField(V, [[1, poly_parse("x1", V)], [0, 1]])
        assert endo_action(A, E("e{2}")) == E("e{2} + x1*e{1}")
        assert endo_action(A, E("eps{1}")) == E("eps{1} - x1*eps{2}")
        a = E("x1*e{1}*eps{2} + y1")
        assert endo_action(EndomorphismField.identity(V), a) == a

    def test_endo_pairing_and_intertwining(self):
        A = EndomorphismField(V, [[1, poly_parse("x1", V)], [0, 1]])
        for i in (1, 2):
            for j in (1, 2):
                lhs = g_bracket(endo_action(A, BFVElement.e(V, i)), endo_action(A, BFVElement.eps(V, j)))
                assert lhs == BFVElement.scalar(V, int(i == j))
        rng = random.Random(9)
        omega0 = tautological_section(V)
        for _ in range(30):
            a = random_element(rng, V)
            assert koszul_delta(A.apply(omega0), endo_action(A, a)) == endo_action(A, koszul_delta(omega0, a))

    def test_uncertifiable(self):
        A = EndomorphismField(V, [[poly_parse("x1", V), 0], [0, 1]])
        with pytest.raises(NotCertifiableError):
            endo_action(A, E("e{1}"))
        with pytest.raises(NotCertifiableError):
            EndomorphismField(V, [[0, 0], [0, 1]]).inverse()


class TestText:
    def test_serialize(self):
        assert serialize_element(BFVElement.zero(V)) == "0"
        assert serialize_element(tautological_section(V)) == "y1*e{1} + y2*e{2}"
        assert serialize_element(E("eps{2}*e{1}")) == "-e{1}*eps{2}"

    def test_round_trip(self):
        rng = random.Random(10)
        W = VarTable.standard(2, 3)
        for _ in range(80):
            a = random_element(rng, W, time=True)
            assert parse_element(serialize_element(a), W) == a

    def test_parse_errors(self):
        with pytest.raises(ParseError):
            E("e{3}")
        with pytest.raises(ParseError):
            E("e{1} / e{2}")

    def test_bidegrees(self):
        a = E("x1*e{1,2}*eps{1} + y1 + e{2}")
        assert a.bidegrees() == {(2, 1), (0, 0), (1, 0)}
        assert a.total_degrees() == {1, 0}
        assert a.component(2, 1) == E("x1*e{1,2}*eps{1}")
        assert a.resolution_component(0) == E("y1 + e{2}")
