import pytest

from bfv import (
    BFVElement,
    EndomorphismField,
    GaugeGenerator,
    GaugeHomotopy,
    MorphismFamily,
    SectionMu,
    compose_homotopies,
    construct_charge,
    gauge_act,
    identity_homotopy,
    integrate_generator,
    invert_homotopy,
    is_pure,
    l_geo,
    lift_normalized_mc,
    mc_check,
    ode_residuals,
    parse_element,
    poly_parse,
    project_generator,
    verify_geometric_witness,
)
from bfv.errors import BidegreeError, EndpointMismatchError, NilpotencyError

from support import by_label


@pytest.fixture(scope="module")
def ex_b():
    pi = by_label("ex-b")
    ch = construct_charge(pi)
    beta = lift_normalized_mc(ch, [poly_parse("0", pi.vars), poly_parse("x1", pi.vars)])
    return pi, ch, beta


def E(text, vars):
    return parse_element(text, vars)


def test_zero_generator_is_identity(ex_b):
    pi, _, _ = ex_b
    fam = integrate_generator(pi, BFVElement.zero(pi.vars))
    assert fam == MorphismFamily.identity(pi.vars)


def test_ex_a_translation():
    pi = by_label("ex-a")
    V = pi.vars
    fam = integrate_generator(pi, E("y", V))
    assert fam.coords[0] == E("x + t", V)
    assert fam.coords[1] == E("y", V)
    assert fam.odd == (E("e{1}", V), E("eps{1}", V))
    assert all(r.is_zero() for r in ode_residuals(pi, E("y", V), fam))


def test_unipotent_ghost_block(ex_b):
    pi, _, _ = ex_b
    V = pi.vars
    fam = integrate_generator(pi, E("x1*e{1}*eps{2}", V))
    assert fam.odd[1] == E("e{2} - t*x1*e{1}", V)
    assert fam.odd[2] == E("eps{1} + t*x1*eps{2}", V)
    B = fam.ghost_block()
    assert B == EndomorphismField(V, [[1, poly_parse("-t*x1", V)], [0, 1]])
    # momenta transform by the inverse transpose of the ghost block
    Binv_t = B.inverse().transpose()
    for j in range(2):
        want = sum((BFVElement.eps(V, i + 1) * Binv_t[i, j] for i in range(2)), BFVElement.zero(V))
        assert fam.odd[2 + j] == want


def test_non_nilpotent_rejected(ex_b):
    pi, _, _ = ex_b
    with pytest.raises(NilpotencyError, match="not locally nilpotent"):
        integrate_generator(pi, E("e{1}*eps{1}", pi.vars), nil_cap=8)
    with pytest.raises(BidegreeError):
        GaugeGenerator(E("e{1}", pi.vars))


def test_gauge_act_identity_and_inverse(ex_b):
    pi, ch, beta = ex_b
    V = pi.vars
    assert gauge_act(ch, MorphismFamily.identity(V), beta).beta == beta.beta
    gen = GaugeGenerator(E("x1*e{1}*eps{2} + t*y1*e{1}*eps{2}", V))
    moved = gauge_act(ch, integrate_generator(pi, gen), beta)
    assert moved.beta != beta.beta
    back = gauge_act(ch, integrate_generator(pi, gen.reversed()), moved)
    assert back.beta == beta.beta


def test_witness_transport(ex_b):
    pi, ch, beta = ex_b
    V = pi.vars
    moved = gauge_act(ch, integrate_generator(pi, E("x1*e{1}*eps{2}", V)), beta)
    assert mc_check(ch, moved) is True
    A, mu = moved.witness
    assert verify_geometric_witness(pi, moved, A, mu) is True
    assert l_geo(pi, moved) == SectionMu.of(V, [0, poly_parse("-x1", V)])


def test_project_generator(ex_b):
    pi, _, _ = ex_b
    V = pi.vars
    assert project_generator(E("x1*y2 + t", V)).F == poly_parse("x1*y2 + t", V)
    assert project_generator(E("x1*y2 + y1*e{1}*eps{1}", V)).F == poly_parse("x1*y2", V)
    assert project_generator(E("x1*e{1}*eps{2}", V)).F == poly_parse("0", V)


def test_homotopies(ex_b):
    pi, ch, beta = ex_b
    V = pi.vars
    pure = GaugeHomotopy.build(ch, beta, [E("x1*e{1}*eps{2}", V), E("e{1,2}*eps{1,2}", V)])
    assert is_pure(pure)
    assert all(mc_check(ch, b) is True for b in pure.path(ch))
    mixed = GaugeHomotopy.build(ch, pure.end, [E("x1 + y1", V)])
    assert not is_pure(mixed)
    assert is_pure(compose_homotopies(pure, GaugeHomotopy.build(ch, pure.end, [E("t*e{1}*eps{2}", V)])))

    padded = compose_homotopies(pure, identity_homotopy(pure.end))
    assert len(padded.segments) == len(pure.segments) + 1
    assert padded.end.beta == pure.end.beta

    inv = invert_homotopy(ch, pure)
    assert inv.end.beta == pure.start.beta
    twice = invert_homotopy(ch, inv)
    assert twice.start.beta == pure.start.beta and twice.end.beta == pure.end.beta

    both = compose_homotopies(pure, mixed)
    assert [project_generator(g).F for g in both.generators] == [
        project_generator(g).F for g in pure.generators + mixed.generators
    ]
    with pytest.raises(EndpointMismatchError):
        compose_homotopies(mixed, pure)
