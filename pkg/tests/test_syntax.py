import random

import pytest

from dlite.errors import NegationNotAllowed, ParseError, UnaConflict
from dlite.model import ABox, Asym, Atom, Dis, Irr, KnowledgeBase, Ref, Role, Sym, TBox, Tra, exists
from dlite.syntax import (QExists, bound_vars, parse_interpretation, parse_kb, parse_query, print_interpretation,
                          print_kb, print_query)
from dlite.canonical import unravel_kb

from conftest import KBS
from randomkb import random_abox, random_tbox


def test_parse_small_kb():
    k = parse_kb("[tbox]\nA <= exists P-\n[abox]\nA(a)\nP(a,b)")
    assert k.tbox.concept_inclusions == ((Atom("A"), exists(Role("P", True))),)
    assert k.abox.concept_assertions == ((True, "A", "a"),)
    assert k.abox.role_assertions == ((True, "P", "a", "b"),)
    assert k.una


def test_parse_example_kb_file():
    k = parse_kb((KBS / "example51.kb").read_text())
    assert len(k.tbox.concept_inclusions) == 5
    assert k.abox.size() == 2


def test_equality_under_una_is_rejected():
    with pytest.raises(UnaConflict):
        parse_kb("[abox]\na = b\n[options]\nuna = true\n")


def test_equality_without_una_is_accepted():
    k = parse_kb("[abox]\na = b\n[options]\nuna = false\n")
    assert k.abox.equalities == (("a", "b"),) and not k.una


def test_parse_conjunctive_query():
    q = parse_query("q(x) := exists y . P(x,y) & A(y)")
    assert q.head == ("x",) and bound_vars(q.body) == ["y"]


def test_parse_boolean_query():
    q = parse_query("q() := exists y . A(y)")
    assert q.head == () and isinstance(q.body, QExists)


def test_negation_in_query_rejected():
    with pytest.raises(NegationNotAllowed):
        parse_query("q(x) := not A(x)")


def test_round_trip_example_kb():
    k = parse_kb((KBS / "example51.kb").read_text())
    assert parse_kb(print_kb(k)) == k


def test_round_trip_empty_kb():
    assert print_kb(KnowledgeBase()) == "[tbox]\n[abox]\n"
    assert parse_kb("[tbox]\n[abox]\n") == KnowledgeBase()


def test_round_trip_all_role_constraints():
    t = TBox((), (), (Dis(Role("P"), Role("S", True)), Sym("P"), Asym("S"), Ref("R"), Irr("S"), Tra("R")))
    k = KnowledgeBase(t, ABox(((True, "A", "a"),)))
    assert parse_kb(print_kb(k)) == k


def test_round_trip_random_kbs():
    rng = random.Random(3)
    for _ in range(1000):
        k = KnowledgeBase(random_tbox(rng, horn=rng.random() < .5, constraints=True),
                          random_abox(rng), rng.random() < .5)
        assert parse_kb(print_kb(k)) == k


def test_round_trip_query_and_interpretation():
    q = parse_query("q(x) := exists y, z . (P(x,y) | S(y,x)) & A(z)")
    assert parse_query(print_query(q)) == q
    i = unravel_kb(parse_kb((KBS / "example51.kb").read_text()), 1).interpretation
    j = parse_interpretation(print_interpretation(i))
    assert (j.domain, j.concept_ext, j.role_ext, j.object_map) == (i.domain, i.concept_ext, i.role_ext,
                                                                   i.object_map)


@pytest.mark.parametrize("text", ["[tbox]\nA <= \n", "[tbox]\nA <= B <= C\n", "[abox]\nA(a\n",
                                  "[tbox]\n>= x P <= bot\n", "[bogus]\n", "[abox]\nP(a,b,c)\n"])
def test_parse_errors_carry_spans_inside_input(text):
    with pytest.raises(ParseError) as e:
        parse_kb(text)
    span = e.value.span
    assert span is not None
    lines = text.splitlines()
    assert 1 <= span.line <= len(lines)
    assert 1 <= span.col_start <= span.col_end <= len(lines[span.line - 1]) + 1
