import random

import pytest

from dlite.errors import UnknownName
from dlite.gadgets import HornCNF, countermodel_horncnf_hf, gen_horncnf_hf
from dlite.model import (And, AtLeast, AtLeastQ, Atom, Bottom, Dis, Interpretation, KnowledgeBase, Not, Or,
                         Role, TBox, ABox, at_most, check_model, classify, exists, inv, join_shapes)
from dlite.sat import solve
from dlite.syntax import parse_kb

from randomkb import random_tbox


def test_inv_swaps_direction():
    assert inv(Role("P")) == Role("P", True)
    assert inv(Role("P", True)) == Role("P")
    for name in ("P", "S"):
        for flag in (False, True):
            r = Role(name, flag)
            assert inv(inv(r)) == r


def _point(concepts=None):
    return Interpretation({"d"}, concepts or {"A": {"d"}}, {"P": {("d", "d")}}, {"a": "d"})


def test_check_model_single_reflexive_point():
    k = KnowledgeBase(TBox(((Atom("A"), exists(Role("P"))),)), ABox(((True, "A", "a"),)))
    assert check_model(_point(), k) == []


def test_check_model_reports_violated_axiom():
    k = KnowledgeBase(TBox(((Atom("A"), Not(exists(Role("P")))),)), ABox(((True, "A", "a"),)))
    violations = check_model(_point(), k)
    assert len(violations) == 1 and violations[0].kind == "concept inclusion"


def test_check_model_unknown_symbol():
    k = KnowledgeBase(TBox(((Atom("B"), Bottom()),)))
    with pytest.raises(UnknownName):
        check_model(_point(), k)


def test_figure_five_interpretation_is_a_model():
    phi = HornCNF(((1, 2, 3), (2, 4, 5)), (), 5)
    k, _ = gen_horncnf_hf(phi)
    i = countermodel_horncnf_hf(phi, {v: False for v in range(1, 6)}, faithful=True)
    assert check_model(i, k) == []


# naive evaluator: one element at a time, derived constructs expanded first

def _member(i, d, c):
    if isinstance(c, Bottom):
        return False
    if isinstance(c, Atom):
        return d in i.concept_ext[c.name]
    if isinstance(c, Not):
        return not _member(i, d, c.arg)
    if isinstance(c, And):
        return _member(i, d, c.left) and _member(i, d, c.right)
    r = c.role
    pairs = i.role_ext[r.name]
    succ = [y for (x, y) in pairs if x == d] if not r.inverted else [x for (x, y) in pairs if y == d]
    if isinstance(c, AtLeastQ):
        succ = [y for y in succ if _member(i, y, c.filler)]
    return len(set(succ)) >= c.q


def _naive_ok(i, k):
    return all(all(not _member(i, d, l) or _member(i, d, r) for d in i.domain)
               for l, r in k.tbox.concept_inclusions) and all(
        all(_member(i, d, c) == pos for pos, c, d in [(p, Atom(n), i.object_map[o])])
        for p, n, o in k.abox.concept_assertions)


def test_check_model_matches_naive_evaluator():
    rng = random.Random(7)
    A, B, P = Atom("A"), Atom("B"), Role("P")
    concepts = [A, B, exists(P), exists(P.inv()), AtLeast(2, P), Or(A, B), at_most(1, P), Not(Bottom()),
                AtLeastQ(2, P, A), AtLeastQ(1, P.inv(), Not(B))]
    for _ in range(300):
        n = rng.randint(1, 6)
        dom = [f"d{j}" for j in range(n)]
        i = Interpretation(set(dom), {"A": {d for d in dom if rng.random() < .5},
                                      "B": {d for d in dom if rng.random() < .5}},
                           {"P": {(x, y) for x in dom for y in dom if rng.random() < .3}}, {"a": dom[0]})
        lhs, rhs = rng.choice(concepts), rng.choice(concepts)
        k = KnowledgeBase(TBox(((lhs, rhs),)), ABox(((rng.random() < .5, "A", "a"),)))
        assert (check_model(i, k) == []) == _naive_ok(i, k)


def test_classify_uml_fragments():
    core = parse_kb("[tbox]\nManager <= Employee\nAreaManager <= not TopManager\n")
    r = classify(core)
    assert (r.shape, r.numbers) == ("core", "none")
    bool_kb = parse_kb("[tbox]\nManager <= Employee\nAreaManager <= not TopManager\n"
                       "Manager <= AreaManager | TopManager\n")
    assert classify(bool_kb).shape == "bool"


def test_classify_functional_role_with_sub_role_breaks_a3():
    r = classify(parse_kb("[tbox]\nP1 <= P2\n>= 2 P2 <= bot\nA <= exists P1\n"))
    assert r.has_role_inclusions and r.numbers == "F"
    assert [v.rule for v in r.a123_violations] == ["A3"]
    assert not r.admissible


def test_conjunction_on_the_right_is_split():
    r = classify(parse_kb("[tbox]\nA <= B & exists P\n"))
    assert r.shape == "core"


def test_top_on_left_is_core_with_note():
    r = classify(parse_kb("[tbox]\ntop <= not >= 2 P-\n"))
    assert r.shape == "core" and r.numbers == "F" and r.notes


_NUMBERS = {"none": 0, "F": 1, "N": 2}


def test_classify_is_monotone_under_added_concept_inclusions():
    rng = random.Random(11)
    for _ in range(300):
        t = random_tbox(rng, horn=rng.random() < .5, size=4)
        extra = random_tbox(rng, horn=rng.random() < .5, size=1, hierarchy=False)
        bigger = TBox(t.concept_inclusions + extra.concept_inclusions, t.role_inclusions)
        small, large = classify(t), classify(bigger)
        assert join_shapes(small.shape, large.shape) == large.shape
        assert _NUMBERS[small.numbers] <= _NUMBERS[large.numbers]
        assert len(small.a123_violations) <= len(large.a123_violations)


def test_role_equivalence_removes_proper_sub_role():
    # P <= S- plus S <= P- makes the two roles equivalent, so the
    # functionality of S- no longer sits on a role with a proper sub-role
    before = classify(parse_kb("[tbox]\nP <= S-\n>= 2 S- <= bot\n"))
    after = classify(parse_kb("[tbox]\nP <= S-\nS <= P-\n>= 2 S- <= bot\n"))
    assert before.a123_violations and not after.a123_violations


def test_classify_flags_grow_with_role_inclusions():
    rng = random.Random(12)
    for _ in range(300):
        t = random_tbox(rng, horn=rng.random() < .5, size=4)
        extra = random_tbox(rng, horn=rng.random() < .5, size=1)
        bigger = TBox(t.concept_inclusions + extra.concept_inclusions,
                      t.role_inclusions + extra.role_inclusions)
        small, large = classify(TBox(t.concept_inclusions, t.role_inclusions)), classify(bigger)
        assert join_shapes(small.shape, large.shape) == large.shape
        assert _NUMBERS[small.numbers] <= _NUMBERS[large.numbers]
        assert small.has_role_inclusions <= large.has_role_inclusions


def test_sat_refuses_role_hierarchy_under_functionality():
    k = parse_kb("[tbox]\nR1 <= R12\nR2 <= R12\n>= 2 R12 <= bot\nA <= exists R1\nA <= exists R2\n"
                 "[abox]\nA(a)\n")
    assert solve(k).verdict == "fragment-unsupported"


def test_disjointness_constraint_checked():
    i = Interpretation({"d"}, {}, {"P": {("d", "d")}, "S": {("d", "d")}}, {})
    k = KnowledgeBase(TBox((), (), (Dis(Role("P"), Role("S")),)))
    assert check_model(i, k)
