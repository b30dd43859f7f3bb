import random

from dlite.canonical import unravel_kb
from dlite.fol import (ConceptPred, Dr, EqPred, Obj, PAtom, PFALSE, PNot, PTRUE, VAR, ground, translate)
from dlite.model import (ABox, And, AtLeast, Atom, Bottom, KnowledgeBase, Not, Role, TBox, classify,
                         check_model)
from dlite.normalize import normalize_to_hn_minus
from dlite.sat import dpll, solve
from dlite.syntax import parse_kb

from boundedmodels import find_model
from conftest import KBS

P = Role("P")


def example51():
    return parse_kb((KBS / "example51.kb").read_text())


def at(pred, term=VAR):
    return PAtom(pred, term)


def E(q, r, term=VAR):
    return PAtom(EqPred(q, r), term)


def test_example51_translation_matches_chi():
    s = translate(normalize_to_hn_minus(example51()))
    A = at(ConceptPred("A"))
    chi = {
        (A, E(1, P.inv())), (E(1, P.inv()), A), (A, E(2, P)), (PTRUE, PNot(E(2, P.inv()))), (E(1, P), A),
        (E(1, P), E(1, P.inv(), Dr(P.inv()))), (E(1, P.inv()), E(1, P, Dr(P))),
        (E(2, P), E(1, P)), (E(2, P.inv()), E(1, P.inv())),
    }
    got = [(imp.body, imp.head) for imp in s.universal_part]
    assert len(got) == len(chi) and set(got) == chi
    assert set(s.ground_part) == {at(ConceptPred("A"), Obj("a")), E(1, P, Obj("a")), E(1, P.inv(), Obj("a2"))}
    assert set(s.constants) == {Obj("a"), Obj("a2"), Dr(P), Dr(P.inv())}


def test_example51_grounding_is_satisfiable():
    s = translate(normalize_to_hn_minus(example51()))
    cs = ground(s)
    assert len(s.constants) == 4
    ground_units = [c for c in cs.clauses if len(c) == 1 and c[0] > 0]
    assert len(ground_units) >= 3
    assert dpll(cs).satisfiable


def test_abox_only_translation():
    s = translate(KnowledgeBase(TBox(), ABox(((True, "A", "a"),))))
    assert s.universal_part == []
    assert s.ground_part == [at(ConceptPred("A"), Obj("a"))]


def test_role_hierarchy_translation():
    r1, r2 = Role("R1"), Role("R2")
    k = KnowledgeBase(TBox((), ((r1, r2),)), ABox((), ((True, "R1", "a", "b"),)))
    s = translate(normalize_to_hn_minus(k))
    assert set(s.ground_part) == {E(1, r1, Obj("a")), E(1, r2, Obj("a")),
                                  E(1, r1.inv(), Obj("b")), E(1, r2.inv(), Obj("b"))}
    rh = {(imp.body, imp.head) for imp in s.universal_part if imp.block == "T^R"}
    assert {(E(1, r1), E(1, r2)), (E(1, r1.inv()), E(1, r2.inv()))} <= rh


def test_bottom_grounds_unsat():
    k = KnowledgeBase(TBox(((Atom("A"), Bottom()),)), ABox(((True, "A", "a"),)))
    assert not dpll(ground(translate(normalize_to_hn_minus(k)))).satisfiable


def test_negated_role_assertion_contradiction():
    k = parse_kb("[tbox]\nrole S <= P\n[abox]\nS(a, b)\nnot P(a, b)")
    s = translate(normalize_to_hn_minus(k))
    assert PFALSE in s.ground_part
    assert solve(k).verdict == "unsat"


def test_empty_kb_gets_dummy_constant():
    cs = ground(translate(KnowledgeBase()))
    assert dpll(cs).satisfiable


# ------------------------------------------------------------- properties

CONCEPTS = ["A", "B", "C", "D"]
ROLES = ["P", "S", "T"]


def _basic(rng, qmax=3):
    if rng.random() < 0.5:
        return Atom(rng.choice(CONCEPTS))
    return AtLeast(rng.choice([1, 1, 2, qmax]), Role(rng.choice(ROLES), rng.random() < .4))


def _random_kb(rng, shape):
    cis = []
    for _ in range(rng.randint(1, 5)):
        lhs = _basic(rng)
        if shape != "core" and rng.random() < .25:
            lhs = And(lhs, _basic(rng))
        r = rng.random()
        if r < .15:
            rhs = Bottom()
        elif r < .35:
            rhs = Not(_basic(rng))
        elif shape == "bool" and r < .5:
            rhs = Not(And(Not(_basic(rng)), Not(_basic(rng))))
        else:
            rhs = _basic(rng)
        if shape in ("core", "krom") and isinstance(rhs, Bottom) and isinstance(lhs, And):
            lhs = lhs.left
        cis.append((lhs, rhs))
    ris = []
    if rng.random() < .4:
        a, b = rng.sample(ROLES, 2)
        ris.append((Role(a), Role(b, rng.random() < .3)))
    objs = [f"o{i}" for i in range(rng.randint(1, 5))]
    cas = tuple({(rng.random() > .2, rng.choice(CONCEPTS), rng.choice(objs)) for _ in range(rng.randint(0, 4))})
    ras = tuple({(True, rng.choice(ROLES), rng.choice(objs), rng.choice(objs)) for _ in range(rng.randint(0, 4))})
    return KnowledgeBase(TBox(tuple(cis), tuple(ris)), ABox(cas, ras))


def test_grounding_preserves_shape():
    rng = random.Random(21)
    checked = 0
    for _ in range(400):
        shape = rng.choice(["core", "horn"])
        k = _random_kb(rng, shape)
        rep = classify(k)
        if not rep.admissible:
            continue
        cs = ground(translate(normalize_to_hn_minus(k)))
        if rep.shape == "core":
            assert all(len(c) <= 2 for c in cs.clauses)
        if rep.shape == "horn":
            assert all(sum(1 for l in c if l > 0) <= 1 for c in cs.clauses)
        checked += 1
    assert checked > 200


def test_grounding_size_is_linear():
    rng = random.Random(22)
    ratios = []
    for _ in range(200):
        k = _random_kb(rng, rng.choice(["core", "horn", "bool"]))
        if not classify(k).admissible:
            continue
        hk = normalize_to_hn_minus(k)
        cs = ground(translate(hk))
        kb = hk.kb
        measure = (kb.tbox.size() + kb.abox.size() + 1) * (len(kb.abox.objects()) + 2 * len(kb.role_names()) + 1)
        ratios.append(cs.size() / measure)
    assert max(ratios) < 40


def _evaluable_violations(model, k, depth):
    """Violations visible at elements whose whole neighbourhood lies inside the unraveling."""
    i = model.interpretation
    inner = {d for d, dep in model.depth.items() if dep < depth}
    out = []
    for lhs, rhs in k.tbox.concept_inclusions:
        bad = (i.extension(lhs) - i.extension(rhs)) & inner
        if bad:
            out.append((lhs, rhs, sorted(bad)))
    for v in check_model(i, k):
        if v.kind != "concept inclusion":
            out.append(v)
    return out


def test_equisatisfiable_with_bounded_search_and_unraveling():
    rng = random.Random(23)
    found = checked = 0
    while checked < 300:
        k = _random_kb(rng, rng.choice(["core", "krom", "horn", "bool"]))
        res = solve(k)
        if res.verdict not in ("sat", "unsat"):
            continue
        checked += 1
        if find_model(k, 5) is not None:
            found += 1
            assert res.verdict == "sat", k
        if res.verdict == "sat":
            model = unravel_kb(k, 3)
            assert _evaluable_violations(model, k, 3) == [], k
    assert found > 150
