import random

from dlite.chase import chase, chase_entails, default_bound, dump_abox, to_interpretation
from dlite.gadgets import HornCNF, gen_horncnf_hf, v_name
from dlite.model import AtLeast, Bottom, KnowledgeBase, Role, TBox, check_model, classify
from dlite.sat import solve
from dlite.syntax import parse_kb

from boundedmodels import find_model
from randomkb import random_abox, random_tbox


def test_hf_gadget_derives_entailed_variable():
    phi = HornCNF(((1, 2, 3),), (1, 2), 3)
    k, targets = gen_horncnf_hf(phi)
    res = chase(k)
    assert res.status == "sat"
    assert chase_entails(k, ("A", v_name(1, 1, 3))) == "yes"


def test_hf_gadget_without_units_derives_nothing():
    phi = HornCNF(((1, 2, 3), (2, 4, 5)), (), 5)
    k, targets = gen_horncnf_hf(phi)
    assert chase(k).status == "sat"
    for concept, obj in targets:
        assert chase_entails(k, (concept, obj)) == "no"


def test_restricted_chase_reuses_successor():
    k = parse_kb("[tbox]\nA <= exists P\n>= 2 P <= bot\n[abox]\nA(a)\nP(a, b)")
    res = chase(k)
    assert res.status == "sat"
    assert res.state.nulls == 0
    assert chase_entails(k, ("P", "a", "b")) == "yes"


def test_chase_detects_contradiction():
    k = parse_kb("[tbox]\nA <= exists P\n>= 2 P <= bot\nexists P- <= B\n[abox]\nA(a)\nP(a, b)\nnot B(b)")
    assert chase(k).status == "unsat"
    k = parse_kb("[tbox]\n>= 2 P <= bot\n[abox]\nP(a, b)\nP(a, c)")
    assert chase(k).status == "unsat"


def test_chase_refuses_non_horn():
    assert chase(parse_kb("[tbox]\ntop <= A | B")).status == "fragment-unsupported"


def test_chase_bound():
    k = parse_kb("[tbox]\nA <= exists P\nexists P- <= A\n[abox]\nA(a)")
    assert chase(k, 5).status == "bound-exceeded"
    assert chase_entails(k, ("A", "a"), 5) == "bound-exceeded"


def _random_horn_f(rng):
    t = random_tbox(rng, horn=True, numbers=False, size=4)
    funcs = tuple((AtLeast(2, Role(rng.choice(["P", "S"]), rng.random() < .5)), Bottom())
                  for _ in range(rng.randint(0, 2)))
    return KnowledgeBase(TBox(t.concept_inclusions + funcs, t.role_inclusions), random_abox(rng, objects=3))


def test_chase_is_sound_and_agrees_with_solve():
    rng = random.Random(51)
    compared = sound = 0
    for _ in range(300):
        k = _random_horn_f(rng)
        res = chase(k)
        if res.status == "bound-exceeded":
            continue
        assert res.status in ("sat", "unsat")
        if classify(k).admissible:
            assert res.status == solve(k).verdict, k
            compared += 1
        model = find_model(k, 5)
        if model is not None:
            assert res.status == "sat", k
            state = res.state
            named = {a: state.find(a) for a in k.abox.objects()}
            for c, xs in state.concepts.items():
                for a, e in named.items():
                    if e in xs:
                        assert model.object_map[a] in model.concept_ext.get(c, set()), (k, c, a)
            for name, s, o in state.edges:
                for a, ea in named.items():
                    for b, eb in named.items():
                        if (s, o) == (ea, eb):
                            pair = (model.object_map[a], model.object_map[b])
                            assert pair in model.role_ext.get(name, set()), (k, name, a, b)
            sound += 1
        if res.status == "sat":
            assert check_model(to_interpretation(res.state), k) == [], k
    assert compared > 150 and sound > 100


def test_chase_is_deterministic():
    k = parse_kb("[tbox]\nA <= exists P\nexists P- <= B\nB <= exists S\n>= 2 S <= bot\n[abox]\nA(a)\nA(b)")
    first, second = chase(k), chase(k)
    assert first.status == second.status == "sat"
    assert first.steps == second.steps
    assert dump_abox(first.state) == dump_abox(second.state)


def test_default_bound_formula():
    k = parse_kb("[tbox]\nA <= B\n[abox]\nA(a)")
    assert default_bound(k) == 10 * (k.abox.size() + k.tbox.size()) ** 2
