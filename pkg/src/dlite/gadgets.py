"""Hardness constructions as knowledge-base generators, their explicit
countermodels, the conjunction-elimination rewrite, and brute-force
propositional oracles that serve as ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .model import (ABox, And, AtLeast, Atom, Bottom, Concept, Interpretation, KnowledgeBase, Not, Role,
                    TBox, conjuncts, exists)

BOT = Bottom()


# ------------------------------------------------------------ formulas

@dataclass(frozen=True)
class TwoPlusTwoCNF:
    """Clauses (p1 ∨ p2 ∨ ¬n1 ∨ ¬n2) over variables 1..num_vars."""
    clauses: Tuple[Tuple[int, int, int, int], ...]
    num_vars: int

    def __post_init__(self):
        for c in self.clauses:
            if len(c) != 4 or not all(1 <= v <= self.num_vars for v in c):
                raise ValueError(f"malformed 2+2 clause {c}")


@dataclass(frozen=True)
class HornCNF:
    """Rules a ∧ b → c and facts a over variables 1..num_vars."""
    rules: Tuple[Tuple[int, int, int], ...]
    facts: Tuple[int, ...]
    num_vars: int

    def __post_init__(self):
        for r in self.rules:
            if len(r) != 3 or not all(1 <= v <= self.num_vars for v in r):
                raise ValueError(f"malformed Horn rule {r}")
        if not all(1 <= v <= self.num_vars for v in self.facts):
            raise ValueError("fact variable out of range")


@dataclass(frozen=True)
class PositiveCNF3:
    """Monotone clauses (a ∨ b ∨ c) read as one-in-three constraints."""
    clauses: Tuple[Tuple[int, int, int], ...]
    num_vars: int

    def __post_init__(self):
        for c in self.clauses:
            if len(c) != 3 or not all(1 <= v <= self.num_vars for v in c):
                raise ValueError(f"malformed 3-clause {c}")


def parse_clauses(text: str, family: str):
    """Read a DIMACS-like file: "c" comment lines, an optional
    "p <family> <vars> <clauses>" header, one 0-terminated clause per line."""
    rows: List[List[int]] = []
    declared = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) >= 3:
                declared = int(parts[2])
            continue
        nums = [int(x) for x in line.split()]
        if not nums or nums[-1] != 0:
            raise ValueError(f"line {lineno}: clause must end with 0")
        rows.append(nums[:-1])
    num_vars = max([declared] + [abs(v) for r in rows for v in r])
    if family in ("2p2", "core-hn-2p2"):
        clauses = []
        for r in rows:
            pos = [v for v in r if v > 0]
            neg = [-v for v in r if v < 0]
            if len(pos) != 2 or len(neg) != 2:
                raise ValueError(f"malformed 2+2 clause {r}")
            clauses.append((pos[0], pos[1], neg[0], neg[1]))
        return TwoPlusTwoCNF(tuple(clauses), num_vars)
    if family in ("horn-hf", "horn-f-nouna"):
        rules, facts = [], []
        for r in rows:
            if len(r) == 1 and r[0] > 0:
                facts.append(r[0])
                continue
            pos = [v for v in r if v > 0]
            neg = [-v for v in r if v < 0]
            if len(pos) != 1 or len(neg) != 2:
                raise ValueError(f"malformed Horn clause {r}")
            rules.append((neg[0], neg[1], pos[0]))
        return HornCNF(tuple(rules), tuple(facts), num_vars)
    if family == "one-in-three":
        clauses = []
        for r in rows:
            if len(r) != 3 or any(v <= 0 for v in r):
                raise ValueError(f"malformed monotone 3-clause {r}")
            clauses.append(tuple(r))
        return PositiveCNF3(tuple(clauses), num_vars)
    raise ValueError(f"unknown gadget family {family!r}")


# ------------------------------------------------------------- oracles

def horn_entails(phi: HornCNF, a: int) -> bool:
    """Forward chaining over the rules from the facts."""
    true = set(phi.facts)
    changed = True
    while changed:
        changed = False
        for x, y, z in phi.rules:
            if x in true and y in true and z not in true:
                true.add(z)
                changed = True
    return a in true


def horn_entails_naive(phi: HornCNF, a: int) -> bool:
    for values in product((False, True), repeat=phi.num_vars):
        v = (None,) + values
        if all(v[x] for x in phi.facts) and all(not (v[x] and v[y]) or v[z] for x, y, z in phi.rules):
            if not v[a]:
                return False
    return True


def sat_2p2(phi: TwoPlusTwoCNF) -> Optional[Dict[int, bool]]:
    """A satisfying assignment found by backtracking, or None."""
    value: Dict[int, bool] = {}
    by_var: Dict[int, List[Tuple[int, int, int, int]]] = {}
    for c in phi.clauses:
        by_var.setdefault(max(c), []).append(c)

    def falsified(c) -> bool:
        p1, p2, n1, n2 = c
        return not value[p1] and not value[p2] and value[n1] and value[n2]

    def search(i: int) -> bool:
        if i > phi.num_vars:
            return True
        for b in (False, True):
            value[i] = b
            if not any(falsified(c) for c in by_var.get(i, ())) and search(i + 1):
                return True
        del value[i]
        return False

    return dict(value) if search(1) else None


def sat_2p2_naive(phi: TwoPlusTwoCNF) -> bool:
    for values in product((False, True), repeat=phi.num_vars):
        v = (None,) + values
        if all(v[p1] or v[p2] or not v[n1] or not v[n2] for p1, p2, n1, n2 in phi.clauses):
            return True
    return False


def one_in_three_sat(phi: PositiveCNF3) -> Optional[Dict[int, bool]]:
    """An assignment making exactly one variable true per clause, or None."""
    value: Dict[int, bool] = {}
    touching: Dict[int, List[Tuple[int, int, int]]] = {}
    for c in phi.clauses:
        for v in set(c):
            touching.setdefault(v, []).append(c)

    def ok(c) -> bool:
        known = [value[v] for v in c if v in value]
        trues = sum(known)
        if trues > 1:
            return False
        return len(known) < 3 or trues == 1

    def search(i: int) -> bool:
        if i > phi.num_vars:
            return True
        for b in (False, True):
            value[i] = b
            if all(ok(c) for c in touching.get(i, ())) and search(i + 1):
                return True
        del value[i]
        return False

    return dict(value) if search(1) else None


def one_in_three_naive(phi: PositiveCNF3) -> bool:
    for values in product((False, True), repeat=phi.num_vars):
        v = (None,) + values
        if all(sum(v[x] for x in c) == 1 for c in phi.clauses):
            return True
    return False


# --------------------------------------------- conjunction elimination

@dataclass(frozen=True)
class ConjunctionExpansion:
    left: Concept
    right: Concept
    head: Concept
    roles: Tuple[str, str, str, str, str]  # R1, R2, R3, R12, R23


def simulate_conjunction(c1: Concept, c2: Concept, c: Concept, names: Sequence[str]
                         ) -> Tuple[List[Tuple[Concept, Concept]], List[Tuple[Role, Role]]]:
    """The ten axioms replacing C1 ⊓ C2 ⊑ C, over five fresh role names."""
    r1, r2, r3, r12, r23 = (Role(n) for n in names)
    concept_axioms = [
        (c1, exists(r1)), (c2, exists(r2)),
        (AtLeast(2, r12), BOT),
        (exists(r1.inv()), exists(r3.inv())),
        (exists(r3), c),
        (AtLeast(2, r23.inv()), BOT),
    ]
    role_axioms = [(r1, r12), (r2, r12), (r3, r23), (r2, r23)]
    return concept_axioms, role_axioms


def expand_conjunctions(t: TBox, prefix: str = "X") -> Tuple[TBox, List[ConjunctionExpansion]]:
    """Replace every inclusion with a conjunctive left side by the simulation
    axioms, repeating on the new axiom whose left side is still conjunctive."""
    used = t.role_names() | t.concept_names()
    counter = [0]

    def fresh_names() -> Tuple[str, ...]:
        while True:
            counter[0] += 1
            names = tuple(f"{prefix}{counter[0]}_{s}" for s in ("1", "2", "3", "12", "23"))
            if not used & set(names):
                used.update(names)
                return names

    todo = list(t.concept_inclusions)
    out_ci: List[Tuple[Concept, Concept]] = []
    out_ri = list(t.role_inclusions)
    log: List[ConjunctionExpansion] = []
    while todo:
        lhs, rhs = todo.pop(0)
        parts = conjuncts(lhs)
        if len(parts) < 2:
            out_ci.append((lhs, rhs))
            continue
        c1 = parts[0]
        c2 = parts[1]
        for p in parts[2:]:
            c2 = And(c2, p)
        names = fresh_names()
        cis, ris = simulate_conjunction(c1, c2, rhs, names)
        log.append(ConjunctionExpansion(c1, c2, rhs, names))
        todo[0:0] = cis
        out_ri.extend(ris)
    return TBox(tuple(out_ci), tuple(out_ri), t.role_constraints), log


def extend_model_for_conjunction(i: Interpretation, e: ConjunctionExpansion,
                                 witness: Optional[str] = None) -> Interpretation:
    """A model of the expanded axioms agreeing with i on the old symbols;
    needs an element of the head concept."""
    head = sorted(i.extension(e.head))
    if witness is None:
        if not head:
            raise ValueError(f"the head {e.head} is empty; the simulation needs a witness")
        witness = head[0]
    elif witness not in head:
        raise ValueError(f"{witness} is not in {e.head}")
    left, right = i.extension(e.left), i.extension(e.right)
    r1 = {(x, x) for x in left}
    r2 = {(x, x) for x in right}
    r3 = {(x, x) for x in left & right} | {(witness, x) for x in left - right}
    roles = dict(i.role_ext)
    n1, n2, n3, n12, n23 = e.roles
    roles.update({n1: r1, n2: r2, n3: r3, n12: r1 | r2, n23: r2 | r3})
    return Interpretation(set(i.domain), dict(i.concept_ext), roles, dict(i.object_map))


# ------------------------------------------------------------ helpers

def _kb(cis, ris=(), abox_c=(), abox_r=(), una=True) -> KnowledgeBase:
    return KnowledgeBase(TBox(tuple(cis), tuple(ris)),
                         ABox(tuple(dict.fromkeys(abox_c)), tuple(dict.fromkeys(abox_r))), una)


def _maybe_expand(k: KnowledgeBase, expand: bool) -> KnowledgeBase:
    if not expand:
        return k
    t, _ = expand_conjunctions(k.tbox)
    return KnowledgeBase(t, k.abox, k.una)


def _conj(*cs: Concept) -> Concept:
    out = cs[0]
    for c in cs[1:]:
        out = And(out, c)
    return out


def _interp(domain, concepts: Dict[str, Set[str]], roles: Dict[str, Set[Tuple[str, str]]],
            objects: Dict[str, str]) -> Interpretation:
    return Interpretation(set(domain), {c: set(v) for c, v in concepts.items()},
                          {r: set(v) for r, v in roles.items()}, dict(objects))


# ------------------------------------------- 2+2CNF (krom, with functionality)

def _tbox_2p2(covering: bool) -> Tuple[List[Tuple[Concept, Concept]], List[Tuple[Role, Role]]]:
    cis: List[Tuple[Concept, Concept]] = []
    ris: List[Tuple[Role, Role]] = []
    for j in range(1, 5):
        pj, pt, pf = Role(f"P{j}"), Role(f"P{j}_t"), Role(f"P{j}_f")
        cis.append((AtLeast(2, pj), BOT))
        ris += [(pf, pj), (pt, pj)]
        if covering:
            cis.append((Not(exists(pt)), exists(pf)))
        cis.append((exists(pf.inv()), Not(Atom("A"))))
        cis.append((exists(pt.inv()), Atom("A")))
    cis.append((_conj(exists(Role("P1_f")), exists(Role("P2_f")), exists(Role("P3_t")), exists(Role("P4_t"))),
                exists(Role("S_f", True))))
    cis.append((AtLeast(2, Role("S", True)), BOT))
    ris.append((Role("S_f"), Role("S")))
    cis.append((exists(Role("S_f")), Atom("D")))
    return cis, ris


def _abox_2p2(phi: TwoPlusTwoCNF):
    roles = []
    for k, clause in enumerate(phi.clauses, 1):
        roles.append((True, "S", "f", f"c{k}"))
        for j, v in enumerate(clause, 1):
            roles.append((True, f"P{j}", f"c{k}", f"a{v}"))
    return roles


def gen_2p2cnf(phi: TwoPlusTwoCNF, expand: bool = False) -> Tuple[KnowledgeBase, Tuple[str, str]]:
    """The KB entails D(f) iff phi is unsatisfiable."""
    cis, ris = _tbox_2p2(covering=True)
    k = _kb(cis, ris, (), _abox_2p2(phi))
    return _maybe_expand(k, expand), ("D", "f")


def gen_core_hn_2p2(phi: TwoPlusTwoCNF, expand: bool = False) -> Tuple[KnowledgeBase, Tuple[str, str]]:
    """Covering replaced by counting over the roles T_j; same contract."""
    cis, ris = _tbox_2p2(covering=False)
    for j in range(1, 5):
        tj = [Role(f"T{j}_{n}") for n in (1, 2, 3)]
        t = Role(f"T{j}")
        ris += [(r, t) for r in tj]
        cis.append((AtLeast(2, t.inv()), BOT))
        cis += [(exists(Role(f"P{j}")), exists(tj[0])), (exists(Role(f"P{j}")), exists(tj[1]))]
        cis.append((_conj(exists(tj[0].inv()), exists(tj[1].inv())), exists(tj[2].inv())))
        cis.append((AtLeast(2, t), exists(Role(f"P{j}_t"))))
        cis.append((exists(tj[2]), exists(Role(f"P{j}_f"))))
    k = _kb(cis, ris, (), _abox_2p2(phi))
    return _maybe_expand(k, expand), ("D", "f")


def countermodel_2p2(phi: TwoPlusTwoCNF, assignment: Dict[int, bool]) -> Interpretation:
    """The model refuting D(f) built from a satisfying assignment."""
    m, n = phi.num_vars, len(phi.clauses)
    val = lambda v: assignment[v]
    x = {i: f"x{i}" for i in range(1, m + 1)}
    y = {k: f"y{k}" for k in range(1, n + 1)}
    domain = set(x.values()) | set(y.values()) | {"z"}
    concepts = {"A": {x[i] for i in x if val(i)} | set(y.values()) | {"z"}, "D": set()}
    roles: Dict[str, Set[Tuple[str, str]]] = {}
    for j in range(1, 5):
        pt = {(y[k], x[c[j - 1]]) for k, c in enumerate(phi.clauses, 1) if val(c[j - 1])}
        pt |= {(x[i], x[i]) for i in x if val(i)} | {("z", "z")}
        pf = {(y[k], x[c[j - 1]]) for k, c in enumerate(phi.clauses, 1) if not val(c[j - 1])}
        pf |= {(x[i], x[i]) for i in x if not val(i)}
        roles[f"P{j}_t"], roles[f"P{j}_f"], roles[f"P{j}"] = pt, pf, pt | pf
    roles["S_f"] = {("z", y[k]) for k, c in enumerate(phi.clauses, 1)
                    if not (val(c[0]) or val(c[1]) or not val(c[2]) or not val(c[3]))}
    roles["S"] = {("z", y[k]) for k in y}
    objects = {f"a{i}": x[i] for i in x}
    objects.update({f"c{k}": y[k] for k in y})
    objects["f"] = "z"
    return _interp(domain, concepts, roles, objects)


def countermodel_core_hn_2p2(phi: TwoPlusTwoCNF, assignment: Dict[int, bool]) -> Interpretation:
    m, n = phi.num_vars, len(phi.clauses)
    val = lambda v: assignment[v]
    x = {i: f"x{i}" for i in range(1, m + 1)}
    y = {k: f"y{k}" for k in range(1, n + 1)}
    u = {(k, j, s): f"u{k}_{j}_{s}" for k in y for j in range(1, 5) for s in (1, 2)}
    domain = set(x.values()) | set(y.values()) | set(u.values()) | {"z"}
    concepts = {"A": {x[i] for i in x if val(i)}, "D": set()}
    roles: Dict[str, Set[Tuple[str, str]]] = {}
    for j in range(1, 5):
        pt = {(y[k], x[c[j - 1]]) for k, c in enumerate(phi.clauses, 1) if val(c[j - 1])}
        pf = {(y[k], x[c[j - 1]]) for k, c in enumerate(phi.clauses, 1) if not val(c[j - 1])}
        roles[f"P{j}_t"], roles[f"P{j}_f"], roles[f"P{j}"] = pt, pf, pt | pf
        t1 = {(y[k], u[k, j, 1]) for k in y}
        t2 = {(y[k], u[k, j, 2]) for k, c in enumerate(phi.clauses, 1) if val(c[j - 1])}
        t2 |= {(y[k], u[k, j, 1]) for k, c in enumerate(phi.clauses, 1) if not val(c[j - 1])}
        t3 = {(y[k], u[k, j, 1]) for k, c in enumerate(phi.clauses, 1) if not val(c[j - 1])}
        roles[f"T{j}_1"], roles[f"T{j}_2"], roles[f"T{j}_3"] = t1, t2, t3
        roles[f"T{j}"] = t1 | t2
    roles["S_f"] = {("z", y[k]) for k, c in enumerate(phi.clauses, 1)
                    if not (val(c[0]) or val(c[1]) or not val(c[2]) or not val(c[3]))}
    roles["S"] = {("z", y[k]) for k in y}
    objects = {f"a{i}": x[i] for i in x}
    objects.update({f"c{k}": y[k] for k in y})
    objects["f"] = "z"
    return _interp(domain, concepts, roles, objects)


# ------------------------------------------------ Horn-CNF entailment (HF)

def _cycle_length(phi: HornCNF) -> int:
    return max(len(phi.rules), 1)


def v_name(k: int, j: int, i: int) -> str:
    return f"v{k}_{j}_{i}"


def gen_horncnf_hf(phi: HornCNF, expand: bool = False) -> Tuple[KnowledgeBase, List[Tuple[str, str]]]:
    """The KB entails A(v_{1,1,i}) iff phi entails a_i; targets listed per variable."""
    n = _cycle_length(phi)
    m = phi.num_vars
    roles = []
    for i in range(1, m + 1):
        ring = [v_name(k, j, i) for k in range(1, n + 1) for j in (1, 2, 3)]
        for a, b in zip(ring, ring[1:] + ring[:1]):
            roles.append((True, "S", a, b))
    for k, rule in enumerate(phi.rules, 1):
        for j, v in enumerate(rule, 1):
            roles.append((True, f"P{j}", v_name(k, j, v), f"c{k}"))
    concepts = [(True, "A", v_name(1, 1, v)) for v in phi.facts]
    s, st = Role("S"), Role("S_t")
    p = {j: Role(f"P{j}") for j in (1, 2, 3)}
    pt = {j: Role(f"P{j}_t") for j in (1, 2, 3)}
    cis = [
        (AtLeast(2, s), BOT),
        (Atom("A"), exists(st)),
        (exists(st.inv()), Atom("A")),
        (AtLeast(2, p[1]), BOT), (AtLeast(2, p[2]), BOT),
        (Atom("A"), exists(pt[1])), (Atom("A"), exists(pt[2])),
        (AtLeast(2, p[3].inv()), BOT),
        (And(exists(pt[1].inv()), exists(pt[2].inv())), exists(pt[3].inv())),
        (exists(pt[3]), Atom("A")),
    ]
    ris = [(st, s), (pt[1], p[1]), (pt[2], p[2]), (pt[3], p[3])]
    k = _kb(cis, ris, concepts, roles)
    targets = [("A", v_name(1, 1, i)) for i in range(1, m + 1)]
    return _maybe_expand(k, expand), targets


def countermodel_horncnf_hf(phi: HornCNF, assignment: Dict[int, bool], faithful: bool = False
                            ) -> Interpretation:
    """A model refuting A(v_{1,1,i}) for every false variable of a satisfying
    assignment.  With faithful=True only position-j objects get P_j edges, as
    in the printed construction; that version is a model only when no
    variable is true, because A ⊑ ∃P_{1,t} also applies at other positions."""
    n, m = _cycle_length(phi), phi.num_vars
    val = lambda i: assignment[i]
    x = {(k, j, i): f"x{k}_{j}_{i}" for k in range(1, n + 1) for j in (1, 2, 3) for i in range(1, m + 1)}
    y = {k: f"y{k}" for k in range(1, len(phi.rules) + 1)}
    rules = dict(enumerate(phi.rules, 1))
    domain = set(x.values()) | set(y.values())
    concepts = {"A": {x[k, j, i] for (k, j, i) in x if val(i)}}
    ring = {i: [x[k, j, i] for k in range(1, n + 1) for j in (1, 2, 3)] for i in range(1, m + 1)}
    s_i = {i: set(zip(r, r[1:] + r[:1])) for i, r in ring.items()}
    roles: Dict[str, Set[Tuple[str, str]]] = {
        "S": set().union(*s_i.values()) if s_i else set(),
        "S_t": set().union(*(s_i[i] for i in s_i if val(i))) if s_i else set(),
    }
    for jj in (1, 2):
        pj, ptj = set(), set()
        for (k, j, i), e in x.items():
            if faithful and j != jj:
                continue
            linked = j == jj and k in rules and rules[k][jj - 1] == i
            if linked:
                pj.add((e, y[k]))
                if val(i):
                    ptj.add((e, y[k]))
            else:
                z = f"z{k}_{j}_{i}" if faithful else f"z{k}_{j}_{i}_{jj}"
                domain.add(z)
                pj.add((e, z))
                ptj.add((e, z))
        roles[f"P{jj}"], roles[f"P{jj}_t"] = pj, ptj
    p3 = {(x[k, 3, i], y[k]) for k, r in rules.items() for i in [r[2]]}
    roles["P3"] = p3
    roles["P3_t"] = {(a, b) for a, b in p3 if val(int(a.rsplit("_", 1)[1]))}
    objects = {v_name(k, j, i): x[k, j, i] for (k, j, i) in x}
    objects.update({f"c{k}": y[k] for k in y})
    return _interp(domain, concepts, roles, objects)


# --------------------------------------- one-in-three without the UNA (N)

def gen_one_in_three(phi: PositiveCNF3) -> KnowledgeBase:
    """Satisfiable without the UNA iff phi has a one-in-three assignment."""
    for c in phi.clauses:
        if len(set(c)) != 3:
            raise ValueError(f"clause {c} must mention three distinct variables")
    n, m = len(phi.clauses), phi.num_vars
    roles, concepts = [], []
    for i in range(1, m + 1):
        ring = [f"a{i}_{k}" for k in range(1, n + 1)]
        roles += [(True, "S", a, b) for a, b in zip(ring, ring[1:] + ring[:1])]
    ring = [f"t{k}" for k in range(1, n + 1)]
    roles += [(True, "S", a, b) for a, b in zip(ring, ring[1:] + ring[:1])]
    for k, c in enumerate(phi.clauses, 1):
        roles.append((True, "P", f"c{k}", f"t{k}"))
        for j, v in enumerate(c, 1):
            roles.append((True, "P", f"c{k}", f"a{v}_{k}"))
            concepts.append((True, f"A{j}", f"a{v}_{k}"))
    a = [Atom(f"A{j}") for j in (1, 2, 3)]
    cis = [(a[0], Not(a[1])), (a[1], Not(a[2])), (a[2], Not(a[0])),
           (AtLeast(2, Role("S")), BOT), (AtLeast(4, Role("P")), BOT)]
    return _kb(cis, (), concepts, roles, una=False)


def countermodel_one_in_three(phi: PositiveCNF3, assignment: Dict[int, bool]) -> Interpretation:
    n, m = len(phi.clauses), phi.num_vars
    obj: Dict[str, str] = {}
    for k in range(1, n + 1):
        obj[f"c{k}"] = f"y{k}"
        obj[f"t{k}"] = f"z{k}"
        for i in range(1, m + 1):
            obj[f"a{i}_{k}"] = f"z{k}" if assignment[i] else f"x{i}_{k}"
    domain = set(obj.values())
    s = set()
    for i in range(1, m + 1):
        ring = [obj[f"a{i}_{k}"] for k in range(1, n + 1)]
        s |= set(zip(ring, ring[1:] + ring[:1]))
    ring = [obj[f"t{k}"] for k in range(1, n + 1)]
    s |= set(zip(ring, ring[1:] + ring[:1]))
    p = set()
    concepts: Dict[str, Set[str]] = {"A1": set(), "A2": set(), "A3": set()}
    for k, c in enumerate(phi.clauses, 1):
        p.add((obj[f"c{k}"], obj[f"t{k}"]))
        for j, v in enumerate(c, 1):
            p.add((obj[f"c{k}"], obj[f"a{v}_{k}"]))
            concepts[f"A{j}"].add(obj[f"a{v}_{k}"])
    return _interp(domain, concepts, {"S": s, "P": p}, obj)


# ------------------------------------ Horn-CNF without the UNA (functional)

def gen_horncnf_f_nouna(phi: HornCNF) -> KnowledgeBase:
    """All roles functional; without the UNA the KB entails T(t, a_j^1) iff
    phi entails a_j."""
    for r in phi.rules:
        if len(set(r)) != 3:
            raise ValueError(f"rule {r} must mention three distinct variables")
    n, m = _cycle_length(phi), phi.num_vars
    roles = []
    for i in range(1, m + 1):
        ring = [f"a{i}_{k}" for k in range(1, n + 1)]
        roles += [(True, "S", a, b) for a, b in zip(ring, ring[1:] + ring[:1])]
    for k, (a1, a2, a3) in enumerate(phi.rules, 1):
        roles += [(True, "P", f"a{a1}_{k}", f"f{k}"), (True, "P", f"a{a2}_{k}", f"g{k}"),
                  (True, "Q", f"g{k}", f"a{a3}_{k}"), (True, "Q", f"f{k}", f"a{a1}_{k}")]
    for v in phi.facts:
        roles.append((True, "T", "t", f"a{v}_1"))
    cis = [(AtLeast(2, Role(r)), BOT) for r in ("P", "Q", "S", "T")]
    return _kb(cis, (), (), roles, una=False)


def horn_f_target(j: int) -> Tuple[str, str, str]:
    return ("T", "t", f"a{j}_1")


def with_negated_target(k: KnowledgeBase, target: Tuple[str, ...]) -> KnowledgeBase:
    """k plus the negation of a concept (A, a) or role (P, a, b) assertion."""
    a = k.abox
    if len(target) == 2:
        extra_c = ((False, target[0], target[1]),)
        abox = ABox(a.concept_assertions + extra_c, a.role_assertions, a.equalities, a.inequalities)
    else:
        extra_r = ((False,) + tuple(target),)
        abox = ABox(a.concept_assertions, a.role_assertions + extra_r, a.equalities, a.inequalities)
    return KnowledgeBase(k.tbox, abox, k.una)


def countermodel_horncnf_f(phi: HornCNF, assignment: Dict[int, bool]) -> Interpretation:
    n, m = _cycle_length(phi), phi.num_vars
    obj: Dict[str, str] = {"t": "w"}
    for k in range(1, n + 1):
        for i in range(1, m + 1):
            obj[f"a{i}_{k}"] = f"z{k}" if assignment[i] else f"x{i}_{k}"
    for k, (a1, a2, a3) in enumerate(phi.rules, 1):
        obj[f"f{k}"] = f"u{k}"
        obj[f"g{k}"] = f"u{k}" if assignment[a1] and assignment[a2] else f"v{k}"
    s = set()
    for i in range(1, m + 1):
        ring = [obj[f"a{i}_{k}"] for k in range(1, n + 1)]
        s |= set(zip(ring, ring[1:] + ring[:1]))
    p, q = set(), set()
    for k, (a1, a2, a3) in enumerate(phi.rules, 1):
        p |= {(obj[f"a{a1}_{k}"], obj[f"f{k}"]), (obj[f"a{a2}_{k}"], obj[f"g{k}"])}
        q |= {(obj[f"g{k}"], obj[f"a{a3}_{k}"]), (obj[f"f{k}"], obj[f"a{a1}_{k}"])}
    t = {("w", "z1")} if phi.facts else set()
    domain = set(obj.values()) | {"z1"}
    return _interp(domain, {}, {"S": s, "P": p, "Q": q, "T": t}, obj)


FAMILIES = {
    "2p2": "krom with functionality, D(f) iff unsatisfiable",
    "core-hn-2p2": "core with counting, D(f) iff unsatisfiable",
    "horn-hf": "core with functionality, A(v_1_1_i) iff entailed",
    "one-in-three": "core with counting, no UNA, satisfiable iff one-in-three",
    "horn-f-nouna": "core with functionality, no UNA, T(t,a_j_1) iff entailed",
}


def generate(family: str, phi, expand: bool = False) -> KnowledgeBase:
    if family == "2p2":
        return gen_2p2cnf(phi, expand)[0]
    if family == "core-hn-2p2":
        return gen_core_hn_2p2(phi, expand)[0]
    if family == "horn-hf":
        return gen_horncnf_hf(phi, expand)[0]
    if family == "one-in-three":
        return gen_one_in_three(phi)
    if family == "horn-f-nouna":
        return gen_horncnf_f_nouna(phi)
    raise ValueError(f"unknown gadget family {family!r}")
