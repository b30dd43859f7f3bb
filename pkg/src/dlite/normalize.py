"""Reductions: qualified restrictions, role constraints, transitivity, service
reductions and the preprocessing needed when the unique name assumption is dropped."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

from .closure import RoleOrder, close_atoms, extended_abox_closure, role_order, transitive_abox_closure
from .errors import BudgetExceeded, FragmentUnsupported
from .model import (ABox, And, AtLeast, AtLeastQ, Atom, Asym, Concept, Dis, Irr, KnowledgeBase, Not, Ref, Role,
                    Sym, TBox, Tra, TOP, BOTTOM, axiom_occurrences, conjuncts, exists, inclusion_clauses)


class FreshNames:
    """Generates names that do not clash with anything in the given KB."""

    def __init__(self, used: Iterable[str]):
        self.used = set(used)

    def make(self, base: str) -> str:
        name = base
        i = 1
        while name in self.used:
            i += 1
            name = f"{base}{i}"
        self.used.add(name)
        return name

    @classmethod
    def for_kb(cls, k: KnowledgeBase) -> "FreshNames":
        return cls(k.role_names() | k.concept_names() | set(k.abox.objects()))


# ------------------------------------------------------ qualified numbers

def _replace_qualified(c: Concept, table: Dict[Tuple[Role, Concept], Role], fresh: FreshNames,
                       added: List[Tuple[Role, Concept]], positive: bool) -> Concept:
    if isinstance(c, AtLeastQ):
        if not positive:
            raise FragmentUnsupported(f"qualified restriction {c} occurs negatively")
        key = (c.role, c.filler)
        if key not in table:
            name = fresh.make(f"_{c.role.name}_q")
            table[key] = Role(name, c.role.inverted)
            added.append(key)
        return AtLeast(c.q, table[key])
    if isinstance(c, Not):
        return Not(_replace_qualified(c.arg, table, fresh, added, not positive))
    if isinstance(c, And):
        return And(_replace_qualified(c.left, table, fresh, added, positive),
                   _replace_qualified(c.right, table, fresh, added, positive))
    return c


def eliminate_qualified(t: TBox, fresh: Optional[FreshNames] = None,
                        rename_map: Optional[Dict[str, str]] = None) -> TBox:
    fresh = fresh or FreshNames(t.role_names() | t.concept_names())
    table: Dict[Tuple[Role, Concept], Role] = {}
    inclusions = list(t.concept_inclusions)
    role_incl = list(t.role_inclusions)
    todo = list(range(len(inclusions)))
    while todo:
        added: List[Tuple[Role, Concept]] = []
        for idx in todo:
            lhs, rhs = inclusions[idx]
            inclusions[idx] = (_replace_qualified(lhs, table, fresh, added, False),
                               _replace_qualified(rhs, table, fresh, added, True))
        todo = []
        for key in added:
            r, filler = key
            rc = table[key]
            inclusions.append((exists(rc.inv()), filler))
            todo.append(len(inclusions) - 1)
            sub = Role(rc.name)
            sup = r if not rc.inverted else r.inv()
            role_incl.append((sub, sup))
            if rename_map is not None:
                rename_map[rc.name] = f"{r} restricted to {filler}"
    return TBox(tuple(inclusions), tuple(role_incl), t.role_constraints)


# ------------------------------------------------------- (HN) to (HN)-

@dataclass(frozen=True)
class Cond44:
    kind: str  # "dis" or "irr"
    roles: Tuple[Role, ...]

    def __str__(self) -> str:
        if self.kind == "dis":
            a, b = self.roles
            return f"no {a}(x,y) and {b}(x,y) in the closed ABox"
        return f"no {self.roles[0]}(x,x) in the closed ABox"


@dataclass
class HNminusKB:
    kb: KnowledgeBase
    source: KnowledgeBase
    cond44_checks: List[Cond44]
    rename_map: Dict[str, str]
    identity_role: Optional[str] = None
    split_roles: Dict[str, str] = field(default_factory=dict)

    def cond44_holds(self) -> bool:
        return not cond44_failures(self)


def cond44_failures(hk: HNminusKB) -> List[str]:
    order = role_order(hk.source.tbox, hk.source.abox.role_names())
    atoms = extended_abox_closure(hk.source.tbox, hk.source.abox, order)
    out = []
    for check in hk.cond44_checks:
        if check.kind == "dis":
            r1, r2 = check.roles
            left = _pairs(atoms, r1)
            right = _pairs(atoms, r2)
            clash = left & right
            if clash:
                s, o = sorted(clash)[0]
                out.append(f"{r1}({s},{o}) and {r2}({s},{o}) violate dis({r1}, {r2})")
        else:
            r = check.roles[0]
            loops = sorted(s for s, o in _pairs(atoms, r) if s == o)
            if loops:
                out.append(f"{r}({loops[0]},{loops[0]}) violates irr({r.name})")
    return out


def _pairs(atoms, r: Role) -> Set[Tuple[str, str]]:
    if r.inverted:
        return {(o, s) for p, s, o in atoms if p == r.name}
    return {(s, o) for p, s, o in atoms if p == r.name}


def _split_basic(c: Concept, p: str, sp: str) -> Concept:
    if isinstance(c, AtLeast) and c.role.name == p:
        if c.q == 1:
            return TOP
        return AtLeast(c.q - 1, Role(sp, c.role.inverted))
    if isinstance(c, Not):
        return Not(_split_basic(c.arg, p, sp))
    if isinstance(c, And):
        return And(_split_basic(c.left, p, sp), _split_basic(c.right, p, sp))
    return c


def normalize_to_hn_minus(k: KnowledgeBase) -> HNminusKB:
    fresh = FreshNames.for_kb(k)
    rename: Dict[str, str] = {}
    t = k.tbox
    role_incl = list(t.role_inclusions)
    dis: List[Dis] = []
    refl: List[str] = []
    irr: List[str] = []
    for c in t.role_constraints:
        if isinstance(c, Sym):
            role_incl.append((Role(c.name, True), Role(c.name)))
        elif isinstance(c, Asym):
            dis.append(Dis(Role(c.name), Role(c.name, True)))
        elif isinstance(c, Dis):
            dis.append(c)
        elif isinstance(c, Ref):
            if c.name not in refl:
                refl.append(c.name)
        elif isinstance(c, Irr):
            if c.name not in irr:
                irr.append(c.name)
        elif isinstance(c, Tra):
            raise FragmentUnsupported("transitivity must be eliminated before normalization")
    t0 = eliminate_qualified(TBox(t.concept_inclusions, tuple(role_incl), ()), fresh, rename)
    source = KnowledgeBase(TBox(t0.concept_inclusions, t0.role_inclusions,
                                tuple(dis) + tuple(Irr(p) for p in irr)), k.abox, k.una)
    checks = [Cond44("dis", (d.first, d.second)) for d in dis]
    checks += [Cond44("irr", (Role(p),)) for p in irr]

    inclusions = list(t0.concept_inclusions)
    role_incl = list(t0.role_inclusions)
    abox = k.abox
    identity = None
    split: Dict[str, str] = {}
    if refl or irr:
        identity = fresh.make("_Id")
        rename[identity] = "identity"
        order0 = role_order(t0, k.abox.role_names())
        for p in refl:
            sp = fresh.make(f"_{p}_irr")
            split[p] = sp
            rename[sp] = f"{p} without its reflexive part"
            inclusions = [(_split_basic(l, p, sp), _split_basic(r, p, sp)) for l, r in inclusions]
        new_roles = []
        for pos, name, s, o in abox.role_assertions:
            if pos and s != o:
                target = None
                for p, sp in split.items():
                    if order0.leq(Role(name), Role(p)) and order0.leq(Role(p), Role(name)):
                        target = (sp, s, o)
                        break
                    if order0.leq(Role(name), Role(p, True)) and order0.leq(Role(p, True), Role(name)):
                        target = (sp, o, s)
                        break
                if target is not None:
                    new_roles.append((True, target[0], target[1], target[2]))
                    continue
            new_roles.append((pos, name, s, o))
        new_roles += [(True, identity, a, a) for a in abox.objects()]
        abox = ABox(abox.concept_assertions, tuple(new_roles), abox.equalities, abox.inequalities)
        for p, sp in split.items():
            role_incl.append((Role(sp), Role(p)))
        inclusions.append((TOP, exists(Role(identity))))
        role_incl.append((Role(identity, True), Role(identity)))
        for p in refl:
            role_incl.append((Role(identity), Role(p)))
    t1 = TBox(tuple(inclusions), tuple(role_incl), ())
    order1 = role_order(t1, abox.role_names())
    pairs = [(d.first, d.second) for d in dis]
    pairs += [(Role(p), Role(identity)) for p in irr]
    empty: List[Role] = []
    for r1, r2 in pairs:
        for a, b in ((r1, r2), (r1.inv(), r2.inv())):
            for common in sorted(order1.sub_roles(a) & order1.sub_roles(b)):
                for r in (common, common.inv()):
                    if r not in empty:
                        empty.append(r)
    inclusions += [(exists(r), BOTTOM) for r in empty]
    final = KnowledgeBase(TBox(tuple(inclusions), tuple(role_incl), ()), abox, k.una)
    return HNminusKB(final, source, checks, rename, identity, split)


# --------------------------------------------------------- transitivity

def eliminate_transitivity(k: KnowledgeBase) -> KnowledgeBase:
    t = k.tbox
    transitive = {c.name for c in t.role_constraints if isinstance(c, Tra)}
    order = role_order(t, k.abox.role_names())
    if transitive:
        for lhs, rhs in t.concept_inclusions:
            for c, _ in axiom_occurrences(lhs, rhs):
                if isinstance(c, (AtLeast, AtLeastQ)) and c.q >= 2:
                    if any(s.name in transitive for s in order.sub_roles(c.role)):
                        raise FragmentUnsupported(f"{c} counts a non-simple role")
    positives = {(p, s, o) for pos, p, s, o in k.abox.role_assertions if pos}
    closed = close_atoms(order, transitive_abox_closure(t, close_atoms(order, positives)))
    negatives = [(pos, p, s, o) for pos, p, s, o in k.abox.role_assertions if not pos]
    roles = tuple((True, p, s, o) for p, s, o in sorted(closed)) + tuple(negatives)
    abox = ABox(k.abox.concept_assertions, roles, k.abox.equalities, k.abox.inequalities)
    tbox = TBox(t.concept_inclusions, t.role_inclusions,
                tuple(c for c in t.role_constraints if not isinstance(c, Tra)))
    return KnowledgeBase(tbox, abox, k.una)


# ------------------------------------------------------------ no UNA

def name_index(name: str) -> tuple:
    """Natural ordering key, so that a2 precedes a10 and a1 is the minimal index."""
    return tuple((0, int(part)) if part.isdigit() else (1, part) for part in re.findall(r"\d+|\D+", name))


class UnionFind:
    """Union-find whose class representative is the member with the least name_index."""

    def __init__(self, items: Iterable[str]):
        self.parent: Dict[str, str] = {}
        for x in items:
            self.add(x)

    def add(self, x: str) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if name_index(rb) < name_index(ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def copy(self) -> "UnionFind":
        out = UnionFind(())
        out.parent = dict(self.parent)
        return out

    def classes(self) -> Dict[str, List[str]]:
        out: Dict[str, List[str]] = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return out


@dataclass
class MergePlan:
    uf: UnionFind
    canonical: Dict[str, str]


def rename_abox(a: ABox, m: Dict[str, str], keep_equalities: bool = False) -> ABox:
    def f(x):
        return m.get(x, x)
    ca = _dedup((pos, c, f(x)) for pos, c, x in a.concept_assertions)
    ra = _dedup((pos, p, f(s), f(o)) for pos, p, s, o in a.role_assertions)
    eq = _dedup((f(x), f(y)) for x, y in a.equalities) if keep_equalities else ()
    neq = _dedup((f(x), f(y)) for x, y in a.inequalities)
    return ABox(ca, ra, eq, neq)


def _dedup(items) -> tuple:
    seen = {}
    for x in items:
        seen.setdefault(x)
    return tuple(seen)


def merge_equalities(k: KnowledgeBase) -> Tuple[KnowledgeBase, MergePlan]:
    uf = UnionFind(k.abox.objects())
    for a, b in k.abox.equalities:
        uf.union(a, b)
    canonical = {x: uf.find(x) for x in uf.parent}
    abox = rename_abox(k.abox, canonical)
    return KnowledgeBase(k.tbox, abox, k.una), MergePlan(uf, canonical)


def functional_roles(t: TBox) -> Set[Role]:
    """Roles R with ≥2R ⊑ ⊥ (in any syntactic form whose only clause is ¬≥2R)."""
    out: Set[Role] = set()
    for lhs, rhs in t.concept_inclusions:
        cls = inclusion_clauses(lhs, rhs)
        if not cls:
            continue
        for cl in cls:
            if len(cl) == 1:
                (pos, atom), = tuple(cl)
                if not pos and isinstance(atom, AtLeast) and atom.q == 2:
                    out.add(atom.role)
    return out


def at_most_roles(t: TBox) -> Dict[Role, int]:
    """Roles with a negative occurrence of ≥qR, q ≥ 2, mapped to the least such q."""
    out: Dict[Role, int] = {}
    for lhs, rhs in t.concept_inclusions:
        for c, positive in axiom_occurrences(lhs, rhs):
            if isinstance(c, AtLeast) and c.q >= 2 and not positive:
                out[c.role] = min(out.get(c.role, c.q), c.q)
    return out


def _closed_atoms(k: KnowledgeBase, order: RoleOrder) -> Set[Tuple[str, str, str]]:
    positives = {(p, s, o) for pos, p, s, o in k.abox.role_assertions if pos}
    atoms = close_atoms(order, positives)
    if any(isinstance(c, Tra) for c in k.tbox.role_constraints):
        atoms = close_atoms(order, transitive_abox_closure(k.tbox, atoms))
    return atoms


def functional_merge(k: KnowledgeBase) -> KnowledgeBase:
    k, plan = merge_equalities(k)
    uf = plan.uf
    order = role_order(k.tbox, k.abox.role_names())
    functional = functional_roles(k.tbox)
    current = k
    while True:
        atoms = _closed_atoms(current, order)
        changed = False
        for r in sorted(functional):
            succ: Dict[str, List[str]] = {}
            for s, o in sorted(_pairs(atoms, r)):
                succ.setdefault(s, []).append(o)
            for s, objs in succ.items():
                for o in objs[1:]:
                    changed |= uf.union(objs[0], o)
        if not changed:
            break
        canonical = {x: uf.find(x) for x in uf.parent}
        current = KnowledgeBase(current.tbox, rename_abox(current.abox, canonical), current.una)
    bad = [x for x, y in current.abox.inequalities if x == y]
    concepts = list(current.abox.concept_assertions)
    if bad:
        fresh = FreshNames.for_kb(current).make("_Clash")
        concepts += [(True, fresh, bad[0]), (False, fresh, bad[0])]
    abox = ABox(tuple(concepts), current.abox.role_assertions, (), ())
    return KnowledgeBase(current.tbox, abox, True)


@dataclass
class IdentificationResult:
    satisfiable: bool
    partitions_tried: int
    witness: Optional[Dict[str, str]] = None


def enumerate_identifications(k: KnowledgeBase, sat: Callable[[KnowledgeBase], bool],
                              cap: int = 100000) -> IdentificationResult:
    """Search for an identification of object names whose quotient is
    satisfiable under the UNA.  Only names that are successors of a common
    element along a role with an at-most restriction are ever identified;
    functional roles force their identifications outright."""
    k, plan = merge_equalities(k)
    if any(x == y for x, y in k.abox.inequalities):
        return IdentificationResult(False, 0)
    order = role_order(k.tbox, k.abox.role_names())
    bounds = at_most_roles(k.tbox)
    functional = {r for r, q in bounds.items() if q == 2}
    counted = [r for r in sorted(bounds) if bounds[r] > 2]
    clash_pairs = _binary_clashes(k.tbox)
    tried = 0

    def quotient(uf: UnionFind) -> KnowledgeBase:
        canonical = {x: uf.find(x) for x in uf.parent}
        abox = rename_abox(k.abox, canonical)
        return KnowledgeBase(k.tbox, ABox(abox.concept_assertions, abox.role_assertions, (), ()), True)

    def propagate(uf: UnionFind, distinct: Set[Tuple[str, str]]) -> Optional[KnowledgeBase]:
        while True:
            q = quotient(uf)
            atoms = _closed_atoms(q, order)
            changed = False
            for r in sorted(functional):
                succ: Dict[str, List[str]] = {}
                for s, o in sorted(_pairs(atoms, r)):
                    succ.setdefault(s, []).append(o)
                for objs in succ.values():
                    for o in objs[1:]:
                        a, b = uf.find(objs[0]), uf.find(o)
                        if a != b:
                            if _is_distinct(uf, distinct, a, b):
                                return None
                            uf.union(a, b)
                            changed = True
            if not changed:
                if _has_clash(q, clash_pairs):
                    return None
                return q

    def candidates(q: KnowledgeBase, uf, distinct) -> Tuple[Optional[Tuple[str, str]], bool]:
        atoms = _closed_atoms(q, order)
        for r in counted:
            succ: Dict[str, List[str]] = {}
            for s, o in sorted(_pairs(atoms, r)):
                succ.setdefault(s, []).append(o)
            for objs in succ.values():
                if len(objs) < bounds[r]:
                    continue
                if _independent(objs, bounds[r], lambda a, b: _is_distinct(uf, distinct, a, b)
                                or _merge_clashes(q, a, b, clash_pairs)):
                    return None, True
                for i in range(len(objs)):
                    for j in range(i + 1, len(objs)):
                        a, b = objs[i], objs[j]
                        if not _is_distinct(uf, distinct, a, b) and not _merge_clashes(q, a, b, clash_pairs):
                            return (a, b), False
        return None, False

    def search(uf: UnionFind, distinct: Set[Tuple[str, str]]) -> Optional[Dict[str, str]]:
        nonlocal tried
        q = propagate(uf, distinct)
        if q is None:
            return None
        pair, dead = candidates(q, uf, distinct)
        if dead:
            return None
        if pair is None:
            tried += 1
            if tried > cap:
                raise BudgetExceeded(f"identification search passed {cap} candidates")
            if sat(q):
                return {x: uf.find(x) for x in uf.parent}
            return None
        a, b = pair
        found = search(uf.copy(), distinct | {tuple(sorted((a, b)))})
        if found is not None:
            return found
        merged = uf.copy()
        merged.union(a, b)
        return search(merged, set(distinct))

    distinct = {tuple(sorted((x, y))) for x, y in k.abox.inequalities}
    witness = search(plan.uf.copy(), distinct)
    return IdentificationResult(witness is not None, tried, witness)


def _is_distinct(uf: UnionFind, distinct: Set[Tuple[str, str]], a: str, b: str) -> bool:
    ra, rb = uf.find(a), uf.find(b)
    if ra == rb:
        return False
    for x, y in distinct:
        fx, fy = uf.find(x), uf.find(y)
        if {fx, fy} == {ra, rb}:
            return True
    return False


def _binary_clashes(t: TBox) -> Set[Tuple[Tuple[bool, str], Tuple[bool, str]]]:
    """Pairs of signed concept names that no element may carry together."""
    out = set()
    for lhs, rhs in t.concept_inclusions:
        cls = inclusion_clauses(lhs, rhs)
        for cl in cls or ():
            lits = [(pos, a.name) for pos, a in cl if isinstance(a, Atom)]
            if len(lits) == len(cl) and len(cl) <= 2:
                # clause l1 ∨ l2 forbids the complements together
                comp = tuple(sorted((not pos, name) for pos, name in lits))
                if len(comp) == 1:
                    comp = (comp[0], comp[0])
                out.add(comp)
    return out


def _labels(k: KnowledgeBase) -> Dict[str, Set[Tuple[bool, str]]]:
    out: Dict[str, Set[Tuple[bool, str]]] = {}
    for pos, c, x in k.abox.concept_assertions:
        out.setdefault(x, set()).add((pos, c))
    return out


def _label_clash(labels: Set[Tuple[bool, str]], clash_pairs) -> bool:
    for pos, c in labels:
        if (not pos, c) in labels:
            return True
    for a, b in clash_pairs:
        if a in labels and b in labels:
            return True
    return False


def _has_clash(k: KnowledgeBase, clash_pairs) -> bool:
    if any(_label_clash(l, clash_pairs) for l in _labels(k).values()):
        return True
    positives = {(p, s, o) for pos, p, s, o in k.abox.role_assertions if pos}
    return any((p, s, o) in positives for pos, p, s, o in k.abox.role_assertions if not pos)


def _merge_clashes(k: KnowledgeBase, a: str, b: str, clash_pairs) -> bool:
    labels = _labels(k)
    return _label_clash(labels.get(a, set()) | labels.get(b, set()), clash_pairs)


def _independent(objs: List[str], size: int, apart: Callable[[str, str], bool]) -> bool:
    """Is there a set of `size` objects that are pairwise forced apart?"""
    def extend(chosen: List[str], start: int) -> bool:
        if len(chosen) == size:
            return True
        for i in range(start, len(objs)):
            if all(apart(objs[i], c) for c in chosen):
                if extend(chosen + [objs[i]], i + 1):
                    return True
        return False
    return extend([], 0)


# ----------------------------------------------------- service reductions

def _fresh_concept_and_object(k: KnowledgeBase) -> Tuple[FreshNames, str, str]:
    fresh = FreshNames.for_kb(k)
    return fresh, fresh.make("_Probe"), fresh.make("_probe")


def reduce_concept_sat(t: TBox, c: Concept) -> KnowledgeBase:
    k = KnowledgeBase(t)
    _, a_name, obj = _fresh_concept_and_object(k)
    tbox = TBox(t.concept_inclusions + ((Atom(a_name), c),), t.role_inclusions, t.role_constraints)
    return KnowledgeBase(tbox, ABox(((True, a_name, obj),)))


def reduce_subsumption(t: TBox, c1: Concept, c2: Concept) -> List[KnowledgeBase]:
    """T ⊨ c1 ⊑ c2 iff every returned KB is unsatisfiable.  A conjunctive c2
    yields one KB per conjunct so that each stays inside the TBox fragment."""
    k = KnowledgeBase(t)
    fresh, a_name, obj = _fresh_concept_and_object(k)
    out = []
    for part in conjuncts(c2):
        extra = ((Atom(a_name), c1), (Atom(a_name), Not(part)))
        tbox = TBox(t.concept_inclusions + extra, t.role_inclusions, t.role_constraints)
        out.append(KnowledgeBase(tbox, ABox(((True, a_name, obj),))))
    return out


def reduce_instance_check(k: KnowledgeBase, a: str, c: Concept) -> List[KnowledgeBase]:
    """K ⊨ c(a) iff every returned KB is unsatisfiable."""
    fresh, a_name, _ = _fresh_concept_and_object(k)
    out = []
    for part in conjuncts(c):
        tbox = TBox(k.tbox.concept_inclusions + ((Atom(a_name), Not(part)),),
                    k.tbox.role_inclusions, k.tbox.role_constraints)
        abox = ABox(k.abox.concept_assertions + ((True, a_name, a),), k.abox.role_assertions,
                    k.abox.equalities, k.abox.inequalities)
        out.append(KnowledgeBase(tbox, abox, k.una))
    return out
