"""Canonical models: least Herbrand models of the grounding, unraveling into
forests of trees, and a certain-answer oracle over the lazily built forest."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from .closure import extended_abox_closure, normalize_atom, number_sets, role_order
from .errors import FragmentUnsupported, InconsistentKB
from .fol import ConceptPred, Constant, Dr, EqPred, Obj
from .model import Interpretation, KnowledgeBase, Role
from .normalize import HNminusKB, merge_equalities
from .sat import ClauseSet, horn_sat
from .syntax import Query, QAtom, prenex, to_dnf

GroundAtom = Tuple[object, Constant]


def minimal_model(cs: ClauseSet) -> Set[GroundAtom]:
    res = horn_sat(cs)
    if not res.satisfiable:
        raise InconsistentKB("the grounded sentence has no model")
    return {cs.atoms[i - 1] for i in res.model}


@dataclass
class RankTable:
    numbers: Dict[Role, List[int]]
    atoms: Set[GroundAtom]

    def required(self, r: Role, c: Constant) -> int:
        best = 0
        for q in self.numbers.get(r, [1]):
            if (EqPred(q, r), c) in self.atoms:
                best = max(best, q)
        return best


class Forest:
    """The untangled forest generated from a model of the grounding.  Nodes
    are created on demand, so the same object serves eager unraveling and
    the lazy search of the answer oracle."""

    def __init__(self, hk: HNminusKB, atoms: Set[GroundAtom]):
        self.hk = hk
        kb = hk.kb
        self.kb = kb
        self.order = role_order(kb.tbox, kb.abox.role_names())
        self.ranks = RankTable(number_sets(kb.tbox, self.order), atoms)
        self.atoms = atoms
        self.identity = Role(hk.identity_role) if hk.identity_role else None
        self.cure_roles = [cls[0] for cls in self.order.classes()
                           if self.identity is None or self.identity not in cls]
        self.cure_roles = sorted(self.order.rep(r) for r in self.cure_roles)
        self.objects = kb.abox.objects()
        self.named_atoms = extended_abox_closure(kb.tbox, kb.abox, self.order)
        self.named_succ: Dict[Tuple[str, Role], List[str]] = {}
        for p, s, o in sorted(self.named_atoms):
            for r, x, y in ((Role(p), s, o), (Role(p, True), o, s)):
                lst = self.named_succ.setdefault((x, r.name if not r.inverted else r.name + "-"), [])
                if y not in lst:
                    lst.append(y)
        self.cp: Dict[str, Constant] = {a: Obj(a) for a in self.objects}
        self.depth: Dict[str, int] = {a: 0 for a in self.objects}
        self.parent: Dict[str, Optional[str]] = {a: None for a in self.objects}
        self.label: Dict[str, Optional[Role]] = {a: None for a in self.objects}
        self.ghost: Dict[str, Optional[Role]] = {a: None for a in self.objects}
        self._children: Dict[str, List[str]] = {}
        self.types: Dict[Constant, FrozenSet[str]] = {}

    # -- structure

    def type_of(self, node: str) -> FrozenSet[str]:
        c = self.cp[node]
        t = self.types.get(c)
        if t is None:
            t = frozenset(p.name for p, k in self.atoms if k == c and isinstance(p, ConceptPred))
            self.types[c] = t
        return t

    def _key(self, r: Role) -> str:
        return r.name + ("-" if r.inverted else "")

    def _base_rank(self, node: str, r: Role) -> int:
        """R-successors that exist independently of the node's own children."""
        if self.parent[node] is None and self.ghost[node] is None:
            return len(self.named_succ.get((node, self._key(r)), ()))
        count = 0
        up = self.label[node].inv() if self.parent[node] is not None else self.ghost[node]
        if self.order.leq(up, r):
            count += 1
        if self.identity is not None and self.order.leq(self.identity, r):
            count += 1
        return count

    def children(self, node: str) -> List[str]:
        kids = self._children.get(node)
        if kids is not None:
            return kids
        kids = []
        c = self.cp[node]
        for r in self.cure_roles:
            need = self.ranks.required(r, c) - self._base_rank(node, r)
            for i in range(1, need + 1):
                child = f"{node}/{r}.{i}"
                self.cp[child] = Dr(r.inv())
                self.depth[child] = self.depth[node] + 1
                self.parent[child] = node
                self.label[child] = r
                self.ghost[child] = None
                kids.append(child)
        self._children[node] = kids
        return kids

    def virtual_root(self, c: Dr) -> str:
        """A parentless stand-in for every node with copy c; its missing
        parent still counts towards the ranks, so its subtree is isomorphic
        to the subtree of any such node."""
        node = f"*{c}"
        if node not in self.cp:
            self.cp[node] = c
            self.depth[node] = 0
            self.parent[node] = None
            self.label[node] = None
            self.ghost[node] = c.role
        return node

    def reachable_copies(self) -> List[Dr]:
        seen: Set[Dr] = set()
        todo: List[str] = list(self.objects)
        while todo:
            node = todo.pop()
            for kid in self.children(node):
                c = self.cp[kid]
                if c not in seen:
                    seen.add(c)
                    todo.append(self.virtual_root(c))
        return sorted(seen)

    def neighbours(self, node: str, r: Role) -> List[str]:
        out: List[str] = []
        if self.parent[node] is None and self.ghost[node] is None:
            out.extend(self.named_succ.get((node, self._key(r)), ()))
        else:
            p = self.parent[node]
            if p is not None and self.order.leq(self.label[node].inv(), r):
                out.append(p)
            if self.identity is not None and self.order.leq(self.identity, r):
                out.append(node)
        for kid in self.children(node):
            if self.order.leq(self.label[kid], r):
                out.append(kid)
        return out

    def has_role_pair(self, x: str, y: str, r: Role) -> bool:
        return y in self.neighbours(x, r)


@dataclass
class UntangledModel:
    interpretation: Interpretation
    cp: Dict[str, Constant]
    depth: Dict[str, int]
    parent: Dict[str, Optional[str]]
    label: Dict[str, Optional[Role]]
    ranks: RankTable
    forest: Forest = field(repr=False, default=None)

    def fresh_elements(self) -> List[str]:
        return [d for d in sorted(self.interpretation.domain) if self.parent[d] is not None]

    def tree_children(self, node: str) -> List[str]:
        return [d for d, p in self.parent.items() if p == node and d in self.interpretation.domain]


def unravel(atoms: Set[GroundAtom], hk: HNminusKB, depth: int) -> UntangledModel:
    f = Forest(hk, atoms)
    nodes = list(f.objects)
    frontier = list(f.objects)
    for _ in range(depth):
        nxt = []
        for node in frontier:
            nxt.extend(f.children(node))
        nodes.extend(nxt)
        frontier = nxt
    domain = set(nodes)
    roles: Dict[str, Set[Tuple[str, str]]] = {p: set() for p in sorted(f.kb.role_names())}
    for p, s, o in f.named_atoms:
        roles.setdefault(p, set()).add((s, o))
    for node in nodes:
        par = f.parent[node]
        if par is not None:
            for sup in f.order.super_roles(f.label[node]):
                name, s, o = normalize_atom(sup, par, node)
                roles.setdefault(name, set()).add((s, o))
            if f.identity is not None:
                for sup in f.order.super_roles(f.identity):
                    name, s, o = normalize_atom(sup, node, node)
                    roles.setdefault(name, set()).add((s, o))
    concepts: Dict[str, Set[str]] = {c: set() for c in sorted(f.kb.concept_names())}
    for node in nodes:
        for c in f.type_of(node):
            concepts.setdefault(c, set()).add(node)
    interp = Interpretation(domain, concepts, roles, {a: a for a in f.objects})
    return UntangledModel(interp, {n: f.cp[n] for n in nodes}, {n: f.depth[n] for n in nodes},
                          {n: f.parent[n] for n in nodes}, {n: f.label[n] for n in nodes}, f.ranks, f)


def unravel_kb(k: KnowledgeBase, depth: int = 3) -> UntangledModel:
    """Unravel the least model (Horn) or the solver's model (otherwise)."""
    from .sat import solve
    res = solve(k)
    if not res.satisfiable:
        raise InconsistentKB(res.reason or f"solver verdict {res.verdict}")
    atoms = {res.clauses.atoms[i - 1] for i in res.model}
    return unravel(atoms, res.normalized, depth)


# ------------------------------------------------------------ the oracle

@dataclass
class PreparedKB:
    forest: Forest
    expand: Dict[str, List[str]]  # representative -> original names


def prepare_horn(k: KnowledgeBase) -> PreparedKB:
    from .model import classify
    from .sat import solve
    report = classify(k)
    if report.shape not in ("core", "horn"):
        raise FragmentUnsupported(f"certain answers need a Horn TBox, got {report.shape}")
    if report.has_transitivity:
        raise FragmentUnsupported("certain answers are not first-order for transitive roles")
    if not report.admissible:
        raise FragmentUnsupported("; ".join(map(str, report.a123_violations)))
    expand: Dict[str, List[str]] = {}
    if not k.una:
        if report.numbers != "none":
            raise FragmentUnsupported("without the UNA only KBs without number restrictions are answered")
        merged, plan = merge_equalities(k)
        for x, rep in plan.canonical.items():
            expand.setdefault(rep, []).append(x)
        k = KnowledgeBase(merged.tbox, merged.abox, True)
    res = solve(k)
    if res.verdict != "sat":
        if res.verdict == "unsat":
            raise InconsistentKB(res.reason or "the KB is inconsistent")
        raise FragmentUnsupported(res.reason)
    atoms = {res.clauses.atoms[i - 1] for i in res.model}
    forest = Forest(res.normalized, atoms)
    for a in forest.objects:
        expand.setdefault(a, [a])
    return PreparedKB(forest, expand)


def _components(atoms: List[QAtom]) -> List[Tuple[List[str], List[QAtom]]]:
    parent: Dict[str, str] = {}

    def find(v):
        while parent[v] != v:
            v = parent[v]
        return v

    for a in atoms:
        for v in a.args:
            parent.setdefault(v, v)
        if len(a.args) == 2:
            x, y = find(a.args[0]), find(a.args[1])
            if x != y:
                parent[y] = x
    groups: Dict[str, List[str]] = {}
    for v in parent:
        groups.setdefault(find(v), []).append(v)
    out = []
    for root, vs in groups.items():
        vs_set = set(vs)
        out.append((vs, [a for a in atoms if set(a.args) <= vs_set]))
    return out


def _role_of(pred: str) -> Role:
    return Role(pred)


def _match_component(forest: Forest, vars_: List[str], atoms: List[QAtom], head: Set[str],
                     virtual: List[str]) -> Set[Tuple[Tuple[str, str], ...]]:
    """All assignments of the component's distinguished variables (to ABox
    objects) that extend to a match in the forest."""
    dist = sorted(v for v in vars_ if v in head)
    found: Set[Tuple[Tuple[str, str], ...]] = set()
    objects = forest.objects

    def consistent(asg: Dict[str, str]) -> bool:
        for a in atoms:
            if not all(v in asg for v in a.args):
                continue
            if len(a.args) == 1:
                if a.pred not in forest.type_of(asg[a.args[0]]):
                    return False
            else:
                if not forest.has_role_pair(asg[a.args[0]], asg[a.args[1]], _role_of(a.pred)):
                    return False
        return True

    def extend(asg: Dict[str, str]) -> None:
        if len(asg) == len(vars_):
            key = tuple((v, asg[v]) for v in dist)
            found.add(key)
            return
        if dist and all(v in asg for v in dist):
            key = tuple((v, asg[v]) for v in dist)
            if key in found:
                return
        for a in atoms:
            if len(a.args) != 2:
                continue
            x, y = a.args
            r = _role_of(a.pred)
            if x in asg and y not in asg:
                cands = forest.neighbours(asg[x], r)
                var = y
            elif y in asg and x not in asg:
                cands = forest.neighbours(asg[y], r.inv())
                var = x
            else:
                continue
            for c in cands:
                if var in head and forest.parent[c] is None and forest.ghost[c] is None:
                    pass
                elif var in head:
                    continue
                asg[var] = c
                if consistent(asg):
                    extend(asg)
                del asg[var]
            return

    for anchor in vars_:
        pool = list(objects) if anchor in head else list(objects) + virtual
        for node in pool:
            asg = {anchor: node}
            if consistent(asg):
                extend(asg)
    return found


def oracle_answers(prep: PreparedKB, q: Query) -> Set[Tuple[str, ...]]:
    forest = prep.forest
    bound, matrix = prenex(q)
    head = list(q.head)
    virtual = [forest.virtual_root(c) for c in forest.reachable_copies()]
    answers: Set[Tuple[str, ...]] = set()
    for cq in to_dnf(matrix):
        comps = _components(cq)
        partial: List[List[Dict[str, str]]] = []
        dead = False
        for vars_, atoms in comps:
            found = _match_component(forest, vars_, atoms, set(head), virtual)
            if not found:
                dead = True
                break
            partial.append([dict(t) for t in found])
        if dead:
            continue
        for combo in product(*partial):
            asg: Dict[str, str] = {}
            for part in combo:
                asg.update(part)
            free = [v for v in head if v not in asg]
            for extra in product(forest.objects, repeat=len(free)):
                full = dict(asg)
                full.update(zip(free, extra))
                for names in product(*(prep.expand[full[v]] for v in head)):
                    answers.add(tuple(names))
    return answers


def certain_answer_oracle(k: KnowledgeBase, q: Query) -> Set[Tuple[str, ...]]:
    return oracle_answers(prepare_horn(k), q)
