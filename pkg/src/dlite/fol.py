"""Translation of an (HN)- KB into a one-variable first-order sentence and
its grounding into propositional clauses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from .closure import extended_abox_closure, number_sets, role_order, successors
from .errors import FragmentUnsupported
from .model import And, AtLeast, AtLeastQ, Atom, Bottom, Concept, KnowledgeBase, Not, Role, inclusion_clauses
from .normalize import HNminusKB
from .sat import ClauseSet


@dataclass(frozen=True, order=True)
class ConceptPred:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class EqPred:
    q: int
    role: Role

    def __str__(self) -> str:
        return f"E{self.q}{self.role}"


@dataclass(frozen=True, order=True)
class DefPred:
    """Auxiliary predicate naming a subformula in the definitional transformation."""
    key: str

    def __str__(self) -> str:
        return f"def[{self.key}]"


Pred = Union[ConceptPred, EqPred, DefPred]


@dataclass(frozen=True, order=True)
class Obj:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Dr:
    role: Role

    def __str__(self) -> str:
        return f"dr[{self.role}]"


Constant = Union[Obj, Dr]
VAR = "x"  # the single variable


@dataclass(frozen=True)
class PAtom:
    pred: Pred
    term: Union[Constant, str] = VAR

    def __str__(self) -> str:
        return f"{self.pred}({self.term})"


@dataclass(frozen=True)
class PNot:
    arg: "PForm"

    def __str__(self) -> str:
        return f"~{self.arg}"


@dataclass(frozen=True)
class PAnd:
    parts: Tuple["PForm", ...]

    def __str__(self) -> str:
        return "(" + " & ".join(map(str, self.parts)) + ")" if self.parts else "T"


@dataclass(frozen=True)
class POr:
    parts: Tuple["PForm", ...]

    def __str__(self) -> str:
        return "(" + " | ".join(map(str, self.parts)) + ")" if self.parts else "F"


PForm = Union[PAtom, PNot, PAnd, POr]
PTRUE = PAnd(())
PFALSE = POr(())


@dataclass(frozen=True)
class Implication:
    body: PForm
    head: PForm
    block: str  # "T*", "T^R", "eps" or "delta"

    def __str__(self) -> str:
        return f"{self.body} -> {self.head}"


@dataclass
class QL1Sentence:
    universal_part: List[Implication]
    ground_part: List[PForm]
    constants: List[Constant]
    numbers: Dict[Role, List[int]]
    source: Optional[KnowledgeBase] = None

    def __str__(self) -> str:
        lines = [f"forall x: {imp}" for imp in self.universal_part]
        lines += [str(g) for g in self.ground_part]
        return "\n".join(lines)


def concept_star(c: Concept, term=VAR) -> PForm:
    if isinstance(c, Bottom):
        return PFALSE
    if isinstance(c, Atom):
        return PAtom(ConceptPred(c.name), term)
    if isinstance(c, AtLeast):
        return PAtom(EqPred(c.q, c.role), term)
    if isinstance(c, Not):
        inner = concept_star(c.arg, term)
        if inner == PFALSE:
            return PTRUE
        if inner == PTRUE:
            return PFALSE
        return PNot(inner)
    if isinstance(c, And):
        return PAnd((concept_star(c.left, term), concept_star(c.right, term)))
    if isinstance(c, AtLeastQ):
        raise FragmentUnsupported("qualified restrictions must be eliminated before translation")
    raise TypeError(c)


def _kb_of(k) -> KnowledgeBase:
    return k.kb if isinstance(k, HNminusKB) else k


def translate(k: Union[HNminusKB, KnowledgeBase]) -> QL1Sentence:
    kb = _kb_of(k)
    t, a = kb.tbox, kb.abox
    if t.role_constraints:
        raise FragmentUnsupported("role constraints must be normalized away before translation")
    for lhs, rhs in t.concept_inclusions:
        for c in (lhs, rhs):
            if any(isinstance(x, AtLeastQ) for x in _walk(c)):
                raise FragmentUnsupported("qualified restrictions must be eliminated before translation")
    order = role_order(t, a.role_names())
    numbers = number_sets(t, order)
    roles = order.roles
    universal: List[Implication] = []
    for lhs, rhs in t.concept_inclusions:
        universal.append(Implication(concept_star(lhs), concept_star(rhs), "T*"))
    seen = set()
    for sub, sup in t.role_inclusions:
        for x, y in ((sub, sup), (sub.inv(), sup.inv())):
            for q in numbers.get(x, [1]):
                imp = Implication(PAtom(EqPred(q, x)), PAtom(EqPred(q, y)), "T^R")
                if imp not in seen and x != y:
                    seen.add(imp)
                    universal.append(imp)
    for r in roles:
        universal.append(Implication(PAtom(EqPred(1, r)), PAtom(EqPred(1, r.inv()), Dr(r.inv())), "eps"))
    for r in roles:
        qs = numbers.get(r, [1])
        for lo, hi in zip(qs, qs[1:]):
            universal.append(Implication(PAtom(EqPred(hi, r)), PAtom(EqPred(lo, r)), "delta"))

    ground: List[PForm] = []
    for pos, c, x in a.concept_assertions:
        atom = PAtom(ConceptPred(c), Obj(x))
        ground.append(atom if pos else PNot(atom))
    atoms = extended_abox_closure(t, a, order)
    succ = {r: successors(atoms, r) for r in roles}
    for x in a.objects():
        for r in roles:
            count = len(succ[r].get(x, ()))
            if count:
                q = max(v for v in numbers.get(r, [1]) if v <= count)
                ground.append(PAtom(EqPred(q, r), Obj(x)))
    for pos, p, s, o in a.role_assertions:
        if not pos and (p, s, o) in atoms:
            ground.append(PFALSE)
    constants: List[Constant] = [Obj(x) for x in a.objects()] + [Dr(r) for r in roles]
    return QL1Sentence(universal, ground, constants, numbers, kb)


def _walk(c: Concept):
    yield c
    if isinstance(c, Not):
        yield from _walk(c.arg)
    elif isinstance(c, And):
        yield from _walk(c.left)
        yield from _walk(c.right)
    elif isinstance(c, AtLeastQ):
        yield from _walk(c.filler)


# ------------------------------------------------------------- grounding

Lit = Tuple[bool, Pred, object]  # (sign, predicate, term) with term VAR or a constant


def _to_concept_literals(f: PForm) -> Optional[Concept]:
    """Map a formula over x back to a concept so the classifier's CNF routine applies."""
    if isinstance(f, PAtom):
        if f.term != VAR:
            return None
        if isinstance(f.pred, ConceptPred):
            return Atom(f.pred.name)
        if isinstance(f.pred, EqPred):
            return AtLeast(f.pred.q, f.pred.role)
        return None
    if isinstance(f, PNot):
        inner = _to_concept_literals(f.arg)
        return None if inner is None else Not(inner)
    if isinstance(f, PAnd):
        if not f.parts:
            return Not(Bottom())
        out = None
        for p in f.parts:
            c = _to_concept_literals(p)
            if c is None:
                return None
            out = c if out is None else And(out, c)
        return out
    if isinstance(f, POr):
        if not f.parts:
            return Bottom()
        out = None
        for p in f.parts:
            c = _to_concept_literals(p)
            if c is None:
                return None
            out = c if out is None else Not(And(Not(out), Not(c)))
        return out
    return None


def _concept_lit(pos: bool, c) -> Lit:
    if isinstance(c, Atom):
        return (pos, ConceptPred(c.name), VAR)
    return (pos, EqPred(c.q, c.role), VAR)


class _Definitions:
    """Full-equivalence definitional transformation with names derived from
    the printed subformula, so repeated runs give identical clause sets."""

    def __init__(self):
        self.clauses: List[List[Lit]] = []
        self.done: Dict[str, Lit] = {}

    def literal(self, f: PForm) -> Optional[Lit]:
        """A literal equivalent to f; None means constant true, and a
        literal whose predicate is None means constant false."""
        if isinstance(f, PAtom):
            return (True, f.pred, f.term)
        if isinstance(f, PNot):
            inner = self.literal(f.arg)
            if inner is None:
                return (True, None, None)
            if inner[1] is None:
                return None
            return (not inner[0], inner[1], inner[2])
        key = str(f)
        if key in self.done:
            return self.done[key]
        parts = []
        for p in f.parts:
            parts.append(self.literal(p))
        is_and = isinstance(f, PAnd)
        if is_and:
            if any(p is not None and p[1] is None for p in parts):
                lit = (True, None, None)
                self.done[key] = lit
                return lit
            parts = [p for p in parts if p is not None]
            if not parts:
                self.done[key] = None
                return None
        else:
            if any(p is None for p in parts):
                self.done[key] = None
                return None
            parts = [p for p in parts if p[1] is not None]
            if not parts:
                lit = (True, None, None)
                self.done[key] = lit
                return lit
        if len(parts) == 1:
            self.done[key] = parts[0]
            return parts[0]
        d = (True, DefPred(key), VAR)
        nd = (False, d[1], VAR)
        neg = lambda l: (not l[0], l[1], l[2])
        if is_and:
            for p in parts:
                self.clauses.append([nd, p])
            self.clauses.append([d] + [neg(p) for p in parts])
        else:
            self.clauses.append([nd] + parts)
            for p in parts:
                self.clauses.append([d, neg(p)])
        self.done[key] = d
        return d


def implication_clauses(imp: Implication, defs: Optional[_Definitions] = None) -> List[List[Lit]]:
    """Clauses over x-literals (and constant-literals) for one implication."""
    body = _to_concept_literals(imp.body)
    head = _to_concept_literals(imp.head)
    if body is not None and head is not None:
        cls = inclusion_clauses(body, head)
        if cls is not None:
            return [sorted((_concept_lit(pos, c) for pos, c in cl), key=_lit_key) for cl in cls]
    if isinstance(imp.body, PAtom) and isinstance(imp.head, PAtom):
        return [[(False, imp.body.pred, imp.body.term), (True, imp.head.pred, imp.head.term)]]
    defs = defs if defs is not None else _Definitions()
    lb = defs.literal(imp.body)
    lh = defs.literal(imp.head)
    if lb is not None and lb[1] is None:
        return []
    if lh is None:
        return []
    clause = []
    if lb is not None:
        clause.append((not lb[0], lb[1], lb[2]))
    if lh[1] is not None:
        clause.append(lh)
    return [clause]


def _lit_key(l: Lit):
    return (str(l[1]), l[0])


def ground(s: QL1Sentence) -> ClauseSet:
    constants = list(s.constants) or [Obj("_dummy")]
    cs = ClauseSet()
    defs = _Definitions()
    schema: List[List[Lit]] = []
    for imp in s.universal_part:
        schema.extend(implication_clauses(imp, defs))
    schema.extend(defs.clauses)
    for c in constants:
        for cl in schema:
            cs.add_clause([(pos, (pred, c if term == VAR else term)) for pos, pred, term in cl])
    for g in s.ground_part:
        if g == PFALSE:
            cs.add_clause([])
        elif isinstance(g, PAtom):
            cs.add_clause([(True, (g.pred, g.term))])
        elif isinstance(g, PNot) and isinstance(g.arg, PAtom):
            cs.add_clause([(False, (g.arg.pred, g.arg.term))])
        else:
            raise TypeError(g)
    return cs


def atom_name(atom) -> str:
    pred, const = atom
    return f"{pred}({const})"
