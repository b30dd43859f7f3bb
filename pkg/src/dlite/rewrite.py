"""First-order rewritings over the ABox viewed as a finite structure:
a satisfiability sentence for arbitrary TBoxes, certain-answer rewritings of
positive existential queries for Horn TBoxes, an active-domain evaluator and
an SQL emitter."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .closure import RoleOrder, ext_tbox, number_sets, role_order
from .errors import BudgetExceeded, FragmentUnsupported, InconsistentKB
from .fol import Dr
from .model import ABox, AtLeast, Atom, Dis, Irr, KnowledgeBase, Role, TBox, exists, inclusion_clauses
from .normalize import HNminusKB, merge_equalities, normalize_to_hn_minus, reduce_concept_sat
from .syntax import QAtom, Query, prenex, query_atoms, to_dnf

DEFAULT_TYPE_CAP = 2 ** 60
DEFAULT_DISJUNCT_CAP = 200000
DNF_CAP = 20000


# ---------------------------------------------------------------- formulas

class Formula:
    __slots__ = ("_key", "_hash", "free")

    def _init(self, key: tuple, free: FrozenSet[str]) -> None:
        self._key = key
        self._hash = hash(key)
        self.free = free

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, Formula) and self._hash == other._hash
                                 and self._key == other._key)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return str(self)


class FRel(Formula):
    """A relation of the ABox structure; bar selects the negated-assertion relation."""
    __slots__ = ("pred", "args", "bar")

    def __init__(self, pred: str, args: Tuple[str, ...], bar: bool = False):
        self.pred, self.args, self.bar = pred, tuple(args), bar
        self._init(("rel", pred, self.args, bar), frozenset(self.args))

    def __str__(self) -> str:
        return f"{'~' if self.bar else ''}{self.pred}({','.join(self.args)})"


class FEq(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: str, right: str):
        self.left, self.right = left, right
        self._init(("eq", left, right), frozenset((left, right)))

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


class FNot(Formula):
    __slots__ = ("arg",)

    def __init__(self, arg: Formula):
        self.arg = arg
        self._init(("not", arg), arg.free)

    def __str__(self) -> str:
        if isinstance(self.arg, FEq):
            return f"{self.arg.left} != {self.arg.right}"
        return f"not {_wrap(self.arg)}"


class FAnd(Formula):
    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[Formula]):
        self.parts = tuple(parts)
        self._init(("and", self.parts), frozenset().union(*(p.free for p in self.parts)))

    def __str__(self) -> str:
        return " & ".join(_wrap(p) for p in self.parts) if self.parts else "true"


class FOr(Formula):
    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[Formula]):
        self.parts = tuple(parts)
        self._init(("or", self.parts), frozenset().union(*(p.free for p in self.parts)))

    def __str__(self) -> str:
        return " | ".join(_wrap(p) for p in self.parts) if self.parts else "false"


class FExists(Formula):
    __slots__ = ("vars", "body")

    def __init__(self, vars_: Sequence[str], body: Formula):
        self.vars, self.body = tuple(vars_), body
        self._init(("exists", self.vars, body), body.free - set(self.vars))

    def __str__(self) -> str:
        return f"exists {','.join(self.vars)} . {_wrap(self.body)}"


class FForall(Formula):
    __slots__ = ("vars", "body")

    def __init__(self, vars_: Sequence[str], body: Formula):
        self.vars, self.body = tuple(vars_), body
        self._init(("forall", self.vars, body), body.free - set(self.vars))

    def __str__(self) -> str:
        return f"forall {','.join(self.vars)} . {_wrap(self.body)}"


def _wrap(f: Formula) -> str:
    if isinstance(f, (FRel, FEq)) or (isinstance(f, (FAnd, FOr)) and not f.parts):
        return str(f)
    return f"({f})"


TRUE = FAnd(())
FALSE = FOr(())


def and_(*parts: Formula) -> Formula:
    out: Dict[Formula, None] = {}
    for p in parts:
        if p == FALSE:
            return FALSE
        if isinstance(p, FAnd):
            for q in p.parts:
                out.setdefault(q)
        else:
            out.setdefault(p)
    if len(out) == 1:
        return next(iter(out))
    return FAnd(tuple(out))


def or_(*parts: Formula) -> Formula:
    out: Dict[Formula, None] = {}
    for p in parts:
        if p == TRUE:
            return TRUE
        if isinstance(p, FOr):
            for q in p.parts:
                out.setdefault(q)
        else:
            out.setdefault(p)
    if len(out) == 1:
        return next(iter(out))
    return FOr(tuple(out))


def not_(f: Formula) -> Formula:
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    if isinstance(f, FNot):
        return f.arg
    return FNot(f)


def eq_(a: str, b: str) -> Formula:
    return TRUE if a == b else FEq(*sorted((a, b)))


def neq_(a: str, b: str) -> Formula:
    return not_(eq_(a, b))


def exists_(vars_: Iterable[str], body: Formula) -> Formula:
    vs = [v for v in dict.fromkeys(vars_) if v in body.free]
    if not vs:
        return body
    if isinstance(body, FExists):
        return FExists(tuple(vs) + body.vars, body.body)
    return FExists(tuple(vs), body)


def forall_(vars_: Iterable[str], body: Formula) -> Formula:
    vs = [v for v in dict.fromkeys(vars_) if v in body.free]
    if not vs:
        return body
    return FForall(tuple(vs), body)


def implies_(a: Formula, b: Formula) -> Formula:
    return or_(not_(a), b)


def subformulas(f: Formula) -> Iterable[Formula]:
    stack = [f]
    seen: Set[Formula] = set()
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        yield g
        if isinstance(g, FNot):
            stack.append(g.arg)
        elif isinstance(g, (FAnd, FOr)):
            stack.extend(g.parts)
        elif isinstance(g, (FExists, FForall)):
            stack.append(g.body)


@dataclass(frozen=True)
class FOQuery:
    formula: Formula
    free: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"({','.join(self.free)}) := {self.formula}"

    @property
    def is_sentence(self) -> bool:
        return not self.free

    def size(self) -> int:
        return sum(1 for _ in subformulas(self.formula))


# ------------------------------------------------------------ structures

@dataclass
class AboxStructure:
    domain: Tuple[str, ...]
    concepts: Dict[str, Set[str]] = field(default_factory=dict)
    neg_concepts: Dict[str, Set[str]] = field(default_factory=dict)
    roles: Dict[str, Set[Tuple[str, str]]] = field(default_factory=dict)
    neg_roles: Dict[str, Set[Tuple[str, str]]] = field(default_factory=dict)

    def unary(self, name: str, bar: bool = False) -> Set[str]:
        return (self.neg_concepts if bar else self.concepts).get(name, set())

    def binary(self, name: str, bar: bool = False) -> Set[Tuple[str, str]]:
        return (self.neg_roles if bar else self.roles).get(name, set())


def build_abox_structure(a: ABox, objects: Iterable[str] = ()) -> AboxStructure:
    domain = list(dict.fromkeys(list(a.objects()) + list(objects)))
    s = AboxStructure(tuple(domain))
    for pos, c, x in a.concept_assertions:
        (s.concepts if pos else s.neg_concepts).setdefault(c, set()).add(x)
    for pos, p, x, y in a.role_assertions:
        (s.roles if pos else s.neg_roles).setdefault(p, set()).add((x, y))
    return s


# ------------------------------------------------------------ evaluation

Rel = Tuple[Tuple[str, ...], Set[tuple]]


def _project(rel: Rel, keep: Sequence[str]) -> Rel:
    vars_, rows = rel
    idx = [vars_.index(v) for v in keep]
    return tuple(keep), {tuple(r[i] for i in idx) for r in rows}


def _join(a: Rel, b: Rel) -> Rel:
    av, ar = a
    bv, br = b
    common = [v for v in av if v in bv]
    out_vars = tuple(sorted(set(av) | set(bv)))
    ai = [av.index(v) for v in common]
    bi = [bv.index(v) for v in common]
    index: Dict[tuple, List[tuple]] = {}
    for r in br:
        index.setdefault(tuple(r[i] for i in bi), []).append(r)
    pick = [(0, av.index(v)) if v in av else (1, bv.index(v)) for v in out_vars]
    rows = set()
    for r in ar:
        for s in index.get(tuple(r[i] for i in ai), ()):
            both = (r, s)
            rows.add(tuple(both[w][i] for w, i in pick))
    return out_vars, rows


def _extend(rel: Rel, vars_: Iterable[str], domain: Sequence[str]) -> Rel:
    missing = sorted(set(vars_) - set(rel[0]))
    if not missing:
        return rel
    return _join(rel, (tuple(missing), set(product(domain, repeat=len(missing)))))


class _Evaluator:
    def __init__(self, s: AboxStructure):
        self.s = s
        self.domain = tuple(s.domain)
        self.cache: Dict[Formula, Rel] = {}

    def run(self, f: Formula) -> Rel:
        hit = self.cache.get(f)
        if hit is None:
            hit = self._eval(f)
            self.cache[f] = hit
        return hit

    def _eval(self, f: Formula) -> Rel:
        s = self.s
        if isinstance(f, FRel):
            if len(f.args) == 1:
                return (f.args, {(x,) for x in s.unary(f.pred, f.bar)})
            a, b = f.args
            pairs = s.binary(f.pred, f.bar)
            if a == b:
                return ((a,), {(x,) for x, y in pairs if x == y})
            if a < b:
                return ((a, b), set(pairs))
            return ((b, a), {(y, x) for x, y in pairs})
        if isinstance(f, FEq):
            return ((f.left, f.right), {(d, d) for d in self.domain})
        if isinstance(f, FNot):
            vars_, rows = self.run(f.arg)
            return vars_, set(product(self.domain, repeat=len(vars_))) - rows
        if isinstance(f, FAnd):
            return self._and(f)
        if isinstance(f, FOr):
            out_vars = tuple(sorted(f.free))
            rows: Set[tuple] = set()
            for p in f.parts:
                rel = _extend(self.run(p), out_vars, self.domain)
                rows |= _project(rel, out_vars)[1]
            return out_vars, rows
        if isinstance(f, FExists):
            rel = self.run(f.body)
            return _project(rel, tuple(sorted(f.free)))
        if isinstance(f, FForall):
            return self.run(not_(exists_(f.vars, not_(f.body))))
        raise TypeError(f)

    def _and(self, f: FAnd) -> Rel:
        out_vars = tuple(sorted(f.free))
        positive = [p for p in f.parts if not isinstance(p, (FEq, FNot))]
        filters = [p for p in f.parts if isinstance(p, (FEq, FNot))]
        rels = []
        for p in positive:
            rel = self.run(p)
            if not rel[1]:
                return out_vars, set()
            rels.append(rel)
        rels.sort(key=lambda r: len(r[1]))
        cur: Rel = ((), {()})
        while rels:
            pick = next((i for i, r in enumerate(rels) if set(r[0]) & set(cur[0])), 0)
            cur = _join(cur, rels.pop(pick))
            if not cur[1]:
                return out_vars, set()
        pending = list(filters)
        progress = True
        while pending and progress:
            progress = False
            for p in list(pending):
                covered = set(cur[0])
                if isinstance(p, FEq):
                    a, b = p.left, p.right
                    if a in covered and b in covered:
                        ia, ib = cur[0].index(a), cur[0].index(b)
                        cur = (cur[0], {r for r in cur[1] if r[ia] == r[ib]})
                    elif a in covered or b in covered:
                        src, dst = (a, b) if a in covered else (b, a)
                        i = cur[0].index(src)
                        cur = _join(cur, ((src, dst) if src < dst else (dst, src),
                                          {(r[i], r[i]) for r in cur[1]}))
                    else:
                        continue
                else:
                    need = p.arg.free
                    if not need <= covered:
                        continue
                    inner = self.run(p.arg)
                    idx = [cur[0].index(v) for v in inner[0]]
                    cur = (cur[0], {r for r in cur[1] if tuple(r[i] for i in idx) not in inner[1]})
                pending.remove(p)
                progress = True
                if not cur[1]:
                    return out_vars, set()
        for p in pending:
            cur = _join(_extend(cur, p.free, self.domain), self.run(p))
        cur = _extend(cur, out_vars, self.domain)
        return _project(cur, out_vars)


def eval_fo(s: AboxStructure, f: FOQuery) -> Union[List[tuple], bool]:
    """Active-domain evaluation: sorted answer tuples, or a truth value for sentences."""
    rows = answers(s, f)
    if f.is_sentence:
        return bool(rows)
    return sorted(rows)


def answers(s: AboxStructure, f: FOQuery) -> Set[tuple]:
    ev = _Evaluator(s)
    rel = _extend(ev.run(f.formula), f.free, ev.domain)
    return _project(rel, f.free)[1]


def holds(s: AboxStructure, f: Union[FOQuery, Formula]) -> bool:
    if isinstance(f, Formula):
        f = FOQuery(f)
    return bool(answers(s, f))


# ------------------------------------------------------- signature mapping

class SignatureMap:
    """Translates atoms of the normalized signature (identity role, the
    irreflexive parts of reflexive roles, roles introduced for qualified
    restrictions) back into formulas over the original ABox signature."""

    def __init__(self, hk: HNminusKB, extra_roles: Iterable[str] = ()):
        self.hk = hk
        names = set(hk.source.tbox.role_names()) | set(extra_roles)
        self.source_order = role_order(hk.source.tbox, names)
        self.identity = hk.identity_role
        self.split = dict(hk.split_roles)
        self.split_inverse = {sp: p for p, sp in self.split.items()}
        self.fresh = {n for n in hk.rename_map if n != self.identity and n not in self.split_inverse}
        self.original_roles = sorted(n for n in names if n not in self.fresh)
        self._targets: Dict[str, Optional[Tuple[str, bool]]] = {}
        for name in self.original_roles:
            self._targets[name] = self._split_target(name)

    def _split_target(self, name: str) -> Optional[Tuple[str, bool]]:
        order = self.source_order
        r = Role(name)
        for p, sp in self.split.items():
            if order.leq(r, Role(p)) and order.leq(Role(p), r):
                return sp, False
            if order.leq(r, Role(p, True)) and order.leq(Role(p, True), r):
                return sp, True
        return None

    def role_atom(self, name: str, a: str, b: str) -> Formula:
        """The normalized atom name(a, b) over the original ABox."""
        if name == self.identity:
            return eq_(a, b)
        if name in self.split_inverse:
            parts = []
            for orig, target in self._targets.items():
                if target is None or target[0] != name:
                    continue
                parts.append(FRel(orig, (b, a)) if target[1] else FRel(orig, (a, b)))
            return and_(or_(*parts), neq_(a, b))
        if name in self.fresh:
            return FALSE
        if self._targets.get(name) is not None:
            return and_(FRel(name, (a, b)), eq_(a, b))
        return FRel(name, (a, b))

    def source_atom(self, name: str, a: str, b: str) -> Formula:
        """An atom of the source signature (before splitting reflexive roles)."""
        if name in self.fresh:
            return FALSE
        return FRel(name, (a, b))


# ------------------------------------------------------------- the rewriter

Basic = Union[Atom, AtLeast]
Token = Role  # ∃x ψ_{∃R}(x): some ABox element is in ∃R in the minimal model
DNF = FrozenSet[FrozenSet]


def _minimize(dnf: Iterable[FrozenSet]) -> DNF:
    items = sorted(set(dnf), key=len)
    out: List[FrozenSet] = []
    for s in items:
        if not any(o <= s for o in out):
            out.append(s)
    return frozenset(out)


def _dnf_and(parts: Sequence[DNF]) -> DNF:
    acc: Set[FrozenSet] = {frozenset()}
    for p in parts:
        acc = {a | b for a in acc for b in p}
        if len(acc) > DNF_CAP:
            raise BudgetExceeded(f"fixpoint formula exceeds {DNF_CAP} disjuncts")
        acc = set(_minimize(acc))
    return frozenset(acc)


def _basic_key(b) -> Tuple:
    if isinstance(b, Atom):
        return (0, b.name, 0, False)
    return (1, b.role.name, b.q, b.role.inverted)


@dataclass
class PathGraph:
    vertices: List[Role]                 # class representatives
    edges: Set[Tuple[Role, Role]]
    entails: Dict[Tuple[Role, Role], int]  # (R_i, R_j) -> largest q with T ⊨ ∃inv(R_i) ⊑ ≥q R_j

    def successors(self, r: Role) -> List[Role]:
        return sorted(s for a, s in self.edges if a == r)


SatOracle = Callable[[KnowledgeBase], object]


def _default_sat(k: KnowledgeBase):
    from .sat import solve
    return solve(k)


class Rewriter:
    """Holds a normalized TBox and the memo tables shared by the rewritings."""

    VAR = "~x"

    def __init__(self, t: TBox, concept_names: Iterable[str] = (), role_names: Iterable[str] = (),
                 sat: Optional[SatOracle] = None):
        if any(c.__class__.__name__ == "Tra" for c in t.role_constraints):
            raise FragmentUnsupported("first-order rewriting is impossible with transitive roles")
        self.source_tbox = t
        self.hk = normalize_to_hn_minus(KnowledgeBase(t))
        self.t = self.hk.kb.tbox
        self.sig = SignatureMap(self.hk, role_names)
        names = set(self.t.role_names()) | set(role_names)
        self.order: RoleOrder = role_order(self.t, names)
        self.numbers = number_sets(self.t, self.order)
        self.roles: List[Role] = list(self.order.roles)
        self.concepts = sorted(set(self.t.concept_names()) | set(concept_names))
        self.bcon: List[Basic] = [Atom(c) for c in self.concepts]
        for r in self.roles:
            for q in self.numbers.get(r, [1]):
                self.bcon.append(AtLeast(q, r))
        self.bcon.sort(key=_basic_key)
        self.clauses = []
        for lhs, rhs in ext_tbox(self.t).concept_inclusions:
            cls = inclusion_clauses(lhs, rhs)
            if cls is None:
                raise BudgetExceeded(f"inclusion {lhs} <= {rhs} has too many clauses")
            self.clauses.extend(cls)
        self.identity = Role(self.hk.identity_role) if self.hk.identity_role else None
        self.sat = sat or _default_sat
        self._psi_stages: Optional[List[Dict[Basic, DNF]]] = None
        self._theta_stages: Optional[List[Dict[Tuple[Basic, Dr], DNF]]] = None
        self._graph: Optional[PathGraph] = None
        self._psi_cache: Dict[Tuple[Basic, str], Formula] = {}
        self._token_cache: Dict[Role, Formula] = {}
        self._memo: Dict[object, object] = {}

    # ----- atoms over the original ABox

    def role_formula(self, r: Role, a: str, b: str) -> Formula:
        """R^T(a, b): some role name below R links a and b in the ABox."""
        parts = []
        for s in sorted(self.order.sub_roles(r)):
            if s.inverted:
                parts.append(self.sig.role_atom(s.name, b, a))
            else:
                parts.append(self.sig.role_atom(s.name, a, b))
        return or_(*parts)

    def count_formula(self, q: int, r: Role, x: str) -> Formula:
        """E_qR^T(x): at least q distinct R-successors in the closed ABox."""
        ys = [f"~e{i}" for i in range(1, q + 1)]
        body = [self.role_formula(r, x, y) for y in ys]
        body += [neq_(ys[i], ys[j]) for i in range(q) for j in range(i + 1, q)]
        return exists_(ys, and_(*body))

    def base_formula(self, b: Basic, x: str) -> Formula:
        if isinstance(b, Atom):
            return FRel(b.name, (x,))
        return self.count_formula(b.q, b.role, x)

    # ----- Horn rules

    def horn_rules(self) -> List[Tuple[FrozenSet[Basic], Optional[Basic]]]:
        rules = self._memo.get("rules")
        if rules is None:
            rules = []
            for clause in self.clauses:
                heads = [c for pos, c in clause if pos]
                if len(heads) > 1:
                    raise FragmentUnsupported("query rewriting needs a Horn TBox")
                body = frozenset(c for pos, c in clause if not pos)
                rules.append((body, heads[0] if heads else None))
            self._memo["rules"] = rules
        return rules

    # ----- ψ

    def psi_stages(self) -> List[Dict[Basic, DNF]]:
        if self._psi_stages is not None:
            return self._psi_stages
        rules = [(b, h) for b, h in self.horn_rules() if h is not None]
        stage: Dict[Basic, DNF] = {b: frozenset([frozenset([b])]) for b in self.bcon}
        stages = [stage]
        for _ in range(len(self.bcon)):
            nxt: Dict[Basic, Set[FrozenSet]] = {b: set(stage[b]) for b in self.bcon}
            for body, head in rules:
                if head not in nxt:
                    continue
                nxt[head] |= _dnf_and([stage[b] for b in sorted(body, key=_basic_key)])
            new = {b: _minimize(v) for b, v in nxt.items()}
            if new == stage:
                break
            stage = new
            stages.append(stage)
        self._psi_stages = stages
        return stages

    def psi_dnf(self, b: Basic) -> DNF:
        return self.psi_stages()[-1].get(b, frozenset([frozenset([b])]))

    def dnf_formula(self, dnf: DNF, x: str) -> Formula:
        return or_(*(and_(*(self.base_formula(c, x) for c in sorted(conj, key=_basic_key)))
                     for conj in sorted(dnf, key=lambda s: sorted(map(_basic_key, s)))))

    def psi_formula(self, b: Basic, x: str) -> Formula:
        key = (b, x)
        f = self._psi_cache.get(key)
        if f is None:
            f = self.dnf_formula(self.psi_dnf(b), x)
            self._psi_cache[key] = f
        return f

    # ----- θ

    def theta_stages(self) -> List[Dict[Tuple[Basic, Dr], DNF]]:
        if self._theta_stages is not None:
            return self._theta_stages
        rules = [(b, h) for b, h in self.horn_rules() if h is not None]
        consts = [Dr(r) for r in self.roles]
        empty: DNF = frozenset()
        stage: Dict[Tuple[Basic, Dr], DNF] = {}
        for b in self.bcon:
            for d in consts:
                stage[(b, d)] = self._rho0(b, d)
        stages = [stage]
        limit = max(1, len(self.roles) * len(self.bcon))
        for _ in range(limit):
            nxt: Dict[Tuple[Basic, Dr], Set[FrozenSet]] = {k: set(v) for k, v in stage.items()}
            for b in self.bcon:
                if isinstance(b, AtLeast) and b.q == 1:
                    for d in consts:
                        if d.role == b.role:
                            for ds in consts:
                                nxt[(b, d)] |= stage.get((exists(b.role.inv()), ds), empty)
            for body, head in rules:
                for d in consts:
                    nxt[(head, d)] |= _dnf_and([stage[(c, d)] for c in sorted(body, key=_basic_key)])
            new = {k: _minimize(v) for k, v in nxt.items()}
            if new == stage:
                break
            stage = new
            stages.append(stage)
        self._theta_stages = stages
        return stages

    def _rho0(self, b: Basic, d: Dr) -> DNF:
        if isinstance(b, AtLeast) and b.q == 1 and b.role == d.role:
            return frozenset([frozenset([b.role.inv()])])
        return frozenset()

    def theta_dnf(self, b: Basic, d: Dr) -> DNF:
        return self.theta_stages()[-1].get((b, d), frozenset())

    def token_formula(self, r: Role) -> Formula:
        f = self._token_cache.get(r)
        if f is None:
            f = exists_(["~s"], self.psi_formula(exists(r), "~s"))
            self._token_cache[r] = f
        return f

    def theta_formula(self, b: Basic, d: Dr) -> Formula:
        dnf = self.theta_dnf(b, d)
        return or_(*(and_(*(self.token_formula(r) for r in sorted(conj)))
                     for conj in sorted(dnf, key=lambda s: sorted(s))))

    # ----- the path graph

    def path_graph(self) -> PathGraph:
        if self._graph is not None:
            return self._graph
        reps = sorted({self.order.rep(r) for r in self.roles
                       if self.identity is None or not self._same_class(r, self.identity)})
        vertices = []
        entails: Dict[Tuple[Role, Role], int] = {}
        for ri in reps:
            levels = self._entailed_numbers(ri.inv())
            if levels is None:
                continue
            vertices.append(ri)
            for rj in self.roles:
                best = max((q for q, r in levels if r == rj), default=0)
                if best:
                    entails[(ri, rj)] = best

        def path(ri: Role, rj: Role) -> bool:
            q = entails.get((ri, rj), 0)
            if q == 0:
                return False
            return q >= 2 or not self.order.leq(ri.inv(), rj)

        edges: Set[Tuple[Role, Role]] = set()
        for ri in vertices:
            for rj in vertices:
                if not path(ri, rj):
                    continue
                if any(path(ri, s) for s in self.order.proper_sub_roles(rj)):
                    continue
                edges.add((ri, rj))
        self._graph = PathGraph(vertices, edges, entails)
        return self._graph

    def _same_class(self, a: Role, b: Role) -> bool:
        return self.order.leq(a, b) and self.order.leq(b, a)

    def _entailed_numbers(self, r: Role) -> Optional[Set[Tuple[int, Role]]]:
        """The number restrictions entailed by ∃r, read off the least model of
        the concept-satisfiability probe; None when ∃r is unsatisfiable."""
        key = ("probe", r)
        if key in self._memo:
            return self._memo[key]
        probe = reduce_concept_sat(self.t, exists(r))
        res = self.sat(probe)
        out: Optional[Set[Tuple[int, Role]]] = None
        if res.verdict == "sat":
            if res.solver != "horn":
                raise FragmentUnsupported("query rewriting needs a Horn TBox")
            obj = probe.abox.concept_assertions[0][2]
            out = set()
            for i in res.model:
                pred, const = res.clauses.atoms[i - 1]
                if getattr(const, "name", None) == obj and hasattr(pred, "q"):
                    out.add((pred.q, pred.role))
        elif res.verdict != "unsat":
            raise FragmentUnsupported(res.reason or res.verdict)
        self._memo[key] = out
        return out

    def reach(self, m0: int) -> Dict[Tuple[Role, Role], Set[int]]:
        """For vertices F, L: the lengths 1..m0 of G_T paths from F to L."""
        key = ("reach", m0)
        if key in self._memo:
            return self._memo[key]
        g = self.path_graph()
        succ = {v: g.successors(v) for v in g.vertices}
        out: Dict[Tuple[Role, Role], Set[int]] = {}
        for f in g.vertices:
            frontier = {f}
            for length in range(1, m0 + 1):
                if not frontier:
                    break
                for last in frontier:
                    out.setdefault((f, last), set()).add(length)
                frontier = {n for last in frontier for n in succ[last]}
        self._memo[key] = out
        return out

    # ----- η and atoms under σ

    def eta(self, r: Role, y: str) -> Formula:
        parts = []
        for q in self.numbers.get(r, [1]):
            b = AtLeast(q, r)
            parts.append(and_(not_(self.base_formula(b, y)), self.psi_formula(b, y)))
        return or_(*parts)

    def concept_at(self, name: str, label: Optional[Role], t: str) -> Formula:
        """A^σ(t): ψ_A(t) at an ABox element, θ_{A,dr} at a copy of dr."""
        b = Atom(name)
        if label is None:
            if b not in self.psi_stages()[-1]:
                return FRel(name, (t,))
            return self.psi_formula(b, t)
        return self.theta_formula(b, Dr(label.inv()))

    def _label_ok(self, label: Role, r: Role) -> bool:
        return self.order.leq(label, r)

    def _adjacent(self, na: tuple, nb: tuple, r: Role, top: Role) -> bool:
        """σ_a →R σ_b for nodes given relative to a common top node."""
        if na == nb and self.identity is not None and self.order.leq(self.identity, r):
            return True
        if len(nb) == len(na) + 1 and nb[:-1] == na and self.order.leq(nb[-1], r):
            return True
        if len(na) == len(nb) + 1 and na[:-1] == nb and self.order.leq(na[-1].inv(), r):
            return True
        return False

    # ----- query rewriting

    def rewrite(self, q: Query, cap: int = DEFAULT_DISJUNCT_CAP) -> FOQuery:
        self.horn_rules()
        bound, matrix = prenex(q)
        head = list(q.head)
        m0 = len(bound) + len(self.roles)
        budget = [cap]
        disjuncts = [self._rewrite_cq(cq, set(head), m0, budget) for cq in to_dnf(matrix)]
        return FOQuery(or_(*disjuncts), tuple(head))

    def _spend(self, budget: List[int]) -> None:
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded("query rewriting exceeds the disjunct budget")

    def _named_atom(self, a: QAtom) -> Formula:
        if len(a.args) == 1:
            return self.concept_at(a.pred, None, a.args[0])
        return self.role_formula(Role(a.pred), a.args[0], a.args[1])

    def _rewrite_cq(self, atoms: List[QAtom], head: Set[str], m0: int, budget: List[int]) -> Formula:
        atoms = list(dict.fromkeys(atoms))
        bvars = list(dict.fromkeys(v for a in atoms for v in a.args if v not in head))
        parent = {v: v for v in bvars}

        def find(v: str) -> str:
            while parent[v] != v:
                v = parent[v]
            return v

        for a in atoms:
            if len(a.args) == 2 and a.args[0] in parent and a.args[1] in parent:
                x, y = find(a.args[0]), find(a.args[1])
                if x != y:
                    parent[y] = x
        comps: Dict[str, List[str]] = {}
        for v in bvars:
            comps.setdefault(find(v), []).append(v)
        parts = [self._named_atom(a) for a in atoms if all(v in head for v in a.args)]
        for comp in comps.values():
            cset = set(comp)
            catoms = [a for a in atoms if cset & set(a.args)]
            parts.append(self._component(comp, catoms, head, m0, budget))
        return and_(*parts)

    def _component(self, comp: List[str], atoms: List[QAtom], head: Set[str], m0: int,
                   budget: List[int]) -> Formula:
        options = []
        for mask in range(1 << len(comp)):
            eps = {v for i, v in enumerate(comp) if not mask >> i & 1}
            tree = [v for v in comp if v not in eps]
            named = head | eps
            formulas = [self._named_atom(a) for a in atoms if all(v in named for v in a.args)]
            pieces = self._pieces(tree, atoms)
            dead = False
            for piece in pieces:
                alts = self._piece_options(piece, atoms, named, m0, budget)
                if alts == FALSE:
                    dead = True
                    break
                formulas.append(alts)
            if not dead:
                options.append(and_(*formulas))
        return exists_(comp, or_(*options))

    def _pieces(self, tree: List[str], atoms: List[QAtom]) -> List[List[str]]:
        tset = set(tree)
        parent = {v: v for v in tree}

        def find(v: str) -> str:
            while parent[v] != v:
                v = parent[v]
            return v

        for a in atoms:
            if len(a.args) == 2 and a.args[0] in tset and a.args[1] in tset:
                x, y = find(a.args[0]), find(a.args[1])
                if x != y:
                    parent[y] = x
        out: Dict[str, List[str]] = {}
        for v in tree:
            out.setdefault(find(v), []).append(v)
        return list(out.values())

    def _piece_options(self, piece: List[str], atoms: List[QAtom], named: Set[str], m0: int,
                       budget: List[int]) -> Formula:
        """The disjunction over placements of a connected group of variables
        inside one anonymous tree below some ABox element."""
        pset = set(piece)
        inner = [a for a in atoms if set(a.args) <= pset]
        attach = [a for a in atoms if len(a.args) == 2 and set(a.args) & pset and set(a.args) & named]
        unary = [a for a in inner if len(a.args) == 1]
        binary = [a for a in inner if len(a.args) == 2]
        g = self.path_graph()
        reach = self.reach(m0)
        succ = {v: g.successors(v) for v in g.vertices}
        options: Set[Formula] = set()
        for top_class in g.vertices:
            for top in piece:
                for placement in self._placements(piece, top, binary, top_class, succ):
                    self._spend(budget)
                    depth = max(len(n) for n in placement.values())
                    attached = bool(attach)
                    if attached and not self._attach_ok(attach, placement, pset, top_class):
                        continue
                    labels = {v: (n[-1] if n else top_class) for v, n in placement.items()}
                    common = [eq_(v, top) for v in piece if v != top]
                    for a in attach:
                        x, y = a.args
                        common.append(eq_(x, y))
                    for a in unary:
                        v = a.args[0]
                        common.append(self.concept_at(a.pred, labels[v], v))
                    body = and_(*common)
                    if body == FALSE:
                        continue
                    for first in g.vertices:
                        lengths = reach.get((first, top_class), set())
                        if attached:
                            ok = first == top_class and 1 in lengths
                        else:
                            ok = any(1 <= n <= m0 - depth for n in lengths)
                        if ok:
                            options.add(and_(self.eta(first, top), body))
        return or_(*sorted(options, key=str))

    def _attach_ok(self, attach: List[QAtom], placement: Dict[str, tuple], pset: Set[str],
                   top_class: Role) -> bool:
        for a in attach:
            x, y = a.args
            r = Role(a.pred)
            if y in pset:
                if placement[y] != () or not self.order.leq(top_class, r):
                    return False
            else:
                if placement[x] != () or not self.order.leq(top_class.inv(), r):
                    return False
        return True

    def _placements(self, piece: List[str], top: str, binary: List[QAtom], top_class: Role,
                    succ: Dict[Role, List[Role]]) -> Iterable[Dict[str, tuple]]:
        """Assignments of tree nodes, given as class paths below the top
        variable's node, consistent with every binary atom of the piece."""
        out: List[Dict[str, tuple]] = []
        seen: Set[tuple] = set()

        def label(node: tuple) -> Role:
            return node[-1] if node else top_class

        def ok(asg: Dict[str, tuple]) -> bool:
            for a in binary:
                x, y = a.args
                if x in asg and y in asg and not self._adjacent(asg[x], asg[y], Role(a.pred), top_class):
                    return False
            return True

        def candidates(node: tuple, r: Role) -> List[tuple]:
            out_: List[tuple] = []
            if self.identity is not None and self.order.leq(self.identity, r):
                out_.append(node)
            for c in succ.get(label(node), ()):
                if self.order.leq(c, r):
                    out_.append(node + (c,))
            if node and self.order.leq(node[-1].inv(), r):
                out_.append(node[:-1])
            return out_

        def extend(asg: Dict[str, tuple]) -> None:
            if len(asg) == len(piece):
                key = tuple(sorted(asg.items()))
                if key not in seen:
                    seen.add(key)
                    out.append(dict(asg))
                return
            for a in binary:
                x, y = a.args
                if x in asg and y not in asg:
                    var, cands = y, candidates(asg[x], Role(a.pred))
                elif y in asg and x not in asg:
                    var, cands = x, candidates(asg[y], Role(a.pred).inv())
                else:
                    continue
                for c in cands:
                    asg[var] = c
                    if ok(asg):
                        extend(asg)
                    del asg[var]
                return

        start = {top: ()}
        if ok(start):
            extend(start)
        return out

    # ----- satisfiability sentence

    def consistent_types(self, cap: int = DEFAULT_TYPE_CAP) -> List[FrozenSet[Basic]]:
        """Every type over Bcon(T) consistent with ext(T), as the set of true concepts."""
        if "types" in self._memo:
            return self._memo["types"]
        k = len(self.roles)
        n = len(self.bcon)
        if 2 ** (n * (k + 1)) > cap:
            raise BudgetExceeded(f"2^({n}*{k + 1}) type combinations exceed the cap")
        index = {b: i for i, b in enumerate(self.bcon)}
        clauses = []
        for cl in self.clauses:
            lits = []
            for pos, c in cl:
                if c not in index:
                    raise FragmentUnsupported(f"unexpected concept {c} in a clause")
                lits.append((index[c], pos))
            clauses.append(lits)
        by_last: Dict[int, List[list]] = {}
        for lits in clauses:
            last = max((i for i, _ in lits), default=-1)
            by_last.setdefault(last, []).append(lits)
        if any(not lits for lits in by_last.get(-1, [])):
            self._memo["types"] = []
            return []
        out: List[FrozenSet[Basic]] = []
        value = [False] * n

        def walk(i: int) -> None:
            if i == n:
                out.append(frozenset(b for b, v in zip(self.bcon, value) if v))
                return
            for v in (True, False):
                value[i] = v
                if all(any(value[j] == pos for j, pos in lits) for lits in by_last.get(i, ())):
                    walk(i + 1)

        walk(0)
        self._memo["types"] = out
        return out

    def sat_sentence(self, cap: int = DEFAULT_TYPE_CAP) -> Formula:
        types = self.consistent_types(cap)
        ex = {r: exists(r) for r in self.roles}
        names = sorted({r.name for r in self.roles})
        x = self.VAR
        clash = []
        for p in names:
            if p in self.sig.fresh or p == self.sig.identity or p in self.sig.split_inverse:
                continue
            clash.append(forall_([x, "~y"], not_(and_(self.role_formula(Role(p), x, "~y"),
                                                       FRel(p, (x, "~y"), bar=True)))))
        mandatory = {r for r in self.roles if not any(ex[r] in t for t in types)}
        mandatory |= {r.inv() for r in mandatory}
        optional = sorted({r.name for r in self.roles if r not in mandatory})
        feasible: List[FrozenSet[Role]] = []
        for size in range(len(optional) + 1):
            for chosen in _subsets(optional, size):
                empty = frozenset(mandatory | {Role(p, i) for p in chosen for i in (False, True)})
                if any(f <= empty for f in feasible):
                    continue
                if self._witnesses_exist(types, empty, ex):
                    feasible.append(empty)
        disjuncts = []
        for empty in feasible:
            conj_sets = set()
            for t in types:
                if any(ex[r] in t for r in empty):
                    continue
                conj_sets.add(self._type_conjuncts(t))
            minimal = _minimize(conj_sets)
            body = or_(*(and_(*sorted(cs, key=str)) for cs in sorted(minimal, key=lambda s: sorted(map(str, s)))))
            disjuncts.append(forall_([x], body) if body.free else body)
        return and_(*clash, or_(*disjuncts))

    def _witnesses_exist(self, types, empty: FrozenSet[Role], ex) -> bool:
        for r in self.roles:
            want = r.inv() not in empty
            if not any((ex[r] in t) == want and not any(ex[s] in t for s in empty) for t in types):
                return False
        return True

    def _type_conjuncts(self, t: FrozenSet[Basic]) -> FrozenSet[Formula]:
        x = self.VAR
        out = []
        for b in self.bcon:
            if isinstance(b, Atom):
                out.append(not_(FRel(b.name, (x,), bar=b in t)))
            elif b not in t:
                out.append(not_(self.count_formula(b.q, b.role, x)))
        return frozenset(f for f in out if f != TRUE)

    def constraint_guard(self) -> Formula:
        """γ: the role disjointness and irreflexivity constraints, checked on
        the ABox closed under the source role hierarchy."""
        src = self.hk.source.tbox
        order = self.sig.source_order
        x, y = self.VAR, "~y"

        def closed(r: Role, a: str, b: str) -> Formula:
            parts = []
            for s in sorted(order.sub_roles(r)):
                parts.append(self.sig.source_atom(s.name, b, a) if s.inverted
                             else self.sig.source_atom(s.name, a, b))
            return or_(*parts)

        parts = []
        for c in src.role_constraints:
            if isinstance(c, Dis):
                parts.append(forall_([x, y], not_(and_(closed(c.first, x, y), closed(c.second, x, y)))))
            elif isinstance(c, Irr):
                parts.append(forall_([x], not_(closed(Role(c.name), x, x))))
        return and_(*parts)


def _subsets(items: Sequence, size: int):
    from itertools import combinations
    return combinations(items, size)


# ------------------------------------------------------------ entry points

def _query_signature(q: Query) -> Tuple[Set[str], Set[str]]:
    concepts, roles = set(), set()
    for a in query_atoms(q.body):
        (concepts if len(a.args) == 1 else roles).add(a.pred)
    return concepts, roles


def _require_horn(t: TBox) -> None:
    from .model import classify
    report = classify(t)
    if report.shape not in ("core", "horn"):
        raise FragmentUnsupported(f"query rewriting needs a Horn TBox, got {report.shape}")
    if report.has_transitivity:
        raise FragmentUnsupported("first-order rewriting is impossible with transitive roles")
    if not report.admissible:
        raise FragmentUnsupported("; ".join(str(v) for v in report.a123_violations
                                            + report.non_simple_number_restrictions))


def psi(t: TBox) -> Dict[Basic, FOQuery]:
    _require_horn(t)
    rw = Rewriter(t)
    return {b: FOQuery(rw.psi_formula(b, "x"), ("x",)) for b in rw.bcon}


def theta(t: TBox) -> Dict[Tuple[Basic, Dr], FOQuery]:
    _require_horn(t)
    rw = Rewriter(t)
    return {(b, Dr(r)): FOQuery(rw.theta_formula(b, Dr(r))) for b in rw.bcon for r in rw.roles}


def build_path_graph(t: TBox, sat: Optional[SatOracle] = None) -> PathGraph:
    _require_horn(t)
    return Rewriter(t, sat=sat).path_graph()


def rewrite_query(t: TBox, q: Query, cap: int = DEFAULT_DISJUNCT_CAP,
                  sat: Optional[SatOracle] = None) -> FOQuery:
    """φ_{T,q}: evaluating it over an ABox gives the certain answers of q."""
    _require_horn(t)
    concepts, roles = _query_signature(q)
    return Rewriter(t, concepts, roles, sat).rewrite(q, cap)


def build_sat_rewriting(t: TBox, concept_names: Iterable[str] = (), role_names: Iterable[str] = (),
                        cap: int = DEFAULT_TYPE_CAP) -> FOQuery:
    """A sentence true on an ABox exactly when the KB is satisfiable.  The
    extra names cover ABox symbols that the TBox does not mention."""
    from .model import classify
    report = classify(t)
    if report.has_transitivity:
        raise FragmentUnsupported("satisfiability is not first-order rewritable with transitive roles")
    if not report.admissible:
        raise FragmentUnsupported("; ".join(str(v) for v in report.a123_violations
                                            + report.non_simple_number_restrictions))
    rw = Rewriter(t, concept_names, role_names)
    return FOQuery(and_(rw.sat_sentence(cap), rw.constraint_guard()))


def sat_by_rewriting(k: KnowledgeBase, cap: int = DEFAULT_TYPE_CAP) -> bool:
    """Satisfiability of k decided by evaluating the rewriting over its ABox."""
    from .model import classify
    if not k.una:
        if classify(k).numbers != "none":
            raise FragmentUnsupported("without the UNA number restrictions need identification search")
        k, _ = merge_equalities(k)
    if any(a == b for a, b in k.abox.inequalities):
        return False
    f = build_sat_rewriting(k.tbox, k.abox.concept_names(), k.abox.role_names(), cap)
    return holds(build_abox_structure(k.abox), f)


def certain_answers(k: KnowledgeBase, q: Query, cap: int = DEFAULT_DISJUNCT_CAP) -> Set[Tuple[str, ...]]:
    """Certain answers of q over a consistent Horn KB, through the rewriting."""
    from .model import classify
    from .sat import solve
    report = classify(k)
    if report.shape not in ("core", "horn"):
        raise FragmentUnsupported(f"certain answers need a Horn TBox, got {report.shape}")
    if report.has_transitivity:
        raise FragmentUnsupported("certain answers are not first-order for transitive roles")
    expand: Dict[str, List[str]] = {}
    if not k.una:
        if report.numbers != "none":
            raise FragmentUnsupported("without the UNA only KBs without number restrictions are answered")
        merged, plan = merge_equalities(k)
        for x, rep in plan.canonical.items():
            expand.setdefault(rep, []).append(x)
        k = KnowledgeBase(merged.tbox, merged.abox, True)
    res = solve(k)
    if res.verdict == "unsat":
        raise InconsistentKB(res.reason or "the KB is inconsistent")
    if res.verdict != "sat":
        if res.verdict == "budget-exceeded":
            raise BudgetExceeded(res.reason)
        raise FragmentUnsupported(res.reason)
    f = rewrite_query(k.tbox, q, cap)
    structure = build_abox_structure(k.abox)
    rows = answers(structure, f)
    if not expand:
        return rows
    out: Set[Tuple[str, ...]] = set()
    for row in rows:
        for names in product(*(expand.get(v, [v]) for v in row)):
            out.add(tuple(names))
    return out


# ------------------------------------------------------------------- SQL

SCHEMA = (
    "CREATE TABLE ca (c TEXT, obj TEXT);\n"
    "CREATE TABLE nca (c TEXT, obj TEXT);\n"
    "CREATE TABLE ra (r TEXT, s TEXT, o TEXT);\n"
    "CREATE TABLE nra (r TEXT, s TEXT, o TEXT);\n"
)

_UNION_CHUNK = 400


def _lit(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


class _SqlBuilder:
    def __init__(self):
        self.ctes: List[str] = []
        self.names: Dict[Formula, str] = {}
        self.columns: Dict[str, str] = {}

    def col(self, var: str) -> str:
        c = self.columns.get(var)
        if c is None:
            c = f"v{len(self.columns)}"
            self.columns[var] = c
        return c

    def cols(self, vars_: Sequence[str]) -> List[str]:
        return [self.col(v) for v in vars_]

    def add(self, vars_: Sequence[str], sql: str) -> str:
        name = f"f{len(self.ctes)}"
        header = ", ".join(self.cols(vars_)) if vars_ else "ok"
        self.ctes.append(f"{name}({header}) AS ({sql})")
        return name

    def adom_power(self, vars_: Sequence[str]) -> str:
        if not vars_:
            return "SELECT 1"
        sel = ", ".join(f"d{i}.o" for i in range(len(vars_)))
        frm = ", ".join(f"adom d{i}" for i in range(len(vars_)))
        return f"SELECT {sel} FROM {frm}"

    def extended(self, name: str, have: Sequence[str], want: Sequence[str]) -> str:
        """SELECT over the CTE name with columns for want, padding with adom."""
        missing = [v for v in want if v not in have]
        if not want:
            return f"SELECT 1 FROM {name}"
        sel = []
        for i, v in enumerate(want):
            sel.append(f"t.{self.col(v)}" if v in have else f"d{missing.index(v)}.o")
        frm = [f"{name} t"] + [f"adom d{i}" for i in range(len(missing))]
        return f"SELECT {', '.join(sel)} FROM {', '.join(frm)}"

    def build(self, f: Formula) -> str:
        hit = self.names.get(f)
        if hit is not None:
            return hit
        name = self._build(f)
        self.names[f] = name
        return name

    def _build(self, f: Formula) -> str:
        vars_ = sorted(f.free)
        if isinstance(f, FRel):
            if len(f.args) == 1:
                table = "nca" if f.bar else "ca"
                return self.add(vars_, f"SELECT DISTINCT obj FROM {table} WHERE c = {_lit(f.pred)}")
            table = "nra" if f.bar else "ra"
            a, b = f.args
            if a == b:
                return self.add(vars_, f"SELECT DISTINCT s FROM {table} WHERE r = {_lit(f.pred)} AND s = o")
            first, second = ("s", "o") if a < b else ("o", "s")
            return self.add(vars_, f"SELECT DISTINCT {first}, {second} FROM {table} WHERE r = {_lit(f.pred)}")
        if isinstance(f, FEq):
            return self.add(vars_, "SELECT o, o FROM adom")
        if isinstance(f, FNot):
            inner = self.build(f.arg)
            if not vars_:
                return self.add(vars_, f"SELECT 1 WHERE NOT EXISTS (SELECT 1 FROM {inner})")
            return self.add(vars_, f"{self.adom_power(vars_)} EXCEPT SELECT * FROM {inner}")
        if isinstance(f, FAnd):
            if not f.parts:
                return self.add(vars_, "SELECT 1")
            names = [(self.build(p), sorted(p.free)) for p in f.parts]
            frm, where, sel = [], [], {}
            for i, (n, pv) in enumerate(names):
                frm.append(f"{n} t{i}")
                for v in pv:
                    ref = f"t{i}.{self.col(v)}"
                    if v in sel:
                        where.append(f"{sel[v]} = {ref}")
                    else:
                        sel[v] = ref
            cols = ", ".join(sel[v] for v in vars_) if vars_ else "1"
            sql = f"SELECT DISTINCT {cols} FROM {', '.join(frm)}"
            if where:
                sql += " WHERE " + " AND ".join(where)
            return self.add(vars_, sql)
        if isinstance(f, FOr):
            if not f.parts:
                return self.add(vars_, "SELECT 1 WHERE 1 = 0" if not vars_ else
                                f"{self.adom_power(vars_)} WHERE 1 = 0")
            selects = [self.extended(self.build(p), sorted(p.free), vars_) for p in f.parts]
            while len(selects) > _UNION_CHUNK:
                chunks = [selects[i:i + _UNION_CHUNK] for i in range(0, len(selects), _UNION_CHUNK)]
                selects = [f"SELECT * FROM {self.add(vars_, ' UNION '.join(c))}" for c in chunks]
            return self.add(vars_, " UNION ".join(selects))
        if isinstance(f, FExists):
            inner = self.build(f.body)
            if not vars_:
                return self.add(vars_, f"SELECT 1 WHERE EXISTS (SELECT 1 FROM {inner})")
            return self.add(vars_, f"SELECT DISTINCT {', '.join(self.cols(vars_))} FROM {inner}")
        if isinstance(f, FForall):
            return self.build(not_(exists_(f.vars, not_(f.body))))
        raise TypeError(f)


def emit_sql(f: FOQuery) -> str:
    """One SELECT statement over the ca/nca/ra/nra schema returning the answers."""
    b = _SqlBuilder()
    top = b.build(f.formula)
    adom = ("adom(o) AS (SELECT obj FROM ca UNION SELECT obj FROM nca UNION SELECT s FROM ra"
            " UNION SELECT o FROM ra UNION SELECT s FROM nra UNION SELECT o FROM nra)")
    have = sorted(f.formula.free)
    out_cols = []
    used: Set[str] = set()
    for i, v in enumerate(f.free):
        alias = v.lower() if v.isidentifier() and v.lower() not in used else f"a{i}"
        used.add(alias)
        out_cols.append(alias)
    if f.free:
        missing = [v for v in f.free if v not in have]
        sel = []
        for v, alias in zip(f.free, out_cols):
            ref = f"t.{b.col(v)}" if v in have else f"d{missing.index(v)}.o"
            sel.append(f"{ref} AS {alias}")
        frm = [f"{top} t"] + [f"adom d{i}" for i in range(len(missing))]
        final = (f"SELECT DISTINCT {', '.join(sel)} FROM {', '.join(frm)} "
                 f"ORDER BY {', '.join(out_cols)}")
    else:
        final = f"SELECT CASE WHEN EXISTS (SELECT 1 FROM {top}) THEN 1 ELSE 0 END AS holds"
    return "WITH " + ",\n".join([adom] + b.ctes) + "\n" + final


def load_sqlite(conn, a: ABox) -> None:
    """Create the four assertion tables and fill them from the ABox."""
    conn.executescript(SCHEMA)
    conn.executemany("INSERT INTO ca VALUES (?, ?)", [(c, x) for pos, c, x in a.concept_assertions if pos])
    conn.executemany("INSERT INTO nca VALUES (?, ?)", [(c, x) for pos, c, x in a.concept_assertions if not pos])
    conn.executemany("INSERT INTO ra VALUES (?, ?, ?)", [(p, s, o) for pos, p, s, o in a.role_assertions if pos])
    conn.executemany("INSERT INTO nra VALUES (?, ?, ?)",
                     [(p, s, o) for pos, p, s, o in a.role_assertions if not pos])


def run_sql(conn, f: FOQuery) -> Union[List[tuple], bool]:
    rows = conn.execute(emit_sql(f)).fetchall()
    if f.is_sentence:
        return bool(rows[0][0])
    return sorted(tuple(r) for r in rows)
