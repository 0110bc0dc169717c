"""Brute-force semantics: explicit structures, evaluation, model search.

This module is the ground truth the saturation engine is tested against.
A structure fixes a finite domain, a finite set of precisifications, a
non-empty precisification set per standpoint (with the universal
standpoint covering everything), and one ordinary interpretation per
precisification; individual names are rigid.

``search_model`` enumerates structures of bounded size in a canonical
order.  It backtracks over interpretation "rows" (one concept extension
or one role out-neighbourhood at one precisification) and prunes with a
three-valued interval evaluation: a partially assigned structure is
abandoned as soon as some axiom is violated under every completion.
The search is sound (anything returned is verified to satisfy the
input) and exhaustive within the given bounds unless the node budget
runs out, which is reported as a distinct outcome.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .kb import (
    BOX, UNIVERSAL,
    And, Atom, Bot, Box, ConceptAssertion, ConceptTerm, Diamond, Exists,
    Gci, KnowledgeBase, RoleAssertion, Sharpening, Top, signature,
)


class VocabularyError(KeyError):
    """A concept, role, or individual name missing from a structure."""


class BudgetExceeded(Exception):
    """The model search ran out of its node budget."""


@dataclass
class StandpointStructure:
    """An explicit finite standpoint structure.

    ``concepts[p][A]`` is the extension of concept name A at
    precisification p; ``roles[p][R]`` the extension of role name R;
    ``individuals`` maps each individual name to its (rigid) element.
    """
    domain: tuple
    precisifications: tuple
    sigma: dict
    concepts: dict
    roles: dict
    individuals: dict

    def validate(self):
        assert self.domain, "domain must be non-empty"
        pis = set(self.precisifications)
        assert self.sigma.get(UNIVERSAL) == frozenset(pis), \
            "the universal standpoint must cover all precisifications"
        for s, ps in self.sigma.items():
            assert ps and ps <= pis, f"sigma({s}) must be a non-empty subset"
        for a, elem in self.individuals.items():
            assert elem in self.domain, f"individual {a} outside the domain"
        return self

    def to_json_obj(self) -> dict:
        dom = [str(d) for d in self.domain]
        pis = [str(p) for p in self.precisifications]
        return {
            "domain": dom,
            "precisifications": pis,
            "sigma": {s: sorted(str(p) for p in ps)
                      for s, ps in sorted(self.sigma.items())},
            "individuals": {a: str(e) for a, e in sorted(self.individuals.items())},
            "interpretations": {
                str(p): {
                    "concepts": {c: sorted(str(d) for d in ext)
                                 for c, ext in sorted(self.concepts[p].items())},
                    "roles": {r: sorted([str(x), str(y)] for x, y in ext)
                              for r, ext in sorted(self.roles[p].items())},
                }
                for p in self.precisifications
            },
        }


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_concept(struct: StandpointStructure, pi, concept: ConceptTerm,
                 _cache: dict | None = None) -> frozenset:
    """Extension of a concept term at one precisification.

    Modalised subterms are evaluated over the standpoint's
    precisification set and therefore come out identical at every
    precisification.  Unknown names raise VocabularyError.
    """
    cache = _cache if _cache is not None else {}
    return _eval(struct, pi, concept, cache)


def _eval(st, pi, c, cache):
    key = (pi, c)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if isinstance(c, Top):
        out = frozenset(st.domain)
    elif isinstance(c, Bot):
        out = frozenset()
    elif isinstance(c, Atom):
        try:
            out = frozenset(st.concepts[pi][c.name])
        except KeyError:
            raise VocabularyError(f"unknown concept name {c.name!r}") from None
    elif isinstance(c, And):
        out = _eval(st, pi, c.left, cache) & _eval(st, pi, c.right, cache)
    elif isinstance(c, Exists):
        try:
            edges = st.roles[pi][c.role]
        except KeyError:
            raise VocabularyError(f"unknown role name {c.role!r}") from None
        filler = _eval(st, pi, c.filler, cache)
        out = frozenset(x for x, y in edges if y in filler)
    elif isinstance(c, (Box, Diamond)):
        try:
            worlds = st.sigma[c.standpoint]
        except KeyError:
            raise VocabularyError(f"unknown standpoint {c.standpoint!r}") from None
        parts = [_eval(st, w, c.inner, cache) for w in sorted(worlds, key=str)]
        if isinstance(c, Diamond):
            out = frozenset().union(*parts)
        else:
            out = frozenset(st.domain)
            for p in parts:
                out &= p
    else:
        raise TypeError(f"not a concept term: {c!r}")
    cache[key] = out
    return out


def _individual(st, name):
    try:
        return st.individuals[name]
    except KeyError:
        raise VocabularyError(f"unknown individual {name!r}") from None


def satisfies(struct: StandpointStructure, kb: KnowledgeBase) -> bool:
    """Check every axiom of a knowledge base against a structure."""
    cache: dict = {}
    for ax in kb.axioms:
        if not _holds(struct, ax, cache):
            return False
    return True


def _holds(st, ax, cache) -> bool:
    if isinstance(ax, Sharpening):
        try:
            return st.sigma[ax.lower] <= st.sigma[ax.upper]
        except KeyError as e:
            raise VocabularyError(f"unknown standpoint {e.args[0]!r}") from None
    worlds = st.sigma.get(ax.standpoint)
    if worlds is None:
        raise VocabularyError(f"unknown standpoint {ax.standpoint!r}")
    universal = ax.mode == BOX
    if isinstance(ax, Gci):
        checks = (_eval(st, w, ax.lhs, cache) <= _eval(st, w, ax.rhs, cache)
                  for w in worlds)
    elif isinstance(ax, ConceptAssertion):
        elem = _individual(st, ax.individual)
        checks = (elem in _eval(st, w, ax.concept, cache) for w in worlds)
    elif isinstance(ax, RoleAssertion):
        pair = (_individual(st, ax.subject), _individual(st, ax.target))
        try:
            checks = (pair in st.roles[w][ax.role] for w in worlds)
        except KeyError:
            raise VocabularyError(f"unknown role name {ax.role!r}") from None
    else:
        raise TypeError(f"not an axiom: {ax!r}")
    return all(checks) if universal else any(checks)


def extend_structure(struct: StandpointStructure, kb: KnowledgeBase) -> StandpointStructure:
    """Fill in default interpretations for names the structure lacks.

    Normalisation deletes trivially-true axioms, so a name occurring only
    in deleted axioms has no interpretation in a structure extracted from
    the saturated graph.  Such names are unconstrained: any extension
    satisfies the deleted axioms.  Missing standpoints get the full
    precisification set, missing concepts and roles the empty extension,
    missing individuals the first domain element.
    """
    sig = signature(kb)
    sigma = dict(struct.sigma)
    for s in sorted(sig.standpoints):
        sigma.setdefault(s, frozenset(struct.precisifications))
    concept_names = sorted(a.name for a in sig.basic_concepts if isinstance(a, Atom))
    concepts = {p: dict(struct.concepts[p]) for p in struct.precisifications}
    roles = {p: dict(struct.roles[p]) for p in struct.precisifications}
    for p in struct.precisifications:
        for name in concept_names:
            concepts[p].setdefault(name, frozenset())
        for role in sorted(sig.roles):
            roles[p].setdefault(role, frozenset())
    individuals = dict(struct.individuals)
    for a in sorted(sig.individuals):
        individuals.setdefault(a, struct.domain[0])
    return StandpointStructure(
        domain=struct.domain,
        precisifications=struct.precisifications,
        sigma=sigma,
        concepts=concepts,
        roles=roles,
        individuals=individuals,
    )


# ---------------------------------------------------------------------------
# Bounded model search
# ---------------------------------------------------------------------------

FOUND = "found"
NO_MODEL = "none-within-bounds"
BUDGET = "budget-exceeded"

#: Signature limits beyond which enumeration is refused outright.  These
#: are deliberately loose; the node budget is the effective brake.
_MAX_CONCEPTS = 24
_MAX_ROLES = 6
_MAX_INDIVIDUALS = 5
_MAX_STANDPOINTS = 16


@dataclass
class SearchOutcome:
    status: str
    structure: StandpointStructure | None = None
    nodes: int = 0


@dataclass
class _Partial:
    """Search state: fully assigned rows plus bookkeeping for bounds."""
    n_dom: int
    worlds: tuple
    sigma: dict
    individuals: dict
    concept_rows: dict = field(default_factory=dict)   # (pi, A) -> frozenset
    role_rows: dict = field(default_factory=dict)      # (pi, R, src) -> frozenset


class _Search:
    def __init__(self, kb, sig, budget, universal_star):
        self.kb = kb
        self.concept_names = sorted(a.name for a in sig.basic_concepts
                                    if isinstance(a, Atom))
        self.role_names = sorted(sig.roles)
        self.ind_names = sorted(sig.individuals)
        self.standpoints = sorted(sig.standpoints)
        self.budget = budget
        self.nodes = 0
        self.universal_star = universal_star

    def spend(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded()

    # -- interval evaluation ------------------------------------------------

    def bounds(self, p: _Partial, pi, c, cache):
        """Lower/upper approximation of a concept extension."""
        key = (pi, c)
        hit = cache.get(key)
        if hit is not None:
            return hit
        dom = frozenset(range(p.n_dom))
        if isinstance(c, Top):
            out = (dom, dom)
        elif isinstance(c, Bot):
            out = (frozenset(), frozenset())
        elif isinstance(c, Atom):
            row = p.concept_rows.get((pi, c.name))
            out = (row, row) if row is not None else (frozenset(), dom)
        elif isinstance(c, And):
            l1, u1 = self.bounds(p, pi, c.left, cache)
            l2, u2 = self.bounds(p, pi, c.right, cache)
            out = (l1 & l2, u1 & u2)
        elif isinstance(c, Exists):
            lf, uf = self.bounds(p, pi, c.filler, cache)
            lo, up = set(), set()
            for src in range(p.n_dom):
                row = p.role_rows.get((pi, c.role, src))
                if row is None:
                    if uf:
                        up.add(src)
                else:
                    if row & lf:
                        lo.add(src)
                    if row & uf:
                        up.add(src)
            out = (frozenset(lo), frozenset(up))
        elif isinstance(c, (Box, Diamond)):
            parts = [self.bounds(p, w, c.inner, cache) for w in p.sigma[c.standpoint]]
            if isinstance(c, Diamond):
                out = (frozenset().union(*(l for l, _ in parts)),
                       frozenset().union(*(u for _, u in parts)))
            else:
                lo, up = dom, dom
                for l, u in parts:
                    lo, up = lo & l, up & u
                out = (lo, up)
        else:
            raise TypeError(f"not a concept term: {c!r}")
        cache[key] = out
        return out

    def _violated_at(self, p, pi, ax, cache) -> bool:
        """Definitely violated at one precisification, whatever is left."""
        if isinstance(ax, Gci):
            lo_l, _ = self.bounds(p, pi, ax.lhs, cache)
            _, up_r = self.bounds(p, pi, ax.rhs, cache)
            return not lo_l <= up_r
        if isinstance(ax, ConceptAssertion):
            _, up = self.bounds(p, pi, ax.concept, cache)
            return p.individuals[ax.individual] not in up
        if isinstance(ax, RoleAssertion):
            pair = (p.individuals[ax.subject], p.individuals[ax.target])
            row = p.role_rows.get((pi, ax.role, pair[0]))
            return row is not None and pair[1] not in row
        raise TypeError(ax)

    def consistent(self, p: _Partial) -> bool:
        cache: dict = {}
        for ax in self.kb.axioms:
            if isinstance(ax, Sharpening):
                continue  # settled when sigma was chosen
            worlds = p.sigma[ax.standpoint]
            if ax.mode == BOX:
                if any(self._violated_at(p, w, ax, cache) for w in worlds):
                    return False
            else:
                if all(self._violated_at(p, w, ax, cache) for w in worlds):
                    return False
        return True

    # -- enumeration ---------------------------------------------------------

    def sigma_choices(self, worlds):
        """Assignments of non-empty world sets, canonical up to renaming.

        Each precisification gets a membership bitmask over the named
        standpoints; mask sequences are enumerated in non-increasing
        order, which keeps one representative per permutation class.
        With ``universal_star`` (the default) the universal standpoint is
        pinned to the full precisification set; otherwise it is
        enumerated like any other standpoint.
        """
        named = [s for s in self.standpoints if s != UNIVERSAL]
        if not self.universal_star:
            named = named + [UNIVERSAL]
        masks = sorted(range(2 ** len(named)), reverse=True)
        for seq in itertools.combinations_with_replacement(masks, len(worlds)):
            sigma = {} if not self.universal_star else {UNIVERSAL: frozenset(worlds)}
            ok = True
            for i, s in enumerate(named):
                ps = frozenset(w for w, m in zip(worlds, seq) if m >> i & 1)
                if not ps:
                    ok = False
                    break
                sigma[s] = ps
            if ok and self._sharp_ok(sigma):
                yield sigma

    def _sharp_ok(self, sigma) -> bool:
        return all(sigma[ax.lower] <= sigma[ax.upper] for ax in self.kb.sbox)

    def individual_choices(self, n_dom):
        """First-use placements: the k-th individual may only use an element
        index at most one past the largest index used so far."""
        def rec(i, used, acc):
            if i == len(self.ind_names):
                yield dict(acc)
                return
            limit = min(used + 1, n_dom - 1)
            for d in range(limit + 1):
                acc.append((self.ind_names[i], d))
                yield from rec(i + 1, max(used, d), acc)
                acc.pop()
        yield from rec(0, -1, [])

    def rows(self, n_dom, worlds):
        out = []
        for pi in worlds:
            for a in self.concept_names:
                out.append(("c", pi, a))
            for r in self.role_names:
                for src in range(n_dom):
                    out.append(("r", pi, r, src))
        return out

    def assign(self, p, rows, subsets, idx):
        if idx == len(rows):
            yield self.finish(p)
            return
        self.spend()
        row = rows[idx]
        for value in subsets:
            if row[0] == "c":
                p.concept_rows[(row[1], row[2])] = value
            else:
                p.role_rows[(row[1], row[2], row[3])] = value
            if self.consistent(p):
                yield from self.assign(p, rows, subsets, idx + 1)
        if row[0] == "c":
            del p.concept_rows[(row[1], row[2])]
        else:
            del p.role_rows[(row[1], row[2], row[3])]

    def finish(self, p: _Partial) -> StandpointStructure:
        concepts = {pi: {a: p.concept_rows[(pi, a)] for a in self.concept_names}
                    for pi in p.worlds}
        roles = {pi: {r: frozenset((src, dst)
                                   for src in range(p.n_dom)
                                   for dst in p.role_rows[(pi, r, src)])
                      for r in self.role_names}
                 for pi in p.worlds}
        return StandpointStructure(
            domain=tuple(range(p.n_dom)),
            precisifications=p.worlds,
            sigma=dict(p.sigma),
            concepts=concepts,
            roles=roles,
            individuals=dict(p.individuals),
        )

    def run(self, max_domain, max_prec):
        for n_dom, n_prec in sorted(
                itertools.product(range(1, max_domain + 1), range(1, max_prec + 1)),
                key=lambda t: (t[0] + t[1], t[0])):
            worlds = tuple(range(n_prec))
            rows = self.rows(n_dom, worlds)
            subsets = _subsets_of(n_dom)
            for sigma in self.sigma_choices(worlds):
                for individuals in self.individual_choices(n_dom):
                    p = _Partial(n_dom=n_dom, worlds=worlds, sigma=sigma,
                                 individuals=individuals)
                    if not self.consistent(p):
                        continue
                    for structure in self.assign(p, rows, subsets, 0):
                        return structure
        return None


def _subsets_of(n: int):
    dom = range(n)
    return [frozenset(d for d in dom if mask >> d & 1) for mask in range(2 ** n)]


def search_model(kb: KnowledgeBase, max_domain: int, max_precisifications: int,
                 budget: int = 200_000, universal_star: bool = True) -> SearchOutcome:
    """Look for a model with at most the given domain/precisification sizes.

    Returns FOUND with a verified structure, NO_MODEL when the bounded
    space is exhausted, or BUDGET when the node budget ran out first.
    Enumeration order is canonical, so results are deterministic.
    """
    sig = signature(kb)
    n_concepts = sum(1 for c in sig.basic_concepts if isinstance(c, Atom))
    if (n_concepts > _MAX_CONCEPTS or len(sig.roles) > _MAX_ROLES
            or len(sig.individuals) > _MAX_INDIVIDUALS
            or len(sig.standpoints) > _MAX_STANDPOINTS):
        return SearchOutcome(status=BUDGET, nodes=0)
    if len(sig.individuals) > max_domain:
        max_domain = len(sig.individuals)
    search = _Search(kb, sig, budget, universal_star)
    try:
        structure = search.run(max_domain, max_precisifications)
    except BudgetExceeded:
        return SearchOutcome(status=BUDGET, nodes=search.nodes)
    if structure is None:
        return SearchOutcome(status=NO_MODEL, nodes=search.nodes)
    structure.validate()
    assert satisfies(structure, kb), "search returned a non-model"
    return SearchOutcome(status=FOUND, structure=structure, nodes=search.nodes)
