"""Polynomial-time satisfiability via completion-graph saturation.

The engine maintains a graph of quasi-elements.  Each element carries a
constraint system: a set of (variable : tag) facts where a variable
stands for a precisification and a tag is a concept, an individual, a
standpoint, or a formula.  Every system starts from the shared initial
block (one variable per standpoint, tagged with the universal
standpoint, Top, its own standpoint, and every axiom), which guarantees
all standpoints are inhabited.

Saturation applies twelve completion rules grouped into four priority
classes: local labelling (sharpening closure), local content, global
non-generating, and global generating.  A rule of a lower class only
ever fires when no higher class has an applicable rule.  Scheduling is
a FIFO worklist of obligations per class; obligations are enqueued
whenever a constraint, quasi-role, label, or element appears, and are
re-checked at pop time, so each applicability test is a constant-time
index lookup.  Deriving Bot anywhere is a clash and settles the input
as unsatisfiable; otherwise the saturated graph witnesses
satisfiability, and an explicit structure can be read off it via runs.

Step counts and graph sizes are checked against polynomial guards
(27·size^6 total steps, 3·size^2 elements, 2·size^2 variables and
2·size^3 constraints per system).  Breaching a guard signals an engine
bug, never an input error.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass

from .kb import (
    BOX, BOT, TOP, UNIVERSAL,
    And, Atom, Box, ConceptAssertion, ConceptFact, Diamond, Exists,
    Gci, InclusionFact, KnowledgeBase, RoleAssertion, RoleFact, Sharpening,
    concept_key, is_normal_form, kb_size, signature, strip_modality,
)
from .oracle import StandpointStructure

# Rule identifiers, named by what they do.
R_PREC = "prec"              # propagate sharpenings into standpoint tags
R_CONJ = "conj"              # assemble a known conjunction
R_SUBSUME = "subsume"        # apply an inclusion holding at a variable
R_BOX = "box"                # push boxed content to tagged variables
R_GLOBAL = "global"          # spread global tags across a system
R_ASSERT = "assertion"       # apply a concept assertion to its individual
R_DIAMOND = "diamond"        # create a witness variable for a diamond
R_BACK = "back"              # propagate a filler back over a quasi-role
R_ROLE_FWD = "role_fwd"      # realise a role assertion, subject side
R_ROLE_BWD = "role_bwd"      # realise a role assertion, object side
R_REUSE = "exists_reuse"     # satisfy an existential with an existing label
R_GEN = "exists_new"         # satisfy an existential with a new element

TABLEAU_RULES = (R_PREC, R_CONJ, R_SUBSUME, R_BOX, R_GLOBAL, R_ASSERT,
                 R_DIAMOND, R_BACK, R_ROLE_FWD, R_ROLE_BWD, R_REUSE, R_GEN)

_LL, _LC, _GN, _GG = 0, 1, 2, 3
_REQUEUED = object()


class InternalLimitError(Exception):
    """A polynomial guard was breached: an engine bug, not an input error."""


@dataclass(frozen=True)
class Variable:
    id: str
    origin: str  # "initial:<standpoint>" | "diamond" | "witness"


class _VarTags:
    """All tags of one variable within one constraint system."""
    __slots__ = ("concepts", "individuals", "standpoints", "formulas",
                 "incl_by_lhs", "asserts_by_ind", "role_facts")

    def __init__(self):
        self.concepts = set()
        self.individuals = set()
        self.standpoints = set()
        self.formulas = set()
        self.incl_by_lhs = {}     # lhs concept -> [rhs concepts]
        self.asserts_by_ind = {}  # individual -> [concepts]
        self.role_facts = []

    def count(self) -> int:
        return (len(self.concepts) + len(self.individuals)
                + len(self.standpoints) + len(self.formulas))


class _System:
    """One constraint system plus the indexes the rules look up."""
    __slots__ = ("vars", "by_standpoint", "conc_vars", "box_index",
                 "sharp_present", "sharp_by_lower", "g_tags", "count")

    def __init__(self):
        self.vars = {}            # var id -> _VarTags, insertion ordered
        self.by_standpoint = {}   # standpoint -> [var ids]
        self.conc_vars = {}       # concept -> [var ids]
        self.box_index = {}       # standpoint -> {payload tag: None}
        self.sharp_present = set()
        self.sharp_by_lower = {}  # lower -> [uppers]
        self.g_tags = {}          # global tags, insertion ordered
        self.count = 0


class CompletionGraph:
    """Elements, constraint systems, labels, and quasi-roles."""

    def __init__(self):
        self.sig = None           # Signature of the knowledge base
        self.systems = {}         # element id -> _System, creation ordered
        self.labels = {}          # element id -> [(concept, st_key, var)]
        self.label_index = {}     # (concept, st_key) -> [(element, var)]
        self.edge_set = set()     # (e, v, e2, v2, role)
        self.edge_order = []
        self.out_by_src = {}      # (e, v, role) -> [(e2, v2)]
        self.in_by_tgt = {}       # (e, v) -> [(e2, v2, role)]
        self.ind_elems = {}       # individual -> [element ids]
        self.variable_info = {}   # var id -> Variable
        self.clash = None         # (element, variable) once Bot appears

    # -- read access ---------------------------------------------------------

    def element_ids(self):
        return tuple(self.systems)

    def variables(self, elem):
        return tuple(self.systems[elem].vars)

    def tags(self, elem, var) -> _VarTags:
        return self.systems[elem].vars[var]

    def has_concept(self, elem, var, concept) -> bool:
        return concept in self.systems[elem].vars[var].concepts

    def st_key(self, elem, var) -> tuple:
        return tuple(sorted(self.systems[elem].vars[var].standpoints))

    def quasi_roles(self):
        return tuple(self.edge_order)

    def constraint_count(self, elem) -> int:
        return self.systems[elem].count

    def total_constraints(self) -> int:
        return sum(s.count for s in self.systems.values())


@dataclass
class Satisfiable:
    graph: CompletionGraph
    counters: dict
    steps: int


@dataclass
class Unsatisfiable:
    clash_element: str
    clash_variable: str
    trace: tuple
    graph: CompletionGraph
    counters: dict
    steps: int


Verdict = (Satisfiable, Unsatisfiable)


class Engine:
    """Saturation driver; create, ``initialize()``, then ``step()`` to
    saturation or run :func:`saturate` which does both."""

    def __init__(self, kb: KnowledgeBase, max_steps: int | None = None,
                 trace: bool = False, on_step=None, check: bool = False):
        if not is_normal_form(kb):
            raise ValueError("saturation requires a knowledge base in normal form")
        self.kb = kb
        self.sig = signature(kb)
        self.size = kb_size(kb)
        env_cap = os.environ.get("SEL_MAX_STEPS")
        default_cap = 27 * self.size ** 6
        self.max_steps = min(x for x in (max_steps, default_cap,
                                         int(env_cap) if env_cap else None)
                             if x is not None)
        self.max_elements = 3 * self.size ** 2
        self.max_vars = 2 * self.size ** 2
        self.max_constraints = 2 * self.size ** 3
        self.trace_enabled = trace
        self.on_step = on_step
        self.check = check

        self.graph = CompletionGraph()
        self.graph.sig = self.sig
        self.queues = (deque(), deque(), deque(), deque())
        self.counters = {r: 0 for r in TABLEAU_RULES}
        self.steps = 0
        self.trace: list = []
        self._var_counter = 0
        self._elem_counter = 0

        # Signature-derived lookup tables.
        self.conj_map = {}
        self.exists_terms = set()
        for term in sorted(self.sig.concept_closure, key=concept_key):
            if isinstance(term, Exists):
                self.exists_terms.add(term)
            elif isinstance(term, And):
                self.conj_map.setdefault(term.left, []).append((term.right, term))
                if term.right != term.left:
                    self.conj_map.setdefault(term.right, []).append((term.left, term))
        self.initial_vars = tuple(f"x_{s}" for s in sorted(self.sig.standpoints))
        self._s0 = []
        for s, var in zip(sorted(self.sig.standpoints), self.initial_vars):
            self._s0.append((var, ("s", UNIVERSAL)))
            self._s0.append((var, ("c", TOP)))
            self._s0.append((var, ("s", s)))
            for ax in kb.axioms:
                self._s0.append((var, ("f", ax)))

    # -- construction ----------------------------------------------------------

    def initialize(self):
        for s, var in zip(sorted(self.sig.standpoints), self.initial_vars):
            self.graph.variable_info[var] = Variable(var, f"initial:{s}")
        self._new_element("e_top")
        for var, tag in self._s0:
            self._add("e_top", var, tag)
        for a in sorted(self.sig.individuals):
            elem = f"e_{a}"
            self._new_element(elem)
            for var, tag in self._s0:
                self._add(elem, var, tag)
            for var in self.initial_vars:
                self._add(elem, var, ("i", a))
        return self.graph

    def _new_element(self, elem_id):
        if len(self.graph.systems) + 1 > self.max_elements:
            raise InternalLimitError(
                f"element count would exceed 3*size^2 = {self.max_elements}")
        self.graph.systems[elem_id] = _System()
        self.graph.labels[elem_id] = []

    def _fresh_var(self, origin):
        self._var_counter += 1
        var = f"v{self._var_counter}"
        self.graph.variable_info[var] = Variable(var, origin)
        return var

    def _fresh_elem(self):
        self._elem_counter += 1
        return f"n{self._elem_counter}"

    # -- constraint insertion with trigger wiring ------------------------------

    def _add(self, elem, var, tag) -> bool:
        sys = self.graph.systems[elem]
        vt = sys.vars.get(var)
        if vt is None:
            if len(sys.vars) + 1 > self.max_vars:
                raise InternalLimitError(
                    f"variables in one system would exceed 2*size^2 = {self.max_vars}")
            vt = _VarTags()
            sys.vars[var] = vt
            for g in sys.g_tags:
                self._enqueue(_LC, ("add", R_GLOBAL, elem, var, g))
        kind, payload = tag
        if kind == "s":
            if payload in vt.standpoints:
                return False
            vt.standpoints.add(payload)
            sys.by_standpoint.setdefault(payload, []).append(var)
            for upper in sys.sharp_by_lower.get(payload, ()):
                self._enqueue(_LL, ("add", R_PREC, elem, var, ("s", upper)))
            for boxed in sys.box_index.get(payload, ()):
                self._enqueue(_LC, ("add", R_BOX, elem, var, boxed))
        elif kind == "c":
            if payload in vt.concepts:
                return False
            vt.concepts.add(payload)
            sys.conc_vars.setdefault(payload, []).append(var)
            if payload == BOT and self.graph.clash is None:
                self.graph.clash = (elem, var)
            for partner, conj in self.conj_map.get(payload, ()):
                if partner in vt.concepts:
                    self._enqueue(_LC, ("add", R_CONJ, elem, var, ("c", conj)))
            for rhs in vt.incl_by_lhs.get(payload, ()):
                self._enqueue(_LC, ("add", R_SUBSUME, elem, var, ("c", rhs)))
            if isinstance(payload, Box):
                self._register_boxed(elem, sys, payload.standpoint, ("c", payload.inner))
            elif isinstance(payload, Diamond):
                self._enqueue(_LC, ("dia", elem, var, payload.standpoint, payload.inner))
            elif isinstance(payload, Exists):
                self._enqueue(_GN, ("ex", elem, var, payload.role, payload.filler))
            for (e2, v2, role) in self.graph.in_by_tgt.get((elem, var), ()):
                ex = Exists(role, payload)
                if ex in self.exists_terms:
                    self._enqueue(_GN, ("add", R_BACK, e2, v2, ("c", ex)))
        elif kind == "i":
            if payload in vt.individuals:
                return False
            vt.individuals.add(payload)
            elems = self.graph.ind_elems.setdefault(payload, [])
            if elem not in elems:
                elems.append(elem)
            self._register_gtag(elem, sys, tag, skip=var)
            for c in vt.asserts_by_ind.get(payload, ()):
                self._enqueue(_LC, ("add", R_ASSERT, elem, var, ("c", c)))
            for fact in vt.role_facts:
                self._wire_role(elem, var, fact, vt)
        else:  # formula
            if payload in vt.formulas:
                return False
            vt.formulas.add(payload)
            if isinstance(payload, Sharpening):
                pair = (payload.lower, payload.upper)
                if pair not in sys.sharp_present:
                    sys.sharp_present.add(pair)
                    sys.sharp_by_lower.setdefault(pair[0], []).append(pair[1])
                    for x2 in sys.by_standpoint.get(pair[0], ()):
                        self._enqueue(_LL, ("add", R_PREC, elem, x2, ("s", pair[1])))
                self._register_gtag(elem, sys, tag, skip=var)
            elif isinstance(payload, (Gci, ConceptAssertion, RoleAssertion)):
                assert payload.mode == BOX, "diamond axioms cannot reach saturation"
                self._register_boxed(elem, sys, payload.standpoint,
                                     ("f", strip_modality(payload)))
                self._register_gtag(elem, sys, tag, skip=var)
            elif isinstance(payload, InclusionFact):
                vt.incl_by_lhs.setdefault(payload.lhs, []).append(payload.rhs)
                if payload.lhs in vt.concepts:
                    self._enqueue(_LC, ("add", R_SUBSUME, elem, var, ("c", payload.rhs)))
            elif isinstance(payload, ConceptFact):
                vt.asserts_by_ind.setdefault(payload.individual, []).append(payload.concept)
                if payload.individual in vt.individuals:
                    self._enqueue(_LC, ("add", R_ASSERT, elem, var, ("c", payload.concept)))
            elif isinstance(payload, RoleFact):
                vt.role_facts.append(payload)
                self._wire_role(elem, var, payload, vt)
            else:
                raise TypeError(f"unknown formula payload: {payload!r}")
        sys.count += 1
        if sys.count > self.max_constraints:
            raise InternalLimitError(
                f"constraints in one system would exceed 2*size^3 = {self.max_constraints}")
        return True

    def _register_boxed(self, elem, sys, standpoint, payload_tag):
        index = sys.box_index.setdefault(standpoint, {})
        if payload_tag in index:
            return
        index[payload_tag] = None
        for x2 in sys.by_standpoint.get(standpoint, ()):
            self._enqueue(_LC, ("add", R_BOX, elem, x2, payload_tag))

    def _register_gtag(self, elem, sys, tag, skip):
        if tag in sys.g_tags:
            return
        sys.g_tags[tag] = None
        for x2 in sys.vars:
            if x2 != skip:
                self._enqueue(_LC, ("add", R_GLOBAL, elem, x2, tag))

    def _wire_role(self, elem, var, fact, vt):
        """Enqueue role-assertion obligations for a variable that now has
        both the assertion body and a matching individual tag."""
        if fact.subject in vt.individuals:
            for e2 in self.graph.ind_elems.get(fact.target, ()):
                self._enqueue(_GN, ("rr", True, elem, var, fact, e2))
        if fact.target in vt.individuals:
            for e2 in self.graph.ind_elems.get(fact.subject, ()):
                self._enqueue(_GN, ("rr", False, elem, var, fact, e2))

    def _enqueue(self, queue, ob):
        self.queues[queue].append(ob)

    # -- quasi-roles -----------------------------------------------------------

    def _add_edge(self, e, v, e2, v2, role) -> bool:
        edge = (e, v, e2, v2, role)
        if edge in self.graph.edge_set:
            return False
        self.graph.edge_set.add(edge)
        self.graph.edge_order.append(edge)
        self.graph.out_by_src.setdefault((e, v, role), []).append((e2, v2))
        self.graph.in_by_tgt.setdefault((e2, v2), []).append((e, v, role))
        for c in self.graph.systems[e2].vars[v2].concepts:
            ex = Exists(role, c)
            if ex in self.exists_terms:
                self._enqueue(_GN, ("add", R_BACK, e, v, ("c", ex)))
        return True

    # -- the step relation -----------------------------------------------------

    def step(self):
        """Apply one rule of the highest priority class with an applicable
        rule; returns its identifier, or None once saturated."""
        while True:
            for qi in range(4):
                if self.queues[qi]:
                    ob = self.queues[qi].popleft()
                    break
            else:
                return None
            applied = self._process(ob, qi)
            if applied is None or applied is _REQUEUED:
                continue
            self.steps += 1
            self.counters[applied] += 1
            if self.steps > self.max_steps:
                raise InternalLimitError(
                    f"step count exceeded the {self.max_steps} guard")
            if self.check:
                self._check_invariants()
            return applied

    def _process(self, ob, qi):
        kind = ob[0]
        if kind == "add":
            _, rule, elem, var, tag = ob
            if self._add(elem, var, tag):
                self._emit(rule, elem, var, tag)
                return rule
            return None
        if kind == "dia":
            _, elem, var, s, concept = ob
            sys = self.graph.systems[elem]
            if self._diamond_satisfied(sys, s, concept):
                return None
            w = self._fresh_var("diamond")
            for tag in (("s", UNIVERSAL), ("s", s), ("c", TOP), ("c", concept)):
                self._add(elem, w, tag)
            self._emit(R_DIAMOND, elem, w, ("c", concept))
            return R_DIAMOND
        if kind == "ex":
            return self._process_exists(ob, qi)
        if kind == "rr":
            _, forward, elem, var, fact, other = ob
            if forward:
                src, tgt = elem, other
            else:
                src, tgt = other, elem
            if (src, var, tgt, var, fact.role) in self.graph.edge_set:
                return None
            donor = self.graph.systems[elem].vars[var]
            self._add(other, var, ("c", TOP))
            for s in sorted(donor.standpoints):
                self._add(other, var, ("s", s))
            self._add_edge(src, var, tgt, var, fact.role)
            rule = R_ROLE_FWD if forward else R_ROLE_BWD
            self._emit(rule, src, var, ("edge", (src, var, tgt, var, fact.role)))
            return rule
        raise AssertionError(f"unknown obligation {ob!r}")

    def _diamond_satisfied(self, sys, s, concept) -> bool:
        with_c = sys.conc_vars.get(concept, ())
        with_s = sys.by_standpoint.get(s, ())
        if len(with_c) <= len(with_s):
            return any(s in sys.vars[x].standpoints for x in with_c)
        return any(concept in sys.vars[x].concepts for x in with_s)

    def _process_exists(self, ob, qi):
        _, elem, var, role, concept = ob
        st_key = self.graph.st_key(elem, var)
        entries = self.graph.label_index.get((concept, st_key), ())
        eligible = [(e2, x2) for (e2, x2) in entries if e2 != elem or x2 == var]
        if any((elem, var, e2, x2, role) in self.graph.edge_set
               for (e2, x2) in eligible):
            return None
        if qi == _GN:
            if eligible:
                e2, x2 = eligible[0]
                self._add_edge(elem, var, e2, x2, role)
                self._emit(R_REUSE, elem, var, ("edge", (elem, var, e2, x2, role)))
                return R_REUSE
            self._enqueue(_GG, ob)
            return _REQUEUED
        if eligible:
            self._enqueue(_GN, ob)
            return _REQUEUED
        new_elem = self._fresh_elem()
        self._new_element(new_elem)
        w = self._fresh_var("witness")
        label = (concept, st_key, w)
        self.graph.labels[new_elem].append(label)
        self.graph.label_index.setdefault((concept, st_key), []).append((new_elem, w))
        for v0, tag in self._s0:
            self._add(new_elem, v0, tag)
        self._add(new_elem, w, ("s", UNIVERSAL))
        for s in st_key:
            self._add(new_elem, w, ("s", s))
        self._add(new_elem, w, ("c", TOP))
        self._add(new_elem, w, ("c", concept))
        self._add_edge(elem, var, new_elem, w, role)
        self._emit(R_GEN, new_elem, w, ("c", concept))
        return R_GEN

    def _emit(self, rule, elem, var, tag):
        if not (self.trace_enabled or self.on_step):
            return
        from .textio import render_concept, render_formula
        kind = tag[0]
        if kind == "c":
            added = render_concept(tag[1])
        elif kind == "s":
            added = tag[1]
        elif kind == "i":
            added = tag[1]
        elif kind == "edge":
            e, v, e2, v2, role = tag[1]
            added = f"{role} @ ({v},{v2}) : {e} -> {e2}"
        else:
            added = render_formula(tag[1])
        record = {"rule": rule, "element": elem, "variable": var, "added": added}
        if self.trace_enabled:
            self.trace.append(record)
        if self.on_step:
            self.on_step(record)

    # -- invariant checking (test builds) ---------------------------------------

    def _check_invariants(self):
        g = self.graph
        for (e, v, e2, v2, _role) in g.edge_order:
            assert g.systems[e].vars[v].standpoints == g.systems[e2].vars[v2].standpoints, \
                "quasi-role endpoints disagree on standpoints"
        for elem, labels in g.labels.items():
            for (concept, st_key, var) in labels:
                vt = g.systems[elem].vars[var]
                assert concept in vt.concepts, "label variable lost its concept"
                assert tuple(sorted(vt.standpoints)) == st_key, \
                    "label standpoint set drifted"


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def init_graph(kb: KnowledgeBase) -> CompletionGraph:
    """The initial completion graph: one element for the anonymous part,
    one per individual, no labels, no quasi-roles, no rule applied yet."""
    return Engine(kb).initialize()


def saturate(kb: KnowledgeBase, max_steps: int | None = None, trace: bool = False,
             on_step=None, check: bool = False):
    """Run the completion rules to a verdict.

    Stops at the first clash (unsatisfiable) or at saturation
    (satisfiable, carrying the finished graph).  Deterministic: the
    same input always produces the same graph and counters.
    """
    engine = Engine(kb, max_steps=max_steps, trace=trace, on_step=on_step,
                    check=check)
    engine.initialize()
    while True:
        if engine.graph.clash is not None:
            elem, var = engine.graph.clash
            return Unsatisfiable(elem, var, tuple(engine.trace), engine.graph,
                                 dict(engine.counters), engine.steps)
        if engine.step() is None:
            break
    return Satisfiable(engine.graph, dict(engine.counters), engine.steps)


def check_coherence(cg: CompletionGraph) -> bool:
    """Global well-formedness of a saturated graph.

    Each individual has exactly one element whose variables all carry
    its tag; all systems exhibit the same standpoint signatures; and
    variables with equal signatures agree on their formula tags.
    """
    individuals = (sorted(cg.sig.individuals) if cg.sig is not None
                   else sorted({a for sys in cg.systems.values()
                                for vt in sys.vars.values()
                                for a in vt.individuals}))
    for a in individuals:
        owners = [e for e, sys in cg.systems.items()
                  if sys.vars and all(a in vt.individuals for vt in sys.vars.values())]
        if len(owners) != 1:
            return False
    key_sets = []
    for sys in cg.systems.values():
        key_sets.append({tuple(sorted(vt.standpoints)) for vt in sys.vars.values()})
    if any(ks != key_sets[0] for ks in key_sets[1:]):
        return False
    formulas_by_key = {}
    for sys in cg.systems.values():
        for vt in sys.vars.values():
            key = tuple(sorted(vt.standpoints))
            expected = formulas_by_key.setdefault(key, vt.formulas)
            if vt.formulas != expected:
                return False
    return True


@dataclass(frozen=True)
class Run:
    """One variable choice per element, compatible across quasi-roles."""
    assignment: tuple  # ((element, variable), ...) in element order

    def as_dict(self) -> dict:
        return dict(self.assignment)


@dataclass
class RunEnumeration:
    runs: tuple
    capped: bool


def _forced_map(cg: CompletionGraph) -> dict:
    """(element, variable) -> {target element: forced variable}."""
    forced = {}
    for (e, v, e2, v2, _role) in cg.edge_order:
        d = forced.setdefault((e, v), {})
        if e2 in d and d[e2] != v2:
            d[e2] = None  # contradictory forcings: v is never chosen
        else:
            d.setdefault(e2, v2)
    return forced


def enumerate_runs(cg: CompletionGraph, cap: int = 10_000) -> RunEnumeration:
    """All runs of a saturated clash-free graph, up to ``cap``.

    A run picks one variable per element such that all picks share one
    standpoint signature, quasi-roles force their endpoint pairs, and
    every existential tag on a picked variable is realised by an edge
    into another pick.  Backtracking propagates the forcing relation
    first, so conflicts prune early.
    """
    elems = list(cg.systems)
    forced = _forced_map(cg)

    keys = sorted({tuple(sorted(vt.standpoints))
                   for sys in cg.systems.values() for vt in sys.vars.values()})
    runs: list = []
    capped = False

    def propagate(assignment, e, v):
        """Assign e -> v plus everything it forces; None on conflict."""
        touched = []
        stack = [(e, v)]
        while stack:
            ei, vi = stack.pop()
            bound = assignment.get(ei)
            if bound is not None:
                if bound != vi:
                    for t in touched:
                        del assignment[t]
                    return None
                continue
            assignment[ei] = vi
            touched.append(ei)
            for e2, v2 in forced.get((ei, vi), {}).items():
                if v2 is None:
                    for t in touched:
                        del assignment[t]
                    return None
                stack.append((e2, v2))
        return touched

    def c3_ok(assignment) -> bool:
        for e, v in assignment.items():
            for c in cg.systems[e].vars[v].concepts:
                if not isinstance(c, Exists):
                    continue
                hits = cg.out_by_src.get((e, v, c.role), ())
                if not any(assignment.get(e2) == v2
                           and c.filler in cg.systems[e2].vars[v2].concepts
                           for (e2, v2) in hits):
                    return False
        return True

    def extend(i, key, assignment):
        nonlocal capped
        if capped:
            return
        if i == len(elems):
            if c3_ok(assignment):
                if len(runs) >= cap:
                    capped = True
                    return
                runs.append(Run(tuple((e, assignment[e]) for e in elems)))
            return
        e = elems[i]
        if e in assignment:
            extend(i + 1, key, assignment)
            return
        sys = cg.systems[e]
        for v, vt in sys.vars.items():
            if tuple(sorted(vt.standpoints)) != key:
                continue
            touched = propagate(assignment, e, v)
            if touched is None:
                continue
            extend(i + 1, key, assignment)
            for t in touched:
                del assignment[t]
            if capped:
                return

    for key in keys:
        extend(0, key, {})
        if capped:
            break
    return RunEnumeration(tuple(runs), capped)


def _vocabulary(cg: CompletionGraph):
    if cg.sig is not None:
        return (set(cg.sig.standpoints),
                {c.name for c in cg.sig.basic_concepts if isinstance(c, Atom)},
                set(cg.sig.roles))
    standpoints, basic, roles = set(), set(), set()
    for sys in cg.systems.values():
        for vt in sys.vars.values():
            standpoints.update(vt.standpoints)
            for c in vt.concepts:
                if isinstance(c, Atom):
                    basic.add(c.name)
                elif isinstance(c, Exists):
                    roles.add(c.role)
    for (_e, _v, _e2, _v2, role) in cg.edge_order:
        roles.add(role)
    return standpoints, basic, roles


def extract_model(cg: CompletionGraph, cap: int = 10_000) -> StandpointStructure | None:
    """Read an explicit structure off a saturated, clash-free, coherent
    graph.  Returns None when run enumeration hits the cap.

    Precisifications are runs; a standpoint collects the runs whose
    picked variables carry its tag; concept and role extensions come
    from the picked variables' tags and the quasi-roles.

    A saturated graph can contain variables no run reaches: choosing a
    witness variable at its element may contradict what a quasi-role
    forces from elsewhere, yet the facts on that witness still have to
    hold somewhere in a model.  When that happens the domain is doubled
    into two layers and every uncovered variable contributes a pair of
    swap precisifications: one layer shows the uncovered variable's
    forcing closure while the other follows a same-class reference run
    and serves the existential successors at the boundary, and the
    mirrored twin discharges the diamond obligations of the first.
    """
    enum = enumerate_runs(cg, cap)
    if enum.capped:
        return None
    runs = enum.runs
    elems = tuple(cg.systems)
    standpoints, basic, roles = _vocabulary(cg)

    covered = set()
    for run in runs:
        covered.update(run.assignment)
    uncovered = [(e, v) for e in elems for v in cg.systems[e].vars
                 if (e, v) not in covered]

    if not uncovered:
        return _plain_structure(cg, runs, elems, standpoints, basic, roles)
    return _layered_structure(cg, runs, elems, standpoints, basic, roles, uncovered)


def _plain_structure(cg, runs, elems, standpoints, basic, roles):
    first = elems[0]
    sigma = {}
    for s in sorted(standpoints):
        member = [i for i, run in enumerate(runs)
                  if s in cg.systems[first].vars[run.as_dict()[first]].standpoints]
        sigma[s] = frozenset(member)
    concepts = {}
    role_ext = {}
    for i, run in enumerate(runs):
        picks = run.as_dict()
        concepts[i] = {
            name: frozenset(e for e in elems
                            if Atom(name) in cg.systems[e].vars[picks[e]].concepts)
            for name in sorted(basic)
        }
        role_ext[i] = {
            r: frozenset((e, e2) for (e, v, e2, v2, rr) in cg.edge_order
                         if rr == r and picks[e] == v and picks[e2] == v2)
            for r in sorted(roles)
        }
    individuals = {a: owners[0] for a, owners in sorted(cg.ind_elems.items())}
    return StandpointStructure(
        domain=elems,
        precisifications=tuple(range(len(runs))),
        sigma=sigma,
        concepts=concepts,
        roles=role_ext,
        individuals=individuals,
    )


def _layered_structure(cg, runs, elems, standpoints, basic, roles, uncovered):
    forced = _forced_map(cg)

    def closure(e0, v0):
        out = {}
        stack = [(e0, v0)]
        while stack:
            e, v = stack.pop()
            if e in out:
                assert out[e] == v, "forcing closure of a single seed conflicted"
                continue
            out[e] = v
            for e2, v2 in forced.get((e, v), {}).items():
                assert v2 is not None
                stack.append((e2, v2))
        return out

    def key_of(e, v):
        return tuple(sorted(cg.systems[e].vars[v].standpoints))

    ref_run = {}
    for run in runs:
        picks = run.as_dict()
        ref_run.setdefault(key_of(elems[0], picks[elems[0]]), picks)

    # One content map per precisification and layer: pi -> (content0, content1).
    worlds = []
    for run in runs:
        picks = run.as_dict()
        worlds.append((picks, picks))
    for (e0, v0) in uncovered:
        key = key_of(e0, v0)
        base = ref_run.get(key)
        assert base is not None, f"no reference run for class {key}"
        over = dict(base)
        over.update(closure(e0, v0))
        worlds.append((over, base))
        worlds.append((base, over))

    domain = tuple((e, layer) for e in elems for layer in (0, 1))

    sigma = {}
    first = elems[0]
    for s in sorted(standpoints):
        sigma[s] = frozenset(
            i for i, (c0, _c1) in enumerate(worlds)
            if s in cg.systems[first].vars[c0[first]].standpoints)

    concepts = {}
    role_ext = {}
    for i, (c0, c1) in enumerate(worlds):
        content = (c0, c1)
        concepts[i] = {
            name: frozenset((e, layer) for (e, layer) in domain
                            if Atom(name) in cg.systems[e].vars[content[layer][e]].concepts)
            for name in sorted(basic)
        }
        ext = {r: set() for r in sorted(roles)}
        for (e, v, e2, v2, r) in cg.edge_order:
            for layer in (0, 1):
                this, other = content[layer], content[1 - layer]
                if this[e] != v:
                    continue
                if this[e2] == v2:
                    ext[r].add(((e, layer), (e2, layer)))
                elif other[e2] == v2:
                    # Boundary: the overlay displaced the forced target on
                    # this layer; the twin layer still shows it.
                    ext[r].add(((e, layer), (e2, 1 - layer)))
        role_ext[i] = {r: frozenset(pairs) for r, pairs in ext.items()}
    individuals = {a: (owners[0], 0) for a, owners in sorted(cg.ind_elems.items())}
    return StandpointStructure(
        domain=domain,
        precisifications=tuple(range(len(worlds))),
        sigma=sigma,
        concepts=concepts,
        roles=role_ext,
        individuals=individuals,
    )
