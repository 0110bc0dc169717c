"""Core abstract syntax for standpoint-enhanced EL knowledge bases.

A knowledge base is a triple of sharpening statements (SBox), modalised
general concept inclusions (TBox), and modalised concept/role assertions
(ABox).  Concept terms extend plain EL with labelled box and diamond
operators over named standpoints; the universal standpoint ``*`` belongs
to every signature whether or not it is mentioned.

Everything in this module is immutable and hashable, and all operations
are pure functions, so values can be shared freely between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

BOX = "box"
DIAMOND = "diamond"

UNIVERSAL = "*"

#: Prefix reserved for machine-generated names; the parser rejects it.
RESERVED_PREFIX = "__f"


def dual_mode(mode: str) -> str:
    """Swap box and diamond."""
    return DIAMOND if mode == BOX else BOX


# ---------------------------------------------------------------------------
# Concept terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Top:
    """The universal concept."""


@dataclass(frozen=True)
class Bot:
    """The empty concept."""


@dataclass(frozen=True)
class Atom:
    """A concept name."""
    name: str


@dataclass(frozen=True)
class And:
    left: "ConceptTerm"
    right: "ConceptTerm"


@dataclass(frozen=True)
class Exists:
    role: str
    filler: "ConceptTerm"


@dataclass(frozen=True)
class Box:
    standpoint: str
    inner: "ConceptTerm"


@dataclass(frozen=True)
class Diamond:
    standpoint: str
    inner: "ConceptTerm"


ConceptTerm = Union[Top, Bot, Atom, And, Exists, Box, Diamond]

TOP = Top()
BOT = Bot()


def modal(mode: str, standpoint: str, inner: ConceptTerm) -> ConceptTerm:
    return Box(standpoint, inner) if mode == BOX else Diamond(standpoint, inner)


def concept_size(c: ConceptTerm) -> int:
    """Number of constructor nodes in a concept tree (always positive)."""
    if isinstance(c, (Top, Bot, Atom)):
        return 1
    if isinstance(c, And):
        return 1 + concept_size(c.left) + concept_size(c.right)
    if isinstance(c, Exists):
        return 1 + concept_size(c.filler)
    if isinstance(c, (Box, Diamond)):
        return 1 + concept_size(c.inner)
    raise TypeError(f"not a concept term: {c!r}")


def subterms(c: ConceptTerm) -> Iterator[ConceptTerm]:
    """Yield ``c`` and every nested concept term, outermost first."""
    yield c
    if isinstance(c, And):
        yield from subterms(c.left)
        yield from subterms(c.right)
    elif isinstance(c, Exists):
        yield from subterms(c.filler)
    elif isinstance(c, (Box, Diamond)):
        yield from subterms(c.inner)


def is_basic(c: ConceptTerm) -> bool:
    """Basic concepts are concept names and the universal concept."""
    return isinstance(c, (Atom, Top))


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gci:
    """A modalised general concept inclusion.

    An inclusion written without a modality carries ``mode=BOX`` and the
    universal standpoint (the canonical form of the omitted prefix).
    """
    mode: str
    standpoint: str
    lhs: ConceptTerm
    rhs: ConceptTerm


@dataclass(frozen=True)
class ConceptAssertion:
    mode: str
    standpoint: str
    concept: ConceptTerm
    individual: str


@dataclass(frozen=True)
class RoleAssertion:
    mode: str
    standpoint: str
    role: str
    subject: str
    target: str


@dataclass(frozen=True)
class Sharpening:
    """``lower <= upper``: every precisification of lower is one of upper."""
    lower: str
    upper: str


Axiom = Union[Gci, ConceptAssertion, RoleAssertion, Sharpening]
Assertion = Union[ConceptAssertion, RoleAssertion]


# Unmodalised axiom bodies.  These appear as constraint payloads in the
# saturation engine and as members of the subformula set: a body states
# that an axiom's content holds at one particular precisification, which
# is strictly weaker than the box-over-* axiom of the same shape.

@dataclass(frozen=True)
class InclusionFact:
    lhs: ConceptTerm
    rhs: ConceptTerm


@dataclass(frozen=True)
class ConceptFact:
    concept: ConceptTerm
    individual: str


@dataclass(frozen=True)
class RoleFact:
    role: str
    subject: str
    target: str


FactBody = Union[InclusionFact, ConceptFact, RoleFact]
Formula = Union[Axiom, FactBody]


def strip_modality(ax: Axiom) -> Formula:
    """Drop the outer standpoint modality of an axiom.

    Sharpening statements carry no modality and are returned unchanged.
    """
    if isinstance(ax, Gci):
        return InclusionFact(ax.lhs, ax.rhs)
    if isinstance(ax, ConceptAssertion):
        return ConceptFact(ax.concept, ax.individual)
    if isinstance(ax, RoleAssertion):
        return RoleFact(ax.role, ax.subject, ax.target)
    if isinstance(ax, Sharpening):
        return ax
    raise TypeError(f"not an axiom: {ax!r}")


# ---------------------------------------------------------------------------
# Sorting keys (canonical order makes knowledge bases deterministic values)
# ---------------------------------------------------------------------------

def concept_key(c: ConceptTerm) -> tuple:
    if isinstance(c, Top):
        return ("0top",)
    if isinstance(c, Bot):
        return ("1bot",)
    if isinstance(c, Atom):
        return ("2atom", c.name)
    if isinstance(c, And):
        return ("3and", concept_key(c.left), concept_key(c.right))
    if isinstance(c, Exists):
        return ("4ex", c.role, concept_key(c.filler))
    if isinstance(c, Box):
        return ("5box", c.standpoint, concept_key(c.inner))
    if isinstance(c, Diamond):
        return ("6dia", c.standpoint, concept_key(c.inner))
    raise TypeError(f"not a concept term: {c!r}")


def axiom_key(ax: Axiom) -> tuple:
    if isinstance(ax, Sharpening):
        return ("0sharp", ax.lower, ax.upper)
    if isinstance(ax, Gci):
        return ("1gci", ax.mode, ax.standpoint, concept_key(ax.lhs), concept_key(ax.rhs))
    if isinstance(ax, ConceptAssertion):
        return ("2ca", ax.mode, ax.standpoint, concept_key(ax.concept), ax.individual)
    if isinstance(ax, RoleAssertion):
        return ("3ra", ax.mode, ax.standpoint, ax.role, ax.subject, ax.target)
    raise TypeError(f"not an axiom: {ax!r}")


# ---------------------------------------------------------------------------
# Knowledge bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KnowledgeBase:
    """An SBox/TBox/ABox triple, stored deduplicated in canonical order.

    Two knowledge bases built from the same axioms in any order compare
    equal, which makes every downstream computation order-insensitive.
    """
    sbox: tuple = ()
    tbox: tuple = ()
    abox: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "sbox", _canon(self.sbox))
        object.__setattr__(self, "tbox", _canon(self.tbox))
        object.__setattr__(self, "abox", _canon(self.abox))

    @staticmethod
    def of(axioms: Iterable[Axiom]) -> "KnowledgeBase":
        """Build a knowledge base from a mixed iterable of axioms."""
        sbox, tbox, abox = [], [], []
        for ax in axioms:
            if isinstance(ax, Sharpening):
                sbox.append(ax)
            elif isinstance(ax, Gci):
                tbox.append(ax)
            elif isinstance(ax, (ConceptAssertion, RoleAssertion)):
                abox.append(ax)
            else:
                raise TypeError(f"not an axiom: {ax!r}")
        return KnowledgeBase(tuple(sbox), tuple(tbox), tuple(abox))

    @property
    def axioms(self) -> tuple:
        return self.sbox + self.tbox + self.abox

    def union(self, other: "KnowledgeBase") -> "KnowledgeBase":
        return KnowledgeBase.of(self.axioms + other.axioms)

    def __len__(self) -> int:
        return len(self.sbox) + len(self.tbox) + len(self.abox)


def _canon(axioms: Iterable[Axiom]) -> tuple:
    return tuple(sorted(set(axioms), key=axiom_key))


EMPTY_KB = KnowledgeBase()


# ---------------------------------------------------------------------------
# Blocks (whole-set modalities) and their elimination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    """A standpoint modality applied to a whole set of axiom bodies.

    Members are stored as plain axioms under the default box-over-*
    modality; desugaring re-attaches the block's own modality.
    """
    mode: str
    standpoint: str
    axioms: tuple


@dataclass(frozen=True)
class AnnotatedKb:
    """Parser output: a statement sequence that may still contain blocks."""
    statements: tuple

    def has_blocks(self) -> bool:
        return any(isinstance(s, Block) for s in self.statements)


def desugar_blocks(annotated, supply: "NameSupply | None" = None) -> KnowledgeBase:
    """Eliminate whole-set modalities.

    A box block distributes its modality over the members.  A diamond
    block introduces one fresh standpoint below the block's standpoint
    and boxes every member with it.  Plain knowledge bases pass through
    unchanged, so the operation is idempotent.
    """
    if isinstance(annotated, KnowledgeBase):
        return annotated
    if supply is None:
        supply = NameSupply(collect_names(annotated))
    out = []
    for stmt in annotated.statements:
        if not isinstance(stmt, Block):
            out.append(stmt)
            continue
        if stmt.mode == BOX:
            out.extend(_remodalise(ax, BOX, stmt.standpoint) for ax in stmt.axioms)
        else:
            fresh = supply.fresh()
            out.append(Sharpening(fresh, stmt.standpoint))
            out.extend(_remodalise(ax, BOX, fresh) for ax in stmt.axioms)
    return KnowledgeBase.of(out)


def _remodalise(ax: Axiom, mode: str, standpoint: str) -> Axiom:
    if isinstance(ax, Gci):
        return Gci(mode, standpoint, ax.lhs, ax.rhs)
    if isinstance(ax, ConceptAssertion):
        return ConceptAssertion(mode, standpoint, ax.concept, ax.individual)
    if isinstance(ax, RoleAssertion):
        return RoleAssertion(mode, standpoint, ax.role, ax.subject, ax.target)
    raise TypeError(f"blocks may only contain GCIs and assertions: {ax!r}")


# ---------------------------------------------------------------------------
# Fresh names
# ---------------------------------------------------------------------------

class NameSupply:
    """Deterministic source of fresh reserved-prefix names.

    The counter starts past any reserved name already taken, so several
    pipeline stages can hand the same knowledge base through consecutive
    supplies without collisions.
    """

    def __init__(self, taken: Iterable[str] = (), prefix: str = RESERVED_PREFIX):
        self.prefix = prefix
        pat = re.compile(re.escape(prefix) + r"(\d+)$")
        start = -1
        for name in taken:
            m = pat.match(name)
            if m:
                start = max(start, int(m.group(1)))
        self._next = start + 1
        self.issued: list = []

    def fresh(self) -> str:
        name = f"{self.prefix}{self._next}"
        self._next += 1
        self.issued.append(name)
        return name


def collect_names(thing) -> set:
    """All identifiers (concept, role, individual, standpoint) in a KB,
    annotated KB, axiom, or concept term."""
    names: set = set()

    def walk_concept(c):
        for t in subterms(c):
            if isinstance(t, Atom):
                names.add(t.name)
            elif isinstance(t, Exists):
                names.add(t.role)
            elif isinstance(t, (Box, Diamond)):
                names.add(t.standpoint)

    def walk_axiom(ax):
        if isinstance(ax, Sharpening):
            names.add(ax.lower)
            names.add(ax.upper)
        elif isinstance(ax, Gci):
            names.add(ax.standpoint)
            walk_concept(ax.lhs)
            walk_concept(ax.rhs)
        elif isinstance(ax, ConceptAssertion):
            names.add(ax.standpoint)
            names.add(ax.individual)
            walk_concept(ax.concept)
        elif isinstance(ax, RoleAssertion):
            names.update((ax.standpoint, ax.role, ax.subject, ax.target))

    if isinstance(thing, KnowledgeBase):
        for ax in thing.axioms:
            walk_axiom(ax)
    elif isinstance(thing, AnnotatedKb):
        for stmt in thing.statements:
            if isinstance(stmt, Block):
                names.add(stmt.standpoint)
                for ax in stmt.axioms:
                    walk_axiom(ax)
            else:
                walk_axiom(stmt)
    elif isinstance(thing, (Gci, ConceptAssertion, RoleAssertion, Sharpening)):
        walk_axiom(thing)
    else:
        walk_concept(thing)
    names.discard(UNIVERSAL)
    return names


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    """The name sets and closure sets induced by a knowledge base.

    ``standpoints`` always contains the universal standpoint.  The
    concept closure contains every concept term occurring anywhere,
    including nested subterms; ``subformulas`` holds every axiom both
    with and without its outer modality.  ``size`` is the token count
    used by the saturation engine's step and size guards.
    """
    standpoints: frozenset
    individuals: frozenset
    roles: frozenset
    basic_concepts: frozenset
    concept_closure: frozenset
    subformulas: frozenset
    size: int


def signature(kb: KnowledgeBase) -> Signature:
    standpoints = {UNIVERSAL}
    individuals: set = set()
    roles: set = set()
    closure: set = {TOP}
    formulas: set = set()

    def add_concept(c: ConceptTerm):
        for t in subterms(c):
            closure.add(t)
            if isinstance(t, Exists):
                roles.add(t.role)
            elif isinstance(t, (Box, Diamond)):
                standpoints.add(t.standpoint)

    for ax in kb.axioms:
        formulas.add(ax)
        formulas.add(strip_modality(ax))
        if isinstance(ax, Sharpening):
            standpoints.update((ax.lower, ax.upper))
        elif isinstance(ax, Gci):
            standpoints.add(ax.standpoint)
            add_concept(ax.lhs)
            add_concept(ax.rhs)
        elif isinstance(ax, ConceptAssertion):
            standpoints.add(ax.standpoint)
            individuals.add(ax.individual)
            add_concept(ax.concept)
        elif isinstance(ax, RoleAssertion):
            standpoints.add(ax.standpoint)
            individuals.update((ax.subject, ax.target))
            roles.add(ax.role)

    basics = frozenset(t for t in closure if isinstance(t, (Atom, Top)))
    return Signature(
        standpoints=frozenset(standpoints),
        individuals=frozenset(individuals),
        roles=frozenset(roles),
        basic_concepts=basics,
        concept_closure=frozenset(closure),
        subformulas=frozenset(formulas),
        size=kb_size(kb),
    )


# ---------------------------------------------------------------------------
# Size measure
# ---------------------------------------------------------------------------

def concept_tokens(c: ConceptTerm) -> int:
    if isinstance(c, (Top, Bot, Atom)):
        return 1
    if isinstance(c, And):
        return 1 + concept_tokens(c.left) + concept_tokens(c.right)
    if isinstance(c, Exists):
        return 2 + concept_tokens(c.filler)
    if isinstance(c, (Box, Diamond)):
        return 2 + concept_tokens(c.inner)
    raise TypeError(f"not a concept term: {c!r}")


def axiom_tokens(ax: Axiom) -> int:
    if isinstance(ax, Sharpening):
        return 4
    if isinstance(ax, Gci):
        return 4 + concept_tokens(ax.lhs) + concept_tokens(ax.rhs)
    if isinstance(ax, ConceptAssertion):
        return 5 + concept_tokens(ax.concept)
    if isinstance(ax, RoleAssertion):
        return 7
    raise TypeError(f"not an axiom: {ax!r}")


def kb_size(kb: KnowledgeBase) -> int:
    """Total token count of a knowledge base, floored at one.

    Counts every name occurrence, connective, and axiom delimiter.  The
    floor keeps the polynomial step and size guards meaningful for the
    empty knowledge base, whose signature still contains ``*`` and Top.
    """
    return max(1, sum(axiom_tokens(ax) for ax in kb.axioms))


# ---------------------------------------------------------------------------
# Normal form recognition
# ---------------------------------------------------------------------------

def _normal_lhs(c: ConceptTerm) -> bool:
    if is_basic(c):
        return True
    if isinstance(c, Exists):
        return is_basic(c.filler)
    if isinstance(c, And):
        return is_basic(c.left) and is_basic(c.right)
    return False


def _normal_rhs(c: ConceptTerm) -> bool:
    if isinstance(c, (Atom, Bot)):
        return True
    if isinstance(c, Exists):
        return isinstance(c.filler, (Atom, Bot))
    if isinstance(c, (Box, Diamond)):
        return isinstance(c.inner, (Atom, Bot))
    return False


def is_normal_form(kb: KnowledgeBase) -> bool:
    """Check the restricted axiom shapes the saturation engine consumes.

    Every GCI must be box-modalised with a left side that is a basic
    concept, an existential over a basic concept, or a conjunction of two
    basic concepts, and a right side that is a concept name or Bot,
    possibly under one existential or one modality.  Assertions must be
    box-modalised and flat.  Sharpening statements are unrestricted.
    """
    for ax in kb.tbox:
        if ax.mode != BOX or not _normal_lhs(ax.lhs) or not _normal_rhs(ax.rhs):
            return False
    for ax in kb.abox:
        if ax.mode != BOX:
            return False
        if isinstance(ax, ConceptAssertion) and not isinstance(ax.concept, Atom):
            return False
    return True
