"""Rewriting into the normal form consumed by the saturation engine.

Twelve axiom-replacement rules are applied exhaustively.  Diamond
modalities on axioms become fresh sub-standpoints (rules 11-13), complex
material on either side of an inclusion is split off through fresh
concept names (14-17, 19, 20), trivial axioms are dropped (18), and
modal operators occurring on left-hand sides are eliminated (21, 22).
The transformation preserves satisfiability and grows the knowledge
base at most linearly; the differential tests check both claims against
the brute-force model search.

Rule 21 replaces ``B(s)[D(u)[C] <: D]`` by ``B(u)[C <: B(*)[A]]`` and
``B(s)[A <: D]`` for a fresh A: membership in C at any u-precisification
must reach A globally before flowing into D at every s-precisification.
Rule 22 needs two fresh sub-standpoints of u; the pair of diamonds it
emits on the left side is then dissolved by rules 20 and 21, so nothing
modal survives on a left-hand side.

Every rewrite strictly shrinks the pair (number of box operators inside
left-hand sides, multiset of per-axiom badness) under the lexicographic
order with multiset descent, which is asserted on every trace step and
guarantees termination.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .kb import (
    BOX, DIAMOND, BOT, TOP, UNIVERSAL,
    And, Atom, Axiom, Bot, Box, ConceptAssertion, ConceptTerm, Diamond,
    Exists, Gci, KnowledgeBase, NameSupply, RoleAssertion, Sharpening, Top,
    collect_names, is_basic, is_normal_form,
)

RULE_IDS = tuple(range(11, 23))


@dataclass(frozen=True)
class NormalizationResult:
    kb: KnowledgeBase
    introduced_concepts: frozenset
    introduced_standpoints: frozenset
    rule_trace: tuple  # of (rule_id, replaced_axiom, replacement_axioms)

    def rule_counts(self) -> dict:
        counts = {r: 0 for r in RULE_IDS}
        for rule, _, _ in self.rule_trace:
            counts[rule] += 1
        return counts


def _complex(c: ConceptTerm) -> bool:
    """Concept terms outside names-plus-Top, as the rule guards require."""
    return not is_basic(c)


def _trivial_rhs(c: ConceptTerm) -> bool:
    """Right sides that can never constrain anything: Top, and modalised
    Top (standpoints are non-empty, so box/diamond over Top is Top)."""
    if isinstance(c, Top):
        return True
    return isinstance(c, (Box, Diamond)) and isinstance(c.inner, Top)


def apply_rule(rule_id: int, ax: Axiom, supply: NameSupply):
    """Apply one numbered rewrite rule to one axiom.

    Returns the replacement axiom tuple, or None when the axiom does not
    match the rule's left-hand pattern.  Rule 20 is tried modulo
    commutativity of the conjunction.
    """
    if rule_id == 11:
        if isinstance(ax, ConceptAssertion) and ax.mode == DIAMOND:
            v = supply.fresh()
            return (Sharpening(v, ax.standpoint),
                    ConceptAssertion(BOX, v, ax.concept, ax.individual))
        return None
    if rule_id == 12:
        if isinstance(ax, RoleAssertion) and ax.mode == DIAMOND:
            v = supply.fresh()
            return (Sharpening(v, ax.standpoint),
                    RoleAssertion(BOX, v, ax.role, ax.subject, ax.target))
        return None
    if rule_id == 13:
        if isinstance(ax, Gci) and ax.mode == DIAMOND:
            v = supply.fresh()
            return (Sharpening(v, ax.standpoint), Gci(BOX, v, ax.lhs, ax.rhs))
        return None

    if rule_id == 14:
        if (isinstance(ax, ConceptAssertion) and ax.mode == BOX
                and _complex(ax.concept) and not isinstance(ax.concept, Top)):
            a = Atom(supply.fresh())
            return (ConceptAssertion(BOX, ax.standpoint, a, ax.individual),
                    Gci(BOX, ax.standpoint, a, ax.concept))
        return None

    if not isinstance(ax, Gci) or ax.mode != BOX:
        return None
    s, lhs, rhs = ax.standpoint, ax.lhs, ax.rhs

    if rule_id == 15:
        # Fires on Top fillers as well: the normal form only admits
        # existentials over concept names or Bot, and the split-off
        # inclusion A <: Top is dropped right away.
        if isinstance(rhs, Exists) and not isinstance(rhs.filler, (Atom, Bot)):
            a = Atom(supply.fresh())
            return (Gci(BOX, s, lhs, Exists(rhs.role, a)),
                    Gci(BOX, s, a, rhs.filler))
        return None
    if rule_id == 16:
        if isinstance(rhs, And):
            a = Atom(supply.fresh())
            return (Gci(BOX, s, lhs, a),
                    Gci(BOX, s, a, rhs.left),
                    Gci(BOX, s, a, rhs.right))
        return None
    if rule_id == 17:
        # The split-off inclusion must hold where the fresh name is used:
        # at the precisifications of the operator's own standpoint u, not
        # at those of the outer s (which may be disjoint from u's).
        if (isinstance(rhs, (Box, Diamond)) and _complex(rhs.inner)
                and not isinstance(rhs.inner, (Top, Bot))):
            a = Atom(supply.fresh())
            outer = Box(rhs.standpoint, a) if isinstance(rhs, Box) else Diamond(rhs.standpoint, a)
            return (Gci(BOX, s, lhs, outer), Gci(BOX, rhs.standpoint, a, rhs.inner))
        return None
    if rule_id == 18:
        if _trivial_rhs(rhs) or isinstance(lhs, Bot):
            return ()
        return None
    if rule_id == 19:
        if isinstance(lhs, Exists) and _complex(lhs.filler):
            a = Atom(supply.fresh())
            return (Gci(BOX, s, lhs.filler, a),
                    Gci(BOX, s, Exists(lhs.role, a), rhs))
        return None
    if rule_id == 20:
        if isinstance(lhs, And):
            if _complex(lhs.left):
                bad, rest = lhs.left, lhs.right
            elif _complex(lhs.right):
                bad, rest = lhs.right, lhs.left
            else:
                return None
            a = Atom(supply.fresh())
            return (Gci(BOX, s, bad, a), Gci(BOX, s, And(a, rest), rhs))
        return None
    if rule_id == 21:
        if isinstance(lhs, Diamond):
            a = Atom(supply.fresh())
            return (Gci(BOX, lhs.standpoint, lhs.inner, Box(UNIVERSAL, a)),
                    Gci(BOX, s, a, rhs))
        return None
    if rule_id == 22:
        if isinstance(lhs, Box):
            u = lhs.standpoint
            v0, v1 = supply.fresh(), supply.fresh()
            a = Atom(supply.fresh())
            return (Sharpening(v0, u), Sharpening(v1, u),
                    Gci(BOX, u, lhs.inner, a),
                    Gci(BOX, s, And(Diamond(v0, a), Diamond(v1, a)), rhs))
        return None
    raise ValueError(f"unknown rule id {rule_id}")


def _assertion_trivial(ax: Axiom) -> bool:
    # B(s)[Top(a)] holds in every structure; no numbered rule reaches it.
    return (isinstance(ax, ConceptAssertion) and ax.mode == BOX
            and isinstance(ax.concept, Top))


#: Order in which rules are tried on each axiom; any fixed order yields a
#: normal form, this one keeps traces small by deleting before splitting.
_RULE_ORDER = (11, 12, 13, 18, 14, 16, 15, 17, 19, 20, 21, 22)


def _first_match(ax: Axiom, supply: NameSupply):
    if isinstance(ax, Sharpening):
        return None
    if _assertion_trivial(ax):
        return 18, ()
    for rule in _RULE_ORDER:
        out = apply_rule(rule, ax, supply)
        if out is not None:
            return rule, out
    return None


# ---------------------------------------------------------------------------
# Termination measure
# ---------------------------------------------------------------------------

def _nonatom_nodes(c: ConceptTerm) -> int:
    if isinstance(c, Atom):
        return 0
    if isinstance(c, (Top, Bot)):
        return 1
    if isinstance(c, And):
        return 1 + _nonatom_nodes(c.left) + _nonatom_nodes(c.right)
    if isinstance(c, Exists):
        return 1 + _nonatom_nodes(c.filler)
    return 1 + _nonatom_nodes(c.inner)


def _normal_lhs_shape(c) -> bool:
    return (is_basic(c)
            or (isinstance(c, Exists) and is_basic(c.filler))
            or (isinstance(c, And) and is_basic(c.left) and is_basic(c.right)))


def _normal_rhs_shape(c) -> bool:
    return (isinstance(c, (Atom, Bot))
            or (isinstance(c, Exists) and isinstance(c.filler, (Atom, Bot)))
            or (isinstance(c, (Box, Diamond)) and isinstance(c.inner, (Atom, Bot))))


def axiom_badness(ax: Axiom) -> int:
    """Weight of the non-normal material in one axiom."""
    if isinstance(ax, Sharpening):
        return 0
    if ax.mode == DIAMOND:
        return 1 + axiom_badness(_boxed(ax))
    if isinstance(ax, ConceptAssertion):
        return 0 if isinstance(ax.concept, Atom) else 1 + _nonatom_nodes(ax.concept)
    if isinstance(ax, RoleAssertion):
        return 0
    bad = 0
    if not _normal_lhs_shape(ax.lhs):
        bad += _nonatom_nodes(ax.lhs)
    if not _normal_rhs_shape(ax.rhs):
        bad += _nonatom_nodes(ax.rhs)
    return bad


def _boxed(ax):
    if isinstance(ax, Gci):
        return Gci(BOX, ax.standpoint, ax.lhs, ax.rhs)
    if isinstance(ax, ConceptAssertion):
        return ConceptAssertion(BOX, ax.standpoint, ax.concept, ax.individual)
    return RoleAssertion(BOX, ax.standpoint, ax.role, ax.subject, ax.target)


def _lhs_boxes(ax: Axiom) -> int:
    if not isinstance(ax, Gci):
        return 0
    count = 0
    stack = [ax.lhs]
    while stack:
        c = stack.pop()
        if isinstance(c, Box):
            count += 1
            stack.append(c.inner)
        elif isinstance(c, Diamond):
            stack.append(c.inner)
        elif isinstance(c, And):
            stack.extend((c.left, c.right))
        elif isinstance(c, Exists):
            stack.append(c.filler)
    return count


def _measure_decreases(old: Axiom, new: tuple) -> bool:
    delta_boxes = sum(_lhs_boxes(ax) for ax in new) - _lhs_boxes(old)
    if delta_boxes < 0:
        return True
    if delta_boxes > 0:
        return False
    b = axiom_badness(old)
    return all(axiom_badness(ax) < b for ax in new)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def normalize(kb: KnowledgeBase, supply: NameSupply | None = None) -> NormalizationResult:
    """Exhaustively rewrite a (block-free) knowledge base to normal form.

    Deterministic: identical inputs give identical outputs and traces.
    Fresh names are drawn from the reserved prefix and recorded in the
    result together with the full rewrite trace.
    """
    if supply is None:
        supply = NameSupply(collect_names(kb))
    fresh_concepts: set = set()
    fresh_standpoints: set = set()
    trace: list = []
    out: list = []
    work = deque(kb.axioms)
    while work:
        ax = work.popleft()
        before = len(supply.issued)
        matched = _first_match(ax, supply)
        if matched is None:
            out.append(ax)
            continue
        rule, replacement = matched
        assert _measure_decreases(ax, replacement), \
            f"rewrite measure failed to decrease: rule {rule} on {ax!r}"
        trace.append((rule, ax, replacement))
        sharp_lowers = {rep.lower for rep in replacement if isinstance(rep, Sharpening)}
        for name in supply.issued[before:]:
            (fresh_standpoints if name in sharp_lowers else fresh_concepts).add(name)
        work.extendleft(reversed(replacement))
    result = KnowledgeBase.of(out)
    assert is_normal_form(result), "normalization did not reach normal form"
    return NormalizationResult(
        kb=result,
        introduced_concepts=frozenset(fresh_concepts),
        introduced_standpoints=frozenset(fresh_standpoints),
        rule_trace=tuple(trace),
    )
