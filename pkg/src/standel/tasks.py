"""Standard reasoning tasks, reduced to knowledge-base satisfiability.

Axiom entailment holds iff the knowledge base extended with a small
"negation witness" set becomes unsatisfiable.  The witness set uses
fresh concept names (and a fresh role for inclusion queries) plus the
dual modality of the queried axiom.  Concept satisfiability and
instance retrieval both reduce to entailment queries over the universal
standpoint.

All functions accept either a plain knowledge base or parser output
with blocks still in it; blocks are desugared and the result normalised
internally.  Instance retrieval normalises once and re-uses the
negation template for every individual, so it costs one normalisation
plus one saturation per individual; the saturations are independent
and may run concurrently.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .kb import (
    BOX, BOT, TOP, UNIVERSAL,
    And, AnnotatedKb, Atom, Axiom, ConceptAssertion, ConceptTerm, Exists,
    Gci, KnowledgeBase, NameSupply, RoleAssertion, Sharpening, collect_names,
    desugar_blocks, dual_mode, signature,
)
from .normalizer import normalize
from .tableau import Satisfiable, Unsatisfiable, saturate


def _as_kb(kb) -> KnowledgeBase:
    if isinstance(kb, AnnotatedKb):
        return desugar_blocks(kb)
    return kb


def negated_axiom_kb(axiom: Axiom, supply: NameSupply | None = None) -> KnowledgeBase:
    """A knowledge base whose conjunction with K is unsatisfiable exactly
    when K entails the given axiom.

    Fresh names come from the reserved prefix, so they can never collide
    with user vocabulary; unmodalised members mean box-over-*.
    """
    if supply is None:
        supply = NameSupply(collect_names(axiom))
    a = Atom(supply.fresh())
    if isinstance(axiom, Sharpening):
        return KnowledgeBase.of([
            Gci("diamond", axiom.lower, TOP, a),
            Gci(BOX, axiom.upper, a, BOT),
        ])
    dual = dual_mode(axiom.mode)
    if isinstance(axiom, Gci):
        r = supply.fresh()
        return KnowledgeBase.of([
            Gci(BOX, UNIVERSAL, a, axiom.lhs),
            Gci(BOX, UNIVERSAL, And(a, axiom.rhs), BOT),
            Gci(dual, axiom.standpoint, TOP, Exists(r, a)),
        ])
    if isinstance(axiom, ConceptAssertion):
        return KnowledgeBase.of([
            Gci(BOX, UNIVERSAL, And(a, axiom.concept), BOT),
            ConceptAssertion(dual, axiom.standpoint, a, axiom.individual),
        ])
    if isinstance(axiom, RoleAssertion):
        b = Atom(supply.fresh())
        return KnowledgeBase.of([
            ConceptAssertion(BOX, UNIVERSAL, b, axiom.target),
            Gci(BOX, UNIVERSAL, And(a, Exists(axiom.role, b)), BOT),
            ConceptAssertion(dual, axiom.standpoint, a, axiom.subject),
        ])
    raise TypeError(f"not an axiom: {axiom!r}")


# ---------------------------------------------------------------------------
# Verdict-level runners (the CLI reads counters and clashes off these)
# ---------------------------------------------------------------------------

def satisfiability_verdict(kb, max_steps=None, on_step=None):
    kb = _as_kb(kb)
    norm = normalize(kb)
    return saturate(norm.kb, max_steps=max_steps, on_step=on_step)


def entailment_verdict(kb, axiom: Axiom, max_steps=None, on_step=None):
    kb = _as_kb(kb)
    supply = NameSupply(collect_names(kb) | collect_names(axiom))
    norm = normalize(kb, supply)
    neg = normalize(negated_axiom_kb(axiom, supply), supply)
    return saturate(norm.kb.union(neg.kb), max_steps=max_steps, on_step=on_step)


# ---------------------------------------------------------------------------
# Boolean task surface
# ---------------------------------------------------------------------------

def is_satisfiable(kb) -> bool:
    """Knowledge-base satisfiability (desugars and normalises internally)."""
    return isinstance(satisfiability_verdict(kb), Satisfiable)


def entails(kb, axiom: Axiom) -> bool:
    """True iff every model of the knowledge base satisfies the axiom."""
    return isinstance(entailment_verdict(kb, axiom), Unsatisfiable)


def concept_satisfiable(kb, concept: ConceptTerm) -> bool:
    """True iff some model gives the concept a non-empty extension."""
    return not entails(kb, Gci(BOX, UNIVERSAL, concept, BOT))


def instances(kb, concept: ConceptTerm, parallel: bool = False) -> list:
    """All individuals that fall under the concept in every model.

    One normalisation is shared across all individuals; each individual
    costs a single saturation of the normalised base plus a three-axiom
    witness block.  The result is sorted, independent of execution
    order.
    """
    kb = _as_kb(kb)
    sig = signature(kb)
    names = sorted(sig.individuals)
    if not names:
        return []
    supply = NameSupply(collect_names(kb) | collect_names(concept))
    norm = normalize(kb, supply)
    witness = Atom(supply.fresh())
    guard = normalize(
        KnowledgeBase.of([Gci(BOX, UNIVERSAL, And(witness, concept), BOT)]), supply)
    sub = supply.fresh()
    base = norm.kb.union(guard.kb).union(
        KnowledgeBase.of([Sharpening(sub, UNIVERSAL)]))

    def check(a: str) -> bool:
        query = base.union(KnowledgeBase.of(
            [ConceptAssertion(BOX, sub, witness, a)]))
        return isinstance(saturate(query), Unsatisfiable)

    if parallel:
        with ThreadPoolExecutor(max_workers=min(8, len(names))) as pool:
            hits = list(pool.map(check, names))
    else:
        hits = [check(a) for a in names]
    return [a for a, hit in zip(names, hits) if hit]
