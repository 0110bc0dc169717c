"""Deterministic knowledge-base generators for fuzzing and scaling runs.

``random_kb`` draws small knowledge bases from a seeded RNG within
bounds that keep the brute-force model search feasible: at most four
concept names, two roles, two individuals, two named standpoints, six
axioms, and one modal level inside concepts (the axiom modality being
the other).  ``scaling_chain`` builds the inclusion-chain family used
for the polynomial-scaling measurements.
"""

from __future__ import annotations

import math
import random

from .kb import (
    BOX, BOT, DIAMOND, TOP, UNIVERSAL,
    And, Atom, Box, ConceptAssertion, ConceptTerm, Diamond, Exists, Gci,
    KnowledgeBase, RoleAssertion, Sharpening,
)

CONCEPTS = ("A", "B", "C", "Dd")
ROLES = ("R", "Q")
INDIVIDUALS = ("a", "b")
STANDPOINTS = (UNIVERSAL, "s1", "s2")


def random_concept(rng: random.Random, budget: int, modal_budget: int) -> ConceptTerm:
    """A concept tree of at most ``budget`` nodes and bounded modal depth."""
    leaves = [Atom(rng.choice(CONCEPTS))]
    if budget <= 1:
        roll = rng.random()
        if roll < 0.08:
            return TOP
        if roll < 0.13:
            return BOT
        return leaves[0]
    shapes = ["atom", "and", "exists"]
    if modal_budget > 0:
        shapes.append("modal")
    shape = rng.choice(shapes)
    if shape == "and":
        split = rng.randint(1, budget - 1)
        return And(random_concept(rng, split, modal_budget),
                   random_concept(rng, budget - split, modal_budget))
    if shape == "exists":
        return Exists(rng.choice(ROLES),
                      random_concept(rng, budget - 1, modal_budget))
    if shape == "modal":
        inner = random_concept(rng, budget - 1, modal_budget - 1)
        sp = rng.choice(STANDPOINTS)
        return Box(sp, inner) if rng.random() < 0.5 else Diamond(sp, inner)
    roll = rng.random()
    if roll < 0.08:
        return TOP
    if roll < 0.13:
        return BOT
    return Atom(rng.choice(CONCEPTS))


def random_axiom(rng: random.Random):
    roll = rng.random()
    mode = BOX if rng.random() < 0.7 else DIAMOND
    sp = rng.choice(STANDPOINTS)
    if roll < 0.10:
        named = [s for s in STANDPOINTS if s != UNIVERSAL]
        return Sharpening(rng.choice(named), rng.choice(STANDPOINTS))
    if roll < 0.65:
        return Gci(mode, sp,
                   random_concept(rng, rng.randint(1, 3), 1),
                   random_concept(rng, rng.randint(1, 3), 1))
    if roll < 0.90:
        return ConceptAssertion(mode, sp,
                                random_concept(rng, rng.randint(1, 2), 1),
                                rng.choice(INDIVIDUALS))
    return RoleAssertion(mode, sp, rng.choice(ROLES),
                         rng.choice(INDIVIDUALS), rng.choice(INDIVIDUALS))


def random_kb(seed: int, max_axioms: int = 6) -> KnowledgeBase:
    """A small random knowledge base, reproducible from its seed."""
    rng = random.Random(seed)
    n = rng.randint(1, max_axioms)
    return KnowledgeBase.of(random_axiom(rng) for _ in range(n))


def scaling_chain(n: int) -> KnowledgeBase:
    """The inclusion-chain family: n axioms ``B(t_k)[A_i <: ex R.A_{i+1}]``
    over a standpoint chain of depth ceil(sqrt(n))."""
    depth = math.isqrt(n - 1) + 1  # ceil(sqrt(n))
    tiers = [f"t{k}" for k in range(1, depth + 1)]
    axioms: list = [Sharpening(tiers[k], tiers[k + 1]) for k in range(depth - 1)]
    for i in range(1, n + 1):
        sp = tiers[(i - 1) % depth]
        axioms.append(Gci(BOX, sp, Atom(f"A{i}"), Exists("R", Atom(f"A{i + 1}"))))
    return KnowledgeBase.of(axioms)
