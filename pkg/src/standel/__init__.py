"""standel: a reasoner for standpoint-enhanced EL ontologies.

Parsing, normalisation, polynomial-time satisfiability via completion
graphs, the standard reasoning tasks by reduction, and a brute-force
semantic oracle for differential verification.
"""

from .kb import (
    BOX, BOT, DIAMOND, TOP, UNIVERSAL,
    And, AnnotatedKb, Atom, Block, Bot, Box, ConceptAssertion, Diamond,
    Exists, Gci, KnowledgeBase, NameSupply, RoleAssertion, Sharpening, Top,
    desugar_blocks, is_normal_form, kb_size, signature,
)
from .normalizer import NormalizationResult, apply_rule, normalize
from .oracle import (
    SearchOutcome, StandpointStructure, eval_concept, satisfies, search_model,
)
from .tableau import (
    CompletionGraph, Engine, InternalLimitError, Run, Satisfiable,
    Unsatisfiable, check_coherence, enumerate_runs, extract_model, init_graph,
    saturate,
)
from .tasks import (
    concept_satisfiable, entails, instances, is_satisfiable, negated_axiom_kb,
)
from .textio import (
    ParseDiagnostic, ParseError, emit_dot, emit_json, parse_axiom_text,
    parse_concept_text, parse_kb, render_axiom, render_concept, serialize,
)

__version__ = "0.1.0"
