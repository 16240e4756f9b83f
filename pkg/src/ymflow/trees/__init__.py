"""Rules, decorated trees, the Upsilon recursion and counterterm assembly."""
from .labels import Deg, Label, LabelSet, sym_labels, gauge_labels
from .rules import Rule, RuleError, sym_rule, gauge_rule, get_rule
from .tree import (
    DecoratedTree,
    automorphism_count,
    brute_symmetry_factor,
    degree,
    render_form,
    symmetry_factor,
    tree_hash,
)
from .enumerate import DivergenceError, Enumerator, complete_rule, enumerate_trees, negative_trees
from .jet import JetTerm
from .upsilon import Upsilon, fixed_point_upsilon
from .nonlinearity import sym_nonlinearity, gauge_nonlinearity
from .counterterm import (
    JetConstraintError,
    bphz_vanishing_filter,
    counterterm_gauge_system,
    counterterm_sym,
)

__all__ = [
    "Deg", "Label", "LabelSet", "sym_labels", "gauge_labels",
    "Rule", "RuleError", "sym_rule", "gauge_rule", "get_rule",
    "DecoratedTree", "automorphism_count", "brute_symmetry_factor", "degree", "render_form",
    "symmetry_factor", "tree_hash",
    "DivergenceError", "Enumerator", "complete_rule", "enumerate_trees", "negative_trees",
    "JetTerm", "Upsilon", "fixed_point_upsilon", "sym_nonlinearity", "gauge_nonlinearity",
    "JetConstraintError", "bphz_vanishing_filter", "counterterm_gauge_system", "counterterm_sym",
]
