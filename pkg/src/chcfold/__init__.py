"""Elimination of list arguments from constrained Horn clauses by fold/unfold
transformation with difference predicates."""

__version__ = "0.1.0"
