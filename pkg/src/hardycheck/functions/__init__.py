"""Test functions: expression trees, cumulative integrals, random admissible samples."""

from .expr import (Add, Const, EvaluationError, Exp, Expr, Log, Max, Min, Mul, ParseError,
                   Pow, Scale, Trunc, Var, X, evaluate, parse, render, vectorized)
from .cumulative import (Cumulative, CumulativeDivergenceError, FunctionSpec, breakpoints,
                         cumulative, monomial)
from .sampling import FAMILIES, SamplingError, sample_admissible

__all__ = [
    "Add", "Const", "EvaluationError", "Exp", "Expr", "Log", "Max", "Min", "Mul",
    "ParseError", "Pow", "Scale", "Trunc", "Var", "X", "evaluate", "parse", "render",
    "vectorized", "Cumulative", "CumulativeDivergenceError", "FunctionSpec",
    "breakpoints", "cumulative", "monomial", "FAMILIES", "SamplingError",
    "sample_admissible",
]
