from exprlang.calculus import diff, evaluate, to_source
from exprlang.nodes import Expr
from exprlang.parser import parse

__all__ = ["Expr", "diff", "evaluate", "parse", "to_source"]
