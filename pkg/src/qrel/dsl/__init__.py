"""Query language: parser, planner, executor and CLI."""

from .ast import format_query
from .executor import ResultDocument, execute
from .parser import parse
from .planner import PlanConfig, QueryPlan, plan

__all__ = ["PlanConfig", "QueryPlan", "ResultDocument", "execute", "format_query", "parse", "plan"]
