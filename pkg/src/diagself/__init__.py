"""Populations of self-editing programs that diagonalize over their own history."""

from .dsl import Code, EvalOutcome, parse_text, run, to_text
from .engine import RunConfig, RunReport, run as run_simulation

__all__ = ["Code", "EvalOutcome", "parse_text", "run", "to_text",
           "RunConfig", "RunReport", "run_simulation"]
__version__ = "0.1.0"
