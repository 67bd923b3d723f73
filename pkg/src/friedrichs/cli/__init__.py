"""Command line front end and session language."""

from .language import Environment, ParseError, Session, parse, parse_expression, pretty

__all__ = ["Environment", "ParseError", "Session", "parse", "parse_expression", "pretty"]
