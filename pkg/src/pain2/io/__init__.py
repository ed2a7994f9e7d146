"""Expression I/O, verification reports and the command-line front end."""

from .expr import ParseError, format_poly, parse_expr, print_expr

__all__ = ["ParseError", "format_poly", "parse_expr", "print_expr"]
