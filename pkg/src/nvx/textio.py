"""Helpers for the line-based document formats (profiles, plans, traces, reports)."""

import re

_UINT = re.compile(r"[0-9]+\Z")
_INT = re.compile(r"[+-]?[0-9]+\Z")


def tokenized_lines(text):
    """Yield ``(lineno, tokens)`` for every meaningful line.

    ``#`` starts a comment that runs to end of line; blank lines are skipped.
    """
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def expect_header(lines, keyword, version, error_cls):
    """Consume the ``<keyword> <version>`` header from a tokenized line iterator."""
    try:
        lineno, toks = next(lines)
    except StopIteration:
        raise error_cls("SYNTAX", f"empty document, expected '{keyword} {version}'", 1)
    if toks != [keyword, str(version)]:
        raise error_cls("SYNTAX", f"expected header '{keyword} {version}'", lineno)
    return lineno


def parse_uint(token, lineno, error_cls, negative_code="SYNTAX"):
    if _UINT.match(token):
        return int(token)
    if _INT.match(token) and token.startswith("-"):
        raise error_cls(negative_code, f"negative value {token}", lineno)
    raise error_cls("SYNTAX", f"expected unsigned integer, got {token!r}", lineno)


def parse_int(token, lineno, error_cls):
    if _INT.match(token):
        return int(token)
    raise error_cls("SYNTAX", f"expected integer, got {token!r}", lineno)


def join_lines(lines):
    return "".join(line + "\n" for line in lines)
