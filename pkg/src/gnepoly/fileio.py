"""Text formats: polynomial expressions and flat key-value files.

Polynomial grammar (one line, whitespace insensitive)::

    poly    :=  ['+'|'-'] term (('+'|'-') term)*
    term    :=  factor ('*' factor)*
    factor  :=  number | number '/' number | var
    var     :=  name '[' int ']' '[' int ']' ('^' int)?

Block names are things like ``x[1]`` or ``w[2]``; ``x[1][3]`` is coordinate 3
(1-based) of block ``x[1]``.  Emission always writes an explicit coefficient,
e.g. ``2*x[1][1]^2 - 1*x[2][3]``.

Key-value files are flat ``path = value`` lines with ``#`` comments.  Paths
use dots and 1-based brackets (``players[2].constraints[1].kind``); values are
bare scalars, quoted strings, or ``[v1, v2, ...]`` lists of scalars.
"""

from __future__ import annotations

import re

from .polynomials import Polynomial, VariableSpace


class ParseError(ValueError):
    """Raised on malformed polynomial or key-value input, with position info."""


_TOKEN = re.compile(r"""
    \s*(?:
      (?P<var>[A-Za-z_]\w*\[\d+\]\[\d+\])
    | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<op>[-+*/^])
    )""", re.VERBOSE)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r} at column {pos + 1}")
        if m.lastgroup == "var":
            tokens.append(("var", m.group("var")))
        elif m.lastgroup == "num":
            tokens.append(("num", float(m.group("num"))))
        else:
            tokens.append(("op", m.group("op")))
        pos = m.end()
    return tokens


_VAR = re.compile(r"([A-Za-z_]\w*\[\d+\])\[(\d+)\]")


def parse_polynomial(text: str, space: VariableSpace) -> Polynomial:
    """Parse the sum-of-terms format into a polynomial over ``space``."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty polynomial")
    terms: dict[tuple, float] = {}
    i = 0
    n = len(tokens)

    def term_end(j):
        # scan to the next top-level +/- sign
        while j < n and not (tokens[j][0] == "op" and tokens[j][1] in "+-"):
            j += 1
        return j

    sign = 1.0
    if tokens[0][0] == "op" and tokens[0][1] in "+-":
        sign = -1.0 if tokens[0][1] == "-" else 1.0
        i = 1
    while i < n:
        j = term_end(i)
        coeff, exps = _parse_term(tokens[i:j], space)
        coeff *= sign
        key = tuple(exps)
        terms[key] = terms.get(key, 0.0) + coeff
        if j < n:
            sign = -1.0 if tokens[j][1] == "-" else 1.0
        i = j + 1
    if i == n + 1 and n and tokens[-1][0] == "op":
        raise ParseError("dangling sign at end of polynomial")
    return Polynomial(space, terms)


def _parse_term(tokens, space: VariableSpace):
    if not tokens:
        raise ParseError("empty term")
    coeff = 1.0
    exps = [0] * space.total_dim
    expect_factor = True
    i = 0
    while i < len(tokens):
        kind, val = tokens[i]
        if expect_factor:
            if kind == "num":
                coeff *= val
                # optional rational literal a/b
                if i + 2 < len(tokens) and tokens[i + 1] == ("op", "/") and tokens[i + 2][0] == "num":
                    if tokens[i + 2][1] == 0:
                        raise ParseError("division by zero in coefficient")
                    coeff /= tokens[i + 2][1]
                    i += 2
            elif kind == "var":
                m = _VAR.fullmatch(val)
                block, j = m.group(1), int(m.group(2))
                flat = space.flat_index(block, j - 1)
                e = 1
                if i + 2 < len(tokens) and tokens[i + 1] == ("op", "^"):
                    if tokens[i + 2][0] != "num" or tokens[i + 2][1] != int(tokens[i + 2][1]):
                        raise ParseError("exponent must be a nonnegative integer")
                    e = int(tokens[i + 2][1])
                    i += 2
                exps[flat] += e
            else:
                raise ParseError(f"expected number or variable, got {val!r}")
            expect_factor = False
        else:
            if kind == "op" and val == "*":
                expect_factor = True
            else:
                raise ParseError(f"expected '*', got {val!r}")
        i += 1
    if expect_factor:
        raise ParseError("term ends with '*'")
    return coeff, exps


def _format_float(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_polynomial(p: Polynomial) -> str:
    """Emit the canonical text form, graded monomial order, explicit coefs."""
    if p.is_zero():
        return "0"
    keys = sorted(p.terms, key=lambda m: (sum(m), tuple(-e for e in m)))
    parts = []
    for m in keys:
        c = p.terms[m]
        factors = [_format_float(abs(c))]
        for flat, e in enumerate(m):
            if e == 0:
                continue
            name = p.space.coordinate_name(flat)
            factors.append(f"{name}^{e}" if e > 1 else name)
        body = "*".join(factors)
        if not parts:
            parts.append(body if c >= 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c >= 0 else f"- {body}")
    return " ".join(parts)


# -- flat key-value files -----------------------------------------------------

_KEY = re.compile(r"[A-Za-z_][\w.\[\]]*")


def parse_keyvalues(text: str, source: str = "<string>") -> dict[str, object]:
    """Parse ``path = value`` lines into an ordered dict keyed by path."""
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{source}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if not _KEY.fullmatch(key):
            raise ParseError(f"{source}:{lineno}: bad key {key!r}")
        if key in out:
            raise ParseError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = _parse_value(val.strip(), source, lineno)
    return out


def _parse_value(val: str, source: str, lineno: int):
    if val.startswith('"'):
        if not val.endswith('"') or len(val) < 2:
            raise ParseError(f"{source}:{lineno}: unterminated string")
        return val[1:-1]
    if val.startswith("["):
        if not val.endswith("]"):
            raise ParseError(f"{source}:{lineno}: unterminated list")
        inner = val[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(tok.strip(), source, lineno) for tok in inner.split(",")]
    return _parse_scalar(val, source, lineno)


def _parse_scalar(val: str, source: str, lineno: int):
    if val == "":
        raise ParseError(f"{source}:{lineno}: missing value")
    try:
        return int(val)
    except ValueError:
        pass
    try:
        return float(val)
    except ValueError:
        return val  # bare word


def format_keyvalues(items: dict[str, object]) -> str:
    lines = []
    for key, val in items.items():
        lines.append(f"{key} = {_format_value(val)}")
    return "\n".join(lines) + "\n"


def _format_value(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return f"{val:.17g}"
    if isinstance(val, int):
        return str(val)
    if isinstance(val, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in val) + "]"
    val = str(val)
    if re.fullmatch(r"[\w.+-]+", val):
        return val
    return f'"{val}"'


def collect_indexed(items: dict[str, object], prefix: str) -> list[dict[str, object]]:
    """Group keys ``prefix[i].rest`` into a list of sub-dicts (1-based, dense)."""
    pat = re.compile(re.escape(prefix) + r"\[(\d+)\]\.(.*)")
    groups: dict[int, dict[str, object]] = {}
    for key, val in items.items():
        m = pat.fullmatch(key)
        if m:
            groups.setdefault(int(m.group(1)), {})[m.group(2)] = val
    if not groups:
        return []
    n = max(groups)
    if sorted(groups) != list(range(1, n + 1)):
        raise ParseError(f"indices of {prefix}[...] are not dense 1..{n}")
    return [groups[i] for i in range(1, n + 1)]
