"""TOML spec files: parse, serialize, and exact rational (de)coding.

Schema::

    name = "x3"                    # optional
    dimension = 2
    eigenvalues = [1]              # ascending; ints, floats or "3/2" strings
    blocks = [[2]]                 # block sizes per eigenvalue
    brackets = [[1, 2, 3, 1]]      # sparse (i, j, k, value): [e_i, e_j] has e_k-coefficient value

Bracket indices are 1-based in the Jordan basis.  An entry (i, j) implies
its mirror (j, i) with the opposite sign unless the mirror is listed too.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import tomli
import tomli_w

from .errors import InputError, SpecParseError
from .lie import HeintzeSpec, JordanSpec, LieAlgebraSpec, as_fraction

__all__ = ["parse_spec", "load_spec", "dump_spec", "save_spec", "spec_to_dict", "rational_str"]


def rational_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _rational(value, where: str) -> Fraction:
    try:
        return as_fraction(value)
    except InputError as exc:
        raise SpecParseError(f"{where}: {exc}") from None


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecParseError(f"{where}: expected an integer, got {value!r}")
    return value


def _list(value, where: str) -> list:
    if not isinstance(value, list):
        raise SpecParseError(f"{where}: expected an array, got {type(value).__name__}")
    return value


def spec_from_dict(data: dict, source: str = "<spec>") -> HeintzeSpec:
    for key in ("dimension", "eigenvalues", "blocks"):
        if key not in data:
            raise SpecParseError(f"{source}: missing field '{key}'")
    unknown = set(data) - {"name", "dimension", "eigenvalues", "blocks", "brackets"}
    if unknown:
        raise SpecParseError(f"{source}: unknown field(s) {sorted(unknown)}")
    n = _int(data["dimension"], f"{source}: dimension")
    if n < 1:
        raise SpecParseError(f"{source}: dimension must be positive")
    eig = [_rational(v, f"{source}: eigenvalues[{a}]") for a, v in enumerate(_list(data["eigenvalues"], f"{source}: eigenvalues"))]
    blocks = []
    for a, b in enumerate(_list(data["blocks"], f"{source}: blocks")):
        sizes = [_int(m, f"{source}: blocks[{a}][{c}]") for c, m in enumerate(_list(b, f"{source}: blocks[{a}]"))]
        if not sizes or min(sizes) < 1:
            raise SpecParseError(f"{source}: blocks[{a}] needs positive block sizes")
        blocks.append(sizes)
    entries = []
    for a, t in enumerate(_list(data.get("brackets", []), f"{source}: brackets")):
        where = f"{source}: brackets[{a}]"
        t = _list(t, where)
        if len(t) != 4:
            raise SpecParseError(f"{where}: expected (i, j, k, value), got {len(t)} entries")
        i, j, k = (_int(x, where) for x in t[:3])
        if not all(1 <= x <= n for x in (i, j, k)):
            raise SpecParseError(f"{where}: index out of range 1..{n}")
        entries.append((i, j, k, _rational(t[3], where)))
    name = data.get("name", "")
    if not isinstance(name, str):
        raise SpecParseError(f"{source}: name must be a string")
    try:
        jordan = JordanSpec(tuple(eig), tuple(tuple(b) for b in blocks))
        algebra = LieAlgebraSpec.from_brackets(n, entries)
    except InputError as exc:
        raise SpecParseError(f"{source}: {exc}") from None
    return HeintzeSpec(algebra, jordan, name)


def parse_spec(text: str, source: str = "<spec>") -> HeintzeSpec:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        if line is None:
            line = text.count("\n", 0, getattr(exc, "pos", len(text)) or 0) + 1
        where = f"line {line}" + (f", column {col}" if col is not None else "")
        raise SpecParseError(f"{source}: {where}: {getattr(exc, 'msg', exc)}") from None
    return spec_from_dict(data, source)


def load_spec(path) -> HeintzeSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"{path}: {exc.strerror}") from None
    return parse_spec(text, str(path))


def _toml_number(x: Fraction):
    return int(x) if x.denominator == 1 else rational_str(x)


def _bracket_entries(alg: LieAlgebraSpec) -> list[list]:
    """The i < j half; a pair that is not antisymmetric is written out in both orders."""
    c, n = alg.c, alg.n
    out = []

    def row(i, j, mark):
        ks = [k for k in range(n) if c[i][j][k] != 0]
        if not ks and mark:
            out.append([i + 1, j + 1, 1, 0])  # listed so that parsing does not mirror the other half
        out.extend([i + 1, j + 1, k + 1, _toml_number(c[i][j][k])] for k in ks)

    for i in range(n):
        row(i, i, False)
        for j in range(i + 1, n):
            skew = all(c[j][i][k] == -c[i][j][k] for k in range(n))
            row(i, j, not skew)
            if not skew:
                row(j, i, True)
    return out


def spec_to_dict(spec: HeintzeSpec) -> dict:
    out: dict = {}
    if spec.name:
        out["name"] = spec.name
    out["dimension"] = spec.n
    out["eigenvalues"] = [_toml_number(m) for m in spec.jordan.eigenvalues]
    out["blocks"] = [list(b) for b in spec.jordan.blocks]
    out["brackets"] = _bracket_entries(spec.algebra)
    return out


def dump_spec(spec: HeintzeSpec) -> str:
    return tomli_w.dumps(spec_to_dict(spec))


def save_spec(spec: HeintzeSpec, path) -> None:
    Path(path).write_text(dump_spec(spec), encoding="utf-8")
