"""Experiment files: parsing, execution and reports.

The file format is documented in ``docs/experiment_format.md``.  Run with::

    nctraces experiments/basics.exp --format text --oracle
"""

from __future__ import annotations

import argparse
import json
import re
import shlex
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import checks, engine, fock
from .cumulants import CumulantKind, univariate_transform
from .expressions import (
    Centered,
    ConstantLetter,
    ConstantProfile,
    Ensemble,
    ExpressionError,
    RandomLetter,
    TraceExpression,
    Word,
    iter_letters,
    max_random_letters,
    shifted,
)
from .npoly import NPolynomial, leading_term
from .partitions import (
    enumerate_interval_partitions,
    enumerate_noncrossing_pairings,
    enumerate_noncrossing_partitions,
    enumerate_pair_partitions,
    enumerate_set_partitions,
    interval_pairing,
)
from .scalars import ScalarSyntaxError, format_scalar, parse_rational, parse_scalar
from .wick import GramError, GramSpace, boolean_wick, classical_wick, free_wick

MAX_R = 5
MAX_LETTERS = 12
MAX_ORACLE_N = 6
ORACLE_NS = (2, 3, 4)

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_ENSEMBLES = {"S": Ensemble.FREE_CIRCULAR, "B": Ensemble.BOOLEAN_BERNOULLI, "G": Ensemble.CLASSICAL_GAUSSIAN}
_KINDS = {k.value: k for k in CumulantKind}


# -- errors -------------------------------------------------------------------------

class ExperimentError(Exception):
    """A located problem in an experiment file."""

    category = "experiment"

    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<input>") -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column
        self.source = source

    def __str__(self) -> str:
        return f"{self.source}:{self.line}:{self.column}: {self.category} error: {self.message}"


class ExperimentSyntaxError(ExperimentError):
    category = "syntax"


class UnresolvedNameError(ExperimentError):
    category = "name"


class ValidationError(ExperimentError):
    category = "validation"


class BoundError(ExperimentError):
    category = "bound"


# -- file model ----------------------------------------------------------------------

@dataclass
class Query:
    index: int
    kind: str
    params: dict[str, str]
    operands: list[str]
    line: int
    text: str


@dataclass
class ExperimentFile:
    source: str
    gram: GramSpace
    constants: dict[str, ConstantProfile]
    words: dict[str, Word]
    queries: list[Query]
    word_lines: dict[str, int] = field(default_factory=dict)

    def expression(self, names: Sequence[str]) -> TraceExpression:
        return TraceExpression(tuple(self.words[n] for n in names), self.gram, self.constants)


QUERY_KINDS = {
    # kind: (required params, optional params, operand rule)
    "moment": ((), ("expect",), "words"),
    "cumulant": (("r", "kind"), ("expect",), "words"),
    "connected": ((), ("expect",), "words"),
    "scaling": (("r",), ("kind",), "words"),
    "covariance_formula": (("left", "right"), (), "none"),
    "first_order": ((), ("expect",), "word"),
    "freeness_check": ((), (), "words"),
    "monotone_suite": (("N",), ("instances", "seed"), "none"),
    "property_star": ((), (), "none"),
    "oracle_compare": (("N", "depth"), ("of", "kind"), "words"),
    "wick": (("kind",), ("expect",), "vectors"),
    "transform": (("kind", "direction"), ("expect",), "scalars"),
    "count": (("set", "n"), ("expect",), "none"),
}

_SETS = {
    "P": enumerate_set_partitions,
    "NC": enumerate_noncrossing_partitions,
    "I": enumerate_interval_partitions,
    "P2": enumerate_pair_partitions,
    "NC2": enumerate_noncrossing_pairings,
    "I2": lambda n: [p for p in [interval_pairing(n)] if p is not None],
}


class _Parser:
    def __init__(self, text: str, source: str) -> None:
        self.source = source
        self.lines = text.splitlines()
        self.gram: GramSpace | None = None
        self.constants: dict[str, ConstantProfile] = {}
        self.words: dict[str, Word] = {}
        self.word_lines: dict[str, int] = {}
        self.queries: list[Query] = []

    def err(self, cls, msg: str, line: int, col: int = 1):
        return cls(msg, line, col, self.source)

    # helpers
    def scalar(self, tok: str, line: int, col: int):
        try:
            return parse_scalar(tok)
        except ScalarSyntaxError as exc:
            raise self.err(ExperimentSyntaxError, str(exc), line, col) from None

    def integer(self, tok: str, line: int, col: int, what: str) -> int:
        if not re.fullmatch(r"\d+", tok):
            raise self.err(ExperimentSyntaxError, f"{what} must be a nonnegative integer, got {tok!r}", line, col)
        return int(tok)

    def parse(self) -> ExperimentFile:
        section = None
        i = 0
        seen = set()
        while i < len(self.lines):
            lineno = i + 1
            raw = self.lines[i].split("#", 1)[0].rstrip()
            i += 1
            if not raw.strip():
                continue
            col = len(raw) - len(raw.lstrip()) + 1
            head = raw.split()[0]
            if head in ("GRAM", "CONSTANTS", "WORDS", "QUERIES"):
                if head in seen:
                    raise self.err(ExperimentSyntaxError, f"duplicate {head} section", lineno, col)
                seen.add(head)
                section = head
                if head == "GRAM":
                    i = self.parse_gram(raw, lineno, i)
                    section = None
                elif len(raw.split()) > 1:
                    raise self.err(ExperimentSyntaxError, f"unexpected text after {head}", lineno, col)
                continue
            if section == "CONSTANTS":
                self.parse_constant(raw, lineno)
            elif section == "WORDS":
                self.parse_word_def(raw, lineno)
            elif section == "QUERIES":
                self.parse_query(raw, lineno)
            else:
                raise self.err(ExperimentSyntaxError, f"line outside any section: {raw.strip()!r}", lineno, col)
        if self.gram is None:
            raise self.err(ExperimentSyntaxError, "missing GRAM section", len(self.lines) or 1)
        return ExperimentFile(self.source, self.gram, self.constants, self.words, self.queries, self.word_lines)

    def parse_gram(self, raw: str, lineno: int, nxt: int) -> int:
        toks = raw.split()
        if len(toks) < 2:
            raise self.err(ExperimentSyntaxError, "GRAM needs the number of vectors", lineno, len(raw) + 1)
        k = self.integer(toks[1], lineno, raw.index(toks[1], 4) + 1, "vector count")
        if k < 1:
            raise self.err(ValidationError, "at least one vector required", lineno, raw.index(toks[1], 4) + 1)
        names = toks[2:]
        if names and len(names) != k:
            raise self.err(ValidationError, f"{k} vectors but {len(names)} names", lineno, raw.index(names[0]) + 1)
        for n in names:
            if not re.fullmatch(_NAME, n):
                raise self.err(ExperimentSyntaxError, f"bad vector name {n!r}", lineno, raw.index(n) + 1)
        if len(set(names)) != len(names):
            raise self.err(ValidationError, "duplicate vector names", lineno)
        rows = []
        i = nxt
        while len(rows) < k:
            if i >= len(self.lines):
                raise self.err(ExperimentSyntaxError, f"GRAM expects {k} rows, found {len(rows)}", i or 1)
            row_raw = self.lines[i].split("#", 1)[0]
            i += 1
            if not row_raw.strip():
                continue
            toks_row = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", row_raw)]
            if len(toks_row) != k:
                raise self.err(ExperimentSyntaxError, f"Gram row needs {k} entries, got {len(toks_row)}", i, 1)
            rows.append(tuple(self.scalar(t, i, c) for t, c in toks_row))
        try:
            self.gram = GramSpace(tuple(rows), tuple(names))
        except GramError as exc:
            raise self.err(ValidationError, str(exc), lineno) from None
        try:
            fock.realize_gram(self.gram.gram)
        except fock.RealizationError as exc:
            raise self.err(ValidationError, str(exc), lineno) from None
        return i

    def parse_constant(self, raw: str, lineno: int) -> None:
        toks = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", raw)]
        name, col = toks[0]
        if not re.fullmatch(_NAME, name):
            raise self.err(ExperimentSyntaxError, f"bad constant name {name!r}", lineno, col)
        if name in self.constants:
            raise self.err(ValidationError, f"constant {name!r} defined twice", lineno, col)
        if len(toks) < 2:
            raise self.err(ExperimentSyntaxError, "constant needs 'identity' or a dimension", lineno, col + len(name))
        if toks[1][0] == "identity":
            d0 = 1
            if len(toks) == 3:
                d0 = self.integer(toks[2][0], lineno, toks[2][1], "dimension")
            elif len(toks) > 3:
                raise self.err(ExperimentSyntaxError, "unexpected entries after identity", lineno, toks[3][1])
            if d0 < 1:
                raise self.err(ValidationError, "dimension must be positive", lineno, toks[2][1])
            self.constants[name] = ConstantProfile.identity(name, d0)
            return
        d0 = self.integer(toks[1][0], lineno, toks[1][1], "dimension")
        if d0 < 1:
            raise self.err(ValidationError, "dimension must be positive", lineno, toks[1][1])
        entries = toks[2:]
        if len(entries) != d0 * d0:
            raise self.err(ExperimentSyntaxError, f"{name}: {d0}x{d0} matrix needs {d0 * d0} entries, got {len(entries)}",
                           lineno, entries[0][1] if entries else toks[1][1])
        vals = [self.scalar(t, lineno, c) for t, c in entries]
        self.constants[name] = ConstantProfile(name, tuple(tuple(vals[r * d0:(r + 1) * d0]) for r in range(d0)))

    # words
    _TOKEN = re.compile(
        r"\s*(?:(?P<open>\()|(?P<close>\)(?:~|-lim|-(?P<shift>\([^)]*\)|-?\d+(?:/\d+)?))?)"
        r"|(?P<pow>\^\d+)|(?P<letter>[SBGC]:" + _NAME + r")|(?P<ref>@" + _NAME + r")|(?P<bad>\S))")

    def tokenize(self, text: str, lineno: int, offset: int):
        toks = []
        pos = 0
        while pos < len(text):
            m = self._TOKEN.match(text, pos)
            if not m or m.end() == pos:
                break
            if m.group("bad"):
                raise self.err(ExperimentSyntaxError, f"unexpected character {m.group('bad')!r}",
                               lineno, offset + m.start("bad"))
            kind = next(k for k in ("open", "close", "pow", "letter", "ref") if m.group(k))
            toks.append((kind, m.group(kind), offset + m.start(kind), m.group("shift")))
            pos = m.end()
        return toks

    def parse_word_def(self, raw: str, lineno: int) -> None:
        m = re.match(r"\s*(" + _NAME + r")\s*=\s*", raw)
        if not m:
            raise self.err(ExperimentSyntaxError, "word definitions look like 'NAME = letters'", lineno,
                           len(raw) - len(raw.lstrip()) + 1)
        name = m.group(1)
        if name in self.words:
            raise self.err(ValidationError, f"word {name!r} defined twice", lineno, m.start(1) + 1)
        toks = self.tokenize(raw[m.end():], lineno, m.end() + 1)
        if not toks:
            raise self.err(ExperimentSyntaxError, f"word {name!r} is empty", lineno, m.end() + 1)
        word, pos = self.parse_items(toks, 0, lineno, top=True)
        if pos != len(toks):
            raise self.err(ExperimentSyntaxError, "unbalanced ')'", lineno, toks[pos][2])
        kinds = {l.ensemble.value for l in iter_letters(word) if isinstance(l, RandomLetter)}
        if len(kinds) > 1:
            raise self.err(ValidationError, f"word {name!r} mixes ensembles: {', '.join(sorted(kinds))}",
                           lineno, m.end() + 1)
        self.words[name] = word
        self.word_lines[name] = lineno

    def parse_items(self, toks, pos: int, lineno: int, top: bool):
        items: list = []
        while pos < len(toks):
            kind, text, col, shift = toks[pos]
            if kind == "close":
                if top:
                    raise self.err(ExperimentSyntaxError, "unbalanced ')'", lineno, col)
                return tuple(items), pos
            if kind == "pow":
                raise self.err(ExperimentSyntaxError, "'^' must follow a letter or group", lineno, col)
            if kind == "open":
                inner, pos = self.parse_items(toks, pos + 1, lineno, top=False)
                if pos >= len(toks):
                    raise self.err(ExperimentSyntaxError, "missing ')'", lineno, col)
                if not inner:
                    raise self.err(ExperimentSyntaxError, "empty group", lineno, col)
                _, close, ccol, shift = toks[pos]
                pos += 1
                if close == ")~":
                    atom = (Centered(inner),)
                elif close == ")-lim":
                    atom = (self.deterministic_center(inner, lineno, ccol),)
                elif shift is not None:
                    atom = (shifted(inner, self.scalar(shift, lineno, ccol + 2)),)
                else:
                    atom = inner
            elif kind == "letter":
                atom = (self.letter(text, lineno, col),)
                pos += 1
            else:
                ref = text[1:]
                if ref not in self.words:
                    raise self.err(UnresolvedNameError, f"undefined word {ref!r}", lineno, col)
                atom = self.words[ref]
                pos += 1
            if pos < len(toks) and toks[pos][0] == "pow":
                k = int(toks[pos][1][1:])
                if k < 1:
                    raise self.err(ValidationError, "powers must be positive", lineno, toks[pos][2])
                atom = atom * k
                pos += 1
            items.extend(atom)
        if not top:
            return tuple(items), pos
        return tuple(items), pos

    def letter(self, text: str, lineno: int, col: int):
        tag, name = text.split(":", 1)
        if tag == "C":
            if name not in self.constants:
                raise self.err(UnresolvedNameError, f"undefined constant {name!r}", lineno, col + 2)
            return ConstantLetter(name)
        assert self.gram is not None
        try:
            return RandomLetter(_ENSEMBLES[tag], self.gram.index(name))
        except KeyError:
            raise self.err(UnresolvedNameError, f"undefined vector {name!r}", lineno, col + 2) from None

    def deterministic_center(self, inner: Word, lineno: int, col: int):
        try:
            c = engine.first_order_limit(inner, self.gram, self.constants)
        except (engine.EngineError, ExpressionError) as exc:
            raise self.err(ValidationError, f"cannot center: {exc}", lineno, col) from None
        return shifted(inner, c)

    # queries
    def parse_query(self, raw: str, lineno: int) -> None:
        try:
            parts = shlex.split(raw)
        except ValueError as exc:
            raise self.err(ExperimentSyntaxError, str(exc), lineno) from None
        kind = parts[0]
        base = len(raw) - len(raw.lstrip()) + 1

        def col_of(tok: str) -> int:
            idx = raw.find(tok)
            return idx + 1 if idx >= 0 else base

        if kind not in QUERY_KINDS:
            raise self.err(ExperimentSyntaxError, f"unknown query kind {kind!r}", lineno, base)
        required, optional, rule = QUERY_KINDS[kind]
        params: dict[str, str] = {}
        operands: list[str] = []
        for tok in parts[1:]:
            if "=" in tok:
                key, val = tok.split("=", 1)
                if key not in required and key not in optional:
                    raise self.err(ExperimentSyntaxError, f"{kind} does not take {key}=", lineno, col_of(tok))
                params[key] = val
            else:
                operands.append(tok)
        for key in required:
            if key not in params:
                raise self.err(ExperimentSyntaxError, f"{kind} requires {key}=", lineno, base)
        q = Query(len(self.queries) + 1, kind, params, operands, lineno, raw.strip())
        self.validate_query(q, rule, col_of)
        self.queries.append(q)

    def validate_query(self, q: Query, rule: str, col_of) -> None:
        line = q.line
        if rule == "none" and q.operands:
            raise self.err(ExperimentSyntaxError, f"{q.kind} takes no operands", line, col_of(q.operands[0]))
        if rule in ("words", "word"):
            if not q.operands:
                raise self.err(ExperimentSyntaxError, f"{q.kind} needs at least one word", line)
            if rule == "word" and len(q.operands) != 1:
                raise self.err(ExperimentSyntaxError, f"{q.kind} takes exactly one word", line, col_of(q.operands[1]))
            for w in q.operands:
                if w not in self.words:
                    raise self.err(UnresolvedNameError, f"undefined word {w!r}", line, col_of(w))
            if q.kind != "freeness_check" and len(q.operands) > MAX_R:
                raise self.err(BoundError, f"at most {MAX_R} trace factors", line, col_of(q.operands[MAX_R]))
            letters = sum(max_random_letters(self.words[w]) for w in q.operands)
            if letters > MAX_LETTERS:
                raise self.err(BoundError, f"{letters} random letters exceed the bound {MAX_LETTERS}", line)
            try:
                if q.kind == "freeness_check":
                    TraceExpression((tuple(x for w in q.operands for x in self.words[w]),), self.gram, self.constants)
                else:
                    TraceExpression(tuple(self.words[w] for w in q.operands), self.gram, self.constants)
            except ExpressionError as exc:
                raise self.err(ValidationError, str(exc), line) from None
        if rule == "vectors":
            for v in q.operands:
                try:
                    self.gram.index(v)
                except KeyError:
                    raise self.err(UnresolvedNameError, f"undefined vector {v!r}", line, col_of(v)) from None
            if len(q.operands) > MAX_LETTERS:
                raise self.err(BoundError, f"at most {MAX_LETTERS} fields", line)
        if rule == "scalars":
            for s in q.operands:
                self.scalar(s, line, col_of(s))
            if len(q.operands) > 12:
                raise self.err(BoundError, "at most 12 terms", line)
        p = q.params
        if "r" in p:
            r = self.integer(p["r"], line, col_of("r="), "r")
            if not 1 <= r <= MAX_R:
                raise self.err(BoundError, f"r must be between 1 and {MAX_R}", line, col_of("r="))
            if r != len(q.operands):
                raise self.err(ValidationError, f"r={r} but {len(q.operands)} words given", line, col_of("r="))
        if "kind" in p and q.kind != "wick" and p["kind"] not in _KINDS:
            raise self.err(ValidationError, f"kind must be one of {', '.join(_KINDS)}", line, col_of("kind="))
        if q.kind == "wick" and p["kind"] not in ("free", "boolean", "classical"):
            raise self.err(ValidationError, "wick kind must be free, boolean or classical", line, col_of("kind="))
        if "kind" in p and q.kind in ("cumulant", "scaling", "oracle_compare"):
            expr = TraceExpression(tuple(self.words[w] for w in q.operands), self.gram, self.constants)
            try:
                engine._check_kind(_KINDS[p["kind"]], expr)
            except engine.EngineError as exc:
                raise self.err(ValidationError, str(exc), line, col_of("kind=")) from None
        for key in ("N", "depth", "instances", "seed", "n"):
            if key in p:
                v = self.integer(p[key], line, col_of(key + "="), key)
                if key == "N" and not 1 <= v <= MAX_ORACLE_N:
                    raise self.err(BoundError, f"N must be between 1 and {MAX_ORACLE_N}", line, col_of("N="))
                if key == "n" and not 1 <= v <= 12:
                    raise self.err(BoundError, "n must be between 1 and 12", line, col_of("n="))
                if key == "instances" and not 1 <= v <= 50:
                    raise self.err(BoundError, "instances must be between 1 and 50", line, col_of("instances="))
        if q.kind == "oracle_compare":
            if p.get("of", "cumulant") not in ("moment", "cumulant"):
                raise self.err(ValidationError, "of= must be moment or cumulant", line, col_of("of="))
            expr = TraceExpression(tuple(self.words[w] for w in q.operands), self.gram, self.constants)
            if int(p["N"]) % expr.d0:
                raise self.err(ValidationError, f"N={p['N']} is not a multiple of d0={expr.d0}", line, col_of("N="))
        if q.kind == "covariance_formula":
            for side in ("left", "right"):
                q.params[side + "_parsed"] = self.covariance_side(p[side], line, col_of(side + "="))
        if q.kind == "monotone_suite" and len(self.constants) > 10 ** 6:
            raise self.err(BoundError, "too many constants", line)
        if q.kind == "transform" and p["direction"] not in ("to_cumulants", "to_moments"):
            raise self.err(ValidationError, "direction must be to_cumulants or to_moments", line, col_of("direction="))
        if q.kind == "count" and p["set"] not in _SETS:
            raise self.err(ValidationError, f"set must be one of {', '.join(_SETS)}", line, col_of("set="))
        if "expect" in p and q.kind == "transform":
            for tok in p["expect"].split():
                self.scalar(tok, line, col_of("expect="))
        elif "expect" in p:
            try:
                NPolynomial.parse(p["expect"])
            except (ValueError, ScalarSyntaxError) as exc:
                raise self.err(ExperimentSyntaxError, f"bad expect= value: {exc}", line, col_of("expect=")) from None

    def covariance_side(self, spec: str, line: int, col: int):
        items = []
        for item in spec.split(","):
            m = re.fullmatch(r"(" + _NAME + r"):(" + _NAME + r")(?:\^(\d+))?", item)
            if not m:
                raise self.err(ExperimentSyntaxError, f"covariance items look like CONST:vector^k, got {item!r}", line, col)
            cname, vname, k = m.group(1), m.group(2), int(m.group(3) or 1)
            if cname not in self.constants:
                raise self.err(UnresolvedNameError, f"undefined constant {cname!r}", line, col)
            try:
                v = self.gram.index(vname)
            except KeyError:
                raise self.err(UnresolvedNameError, f"undefined vector {vname!r}", line, col) from None
            if k < 1:
                raise self.err(ValidationError, "powers must be positive", line, col)
            items.append((cname, v, k))
        if sum(k for _, _, k in items) > MAX_LETTERS // 2:
            raise self.err(BoundError, "covariance sides are limited to 6 random letters each", line, col)
        return items


def parse_text(text: str, source: str = "<input>") -> ExperimentFile:
    return _Parser(text, source).parse()


def parse_experiment(path: str | Path) -> ExperimentFile:
    """Read and validate an experiment file; raises :class:`ExperimentError` subclasses."""
    p = Path(path)
    return parse_text(p.read_text(encoding="utf-8"), str(p))


# -- running ---------------------------------------------------------------------------

def _poly_record(p: NPolynomial | None):
    if p is None:
        return None
    return [[k, format_scalar(p.coeff(k))] for k in sorted(p.terms, reverse=True)]


def _degree(p: NPolynomial):
    d = leading_term(p)[0]
    return "-inf" if d == float("-inf") else d


def _record(q: Query) -> dict:
    return {"query_index": q.index, "kind": q.kind, "query": q.text, "polynomial": None,
            "degree": None, "bound": None, "verdict": None, "oracle_value": None, "details": {}}


def _expect(rec: dict, q: Query, poly: NPolynomial) -> None:
    if "expect" in q.params:
        ok = poly == NPolynomial.parse(q.params["expect"])
        rec["details"]["expected"] = q.params["expect"]
        rec["verdict"] = "PASS" if ok else "FAIL"


def _oracle_values(expr: TraceExpression, poly_of_n, kind: CumulantKind | None) -> tuple[dict, bool]:
    """Oracle values at ``N`` in ``ORACLE_NS`` (multiples of ``d0``); returns ``(values, all_match)``."""
    values: dict[str, str] = {}
    ok = True
    for n in ORACLE_NS:
        if n % expr.d0:
            continue
        try:
            if kind is None or expr.r == 1:
                val = fock.oracle_moment(expr, n)
            else:
                val = fock.oracle_cumulant(kind, expr, n)
        except fock.DimensionError:
            values[str(n)] = "skipped: dimension bound"
            continue
        values[str(n)] = format_scalar(val)
        ok &= val == poly_of_n(n)
    return values, ok


class Runner:
    def __init__(self, exp: ExperimentFile, oracle: bool = False) -> None:
        self.exp = exp
        self.oracle = oracle

    def run(self) -> list[dict]:
        return [self.run_query(q) for q in self.exp.queries]

    def run_query(self, q: Query) -> dict:
        rec = _record(q)
        try:
            getattr(self, "q_" + q.kind)(q, rec)
        except (engine.EngineError, ExpressionError, fock.ExactnessError, fock.DimensionError,
                fock.RealizationError, ValueError) as exc:
            rec["verdict"] = "ERROR"
            rec["details"]["error"] = f"query {q.index} (line {q.line}): {type(exc).__name__}: {exc}"
        return rec

    def _poly(self, rec: dict, poly: NPolynomial) -> None:
        rec["polynomial"] = _poly_record(poly)
        rec["degree"] = _degree(poly)

    def _cross(self, rec: dict, expr, poly: NPolynomial, kind) -> None:
        if not self.oracle:
            return
        values, ok = _oracle_values(expr, poly.evaluate, kind)
        rec["oracle_value"] = values
        if not ok:
            rec["verdict"] = "FAIL"
            rec["details"]["oracle"] = "mismatch"
        elif rec["verdict"] is None:
            rec["verdict"] = "PASS"

    def q_moment(self, q: Query, rec: dict) -> None:
        expr = self.exp.expression(q.operands)
        poly = engine.moment_of_traces(expr)
        self._poly(rec, poly)
        _expect(rec, q, poly)
        self._cross(rec, expr, poly, None)

    def q_cumulant(self, q: Query, rec: dict) -> None:
        expr = self.exp.expression(q.operands)
        kind = _KINDS[q.params["kind"]]
        poly = engine.cumulant_of_traces(kind, expr)
        self._poly(rec, poly)
        _expect(rec, q, poly)
        self._cross(rec, expr, poly, kind)

    def q_connected(self, q: Query, rec: dict) -> None:
        expr = self.exp.expression(q.operands)
        poly = engine.connected_pairing_cumulant(expr)
        lattice = engine.cumulant_of_traces(CumulantKind.FREE, expr)
        self._poly(rec, poly)
        rec["details"]["lattice_cumulant"] = str(lattice)
        rec["verdict"] = "PASS" if poly == lattice else "FAIL"
        if "expect" in q.params and poly != NPolynomial.parse(q.params["expect"]):
            rec["verdict"] = "FAIL"
            rec["details"]["expected"] = q.params["expect"]

    def q_scaling(self, q: Query, rec: dict) -> None:
        expr = self.exp.expression(q.operands)
        kind = _KINDS[q.params["kind"]] if "kind" in q.params else engine.default_kind(expr)
        sr = engine.scaling_record(expr, kind)
        self._poly(rec, sr.polynomial)
        rec["bound"] = sr.bound
        rec["verdict"] = "PASS" if sr.passed else "FAIL"
        self._cross(rec, expr, sr.polynomial, kind)

    def _covariance(self, q: Query):
        sides = []
        for side in ("left", "right"):
            items = q.params[side + "_parsed"]
            sides.append(([self.exp.constants[c] for c, _, _ in items], [(v, k) for _, v, k in items]))
        (A, p), (Bc, qw) = sides
        return checks.second_order_covariance_check(A, p, Bc, qw, self.exp.gram)

    def q_covariance_formula(self, q: Query, rec: dict) -> None:
        try:
            res = self._covariance(q)
        except checks.HypothesisViolation as exc:
            rec["verdict"] = "NOTICE"
            rec["details"]["hypothesis"] = str(exc)
            return
        self._poly(rec, res.lhs)
        rec["details"]["rhs"] = str(res.rhs)
        rec["verdict"] = "PASS" if res.equal else "FAIL"
        if self.oracle:
            items = [q.params[s + "_parsed"] for s in ("left", "right")]
            A = [self.exp.constants[c] for c, _, _ in items[0]]
            Bc = [self.exp.constants[c] for c, _, _ in items[1]]
            expr = checks.covariance_expression(A, [(v, k) for _, v, k in items[0]],
                                                Bc, [(v, k) for _, v, k in items[1]], self.exp.gram)
            values, ok = _oracle_values(expr, res.lhs.evaluate, CumulantKind.FREE)
            rec["oracle_value"] = values
            if not ok:
                rec["verdict"] = "FAIL"

    def q_first_order(self, q: Query, rec: dict) -> None:
        val = engine.first_order_limit(self.exp.words[q.operands[0]], self.exp.gram, self.exp.constants)
        poly = NPolynomial.constant(val)
        self._poly(rec, poly)
        _expect(rec, q, poly)

    def q_freeness_check(self, q: Query, rec: dict) -> None:
        val = engine.asymptotic_freeness_check([self.exp.words[w] for w in q.operands],
                                               self.exp.gram, self.exp.constants)
        self._poly(rec, NPolynomial.constant(val))
        rec["verdict"] = "PASS" if val == 0 else "FAIL"

    def q_monotone_suite(self, q: Query, rec: dict) -> None:
        N = int(q.params["N"])
        rep = checks.monotone_suite(self.exp.gram, N, int(q.params.get("instances", 8)), int(q.params.get("seed", 0)))
        held = sum(r.holds and r.engine_agrees for r in rep.records)
        d = rec["details"]
        d["instances"] = str(len(rep.records))
        d["holding"] = str(held)
        for r in rep.records:
            if not (r.holds and r.engine_agrees):
                d[f"failed.{r.label}"] = f"{format_scalar(r.lhs)} vs {format_scalar(r.rhs)}"
        d["arbitration"] = rep.verdict
        d["arbitration_instances"] = str(len(rep.arbitration))
        d["tr_A_reading_holds"] = str(sum(a.tr_a_holds for a in rep.arbitration))
        d["tr_D_reading_holds"] = str(sum(a.tr_d_holds for a in rep.arbitration))
        note = rep.scope_note
        d["outside_generated_algebra"] = (f"{note.identity}: {format_scalar(note.lhs)} vs "
                                          f"{format_scalar(note.rhs)}")
        rec["verdict"] = "PASS" if rep.passed else "FAIL"

    def q_property_star(self, q: Query, rec: dict) -> None:
        parts = {"freeness": [0, 0], "covariance": [0, 0], "scaling": [0, 0]}
        notices = 0
        for other in self.exp.queries:
            if other.kind == "freeness_check":
                r = self.run_query(other)
                parts["freeness"][0] += 1
                parts["freeness"][1] += r["verdict"] == "PASS"
            elif other.kind == "covariance_formula":
                r = self.run_query(other)
                if r["verdict"] == "NOTICE":
                    notices += 1
                else:
                    parts["covariance"][0] += 1
                    parts["covariance"][1] += r["verdict"] == "PASS"
            elif other.kind == "scaling" and len(other.operands) >= 3:
                r = self.run_query(other)
                parts["scaling"][0] += 1
                parts["scaling"][1] += r["verdict"] == "PASS"
        d = rec["details"]
        for name, (total, ok) in parts.items():
            d[name] = f"{ok}/{total}"
        d["hypothesis_notices"] = str(notices)
        rec["verdict"] = "PASS" if all(ok == total for total, ok in parts.values()) else "FAIL"

    def q_oracle_compare(self, q: Query, rec: dict) -> None:
        expr = self.exp.expression(q.operands)
        N, depth = int(q.params["N"]), int(q.params["depth"])
        of = q.params.get("of", "cumulant")
        if of == "moment" or expr.r == 1:
            poly = engine.moment_of_traces(expr)
            val = fock.oracle_moment(expr, N, depth=depth)
        else:
            kind = _KINDS[q.params["kind"]] if "kind" in q.params else engine.default_kind(expr)
            poly = engine.cumulant_of_traces(kind, expr)
            val = fock.oracle_cumulant(kind, expr, N, depth=depth)
        self._poly(rec, poly)
        eng = poly.evaluate(N)
        rec["oracle_value"] = {str(N): format_scalar(val)}
        rec["details"]["engine_value"] = format_scalar(eng)
        rec["verdict"] = "PASS" if eng == val else "FAIL"

    def q_wick(self, q: Query, rec: dict) -> None:
        word = [self.exp.gram.index(v) for v in q.operands]
        fn = {"free": free_wick, "boolean": boolean_wick, "classical": classical_wick}[q.params["kind"]]
        poly = NPolynomial.constant(fn(self.exp.gram, word))
        self._poly(rec, poly)
        _expect(rec, q, poly)
        if self.oracle:
            flavor = {"free": fock.Flavor.FULL, "boolean": fock.Flavor.BOOLEAN,
                      "classical": fock.Flavor.SYMMETRIC}[q.params["kind"]]
            val = fock.field_moment(self.exp.gram, word, flavor)
            rec["oracle_value"] = {"1": format_scalar(val)}
            if val != poly.coeff(0):
                rec["verdict"] = "FAIL"

    def q_transform(self, q: Query, rec: dict) -> None:
        seq = [parse_scalar(s) for s in q.operands]
        out = univariate_transform(_KINDS[q.params["kind"]], seq, q.params["direction"])
        rec["details"]["sequence"] = " ".join(format_scalar(x) for x in out)
        if "expect" in q.params:
            want = [parse_scalar(s) for s in q.params["expect"].split()]
            rec["details"]["expected"] = q.params["expect"]
            rec["verdict"] = "PASS" if want == list(out) else "FAIL"

    def q_count(self, q: Query, rec: dict) -> None:
        n = len(_SETS[q.params["set"]](int(q.params["n"])))
        poly = NPolynomial.constant(n)
        self._poly(rec, poly)
        _expect(rec, q, poly)


def run(exp: ExperimentFile, oracle: bool = False) -> list[dict]:
    """Execute all queries in file order and return one record per query."""
    return Runner(exp, oracle).run()


# -- rendering ---------------------------------------------------------------------------

def render_json(records: list[dict]) -> str:
    return json.dumps(records, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _poly_text(rec: dict) -> str:
    return str(NPolynomial({k: parse_scalar(v) for k, v in rec["polynomial"]}))


def render_text(records: list[dict], verbose: bool = False) -> str:
    out = []
    for rec in records:
        out.append(f"[{rec['query_index']}] {rec['query']}")
        if rec["polynomial"] is not None:
            out.append(f"    polynomial = {_poly_text(rec)}")
            out.append(f"    degree = {rec['degree']}")
        if rec["bound"] is not None:
            out.append(f"    bound = {rec['bound']}")
        for n, v in sorted((rec["oracle_value"] or {}).items()):
            out.append(f"    oracle@{n} = {v}")
        for k, v in sorted(rec["details"].items()):
            if verbose or k in ("error", "hypothesis", "rhs", "sequence", "arbitration", "engine_value") \
                    or k.startswith("failed.") or rec["kind"] in ("monotone_suite", "property_star"):
                out.append(f"    detail.{k} = {v}")
        if rec["verdict"] is not None:
            out.append(f"    verdict = {rec['verdict']}")
        if rec["kind"] == "scaling" and rec["verdict"] in ("PASS", "FAIL"):
            out.append(f"    degree={rec['degree']} bound={rec['bound']} {rec['verdict']}")
        if rec["kind"] == "oracle_compare" and rec["verdict"] in ("PASS", "FAIL"):
            (n, v), = rec["oracle_value"].items()
            rel = "=" if rec["verdict"] == "PASS" else "!="
            out.append(f"    engine@{n} = {rec['details']['engine_value']} {rel} oracle {rec['verdict']}")
    return "\n".join(out) + "\n"


def parse_text_report(text: str) -> list[dict]:
    """Recover ``{index: {key: value}}`` entries from a text report (round-trip checks)."""
    entries: list[dict] = []
    for line in text.splitlines():
        m = re.match(r"^\[(\d+)\] (.*)$", line)
        if m:
            entries.append({"query_index": int(m.group(1)), "query": m.group(2)})
            continue
        m = re.match(r"^    ([\w.@]+) = (.*)$", line)
        if m and entries:
            entries[-1][m.group(1)] = m.group(2)
    return entries


# -- entry point ----------------------------------------------------------------------------

def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nctraces", description="Run exact trace-moment experiments.")
    ap.add_argument("path", nargs="+", help="experiment file(s)")
    ap.add_argument("--format", choices=("text", "json"), default="text", help="report format")
    ap.add_argument("--oracle", action="store_true", help="cross-check engine values with the Fock oracle")
    ap.add_argument("-v", "--verbose", action="store_true", help="show every detail field")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    status = 0
    for path in args.path:
        try:
            exp = parse_experiment(path)
        except ExperimentError as exc:
            print(exc, file=sys.stderr)
            status = 2
            continue
        except OSError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = 2
            continue
        records = run(exp, oracle=args.oracle)
        if len(args.path) > 1 and args.format == "text":
            print(f"== {path}")
        sys.stdout.write(render_json(records) if args.format == "json" else render_text(records, args.verbose))
        if any(r["verdict"] in ("FAIL", "ERROR") for r in records):
            status = max(status, 1)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
