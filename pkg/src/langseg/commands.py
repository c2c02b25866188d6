"""Deterministic command language: natural-language-style instructions are
compiled into small linear programs over the refinement operations.

The grammar is closed: a synonym table maps clause verbs to operations and
a keyword table maps direction phrases (including hyphenated and worded
compounds such as "top-right" or "bottom left corner") to the compass
vocabulary.  Clauses split on commas and the conjunctions "and"/"then";
a clause without a direction applies to the whole roi (Overall).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .grid import Direction


class Op(Enum):
    EXPAND = "EXPAND"
    SHRINK = "SHRINK"
    REMOVE = "REMOVE"
    FILL = "FILL"
    SMOOTH = "SMOOTH"
    FOREGROUND = "FOREGROUND"
    BACKGROUND = "BACKGROUND"
    RESULT = "RESULT"


class CommandError(ValueError):
    """Base class for command parsing failures."""


class EmptyCommand(CommandError):
    pass


class UnrecognizedVerb(CommandError):
    def __init__(self, clause: str):
        super().__init__(f"no known operation verb in clause: {clause!r}")
        self.clause = clause


class AmbiguousDirection(CommandError):
    def __init__(self, clause: str, found: list[Direction]):
        names = ", ".join(d.value for d in found)
        super().__init__(f"conflicting directions ({names}) in clause: {clause!r}")
        self.clause = clause
        self.found = found


class ProgramError(ValueError):
    """Base class for program text failures."""


class ProgramSyntaxError(ProgramError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnknownOp(ProgramError):
    def __init__(self, line_no: int, name: str):
        super().__init__(f"line {line_no}: unknown operation {name!r}")
        self.line_no = line_no
        self.name = name


class UnboundVariable(ProgramError):
    def __init__(self, name: str, line_no: int | None = None):
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}reference to unbound variable {name!r}")
        self.name = name
        self.line_no = line_no


@dataclass(frozen=True)
class Step:
    """One program step: out = op(direction, in) or FINAL = RESULT(var)."""

    op: Op
    direction: Direction | None
    src: str
    out: str


@dataclass(frozen=True)
class Program:
    steps: tuple[Step, ...]

    def validate(self) -> "Program":
        if not self.steps:
            raise ProgramSyntaxError(1, "program has no steps")
        seen = {"MASK"}
        for i, step in enumerate(self.steps):
            line = i + 1
            last = i == len(self.steps) - 1
            if (step.op is Op.RESULT) != last:
                raise ProgramSyntaxError(line, "RESULT must be the final step and only it")
            if step.src not in seen:
                raise UnboundVariable(step.src, line)
            expected_src = "MASK" if i == 0 else self.steps[i - 1].out
            if step.src != expected_src:
                raise ProgramSyntaxError(
                    line, f"step must consume {expected_src}, not {step.src}"
                )
            if not last:
                if step.out in seen:
                    raise ProgramSyntaxError(line, f"output variable {step.out} reused")
                if step.direction is None:
                    raise ProgramSyntaxError(line, f"{step.op.value} requires a direction")
                seen.add(step.out)
        return self


# verb -> operation synonym table
_VERBS = {
    "expand": Op.EXPAND,
    "grow": Op.EXPAND,
    "enlarge": Op.EXPAND,
    "shrink": Op.SHRINK,
    "contract": Op.SHRINK,
    "reduce": Op.SHRINK,
    "remove": Op.REMOVE,
    "delete": Op.REMOVE,
    "erase": Op.REMOVE,
    "fill": Op.FILL,
    "smooth": Op.SMOOTH,
    "smoothen": Op.SMOOTH,
    "foreground": Op.FOREGROUND,
    "background": Op.BACKGROUND,
}

# single direction keywords; compounds pair a vertical with a horizontal
_VERTICAL = {"top": Direction.TOP, "up": Direction.TOP, "upper": Direction.TOP,
             "bottom": Direction.BOTTOM, "down": Direction.BOTTOM, "lower": Direction.BOTTOM}
_HORIZONTAL = {"left": Direction.LEFT, "right": Direction.RIGHT}
_COMPOUND = {
    (Direction.TOP, Direction.LEFT): Direction.TOP_LEFT,
    (Direction.TOP, Direction.RIGHT): Direction.TOP_RIGHT,
    (Direction.BOTTOM, Direction.LEFT): Direction.BOTTOM_LEFT,
    (Direction.BOTTOM, Direction.RIGHT): Direction.BOTTOM_RIGHT,
}

# particles that belong to the verb, not to a direction ("fill up the holes")
_PARTICLES = {"up", "down", "out"}

_CLAUSE_SPLIT = re.compile(r"\s*,\s*|\s+\band\b\s+|\s+\bthen\b\s+|\s*;\s*")
_LEADING_CONJ = re.compile(r"^(?:and|then)\s+")


def _tokenize(clause: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", clause.lower())


def _find_direction(tokens: list[str], clause: str) -> Direction:
    singles: list[Direction] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "overall":
            singles.append(Direction.OVERALL)
        elif tok in _VERTICAL:
            vert = _VERTICAL[tok]
            if i + 1 < len(tokens) and tokens[i + 1] in _HORIZONTAL:
                singles.append(_COMPOUND[(vert, _HORIZONTAL[tokens[i + 1]])])
                i += 2
                continue
            singles.append(vert)
        elif tok in _HORIZONTAL:
            singles.append(_HORIZONTAL[tok])
        i += 1
    distinct = []
    for d in singles:
        if d not in distinct:
            distinct.append(d)
    if len(distinct) > 1:
        raise AmbiguousDirection(clause, distinct)
    return distinct[0] if distinct else Direction.OVERALL


def parse_command(text: str) -> Program:
    """Compile a command string into a validated linear program.

    Raises EmptyCommand, UnrecognizedVerb, or AmbiguousDirection.
    """
    if not text or not text.strip():
        raise EmptyCommand("empty command")
    body = text.strip().strip(".!?")
    steps: list[Step] = []
    for raw in _CLAUSE_SPLIT.split(body):
        clause = _LEADING_CONJ.sub("", raw.strip())
        tokens = _tokenize(clause)
        if not tokens:
            continue
        op = None
        verb_index = -1
        for i, tok in enumerate(tokens):
            if tok in _VERBS:
                op = _VERBS[tok]
                verb_index = i
                break
        if op is None:
            raise UnrecognizedVerb(clause)
        rest = list(tokens)
        if verb_index + 1 < len(rest) and rest[verb_index + 1] in _PARTICLES:
            del rest[verb_index + 1]
        direction = _find_direction(rest[verb_index + 1 :], clause)
        src = "MASK" if not steps else steps[-1].out
        steps.append(Step(op=op, direction=direction, src=src, out=f"OBJ{len(steps)}"))
    if not steps:
        raise EmptyCommand(f"no operation clauses in {text!r}")
    steps.append(Step(op=Op.RESULT, direction=None, src=steps[-1].out, out="FINAL"))
    return Program(steps=tuple(steps)).validate()


_DIR_TOKEN = {
    Direction.TOP: "TOP",
    Direction.BOTTOM: "BOTTOM",
    Direction.LEFT: "LEFT",
    Direction.RIGHT: "RIGHT",
    Direction.TOP_LEFT: "TOP-LEFT",
    Direction.TOP_RIGHT: "TOP-RIGHT",
    Direction.BOTTOM_LEFT: "BOTTOM-LEFT",
    Direction.BOTTOM_RIGHT: "BOTTOM-RIGHT",
    Direction.OVERALL: "OVERALL",
}
_TOKEN_DIR = {v: k for k, v in _DIR_TOKEN.items()}


def render_program(program: Program) -> str:
    """Canonical text form, one step per line, LF endings, trailing newline."""
    program.validate()
    lines = []
    for step in program.steps:
        if step.op is Op.RESULT:
            lines.append(f"{step.out}=RESULT(var={step.src})")
        else:
            token = _DIR_TOKEN[step.direction]
            lines.append(f"{step.out}={step.op.value}(direction='{token}', in={step.src})")
    return "\n".join(lines) + "\n"


_STEP_RE = re.compile(
    r"^(?P<out>[A-Z][A-Z0-9_]*)=(?P<op>[A-Za-z_][A-Za-z0-9_]*)\((?P<args>.*)\)$"
)
_OP_ARGS_RE = re.compile(r"^direction='(?P<dir>[A-Z-]+)',\s*in=(?P<src>[A-Z][A-Z0-9_]*)$")
_RESULT_ARGS_RE = re.compile(r"^var=(?P<src>[A-Z][A-Z0-9_]*)$")


def parse_program(text: str) -> Program:
    """Parse canonical program text; structural inverse of render_program."""
    steps: list[Step] = []
    defined = {"MASK"}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _STEP_RE.match(line)
        if m is None:
            raise ProgramSyntaxError(line_no, f"cannot parse step: {line!r}")
        op_name = m.group("op")
        try:
            op = Op(op_name)
        except ValueError:
            raise UnknownOp(line_no, op_name) from None
        out = m.group("out")
        args = m.group("args")
        if op is Op.RESULT:
            am = _RESULT_ARGS_RE.match(args)
            if am is None:
                raise ProgramSyntaxError(line_no, f"RESULT takes var=<NAME>, got {args!r}")
            direction = None
        else:
            am = _OP_ARGS_RE.match(args)
            if am is None:
                raise ProgramSyntaxError(
                    line_no, f"expected direction='...', in=<NAME>, got {args!r}"
                )
            token = am.group("dir")
            if token not in _TOKEN_DIR:
                raise ProgramSyntaxError(line_no, f"unknown direction token {token!r}")
            direction = _TOKEN_DIR[token]
        src = am.group("src")
        if src not in defined:
            raise UnboundVariable(src, line_no)
        defined.add(out)
        steps.append(Step(op=op, direction=direction, src=src, out=out))
    return Program(steps=tuple(steps)).validate()


class ProgramGenerator:
    """Interface for pluggable command-to-program translation.

    The grammar parser is the default; an adapter calling an external
    language model can be slotted in by subclassing.
    """

    def generate(self, text: str) -> Program:
        raise NotImplementedError


class GrammarProgramGenerator(ProgramGenerator):
    def generate(self, text: str) -> Program:
        return parse_command(text)
