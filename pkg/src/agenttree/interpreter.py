"""Pattern-action interpreter.

Model output is plain prose until it contains a registered directive of the
form ``@NAME("literal", variable_ref, 42)``, optionally followed on the next
line by a fenced code block bound to the directive's body parameter.

Rules that keep the grammar safe:
  - directives inside fenced code blocks are data, never scanned;
  - a directive name not in the active pattern set is ordinary prose;
  - a malformed directive (bad arguments, missing body block) produces no
    action but is reported, so the model sees its own syntax error.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .markdown import find_fenced_blocks, outside_fences
from .model import AgentNode

_NAME = re.compile(r"[A-Z][A-Z0-9_]*")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_HEAD = re.compile(r"@([A-Z][A-Z0-9_]*)\(")
_NUMBER = re.compile(r"-?\d+(\.\d+)?")

PARAM_KINDS = ("string", "number", "identifier", "heredoc-body")


class ActionKind(enum.Enum):
    INTERNAL = "internal"
    AGENT_CALL = "agent_call"
    TOOL_CALL = "tool_call"


@dataclass(frozen=True)
class Param:
    name: str
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in PARAM_KINDS:
            raise ValueError(f"unknown parameter kind {self.kind!r}")


@dataclass(frozen=True)
class SyntaxPattern:
    name: str
    params: tuple[Param, ...]
    action_kind: ActionKind
    documentation: str = ""
    provider: str = "builtin"

    def __post_init__(self) -> None:
        if not _NAME.fullmatch(self.name):
            raise ValueError(f"pattern name {self.name!r} is not a valid directive name")
        heredocs = [i for i, p in enumerate(self.params) if p.kind == "heredoc-body"]
        if len(heredocs) > 1:
            raise ValueError("at most one heredoc-body parameter allowed")
        if heredocs and heredocs[0] != len(self.params) - 1:
            raise ValueError("heredoc-body parameter must be last")

    @property
    def heredoc_param(self) -> Param | None:
        if self.params and self.params[-1].kind == "heredoc-body":
            return self.params[-1]
        return None

    @property
    def inline_params(self) -> tuple[Param, ...]:
        return self.params[:-1] if self.heredoc_param else self.params

    def signature(self) -> str:
        return f"@{self.name}({', '.join(f'{p.name}: {p.kind}' for p in self.params)})"


class PatternConflictError(ValueError):
    """Re-registration of a name with a different schema."""

    def __init__(self, existing: SyntaxPattern, new: SyntaxPattern):
        self.existing = existing
        self.new = new
        super().__init__(
            f"schema conflict for {new.name}: existing {existing.signature()} "
            f"(from {existing.provider}), new {new.signature()} (from {new.provider})"
        )


class PatternSet:
    """The directive names an agent currently recognizes."""

    def __init__(self, patterns: dict[str, SyntaxPattern] | None = None):
        self._patterns: dict[str, SyntaxPattern] = dict(patterns or {})

    def register(self, pattern: SyntaxPattern) -> "PatternSet":
        existing = self._patterns.get(pattern.name)
        if existing is not None:
            if existing.params == pattern.params and existing.action_kind == pattern.action_kind:
                return self  # idempotent re-registration
            raise PatternConflictError(existing, pattern)
        self._patterns[pattern.name] = pattern
        return self

    def get(self, name: str) -> SyntaxPattern | None:
        return self._patterns.get(name)

    def restricted(self, names) -> "PatternSet":
        return PatternSet({n: p for n, p in self._patterns.items() if n in names})

    def merged(self, other: "PatternSet") -> "PatternSet":
        merged = PatternSet(dict(self._patterns))
        for p in other:
            merged.register(p)
        return merged

    def names(self) -> set[str]:
        return set(self._patterns)

    def __contains__(self, name: str) -> bool:
        return name in self._patterns

    def __iter__(self):
        return iter(self._patterns.values())

    def __len__(self) -> int:
        return len(self._patterns)


@dataclass(frozen=True)
class VariableRef:
    """A bare identifier argument: resolved against the node's store at execution."""

    name: str


ArgValue = str | int | float | VariableRef


@dataclass(frozen=True)
class ParsedAction:
    pattern: str
    arguments: dict[str, ArgValue]
    span: tuple[int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "arguments", dict(self.arguments))


@dataclass(frozen=True)
class MalformedDirective:
    name: str
    span: tuple[int, int]
    reason: str


@dataclass
class ScanResult:
    actions: list[ParsedAction]
    problems: list[MalformedDirective]

    @property
    def empty(self) -> bool:
        return not self.actions and not self.problems


def _parse_args(text: str, pos: int, line_end: int):
    """Parse a comma-separated argument list up to a closing paren.

    Returns (args, end_pos) or raises _ArgError. Arguments must stay on the
    directive's line.
    """
    args: list[ArgValue] = []
    i = pos
    expecting_value = True
    while True:
        while i < line_end and text[i] in " \t":
            i += 1
        if i >= line_end:
            raise _ArgError("unbalanced parentheses", i)
        ch = text[i]
        if ch == ")":
            if args and expecting_value:
                raise _ArgError("trailing comma", i)
            return args, i + 1
        if not expecting_value:
            if ch == ",":
                expecting_value = True
                i += 1
                continue
            raise _ArgError(f"expected ',' or ')' at {ch!r}", i)
        if ch == '"':
            value, i = _parse_string(text, i, line_end)
            args.append(value)
        else:
            m = _NUMBER.match(text, i)
            if m and m.end() <= line_end and not _IDENT.match(text, m.end()):
                literal = m.group(0)
                args.append(float(literal) if "." in literal else int(literal))
                i = m.end()
            else:
                m = _IDENT.match(text, i)
                if not m or m.end() > line_end:
                    raise _ArgError(f"bad argument at {text[i:i+10]!r}", i)
                args.append(VariableRef(m.group(0)))
                i = m.end()
        expecting_value = False


class _ArgError(Exception):
    def __init__(self, reason: str, pos: int):
        self.reason = reason
        self.pos = pos
        super().__init__(reason)


_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


def _parse_string(text: str, pos: int, line_end: int):
    assert text[pos] == '"'
    out = []
    i = pos + 1
    while i < line_end:
        ch = text[i]
        if ch == "\\":
            if i + 1 >= line_end or text[i + 1] not in _ESCAPES:
                raise _ArgError("bad escape sequence", i)
            out.append(_ESCAPES[text[i + 1]])
            i += 2
        elif ch == '"':
            return "".join(out), i + 1
        else:
            out.append(ch)
            i += 1
    raise _ArgError("unterminated string literal", pos)


def scan(text: str, active: PatternSet) -> ScanResult:
    """Find all directive matches in document order.

    Pure function of (text, active set). Text outside matches is prose.
    """
    actions: list[ParsedAction] = []
    problems: list[MalformedDirective] = []
    blocks = {b.start: b for b in find_fenced_blocks(text)}
    consumed_until = 0

    for span_start, span_end in outside_fences(text):
        for head in _HEAD.finditer(text, span_start, span_end):
            if head.start() < consumed_until or head.end() > span_end:
                continue
            name = head.group(1)
            pattern = active.get(name)
            if pattern is None:
                continue  # unknown directive: prose, relayable verbatim
            line_end = text.find("\n", head.end())
            if line_end == -1 or line_end > span_end:
                line_end = span_end
            try:
                args, after = _parse_args(text, head.end(), line_end)
            except _ArgError as exc:
                problems.append(
                    MalformedDirective(
                        name=name,
                        span=(head.start(), line_end),
                        reason=exc.reason,
                    )
                )
                consumed_until = line_end
                continue

            inline = pattern.inline_params
            if len(args) != len(inline):
                problems.append(
                    MalformedDirective(
                        name=name,
                        span=(head.start(), after),
                        reason=(
                            f"expected {len(inline)} argument(s) for "
                            f"{pattern.signature()}, got {len(args)}"
                        ),
                    )
                )
                consumed_until = after
                continue

            arguments: dict[str, ArgValue] = dict(zip((p.name for p in inline), args))
            end = after
            heredoc = pattern.heredoc_param
            if heredoc is not None:
                # rest of line must be blank, next line must open a fence
                rest = text[after:line_end]
                body_block = None
                if rest.strip() == "" and line_end < len(text):
                    body_block = blocks.get(line_end + 1)
                if body_block is None or not body_block.closed:
                    problems.append(
                        MalformedDirective(
                            name=name,
                            span=(head.start(), after),
                            reason=(
                                f"{pattern.signature()} requires a fenced code "
                                "block on the next line"
                            ),
                        )
                    )
                    consumed_until = after
                    continue
                arguments[heredoc.name] = body_block.content
                end = body_block.end
            actions.append(ParsedAction(pattern=name, arguments=arguments, span=(head.start(), end)))
            consumed_until = end

    ordered = sorted(actions, key=lambda a: a.span[0])
    return ScanResult(actions=ordered, problems=sorted(problems, key=lambda p: p.span[0]))


SYSTEM_NOTE_BANNER = "[system note: {what} — private, not visible to your caller]"


def format_feedback_block(what: str, body: str) -> str:
    banner = SYSTEM_NOTE_BANNER.format(what=what)
    return f"{banner}\n{body}" if body else banner


def execute(result: ScanResult, node: AgentNode, env) -> str:
    """Run scanned actions in document order; build the feedback text.

    ``env`` dispatches by action kind (see runtime.Runtime). Action failures
    are not operation errors: the error text goes into the feedback verbatim
    so the model can react. Returns "" iff there were no actions and no
    malformed spans — the trigger for handing the raw output to the caller.
    """
    blocks: list[str] = []
    for action in result.actions:
        pattern = env.pattern_for(action.pattern)
        try:
            body = env.dispatch(action, pattern, node)
        except Exception as exc:  # tool/module faults become model input
            body = f"error while executing @{action.pattern}: {exc}"
        blocks.append(format_feedback_block(f"result of @{action.pattern}", body))
    for problem in result.problems:
        blocks.append(
            format_feedback_block(
                f"directive syntax error in @{problem.name}",
                f"at offset {problem.span[0]}: {problem.reason}",
            )
        )
    return "\n\n".join(blocks)
