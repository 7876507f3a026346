"""Prompt template loading and rendering.

Templates ship as package data under templates/. Each file holds a system
section and a user section separated by marker lines; both sections are
Python format strings, so literal braces appear doubled in the files.
Trailing spaces inside the templates are significant and preserved verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from string import Formatter
from typing import Mapping, Optional, Sequence

_SYSTEM_MARKER = "SYSTEM_PROMPT\n"
_USER_MARKER = "\nUSER_PROMPT\n"

ABSENT_SLOT = "N/A"
"""Substituted for optional enrichment slots with no value."""


class TemplateError(RuntimeError):
    """A packaged template resource is malformed."""


class MissingField(KeyError):
    """A required placeholder was not supplied to render()."""

    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"missing required placeholder {self.name!r}"


class TemplateKind(Enum):
    """The eight conversation templates."""

    DRAFT = "draft"
    """Produce one draft translation in a named style."""

    REFINEMENT = "refinement"
    """Synthesize a refined translation from the three drafts."""

    EVALUATION = "evaluation"
    """Assess faithfulness, expressiveness and elegance in prose."""

    SCORE = "score"
    """Turn an evaluation into numeric 1-10 dimension scores."""

    CONTEXT = "context"
    """Infer context and expand the source into a fuller passage."""

    RESEARCH = "research"
    """Collect keyword and phrase translations before drafting."""

    ZERO_SHOT = "zero_shot"
    """Single-turn baseline translation prompt."""

    FEW_SHOT = "few_shot"
    """Baseline translation prompt with worked examples."""


_OPTIONAL_FIELDS = frozenset(
    {"pre_translation_result", "context_analysis", "extended_context", "few_shot_examples"}
)


@dataclass(frozen=True, slots=True)
class PromptTemplate:
    """One loaded template with its placeholder inventory."""

    kind: TemplateKind
    system: str
    user: str
    placeholders: frozenset[str]
    required: frozenset[str]


@dataclass(frozen=True, slots=True)
class RenderedPrompt:
    """System and user messages ready to send to a backend."""

    system: str
    user: str


def _placeholder_names(text: str) -> set[str]:
    names = set()
    for _, field_name, _, _ in Formatter().parse(text):
        if field_name:
            names.add(field_name)
    return names


@lru_cache(maxsize=None)
def load_template(kind: TemplateKind) -> PromptTemplate:
    """Load and split one packaged template; cached per kind."""
    resource = resources.files("tactic").joinpath("templates", f"{kind.value}.txt")
    raw = resource.read_text(encoding="utf-8")
    if not raw.startswith(_SYSTEM_MARKER):
        raise TemplateError(f"{kind.value}: missing system marker")
    head, sep, tail = raw.partition(_USER_MARKER)
    if not sep:
        raise TemplateError(f"{kind.value}: missing user marker")
    system = head[len(_SYSTEM_MARKER):].strip("\n")
    user = tail.strip("\n")
    placeholders = frozenset(_placeholder_names(system) | _placeholder_names(user))
    optional = _OPTIONAL_FIELDS
    if kind is TemplateKind.FEW_SHOT:
        # the baseline few-shot prompt cannot do without its examples
        optional = optional - {"few_shot_examples"}
    return PromptTemplate(
        kind=kind,
        system=system,
        user=user,
        placeholders=placeholders,
        required=placeholders - optional,
    )


def render(kind: TemplateKind, values: Mapping[str, Optional[str]]) -> RenderedPrompt:
    """Substitute placeholders; optional enrichment slots fall back to N/A.

    Raises MissingField for a required placeholder that is absent or None.
    Keys in values that the template does not mention are ignored.
    """
    template = load_template(kind)
    substitutions: dict[str, str] = {}
    for name in template.placeholders:
        value = values.get(name)
        if value is None:
            if name in template.required:
                raise MissingField(name)
            value = ABSENT_SLOT
        substitutions[name] = value
    return RenderedPrompt(
        system=template.system.format(**substitutions),
        user=template.user.format(**substitutions),
    )


def format_few_shot(
    examples: Sequence[tuple[str, str]], source_lang: str, target_lang: str
) -> str:
    """Render example pairs as tagged line pairs separated by blank lines."""
    blocks = [
        f"{source_lang}: {source}\n{target_lang}: {target}" for source, target in examples
    ]
    return "\n\n".join(blocks)


def format_candidates(candidates: Sequence[str]) -> str:
    """Render candidate translations as a numbered list."""
    return "\n".join(f"{i}. {text}" for i, text in enumerate(candidates, start=1))
