"""The agent roles that drive one translation workflow.

Each agent is a thin wrapper over one template and one structured call; they
share a backend and a config through AgentTeam. All agents are stateless and
safe to use from multiple threads.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from .backend import Backend, BackendUnavailable, ChatRequest, call_structured
from .domain import (
    ContextInfo,
    DraftSet,
    DraftStyle,
    EnrichmentBundle,
    EvaluationReport,
    RefinedTranslation,
    ResearchNotes,
    ScoreReport,
    TranslationTask,
    WorkflowConfig,
    validate_score_report,
)
from .prompts import TemplateKind, format_candidates, format_few_shot, render

log = logging.getLogger(__name__)

_NUMBERED_PREFIX = re.compile(r"^\d+[.)]\s*")


def format_research(notes: ResearchNotes) -> str:
    """Render term pairs as the numbered list the drafting prompts expect."""
    return "\n".join(
        f"{i}. {source}: {target}" for i, (source, target) in enumerate(notes.terms, start=1)
    )


def parse_research_reply(text: str) -> ResearchNotes:
    """Parse a numbered term list; unusable lines are dropped silently.

    Each line is split on its first colon into source term and target
    rendering; lines without a colon or without a source term contribute
    nothing, so arbitrary garbage degrades to empty notes.
    """
    pairs: list[tuple[str, str]] = []
    for line in text.splitlines():
        stripped = _NUMBERED_PREFIX.sub("", line.strip())
        if not stripped:
            continue
        head, sep, tail = stripped.partition(": ")
        if not sep:
            head, sep, tail = stripped.partition(":")
        if not sep:
            continue
        source = head.strip()
        if not source:
            continue
        pairs.append((source, tail.strip()))
    return ResearchNotes(terms=tuple(pairs))


def _require_text(payload: Mapping[str, Any], *keys: str) -> None:
    """Validator: the named payload fields must be nonempty strings."""
    for key in keys:
        value = payload.get(key)
        if not isinstance(value, str) or not value.strip():
            raise ValueError(f"{key} must be a nonempty string")


@dataclass(frozen=True, slots=True)
class AgentTeam:
    """All agent roles bound to one backend and one configuration."""

    backend: Backend
    config: WorkflowConfig

    def _request(self, kind: TemplateKind, values: Mapping[str, Optional[str]]) -> ChatRequest:
        prompt = render(kind, values)
        return ChatRequest(
            system=prompt.system,
            user=prompt.user,
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
            kind=kind.value,
        )

    def _base_values(self, task: TranslationTask) -> dict[str, Optional[str]]:
        return {
            "source_language": task.source_lang,
            "target_language": task.target_lang,
            "source_text": task.source_text,
        }

    def _enriched_values(
        self, task: TranslationTask, enrichment: Optional[EnrichmentBundle]
    ) -> dict[str, Optional[str]]:
        values = self._base_values(task)
        if enrichment is not None:
            values["pre_translation_result"] = format_research(enrichment.research) or None
            values["context_analysis"] = enrichment.context.context_analysis or None
            values["extended_context"] = enrichment.context.extended_context or None
        if self.config.few_shot and self.config.few_shot_examples:
            values["few_shot_examples"] = format_few_shot(
                self.config.few_shot_examples, task.source_lang, task.target_lang
            )
        return values

    def _structured(
        self,
        kind: TemplateKind,
        values: Mapping[str, Optional[str]],
        required: tuple[str, ...],
        validate: Any = None,
    ) -> dict[str, Any]:
        result = call_structured(
            self.backend,
            self._request(kind, values),
            required,
            max_attempts=self.config.max_parse_retries,
            validate=validate,
        )
        return result.payload

    def draft_one(
        self,
        task: TranslationTask,
        style: DraftStyle,
        enrichment: Optional[EnrichmentBundle] = None,
    ) -> str:
        """Produce one draft translation in the given style."""
        values = self._enriched_values(task, enrichment)
        values["translation_type"] = style.label
        payload = self._structured(
            TemplateKind.DRAFT,
            values,
            ("translation",),
            validate=lambda p: _require_text(p, "translation"),
        )
        return payload["translation"]

    def draft_all(
        self,
        task: TranslationTask,
        enrichment: Optional[EnrichmentBundle] = None,
        *,
        parallel: bool = False,
    ) -> DraftSet:
        """Produce all three drafts; any failure abandons the whole set.

        Sequential in style order by default, which keeps scripted playback
        deterministic; parallel=True fans the three calls out to threads.
        """
        if parallel:
            with ThreadPoolExecutor(max_workers=len(DraftStyle)) as pool:
                futures = {
                    style: pool.submit(self.draft_one, task, style, enrichment)
                    for style in DraftStyle
                }
                drafts = {style: future.result() for style, future in futures.items()}
        else:
            drafts = {style: self.draft_one(task, style, enrichment) for style in DraftStyle}
        return DraftSet(drafts=drafts)

    def refine(
        self,
        task: TranslationTask,
        drafts: DraftSet,
        enrichment: Optional[EnrichmentBundle] = None,
    ) -> RefinedTranslation:
        """Synthesize one refined translation from the three drafts."""
        values = self._enriched_values(task, enrichment)
        values["candidate_translations"] = format_candidates(drafts.in_order())
        payload = self._structured(
            TemplateKind.REFINEMENT,
            values,
            ("translation",),
            validate=lambda p: _require_text(p, "translation"),
        )
        analysis = payload.get("analysis")
        return RefinedTranslation(
            analysis=analysis if isinstance(analysis, str) else "",
            translation=payload["translation"],
        )

    def evaluate(self, task: TranslationTask, refined: RefinedTranslation) -> EvaluationReport:
        """Assess the refined translation along the three dimensions."""
        values = self._base_values(task)
        values["translation"] = refined.translation
        keys = ("faithfulness", "expressiveness", "elegance")
        payload = self._structured(
            TemplateKind.EVALUATION,
            values,
            keys,
            validate=lambda p: _require_text(p, *keys),
        )
        return EvaluationReport(
            faithfulness=payload["faithfulness"],
            expressiveness=payload["expressiveness"],
            elegance=payload["elegance"],
        )

    def score(
        self,
        task: TranslationTask,
        refined: RefinedTranslation,
        evaluation: EvaluationReport,
    ) -> ScoreReport:
        """Turn the evaluation into numeric dimension scores."""
        values = self._base_values(task)
        values["translation"] = refined.translation
        values["evaluation_result"] = json.dumps(
            {
                "faithfulness": evaluation.faithfulness,
                "expressiveness": evaluation.expressiveness,
                "elegance": evaluation.elegance,
            },
            ensure_ascii=False,
        )
        keys = ("faithfulness_score", "expressiveness_score", "elegance_score")
        payload = self._structured(
            TemplateKind.SCORE,
            values,
            keys,
            validate=lambda p: validate_score_report(
                p["faithfulness_score"],
                p["expressiveness_score"],
                p["elegance_score"],
                p.get("overall_score"),
                "",
            ),
        )
        feedback = payload.get("feedback")
        return validate_score_report(
            payload["faithfulness_score"],
            payload["expressiveness_score"],
            payload["elegance_score"],
            payload.get("overall_score"),
            feedback if isinstance(feedback, str) else "",
        )

    def research(self, task: TranslationTask) -> ResearchNotes:
        """Collect term pairs for the source text; degrades to empty notes.

        The reply is free text, so there is nothing to re-ask for: transport
        failure or unusable content simply yields no terms. Credential
        rejections still propagate.
        """
        request = self._request(TemplateKind.RESEARCH, self._base_values(task))
        try:
            response = self.backend.complete(request)
        except BackendUnavailable as error:
            log.warning("research unavailable, continuing without terms: %s", error)
            return ResearchNotes()
        return parse_research_reply(response.text)

    def context(self, task: TranslationTask) -> ContextInfo:
        """Infer context and expand the source into a fuller passage."""
        payload = self._structured(
            TemplateKind.CONTEXT,
            self._base_values(task),
            ("context_analysis", "extended_context"),
            validate=lambda p: _require_text(p, "context_analysis", "extended_context"),
        )
        extended = payload["extended_context"]
        contained = task.source_text in extended
        if not contained:
            log.warning("extended context does not contain the source text verbatim")
        return ContextInfo(
            context_analysis=payload["context_analysis"],
            extended_context=extended,
            source_contained=contained,
        )

    def enrich(self, task: TranslationTask) -> EnrichmentBundle:
        """Run research then context analysis for one complex iteration."""
        return EnrichmentBundle(research=self.research(task), context=self.context(task))

    def translate_zero_shot(self, task: TranslationTask) -> str:
        """Single-prompt baseline translation."""
        payload = self._structured(
            TemplateKind.ZERO_SHOT,
            self._base_values(task),
            ("translation",),
            validate=lambda p: _require_text(p, "translation"),
        )
        return payload["translation"]

    def translate_few_shot(self, task: TranslationTask) -> str:
        """Baseline translation guided by the configured example pairs."""
        values = self._base_values(task)
        values["few_shot_examples"] = format_few_shot(
            self.config.few_shot_examples, task.source_lang, task.target_lang
        )
        payload = self._structured(
            TemplateKind.FEW_SHOT,
            values,
            ("translation",),
            validate=lambda p: _require_text(p, "translation"),
        )
        return payload["translation"]
