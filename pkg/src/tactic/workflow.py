"""The iterative translation workflow.

One run is a base iteration (draft, refine, evaluate, score) followed by up
to kappa enriched iterations, each preceded by fresh research and context
analysis. A run stops as soon as the overall score reaches tau, the
wall-clock budget delta runs out, or the iteration budget is spent; capped
runs fall back to the highest-scoring completed iteration, earliest on ties.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .agents import AgentTeam
from .backend import AuthFailure, Backend, BackendUnavailable, StructuredOutputFailure
from .domain import (
    DraftSet,
    EnrichmentBundle,
    EvaluationReport,
    IterationRecord,
    RefinedTranslation,
    Termination,
    TranslationTask,
    WorkflowConfig,
    WorkflowTrace,
    best_record_index,
)

log = logging.getLogger(__name__)

_AGENT_FAILURES = (StructuredOutputFailure, BackendUnavailable, AuthFailure)

Clock = Callable[[], float]


@dataclass(frozen=True, slots=True)
class PartialIteration:
    """Whatever stages of a failed iteration did complete."""

    index: int
    enrichment: Optional[EnrichmentBundle] = None
    drafts: Optional[DraftSet] = None
    refined: Optional[RefinedTranslation] = None
    evaluation: Optional[EvaluationReport] = None


class WorkflowFailure(RuntimeError):
    """The run produced no completed iteration to fall back on."""

    def __init__(self, message: str, partial: PartialIteration) -> None:
        super().__init__(message)
        self.partial = partial


def _ms(seconds: float) -> int:
    return int(round(seconds * 1000))


def _iteration_zero(agents: AgentTeam, task: TranslationTask, clock: Clock) -> IterationRecord:
    """Run the base iteration; it either completes fully or raises."""
    started = clock()
    partial = PartialIteration(index=0)
    try:
        drafts = agents.draft_all(task)
        partial = PartialIteration(index=0, drafts=drafts)
        refined = agents.refine(task, drafts)
        partial = PartialIteration(index=0, drafts=drafts, refined=refined)
        evaluation = agents.evaluate(task, refined)
        partial = PartialIteration(index=0, drafts=drafts, refined=refined, evaluation=evaluation)
        score = agents.score(task, refined, evaluation)
    except _AGENT_FAILURES as error:
        raise WorkflowFailure(f"base iteration failed: {error}", partial) from error
    return IterationRecord(
        index=0,
        enrichment=None,
        drafts=drafts,
        refined=refined,
        evaluation=evaluation,
        score=score,
        elapsed=_ms(clock() - started),
    )


def run_base_only(
    task: TranslationTask,
    config: WorkflowConfig,
    backend: Backend,
    *,
    clock: Clock = time.monotonic,
) -> IterationRecord:
    """Run just the base iteration, with no gates and no enrichment loop."""
    return _iteration_zero(AgentTeam(backend=backend, config=config), task, clock)


def run(
    task: TranslationTask,
    config: WorkflowConfig,
    backend: Backend,
    *,
    clock: Clock = time.monotonic,
) -> WorkflowTrace:
    """Run the full workflow for one task and return its trace.

    The base iteration is atomic: if it fails, WorkflowFailure carries the
    partial stage results. Later iterations are best-effort: a failure or a
    tripped deadline discards the partial iteration and falls back to the
    best completed record. The budget is checked between stages, never
    mid-request, so a slow single call can overshoot delta but never leaves
    a half-recorded iteration.
    """
    agents = AgentTeam(backend=backend, config=config)
    deadline = clock() + config.delta / 1000.0
    records: list[IterationRecord] = [_iteration_zero(agents, task, clock)]

    def finish(termination: Termination, selected: int) -> WorkflowTrace:
        return WorkflowTrace(
            task=task,
            records=tuple(records),
            final=records[selected].refined.translation,
            termination=termination,
            selected_index=selected,
        )

    def time_cap() -> WorkflowTrace:
        return finish(Termination.TIME_CAP, best_record_index(records))

    while True:
        last = records[-1]
        if last.score.overall_score >= config.tau:
            return finish(Termination.THRESHOLD_MET, len(records) - 1)
        if clock() >= deadline:
            return time_cap()
        if last.index + 1 > config.kappa:
            return finish(Termination.ITERATION_CAP, best_record_index(records))
        index = last.index + 1
        started = clock()
        try:
            research = agents.research(task)
            if clock() >= deadline:
                return time_cap()
            context = agents.context(task)
            enrichment = EnrichmentBundle(research=research, context=context)
            if clock() >= deadline:
                return time_cap()
            drafts = agents.draft_all(task, enrichment)
            if clock() >= deadline:
                return time_cap()
            refined = agents.refine(task, drafts, enrichment)
            if clock() >= deadline:
                return time_cap()
            evaluation = agents.evaluate(task, refined)
            if clock() >= deadline:
                return time_cap()
            score = agents.score(task, refined, evaluation)
        except _AGENT_FAILURES as error:
            log.error(
                "iteration %d failed, keeping best completed result: %s", index, error
            )
            return finish(Termination.ITERATION_CAP, best_record_index(records))
        records.append(
            IterationRecord(
                index=index,
                enrichment=enrichment,
                drafts=drafts,
                refined=refined,
                evaluation=evaluation,
                score=score,
                elapsed=_ms(clock() - started),
            )
        )
