"""Core data types for the translation workflow.

Everything here is immutable after construction and safe to share between
concurrent workflow instances. The canonical serialized form of each type is a
JSON object with snake_case field names matching the dataclass fields;
durations are integer milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP
from enum import Enum
from types import MappingProxyType
from typing import Any, Mapping, Optional, Sequence


class DomainError(ValueError):
    """A domain invariant was violated."""


class NonNumericScore(DomainError):
    """A score dimension could not be coerced to a number."""


class DraftStyle(Enum):
    """The three drafting strategies. Iteration order is fixed."""

    LITERAL = "literal"
    """Word-for-word rendering that preserves form and content."""

    SENSE_FOR_SENSE = "sense_for_sense"
    """Meaning-first rendering without strict adherence to form."""

    FREE = "free"
    """Overall meaning and effect, allowing significant restructuring."""

    @property
    def label(self) -> str:
        """Human-readable strategy name used in prompts."""
        return _STYLE_LABELS[self]


_STYLE_LABELS = {
    DraftStyle.LITERAL: "Literal Translation",
    DraftStyle.SENSE_FOR_SENSE: "Sense-for-Sense Translation",
    DraftStyle.FREE: "Free Translation",
}


class Termination(Enum):
    """Why a workflow run stopped."""

    THRESHOLD_MET = "threshold_met"
    """The overall score reached the quality threshold tau."""

    ITERATION_CAP = "iteration_cap"
    """The iteration budget kappa was exhausted (or the loop could not continue)."""

    TIME_CAP = "time_cap"
    """The wall-clock budget delta was exhausted."""


@dataclass(frozen=True, slots=True)
class TranslationTask:
    """One source segment to translate."""

    source_text: str
    source_lang: str
    target_lang: str

    def __post_init__(self) -> None:
        if not self.source_text.strip():
            raise DomainError("source_text must contain a non-whitespace character")
        if not self.source_lang.strip() or not self.target_lang.strip():
            raise DomainError("language tags must be nonempty")
        # tags are free-form and matched case-insensitively
        if self.source_lang.strip().casefold() == self.target_lang.strip().casefold():
            raise DomainError("source_lang and target_lang must differ")


@dataclass(frozen=True, slots=True)
class DraftSet:
    """The three style drafts, keyed by strategy."""

    drafts: Mapping[DraftStyle, str]

    def __post_init__(self) -> None:
        if set(self.drafts) != set(DraftStyle):
            raise DomainError("all three draft styles must be present")
        for style in DraftStyle:
            if not self.drafts[style]:
                raise DomainError(f"draft for {style.value} is empty")
        ordered = {style: self.drafts[style] for style in DraftStyle}
        object.__setattr__(self, "drafts", MappingProxyType(ordered))

    def in_order(self) -> tuple[str, str, str]:
        """Drafts in DraftStyle iteration order."""
        return tuple(self.drafts[style] for style in DraftStyle)


@dataclass(frozen=True, slots=True)
class RefinedTranslation:
    """A candidate synthesized from the drafts."""

    analysis: str
    translation: str

    def __post_init__(self) -> None:
        if not self.translation:
            raise DomainError("refined translation must be nonempty")


@dataclass(frozen=True, slots=True)
class EvaluationReport:
    """Qualitative assessments along the three scoring dimensions."""

    faithfulness: str
    expressiveness: str
    elegance: str


@dataclass(frozen=True, slots=True)
class ScoreReport:
    """Numeric 1-10 scores per dimension plus their sum and feedback."""

    faithfulness_score: int
    expressiveness_score: int
    elegance_score: int
    overall_score: int
    feedback: str

    def __post_init__(self) -> None:
        for name in ("faithfulness_score", "expressiveness_score", "elegance_score"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise DomainError(f"{name} must be an integer")
            if not 1 <= value <= 10:
                raise DomainError(f"{name} must be in [1, 10], got {value}")
        expected = self.faithfulness_score + self.expressiveness_score + self.elegance_score
        if self.overall_score != expected:
            raise DomainError(
                f"overall_score {self.overall_score} is not the dimension sum {expected}"
            )


@dataclass(frozen=True, slots=True)
class ResearchNotes:
    """Term pairs collected before translation. May be empty."""

    terms: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        normalized = tuple((str(s), str(t)) for s, t in self.terms)
        for source_term, _ in normalized:
            if not source_term:
                raise DomainError("research term with empty source")
        object.__setattr__(self, "terms", normalized)


@dataclass(frozen=True, slots=True)
class ContextInfo:
    """Inferred context plus an expanded passage around the source."""

    context_analysis: str
    extended_context: str
    source_contained: bool = True
    """False when the expanded passage failed to contain the source text
    verbatim; tolerated but recorded."""


@dataclass(frozen=True, slots=True)
class EnrichmentBundle:
    """Research notes and context info gathered for one complex iteration."""

    research: ResearchNotes
    context: ContextInfo


@dataclass(frozen=True, slots=True)
class WorkflowConfig:
    """Tunable parameters for one workflow run.

    delta is the per-segment wall-clock budget in milliseconds.
    """

    tau: int = 27
    kappa: int = 3
    delta: int = 300_000
    max_parse_retries: int = 3
    temperature: float = 0.6
    max_tokens: int = 4096
    few_shot: bool = False
    few_shot_examples: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.tau, int) or not 3 <= self.tau <= 30:
            raise DomainError(f"tau must be an integer in [3, 30], got {self.tau!r}")
        if not isinstance(self.kappa, int) or self.kappa < 0:
            raise DomainError(f"kappa must be a non-negative integer, got {self.kappa!r}")
        if not isinstance(self.delta, int) or self.delta <= 0:
            raise DomainError(f"delta must be a positive integer (ms), got {self.delta!r}")
        if not isinstance(self.max_parse_retries, int) or self.max_parse_retries < 1:
            raise DomainError(f"max_parse_retries must be >= 1, got {self.max_parse_retries!r}")
        if not 0 <= self.temperature <= 2:
            raise DomainError(f"temperature must be in [0, 2], got {self.temperature!r}")
        if not isinstance(self.max_tokens, int) or self.max_tokens < 1:
            raise DomainError(f"max_tokens must be a positive integer, got {self.max_tokens!r}")
        pairs = tuple((str(s), str(t)) for s, t in self.few_shot_examples)
        object.__setattr__(self, "few_shot_examples", pairs)


@dataclass(frozen=True, slots=True)
class IterationRecord:
    """One full pass: drafts, refinement, evaluation, score."""

    index: int
    enrichment: Optional[EnrichmentBundle]
    drafts: DraftSet
    refined: RefinedTranslation
    evaluation: EvaluationReport
    score: ScoreReport
    elapsed: int
    """Wall-clock duration of this iteration in milliseconds."""

    def __post_init__(self) -> None:
        if self.index < 0:
            raise DomainError("iteration index must be non-negative")
        if (self.index == 0) != (self.enrichment is None):
            raise DomainError("enrichment must be absent exactly for iteration 0")
        if self.elapsed < 0:
            raise DomainError("elapsed must be non-negative")


@dataclass(frozen=True, slots=True)
class WorkflowTrace:
    """Append-only record of a run and its selected final translation."""

    task: TranslationTask
    records: tuple[IterationRecord, ...]
    final: str
    termination: Termination
    selected_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise DomainError("trace must contain at least one record")
        indexes = [record.index for record in self.records]
        if indexes[0] != 0 or any(b <= a for a, b in zip(indexes, indexes[1:])):
            raise DomainError("record indexes must increase strictly from 0")
        if not 0 <= self.selected_index < len(self.records):
            raise DomainError("selected_index out of range")
        if self.final != self.records[self.selected_index].refined.translation:
            raise DomainError("final must equal the selected record's refined translation")


def _coerce_dimension(raw: Any) -> int:
    """Round a raw score half away from zero, then clamp into [1, 10]."""
    if isinstance(raw, bool):
        raise NonNumericScore(f"boolean is not a score: {raw!r}")
    try:
        value = Decimal(str(raw).strip())
    except (InvalidOperation, ValueError):
        raise NonNumericScore(f"cannot coerce score {raw!r}") from None
    if not value.is_finite():
        raise NonNumericScore(f"non-finite score {raw!r}")
    rounded = int(value.to_integral_value(rounding=ROUND_HALF_UP))
    return min(10, max(1, rounded))


def validate_score_report(
    raw_f: Any,
    raw_e: Any,
    raw_a: Any,
    raw_overall: Any,
    feedback: str,
) -> ScoreReport:
    """Build a ScoreReport from raw backend fields.

    Each dimension is coerced to an integer (rounding half away from zero,
    clamping into [1, 10]); the overall score is recomputed as the dimension
    sum, ignoring raw_overall. Raises NonNumericScore when a dimension cannot
    be coerced.
    """
    f = _coerce_dimension(raw_f)
    e = _coerce_dimension(raw_e)
    a = _coerce_dimension(raw_a)
    return ScoreReport(
        faithfulness_score=f,
        expressiveness_score=e,
        elegance_score=a,
        overall_score=f + e + a,
        feedback=feedback,
    )


def best_record_index(records: Sequence[IterationRecord]) -> int:
    """Index (into the sequence) of the highest overall score; ties go to the
    earliest record."""
    if not records:
        raise DomainError("cannot select from an empty record list")
    best = 0
    for i, record in enumerate(records):
        if record.score.overall_score > records[best].score.overall_score:
            best = i
    return best


def verify_trace(trace: WorkflowTrace, tau: Optional[int] = None) -> list[str]:
    """Replay a trace's invariants; returns a list of violations (empty = ok).

    Structural checks always run; the threshold semantics of the termination
    reason are checked only when tau is supplied.
    """
    violations: list[str] = []
    for record in trace.records:
        score = record.score
        dims = (score.faithfulness_score, score.expressiveness_score, score.elegance_score)
        if score.overall_score != sum(dims):
            violations.append(f"record {record.index}: overall is not the dimension sum")
        if not all(1 <= d <= 10 for d in dims):
            violations.append(f"record {record.index}: dimension out of [1, 10]")
        if record.elapsed < 0:
            violations.append(f"record {record.index}: negative elapsed")
        if (record.index == 0) != (record.enrichment is None):
            violations.append(f"record {record.index}: enrichment presence mismatch")
    last = trace.records[-1]
    if trace.termination is Termination.THRESHOLD_MET:
        if trace.selected_index != len(trace.records) - 1:
            violations.append("threshold_met must select the last record")
        if tau is not None and last.score.overall_score < tau:
            violations.append("threshold_met but last overall score is below tau")
    else:
        expected = best_record_index(trace.records)
        if trace.selected_index != expected:
            violations.append(
                f"cap fallback selected {trace.selected_index}, expected {expected}"
            )
        if tau is not None and trace.termination is Termination.ITERATION_CAP:
            for record in trace.records[:-1]:
                if record.score.overall_score >= tau:
                    violations.append(
                        f"record {record.index} met tau but the run continued"
                    )
    if trace.final != trace.records[trace.selected_index].refined.translation:
        violations.append("final does not match the selected refined translation")
    return violations


# --- serialization ----------------------------------------------------------

def task_to_dict(task: TranslationTask) -> dict[str, Any]:
    return {
        "source_text": task.source_text,
        "source_lang": task.source_lang,
        "target_lang": task.target_lang,
    }


def task_from_dict(data: Mapping[str, Any]) -> TranslationTask:
    return TranslationTask(
        source_text=data["source_text"],
        source_lang=data["source_lang"],
        target_lang=data["target_lang"],
    )


def draft_set_to_dict(drafts: DraftSet) -> dict[str, str]:
    return {style.value: drafts.drafts[style] for style in DraftStyle}


def draft_set_from_dict(data: Mapping[str, str]) -> DraftSet:
    return DraftSet(drafts={style: data[style.value] for style in DraftStyle})


def refined_to_dict(refined: RefinedTranslation) -> dict[str, str]:
    return {"analysis": refined.analysis, "translation": refined.translation}


def refined_from_dict(data: Mapping[str, str]) -> RefinedTranslation:
    return RefinedTranslation(analysis=data.get("analysis", ""), translation=data["translation"])


def evaluation_to_dict(report: EvaluationReport) -> dict[str, str]:
    return {
        "faithfulness": report.faithfulness,
        "expressiveness": report.expressiveness,
        "elegance": report.elegance,
    }


def evaluation_from_dict(data: Mapping[str, str]) -> EvaluationReport:
    return EvaluationReport(
        faithfulness=data["faithfulness"],
        expressiveness=data["expressiveness"],
        elegance=data["elegance"],
    )


def score_to_dict(report: ScoreReport) -> dict[str, Any]:
    return {
        "faithfulness_score": report.faithfulness_score,
        "expressiveness_score": report.expressiveness_score,
        "elegance_score": report.elegance_score,
        "overall_score": report.overall_score,
        "feedback": report.feedback,
    }


def score_from_dict(data: Mapping[str, Any]) -> ScoreReport:
    return ScoreReport(
        faithfulness_score=data["faithfulness_score"],
        expressiveness_score=data["expressiveness_score"],
        elegance_score=data["elegance_score"],
        overall_score=data["overall_score"],
        feedback=data.get("feedback", ""),
    )


def research_to_dict(notes: ResearchNotes) -> dict[str, Any]:
    return {"terms": [list(pair) for pair in notes.terms]}


def research_from_dict(data: Mapping[str, Any]) -> ResearchNotes:
    return ResearchNotes(terms=tuple((s, t) for s, t in data.get("terms", ())))


def context_to_dict(info: ContextInfo) -> dict[str, Any]:
    return {
        "context_analysis": info.context_analysis,
        "extended_context": info.extended_context,
        "source_contained": info.source_contained,
    }


def context_from_dict(data: Mapping[str, Any]) -> ContextInfo:
    return ContextInfo(
        context_analysis=data["context_analysis"],
        extended_context=data["extended_context"],
        source_contained=data.get("source_contained", True),
    )


def enrichment_to_dict(bundle: EnrichmentBundle) -> dict[str, Any]:
    return {
        "research": research_to_dict(bundle.research),
        "context": context_to_dict(bundle.context),
    }


def enrichment_from_dict(data: Mapping[str, Any]) -> EnrichmentBundle:
    return EnrichmentBundle(
        research=research_from_dict(data["research"]),
        context=context_from_dict(data["context"]),
    )


def record_to_dict(record: IterationRecord) -> dict[str, Any]:
    return {
        "index": record.index,
        "enrichment": None if record.enrichment is None else enrichment_to_dict(record.enrichment),
        "drafts": draft_set_to_dict(record.drafts),
        "refined": refined_to_dict(record.refined),
        "evaluation": evaluation_to_dict(record.evaluation),
        "score": score_to_dict(record.score),
        "elapsed": record.elapsed,
    }


def record_from_dict(data: Mapping[str, Any]) -> IterationRecord:
    enrichment = data.get("enrichment")
    return IterationRecord(
        index=data["index"],
        enrichment=None if enrichment is None else enrichment_from_dict(enrichment),
        drafts=draft_set_from_dict(data["drafts"]),
        refined=refined_from_dict(data["refined"]),
        evaluation=evaluation_from_dict(data["evaluation"]),
        score=score_from_dict(data["score"]),
        elapsed=data["elapsed"],
    )


def trace_to_dict(trace: WorkflowTrace) -> dict[str, Any]:
    return {
        "task": task_to_dict(trace.task),
        "records": [record_to_dict(record) for record in trace.records],
        "final": trace.final,
        "termination": trace.termination.value,
        "selected_index": trace.selected_index,
    }


def trace_from_dict(data: Mapping[str, Any]) -> WorkflowTrace:
    return WorkflowTrace(
        task=task_from_dict(data["task"]),
        records=tuple(record_from_dict(r) for r in data["records"]),
        final=data["final"],
        termination=Termination(data["termination"]),
        selected_index=data["selected_index"],
    )


def config_to_dict(config: WorkflowConfig) -> dict[str, Any]:
    return {
        "tau": config.tau,
        "kappa": config.kappa,
        "delta": config.delta,
        "max_parse_retries": config.max_parse_retries,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
        "few_shot": config.few_shot,
        "few_shot_examples": [list(pair) for pair in config.few_shot_examples],
    }


def config_from_dict(data: Mapping[str, Any]) -> WorkflowConfig:
    known = {f.name for f in WorkflowConfig.__dataclass_fields__.values()}
    unknown = set(data) - known
    if unknown:
        raise DomainError(f"unknown config fields: {sorted(unknown)}")
    kwargs: dict[str, Any] = dict(data)
    if "few_shot_examples" in kwargs:
        kwargs["few_shot_examples"] = tuple((s, t) for s, t in kwargs["few_shot_examples"])
    return WorkflowConfig(**kwargs)
