"""Iterative multi-agent translation workflow with benchmarking tools.

The public surface re-exports the domain types, the workflow entry points,
the backends, and the scoring helpers; the CLI lives in tactic.cli.
"""

from .backend import (
    API_KEY_ENV,
    AuthFailure,
    Backend,
    BackendError,
    BackendUnavailable,
    ChatRequest,
    ChatResponse,
    DegenerateKind,
    NoJsonFound,
    RemoteBackend,
    ScriptedBackend,
    StructuredOutputFailure,
    call_structured,
    detect_degenerate,
    extract_json,
)
from .domain import (
    ContextInfo,
    DomainError,
    DraftSet,
    DraftStyle,
    EnrichmentBundle,
    EvaluationReport,
    IterationRecord,
    NonNumericScore,
    RefinedTranslation,
    ResearchNotes,
    ScoreReport,
    Termination,
    TranslationTask,
    WorkflowConfig,
    WorkflowTrace,
    trace_from_dict,
    trace_to_dict,
    validate_score_report,
    verify_trace,
)
from .harness import (
    BatchRow,
    DatasetRecord,
    DistributionSummary,
    MalformedLine,
    distribution_summary,
    load_dataset,
    run_batch,
    score_report,
)
from .metrics import (
    EmptyReference,
    corpus_aggregate,
    corpus_bleu,
    corpus_chrf,
    sentence_bleu,
    sentence_chrf,
    tokenizer_for_lang,
)
from .workflow import PartialIteration, WorkflowFailure, run, run_base_only

__version__ = "0.1.0"

__all__ = [
    "API_KEY_ENV",
    "AuthFailure",
    "Backend",
    "BackendError",
    "BackendUnavailable",
    "BatchRow",
    "ChatRequest",
    "ChatResponse",
    "ContextInfo",
    "DatasetRecord",
    "DegenerateKind",
    "DistributionSummary",
    "DomainError",
    "DraftSet",
    "DraftStyle",
    "EmptyReference",
    "EnrichmentBundle",
    "EvaluationReport",
    "IterationRecord",
    "MalformedLine",
    "NoJsonFound",
    "NonNumericScore",
    "PartialIteration",
    "RefinedTranslation",
    "RemoteBackend",
    "ResearchNotes",
    "ScoreReport",
    "ScriptedBackend",
    "StructuredOutputFailure",
    "Termination",
    "TranslationTask",
    "WorkflowConfig",
    "WorkflowFailure",
    "WorkflowTrace",
    "call_structured",
    "corpus_aggregate",
    "corpus_bleu",
    "corpus_chrf",
    "detect_degenerate",
    "distribution_summary",
    "extract_json",
    "load_dataset",
    "run",
    "run_base_only",
    "run_batch",
    "score_report",
    "sentence_bleu",
    "sentence_chrf",
    "tokenizer_for_lang",
    "trace_from_dict",
    "trace_to_dict",
    "validate_score_report",
    "verify_trace",
]
