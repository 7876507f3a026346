"""Benchmark harness: datasets, batch runs, scoring, reports.

Datasets are JSON Lines files with one segment per line. Batch runs fan out
over a thread pool but always report rows in input order; traces stream to a
sink as they finish. Reports are line-delimited JSON with a kind tag per
line, plus a plain-text table for humans.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence, Union

from .agents import AgentTeam
from .backend import Backend, BackendError
from .domain import (
    DomainError,
    Termination,
    TranslationTask,
    WorkflowConfig,
    WorkflowTrace,
    trace_to_dict,
)
from .metrics import (
    CorpusScores,
    corpus_aggregate,
    sentence_bleu,
    sentence_chrf,
    tokenizer_for_lang,
)
from .workflow import WorkflowFailure, run, run_base_only

log = logging.getLogger(__name__)

MODES = ("tactic", "base-only", "zero-shot", "few-shot")

TraceSink = Callable[[dict[str, Any]], None]
BackendFactory = Callable[["DatasetRecord"], Backend]


class MalformedLine(ValueError):
    """A dataset line could not be turned into a record."""

    def __init__(self, line_no: int, reason: str) -> None:
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


@dataclass(frozen=True, slots=True)
class DatasetRecord:
    """One benchmark segment: a task plus an optional reference translation."""

    id: str
    task: TranslationTask
    reference: Optional[str] = None


def load_dataset(path: Union[str, Path]) -> list[DatasetRecord]:
    """Read a JSON Lines dataset.

    Each line must be a JSON object with source, src_lang and tgt_lang;
    id (defaulting to the zero-based physical line index) and reference are
    optional, and unknown keys are ignored. Blank lines are skipped but keep
    their place in the numbering. Raises MalformedLine (with a one-based
    line number) for anything unusable, including duplicate ids.
    """
    records: list[DatasetRecord] = []
    seen: set[str] = set()
    text = Path(path).read_text(encoding="utf-8")
    for index, line in enumerate(text.splitlines()):
        line_no = index + 1
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as error:
            raise MalformedLine(line_no, f"invalid JSON: {error}") from error
        if not isinstance(raw, dict):
            raise MalformedLine(line_no, "line is not a JSON object")
        missing = [key for key in ("source", "src_lang", "tgt_lang") if key not in raw]
        if missing:
            raise MalformedLine(line_no, f"missing fields: {', '.join(missing)}")
        try:
            task = TranslationTask(
                source_text=raw["source"],
                source_lang=raw["src_lang"],
                target_lang=raw["tgt_lang"],
            )
        except (DomainError, TypeError) as error:
            raise MalformedLine(line_no, str(error)) from error
        record_id = str(raw.get("id", index))
        if record_id in seen:
            raise MalformedLine(line_no, f"duplicate id {record_id!r}")
        seen.add(record_id)
        reference = raw.get("reference")
        if reference is not None and not isinstance(reference, str):
            raise MalformedLine(line_no, "reference must be a string")
        records.append(DatasetRecord(id=record_id, task=task, reference=reference))
    return records


@dataclass(frozen=True, slots=True)
class BatchRow:
    """Outcome of one dataset record, in input order."""

    id: str
    ok: bool
    mode: str
    final: Optional[str] = None
    error: Optional[str] = None
    termination: Optional[str] = None
    iterations: Optional[int] = None
    initial_score: Optional[int] = None
    final_score: Optional[int] = None
    elapsed: Optional[int] = None
    chrf: Optional[float] = None
    bleu: Optional[float] = None


def row_to_dict(row: BatchRow) -> dict[str, Any]:
    return asdict(row)


def _trace_row(record: DatasetRecord, mode: str, trace: WorkflowTrace) -> BatchRow:
    return BatchRow(
        id=record.id,
        ok=True,
        mode=mode,
        final=trace.final,
        termination=trace.termination.value,
        iterations=len(trace.records),
        initial_score=trace.records[0].score.overall_score,
        final_score=trace.records[trace.selected_index].score.overall_score,
        elapsed=sum(r.elapsed for r in trace.records),
    )


def _run_one(
    record: DatasetRecord,
    config: WorkflowConfig,
    backend: Backend,
    mode: str,
    sink: Optional[TraceSink],
    sink_lock: threading.Lock,
) -> BatchRow:
    if mode == "tactic":
        trace = run(record.task, config, backend)
    elif mode == "base-only":
        base = run_base_only(record.task, config, backend)
        trace = WorkflowTrace(
            task=record.task,
            records=(base,),
            final=base.refined.translation,
            termination=Termination.ITERATION_CAP,
            selected_index=0,
        )
    elif mode in ("zero-shot", "few-shot"):
        team = AgentTeam(backend=backend, config=config)
        started = time.monotonic()
        if mode == "zero-shot":
            text = team.translate_zero_shot(record.task)
        else:
            text = team.translate_few_shot(record.task)
        elapsed = int(round((time.monotonic() - started) * 1000))
        return BatchRow(id=record.id, ok=True, mode=mode, final=text, elapsed=elapsed)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if sink is not None:
        payload = {"id": record.id, **trace_to_dict(trace)}
        with sink_lock:
            sink(payload)
    return _trace_row(record, mode, trace)


def run_batch(
    records: Sequence[DatasetRecord],
    config: WorkflowConfig,
    backend_factory: BackendFactory,
    *,
    parallelism: int = 4,
    mode: str = "tactic",
    trace_sink: Optional[TraceSink] = None,
) -> list[BatchRow]:
    """Run every record and return one row each, in input order.

    Each record gets its own backend from the factory, so playback scripts
    stay deterministic at any parallelism. A record whose run fails becomes
    a failed row; the rest of the batch is unaffected. Traces stream to the
    sink in completion order, serialized by a lock.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    sink_lock = threading.Lock()
    rows: list[Optional[BatchRow]] = [None] * len(records)

    def worker(index: int) -> None:
        record = records[index]
        try:
            backend = backend_factory(record)
            rows[index] = _run_one(record, config, backend, mode, trace_sink, sink_lock)
        except (WorkflowFailure, BackendError, DomainError) as error:
            log.error("record %s failed: %s", record.id, error)
            rows[index] = BatchRow(id=record.id, ok=False, mode=mode, error=str(error))

    if parallelism == 1:
        for index in range(len(records)):
            worker(index)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            for future in [pool.submit(worker, i) for i in range(len(records))]:
                future.result()
    return [row for row in rows if row is not None]


@dataclass(frozen=True, slots=True)
class ScoredBatch:
    """Rows with per-segment metrics filled in, plus corpus aggregates."""

    rows: tuple[BatchRow, ...]
    corpus: Optional[CorpusScores]
    unscored: int
    """Rows left without metrics: failed, no output, or no usable reference."""


def score_report(rows: Sequence[BatchRow], records: Sequence[DatasetRecord]) -> ScoredBatch:
    """Attach ChrF and BLEU to every row that has output and a reference."""
    by_id = {record.id: record for record in records}
    scored: list[BatchRow] = []
    items: list[tuple[str, str, str]] = []
    for row in rows:
        record = by_id.get(row.id)
        reference = record.reference if record is not None else None
        if row.ok and row.final and reference and reference.strip():
            method = tokenizer_for_lang(record.task.target_lang)
            scored.append(
                replace(
                    row,
                    chrf=sentence_chrf(row.final, reference),
                    bleu=sentence_bleu(row.final, reference, tokenize_method=method),
                )
            )
            items.append((row.final, reference, method))
        else:
            scored.append(row)
    corpus = corpus_aggregate(items) if items else None
    return ScoredBatch(rows=tuple(scored), corpus=corpus, unscored=len(rows) - len(items))


@dataclass(frozen=True, slots=True)
class DistributionSummary:
    """How final scores moved relative to the base iteration."""

    gains: int
    equals: int
    regressions: int
    mean_delta: float
    counted: int


def distribution_summary(rows: Iterable[BatchRow]) -> DistributionSummary:
    """Compare final against initial overall scores across a batch.

    Rows without both scores (failures, baseline modes) are not counted.
    Runs that stopped at the base iteration have equal scores by definition.
    """
    gains = equals = regressions = 0
    deltas: list[int] = []
    for row in rows:
        if row.initial_score is None or row.final_score is None:
            continue
        delta = row.final_score - row.initial_score
        deltas.append(delta)
        if delta > 0:
            gains += 1
        elif delta < 0:
            regressions += 1
        else:
            equals += 1
    mean_delta = sum(deltas) / len(deltas) if deltas else 0.0
    return DistributionSummary(
        gains=gains,
        equals=equals,
        regressions=regressions,
        mean_delta=mean_delta,
        counted=len(deltas),
    )


def write_report(
    path: Union[str, Path],
    run_config: Mapping[str, Any],
    scored: ScoredBatch,
    distribution: DistributionSummary,
) -> None:
    """Write the line-delimited JSON report: config, rows, then a summary."""
    lines = [json.dumps({"kind": "config", "config": dict(run_config)}, ensure_ascii=False)]
    for row in scored.rows:
        lines.append(json.dumps({"kind": "row", **row_to_dict(row)}, ensure_ascii=False))
    summary: dict[str, Any] = {
        "kind": "summary",
        "rows": len(scored.rows),
        "unscored": scored.unscored,
        "corpus": None,
        "distribution": asdict(distribution),
    }
    if scored.corpus is not None:
        summary["corpus"] = {
            "chrf": scored.corpus.chrf,
            "bleu_by_tokenizer": dict(scored.corpus.bleu_by_tokenizer),
            "count": scored.corpus.count,
        }
    lines.append(json.dumps(summary, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(value: Any, width: int) -> str:
    if value is None:
        text = "-"
    elif isinstance(value, float):
        text = f"{value:.2f}"
    else:
        text = str(value)
    return text.ljust(width)


def render_report_table(scored: ScoredBatch, distribution: DistributionSummary) -> str:
    """Plain-text table of rows plus corpus and distribution footers."""
    header = ("id", "status", "termination", "iters", "s0", "s*", "chrf", "bleu")
    table: list[tuple[Any, ...]] = [header]
    for row in scored.rows:
        table.append(
            (
                row.id,
                "ok" if row.ok else "failed",
                row.termination,
                row.iterations,
                row.initial_score,
                row.final_score,
                row.chrf,
                row.bleu,
            )
        )
    widths = [
        max(len(_fmt(entry[col], 0).strip()) for entry in table)
        for col in range(len(header))
    ]
    lines = [
        "  ".join(_fmt(entry[col], widths[col]) for col in range(len(header))).rstrip()
        for entry in table
    ]
    if scored.corpus is not None:
        bleu_parts = ", ".join(
            f"bleu[{name}] {value:.2f}"
            for name, value in scored.corpus.bleu_by_tokenizer.items()
        )
        lines.append(
            f"corpus ({scored.corpus.count} scored, {scored.unscored} unscored): "
            f"chrf {scored.corpus.chrf:.2f}, {bleu_parts}"
        )
    else:
        lines.append(f"corpus: nothing scoreable ({scored.unscored} unscored)")
    lines.append(
        f"distribution over {distribution.counted} runs: "
        f"{distribution.gains} gained, {distribution.equals} equal, "
        f"{distribution.regressions} regressed, mean delta {distribution.mean_delta:+.2f}"
    )
    return "\n".join(lines)
