"""Command line interface.

Three subcommands: translate one segment, bench a dataset, inspect a trace
file. stdout carries only the artifact of each command (the translation, the
report path, the inspection text); tables and diagnostics go to stderr.
Exit codes: 0 success, 1 runtime failure, 2 usage error.

Credentials are read exclusively from the environment variable named by
backend.API_KEY_ENV; config files that try to carry them are rejected.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import Any, Optional, Sequence

from .backend import API_KEY_ENV, Backend, BackendError, RemoteBackend, ScriptedBackend
from .domain import (
    DomainError,
    TranslationTask,
    WorkflowConfig,
    config_from_dict,
    config_to_dict,
    trace_from_dict,
    trace_to_dict,
    verify_trace,
)
from .harness import (
    MODES,
    MalformedLine,
    distribution_summary,
    load_dataset,
    render_report_table,
    run_batch,
    score_report,
    write_report,
)
from .workflow import WorkflowFailure, run

log = logging.getLogger(__name__)

_WORKFLOW_FIELDS = frozenset(config_to_dict(WorkflowConfig()))
_BACKEND_FIELDS = frozenset({"base_url", "model"})
_CREDENTIAL_KEYS = frozenset(
    {"key", "apikey", "api_key", "token", "authorization", "bearer", "secret", "password",
     "credential", "credentials"}
)
_CREDENTIAL_SUFFIXES = ("_key", "_token", "_secret", "_password")


class ConfigError(ValueError):
    """The configuration file or flag combination is unusable."""


def load_config_file(path: Path) -> dict[str, Any]:
    """Read and vet a JSON config file.

    Allowed keys are the workflow fields plus base_url and model. Keys that
    look like credentials are rejected outright: secrets travel only through
    the environment.
    """
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    for key in data:
        lowered = key.lower()
        if lowered in _CREDENTIAL_KEYS or lowered.endswith(_CREDENTIAL_SUFFIXES):
            raise ConfigError(
                f"config key {key!r} looks like a credential; set the "
                f"{API_KEY_ENV} environment variable instead"
            )
    unknown = set(data) - _WORKFLOW_FIELDS - _BACKEND_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def resolve_config(args: argparse.Namespace) -> tuple[WorkflowConfig, dict[str, Any]]:
    """Merge config file and flags; flags win. Returns (config, backend keys)."""
    file_data = load_config_file(args.config) if args.config else {}
    backend_data = {key: file_data.pop(key) for key in list(file_data) if key in _BACKEND_FIELDS}
    overrides = {
        "tau": args.tau,
        "kappa": args.kappa,
        "delta": args.delta,
        "max_parse_retries": args.max_parse_retries,
        "temperature": args.temperature,
        "max_tokens": args.max_tokens,
        "few_shot": args.few_shot,
    }
    for key, value in overrides.items():
        if value is not None:
            file_data[key] = value
    if args.base_url is not None:
        backend_data["base_url"] = args.base_url
    if args.model is not None:
        backend_data["model"] = args.model
    return config_from_dict(file_data), backend_data


def _load_script(path: Path) -> Any:
    script = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(script, (list, dict)):
        raise ConfigError("playback file must hold a JSON array or object")
    return script


def make_backend_factory(args: argparse.Namespace, backend_data: dict[str, Any]):
    """Build a per-record backend factory from flags and config.

    Playback wins when given; otherwise a remote backend needs base_url and
    model. Every call returns a fresh backend so scripted cursors and HTTP
    sessions are never shared across records.
    """
    if args.playback:
        script = _load_script(args.playback)
        return lambda record=None: ScriptedBackend(script)
    base_url = backend_data.get("base_url")
    model = backend_data.get("model")
    if not base_url or not model:
        raise ConfigError(
            "no backend: pass --playback, or --base-url and --model "
            "(flags or config file)"
        )
    return lambda record=None: RemoteBackend(base_url, model)


def cmd_translate(args: argparse.Namespace) -> int:
    config, backend_data = resolve_config(args)
    text = args.text if args.text is not None else sys.stdin.read()
    task = TranslationTask(
        source_text=text.rstrip("\n"),
        source_lang=args.source_lang,
        target_lang=args.target_lang,
    )
    backend: Backend = make_backend_factory(args, backend_data)()
    trace = run(task, config, backend)
    if args.trace:
        args.trace.write_text(
            json.dumps(trace_to_dict(trace), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    selected = trace.records[trace.selected_index]
    print(
        f"termination {trace.termination.value}, {len(trace.records)} iteration(s), "
        f"selected {trace.selected_index}, overall {selected.score.overall_score}",
        file=sys.stderr,
    )
    print(trace.final)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config, backend_data = resolve_config(args)
    if args.mode == "few-shot" and not config.few_shot_examples:
        raise ConfigError("few-shot mode needs few_shot_examples in the config file")
    records = load_dataset(args.dataset)
    factory = make_backend_factory(args, backend_data)
    with ExitStack() as stack:
        sink = None
        if args.traces:
            handle = stack.enter_context(args.traces.open("w", encoding="utf-8"))

            def sink(payload: dict[str, Any]) -> None:
                handle.write(json.dumps(payload, ensure_ascii=False) + "\n")
                handle.flush()

        rows = run_batch(
            records,
            config,
            lambda record: factory(record),
            parallelism=args.parallelism,
            mode=args.mode,
            trace_sink=sink,
        )
    scored = score_report(rows, records)
    distribution = distribution_summary(scored.rows)
    run_config = {
        "mode": args.mode,
        "parallelism": args.parallelism,
        "dataset": str(args.dataset),
        **config_to_dict(config),
        **{key: backend_data[key] for key in sorted(backend_data)},
    }
    write_report(args.out, run_config, scored, distribution)
    print(render_report_table(scored, distribution), file=sys.stderr)
    print(args.out)
    return 0


def _load_traces(path: Path) -> list[tuple[str, dict[str, Any]]]:
    text = path.read_text(encoding="utf-8")
    try:
        single = json.loads(text)
    except json.JSONDecodeError:
        single = None
    raw_traces: list[dict[str, Any]]
    if isinstance(single, dict):
        raw_traces = [single]
    else:
        raw_traces = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parsed = json.loads(line)
            if not isinstance(parsed, dict):
                raise ConfigError(f"line {line_no}: not a JSON object")
            raw_traces.append(parsed)
    if not raw_traces:
        raise ConfigError("no traces in file")
    labeled = []
    for i, raw in enumerate(raw_traces):
        if "records" not in raw or "task" not in raw:
            raise ConfigError(f"entry {i}: not a workflow trace")
        labeled.append((str(raw.get("id", i)), raw))
    return labeled


def cmd_inspect(args: argparse.Namespace) -> int:
    failures = 0
    for label, raw in _load_traces(args.trace_file):
        trace = trace_from_dict(raw)
        selected = trace.records[trace.selected_index]
        print(
            f"trace {label}: {len(trace.records)} iteration(s), "
            f"termination {trace.termination.value}, selected {trace.selected_index}, "
            f"overall {selected.score.overall_score}"
        )
        for record in trace.records:
            score = record.score
            enrich = ""
            if record.enrichment is not None:
                terms = len(record.enrichment.research.terms)
                contained = "ok" if record.enrichment.context.source_contained else "NOT CONTAINED"
                enrich = f", {terms} term(s), context {contained}"
            print(
                f"  iteration {record.index}: overall {score.overall_score} "
                f"({score.faithfulness_score}/{score.expressiveness_score}"
                f"/{score.elegance_score}), {record.elapsed} ms{enrich}"
            )
        violations = verify_trace(trace, tau=args.tau)
        if violations:
            failures += 1
            for violation in violations:
                print(f"  VIOLATION: {violation}")
        else:
            print("  invariants: ok")
    return 1 if failures else 0


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--base-url", help="chat-completion service root URL")
    parser.add_argument("--model", help="model name to request")
    parser.add_argument("--playback", type=Path, help="scripted replies JSON instead of a remote backend")
    parser.add_argument("--tau", type=int, help="overall score threshold in [3, 30]")
    parser.add_argument("--kappa", type=int, help="max enriched iterations")
    parser.add_argument("--delta", type=int, help="wall-clock budget in ms")
    parser.add_argument("--max-parse-retries", type=int, help="attempts per structured call")
    parser.add_argument("--temperature", type=float, help="sampling temperature")
    parser.add_argument("--max-tokens", type=int, help="reply token limit")
    parser.add_argument(
        "--few-shot",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="include configured example pairs in workflow prompts",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tactic",
        description="Multi-agent translation workflow: draft, refine, evaluate, score.",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    translate = sub.add_parser("translate", help="translate one segment")
    _add_shared(translate)
    translate.add_argument("--text", help="source text (default: read stdin)")
    translate.add_argument("--from", dest="source_lang", required=True, help="source language")
    translate.add_argument("--to", dest="target_lang", required=True, help="target language")
    translate.add_argument("--trace", type=Path, help="write the workflow trace here")
    translate.set_defaults(handler=cmd_translate)

    bench = sub.add_parser("bench", help="run a dataset and write a report")
    _add_shared(bench)
    bench.add_argument("--dataset", type=Path, required=True, help="JSON Lines dataset")
    bench.add_argument("--out", type=Path, required=True, help="report file to write")
    bench.add_argument("--traces", type=Path, help="stream traces here as JSON lines")
    bench.add_argument("--parallelism", type=int, default=4, help="concurrent segments")
    bench.add_argument("--mode", choices=MODES, default="tactic", help="what to run per segment")
    bench.set_defaults(handler=cmd_bench)

    inspect = sub.add_parser("inspect", help="verify and summarize a trace file")
    inspect.add_argument("trace_file", type=Path, help="trace JSON or JSON Lines file")
    inspect.add_argument("--tau", type=int, help="threshold to check termination against")
    inspect.set_defaults(handler=cmd_inspect)
    return parser


_FAILURES = (
    WorkflowFailure,
    BackendError,
    DomainError,
    MalformedLine,
    ConfigError,
    OSError,
    json.JSONDecodeError,
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except _FAILURES as error:
        print(f"tactic: error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
