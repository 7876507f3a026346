"""Value-object validation, score algebra, serialization, and trace checks."""

from __future__ import annotations

import json

import pytest

from tactic import (
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
from tactic.domain import best_record_index, config_from_dict, config_to_dict

from helpers import DIMS_BY_OVERALL, make_task


def make_score(f=8, e=8, a=8, feedback="ok"):
    return ScoreReport(
        faithfulness_score=f,
        expressiveness_score=e,
        elegance_score=a,
        overall_score=f + e + a,
        feedback=feedback,
    )


def make_record(index, overall=24, refined_text=None, with_enrichment=None):
    if with_enrichment is None:
        with_enrichment = index > 0
    dims = DIMS_BY_OVERALL[overall]
    drafts = DraftSet(
        drafts={style: f"draft {index}.{n}" for n, style in enumerate(DraftStyle)}
    )
    enrichment = None
    if with_enrichment:
        enrichment = EnrichmentBundle(
            research=ResearchNotes(terms=(("term", "Begriff"),)),
            context=ContextInfo(
                context_analysis="register",
                extended_context="around the source",
                source_contained=False,
            ),
        )
    return IterationRecord(
        index=index,
        enrichment=enrichment,
        drafts=drafts,
        refined=RefinedTranslation(
            analysis="why", translation=refined_text or f"refined {index}"
        ),
        evaluation=EvaluationReport(faithfulness="f", expressiveness="e", elegance="a"),
        score=make_score(*dims),
        elapsed=5,
    )


def make_trace(overalls, termination, selected):
    records = tuple(make_record(i, o) for i, o in enumerate(overalls))
    return WorkflowTrace(
        task=make_task(),
        records=records,
        final=records[selected].refined.translation,
        termination=termination,
        selected_index=selected,
    )


class TestTranslationTask:
    def test_valid(self):
        task = make_task()
        assert task.source_lang == "English"
        assert task.target_lang == "German"

    def test_source_text_kept_verbatim(self):
        task = TranslationTask(source_text="  hi there  ", source_lang="en", target_lang="de")
        assert task.source_text == "  hi there  "

    @pytest.mark.parametrize("text", ["", "   ", "\n\t"])
    def test_blank_source_rejected(self, text):
        with pytest.raises(DomainError):
            TranslationTask(source_text=text, source_lang="en", target_lang="de")

    def test_blank_language_rejected(self):
        with pytest.raises(DomainError):
            TranslationTask(source_text="x", source_lang=" ", target_lang="de")

    @pytest.mark.parametrize("pair", [("en", "en"), ("English", "english"), (" de", "de ")])
    def test_same_language_pair_rejected(self, pair):
        with pytest.raises(DomainError):
            TranslationTask(source_text="x", source_lang=pair[0], target_lang=pair[1])


class TestDraftSet:
    def test_styles_in_fixed_order(self):
        drafts = DraftSet(
            drafts={
                DraftStyle.FREE: "c",
                DraftStyle.LITERAL: "a",
                DraftStyle.SENSE_FOR_SENSE: "b",
            }
        )
        assert drafts.in_order() == ("a", "b", "c")
        assert list(drafts.drafts) == list(DraftStyle)

    def test_missing_style_rejected(self):
        with pytest.raises(DomainError):
            DraftSet(drafts={DraftStyle.LITERAL: "a"})

    def test_empty_draft_rejected(self):
        with pytest.raises(DomainError):
            DraftSet(drafts={s: ("" if s is DraftStyle.FREE else "x") for s in DraftStyle})

    def test_mapping_is_read_only(self):
        drafts = DraftSet(drafts={s: "x" for s in DraftStyle})
        with pytest.raises(TypeError):
            drafts.drafts[DraftStyle.LITERAL] = "y"

    def test_style_labels(self):
        assert DraftStyle.LITERAL.label == "Literal Translation"
        assert DraftStyle.SENSE_FOR_SENSE.label == "Sense-for-Sense Translation"
        assert DraftStyle.FREE.label == "Free Translation"


class TestScoreReport:
    def test_valid(self):
        assert make_score(10, 9, 8).overall_score == 27

    def test_overall_must_equal_sum(self):
        with pytest.raises(DomainError):
            ScoreReport(
                faithfulness_score=8,
                expressiveness_score=8,
                elegance_score=8,
                overall_score=25,
                feedback="",
            )

    @pytest.mark.parametrize("bad", [0, 11, -1])
    def test_dimension_range_enforced(self, bad):
        with pytest.raises(DomainError):
            ScoreReport(
                faithfulness_score=bad,
                expressiveness_score=5,
                elegance_score=5,
                overall_score=bad + 10,
                feedback="",
            )

    def test_boolean_dimension_rejected(self):
        with pytest.raises(DomainError):
            ScoreReport(
                faithfulness_score=True,
                expressiveness_score=5,
                elegance_score=5,
                overall_score=11,
                feedback="",
            )


class TestValidateScoreReport:
    def test_plain_integers(self):
        report = validate_score_report(8, 9, 10, 27, "good")
        assert (
            report.faithfulness_score,
            report.expressiveness_score,
            report.elegance_score,
        ) == (8, 9, 10)
        assert report.overall_score == 27
        assert report.feedback == "good"

    def test_numeric_strings(self):
        assert validate_score_report("10", "10", "10", "30", "").overall_score == 30

    def test_stated_overall_is_ignored(self):
        assert validate_score_report(1, 1, 1, 99, "").overall_score == 3

    def test_fractional_rounds_half_away_from_zero(self):
        report = validate_score_report("8.6", "7", "9", "24", "")
        assert (
            report.faithfulness_score,
            report.expressiveness_score,
            report.elegance_score,
        ) == (9, 7, 9)
        assert report.overall_score == 25

    @pytest.mark.parametrize(
        ("raw", "expected"),
        [(8.5, 9), (2.5, 3), (9.5, 10), (0.4, 1), (10.5, 10), (0, 1), (-3, 1), (15, 10)],
    )
    def test_rounding_and_clamping(self, raw, expected):
        assert validate_score_report(raw, 5, 5, 0, "").faithfulness_score == expected

    def test_whitespace_tolerated(self):
        assert validate_score_report(" 7 ", 7, 7, 21, "").faithfulness_score == 7

    @pytest.mark.parametrize("bad", ["ten", "", None, True, float("nan"), "inf", [7]])
    def test_non_numeric_rejected(self, bad):
        with pytest.raises(NonNumericScore):
            validate_score_report(bad, 5, 5, 15, "")


class TestWorkflowConfig:
    def test_defaults(self):
        config = WorkflowConfig()
        assert config.tau == 27
        assert config.kappa == 3
        assert config.delta == 300_000
        assert config.max_parse_retries == 3
        assert config.temperature == 0.6
        assert config.max_tokens == 4096
        assert config.few_shot is False
        assert config.few_shot_examples == ()

    @pytest.mark.parametrize(
        "overrides",
        [
            {"tau": 2},
            {"tau": 31},
            {"kappa": -1},
            {"delta": 0},
            {"max_parse_retries": 0},
            {"temperature": -0.1},
            {"temperature": 2.5},
            {"max_tokens": 0},
        ],
    )
    def test_bounds(self, overrides):
        with pytest.raises(DomainError):
            WorkflowConfig(**overrides)

    def test_few_shot_examples_normalized(self):
        config = WorkflowConfig(few_shot_examples=(("Hi", "Hallo"),))
        assert config.few_shot_examples == (("Hi", "Hallo"),)

    def test_roundtrip(self):
        config = WorkflowConfig(
            tau=30, kappa=1, few_shot=True, few_shot_examples=(("a", "b"),)
        )
        assert config_from_dict(config_to_dict(config)) == config

    def test_unknown_field_rejected(self):
        with pytest.raises(DomainError):
            config_from_dict({"tau": 27, "mystery": 1})


class TestIterationRecord:
    def test_enrichment_required_after_first_iteration(self):
        with pytest.raises(DomainError):
            make_record(1, with_enrichment=False)

    def test_enrichment_forbidden_on_first_iteration(self):
        with pytest.raises(DomainError):
            make_record(0, with_enrichment=True)

    def test_negative_elapsed_rejected(self):
        record = make_record(0)
        with pytest.raises(DomainError):
            IterationRecord(
                index=0,
                enrichment=None,
                drafts=record.drafts,
                refined=record.refined,
                evaluation=record.evaluation,
                score=record.score,
                elapsed=-1,
            )

    def test_research_term_with_empty_source_rejected(self):
        with pytest.raises(DomainError):
            ResearchNotes(terms=(("", "Begriff"),))


class TestWorkflowTrace:
    def test_valid(self):
        trace = make_trace([24, 27], Termination.THRESHOLD_MET, 1)
        assert trace.final == "refined 1"

    def test_indexes_must_start_at_zero(self):
        records = (make_record(1),)
        with pytest.raises(DomainError):
            WorkflowTrace(
                task=make_task(),
                records=records,
                final=records[0].refined.translation,
                termination=Termination.ITERATION_CAP,
                selected_index=0,
            )

    def test_selected_index_in_range(self):
        records = (make_record(0),)
        with pytest.raises(DomainError):
            WorkflowTrace(
                task=make_task(),
                records=records,
                final=records[0].refined.translation,
                termination=Termination.ITERATION_CAP,
                selected_index=1,
            )

    def test_final_must_match_selected_record(self):
        records = (make_record(0),)
        with pytest.raises(DomainError):
            WorkflowTrace(
                task=make_task(),
                records=records,
                final="something else",
                termination=Termination.ITERATION_CAP,
                selected_index=0,
            )

    def test_roundtrip_through_json(self):
        trace = make_trace([24, 22, 27], Termination.THRESHOLD_MET, 2)
        payload = json.loads(json.dumps(trace_to_dict(trace), ensure_ascii=False))
        assert trace_from_dict(payload) == trace

    def test_serialized_shape(self):
        data = trace_to_dict(make_trace([24], Termination.ITERATION_CAP, 0))
        assert data["termination"] == "iteration_cap"
        assert data["records"][0]["enrichment"] is None
        assert data["records"][0]["score"]["overall_score"] == 24
        assert set(data) == {"task", "records", "final", "termination", "selected_index"}


class TestSelectionAndVerification:
    def test_best_record_prefers_earliest_on_tie(self):
        records = [make_record(0, 24), make_record(1, 24), make_record(2, 22)]
        assert best_record_index(records) == 0

    def test_best_record_picks_maximum(self):
        records = [make_record(0, 20), make_record(1, 27), make_record(2, 24)]
        assert best_record_index(records) == 1

    def test_clean_trace_has_no_violations(self):
        trace = make_trace([24, 27], Termination.THRESHOLD_MET, 1)
        assert verify_trace(trace, tau=27) == []

    def test_cap_trace_must_select_best(self):
        trace = make_trace([24, 20], Termination.ITERATION_CAP, 1)
        assert any("selected" in v for v in verify_trace(trace))

    def test_threshold_trace_must_clear_tau(self):
        trace = make_trace([24, 21], Termination.THRESHOLD_MET, 1)
        assert verify_trace(trace, tau=27)

    def test_iteration_cap_must_not_skip_threshold(self):
        trace = make_trace([28, 20, 22], Termination.ITERATION_CAP, 0)
        assert verify_trace(trace, tau=27)

    def test_threshold_must_select_last(self):
        trace = make_trace([28], Termination.THRESHOLD_MET, 0)
        assert verify_trace(trace, tau=27) == []
