"""Shared builders for scripted backend replies used across the test suite."""

from __future__ import annotations

import json

from tactic import TranslationTask

# Dimension triples whose sum reproduces a target overall score.
DIMS_BY_OVERALL = {
    18: (6, 6, 6),
    20: (7, 7, 6),
    21: (7, 7, 7),
    22: (8, 7, 7),
    24: (8, 8, 8),
    27: (9, 9, 9),
    28: (10, 9, 9),
    29: (10, 10, 9),
    30: (10, 10, 10),
}


def draft_reply(text="draft"):
    return json.dumps({"translation": text}, ensure_ascii=False)


def refinement_reply(text="refined", analysis="merged the strongest candidate"):
    return json.dumps({"analysis": analysis, "translation": text}, ensure_ascii=False)


def evaluation_reply(note="adequate"):
    return json.dumps(
        {"faithfulness": note, "expressiveness": note, "elegance": note},
        ensure_ascii=False,
    )


def score_reply(f, e, a, overall=None, feedback="noted"):
    if overall is None:
        numeric = all(isinstance(v, (int, float)) for v in (f, e, a))
        overall = (f + e + a) if numeric else 0
    return json.dumps(
        {
            "faithfulness_score": f,
            "expressiveness_score": e,
            "elegance_score": a,
            "overall_score": overall,
            "feedback": feedback,
        },
        ensure_ascii=False,
    )


def score_entry(overall):
    """Scripted score reply for a target overall, via a known dimension split."""
    return score_reply(*DIMS_BY_OVERALL[overall])


def context_reply(source_text, analysis="formal register, technical domain"):
    return json.dumps(
        {
            "context_analysis": analysis,
            "extended_context": f"Earlier paragraph. {source_text} Later paragraph.",
        },
        ensure_ascii=False,
    )


def research_reply():
    return "1. release notes: Versionshinweise\n2. rollback: Zuruecksetzen"


def make_task(source_text="The deployment pipeline failed after the last release."):
    return TranslationTask(
        source_text=source_text,
        source_lang="English",
        target_lang="German",
    )


def script_for_scores(overalls, task=None, extra_rounds=0):
    """Kind-keyed playback driving a full run through len(overalls) iterations.

    ``extra_rounds`` pads every stream so runs that stop early by design
    never fail on script exhaustion instead.
    """
    task = task or make_task()
    n = len(overalls) + extra_rounds
    padded = list(overalls) + [overalls[-1]] * extra_rounds
    return {
        "draft": [draft_reply(f"draft {i}") for i in range(3 * n)],
        "refinement": [refinement_reply(f"refined {i}") for i in range(n)],
        "evaluation": [evaluation_reply() for _ in range(n)],
        "score": [score_entry(o) for o in padded],
        "research": [research_reply() for _ in range(n)],
        "context": [context_reply(task.source_text) for _ in range(n)],
    }
