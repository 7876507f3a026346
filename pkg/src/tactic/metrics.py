"""Native ChrF and BLEU scoring.

Character-level ChrF (order 6, beta 2) needs no tokenizer; BLEU (order 4)
tokenizes with the classic 13a normalization, a character splitter for
languages written without spaces, or not at all for pre-tokenized text.
Sentence BLEU applies add-one smoothing to zero-count orders above unigrams;
corpus BLEU pools counts across segments and never smooths. All scores are
on a 0-100 scale.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

CHRF_ORDER = 6
CHRF_BETA = 2
BLEU_ORDER = 4

TOKENIZERS = ("13a", "char", "none")

_WHITESPACE = re.compile(r"\s+")
_CHAR_TOKENIZED_LANGS = frozenset({"zh", "ja", "chinese", "japanese"})


class EmptyReference(ValueError):
    """A reference with no scoreable content cannot anchor a metric."""


def tokenizer_for_lang(target_lang: str) -> str:
    """Pick the BLEU tokenizer for a target language tag.

    Tags are free-form and matched case-insensitively on their primary
    subtag; languages conventionally written without word spacing get the
    character splitter, everything else gets 13a.
    """
    primary = target_lang.strip().casefold().replace("_", "-").split("-")[0]
    return "char" if primary in _CHAR_TOKENIZED_LANGS else "13a"


def _normalize_13a(line: str) -> str:
    norm = line
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")
    norm = " {} ".format(norm)
    norm = re.sub(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])", " \\1 ", norm)
    norm = re.sub(r"([^0-9])([\.,])", "\\1 \\2 ", norm)
    norm = re.sub(r"([\.,])([^0-9])", " \\1 \\2", norm)
    norm = re.sub(r"([0-9])(-)", "\\1 \\2 ", norm)
    norm = re.sub(r"\s+", " ", norm)
    return norm.strip()


def tokenize(text: str, method: str = "13a") -> list[str]:
    """Split text into BLEU tokens with the named method."""
    if method == "13a":
        return _normalize_13a(text).split()
    if method == "char":
        return [char for char in text if not char.isspace()]
    if method == "none":
        return text.split()
    raise ValueError(f"unknown tokenizer {method!r}; expected one of {TOKENIZERS}")


# --- ChrF -------------------------------------------------------------------

def _char_ngrams(text: str, n: int) -> Counter[str]:
    return Counter(text[i:i + n] for i in range(len(text) - n + 1))


def sentence_chrf(
    hypothesis: str,
    reference: str,
    *,
    order: int = CHRF_ORDER,
    beta: float = CHRF_BETA,
) -> float:
    """Character n-gram F-score of one hypothesis against one reference.

    Whitespace is removed entirely before counting. Precision and recall are
    averaged over the orders where both sides have n-grams at all; an empty
    reference raises EmptyReference, an empty hypothesis scores 0.
    """
    ref = _WHITESPACE.sub("", reference)
    if not ref:
        raise EmptyReference("reference has no non-whitespace characters")
    hyp = _WHITESPACE.sub("", hypothesis)
    precision_sum = 0.0
    recall_sum = 0.0
    effective_orders = 0
    for n in range(1, order + 1):
        hyp_counts = _char_ngrams(hyp, n)
        ref_counts = _char_ngrams(ref, n)
        hyp_total = sum(hyp_counts.values())
        ref_total = sum(ref_counts.values())
        if hyp_total > 0 and ref_total > 0:
            matched = sum((hyp_counts & ref_counts).values())
            precision_sum += matched / hyp_total
            recall_sum += matched / ref_total
            effective_orders += 1
    if effective_orders == 0:
        return 0.0
    precision = precision_sum / effective_orders
    recall = recall_sum / effective_orders
    if precision + recall == 0:
        return 0.0
    beta_sq = beta * beta
    return 100.0 * (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)


def corpus_chrf(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    """Mean of the sentence ChrF scores (macro average)."""
    if len(hypotheses) != len(references):
        raise ValueError("hypotheses and references must be parallel")
    if not hypotheses:
        raise ValueError("cannot score an empty corpus")
    scores = [sentence_chrf(h, r) for h, r in zip(hypotheses, references)]
    return sum(scores) / len(scores)


# --- BLEU -------------------------------------------------------------------

def _token_ngrams(tokens: Sequence[str], order: int = BLEU_ORDER) -> Counter[tuple[str, ...]]:
    counts: Counter[tuple[str, ...]] = Counter()
    for n in range(1, order + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i:i + n])] += 1
    return counts


def _segment_counts(
    hyp_tokens: Sequence[str], ref_tokens: Sequence[str]
) -> tuple[list[int], list[int]]:
    """Clipped match counts and totals per order, both indexed 1..BLEU_ORDER."""
    correct = [0] * (BLEU_ORDER + 1)
    total = [0] * (BLEU_ORDER + 1)
    for n in range(1, BLEU_ORDER + 1):
        total[n] = max(len(hyp_tokens) - n + 1, 0)
    matches = _token_ngrams(hyp_tokens) & _token_ngrams(ref_tokens)
    for ngram, count in matches.items():
        correct[len(ngram)] += count
    return correct, total


def _brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    if hyp_len == 0:
        return 0.0
    return math.exp(1 - ref_len / hyp_len)


def sentence_bleu(hypothesis: str, reference: str, *, tokenize_method: str = "13a") -> float:
    """BLEU of one hypothesis against one reference.

    Orders above unigram with no matches are smoothed to 1 / (total + 1) so
    short segments still get a graded score; a hypothesis with no unigram
    match scores 0. An empty reference raises EmptyReference.
    """
    hyp_tokens = tokenize(hypothesis, tokenize_method)
    ref_tokens = tokenize(reference, tokenize_method)
    if not ref_tokens:
        raise EmptyReference("reference has no tokens")
    if not hyp_tokens:
        return 0.0
    correct, total = _segment_counts(hyp_tokens, ref_tokens)
    if correct[1] == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, BLEU_ORDER + 1):
        if correct[n] > 0:
            precision = correct[n] / total[n]
        else:
            precision = 1.0 / (total[n] + 1)
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / BLEU_ORDER)
    return 100.0 * _brevity_penalty(len(hyp_tokens), len(ref_tokens)) * geo_mean


def corpus_bleu(
    hypotheses: Sequence[str], references: Sequence[str], *, tokenize_method: str = "13a"
) -> float:
    """BLEU over pooled n-gram counts, with no smoothing.

    Any order with zero matches over the whole corpus scores 0, as does an
    empty pooled hypothesis. References must all be nonempty.
    """
    if len(hypotheses) != len(references):
        raise ValueError("hypotheses and references must be parallel")
    if not hypotheses:
        raise ValueError("cannot score an empty corpus")
    correct = [0] * (BLEU_ORDER + 1)
    total = [0] * (BLEU_ORDER + 1)
    hyp_len = 0
    ref_len = 0
    for hypothesis, reference in zip(hypotheses, references):
        hyp_tokens = tokenize(hypothesis, tokenize_method)
        ref_tokens = tokenize(reference, tokenize_method)
        if not ref_tokens:
            raise EmptyReference("reference has no tokens")
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        seg_correct, seg_total = _segment_counts(hyp_tokens, ref_tokens)
        for n in range(1, BLEU_ORDER + 1):
            correct[n] += seg_correct[n]
            total[n] += seg_total[n]
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, BLEU_ORDER + 1):
        if total[n] == 0 or correct[n] == 0:
            return 0.0
        log_sum += math.log(correct[n] / total[n])
    geo_mean = math.exp(log_sum / BLEU_ORDER)
    return 100.0 * _brevity_penalty(hyp_len, ref_len) * geo_mean


@dataclass(frozen=True, slots=True)
class CorpusScores:
    """Corpus-level aggregates: macro ChrF plus pooled BLEU per tokenizer."""

    chrf: float
    bleu_by_tokenizer: Mapping[str, float]
    count: int


def corpus_aggregate(items: Sequence[tuple[str, str, str]]) -> CorpusScores:
    """Aggregate (hypothesis, reference, tokenizer) triples.

    ChrF is the macro average over all items; BLEU pools counts within each
    tokenizer group, since token counts are not comparable across tokenizers.
    """
    if not items:
        raise ValueError("cannot aggregate an empty corpus")
    chrf = sum(sentence_chrf(h, r) for h, r, _ in items) / len(items)
    groups: dict[str, tuple[list[str], list[str]]] = {}
    for hypothesis, reference, method in items:
        hyps, refs = groups.setdefault(method, ([], []))
        hyps.append(hypothesis)
        refs.append(reference)
    bleu = {
        method: corpus_bleu(hyps, refs, tokenize_method=method)
        for method, (hyps, refs) in sorted(groups.items())
    }
    return CorpusScores(chrf=chrf, bleu_by_tokenizer=bleu, count=len(items))
