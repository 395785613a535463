"""Surface-similarity metrics for generated reports, implemented from scratch.

Conventions (documented because the choice is ours, not forced):
  * no n-gram smoothing by default; an optional +1 smoothing flag exists for
    short-report diagnostics but is off for all emitted tables
  * single reference per hypothesis in practice, though the n-gram metric
    accepts several
  * the alignment-based metric uses exact + suffix-stem matching only, with
    exact character matching for Chinese
  * the embedding metric reports raw F1 (no idf weighting, no rescaling)
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from crb._accel import lcs_length
from crb.core import Language
from crb.errors import EmptyCorpus, EmptyHypothesis, ZeroBaseline
from crb.parsing import TokenSequence


@dataclass(frozen=True)
class MetricReport:
    scope: str  # per_case | corpus
    bleu: tuple[float, float, float, float]
    rouge_l: float
    meteor: float
    bertscore_f1: float | None
    n_cases: int


# ---------------------------------------------------------------------------
# n-gram precision metric


def _ngrams(tokens: tuple[str, ...], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_counts(
    hyp: tuple[str, ...], refs: list[tuple[str, ...]], n: int
) -> tuple[int, int]:
    """(clipped matches, total hyp n-grams) for one order n."""
    hyp_counts = _ngrams(hyp, n)
    if not hyp_counts:
        return 0, 0
    max_ref: Counter = Counter()
    for ref in refs:
        for gram, c in _ngrams(ref, n).items():
            if c > max_ref[gram]:
                max_ref[gram] = c
    matched = sum(min(c, max_ref[gram]) for gram, c in hyp_counts.items())
    return matched, sum(hyp_counts.values())


def _closest_ref_length(c: int, refs: list[tuple[str, ...]]) -> int:
    # ties broken toward the shorter reference
    return min((abs(len(r) - c), len(r)) for r in refs)[1]


def _bp(c: int, r: int) -> float:
    if c >= r:
        return 1.0
    return math.exp(1.0 - r / c)


def bleu(
    hyp: TokenSequence,
    refs: list[TokenSequence],
    max_n: int = 4,
    smoothing: bool = False,
) -> float:
    """Geometric mean of modified n-gram precisions times the brevity penalty.

    Any zero precision yields 0 unless +1 smoothing is requested.
    """
    if not 1 <= max_n <= 4:
        raise ValueError(f"max_n must be in 1..4, got {max_n}")
    if len(hyp.tokens) == 0:
        raise EmptyHypothesis("hypothesis has no tokens")
    ref_tokens = [r.tokens for r in refs]
    log_sum = 0.0
    for n in range(1, max_n + 1):
        matched, total = _clipped_counts(hyp.tokens, ref_tokens, n)
        if smoothing:
            matched, total = matched + 1, total + 1
        if matched == 0 or total == 0:
            return 0.0
        log_sum += math.log(matched / total)
    bp = _bp(len(hyp.tokens), _closest_ref_length(len(hyp.tokens), ref_tokens))
    return bp * math.exp(log_sum / max_n)


def corpus_bleu(
    pairs: list[tuple[TokenSequence, list[TokenSequence]]],
    max_n: int = 4,
    smoothing: bool = False,
) -> float:
    """Corpus variant: clipped counts and lengths aggregate before the ratio."""
    matched_total = [0] * max_n
    grams_total = [0] * max_n
    c_total = 0
    r_total = 0
    for hyp, refs in pairs:
        if len(hyp.tokens) == 0:
            raise EmptyHypothesis("hypothesis has no tokens")
        ref_tokens = [r.tokens for r in refs]
        for n in range(1, max_n + 1):
            m, t = _clipped_counts(hyp.tokens, ref_tokens, n)
            matched_total[n - 1] += m
            grams_total[n - 1] += t
        c_total += len(hyp.tokens)
        r_total += _closest_ref_length(len(hyp.tokens), ref_tokens)
    log_sum = 0.0
    for m, t in zip(matched_total, grams_total):
        if smoothing:
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            return 0.0
        log_sum += math.log(m / t)
    return _bp(c_total, r_total) * math.exp(log_sum / max_n)


# ---------------------------------------------------------------------------
# LCS metric


def rouge_l(hyp: TokenSequence, ref: TokenSequence) -> float:
    """LCS-based F1: P = LCS/|hyp|, R = LCS/|ref|."""
    if not hyp.tokens or not ref.tokens:
        return 0.0
    vocab: dict[str, int] = {}
    a = [vocab.setdefault(t, len(vocab)) for t in hyp.tokens]
    b = [vocab.setdefault(t, len(vocab)) for t in ref.tokens]
    lcs = lcs_length(a, b)
    if lcs == 0:
        return 0.0
    p = lcs / len(hyp.tokens)
    r = lcs / len(ref.tokens)
    return 2 * p * r / (p + r)


# ---------------------------------------------------------------------------
# alignment metric


def _stem(word: str) -> str:
    """Light suffix stripping for English stem matching."""
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies"):
        return word[:-3] + "i"
    if word.endswith("ss"):
        return word
    if word.endswith("s") and len(word) > 3:
        return word[:-1]
    if word.endswith("ing") and len(word) > 5:
        return word[:-3]
    if word.endswith("ed") and len(word) > 4:
        return word[:-2]
    return word


def _align_stage(
    hyp: tuple[str, ...],
    ref: tuple[str, ...],
    hyp_free: list[int],
    ref_free: list[int],
    key,
) -> list[tuple[int, int]]:
    pairs = []
    taken: set[int] = set()
    for hi in hyp_free:
        for ri in ref_free:
            if ri in taken:
                continue
            if key(hyp[hi]) == key(ref[ri]):
                pairs.append((hi, ri))
                taken.add(ri)
                break
    return pairs


def meteor(hyp: TokenSequence, ref: TokenSequence) -> float:
    """Unigram-alignment score with recall-weighted harmonic mean and a
    fragmentation penalty of 0.5 * (chunks / matches)^3.

    Exact matches are taken first, then stem matches (English only).
    """
    if not hyp.tokens or not ref.tokens:
        return 0.0
    pairs = _align_stage(
        hyp.tokens, ref.tokens, list(range(len(hyp.tokens))), list(range(len(ref.tokens))),
        key=lambda w: w,
    )
    if hyp.language is Language.en:
        hyp_free = [i for i in range(len(hyp.tokens)) if i not in {h for h, _ in pairs}]
        ref_free = [i for i in range(len(ref.tokens)) if i not in {r for _, r in pairs}]
        pairs += _align_stage(hyp.tokens, ref.tokens, hyp_free, ref_free, key=_stem)
    m = len(pairs)
    if m == 0:
        return 0.0
    p = m / len(hyp.tokens)
    r = m / len(ref.tokens)
    f_mean = 10 * p * r / (r + 9 * p)
    pairs.sort()
    chunks = 1
    for (h1, r1), (h2, r2) in zip(pairs, pairs[1:]):
        if h2 != h1 + 1 or r2 != r1 + 1:
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1.0 - penalty)


# ---------------------------------------------------------------------------
# embedding metric


def bertscore_f1(hyp: TokenSequence, ref: TokenSequence, provider) -> float:
    """Greedy max-cosine token matching F1 under the configured provider."""
    if not hyp.tokens or not ref.tokens:
        return 0.0
    hv = provider.embed(hyp)
    rv = provider.embed(ref)
    if hv.shape[1] != rv.shape[1]:
        raise ValueError(f"dimension mismatch: {hv.shape[1]} vs {rv.shape[1]}")
    sim = rv @ hv.T  # unit-norm vectors, so dot product is cosine
    recall = float(sim.max(axis=1).mean())
    precision = float(sim.max(axis=0).mean())
    if precision + recall <= 0:
        return 0.0
    f1 = 2 * precision * recall / (precision + recall)
    return min(max(f1, 0.0), 1.0)


# ---------------------------------------------------------------------------
# aggregation


def relative_change(base: float, new: float) -> float:
    """Percent change of `new` against `base`."""
    if base == 0:
        raise ZeroBaseline("relative change undefined for zero baseline")
    return 100.0 * (new - base) / base


def evaluate_pairs(
    pairs: list[tuple[TokenSequence, TokenSequence]],
    provider=None,
    smoothing: bool = False,
) -> tuple[list[MetricReport], MetricReport]:
    """Per-case reports plus the corpus-level report.

    Corpus n-gram scores use aggregated counts; the other metrics are
    macro-averaged over cases.
    """
    if not pairs:
        raise EmptyCorpus("no hypothesis/reference pairs")
    per_case: list[MetricReport] = []
    for hyp, ref in pairs:
        b = tuple(bleu(hyp, [ref], n, smoothing=smoothing) for n in range(1, 5))
        per_case.append(
            MetricReport(
                scope="per_case",
                bleu=b,
                rouge_l=rouge_l(hyp, ref),
                meteor=meteor(hyp, ref),
                bertscore_f1=bertscore_f1(hyp, ref, provider) if provider else None,
                n_cases=1,
            )
        )
    n = len(per_case)
    corpus = MetricReport(
        scope="corpus",
        bleu=tuple(
            corpus_bleu([(h, [r]) for h, r in pairs], k, smoothing=smoothing)
            for k in range(1, 5)
        ),
        rouge_l=sum(c.rouge_l for c in per_case) / n,
        meteor=sum(c.meteor for c in per_case) / n,
        bertscore_f1=(
            sum(c.bertscore_f1 for c in per_case) / n if provider else None
        ),
        n_cases=n,
    )
    return per_case, corpus
