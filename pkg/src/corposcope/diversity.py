"""Cross-sample diversity metrics: Distinct-1/2 and Self-BLEU."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, UndefinedMetricError
from .seeds import derive_seed, seeded_subset

TokenSeq = Sequence[str]


@dataclass(frozen=True)
class BleuConfig:
    """Sentence-BLEU conventions for Self-BLEU.

    Uniform weights over 1..max_ngram, epsilon smoothing for zero
    precisions, brevity penalty against the closest-length reference.
    Hypotheses shorter than max_ngram use their own length as the top
    n-gram order. When a hypothesis has more than reference_cap potential
    references, a per-hypothesis seeded subset of them is used.
    """

    max_ngram: int = 4
    smoothing_epsilon: float = 1e-9
    reference_cap: int = 200
    reference_seed: int = 0

    def __post_init__(self):
        if self.max_ngram < 1:
            raise ConfigError("max_ngram must be >= 1")
        if self.reference_cap < 1:
            raise ConfigError("reference_cap must be >= 1")
        if self.smoothing_epsilon <= 0:
            raise ConfigError("smoothing_epsilon must be positive")


def _ngrams(tokens: TokenSeq, n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def distinct_n(samples: Sequence[TokenSeq], n: int) -> float:
    """Unique n-grams / total n-grams, pooled across samples.

    N-grams never span sample boundaries; samples shorter than n contribute
    nothing. Distinct-1 of a corpus equals the pooled TTR of its
    concatenation.
    """
    unique: set[tuple[str, ...]] = set()
    total = 0
    for sample in samples:
        grams = _ngrams(sample, n)
        total += len(grams)
        unique.update(grams)
    if total == 0:
        raise UndefinedMetricError(f"distinct_{n} is undefined: no sample has {n} tokens")
    return len(unique) / total


def self_bleu_per_sample(
    samples: Sequence[TokenSeq], cfg: BleuConfig = BleuConfig(), threads: int = 1
) -> list[float]:
    """Sentence-BLEU of each sample against the remaining samples.

    Reference sets larger than cfg.reference_cap are reduced with
    seeds.seeded_subset seeded by derive_seed(reference_seed, "bleu-ref", i),
    so each hypothesis gets a fixed reference draw regardless of execution
    order or thread count.
    """
    if len(samples) < 2:
        raise UndefinedMetricError("self_bleu requires at least 2 samples")
    counters = [_order_counters(s, cfg.max_ngram) for s in samples]
    lengths = [len(s) for s in samples]

    def score(i: int) -> float:
        return _bleu_against_rest(i, samples, counters, lengths, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(score, range(len(samples))))
    return [score(i) for i in range(len(samples))]


def self_bleu(samples: Sequence[TokenSeq], cfg: BleuConfig = BleuConfig(), threads: int = 1) -> float:
    """Dataset Self-BLEU: arithmetic mean of per-sample BLEU, in sample order."""
    scores = self_bleu_per_sample(samples, cfg, threads=threads)
    return sum(scores) / len(scores)


def _order_counters(tokens: TokenSeq, max_ngram: int) -> list[Counter]:
    """counters[n-1] maps each n-gram of the sample to its count."""
    return [Counter(_ngrams(tokens, n)) for n in range(1, max_ngram + 1)]


def _bleu_against_rest(
    i: int,
    samples: Sequence[TokenSeq],
    counters: list[list[Counter]],
    lengths: list[int],
    cfg: BleuConfig,
) -> float:
    hyp = samples[i]
    hyp_len = len(hyp)
    if hyp_len == 0:
        return 0.0
    others = [j for j in range(len(samples)) if j != i]
    if len(others) > cfg.reference_cap:
        seed = derive_seed(cfg.reference_seed, "bleu-ref", i)
        others = [others[k] for k in seeded_subset(len(others), cfg.reference_cap, seed)]

    top_order = min(cfg.max_ngram, hyp_len)
    weight = 1.0 / top_order
    log_sum = 0.0
    for n in range(1, top_order + 1):
        hyp_counts = counters[i][n - 1]
        denom = hyp_len - n + 1
        clipped = 0
        for gram, count in hyp_counts.items():
            max_ref = 0
            for j in others:
                c = counters[j][n - 1].get(gram, 0)
                if c > max_ref:
                    max_ref = c
            clipped += min(count, max_ref)
        precision = clipped / denom if clipped else cfg.smoothing_epsilon
        log_sum += weight * math.log(precision)
    geo_mean = math.exp(log_sum)

    ref_len = _closest_ref_length(hyp_len, [lengths[j] for j in others])
    if hyp_len > ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / hyp_len)
    return bp * geo_mean


def _closest_ref_length(hyp_len: int, ref_lengths: list[int]) -> int:
    """Closest reference length; ties go to the shorter reference."""
    best = ref_lengths[0]
    best_diff = abs(best - hyp_len)
    for r in ref_lengths[1:]:
        diff = abs(r - hyp_len)
        if diff < best_diff or (diff == best_diff and r < best):
            best, best_diff = r, diff
    return best
