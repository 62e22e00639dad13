"""Lexical richness metrics: TTR, MATTR, HD-D, MTLD.

All four are pure and deterministic and invariant under relabeling of token
strings. Inputs that make a metric undefined (empty sequence, draw larger
than the text) raise UndefinedMetricError rather than returning a value.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, UndefinedMetricError


@dataclass(frozen=True)
class LexicalConfig:
    mattr_window: int = 100
    hdd_draw: int = 42
    mtld_threshold: float = 0.72

    def __post_init__(self):
        if self.mattr_window < 2:
            raise ConfigError("mattr_window must be >= 2")
        if self.hdd_draw < 1:
            raise ConfigError("hdd_draw must be >= 1")
        if not 0.0 < self.mtld_threshold < 1.0:
            raise ConfigError("mtld_threshold must lie strictly between 0 and 1")


def ttr(tokens: Sequence[str]) -> float:
    """Type-token ratio: distinct types / total tokens."""
    if not tokens:
        raise UndefinedMetricError("ttr is undefined for an empty token sequence")
    return len(set(tokens)) / len(tokens)


def mattr(tokens: Sequence[str], window: int = 100) -> float:
    """Moving-average TTR over all contiguous windows of the given size.

    Sequences no longer than the window fall back to plain TTR.
    """
    if not tokens:
        raise UndefinedMetricError("mattr is undefined for an empty token sequence")
    n = len(tokens)
    if n <= window:
        return ttr(tokens)
    counts: Counter[str] = Counter(tokens[:window])
    total = len(counts) / window
    for i in range(1, n - window + 1):
        out_tok = tokens[i - 1]
        counts[out_tok] -= 1
        if counts[out_tok] == 0:
            del counts[out_tok]
        counts[tokens[i + window - 1]] += 1
        total += len(counts) / window
    return total / (n - window + 1)


def hdd(tokens: Sequence[str], draw: int = 42) -> float:
    """HD-D: expected TTR of a uniform without-replacement draw of `draw` tokens.

    Per type t with frequency f in a text of N tokens, the chance the draw
    contains t is 1 - C(N-f, draw)/C(N, draw); summing those and dividing by
    the draw size gives the expectation. The binomial ratio is evaluated in
    log space (lgamma) so large N never overflows.
    """
    if len(tokens) < draw:
        raise UndefinedMetricError(
            f"hdd is undefined: draw size {draw} exceeds text length {len(tokens)}"
        )
    n = len(tokens)
    log_cn = _log_comb(n, draw)
    total = 0.0
    for freq in Counter(tokens).values():
        if n - freq < draw:
            p_in = 1.0
        else:
            p_in = 1.0 - math.exp(_log_comb(n - freq, draw) - log_cn)
        total += p_in
    return total / draw


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def mtld(tokens: Sequence[str], threshold: float = 0.72) -> float:
    """MTLD: mean length of token factors keeping running TTR above a threshold.

    Forward pass: scan tokens, tracking the running TTR of the current
    factor; when it drops strictly below the threshold the factor completes
    and counting restarts. The trailing partial factor contributes
    (1 - final TTR) / (1 - threshold). The pass score is N / factor count,
    or N when the factor count is zero (TTR never fell below the threshold
    and the remainder was fully distinct). The result averages the forward
    pass and the same pass over the reversed sequence.
    """
    if not tokens:
        raise UndefinedMetricError("mtld is undefined for an empty token sequence")
    forward = _mtld_pass(tokens, threshold)
    backward = _mtld_pass(list(reversed(tokens)), threshold)
    return (forward + backward) / 2.0


def _mtld_pass(tokens: Sequence[str], threshold: float) -> float:
    factors = 0.0
    types: set[str] = set()
    count = 0
    for token in tokens:
        count += 1
        types.add(token)
        if len(types) / count < threshold:
            factors += 1.0
            types.clear()
            count = 0
    if count > 0:
        final_ttr = len(types) / count
        factors += (1.0 - final_ttr) / (1.0 - threshold)
    n = len(tokens)
    if factors == 0.0:
        return float(n)
    return n / factors
