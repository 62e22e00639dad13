"""Correlate PC coordinates with externally measured benchmark scores and
summarize subset performance deltas.

Score files are CSV with header ``dataset_id,benchmark,model,score`` plus
optional ``category``, ``pc``, and ``mode`` columns (the last two for subset
runs). Undefined correlations (n < 3, constant inputs) are omitted with a
warning, never zero-filled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import AnalysisError, UndefinedMetricError
from .pca import PcaModel

CATEGORIES = ("knowledge", "values", "norms")


@dataclass(frozen=True)
class ScoreRow:
    dataset_id: str
    benchmark: str
    model: str
    score: float
    category: str | None = None
    pc: int | None = None
    mode: str | None = None


@dataclass(frozen=True)
class CorrelationEntry:
    benchmark: str
    model: str
    pc: int
    r: float
    n: int


@dataclass(frozen=True)
class CorrelationTable:
    entries: tuple[CorrelationEntry, ...]
    warnings: tuple[str, ...]

    def heatmap(self, n_components: int) -> dict:
        """Rows = benchmark x model, columns = PC1..PCn; missing cells are None."""
        pairs = sorted({(e.benchmark, e.model) for e in self.entries})
        lookup = {(e.benchmark, e.model, e.pc): e.r for e in self.entries}
        return {
            "rows": [f"{b} | {m}" for b, m in pairs],
            "columns": [f"PC{i}" for i in range(1, n_components + 1)],
            "values": [
                [lookup.get((b, m, pc)) for pc in range(1, n_components + 1)]
                for b, m in pairs
            ],
        }


def pearson(x: list[float], y: list[float]) -> float:
    """Pearson correlation; undefined below n=3 or for constant inputs."""
    n = len(x)
    if n != len(y):
        raise ValueError("pearson inputs must have equal length")
    if n < 3:
        raise UndefinedMetricError(f"pearson needs n >= 3 (got {n})")
    mx = sum(x) / n
    my = sum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = sum(v * v for v in dx)
    syy = sum(v * v for v in dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedMetricError("pearson is undefined for constant input")
    return sum(a * b for a, b in zip(dx, dy)) / (math.sqrt(sxx) * math.sqrt(syy))


def load_scores_csv(path) -> list[ScoreRow]:
    path = Path(path)
    rows: list[ScoreRow] = []
    seen = set()
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"dataset_id", "benchmark", "model", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise AnalysisError(
                f"{path}: scores CSV must have columns {sorted(required)}"
            )
        for line_no, raw in enumerate(reader, start=2):
            try:
                score = float(raw["score"])
            except (TypeError, ValueError):
                raise AnalysisError(f"{path}:{line_no}: non-numeric score {raw['score']!r}")
            if not math.isfinite(score):
                raise AnalysisError(f"{path}:{line_no}: non-finite score")
            pc = int(raw["pc"]) if raw.get("pc") else None
            mode = raw.get("mode") or None
            row = ScoreRow(
                dataset_id=raw["dataset_id"],
                benchmark=raw["benchmark"],
                model=raw["model"],
                score=score,
                category=raw.get("category") or None,
                pc=pc,
                mode=mode,
            )
            key = (row.dataset_id, row.benchmark, row.model, row.pc, row.mode)
            if key in seen:
                raise AnalysisError(f"{path}:{line_no}: duplicate score row {key}")
            seen.add(key)
            rows.append(row)
    if not rows:
        raise AnalysisError(f"{path}: scores CSV contains no rows")
    return rows


def correlate(model: PcaModel, scores: list[ScoreRow]) -> CorrelationTable:
    """Pearson r for each (benchmark, model, pc) over the shared dataset ids."""
    score_ids = {row.dataset_id for row in scores}
    shared = sorted(score_ids & set(model.dataset_scores))
    if not shared:
        unmatched = sorted(score_ids)
        raise AnalysisError(
            "no dataset ids shared between the PCA model and the score table; "
            f"score table ids: {', '.join(unmatched[:10])}"
        )
    by_pair: dict[tuple[str, str], dict[str, float]] = {}
    for row in scores:
        by_pair.setdefault((row.benchmark, row.model), {})[row.dataset_id] = row.score

    entries: list[CorrelationEntry] = []
    notes: list[str] = []
    for benchmark, model_name in sorted(by_pair):
        per_dataset = by_pair[(benchmark, model_name)]
        ids = [d for d in shared if d in per_dataset]
        if len(ids) < 3:
            notes.append(
                f"{benchmark}/{model_name}: only {len(ids)} shared datasets; skipped"
            )
            continue
        y = [per_dataset[d] for d in ids]
        for pc in range(1, model.n_components + 1):
            x = [model.dataset_scores[d][pc - 1] for d in ids]
            try:
                r = pearson(x, y)
            except UndefinedMetricError as exc:
                notes.append(f"{benchmark}/{model_name}/PC{pc}: {exc}")
                continue
            entries.append(
                CorrelationEntry(benchmark=benchmark, model=model_name, pc=pc, r=r, n=len(ids))
            )
    return CorrelationTable(entries=tuple(entries), warnings=tuple(notes))


def write_correlations_csv(table: CorrelationTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["benchmark", "model", "pc", "r", "n"])
        for e in table.entries:
            writer.writerow([e.benchmark, e.model, e.pc, repr(e.r), e.n])


@dataclass(frozen=True)
class DeltaEntry:
    model: str
    pc: int
    mode: str
    mean_delta: float
    n_groups: int


def subset_delta(scores: list[ScoreRow]) -> tuple[tuple[DeltaEntry, ...], tuple[str, ...]]:
    """Mean (subset - random) score difference per (model, pc, mode).

    Groups are (dataset, benchmark, model, pc); a group without a random
    baseline is skipped with a warning. Means average over all groups, i.e.
    over base datasets and benchmarks together.
    """
    groups: dict[tuple[str, str, str, int], dict[str, float]] = {}
    for row in scores:
        if row.pc is None or row.mode is None:
            raise AnalysisError(
                "subset delta requires pc and mode columns on every score row"
            )
        key = (row.dataset_id, row.benchmark, row.model, row.pc)
        groups.setdefault(key, {})[row.mode] = row.score

    deltas: dict[tuple[str, int, str], list[float]] = {}
    notes: list[str] = []
    for key in sorted(groups):
        by_mode = groups[key]
        if "random" not in by_mode:
            notes.append(f"group {key}: no random baseline; skipped")
            continue
        baseline = by_mode["random"]
        for mode, score in sorted(by_mode.items()):
            if mode == "random":
                continue
            deltas.setdefault((key[2], key[3], mode), []).append(score - baseline)

    entries = tuple(
        DeltaEntry(
            model=model,
            pc=pc,
            mode=mode,
            mean_delta=sum(values) / len(values),
            n_groups=len(values),
        )
        for (model, pc, mode), values in sorted(deltas.items())
    )
    return entries, tuple(notes)


def write_deltas_csv(entries: tuple[DeltaEntry, ...], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "pc", "mode", "mean_delta", "n_groups"])
        for e in entries:
            writer.writerow([e.model, e.pc, e.mode, repr(e.mean_delta), e.n_groups])
