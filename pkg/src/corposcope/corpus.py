"""Dataset ingestion, tokenization, and reproducible sampling.

Datasets are JSONL (one object per line), CSV (header row), or TXT (one
sample per line). Text is pulled from a single field or assembled from a
join template like ``"{instruction}\\n{output}"``. Records whose text is
empty after trimming are dropped and counted, not errored.
"""

from __future__ import annotations

import csv
import json
import string
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .errors import DataFormatError
from .seeds import seeded_subset

FORMATS = ("jsonl", "csv", "txt")

# Languages segmented per character (Han/Kana/Hangul); everything else splits
# on whitespace. Dictionary-free by design: reproducibility over fidelity.
CJK_LANGUAGES = ("zh", "ja")

_CJK_RANGES = (
    (0x3400, 0x4DBF),   # CJK extension A
    (0x4E00, 0x9FFF),   # CJK unified
    (0xF900, 0xFAFF),   # CJK compatibility
    (0x3040, 0x309F),   # hiragana
    (0x30A0, 0x30FF),   # katakana
    (0x31F0, 0x31FF),   # katakana extensions
    (0x1100, 0x11FF),   # hangul jamo
    (0xAC00, 0xD7AF),   # hangul syllables
)


def _is_cjk_char(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str, language: str) -> tuple[str, ...]:
    """Tokenize text for the given language code.

    Space-delimited scripts: NFKC-normalize, lowercase, split on whitespace,
    strip punctuation from token edges, drop tokens that were pure
    punctuation. Han/Kana scripts (zh, ja): after NFKC and lowercasing, each
    Han/Kana/Hangul character is its own token, embedded Latin/digit runs
    stay single tokens, punctuation is dropped.

    Pure function: no state, no randomness.
    """
    if not text:
        return ()
    normalized = unicodedata.normalize("NFKC", text).lower()
    if language.split("-")[0] in CJK_LANGUAGES:
        return _tokenize_cjk(normalized)
    tokens = []
    for raw in normalized.split():
        token = _strip_edge_punct(raw)
        if token:
            tokens.append(token)
    return tuple(tokens)


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def _tokenize_cjk(normalized: str) -> tuple[str, ...]:
    tokens: list[str] = []
    run: list[str] = []

    def flush() -> None:
        if run:
            tokens.append("".join(run))
            run.clear()

    for ch in normalized:
        if _is_cjk_char(ch):
            flush()
            tokens.append(ch)
        elif unicodedata.category(ch)[0] in ("L", "N"):
            run.append(ch)
        else:
            # whitespace, punctuation, symbols: break the run, keep nothing
            flush()
    flush()
    return tuple(tokens)


@dataclass(frozen=True, slots=True)
class Sample:
    """One text example. ``tokens`` is always tokenize(text, language)."""

    id: str
    text: str
    tokens: tuple[str, ...]
    raw: str | None = None  # original record line, preserved for subset export


@dataclass(frozen=True)
class DatasetHandle:
    dataset_id: str
    language: str
    source_path: str
    text_spec: str
    samples: tuple[Sample, ...]
    skip_count: int = 0
    sample_seed: int | None = None

    def __len__(self) -> int:
        return len(self.samples)

    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.samples)


def _template_fields(text_spec: str) -> list[str]:
    fields = [f for _, f, _, _ in string.Formatter().parse(text_spec) if f]
    return fields


def _render_text(record: dict, text_spec: str) -> tuple[str, int]:
    """Returns (text, n_fields_matched) for one record."""
    if "{" in text_spec:
        fields = _template_fields(text_spec)
        values = {f: record.get(f, "") for f in fields}
        matched = sum(1 for f in fields if f in record and record[f] not in (None, ""))
        text = text_spec.format(**{f: "" if v is None else str(v) for f, v in values.items()})
        return text, matched
    value = record.get(text_spec)
    if value in (None, ""):
        return "", 1 if text_spec in record else 0
    return str(value), 1


def _iter_records(path: Path, fmt: str) -> Iterable[tuple[int, dict, str]]:
    """Yields (line_number, record, raw_line) in file order."""
    if fmt == "jsonl":
        with path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                stripped = line.rstrip("\n")
                if not stripped.strip():
                    yield line_no, {}, stripped
                    continue
                try:
                    record = json.loads(stripped)
                except json.JSONDecodeError as exc:
                    raise DataFormatError(f"{path}:{line_no}: malformed JSON record: {exc}") from exc
                if not isinstance(record, dict):
                    raise DataFormatError(f"{path}:{line_no}: expected a JSON object per line")
                yield line_no, record, stripped
    elif fmt == "csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DataFormatError(f"{path}: empty CSV (no header row)")
            for line_no, row in enumerate(reader, start=2):  # header is line 1
                record = {k: v for k, v in row.items() if k is not None}
                yield line_no, record, json.dumps(record, ensure_ascii=False, sort_keys=True)
    elif fmt == "txt":
        with path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                text = line.rstrip("\n")
                record = {"text": text}
                yield line_no, record, json.dumps(record, ensure_ascii=False, sort_keys=True)
    else:
        raise DataFormatError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def load_dataset(
    path: str | Path,
    format: str,
    text_spec: str = "text",
    language: str = "other",
    dataset_id: str | None = None,
    id_field: str | None = None,
) -> DatasetHandle:
    """Load all non-empty records of a dataset file, in file order.

    Sample ids default to the file line number (as a string); records whose
    rendered text is empty after trimming are skipped and tallied in
    ``skip_count``. A text_spec that matches zero fields in every record is
    an error.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"cannot read input file: {path}")
    if format not in FORMATS:
        raise DataFormatError(f"unknown format {format!r}; expected one of {FORMATS}")

    if format == "txt":
        text_spec = "text"

    samples: list[Sample] = []
    skip_count = 0
    any_field_matched = False
    saw_record = False
    for line_no, record, raw_line in _iter_records(path, format):
        saw_record = True
        if not record:
            skip_count += 1
            continue
        text, matched = _render_text(record, text_spec)
        if matched:
            any_field_matched = True
        if not text.strip():
            skip_count += 1
            continue
        if id_field is not None:
            if id_field not in record:
                raise DataFormatError(f"{path}:{line_no}: id field {id_field!r} missing")
            sample_id = str(record[id_field])
        else:
            sample_id = str(line_no)
        samples.append(
            Sample(id=sample_id, text=text, tokens=tokenize(text, language), raw=raw_line)
        )

    if saw_record and not any_field_matched:
        raise DataFormatError(f"{path}: text spec {text_spec!r} matches no field in any record")
    ids = [s.id for s in samples]
    if len(set(ids)) != len(ids):
        raise DataFormatError(f"{path}: duplicate sample ids under id field {id_field!r}")

    return DatasetHandle(
        dataset_id=dataset_id or path.stem,
        language=language,
        source_path=str(path),
        text_spec=text_spec,
        samples=tuple(samples),
        skip_count=skip_count,
    )


def sample_n(handle: DatasetHandle, n: int, seed: int) -> DatasetHandle:
    """Draw n samples without replacement, deterministically.

    Selection uses the partial Fisher-Yates routine in ``seeds.seeded_subset``
    (PRNG: ``random.Random(seed)``, i.e. Mersenne Twister); selected indices
    are re-sorted into original file order so downstream floating-point
    reductions see a stable order. Datasets at or under size n pass through
    unchanged apart from recording the seed.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if len(handle.samples) <= n:
        return replace(handle, sample_seed=seed)
    chosen = seeded_subset(len(handle.samples), n, seed)
    picked = tuple(handle.samples[i] for i in chosen)
    return replace(handle, samples=picked, sample_seed=seed)
