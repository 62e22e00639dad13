import json
import random

import pytest

from corposcope.corpus import DatasetHandle, Sample, tokenize


def make_handle(texts, lang="en", dataset_id="fixture", ids=None):
    samples = []
    for i, text in enumerate(texts):
        sample_id = ids[i] if ids else str(i + 1)
        raw = json.dumps({"text": text}, ensure_ascii=False)
        samples.append(Sample(id=sample_id, text=text, tokens=tokenize(text, lang), raw=raw))
    return DatasetHandle(
        dataset_id=dataset_id,
        language=lang,
        source_path="<memory>",
        text_spec="text",
        samples=tuple(samples),
    )


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


def synthetic_texts(n, seed, vocab_size=60, min_len=6, max_len=20, prefix="w"):
    """Deterministic corpus with sample-to-sample richness variation."""
    rng = random.Random(seed)
    texts = []
    for i in range(n):
        width = max(2, 1 + (i * vocab_size) // max(1, n))  # richness grows with index
        length = rng.randint(min_len, max_len)
        texts.append(" ".join(f"{prefix}{rng.randint(0, width)}" for _ in range(length)))
    return texts


@pytest.fixture
def small_handle():
    return make_handle(synthetic_texts(30, seed=7), dataset_id="small")
